"""Stage-matrix spectral analysis.

The linearization of the infected-stage dynamics at susceptible level a is

    B(a) = T + F(a)

where T is the lower-bidiagonal transition matrix (diagonal 1 - g_j,
subdiagonal g_j) and F(a) puts a * r in the first row (new infections,
r = grad phi(0)).  For a > 0 and r_n > 0, B(a) is irreducible and
primitive, and its relation to 1 encodes the epidemic threshold:

    sign(rho(B(a)) - 1) = sign(a - 1/delta),   delta = sum_j r_j / g_j.

The net reproductive value of the transition/infection split is
rho(F (Id - T)^{-1}) = a * delta; at a = N this is the basic reproduction
number R0 = N * delta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .incidence import IncidenceModel
from .model import StageParams

__all__ = [
    "StageMatrixDecomposition",
    "PerronData",
    "ConvergenceError",
    "SignIdentityReport",
    "transition_matrix",
    "infection_matrix",
    "build_B",
    "nrv",
    "delta",
    "r0",
    "perron",
    "sign_identities_check",
]

POWER_ITERATION_CAP = 10**5
SIGN_ZERO_TOL = 1e-9  # |x| below this counts as zero in threshold sign tests


class ConvergenceError(RuntimeError):
    """Power iteration failed to converge within the iteration cap."""


@dataclass(frozen=True)
class StageMatrixDecomposition:
    """B(a) = T + F(a) with its ingredients.

    T holds stage transitions (lower bidiagonal, spectral radius
    max_j(1 - g_j) < 1); F(a) holds new infections (a * r in row one).
    """

    a: float
    T: np.ndarray
    F: np.ndarray
    B: np.ndarray
    gamma: np.ndarray
    r: np.ndarray


@dataclass(frozen=True)
class PerronData:
    """Spectral radius and the probability-normalized Perron vector."""

    rho: float
    v: np.ndarray
    iterations: int


def transition_matrix(params: StageParams) -> np.ndarray:
    """Lower-bidiagonal stage-transition matrix T."""
    n = params.n
    T = np.zeros((n, n))
    for j in range(n):
        T[j, j] = 1.0 - params.gamma[j]
        if j + 1 < n:
            T[j + 1, j] = params.gamma[j]
    return T


def infection_matrix(a: float, r) -> np.ndarray:
    """Rank-one new-infection matrix F(a): a * r in the first row."""
    r = np.asarray(r, dtype=float)
    F = np.zeros((r.size, r.size))
    F[0, :] = a * r
    return F


def build_B(a: float, params: StageParams, r) -> StageMatrixDecomposition:
    """Assemble the decomposition B(a) = T + F(a).

    Args:
        a: susceptible level, must be positive.
        params: stage structure supplying the progression probabilities.
        r: first-order infectivities (gradient of phi at zero); must be
            componentwise nonnegative with r_n > 0.
    """
    a = float(a)
    if not a > 0.0:
        raise ValueError("susceptible level a must be positive")
    r = np.asarray(r, dtype=float)
    if r.shape != (params.n,):
        raise ValueError(f"r must have length {params.n}")
    if np.any(r < 0.0) or not r[-1] > 0.0:
        raise ValueError("r must be nonnegative with r_n > 0")
    T = transition_matrix(params)
    F = infection_matrix(a, r)
    return StageMatrixDecomposition(a=a, T=T, F=F, B=T + F, gamma=params.gamma, r=r)


def nrv(decomp: StageMatrixDecomposition) -> float:
    """Net reproductive value: spectral radius of F (Id - T)^{-1}.

    (Id - T)^{-1} is computed by forward substitution on the bidiagonal
    structure (row j: g_j x_j - g_{j-1} x_{j-1} = b_j), then the spectral
    radius of the resulting rank-one product is read off numerically.
    Equals a * delta in exact arithmetic.
    """
    gamma = decomp.gamma
    n = gamma.size
    M = np.empty((n, n))
    for col in range(n):
        for row in range(n):
            if row < col:
                M[row, col] = 0.0
            elif row == col:
                M[row, col] = 1.0 / gamma[row]
            else:
                M[row, col] = gamma[row - 1] * M[row - 1, col] / gamma[row]
    Q = decomp.F @ M
    eigs = np.linalg.eigvals(Q)
    return float(np.max(np.abs(eigs)))


def delta(params: StageParams, incidence: IncidenceModel) -> float:
    """delta = sum_j r_j / gamma_j, the per-capita threshold quantity."""
    if incidence.n != params.n:
        raise ValueError("incidence and params disagree on the stage count")
    return float((incidence.r / params.gamma).sum())


def r0(params: StageParams, incidence: IncidenceModel) -> float:
    """Basic reproduction number R0 = N * delta.

    This is the next-generation value of the linearization at the
    disease-free state (equivalently ``nrv(build_B(N, ...))``).  It covers
    contact-composed incidences automatically because their gradient at
    zero already carries the mean contact count.
    """
    return params.N * delta(params, incidence)


def perron(decomp: StageMatrixDecomposition, tol: float = 1e-13) -> PerronData:
    """Spectral radius and Perron vector of B(a) by power iteration.

    Iterates x -> B x with 1-norm normalization from the uniform start
    vector until successive iterates differ by less than ``tol`` in the
    max norm.  B(a) is primitive, so convergence is guaranteed; the cap
    of 1e5 iterations raises :class:`ConvergenceError` as a safeguard.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    B = decomp.B
    n = B.shape[0]
    v = np.full(n, 1.0 / n)
    rho = 1.0
    for k in range(1, POWER_ITERATION_CAP + 1):
        w = B @ v
        rho = float(w.sum())  # v >= 0 and ||v||_1 = 1, so this is ||Bv||_1
        w /= rho
        if float(np.max(np.abs(w - v))) < tol:
            return PerronData(rho=rho, v=w, iterations=k)
        v = w
    raise ConvergenceError(
        f"power iteration did not reach tol={tol:g} in {POWER_ITERATION_CAP} iterations"
    )


def _sign(x: float, zero_tol: float = SIGN_ZERO_TOL) -> int:
    if abs(x) < zero_tol:
        return 0
    return 1 if x > 0.0 else -1


@dataclass(frozen=True)
class SignIdentityReport:
    """Threshold sign relations of the Perron data of B(a).

    All listed signs must coincide (values in {-1, 0, +1}); ``consistent``
    summarizes the comparison with |x| < 1e-9 treated as zero.
    """

    rho_minus_one: int
    a_minus_threshold: int
    gamma_v_pairs: tuple
    infection_balance: int
    consistent: bool
    mismatches: tuple


def sign_identities_check(
    decomp: StageMatrixDecomposition, perron_data: PerronData
) -> SignIdentityReport:
    """Verify the sign identities tying rho(B(a)) - 1 to the Perron vector.

    Checks sign(rho - 1) against sign(a - 1/delta), against
    sign(g_i v_i - g_j v_j) for every i < j, and against
    sign(a r.v - g_1 v_1).
    """
    gamma, r, a = decomp.gamma, decomp.r, decomp.a
    v = perron_data.v
    n = gamma.size
    s_rho = _sign(perron_data.rho - 1.0)
    dlt = float((r / gamma).sum())
    s_thr = _sign(a - 1.0 / dlt)
    pair_signs = tuple(
        _sign(gamma[i] * v[i] - gamma[j] * v[j])
        for i in range(n) for j in range(i + 1, n)
    )
    s_bal = _sign(a * float(r @ v) - gamma[0] * v[0])
    mismatches = []
    if s_thr != s_rho:
        mismatches.append(f"sign(a - 1/delta) = {s_thr} != sign(rho - 1) = {s_rho}")
    for idx, s in enumerate(pair_signs):
        if s != s_rho:
            mismatches.append(f"gamma_i v_i - gamma_j v_j pair {idx}: sign {s} != {s_rho}")
    if s_bal != s_rho:
        mismatches.append(f"sign(a r.v - gamma_1 v_1) = {s_bal} != {s_rho}")
    return SignIdentityReport(
        rho_minus_one=s_rho,
        a_minus_threshold=s_thr,
        gamma_v_pairs=pair_signs,
        infection_balance=s_bal,
        consistent=not mismatches,
        mismatches=tuple(mismatches),
    )

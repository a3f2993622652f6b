"""Core staged-progression dynamics.

State moves through n infected stages before removal:

    S(t+1)   = S(t) - phi(I(t)) S(t)
    I1(t+1)  = (1 - g1) I1(t) + phi(I(t)) S(t)
    Ij(t+1)  = (1 - gj) Ij(t) + g_{j-1} I_{j-1}(t),   j = 2..n
    R(t+1)   = R(t) + gn In(t)

with stage-progression probabilities gj in (0, 1) and an incidence
function phi from :mod:`spepi.incidence`.  The total population
S + I1 + ... + In + R is conserved.

``step`` advances one state exactly; ``simulate`` iterates to a stopping
rule, recording the full trajectory.  Both use the same floating-point
operation order as the compiled kernel, so ``simulate`` is bit-for-bit
an iteration of ``step``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from . import _kernels
from .incidence import IncidenceModel

__all__ = [
    "StageParams",
    "EpidemicState",
    "StoppingRule",
    "Trajectory",
    "step",
    "simulate",
]

# defaults chosen for geometric tail decay: the infected classes shrink by a
# factor rho(B(S_inf)) < 1 per step once the epidemic has burnt out
DEFAULT_MAX_STEPS = 10**6
DEFAULT_EPS_Z_REL = 1e-12
DEFAULT_EPS_S_REL = 1e-14

CONSERVATION_TOL_REL = 1e-9


@dataclass(frozen=True)
class StageParams:
    """Stage structure: progression probabilities and total population.

    Args:
        gamma: per-stage progression probabilities, each strictly inside
            (0, 1); the length determines the number of stages n.
        N: total (constant) population, > 0.
    """

    gamma: np.ndarray
    N: float

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim == 0:
            g = g.reshape(1)
        if g.ndim != 1 or g.size < 1:
            raise ValueError("gamma must be a nonempty 1-d vector")
        if np.any(g <= 0.0) or np.any(g >= 1.0):
            raise ValueError("every progression probability must lie in (0, 1)")
        g = g.copy()
        g.flags.writeable = False
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "N", float(self.N))
        if not self.N > 0.0:
            raise ValueError("total population N must be positive")

    @property
    def n(self) -> int:
        return self.gamma.size


@dataclass(frozen=True)
class EpidemicState:
    """One (S, I, R) configuration; components are nonnegative."""

    S: float
    I: np.ndarray
    R: float

    def __post_init__(self):
        I = np.asarray(self.I, dtype=float)
        if I.ndim == 0:
            I = I.reshape(1)
        if I.ndim != 1 or I.size < 1:
            raise ValueError("I must be a nonempty 1-d vector")
        I = I.copy()
        I.flags.writeable = False
        object.__setattr__(self, "I", I)
        object.__setattr__(self, "S", float(self.S))
        object.__setattr__(self, "R", float(self.R))
        if self.S < 0.0 or self.R < 0.0 or np.any(I < 0.0):
            raise ValueError("state components must be nonnegative")

    @property
    def Z(self) -> float:
        """Prevalence: total infected population ||I||_1."""
        return float(self.I.sum())

    @property
    def total(self) -> float:
        return self.S + self.Z + self.R

    def validate_against(self, params: StageParams) -> None:
        if self.I.size != params.n:
            raise ValueError(
                f"state has {self.I.size} infected stages, params expect {params.n}"
            )
        if abs(self.total - params.N) > CONSERVATION_TOL_REL * params.N:
            raise ValueError(
                f"state total {self.total:.17g} is not the population N = {params.N:.17g}"
            )

    def satisfies_initial_condition(self) -> bool:
        """Admissible epidemic start: S > 0 and at least one infected."""
        return self.S > 0.0 and bool(self.I.any())


@dataclass(frozen=True)
class StoppingRule:
    """Stopping specification for ``simulate``.

    ``eps_z``/``eps_s`` default to 1e-12 * N and 1e-14 * N when left None.
    A run stops "converged" at the first step t >= 1 with
    ||I(t)||_1 < eps_z and S(t-1) - S(t) < eps_s, else at max_steps.
    """

    max_steps: int = DEFAULT_MAX_STEPS
    eps_z: Optional[float] = None
    eps_s: Optional[float] = None

    def resolve(self, N: float) -> tuple[int, float, float]:
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        eps_z = DEFAULT_EPS_Z_REL * N if self.eps_z is None else float(self.eps_z)
        eps_s = DEFAULT_EPS_S_REL * N if self.eps_s is None else float(self.eps_s)
        if eps_z < 0.0 or eps_s < 0.0:
            raise ValueError("tolerances must be nonnegative")
        return int(self.max_steps), eps_z, eps_s


@dataclass
class Trajectory:
    """A recorded run: one row per time step t = 0, 1, ..., T.

    ``phi[t]`` is the incidence applied over (t, t+1]; it is also recorded
    for the final state.  ``stop_reason`` is "converged" or "max-steps".
    """

    params: StageParams
    incidence: IncidenceModel
    S: np.ndarray
    I: np.ndarray
    R: np.ndarray
    phi: np.ndarray
    stop_reason: str
    eps_z: float
    eps_s: float
    max_steps: int

    @property
    def n_steps(self) -> int:
        return len(self.S) - 1

    @property
    def Z(self) -> np.ndarray:
        return self.I.sum(axis=1)

    @property
    def S_inf(self) -> float:
        """Final susceptible level; the limit estimate when converged."""
        return float(self.S[-1])

    def state(self, t: int) -> EpidemicState:
        return EpidemicState(S=self.S[t], I=self.I[t], R=self.R[t])

    def states(self) -> Iterator[EpidemicState]:
        for t in range(len(self.S)):
            yield self.state(t)


def _check_compatible(params: StageParams, incidence: IncidenceModel) -> None:
    if incidence.n != params.n:
        raise ValueError(
            f"incidence is built for {incidence.n} stages, params have {params.n}"
        )
    if not math.isclose(incidence.N, params.N, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(
            f"incidence population N = {incidence.N!r} differs from params N = {params.N!r}"
        )


def step(state: EpidemicState, params: StageParams, incidence: IncidenceModel) -> EpidemicState:
    """Advance the model by one time step.

    The update order matches the simulation kernel exactly, so repeated
    ``step`` calls reproduce ``simulate`` bit for bit.

    Returns:
        The successor state; conservation of S + ||I||_1 + R holds up to
        floating-point rounding.
    """
    _check_compatible(params, incidence)
    state.validate_against(params)
    gamma = params.gamma
    n = params.n
    phi = incidence.phi(state.I)
    inc = phi * state.S
    S_new = state.S - inc
    R_new = state.R + gamma[n - 1] * state.I[n - 1]
    I_new = state.I.copy()
    for j in range(n - 1, 0, -1):
        I_new[j] = (1.0 - gamma[j]) * I_new[j] + gamma[j - 1] * I_new[j - 1]
    I_new[0] = (1.0 - gamma[0]) * I_new[0] + inc
    return EpidemicState(S=S_new, I=I_new, R=R_new)


_FIRST_CHUNK_ROWS = 4096


def _simulate_kernel(initial, gamma, spec, max_steps, eps_z, eps_s):
    ik, v1, v2, ok, op = spec
    max_rows = max_steps + 1
    S_cur = initial.S
    I_cur = initial.I.copy()
    R_cur = initial.R
    phi_entry = -1.0  # entry state not yet recorded
    chunks = []
    rows_total = 0
    cap = min(_FIRST_CHUNK_ROWS, max_rows)
    status = _kernels.FULL
    while True:
        n = I_cur.shape[0]
        S_buf = np.empty(cap)
        I_buf = np.empty((cap, n))
        R_buf = np.empty(cap)
        phi_buf = np.empty(cap)
        rows, status, S_cur, R_cur, phi_entry = _kernels.run_chunk(
            S_cur, I_cur, R_cur, phi_entry, gamma,
            ik, v1, v2, ok, op, eps_z, eps_s,
            S_buf, I_buf, R_buf, phi_buf,
        )
        chunks.append((S_buf[:rows], I_buf[:rows], R_buf[:rows], phi_buf[:rows]))
        rows_total += rows
        if status == _kernels.CONVERGED or rows_total >= max_rows:
            break
        cap = min(2 * cap, max_rows - rows_total)
    concat = [np.concatenate([c[k] for c in chunks]) for k in range(4)]
    reason = "converged" if status == _kernels.CONVERGED else "max-steps"
    return concat[0], concat[1], concat[2], concat[3], reason


def _simulate_generic(initial, params, incidence, max_steps, eps_z, eps_s):
    # python loop for incidence models the kernel cannot encode; identical
    # update order
    gamma = params.gamma
    n = params.n
    S, I, R = initial.S, initial.I.copy(), initial.R
    Ss, Is, Rs, phis = [], [], [], []
    conv = False
    reason = "max-steps"
    for t in range(max_steps + 1):
        phi = incidence.phi(I)
        Ss.append(S)
        Is.append(I.copy())
        Rs.append(R)
        phis.append(phi)
        if conv:
            reason = "converged"
            break
        if t == max_steps:
            break
        inc = phi * S
        S_new = S - inc
        R = R + gamma[n - 1] * I[n - 1]
        for j in range(n - 1, 0, -1):
            I[j] = (1.0 - gamma[j]) * I[j] + gamma[j - 1] * I[j - 1]
        I[0] = (1.0 - gamma[0]) * I[0] + inc
        z = float(I.sum())
        conv = (z < eps_z) and ((S - S_new) < eps_s)
        S = S_new
    return (np.array(Ss), np.array(Is), np.array(Rs), np.array(phis), reason)


def simulate(
    initial: EpidemicState,
    params: StageParams,
    incidence: IncidenceModel,
    stopping: Optional[StoppingRule] = None,
) -> Trajectory:
    """Run the model until the infected classes have burnt out.

    Args:
        initial: starting state; its total must equal params.N.
        params: stage structure.
        incidence: force-of-infection model (same n and N).
        stopping: stopping rule; defaults to
            ``StoppingRule(max_steps=1e6, eps_z=1e-12*N, eps_s=1e-14*N)``.

    Returns:
        The recorded :class:`Trajectory`.  An all-zero initial infected
        vector short-circuits to a single-row trajectory (the dynamics are
        the identity there).
    """
    _check_compatible(params, incidence)
    initial.validate_against(params)
    stopping = stopping or StoppingRule()
    max_steps, eps_z, eps_s = stopping.resolve(params.N)

    if initial.Z == 0.0:
        return Trajectory(
            params=params, incidence=incidence,
            S=np.array([initial.S]), I=initial.I.reshape(1, -1).copy(),
            R=np.array([initial.R]), phi=np.array([0.0]),
            stop_reason="converged", eps_z=eps_z, eps_s=eps_s, max_steps=max_steps,
        )

    spec = incidence.kernel_spec()
    if spec is not None:
        S, I, R, phi, reason = _simulate_kernel(
            initial, params.gamma, spec, max_steps, eps_z, eps_s
        )
    else:
        S, I, R, phi, reason = _simulate_generic(
            initial, params, incidence, max_steps, eps_z, eps_s
        )
    return Trajectory(
        params=params, incidence=incidence,
        S=S, I=I, R=R, phi=phi,
        stop_reason=reason, eps_z=eps_z, eps_s=eps_s, max_steps=max_steps,
    )

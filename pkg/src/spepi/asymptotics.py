"""Long-run behaviour: final size, bounds, decay structure.

For any admissible start (S(0) > 0, some infected), the susceptible
series decreases to a positive limit S_inf and the infected classes decay
to zero along the Perron direction of B(S_inf).  This module computes:

  * the final-size equation root (exponential incidence only):
        log(S(0)/x) = sum_j (b_j/g_j)(S(0) + I_1(0)+...+I_j(0)) - R0 x / N
  * the simulated final size (any admissible incidence);
  * threshold bounds:  S_inf <= N/R0 when R0 > 1, and
        S_inf >= S(0) (1 - delta (S(0)+I0)) / (1 - delta S(0))
    when R0 < 1 and all initial infected sit in the first stage;
  * the tail-sum identity
        sum_{t>=t0} I_j(t) = (S(t0) - S_inf + I_1(t0)+...+I_j(t0)) / g_j;
  * the limiting stage distribution I(t)/||I(t)|| -> v (Perron vector);
  * the onset of eventual componentwise-strict decay of I(t), which,
    once observed, persists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .incidence import ExponentialIncidence, IncidenceModel
from .model import EpidemicState, StageParams, StoppingRule, Trajectory, simulate
from .spectral import build_B, delta, perron, r0

__all__ = [
    "FinalSizeResult",
    "FinalSizeBounds",
    "TailSumReport",
    "LimitDirectionResult",
    "MonotonicityReport",
    "final_size_equation_solve",
    "final_size_simulate",
    "final_size_bounds",
    "tail_sum_check",
    "limit_direction",
    "monotonicity_onset",
]

BISECTION_MAX_ITER = 200
BISECTION_LOW_GUARD = 1e-300
# cross-check runs use a tighter prevalence cutoff than the simulate default
CROSSCHECK_EPS_Z_REL = 1e-13
# stage vectors below this are fp noise; the limit direction is read just above
DIRECTION_FLOOR = 1e-250


@dataclass(frozen=True)
class FinalSizeResult:
    s_inf: float
    method: str  # "equation-root" | "simulated"
    iterations: int
    bounds: "FinalSizeBounds"


@dataclass(frozen=True)
class FinalSizeBounds:
    """Threshold bracket for S_inf; absent sides carry their reason."""

    lower: Optional[float]
    upper: Optional[float]
    lower_reason: str
    upper_reason: str


def final_size_bounds(
    initial: EpidemicState, params: StageParams, incidence: IncidenceModel
) -> FinalSizeBounds:
    """Applicable threshold bounds for the final susceptible level.

    The upper bound N/R0 needs R0 > 1.  The lower bound additionally
    needs R0 < 1 and every initial infected in the first stage.
    """
    R0 = r0(params, incidence)
    N = params.N
    dlt = delta(params, incidence)
    upper = None
    upper_reason = "requires R0 > 1"
    if R0 > 1.0:
        upper = N / R0
        upper_reason = "ok"
    lower = None
    if R0 >= 1.0:
        lower_reason = "requires R0 < 1"
    elif params.n > 1 and initial.I[1:].any():
        lower_reason = "requires all initial infected in the first stage"
    else:
        I0 = float(initial.I[0])
        lower = initial.S * (1.0 - dlt * (initial.S + I0)) / (1.0 - dlt * initial.S)
        lower_reason = "ok"
    return FinalSizeBounds(
        lower=lower, upper=upper, lower_reason=lower_reason, upper_reason=upper_reason
    )


def final_size_equation_solve(
    initial: EpidemicState, params: StageParams, incidence: IncidenceModel
) -> FinalSizeResult:
    """Root of the exponential-incidence final-size equation.

    g(x) = log(S(0)/x) - sum_j (b_j/g_j)(S(0) + cumsum(I(0))_j) + R0 x / N
    is decreasing on (0, 1/delta) and increasing beyond, with its unique
    root in (0, min(S(0), 1/delta)); bisection on that bracket.

    Raises:
        TypeError: for non-exponential incidence (the equation is specific
            to that family).
        ValueError: if the bracket carries no sign change, which signals a
            violated initial condition (S(0) > 0, I(0) != 0).
    """
    if not isinstance(incidence, ExponentialIncidence):
        raise TypeError(
            "the final-size equation holds for the exponential incidence family only"
        )
    initial.validate_against(params)
    if not initial.satisfies_initial_condition():
        raise ValueError("initial state must have S(0) > 0 and I(0) != 0")
    S0 = initial.S
    N = params.N
    beta, gamma = incidence.beta, params.gamma
    R0 = r0(params, incidence)
    dlt = R0 / N
    C = float(((beta / gamma) * (S0 + np.cumsum(initial.I))).sum())

    def g(x: float) -> float:
        return math.log(S0 / x) - C + R0 * x / N

    lo = BISECTION_LOW_GUARD
    hi = min(S0, 1.0 / dlt)
    if not g(hi) < 0.0:
        raise ValueError(
            "no sign change on the final-size bracket; initial condition violated"
        )
    tol = 1e-14 * N
    iterations = 0
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        iterations += 1
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    root = 0.5 * (lo + hi)
    return FinalSizeResult(
        s_inf=root, method="equation-root", iterations=iterations,
        bounds=final_size_bounds(initial, params, incidence),
    )


def final_size_simulate(
    initial: EpidemicState,
    params: StageParams,
    incidence: IncidenceModel,
    stopping: Optional[StoppingRule] = None,
) -> FinalSizeResult:
    """Final susceptible level of a converged run (any admissible incidence).

    Uses eps_z = 1e-13 * N by default so that identity cross-checks stay
    sharp.  Raises RuntimeError if the run hits max_steps instead of
    converging.
    """
    if stopping is None:
        stopping = StoppingRule(eps_z=CROSSCHECK_EPS_Z_REL * params.N)
    traj = simulate(initial, params, incidence, stopping)
    if traj.stop_reason != "converged":
        raise RuntimeError(
            f"no convergence within {stopping.max_steps} steps; cannot read S_inf"
        )
    return FinalSizeResult(
        s_inf=traj.S_inf, method="simulated", iterations=traj.n_steps,
        bounds=final_size_bounds(initial, params, incidence),
    )


@dataclass(frozen=True)
class TailSumReport:
    """Tail-sum identity residuals, one per stage."""

    t0: int
    lhs: np.ndarray  # compensated partial sums sum_{t>=t0} I_j(t)
    rhs: np.ndarray  # (S(t0) - S_inf + cumsum(I(t0))_j) / g_j
    rel_errors: np.ndarray

    @property
    def max_rel_error(self) -> float:
        return float(self.rel_errors.max())


def tail_sum_check(trajectory: Trajectory, t0: int = 0) -> TailSumReport:
    """Compare stage tail sums against their closed forms.

    Both sides are computed from the same converged run: the left side is
    an exactly-rounded (compensated) partial sum to the recorded horizon,
    the right side uses S(t0), I(t0) and S_inf = S(T).
    """
    if trajectory.stop_reason != "converged":
        raise ValueError("tail sums need a converged trajectory")
    if not 0 <= t0 <= trajectory.n_steps:
        raise ValueError(f"t0 = {t0} outside the recorded range")
    gamma = trajectory.params.gamma
    n = trajectory.params.n
    s_inf = trajectory.S_inf
    lhs = np.empty(n)
    rhs = np.empty(n)
    rel = np.empty(n)
    cum = 0.0
    for j in range(n):
        lhs[j] = math.fsum(trajectory.I[t0:, j])
        cum += float(trajectory.I[t0, j])
        rhs[j] = (trajectory.S[t0] - s_inf + cum) / gamma[j]
        denom = max(abs(rhs[j]), 1e-300)
        rel[j] = abs(lhs[j] - rhs[j]) / denom
    return TailSumReport(t0=t0, lhs=lhs, rhs=rhs, rel_errors=rel)


@dataclass(frozen=True)
class LimitDirectionResult:
    """Stage distribution at the last resolvable step vs the Perron vector."""

    t_star: int
    direction: np.ndarray
    perron_vector: np.ndarray
    rho: float
    max_abs_error: float


def limit_direction(trajectory: Trajectory) -> LimitDirectionResult:
    """Normalized infected vector at the trajectory tail vs Perron of B(S_inf).

    Reads I(t*)/||I(t*)||_1 at the last recorded step with
    ||I(t*)||_1 > 1e-250 and compares (max norm) against the Perron vector
    of B(S_inf).  The deeper the run, the sharper the agreement; drive
    eps_z down toward 1e-250 * N for tail-accurate directions.
    """
    if trajectory.n_steps < trajectory.params.n:
        raise ValueError(
            f"trajectory with {trajectory.n_steps} steps is too short for a stable "
            f"direction (need at least n = {trajectory.params.n})"
        )
    Z = trajectory.Z
    above = np.nonzero(Z > DIRECTION_FLOOR)[0]
    if above.size == 0:
        raise ValueError("every recorded state is below the direction floor")
    t_star = int(above[-1])
    direction = trajectory.I[t_star] / Z[t_star]
    decomp = build_B(trajectory.S_inf, trajectory.params, trajectory.incidence.r)
    pd = perron(decomp)
    err = float(np.max(np.abs(direction - pd.v)))
    return LimitDirectionResult(
        t_star=t_star, direction=direction, perron_vector=pd.v,
        rho=pd.rho, max_abs_error=err,
    )


@dataclass(frozen=True)
class MonotonicityReport:
    """First componentwise-strict decrease of I(t) and its persistence.

    ``onset`` is None when no recorded step decreases strictly in every
    component.  When an onset exists, ``persistent`` states whether the
    strict decrease holds at every later recorded step (it must, by the
    forward-invariance of the property); ``first_violation`` pinpoints
    the step otherwise.
    """

    onset: Optional[int]
    persistent: bool
    first_violation: Optional[int]


def monotonicity_onset(trajectory: Trajectory) -> MonotonicityReport:
    """Locate the start of eventual strict decay of the infected classes.

    Comparisons are exact (no tolerance): ties count as "not yet
    decreasing".
    """
    I = trajectory.I
    if len(I) < 2:
        return MonotonicityReport(onset=None, persistent=True, first_violation=None)
    dec = np.all(I[1:] < I[:-1], axis=1)
    idx = np.nonzero(dec)[0]
    if idx.size == 0:
        return MonotonicityReport(onset=None, persistent=True, first_violation=None)
    onset = int(idx[0])
    later = dec[onset:]
    if bool(later.all()):
        return MonotonicityReport(onset=onset, persistent=True, first_violation=None)
    first_bad = onset + int(np.nonzero(~later)[0][0])
    return MonotonicityReport(onset=onset, persistent=False, first_violation=first_bad)

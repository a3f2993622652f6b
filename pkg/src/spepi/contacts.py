"""Contact-count distributions composed into incidence functions.

Let p_i be the probability that a susceptible makes i contacts in one
step and Pi(I) the probability that a single contact infects.  Escaping
infection takes i independent escapes, so

    phi(I) = 1 - sum_i p_i (1 - Pi(I))^i .

When Pi satisfies the regularity conditions, so does the composition,
and the gradient at zero picks up the mean contact count:
grad phi(0) = pbar * grad Pi(0).  The threshold quantity therefore scales
linearly in pbar.

For Poisson-distributed contacts the series collapses to the closed form
phi(I) = 1 - exp(-lambda Pi(I)), evaluated without truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .incidence import IncidenceModel
from .model import StageParams
from .spectral import delta

__all__ = [
    "ContactDistribution",
    "ComposedIncidence",
    "PoissonContactIncidence",
    "compose_incidence",
    "poisson_incidence",
    "r0_with_contacts",
]

MASS_DEFICIT_TOL = 1e-12


@dataclass(frozen=True)
class ContactDistribution:
    """Distribution of per-step contact counts.

    Either a finite explicit table p_0..p_K (renormalized when the mass
    deficit is below 1e-12, rejected when larger) or a Poisson law given
    by its mean.  Build through :meth:`explicit`, :meth:`poisson` or
    :meth:`poisson_truncated`.
    """

    kind: str  # "explicit" | "poisson"
    p: Optional[np.ndarray]
    lam: Optional[float]
    mean: float

    @classmethod
    def explicit(cls, p) -> "ContactDistribution":
        p = np.asarray(p, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("contact probabilities must form a nonempty 1-d vector")
        if np.any(p < 0.0):
            raise ValueError("contact probabilities must be nonnegative")
        total = float(p.sum())
        if abs(total - 1.0) > MASS_DEFICIT_TOL:
            raise ValueError(
                f"contact probability mass {total:.17g} deviates from 1 by more than "
                f"{MASS_DEFICIT_TOL:g}; truncate with a smaller tail"
            )
        p = p / total
        p.flags.writeable = False
        mean = float(np.arange(p.size) @ p)
        return cls(kind="explicit", p=p, lam=None, mean=mean)

    @classmethod
    def poisson(cls, lam: float) -> "ContactDistribution":
        lam = float(lam)
        if not lam > 0.0:
            raise ValueError("the Poisson mean must be positive")
        return cls(kind="poisson", p=None, lam=lam, mean=lam)

    @classmethod
    def poisson_truncated(cls, lam: float, tail_mass: float = 1e-12,
                          max_count: int = 100_000) -> "ContactDistribution":
        """Finite truncation of a Poisson law with tail mass below ``tail_mass``."""
        lam = float(lam)
        if not lam > 0.0:
            raise ValueError("the Poisson mean must be positive")
        probs = [math.exp(-lam)]
        cum = probs[0]
        i = 0
        while cum < 1.0 - tail_mass:
            i += 1
            if i > max_count:
                raise ValueError("truncation did not reach the requested tail mass")
            probs.append(probs[-1] * lam / i)
            cum += probs[-1]
        return cls.explicit(np.array(probs))


class ComposedIncidence(IncidenceModel):
    """phi(I) = 1 - sum_i p_i (1 - Pi(I))^i for an explicit contact table.

    The sum is evaluated through the recurrence t_{i+1} = Pi + (1-Pi) t_i
    on t_i = 1 - (1-Pi)^i, which is cancellation-free down to tiny Pi.
    """

    family = "contact-composed"

    def __init__(self, pi_model: IncidenceModel, dist: ContactDistribution):
        if dist.kind != "explicit":
            raise ValueError("ComposedIncidence needs an explicit contact table")
        self.pi_model = pi_model
        self.dist = dist
        self.n = pi_model.n
        self.N = pi_model.N
        self.r = dist.mean * pi_model.r
        try:
            self._finalize()
        except ValueError as exc:
            raise ValueError(
                f"composition is not a valid incidence: {exc} "
                "(a contact distribution with zero mean infects nobody)"
            ) from exc

    def _phi_raw(self, I):
        pi = self.pi_model._phi_raw(I)
        q = 1.0 - pi
        p = self.dist.p
        t = 0.0
        phi = 0.0
        for i in range(1, p.shape[0]):
            t = pi + q * t
            phi += p[i] * t
        return phi

    def _grad_raw(self, I):
        pi = self.pi_model._phi_raw(I)
        q = 1.0 - pi
        p = self.dist.p
        w = 0.0
        qpow = 1.0  # q^(i-1)
        for i in range(1, p.shape[0]):
            w += i * p[i] * qpow
            qpow *= q
        return w * np.asarray(self.pi_model._grad_raw(I), dtype=float)

    def kernel_spec(self):
        inner = self.pi_model.kernel_spec()
        if inner is None or inner[3] != 0:  # no nesting of composed models
            return None
        ik, v1, v2, _, _ = inner
        return (ik, v1, v2, 1, self.dist.p)


class PoissonContactIncidence(IncidenceModel):
    """phi(I) = 1 - exp(-lambda Pi(I)): Poisson contacts in closed form."""

    family = "poisson-composed"

    def __init__(self, lam: float, pi_model: IncidenceModel):
        lam = float(lam)
        if not lam > 0.0:
            raise ValueError("the Poisson mean must be positive")
        self.lam = lam
        self.pi_model = pi_model
        self.n = pi_model.n
        self.N = pi_model.N
        self.r = lam * pi_model.r
        self._finalize()

    def _phi_raw(self, I):
        return -math.expm1(-self.lam * self.pi_model._phi_raw(I))

    def _grad_raw(self, I):
        pi = self.pi_model._phi_raw(I)
        g = np.asarray(self.pi_model._grad_raw(I), dtype=float)
        return self.lam * math.exp(-self.lam * pi) * g

    def kernel_spec(self):
        inner = self.pi_model.kernel_spec()
        if inner is None or inner[3] != 0:
            return None
        ik, v1, v2, _, _ = inner
        return (ik, v1, v2, 2, np.array([self.lam]))


def compose_incidence(pi_model: IncidenceModel, dist: ContactDistribution) -> IncidenceModel:
    """Compose a per-contact infection probability with a contact law.

    Explicit tables yield a :class:`ComposedIncidence`; Poisson laws take
    the exact closed-form path (no truncation).
    """
    if dist.kind == "poisson":
        return PoissonContactIncidence(dist.lam, pi_model)
    return ComposedIncidence(pi_model, dist)


def poisson_incidence(lam: float, pi_model: IncidenceModel) -> PoissonContactIncidence:
    """Closed-form Poisson-contact incidence with mean ``lam``."""
    return PoissonContactIncidence(lam, pi_model)


def r0_with_contacts(
    params: StageParams, pi_model: IncidenceModel, dist: ContactDistribution
) -> float:
    """Basic reproduction number of the composed model.

    Equals N * pbar * sum_j (dPi/dI_j)(0) / gamma_j; the mean contact
    count enters linearly, so halving contacts halves the threshold
    quantity.  Matches ``spectral.r0`` applied to the composed incidence.
    """
    return params.N * dist.mean * delta(params, pi_model)

"""Weak-type fractional Sobolev and Gagliardo-Nirenberg inequality checks.

Unlike the p-th-power convention of :mod:`metriclab.functionals`, every
quantity here carries the root its inequality statement demands: the left
sides are sup lam * (pair mass)^(1/p) style quantities, obtained from the
weak quotient supremum by a 1/p root.  The Gagliardo-Nirenberg check also
exposes the balancing diagnostics of its derivation: the two one-parameter
weak norms H and G, the splitting constant A that balances them, and the
measured constant of lhs <= c * H^theta * G^(1-theta).
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .fields import LipEstimate, lip_field
from .functionals import gagliardo, sobolev_seminorm
from .mmspace import DistanceIndex, MetricMeasureSpace
from .weaknorm import (
    EngineParams,
    enumerate_pair_quotients,
    pair_quotients,
    weak_norm,
)

__all__ = [
    "InequalityReport",
    "InterpolationParams",
    "gn_check",
    "sobolev_weak_check",
    "splitting_identity_error",
    "splitting_membership_check",
]


@dataclass(frozen=True)
class InterpolationParams:
    """Interpolation exponents: s = (1-theta) s1 + theta, 1/p = (1-theta)/p1 + theta."""

    s1: float
    p1: float
    theta: float

    def __post_init__(self):
        if not (0.0 < self.s1 < 1.0):
            raise ValueError("s1 must lie in (0, 1)")
        if not (self.p1 > 1.0):
            raise ValueError("p1 must exceed 1")
        if not (0.0 < self.theta < 1.0):
            raise ValueError("theta must lie strictly in (0, 1)")

    @property
    def s(self) -> float:
        return (1.0 - self.theta) * self.s1 + self.theta

    @property
    def p(self) -> float:
        return 1.0 / ((1.0 - self.theta) / self.p1 + self.theta)

    def as_dict(self) -> dict:
        return {"s1": self.s1, "p1": self.p1, "theta": self.theta,
                "s": self.s, "p": self.p}


@dataclass
class InequalityReport:
    """One inequality instance: rooted left/right sides plus diagnostics."""

    name: str
    lhs: float
    rhs: float
    ratio: float
    components: dict = dc_field(default_factory=dict)
    params: dict = dc_field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
               "ratio": self.ratio}
        out.update({k: v for k, v in self.components.items()})
        out["params"] = dict(self.params)
        return out


def sobolev_weak_check(space: MetricMeasureSpace, field, p: float, *,
                       index: DistanceIndex | None = None,
                       engine: EngineParams | None = None,
                       lip: LipEstimate | np.ndarray | None = None) -> InequalityReport:
    """Weak fractional Sobolev bound at regularity 1/p.

    lhs = [sup lam^p W(lam)]^(1/p) for q = |df| / (rho^(1/p) V^(1/p));
    rhs = (max |f|)^(1 - 1/p) * (sum lip w)^(1/p).  Both sides are
    1-homogeneous in f, so the reported ratio is scale-invariant.
    """
    if p < 1.0:
        raise ValueError("p must be >= 1")
    index = index or DistanceIndex(space)
    if lip is None:
        lip = lip_field(space, field, index=index)
    values = np.asarray(getattr(field, "values", field), dtype=np.float64)
    spectrum = pair_quotients(space, field, s=1.0 / p, r=p, index=index,
                              engine=engine)
    lhs = weak_norm(spectrum, p).value ** (1.0 / p)
    sup_f = float(np.max(np.abs(values)))
    lip_mass = sobolev_seminorm(space, lip, 1.0)
    rhs = sup_f ** (1.0 - 1.0 / p) * lip_mass ** (1.0 / p)
    ratio = lhs / rhs if rhs > 0.0 else np.nan
    return InequalityReport("sobolev_weak", float(lhs), float(rhs), float(ratio),
                            {"sup_f": sup_f, "lip_mass": lip_mass},
                            {"p": float(p)})


def gn_check(space: MetricMeasureSpace, field, params: InterpolationParams, *,
             index: DistanceIndex | None = None,
             engine: EngineParams | None = None,
             lip: LipEstimate | np.ndarray | None = None) -> InequalityReport:
    """Weak Gagliardo-Nirenberg interpolation bound at (s, p).

    lhs = [sup lam^p W(lam)]^(1/p) on the (s, p) quotients;
    rhs = (sum lip w)^theta * [gagliardo_metric(s1, p1)]^((1-theta)/p1).
    Components: H (weak norm of the (1,1) quotients at p=1),
    G (rooted weak norm of the (s1, p1) quotients), the balancing constant
    A solving (G A^theta)^(p1) = H A^(theta-1), and the measured constant
    diagnostic_c = lhs / (H^theta G^(1-theta)).
    """
    index = index or DistanceIndex(space)
    if lip is None:
        lip = lip_field(space, field, index=index)
    s, p = params.s, params.p
    lhs = weak_norm(pair_quotients(space, field, s=s, r=p, index=index,
                                   engine=engine), p).value ** (1.0 / p)
    lip_mass = sobolev_seminorm(space, lip, 1.0)
    gag = gagliardo(space, field, params.s1, params.p1, "metric", index=index,
                    engine=engine)
    rhs = lip_mass ** params.theta * gag ** ((1.0 - params.theta) / params.p1)
    h_val = weak_norm(pair_quotients(space, field, s=1.0, r=1.0, index=index,
                                     engine=engine), 1.0).value
    g_val = weak_norm(pair_quotients(space, field, s=params.s1, r=params.p1,
                                     index=index, engine=engine),
                      params.p1).value ** (1.0 / params.p1)
    if g_val > 0.0 and h_val > 0.0:
        a_val = (h_val / g_val ** params.p1) ** (
            1.0 / (1.0 + params.theta * (params.p1 - 1.0)))
        diag_c = lhs / (h_val ** params.theta * g_val ** (1.0 - params.theta))
    else:
        a_val = np.nan
        diag_c = np.nan
    ratio = lhs / rhs if rhs > 0.0 else np.nan
    return InequalityReport("gn", float(lhs), float(rhs), float(ratio),
                            {"H": float(h_val), "G": float(g_val),
                             "A": float(a_val), "diagnostic_c": float(diag_c),
                             "lip_mass": lip_mass, "gagliardo": gag},
                            params.as_dict())


def _aligned_quotients(space, field, params, index):
    """(s,p), (s1,p1) and (1,1) quotients aligned in pair-enumeration order."""
    q_sp, _ = enumerate_pair_quotients(space, field, params.s, params.p, index=index)
    q_s1, _ = enumerate_pair_quotients(space, field, params.s1, params.p1, index=index)
    q_11, _ = enumerate_pair_quotients(space, field, 1.0, 1.0, index=index)
    return q_sp, q_s1, q_11


def splitting_identity_error(space: MetricMeasureSpace, field,
                             params: InterpolationParams, *,
                             index: DistanceIndex | None = None) -> float:
    """Max relative deviation of q_{s,p} from q_{s1,p1}^(1-theta) q_{1,1}^theta.

    The identity is exact in real arithmetic whenever the interpolation
    relations hold; the returned number is pure floating-point noise.
    """
    index = index or DistanceIndex(space)
    q_sp, q_s1, q_11 = _aligned_quotients(space, field, params, index)
    mask = q_sp > 0.0
    if not np.any(mask):
        return 0.0
    combined = (q_s1[mask] ** (1.0 - params.theta)) * (q_11[mask] ** params.theta)
    return float(np.max(np.abs(combined - q_sp[mask]) / q_sp[mask]))


def splitting_membership_check(space: MetricMeasureSpace, field,
                               params: InterpolationParams, lambdas, a_values,
                               *, index: DistanceIndex | None = None) -> int:
    """Count violations of the set-splitting containment; 0 means it holds.

    For every ordered pair, every lam and every A > 0, membership
    q_{s,p} > lam must imply q_{s1,p1} > A^(-theta) lam or
    q_{1,1} > A^(1-theta) lam.
    """
    index = index or DistanceIndex(space)
    q_sp, q_s1, q_11 = _aligned_quotients(space, field, params, index)
    violations = 0
    for a in np.atleast_1d(a_values):
        a = float(a)
        if a <= 0.0:
            raise ValueError("A must be positive")
        for lam in np.atleast_1d(lambdas):
            lam = float(lam)
            left = q_sp > lam
            right = (q_s1 > a ** (-params.theta) * lam) | (
                q_11 > a ** (1.0 - params.theta) * lam)
            violations += int(np.sum(left & ~right))
    return violations

"""Hausdorff dimensions: the limit set's via the pressure equation, the
stationary measure's via the entropy / Lyapunov-exponent ratio.

The dimension of the limit set is the root t* of the strictly
decreasing map B(t) = pressure of the geometric potential scaled by t
(the potential is log|dT| < 0, so B decreases from B(0) = log k).  For
affine systems with fixed ratios r_i this reduces to the classical
Moran equation sum_i r_i^t = 1, solved independently here as an oracle.

The dimension of the stationary measure is h/chi with entropy
h = -integral of log g and Lyapunov exponent chi = -integral of
log|dT|, both against the measure itself — estimated through its
cylinder weights.  Both computations require pairwise disjoint branch
images and a positive derivative floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketError, ValidationError
from .system import IFSInstance, validate
from .thermo import (
    WORD_BUDGET,
    Potential,
    _birkhoff_tables,
    _logsumexp,
    _TransferModel,
    gibbs_integral,
)

T_MAX = 2.0
DIMENSION_CSV_HEADER = "lambda,theta,t_star,h,chi,hd_measure,bracket_lo,bracket_hi,depth,method"


@dataclass(frozen=True)
class DimensionResult:
    """Dimension data; fields not produced by the computation are None.

    t_star: root of the pressure equation (limit-set dimension);
    h, chi, hd_measure: entropy, Lyapunov exponent, and their ratio
    (stationary-measure dimension); bracket: final bisection interval.
    """

    t_star: float = None
    h: float = None
    chi: float = None
    hd_measure: float = None
    bracket: tuple = None
    pressure_method: str = ""
    depth: int = 0


def moran_dimension(ratios) -> float:
    """The unique s >= 0 with sum_i r_i^s = 1, all r_i in (0,1).

    Bisection to absolute bracket width 1e-12.  A single ratio forces
    s = 0 (the only root of r^s = 1 for r < 1).
    """
    rs = [float(r) for r in ratios]
    if not rs:
        raise ValidationError("at least one contraction ratio is required")
    if any(not (0.0 < r < 1.0) for r in rs):
        raise ValidationError("contraction ratios must lie strictly inside (0,1)")

    def f(s: float) -> float:
        return sum(r**s for r in rs) - 1.0

    if f(0.0) <= 0.0:
        return 0.0  # len(rs) == 1: the sum starts at 1 and decreases
    hi = 1.0
    while f(hi) > 0.0:
        hi *= 2.0
        if hi > 1024.0:
            raise BracketError("could not bracket the Moran root; ratios too close to 1")
    lo = 0.0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _require_dimension_ready(inst: IFSInstance):
    rep = validate(inst)
    if not rep.valid:
        failed = [name for name, ok in rep.verdicts().items() if not ok]
        raise ValidationError(f"instance fails validation: {', '.join(failed)}")
    if not rep.disjoint_images:
        raise ValidationError("dimension computations need pairwise disjoint branch images")
    if not rep.rho_positive:
        raise ValidationError("dimension computations need a positive derivative floor")
    return rep


def bowen_root(
    inst: IFSInstance,
    method: str = "transfer",
    depth: int = 8,
    tol: float = 1e-12,
    budget: int = WORD_BUDGET,
) -> DimensionResult:
    """Root of t -> pressure(t * log|dT|) on [0, 2] by bisection.

    The map is strictly decreasing (log|dT| < 0 everywhere on a
    validated contraction), so the root is unique; both endpoints are
    checked to bracket a sign change.  The pressure backend is either
    the transfer discretization or periodic-orbit sums at level
    `depth`, built once and reused across all bisection steps.
    """
    _require_dimension_ready(inst)
    if tol <= 0.0:
        raise ValidationError("tol must be positive")
    if method == "transfer":
        model = _TransferModel(inst, depth, budget)

        def pressure_at(t: float) -> float:
            return model.pressure(Potential(inst, c_deriv=t)).value

    elif method == "periodic":
        _, _, _, _, logd = _birkhoff_tables(inst, depth, budget)

        def pressure_at(t: float) -> float:
            return _logsumexp(t * logd) / depth

    else:
        raise ValidationError(f"unknown pressure method {method!r}; use transfer or periodic")

    lo, hi = 0.0, T_MAX
    p_lo = pressure_at(lo)
    p_hi = pressure_at(hi)
    if not (p_lo > 0.0 > p_hi):
        raise BracketError(
            f"pressure does not change sign on [0, {T_MAX}]: P(0)={p_lo!r}, P({T_MAX})={p_hi!r}"
        )
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if pressure_at(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return DimensionResult(
        t_star=0.5 * (lo + hi),
        bracket=(lo, hi),
        pressure_method=method,
        depth=depth,
    )


def measure_dimension(inst: IFSInstance, n: int, budget: int = WORD_BUDGET) -> DimensionResult:
    """Entropy over Lyapunov exponent of the stationary measure.

    h = -(cylinder average of log g), valid because the normalized
    weight potential has zero pressure, making the entropy equal to
    minus the potential's average; chi = -(cylinder average of
    log|dT|) > 0 for a validated contraction.
    """
    _require_dimension_ready(inst)
    h = -gibbs_integral(inst, Potential.weight_log(inst), n, budget)
    chi = -gibbs_integral(inst, Potential.derivative_log(inst), n, budget)
    if not chi > 0.0:
        raise ValidationError(
            f"Lyapunov exponent must be positive (got {chi!r}); the scheme is not a contraction"
        )
    return DimensionResult(
        h=h,
        chi=chi,
        hd_measure=h / chi,
        pressure_method="cylinder",
        depth=n,
    )


def dimension_summary(
    inst: IFSInstance,
    method: str = "transfer",
    depth: int = 12,
    tol: float = 1e-10,
    budget: int = WORD_BUDGET,
) -> DimensionResult:
    """Limit-set root and measure dimension at a shared depth."""
    root = bowen_root(inst, method=method, depth=depth, tol=tol, budget=budget)
    vol = measure_dimension(inst, depth, budget)
    return DimensionResult(
        t_star=root.t_star,
        h=vol.h,
        chi=vol.chi,
        hd_measure=vol.hd_measure,
        bracket=root.bracket,
        pressure_method=method,
        depth=depth,
    )


def equilibrium_entropy_lyapunov(inst: IFSInstance, t: float, n: int, budget: int = WORD_BUDGET):
    """Empirical entropy and Lyapunov exponent of the Gibbs weights of
    the geometric potential scaled by t.

    The weights are the normalized exponentials of the scaled Birkhoff
    sums at period-n points; entropy is their Shannon entropy over n,
    the exponent is minus their average of log|dT| over n.  At the
    pressure root the ratio recovers the root — the zero-pressure
    identity h = t * chi in finite-depth form.
    """
    _, _, _, _, logd = _birkhoff_tables(inst, n, budget)
    s = t * logd
    s = s - float(np.max(s))
    q = np.exp(s)
    q /= float(np.sum(q))
    h_emp = -float(np.dot(q, np.log(q))) / n
    chi = -float(np.dot(q, logd)) / n
    return h_emp, chi

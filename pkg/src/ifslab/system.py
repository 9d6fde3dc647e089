"""Weighted iterated function schemes on [0,1].

A family is k >= 2 branch maps T_i(x; p=lambda) with weight functions
g_i(x; p=theta), the weights summing to 1 pointwise.  Binding fixes the
two parameters and yields callables for each branch map, its
x-derivative, and its weight.  Validation estimates on a grid the data
every later stage relies on: per-branch Lipschitz numbers, the
contraction number L = sum_i ||g_i||_inf * Lip(T_i), the weight
normalization residual, pairwise image disjointness, the derivative
floor, and the symbolic Hoelder exponent.

Weights come in two forms: a closed-form expression in (x, p), or a
piecewise-constant step with fixed breakpoints and parameter-dependent
level values.  Step weights are admitted even though they are not
Lipschitz across their breakpoints; validation records that as a warning
because for the disjoint-image systems that use them the breakpoint lies
in the gap between branch images, which the stationary measure never
charges.
"""

from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BindError, EvalDomainError, ValidationError
from .expressions import (
    Expr,
    compile_scalar_bound,
    diff_x,
    eval_expr,
    parse_expr,
    to_source,
    uses_x,
)

_DOMAIN_SLACK = 1e-12


def _as_expr(e):
    return parse_expr(e) if isinstance(e, str) else e


@dataclass(frozen=True)
class ExprWeight:
    """Weight given by a closed-form expression in (x, p)."""

    expr: Expr

    def describe(self):
        return to_source(self.expr)


@dataclass(frozen=True)
class StepWeight:
    """Piecewise-constant weight: value v_j(p) on [b_{j-1}, b_j).

    breakpoints are strictly increasing interior points of (0,1); the
    last piece is closed on the right.  Level values are expressions in
    the parameter p only.
    """

    breakpoints: tuple
    values: tuple  # expressions in p, len(breakpoints) + 1

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "values", tuple(_as_expr(v) for v in self.values))
        if len(self.values) != len(self.breakpoints) + 1:
            raise ValidationError("step weight needs one more value than breakpoints")
        bs = self.breakpoints
        if any(not (0.0 < b < 1.0) for b in bs) or any(b2 <= b1 for b1, b2 in zip(bs, bs[1:])):
            raise ValidationError("step-weight breakpoints must be strictly increasing inside (0,1)")
        for v in self.values:
            if uses_x(v):
                raise ValidationError("step-weight values may depend on p only")

    def describe(self):
        vals = ", ".join(to_source(v) for v in self.values)
        return f"step(breaks={list(self.breakpoints)}; values={vals})"


def _default_interval(name, interval):
    if interval is None:
        warnings.warn(
            f"{name} interval not declared; defaulting to (-inf, inf)",
            stacklevel=3,
        )
        return (-math.inf, math.inf)
    lo, hi = float(interval[0]), float(interval[1])
    if not lo <= hi:
        raise ValidationError(f"{name} interval is empty: {interval!r}")
    return (lo, hi)


@dataclass(frozen=True)
class FamilySpec:
    """A parameterised scheme: k branch maps and k weights on [0,1]."""

    maps: tuple
    weights: tuple
    lambda_interval: tuple = None
    theta_interval: tuple = None
    default_lambda: float = None
    default_theta: float = None
    name: str = ""

    def __post_init__(self):
        maps = tuple(_as_expr(m) for m in self.maps)
        weights = []
        for w in self.weights:
            if isinstance(w, (ExprWeight, StepWeight)):
                weights.append(w)
            elif isinstance(w, dict):
                weights.append(StepWeight(tuple(w["breakpoints"]), tuple(w["values"])))
            else:
                weights.append(ExprWeight(_as_expr(w)))
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "weights", tuple(weights))
        if len(maps) < 2:
            raise ValidationError("a scheme needs at least two branches")
        if len(maps) != len(self.weights):
            raise ValidationError("number of weights must match number of maps")
        object.__setattr__(self, "lambda_interval", _default_interval("lambda", self.lambda_interval))
        object.__setattr__(self, "theta_interval", _default_interval("theta", self.theta_interval))
        dl = self.default_lambda
        dt = self.default_theta
        if dl is None:
            dl = _midpoint(self.lambda_interval)
        if dt is None:
            dt = _midpoint(self.theta_interval)
        object.__setattr__(self, "default_lambda", float(dl))
        object.__setattr__(self, "default_theta", float(dt))

    @property
    def k(self):
        return len(self.maps)


def _midpoint(interval):
    lo, hi = interval
    if math.isinf(lo) or math.isinf(hi):
        return 0.0
    return 0.5 * (lo + hi)


class BoundFn:
    """Expression bound to a parameter value; callable on floats or arrays.

    Scalar calls go through a compiled fast path (math-module semantics);
    array calls go through the checked tree-walk evaluator.
    """

    __slots__ = ("expr", "p", "scalar")

    def __init__(self, expr, p):
        self.expr = expr
        self.p = float(p)
        self.scalar = compile_scalar_bound(expr, p)

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            out = eval_expr(self.expr, x, self.p)
            return np.broadcast_to(np.asarray(out, dtype=float), x.shape)
        return self.scalar(x)


class BoundStep:
    """Step weight bound to a parameter value."""

    __slots__ = ("breakpoints", "levels", "scalar")

    def __init__(self, sw: StepWeight, p: float):
        self.breakpoints = np.asarray(sw.breakpoints, dtype=float)
        self.levels = np.asarray([float(eval_expr(v, 0.0, p)) for v in sw.values])
        breaks = list(sw.breakpoints)
        levels = self.levels

        def scalar(x, _breaks=breaks, _levels=levels):
            return _levels[bisect.bisect_right(_breaks, x)]

        self.scalar = scalar

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return self.levels[np.searchsorted(self.breakpoints, x, side="right")]
        return self.scalar(x)


@dataclass(frozen=True)
class Branch:
    """One bound branch: the map, its x-derivative, and its weight."""

    map: object
    dmap: object
    weight: object
    map_expr: Expr
    dmap_expr: Expr
    weight_spec: object


@dataclass(frozen=True)
class IFSInstance:
    """A scheme with both parameters fixed."""

    branches: tuple
    lam: float
    theta: float
    spec: FamilySpec

    @property
    def k(self):
        return len(self.branches)

    def has_step_weights(self):
        return any(isinstance(b.weight_spec, StepWeight) for b in self.branches)


def bind(spec: FamilySpec, lam: float = None, theta: float = None) -> IFSInstance:
    """Fix (lambda, theta) and return callables for every branch.

    Parameters default to the family's declared defaults and must lie in
    the declared intervals.
    """
    lam = spec.default_lambda if lam is None else float(lam)
    theta = spec.default_theta if theta is None else float(theta)
    for name, value, iv in (("lambda", lam, spec.lambda_interval), ("theta", theta, spec.theta_interval)):
        if not (iv[0] <= value <= iv[1]):
            raise BindError(f"{name}={value} outside declared interval [{iv[0]}, {iv[1]}]")
    branches = []
    for m, w in zip(spec.maps, spec.weights):
        dm = diff_x(m)
        try:
            bmap = BoundFn(m, lam)
            bdmap = BoundFn(dm, lam)
            if isinstance(w, StepWeight):
                bw = BoundStep(w, theta)
            else:
                bw = BoundFn(w.expr, theta)
            # probe once so obviously broken bindings fail here, not later
            bmap(0.0), bdmap(0.0), bw(0.0)
        except (EvalDomainError, ValueError, ZeroDivisionError, OverflowError) as exc:
            raise BindError(f"binding map {to_source(m)!r} at lambda={lam}, theta={theta}: {exc}") from exc
        branches.append(Branch(bmap, bdmap, bw, m, dm, w))
    return IFSInstance(tuple(branches), lam, theta, spec)


@dataclass(frozen=True)
class ValidationReport:
    """Grid estimates of the hypotheses later stages rely on.

    All sups/infs are taken over grid_n+1 equispaced points of [0,1]
    including the endpoints, so they are estimates; for affine maps the
    Lipschitz numbers are exact.  `valid` gates the stationary-measure
    operations; `dimension_ready` additionally requires pairwise disjoint
    branch images (closed grid-extrema intervals; touching counts as
    overlap) and a positive derivative floor.  The equal-derivative flag
    is recorded for reporting only and never enforced.
    """

    k: int
    lam: float
    theta: float
    grid_n: int
    lip: tuple
    weight_sup: tuple
    weight_min: tuple
    images: tuple
    L: float
    normalization_residual: float
    normalization_tol: float
    rho_est: float
    holder_a: float
    holder_alpha: float
    contraction_ok: bool
    normalization_ok: bool
    maps_into_domain: bool
    weights_positive: bool
    disjoint_images: bool
    rho_positive: bool
    equal_derivative_on_grid: bool
    warnings: tuple = field(default_factory=tuple)

    @property
    def valid(self):
        return (
            self.contraction_ok
            and self.normalization_ok
            and self.maps_into_domain
            and self.weights_positive
        )

    @property
    def dimension_ready(self):
        return self.valid and self.disjoint_images and self.rho_positive

    def verdicts(self):
        return {
            "contraction": self.contraction_ok,
            "normalization": self.normalization_ok,
            "maps_into_domain": self.maps_into_domain,
            "weights_positive": self.weights_positive,
        }

    def summary_lines(self):
        out = [
            f"k={self.k}",
            f"lambda={self.lam!r}",
            f"theta={self.theta!r}",
            f"grid_n={self.grid_n}",
        ]
        for i, (lip, ws, img) in enumerate(zip(self.lip, self.weight_sup, self.images), start=1):
            out.append(f"lip_{i}={lip!r}")
            out.append(f"weight_sup_{i}={ws!r}")
            out.append(f"image_{i}=[{img[0]!r}, {img[1]!r}]")
        out.append(f"L={self.L!r}")
        out.append(f"normalization_residual={self.normalization_residual!r}")
        out.append(f"rho_est={self.rho_est!r}")
        out.append(f"holder_a={self.holder_a!r}")
        out.append(f"holder_alpha={self.holder_alpha!r}")
        for name, ok in self.verdicts().items():
            out.append(f"{name}={'PASS' if ok else 'FAIL'}")
        out.append(f"disjoint_images={str(self.disjoint_images).lower()}")
        out.append(f"rho_positive={str(self.rho_positive).lower()}")
        out.append(f"equal_derivative_on_grid={str(self.equal_derivative_on_grid).lower()}")
        out.append(f"valid={'PASS' if self.valid else 'FAIL'}")
        out.append(f"dimension_ready={str(self.dimension_ready).lower()}")
        for w in self.warnings:
            out.append(f"warning={w}")
        return out


def validate(inst: IFSInstance, grid_n: int = 4096, normalization_tol: float = 1e-9) -> ValidationReport:
    """Estimate the scheme's hypotheses on an equispaced grid."""
    if grid_n < 2:
        raise ValidationError("grid_n must be at least 2")
    grid = np.linspace(0.0, 1.0, grid_n + 1)
    lips, sups, mins, images = [], [], [], []
    dmat = []
    gsum = np.zeros_like(grid)
    notes = []
    for i, br in enumerate(inst.branches, start=1):
        tv = br.map(grid)
        dv = br.dmap(grid)
        gv = br.weight(grid)
        if isinstance(br.weight_spec, StepWeight):
            # levels are exact; the grid could miss a thin piece
            levels = br.weight.levels
            sups.append(float(np.max(levels)))
            mins.append(float(np.min(levels)))
            notes_key = f"weight {i} discontinuous at breakpoints {list(br.weight.breakpoints)}"
            if notes_key not in notes:
                notes.append(notes_key)
        else:
            sups.append(float(np.max(gv)))
            mins.append(float(np.min(gv)))
        lips.append(float(np.max(np.abs(dv))))
        images.append((float(np.min(tv)), float(np.max(tv))))
        dmat.append(np.broadcast_to(np.asarray(dv, dtype=float), grid.shape))
        gsum = gsum + gv
    L = float(sum(s * l for s, l in zip(sups, lips)))
    residual = float(np.max(np.abs(gsum - 1.0)))
    rho = float(min(np.min(np.abs(d)) for d in dmat))
    a = max(lips)
    if 0.0 < a < 1.0:
        alpha = min(1.0, -math.log(a) / math.log(2.0))
    else:
        alpha = 0.0
    maps_into = all(lo >= -_DOMAIN_SLACK and hi <= 1.0 + _DOMAIN_SLACK for lo, hi in images)
    weights_positive = min(mins) > 0.0
    order = sorted(range(len(images)), key=lambda j: images[j])
    disjoint = all(
        images[order[j + 1]][0] > images[order[j]][1] for j in range(len(order) - 1)
    )
    stacked = np.vstack(dmat)
    equal_derivative = bool(np.max(stacked.max(axis=0) - stacked.min(axis=0)) <= 1e-9)
    iv = inst.spec.lambda_interval
    if math.isinf(iv[0]) or math.isinf(iv[1]):
        notes.append("lambda interval unbounded")
    iv = inst.spec.theta_interval
    if math.isinf(iv[0]) or math.isinf(iv[1]):
        notes.append("theta interval unbounded")
    if not disjoint:
        notes.append("branch images overlap or touch; dimension operations unavailable")
    return ValidationReport(
        k=inst.k,
        lam=inst.lam,
        theta=inst.theta,
        grid_n=grid_n,
        lip=tuple(lips),
        weight_sup=tuple(sups),
        weight_min=tuple(mins),
        images=tuple(images),
        L=L,
        normalization_residual=residual,
        normalization_tol=normalization_tol,
        rho_est=rho,
        holder_a=float(a),
        holder_alpha=float(alpha),
        contraction_ok=L < 1.0,
        normalization_ok=residual <= normalization_tol,
        maps_into_domain=maps_into,
        weights_positive=weights_positive,
        disjoint_images=disjoint,
        rho_positive=rho > 0.0,
        equal_derivative_on_grid=equal_derivative,
        warnings=tuple(notes),
    )

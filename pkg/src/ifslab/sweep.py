"""Parameter sweeps and smoothness diagnostics for lambda -> integral
of f against the stationary measure (and for other per-parameter
quantities: pressures and dimensions).

Sweeps evaluate one quantity on an equispaced parameter grid, one row
per grid point, each row carrying an error estimate and, if the
evaluation failed, the failure reason instead of a value.  Rows are
deterministic: stochastic rows derive their seed from the base seed
plus the grid index, so results are reproducible run to run and
independent of the thread count.

Diagnostics estimate how the d-th central difference quotient of a
scalar function F grows as the step h shrinks through a dyadic ladder.
A least-squares fit of log|quotient| against log h gives a growth
exponent: near zero for a function with a bounded d-th derivative,
near -(d - s) for one that is only C^s at the probe.  Verdicts:
exponent >= -0.1 "bounded", <= -0.5 "diverging", else "inconclusive".

Two honesty rules shape the engine-backed diagnostic:

* Evaluation error must sit far below the smallest difference taken.
  Before measuring anything, the depth of the deterministic engine is
  calibrated at the probe until a certified bound on the integral
  error is below 0.01 * min(h)^d, and refused (NoiseFloorError) if the
  atom budget cannot reach that floor.  The certificate combines the
  measured one-step Wasserstein residual, a geometric tail ratio, and
  the integrand's regularity data (Lipschitz bound; jump sizes paired
  with their clearance from the branch images, since a jump inside the
  support would make the quadrature error uncertifiable).

* A quotient can vanish at a symmetric probe for the wrong reason:
  even-order differences cancel odd local behavior exactly at the
  singular point.  Even-order runs therefore take the maximum quotient
  over a small fan of centers probe +/- c*sqrt(h), which restores the
  h-scaling that the centered stencil alone would hide.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dimension import bowen_root, measure_dimension
from .errors import IfsLabError, NoiseFloorError, ValidationError
from .expressions import diff_x, eval_expr, parse_expr, to_source, uses_p
from .measure import DiscreteMeasure, EvolveConfig, integrate, markov_step, w1_distance
from .measure import chaos_game
from .system import FamilySpec, IFSInstance, StepWeight, bind, validate
from .thermo import Potential, SymbolWord, pressure_periodic, pressure_transfer, project

SWEEP_CSV_HEADER = "param,value,err_estimate,engine,depth_or_samples,seed,error"
DIAGNOSTIC_CSV_HEADER = "h,quotient,order,probe"

ATOM_BUDGET = 1 << 24
_DEPTH_CAP = 60
_GRID_N = 4096

# Central difference stencils on offsets of h: (offsets, coefficients).
_STENCILS = {
    1: ((-1.0, 1.0), (-0.5, 0.5)),
    2: ((-1.0, 0.0, 1.0), (1.0, -2.0, 1.0)),
    3: ((-2.0, -1.0, 1.0, 2.0), (-0.5, 1.0, -1.0, 0.5)),
}
# Sum of |coefficients|: amplification of a pointwise F-error bound.
_NOISE_AMP = {1: 1.0, 2: 4.0, 3: 3.0}
# Fan offsets (multiples of sqrt(h)) for even orders; see module docstring.
_FAN_SCALES = (0.75, 1.1, 1.6, 2.3)
_SUBNOISE_FACTOR = 8.0
_PLATEAU_SPREAD = 4.0


# ---------------------------------------------------------------------------
# integrands with regularity metadata
# ---------------------------------------------------------------------------


class ScalarFn:
    """A function on [0,1] carrying the regularity data error bounds need.

    lip is a Lipschitz bound valid on each continuity piece; jumps is a
    tuple of (position, |jump size|) pairs.  Expression-backed instances
    estimate lip from the derivative on a grid; raw callables default to
    an unknown (infinite) bound, which disables certified error
    estimates but still evaluates.
    """

    __slots__ = ("_scalar", "_array", "lip", "jumps", "description", "config")

    def __init__(self, scalar, array=None, lip=math.inf, jumps=(), description="f", config=None):
        self._scalar = scalar
        self._array = array
        self.lip = float(lip)
        self.jumps = tuple((float(b), float(j)) for b, j in jumps)
        self.description = str(description)
        self.config = config  # JSON-able rebuild data; None for raw callables

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            if self._array is not None:
                return self._array(x)
            return np.asarray([self._scalar(float(v)) for v in x], dtype=float)
        return float(self._scalar(float(x)))

    def __repr__(self):
        return f"ScalarFn({self.description})"

    @classmethod
    def from_expression(cls, source: str) -> "ScalarFn":
        """Closed-form integrand in x (the parameter variable is not allowed)."""
        e = parse_expr(source)
        if uses_p(e):
            raise ValidationError("an integrand may depend on x only, not on the parameter")

        def scalar(x, _e=e):
            return float(eval_expr(_e, x, 0.0))

        def array(x, _e=e):
            out = eval_expr(_e, x, 0.0)
            return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()

        return cls(
            scalar,
            array,
            lip=_grid_lip(e, 0.0, 1.0),
            jumps=(),
            description=to_source(e),
            config={"expr": to_source(e)},
        )

    @classmethod
    def piecewise(cls, breakpoints, pieces) -> "ScalarFn":
        """Piecewise expressions in x; piece j applies on [b_{j-1}, b_j).

        Points exactly at a breakpoint take the right piece (pieces are
        right-continuous), matching the half-open convention used for
        piecewise-constant weights.
        """
        breaks = tuple(float(b) for b in breakpoints)
        if any(not (0.0 < b < 1.0) for b in breaks) or any(
            b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])
        ):
            raise ValidationError("breakpoints must be strictly increasing inside (0,1)")
        exprs = tuple(parse_expr(p) if isinstance(p, str) else p for p in pieces)
        if len(exprs) != len(breaks) + 1:
            raise ValidationError("piecewise integrand needs one more piece than breakpoints")
        for e in exprs:
            if uses_p(e):
                raise ValidationError("an integrand may depend on x only, not on the parameter")

        break_arr = np.asarray(breaks)

        def scalar(x, _breaks=list(breaks), _exprs=exprs):
            return float(eval_expr(_exprs[bisect_right(_breaks, x)], x, 0.0))

        def array(x, _breaks=break_arr, _exprs=exprs):
            idx = np.searchsorted(_breaks, x, side="right")
            out = np.empty(x.shape, dtype=float)
            for j, e in enumerate(_exprs):
                mask = idx == j
                if np.any(mask):
                    val = eval_expr(e, x[mask], 0.0)
                    out[mask] = np.broadcast_to(np.asarray(val, dtype=float), x[mask].shape)
            return out

        edges = (0.0,) + breaks + (1.0,)
        lip = max(_grid_lip(e, edges[j], edges[j + 1]) for j, e in enumerate(exprs))
        jumps = []
        for j, b in enumerate(breaks):
            left = float(eval_expr(exprs[j], b, 0.0))
            right = float(eval_expr(exprs[j + 1], b, 0.0))
            jumps.append((b, abs(right - left)))
        desc = "piecewise(" + "; ".join(
            f"{to_source(e)} on [{edges[j]:g},{edges[j + 1]:g})" for j, e in enumerate(exprs)
        ) + ")"
        return cls(
            scalar,
            array,
            lip=lip,
            jumps=tuple(jumps),
            description=desc,
            config={"breakpoints": list(breaks), "pieces": [to_source(e) for e in exprs]},
        )

    @classmethod
    def from_callable(cls, fn, lip=math.inf, jumps=(), description="callable") -> "ScalarFn":
        return cls(fn, None, lip=lip, jumps=jumps, description=description)


def _grid_lip(e, lo: float, hi: float, n: int = _GRID_N) -> float:
    """Grid sup of |d/dx| on [lo, hi]; an estimate, exact for affine pieces."""
    d = diff_x(e)
    xs = np.linspace(lo, hi, n + 1)
    try:
        vals = np.broadcast_to(np.asarray(eval_expr(d, xs, 0.0), dtype=float), xs.shape)
        return float(np.max(np.abs(vals)))
    except IfsLabError:
        best = 0.0
        for x in xs:
            try:
                best = max(best, abs(float(eval_expr(d, float(x), 0.0))))
            except IfsLabError:
                continue
        return best


# ---------------------------------------------------------------------------
# sweep specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Quantity:
    """What a sweep evaluates at each grid point.

    kind is one of integral (needs f), bowen_dimension,
    measure_dimension, pressure (needs a potential descriptor such as
    "weight_log", "derivative_log", "constant:<c>", or
    "scaled:<t>:<base>").
    """

    kind: str
    f: ScalarFn = None
    potential: str = ""

    def __post_init__(self):
        if self.kind not in ("integral", "bowen_dimension", "measure_dimension", "pressure"):
            raise ValidationError(f"unknown quantity kind {self.kind!r}")
        if self.kind == "integral" and self.f is None:
            raise ValidationError("integral quantity needs an integrand")
        if self.kind == "pressure" and not self.potential:
            raise ValidationError("pressure quantity needs a potential descriptor")

    @classmethod
    def integral(cls, f: ScalarFn) -> "Quantity":
        return cls(kind="integral", f=f)

    @classmethod
    def bowen(cls) -> "Quantity":
        return cls(kind="bowen_dimension")

    @classmethod
    def measure_dim(cls) -> "Quantity":
        return cls(kind="measure_dimension")

    @classmethod
    def pressure(cls, potential: str) -> "Quantity":
        return cls(kind="pressure", potential=potential)


@dataclass(frozen=True)
class EngineConfig:
    """How quantities are evaluated: deterministic depth-n evolution or
    the stochastic sampler, plus the pressure backend for thermodynamic
    quantities."""

    method: str = "depth"
    depth: int = 12
    samples: int = 100_000
    seed: int = 0
    x0: float = 0.5
    burn_in: int = 1000
    merge_tol: float = 0.0
    pressure_method: str = "transfer"
    tol: float = 1e-10
    atom_budget: int = ATOM_BUDGET

    def __post_init__(self):
        if self.method not in ("depth", "chaos"):
            raise ValidationError(f"unknown engine method {self.method!r}")
        if self.pressure_method not in ("transfer", "periodic"):
            raise ValidationError(f"unknown pressure method {self.pressure_method!r}")
        if self.depth < 1:
            raise ValidationError("engine depth must be at least 1")
        if self.samples < 1:
            raise ValidationError("engine samples must be positive")


@dataclass(frozen=True)
class SweepSpec:
    """A family, which parameter varies over which grid, and the quantity."""

    family: FamilySpec
    parameter: str  # "lambda", "theta", or "both" (the two move together)
    lo: float
    hi: float
    points: int
    quantity: Quantity
    engine: EngineConfig = field(default_factory=EngineConfig)
    fixed_lambda: float = None  # overrides the family default when theta varies
    fixed_theta: float = None  # overrides the family default when lambda varies

    def __post_init__(self):
        if self.parameter not in ("lambda", "theta", "both"):
            raise ValidationError(f"unknown sweep parameter {self.parameter!r}")
        lo, hi = float(self.lo), float(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if not lo < hi:
            raise ValidationError("sweep grid needs lo < hi")
        if self.points < 2:
            raise ValidationError("sweep grid needs at least two points")
        intervals = []
        if self.parameter in ("lambda", "both"):
            intervals.append(("lambda", self.family.lambda_interval))
        if self.parameter in ("theta", "both"):
            intervals.append(("theta", self.family.theta_interval))
        for name, iv in intervals:
            if lo < iv[0] or hi > iv[1]:
                raise ValidationError(
                    f"sweep grid [{lo}, {hi}] leaves the declared {name} interval "
                    f"[{iv[0]}, {iv[1]}]"
                )

    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)

    def bind_at(self, value: float) -> IFSInstance:
        lam = self.fixed_lambda
        theta = self.fixed_theta
        if self.parameter in ("lambda", "both"):
            lam = value
        if self.parameter in ("theta", "both"):
            theta = value
        return bind(self.family, lam=lam, theta=theta)


@dataclass(frozen=True)
class SweepRow:
    """One grid point's outcome; error holds the failure reason, if any."""

    param: float
    value: float
    err_estimate: float
    engine: str
    depth_or_samples: int
    seed: int
    error: str = ""


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def _simple_family() -> FamilySpec:
    return FamilySpec(
        maps=("x/2", "(x + 1)/2"),
        weights=("p", "1 - p"),
        lambda_interval=(0.0, 1.0),
        theta_interval=(0.05, 0.95),
        default_lambda=0.5,
        default_theta=0.5,
        name="simple_4_1",
    )


def _cantor_family() -> FamilySpec:
    # Ratio parameterised as 1/3 + lambda, so lambda = 0 is the
    # middle-third system and the ratio sweeps (0.2, 0.45) as lambda
    # sweeps the declared interval.
    return FamilySpec(
        maps=("x/3 + p*x", "x/3 + p*x + 2/3 - p"),
        weights=("p", "1 - p"),
        lambda_interval=(0.2 - 1.0 / 3.0, 0.45 - 1.0 / 3.0),
        theta_interval=(0.05, 0.95),
        default_lambda=0.0,
        default_theta=0.5,
        name="cantor",
    )


def _oscillation_family(order: int, name: str) -> FamilySpec:
    maps = (
        f"p*x + phi(p - 0.25, {order}) + 0.01",
        f"p*x + 2/3 + phi(p - 0.25, {order})",
    )
    weights = (
        StepWeight((0.5,), ("p", "1 - p")),
        StepWeight((0.5,), ("1 - p", "p")),
    )
    third = 1.0 / 3.0
    sixth = 1.0 / 6.0
    return FamilySpec(
        maps=maps,
        weights=weights,
        lambda_interval=(sixth, third),
        theta_interval=(sixth, third),
        default_lambda=0.25,
        default_theta=0.25,
        name=name,
    )


def _preset_simple_4_1() -> SweepSpec:
    return SweepSpec(
        family=_simple_family(),
        parameter="theta",
        lo=0.1,
        hi=0.9,
        points=9,
        quantity=Quantity.integral(ScalarFn.from_expression("x")),
        engine=EngineConfig(method="depth", depth=14),
    )


def _preset_cantor() -> SweepSpec:
    fam = _cantor_family()
    return SweepSpec(
        family=fam,
        parameter="lambda",
        lo=fam.lambda_interval[0],
        hi=fam.lambda_interval[1],
        points=16,
        quantity=Quantity.bowen(),
        engine=EngineConfig(method="depth", depth=8, pressure_method="transfer", tol=1e-10),
    )


def _piecewise_integrand() -> ScalarFn:
    return ScalarFn.piecewise((0.5,), ("-x", "pow(x, 2)"))


def _preset_oscillation(order: int, name: str) -> SweepSpec:
    fam = _oscillation_family(order, name)
    return SweepSpec(
        family=fam,
        parameter="both",
        lo=fam.lambda_interval[0],
        hi=fam.lambda_interval[1],
        points=65,
        quantity=Quantity.integral(_piecewise_integrand()),
        engine=EngineConfig(method="depth", depth=12),
    )


_PRESETS = {
    "simple_4_1": _preset_simple_4_1,
    "cantor": _preset_cantor,
    "ex_4_3": lambda: _preset_oscillation(3, "ex_4_3"),
    "ex_4_4": lambda: _preset_oscillation(1, "ex_4_4"),
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def preset(name: str) -> SweepSpec:
    """A ready-to-run sweep spec for one of the built-in families."""
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise ValidationError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"
        ) from None
    return factory()


# ---------------------------------------------------------------------------
# potentials from descriptors
# ---------------------------------------------------------------------------


def parse_potential_spec(inst: IFSInstance, text: str) -> Potential:
    """Potential descriptor: weight_log | derivative_log | constant:<c>
    | scaled:<t>:<descriptor>."""
    t = text.strip()
    if t == "weight_log":
        return Potential.weight_log(inst)
    if t == "derivative_log":
        return Potential.derivative_log(inst)
    if t.startswith("constant:"):
        try:
            c = float(t.split(":", 1)[1])
        except ValueError:
            raise ValidationError(f"bad constant potential {text!r}") from None
        return Potential.constant(inst, c)
    if t.startswith("scaled:"):
        parts = t.split(":", 2)
        if len(parts) != 3:
            raise ValidationError(f"bad scaled potential {text!r}; use scaled:<t>:<base>")
        try:
            factor = float(parts[1])
        except ValueError:
            raise ValidationError(f"bad scale factor in {text!r}") from None
        return parse_potential_spec(inst, parts[2]).scaled(factor)
    raise ValidationError(
        f"unknown potential descriptor {text!r}; use weight_log, derivative_log, "
        f"constant:<c>, or scaled:<t>:<base>"
    )


# ---------------------------------------------------------------------------
# deterministic engine: depth-n evolution from a balanced mixture
# ---------------------------------------------------------------------------


def _fixed_point_mixture(inst: IFSInstance) -> DiscreteMeasure:
    """Uniform mixture of the branch fixed points.

    Starting mass 1/k on every branch's fixed point (rather than a
    single atom) starts the branch-selection frequencies at their
    average; for piecewise-constant complementary weights this removes
    the slowly mixing component of the error, so the integral converges
    at the map contraction rate instead of the weight mixing rate.  The
    noise certificate never assumes this: it measures the residual.
    """
    pts = [project(inst, SymbolWord((i,), periodic=True)) for i in range(1, inst.k + 1)]
    w = np.full(len(pts), 1.0 / len(pts))
    return DiscreteMeasure.from_atoms(np.asarray(pts, dtype=float), w)


def _evolve_mixture(
    inst: IFSInstance,
    n: int,
    merge_tol: float = 0.0,
    atom_budget: int = ATOM_BUDGET,
) -> DiscreteMeasure:
    cfg = EvolveConfig(merge_tol=merge_tol) if merge_tol > 0.0 else None
    mu = _fixed_point_mixture(inst)
    for _ in range(n):
        if len(mu) * inst.k > atom_budget:
            raise ValidationError(
                f"depth-{n} evolution exceeds the atom budget ({atom_budget}); "
                f"use a merge tolerance or a smaller depth"
            )
        mu = markov_step(inst, mu, cfg)
    return mu


def _error_coefficient(f: ScalarFn, images) -> float:
    """Factor turning a Wasserstein bound into an integral error bound.

    |int f dmu - int f dnu| <= lip * W1 for the continuous part; a jump
    of size J at b adds J * W1 / gamma, where gamma is the clearance
    between b and the branch-image envelope (transporting mass across
    the jump costs at least gamma of Wasserstein distance, because all
    atoms live inside the images).
    """
    if not math.isfinite(f.lip):
        return math.inf
    coeff = f.lip
    for b, j in f.jumps:
        if j == 0.0:
            continue
        gamma = min(
            (lo - b) if b < lo else (b - hi) if b > hi else 0.0 for lo, hi in images
        )
        if gamma <= 0.0:
            raise NoiseFloorError(
                f"integrand jumps at {b}, inside the branch-image envelope; "
                f"the quadrature error there cannot be certified"
            )
        coeff += j / gamma
    return coeff


def _tail_error(delta: float, delta_prev: float, a: float, coeff: float) -> float:
    """Certified bound on |int f dmu_n - int f dmu_inf|.

    delta = W1(mu_n, mu_{n+1}); the tail sum of successive distances is
    bounded geometrically with ratio r = max(observed ratio, contraction
    factor), refusing (returning inf) when no geometric decay is visible.
    """
    if delta == 0.0:
        return 0.0
    if not math.isfinite(coeff):
        return math.inf
    r = a
    if delta_prev > 0.0:
        r = max(r, delta / delta_prev)
    if r >= 0.995:
        return math.inf
    return coeff * delta / (1.0 - r)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def _integral_row_depth(spec: SweepSpec, inst: IFSInstance, rep, seed: int) -> SweepRow:
    eng = spec.engine
    f = spec.quantity.f
    coeff = _error_coefficient(f, rep.images)
    mu_prev = _evolve_mixture(inst, eng.depth - 1, eng.merge_tol, eng.atom_budget)
    cfg = EvolveConfig(merge_tol=eng.merge_tol) if eng.merge_tol > 0.0 else None
    mu = markov_step(inst, mu_prev, cfg)
    mu_next = markov_step(inst, mu, cfg)
    delta_prev = w1_distance(mu_prev, mu)
    delta = w1_distance(mu, mu_next)
    err = _tail_error(delta, delta_prev, rep.holder_a, coeff)
    value = integrate(mu, f)
    return SweepRow(
        param=math.nan,
        value=value,
        err_estimate=err,
        engine="depth",
        depth_or_samples=eng.depth,
        seed=seed,
    )


def _evaluate_row(spec: SweepSpec, value: float, seed: int) -> SweepRow:
    inst = spec.bind_at(value)
    rep = validate(inst)
    if not rep.valid:
        failed = [name for name, ok in rep.verdicts().items() if not ok]
        raise ValidationError(f"instance fails validation: {', '.join(failed)}")
    q = spec.quantity
    eng = spec.engine
    if q.kind == "integral":
        if eng.method == "chaos":
            mu = chaos_game(inst, eng.x0, eng.burn_in, eng.samples, seed)
            return SweepRow(
                param=value,
                value=integrate(mu, q.f),
                err_estimate=1.0 / math.sqrt(eng.samples),
                engine="chaos",
                depth_or_samples=eng.samples,
                seed=seed,
            )
        row = _integral_row_depth(spec, inst, rep, seed)
        return replace(row, param=value)
    if q.kind == "bowen_dimension":
        res = bowen_root(inst, method=eng.pressure_method, depth=eng.depth, tol=eng.tol)
        return SweepRow(
            param=value,
            value=res.t_star,
            err_estimate=res.bracket[1] - res.bracket[0],
            engine=eng.pressure_method,
            depth_or_samples=eng.depth,
            seed=seed,
        )
    if q.kind == "measure_dimension":
        cur = measure_dimension(inst, eng.depth)
        prev = measure_dimension(inst, max(1, eng.depth - 1))
        return SweepRow(
            param=value,
            value=cur.hd_measure,
            err_estimate=abs(cur.hd_measure - prev.hd_measure),
            engine="cylinder",
            depth_or_samples=eng.depth,
            seed=seed,
        )
    if q.kind == "pressure":
        pot = parse_potential_spec(inst, q.potential)
        if eng.pressure_method == "transfer":
            est = pressure_transfer(pot, eng.depth, tol=min(eng.tol, 1e-12))
        else:
            est = pressure_periodic(pot, eng.depth)
        return SweepRow(
            param=value,
            value=est.value,
            err_estimate=est.gap,
            engine=eng.pressure_method,
            depth_or_samples=eng.depth,
            seed=seed,
        )
    raise ValidationError(f"unknown quantity kind {q.kind!r}")


def run_sweep(spec: SweepSpec, threads: int = 1) -> list:
    """Evaluate the sweep's quantity at every grid point.

    Returns one SweepRow per grid value, in grid order.  A failed grid
    point contributes a row whose error field holds the reason; other
    rows have an empty error field.  Stochastic rows use seed
    (base seed + grid index), making output independent of threading.
    """
    grid = spec.grid()

    def one(i: int) -> SweepRow:
        value = float(grid[i])
        seed = spec.engine.seed + i
        try:
            return _evaluate_row(spec, value, seed)
        except IfsLabError as exc:
            label = spec.engine.method if spec.quantity.kind == "integral" else spec.engine.pressure_method
            size = spec.engine.samples if spec.engine.method == "chaos" else spec.engine.depth
            return SweepRow(
                param=value,
                value=math.nan,
                err_estimate=math.nan,
                engine=label,
                depth_or_samples=size,
                seed=seed,
                error=str(exc).replace("\n", " "),
            )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(len(grid))))
    return [one(i) for i in range(len(grid))]


# ---------------------------------------------------------------------------
# smoothness diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothnessDiagnostic:
    """Outcome of a difference-quotient growth measurement.

    quotients[i] is the largest |d-th difference| / h^d over the fan of
    centers at ladder step h_i; centers[i] records which center
    produced it.  exponent is the least-squares slope of log(quotient)
    against log(h) over the steps that rise above the noise resolution
    (NaN when too few do).  err_estimate bounds |F_computed - F| per
    evaluation; certified says it sits below noise_floor =
    0.01 * min(h)^order.
    """

    order: int
    probe: float
    ladder: tuple
    quotients: tuple
    centers: tuple
    exponent: float
    verdict: str
    err_estimate: float
    noise_floor: float
    certified: bool
    depth: int
    engine: str
    notes: tuple = ()


def dyadic_ladder(lo: float, hi: float, coarse: int = 5, fine: int = 10) -> tuple:
    """Steps (hi-lo) * 2^-j for j = coarse..fine, largest first."""
    if not lo < hi:
        raise ValidationError("ladder interval needs lo < hi")
    if fine < coarse:
        raise ValidationError("ladder needs coarse <= fine")
    length = hi - lo
    return tuple(length * 2.0**-j for j in range(coarse, fine + 1))


def _prep_ladder(ladder, lo: float, hi: float) -> tuple:
    hs = tuple(sorted({float(h) for h in ladder}, reverse=True))
    if len(hs) < 4:
        raise ValidationError("the step ladder needs at least four distinct steps")
    if hs[0] >= (hi - lo) or hs[-1] <= 0.0:
        raise ValidationError("ladder steps must be positive and smaller than the interval")
    return hs


def diagnose_function(
    F,
    lo: float,
    hi: float,
    probe: float,
    order: int,
    ladder=None,
    err_bound: float = 0.0,
    depth: int = 0,
    engine: str = "synthetic",
    notes: tuple = (),
) -> SmoothnessDiagnostic:
    """Difference-quotient growth of a scalar function F on [lo, hi].

    err_bound is the caller's certified bound on the error of each F
    evaluation (0 for exact synthetic functions); quotients that cannot
    be distinguished from that noise are excluded from the growth fit.
    Verdicts: exponent >= -0.1 bounded, <= -0.5 diverging (provided the
    quotients actually spread beyond a plateau), else inconclusive.
    """
    if order not in _STENCILS:
        raise ValidationError(f"order must be 1, 2, or 3 (got {order})")
    if not lo < hi:
        raise ValidationError("diagnostic interval needs lo < hi")
    hs = _prep_ladder(ladder if ladder is not None else dyadic_ladder(lo, hi), lo, hi)
    max_h = hs[0]
    if probe - order * max_h < lo or probe + order * max_h > hi:
        raise ValidationError(
            f"probe {probe} with max step {max_h} reaches outside [{lo}, {hi}]; "
            f"need probe +/- order*max(h) inside the interval"
        )
    offsets, coeffs = _STENCILS[order]
    reach = max(abs(o) for o in offsets)

    cache = {}

    def feval(x: float) -> float:
        key = float(x)
        if key not in cache:
            cache[key] = float(F(key))
        return cache[key]

    quotients = []
    centers = []
    for h in hs:
        fan = [probe]
        if order % 2 == 0:
            root = math.sqrt(h)
            for scale in _FAN_SCALES:
                for sign in (1.0, -1.0):
                    center = probe + sign * scale * root
                    if center - reach * h >= lo and center + reach * h <= hi:
                        fan.append(center)
        best_q = -1.0
        best_c = probe
        for center in fan:
            acc = 0.0
            for off, cf in zip(offsets, coeffs):
                acc += cf * feval(center + off * h)
            q = abs(acc) / h**order
            if q > best_q:
                best_q, best_c = q, center
        quotients.append(best_q)
        centers.append(best_c)

    floor = 0.01 * hs[-1] ** order
    amp = _NOISE_AMP[order]
    usable = [
        i
        for i, (h, q) in enumerate(zip(hs, quotients))
        if q > 0.0 and q > _SUBNOISE_FACTOR * (amp * err_bound / h**order)
    ]
    notes = tuple(notes)
    if not usable:
        exponent = 0.0
        verdict = "bounded"
        notes += ("all quotients sit at or below the noise resolution",)
    elif len(usable) < 3:
        exponent = math.nan
        verdict = "inconclusive"
        notes += ("too few quotients rise above the noise resolution for a growth fit",)
    else:
        log_h = np.log([hs[i] for i in usable])
        log_q = np.log([quotients[i] for i in usable])
        exponent = float(np.polyfit(log_h, log_q, 1)[0])
        spread = max(quotients[i] for i in usable) / min(quotients[i] for i in usable)
        if exponent <= -0.5 and spread > _PLATEAU_SPREAD:
            verdict = "diverging"
        elif exponent >= -0.1 or spread <= _PLATEAU_SPREAD:
            # A genuinely growing d-th difference spreads by
            # (max h / min h)^{1/2} or more across the ladder; a flat
            # oscillating band can tilt a least-squares fit without
            # spreading, and stays "bounded".
            verdict = "bounded"
        else:
            verdict = "inconclusive"
    return SmoothnessDiagnostic(
        order=order,
        probe=float(probe),
        ladder=hs,
        quotients=tuple(quotients),
        centers=tuple(centers),
        exponent=exponent,
        verdict=verdict,
        err_estimate=float(err_bound),
        noise_floor=floor,
        certified=bool(err_bound <= floor),
        depth=depth,
        engine=engine,
        notes=notes,
    )


def _calibrate_depth(spec: SweepSpec, probe: float, floor: float):
    """Smallest depth whose certified integral-error bound beats floor.

    Evolves the balanced mixture at the probe, measuring successive
    Wasserstein residuals, until the tail certificate drops below the
    floor; refuses if the atom budget or depth cap is reached first.
    Returns (depth, certified error at that depth).
    """
    inst = spec.bind_at(probe)
    rep = validate(inst)
    if not rep.valid:
        failed = [name for name, ok in rep.verdicts().items() if not ok]
        raise ValidationError(f"probe instance fails validation: {', '.join(failed)}")
    coeff = _error_coefficient(spec.quantity.f, rep.images)
    if not math.isfinite(coeff):
        raise NoiseFloorError(
            "integrand carries no Lipschitz bound; the evaluation error cannot be certified"
        )
    eng = spec.engine
    cfg = EvolveConfig(merge_tol=eng.merge_tol) if eng.merge_tol > 0.0 else None
    mu_prev = _fixed_point_mixture(inst)
    mu = markov_step(inst, mu_prev, cfg)
    delta_prev = w1_distance(mu_prev, mu)
    err = math.inf
    stalls = 0
    for n in range(1, _DEPTH_CAP + 1):
        # Loop state: mu is the depth-n measure, delta_prev = W1 of the
        # previous consecutive pair.
        if len(mu) * inst.k > eng.atom_budget:
            break
        mu_next = markov_step(inst, mu, cfg)
        delta = w1_distance(mu, mu_next)
        err = _tail_error(delta, delta_prev, rep.holder_a, coeff)
        if err <= floor:
            return n, err
        # Two consecutive non-contracting residual ratios mean the
        # evolution has stalled (typically at floating-point resolution);
        # more depth cannot help, so refuse now instead of growing the
        # atom count to the budget.
        stalls = stalls + 1 if math.isinf(err) and delta > 0.0 else 0
        if stalls >= 2:
            break
        delta_prev = delta
        mu = mu_next
    raise NoiseFloorError(
        f"cannot certify the evaluation error below the noise floor {floor:.3e} "
        f"within the atom budget (best bound {err:.3e}); coarsen the ladder or "
        f"lower the order"
    )


def smoothness_diagnostic(
    spec: SweepSpec,
    probe: float,
    order: int,
    ladder=None,
) -> SmoothnessDiagnostic:
    """Growth diagnostic for F(parameter) = integral of f d(stationary
    measure), evaluated with the deterministic depth engine.

    The engine depth is calibrated once at the probe so the certified
    evaluation error sits below 0.01 * min(h)^order, then held fixed
    for every evaluation; NoiseFloorError if no affordable depth
    reaches that floor.  The stochastic engine is refused: sampling
    noise would be amplified by 1/h^order and swamp the quotients.
    """
    if spec.quantity.kind != "integral":
        raise ValidationError("smoothness diagnostics apply to integral quantities")
    if spec.engine.method != "depth":
        raise ValidationError(
            "smoothness diagnostics require the deterministic depth engine; "
            "the stochastic sampler's noise would dominate every quotient"
        )
    hs = _prep_ladder(ladder if ladder is not None else dyadic_ladder(spec.lo, spec.hi), spec.lo, spec.hi)
    if probe - order * hs[0] < spec.lo or probe + order * hs[0] > spec.hi:
        raise ValidationError(
            f"probe {probe} with max step {hs[0]} reaches outside "
            f"[{spec.lo}, {spec.hi}]; need probe +/- order*max(h) inside the interval"
        )
    floor = 0.01 * hs[-1] ** order
    depth, err = _calibrate_depth(spec, probe, floor)

    eng = spec.engine
    f = spec.quantity.f
    seen = {}

    def F(value: float) -> float:
        key = float(value)
        if key not in seen:
            inst = spec.bind_at(key)
            rep = validate(inst)
            if not rep.valid:
                failed = [name for name, ok in rep.verdicts().items() if not ok]
                raise ValidationError(
                    f"instance at parameter {key} fails validation: {', '.join(failed)}"
                )
            mu = _evolve_mixture(inst, depth, eng.merge_tol, eng.atom_budget)
            seen[key] = integrate(mu, f)
        return seen[key]

    return diagnose_function(
        F,
        spec.lo,
        spec.hi,
        probe,
        order,
        ladder=hs,
        err_bound=err,
        depth=depth,
        engine="depth",
    )

"""Symbolic dynamics over the branch alphabet: words, projection,
potentials, topological pressure by two methods, and cylinder weights.

The coding space is the set of sequences over {1,...,k} with the metric
d(x,y) = sum_{n>=0} [x_n != y_n] / 2^n.  The projection sends a word to
the point of the attractor it codes, by composing the branch maps.  A
potential here is an affine combination

    phi(w) = c_w * log g_{w_0}(proj(shift w))
           + c_d * log|dT_{w_0}(proj(shift w))|
           + c_const,

which covers the normalized weight potential (c_w = 1), the geometric
potential (c_d = 1) driving dimension computations, constants, scalar
multiples, and sums — closed under everything pressure calculus needs.

Pressure is computed two independent ways:

* periodic-orbit sums: (1/n) log sum over all k^n period-n words of
  exp(Birkhoff sum), evaluated exactly at the cycles' fixed points;
* transfer-operator discretization: states are depth-d words u, each
  standing for the point x_u coded by its periodic extension; the
  operator row at u has one entry exp(phi(i . u-cycle)) per symbol i,
  sent to the state given by the first d symbols of i.u; the leading
  eigenvalue (power iteration) estimates exp(pressure).  With the
  evaluation point taken at x_u for every i, the row sums for the
  normalized weight potential are exactly sum_i g_i(x_u) = 1, so that
  potential's pressure is 0 to machine precision at every depth.

Cylinder weights realize the depth-n expansion of the stationary
measure: the weight of word w is the product of branch weights read
along the word from a fixed reference point (the fixed point of branch
1).  Those products sum to 1 exactly, by the pointwise normalization of
the weights, one telescoping level at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BudgetError,
    ConvergenceError,
    EvalDomainError,
    ValidationError,
)
from .system import IFSInstance

WORD_BUDGET = 1 << 20
_FP_TOL = 1e-14
_FP_CYCLE_CAP = 10_000
_NORMALIZATION_GRID = 4096
_NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class SymbolWord:
    """Finite word over {1,...,k}; periodic=True means its infinite
    periodic extension."""

    symbols: tuple
    periodic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if not self.symbols:
            raise ValidationError("a word needs at least one symbol")
        if any(s < 1 for s in self.symbols):
            raise ValidationError("symbols are 1-based branch indices")

    def __len__(self):
        return len(self.symbols)

    def symbol_at(self, n: int) -> int:
        """n-th symbol (0-based); wraps around when periodic."""
        if self.periodic:
            return self.symbols[n % len(self.symbols)]
        if n >= len(self.symbols):
            raise ValidationError(f"index {n} beyond finite word of length {len(self.symbols)}")
        return self.symbols[n]

    def shifted(self) -> "SymbolWord":
        """The word with its first symbol removed (rotated if periodic)."""
        if self.periodic:
            return SymbolWord(self.symbols[1:] + self.symbols[:1], periodic=True)
        if len(self.symbols) < 2:
            raise ValidationError("cannot shift a finite word of length 1")
        return SymbolWord(self.symbols[1:])


def shift_metric(x: SymbolWord, y: SymbolWord) -> float:
    """d(x,y) = sum_n [x_n != y_n]/2^n.

    Exact for two periodic words (geometric tail summed in closed form
    over the joint period); two finite words must have equal length and
    are compared over it; a finite word against a periodic one is
    compared over the finite length (a partial sum of the series).
    """
    if x.periodic and y.periodic:
        period = math.lcm(len(x), len(y))
        s = sum(
            2.0 ** (-n)
            for n in range(period)
            if x.symbol_at(n) != y.symbol_at(n)
        )
        return s / (1.0 - 2.0 ** (-period))
    if not x.periodic and not y.periodic:
        if len(x) != len(y):
            raise ValidationError("finite words must have equal length to be compared")
        horizon = len(x)
    else:
        horizon = len(x) if not x.periodic else len(y)
    return sum(
        2.0 ** (-n)
        for n in range(horizon)
        if x.symbol_at(n) != y.symbol_at(n)
    )


def _check_alphabet(inst: IFSInstance, w: SymbolWord):
    if max(w.symbols) > inst.k:
        raise ValidationError(f"word uses symbol {max(w.symbols)} but the scheme has k={inst.k}")


def project(inst: IFSInstance, w: SymbolWord, tol: float = 1e-12) -> float:
    """Point of [0,1] coded by the word.

    Finite w = (w_0..w_{m-1}): the composition T_{w_0} o ... o T_{w_{m-1}}
    applied to the base point 0 — within a^m of the projection of any
    infinite extension.  Periodic w: the fixed point of the cycle
    composition, iterated until successive cycle images differ < tol.
    """
    _check_alphabet(inst, w)
    maps = [br.map.scalar for br in inst.branches]
    if not w.periodic:
        z = 0.0
        for s in reversed(w.symbols):
            z = maps[s - 1](z)
        return min(1.0, max(0.0, z))
    z = 0.5
    for _ in range(_FP_CYCLE_CAP):
        prev = z
        for s in reversed(w.symbols):
            z = maps[s - 1](z)
        if abs(z - prev) < tol:
            return min(1.0, max(0.0, z))
    raise ConvergenceError(
        f"cycle fixed point did not stabilize to {tol} in {_FP_CYCLE_CAP} iterations; "
        "is the scheme a contraction?"
    )


@dataclass(frozen=True)
class Potential:
    """Affine-combination potential c_w*log g + c_d*log|dT| + c_const,
    each log term read at the projection of the shifted word."""

    inst: IFSInstance
    c_weight: float = 0.0
    c_deriv: float = 0.0
    c_const: float = 0.0

    def __post_init__(self):
        for c in (self.c_weight, self.c_deriv, self.c_const):
            if not math.isfinite(c):
                raise ValidationError("potential coefficients must be finite")

    @classmethod
    def weight_log(cls, inst: IFSInstance) -> "Potential":
        return cls(inst, c_weight=1.0)

    @classmethod
    def derivative_log(cls, inst: IFSInstance) -> "Potential":
        return cls(inst, c_deriv=1.0)

    @classmethod
    def constant(cls, inst: IFSInstance, c: float) -> "Potential":
        return cls(inst, c_const=float(c))

    def scaled(self, t: float) -> "Potential":
        t = float(t)
        if not math.isfinite(t):
            raise ValidationError("scaling factor must be finite")
        return Potential(self.inst, t * self.c_weight, t * self.c_deriv, t * self.c_const)

    def __add__(self, other: "Potential") -> "Potential":
        if not isinstance(other, Potential):
            return NotImplemented
        if other.inst is not self.inst:
            raise ValidationError("cannot add potentials bound to different instances")
        return Potential(
            self.inst,
            self.c_weight + other.c_weight,
            self.c_deriv + other.c_deriv,
            self.c_const + other.c_const,
        )

    def kind(self) -> str:
        if self.c_deriv == 0.0 and self.c_const == 0.0 and self.c_weight == 1.0:
            return "weight_log"
        if self.c_weight == 0.0 and self.c_const == 0.0 and self.c_deriv == 1.0:
            return "derivative_log"
        if self.c_weight == 0.0 and self.c_deriv == 0.0:
            return f"constant({self.c_const!r})"
        return f"combination(weight={self.c_weight!r},deriv={self.c_deriv!r},const={self.c_const!r})"


def eval_potential(phi: Potential, w: SymbolWord) -> float:
    """phi at one word; exact for periodic words."""
    inst = phi.inst
    _check_alphabet(inst, w)
    if w.periodic:
        xs = project(inst, w.shifted())
    elif len(w) == 1:
        xs = 0.0  # empty tail projects to the base point
    else:
        xs = project(inst, SymbolWord(w.symbols[1:]))
    br = inst.branches[w.symbols[0] - 1]
    val = phi.c_const
    if phi.c_weight != 0.0:
        g = float(br.weight(xs))
        if not g > 0.0:
            raise EvalDomainError(f"weight {w.symbols[0]} is {g!r} at x={xs!r}; log undefined")
        val += phi.c_weight * math.log(g)
    if phi.c_deriv != 0.0:
        d = abs(float(br.dmap(xs)))
        if not d > 0.0:
            raise EvalDomainError(f"|dT_{w.symbols[0]}| is {d!r} at x={xs!r}; log undefined")
        val += phi.c_deriv * math.log(d)
    return float(val)


@dataclass(frozen=True)
class PressureEstimate:
    """Pressure value with its convergence diagnostic.

    gap is |estimate(n) - estimate(n-1)| for the periodic method (inf
    when n=1 leaves no previous level) and the last eigenvalue update
    of the power iteration for the transfer method.
    """

    value: float
    method: str
    depth: int
    gap: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValidationError("pressure estimate must be finite")


# ---------------------------------------------------------------------------
# vectorized word tables


def _digit_table(k: int, n: int, budget: int) -> np.ndarray:
    """All k^n words as 0-based digit rows, lexicographic order."""
    count = k**n
    if count > budget:
        raise BudgetError(f"k^n = {count} words exceeds the enumeration budget {budget}")
    idx = np.arange(count)
    digits = np.empty((count, n), dtype=np.int8)
    for j in range(n):
        digits[:, j] = (idx // k ** (n - 1 - j)) % k
    return digits


def _branch_apply(inst: IFSInstance, sym: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    for i in range(inst.k):
        m = sym == i
        if np.any(m):
            out[m] = inst.branches[i].map(x[m])
    return out


def _branch_values(inst: IFSInstance, sym: np.ndarray, x: np.ndarray, which: str) -> np.ndarray:
    """g or |dT| values, checked positive (their logs must exist)."""
    out = np.empty_like(x)
    for i in range(inst.k):
        m = sym == i
        if not np.any(m):
            continue
        br = inst.branches[i]
        vals = br.weight(x[m]) if which == "weight" else np.abs(br.dmap(x[m]))
        vals = np.broadcast_to(np.asarray(vals, dtype=float), x[m].shape)
        bad = ~((vals > 0.0) & np.isfinite(vals))
        if np.any(bad):
            j = int(np.nonzero(bad)[0][0])
            raise EvalDomainError(
                f"{'weight' if which == 'weight' else '|dT|'} of branch {i + 1} is "
                f"{vals[j]!r} at x={x[m][j]!r}; log undefined"
            )
        out[m] = vals
    return out


def _cycle_points(inst: IFSInstance, digits: np.ndarray) -> np.ndarray:
    """Fixed point of each word's cycle composition, all words at once."""
    x = np.full(digits.shape[0], 0.5)
    n = digits.shape[1]
    for _ in range(_FP_CYCLE_CAP):
        prev = x
        for j in range(n - 1, -1, -1):
            x = _branch_apply(inst, digits[:, j], x)
        if float(np.max(np.abs(x - prev))) < _FP_TOL:
            return np.clip(x, 0.0, 1.0)
    raise ConvergenceError(
        f"cycle fixed points did not stabilize in {_FP_CYCLE_CAP} iterations; "
        "is the scheme a contraction?"
    )


def _birkhoff_tables(inst: IFSInstance, n: int, budget: int = WORD_BUDGET):
    """Per-word Birkhoff sums of log g and log|dT| along the cycle.

    Walking y back through the cycle from the fixed point visits the
    projections of all n rotations of the word, each at the cost of one
    map evaluation.
    """
    digits = _digit_table(inst.k, n, budget)
    xstar = _cycle_points(inst, digits)
    y = xstar
    logg = np.zeros(digits.shape[0])
    logd = np.zeros(digits.shape[0])
    sigma1 = xstar
    for j in range(n - 1, -1, -1):
        sym = digits[:, j]
        logg += np.log(_branch_values(inst, sym, y, "weight"))
        logd += np.log(_branch_values(inst, sym, y, "deriv"))
        if j == 0:
            sigma1 = y  # projection of the once-shifted word
        y = _branch_apply(inst, sym, y)
    return digits, xstar, sigma1, logg, logd


def _logsumexp(a: np.ndarray) -> float:
    m = float(np.max(a))
    return m + math.log(float(np.sum(np.exp(a - m))))


def pressure_periodic(phi: Potential, n: int, budget: int = WORD_BUDGET) -> PressureEstimate:
    """(1/n) log of the weighted count of period-n cycles.

    The Birkhoff sums are evaluated exactly at the cycles' fixed points;
    the reported gap compares against the same estimate one level down.
    """
    if n < 1:
        raise ValidationError("n must be at least 1")
    inst = phi.inst

    def level(m: int) -> float:
        _, _, _, logg, logd = _birkhoff_tables(inst, m, budget)
        return _logsumexp(phi.c_weight * logg + phi.c_deriv * logd + m * phi.c_const) / m

    value = level(n)
    gap = math.inf if n == 1 else abs(value - level(n - 1))
    return PressureEstimate(value=value, method="periodic", depth=n, gap=gap)


class _TransferModel:
    """Depth-d discretized transfer operator, reusable across potentials.

    Rows are depth-d words u (their periodic extensions' projections
    x_u); the entry for next symbol i is exp(phi(i . u-cycle)) and its
    column is the state made of the first d symbols of i.u.  Evaluating
    every i at the same point x_u keeps the rows of the normalized
    weight potential exactly stochastic.
    """

    def __init__(self, inst: IFSInstance, depth: int, budget: int = WORD_BUDGET):
        if depth < 1:
            raise ValidationError("depth must be at least 1")
        self.inst = inst
        self.depth = depth
        k = inst.k
        digits = _digit_table(k, depth, budget)
        count = digits.shape[0]
        xu = _cycle_points(inst, digits)
        self.logg = np.empty((count, k))
        self.logd = np.empty((count, k))
        for i in range(k):
            sym = np.full(count, i, dtype=np.int8)
            self.logg[:, i] = np.log(_branch_values(inst, sym, xu, "weight"))
            self.logd[:, i] = np.log(_branch_values(inst, sym, xu, "deriv"))
        idx = np.arange(count)
        self.cols = np.empty((count, k), dtype=np.int64)
        for i in range(k):
            self.cols[:, i] = i * k ** (depth - 1) + idx // k

    def pressure(self, phi: Potential, iters: int = 500, tol: float = 1e-13) -> PressureEstimate:
        if phi.inst is not self.inst:
            raise ValidationError("potential bound to a different instance")
        val = np.exp(phi.c_weight * self.logg + phi.c_deriv * self.logd + phi.c_const)
        v = np.ones(val.shape[0])
        log_lam = None
        gap = math.inf
        for _ in range(max(2, iters)):
            w = np.sum(val * v[self.cols], axis=1)
            total = float(np.sum(w))
            if not (math.isfinite(total) and total > 0.0):
                raise EvalDomainError("transfer iterate lost positivity; potential out of range")
            new_log = math.log(total) - math.log(float(np.sum(v)))
            if log_lam is not None:
                gap = abs(new_log - log_lam)
                log_lam = new_log
                if gap <= tol:
                    return PressureEstimate(value=new_log, method="transfer", depth=self.depth, gap=gap)
            else:
                log_lam = new_log
            v = w / float(np.max(w))
        raise ConvergenceError(
            f"power iteration gap {gap!r} still above tol={tol} after {iters} iterations"
        )


def pressure_transfer(
    phi: Potential, depth: int, iters: int = 500, tol: float = 1e-13, budget: int = WORD_BUDGET
) -> PressureEstimate:
    """log of the leading eigenvalue of the depth-d discretized operator."""
    return _TransferModel(phi.inst, depth, budget).pressure(phi, iters, tol)


# ---------------------------------------------------------------------------
# cylinder weights of the stationary measure


def _check_normalized(inst: IFSInstance):
    grid = np.linspace(0.0, 1.0, _NORMALIZATION_GRID + 1)
    total = np.zeros_like(grid)
    for br in inst.branches:
        total = total + br.weight(grid)
    residual = float(np.max(np.abs(total - 1.0)))
    if residual > _NORMALIZATION_TOL:
        raise ValidationError(
            f"weights are not normalized (residual {residual!r} > {_NORMALIZATION_TOL}); "
            "cylinder weights would not telescope"
        )


def _reference_point(inst: IFSInstance) -> float:
    return project(inst, SymbolWord((1,), periodic=True))


def _cylinder_tables(inst: IFSInstance, n: int, budget: int = WORD_BUDGET):
    """Exact depth-n cylinder masses: products of weights read along each
    word from the branch-1 fixed point.  They sum to 1 by telescoping."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    _check_normalized(inst)
    digits = _digit_table(inst.k, n, budget)
    z = np.full(digits.shape[0], _reference_point(inst))
    logq = np.zeros(digits.shape[0])
    for j in range(n - 1, -1, -1):
        sym = digits[:, j]
        logq += np.log(_branch_values(inst, sym, z, "weight"))
        z = _branch_apply(inst, sym, z)
    return digits, np.exp(logq)


def gibbs_cylinder(inst: IFSInstance, n: int, budget: int = WORD_BUDGET) -> dict:
    """Map from length-n words (1-based tuples, lexicographic) to their
    stationary cylinder weights."""
    digits, q = _cylinder_tables(inst, n, budget)
    return {
        tuple(int(s) + 1 for s in digits[r]): float(q[r])
        for r in range(digits.shape[0])
    }


def gibbs_integral(inst: IFSInstance, phi: Potential, n: int, budget: int = WORD_BUDGET) -> float:
    """Cylinder-weighted average of phi over all length-n words, phi read
    at each word's periodic extension (exact there)."""
    if phi.inst is not inst:
        raise ValidationError("potential bound to a different instance")
    digits, q = _cylinder_tables(inst, n, budget)
    vals = np.full(digits.shape[0], phi.c_const)
    if phi.c_weight != 0.0 or phi.c_deriv != 0.0:
        k = inst.k
        count = digits.shape[0]
        xstar = _cycle_points(inst, digits)
        idx = np.arange(count)
        rotated = (idx % k ** (n - 1)) * k + idx // k ** (n - 1)
        pts = xstar[rotated]  # projection of each word's shift
        first = digits[:, 0]
        if phi.c_weight != 0.0:
            vals = vals + phi.c_weight * np.log(_branch_values(inst, first, pts, "weight"))
        if phi.c_deriv != 0.0:
            vals = vals + phi.c_deriv * np.log(_branch_values(inst, first, pts, "deriv"))
    return float(np.dot(q, vals))


def pushforward_integral(inst: IFSInstance, f, n: int, budget: int = WORD_BUDGET) -> float:
    """Cylinder-weighted sum of f at projected periodic extensions —
    the symbolic side of the pushforward identity, to compare against
    integrating f against the depth-n stationary approximation."""
    digits, q = _cylinder_tables(inst, n, budget)
    xstar = _cycle_points(inst, digits)
    try:
        vals = np.asarray(f(xstar), dtype=float)
        if vals.shape != xstar.shape:
            raise ValueError
    except Exception:
        vals = np.array([float(f(float(x))) for x in xstar])
    return float(np.dot(q, vals))


def _gibbs_weights_of(inst: IFSInstance, phi: Potential, n: int, budget: int = WORD_BUDGET):
    """Cylinder weights of the Gibbs measure of phi.

    The normalized weight potential has the exact telescoping products;
    a constant potential has the uniform weights; anything else uses the
    softmax of Birkhoff sums at periodic points (normalized explicitly).
    """
    if phi.c_weight == 1.0 and phi.c_deriv == 0.0 and phi.c_const == 0.0:
        return _cylinder_tables(inst, n, budget)
    digits = _digit_table(inst.k, n, budget)
    if phi.c_weight == 0.0 and phi.c_deriv == 0.0:
        q = np.full(digits.shape[0], 1.0 / digits.shape[0])
        return digits, q
    _, _, _, logg, logd = _birkhoff_tables(inst, n, budget)
    s = phi.c_weight * logg + phi.c_deriv * logd
    s -= float(np.max(s))
    q = np.exp(s)
    q /= float(np.sum(q))
    return digits, q


def pressure_derivative_check(
    inst: IFSInstance,
    phi: Potential,
    psi: Potential,
    h: float,
    n: int,
    budget: int = WORD_BUDGET,
):
    """Two estimates of d/dt P(phi + t psi) at t=0.

    fd: central finite difference of the transfer pressure at depth n;
    gibbs: the integral of psi against the Gibbs cylinder weights of
    phi.  The derivative identity says they should agree.
    """
    if phi.inst is not inst or psi.inst is not inst:
        raise ValidationError("potentials bound to a different instance")
    if not (math.isfinite(h) and h > 0):
        raise ValidationError("step h must be positive and finite")
    model = _TransferModel(inst, n, budget)
    plus = model.pressure(phi + psi.scaled(h)).value
    minus = model.pressure(phi + psi.scaled(-h)).value
    fd = (plus - minus) / (2.0 * h)

    digits, q = _gibbs_weights_of(inst, phi, n, budget)
    k = inst.k
    count = digits.shape[0]
    vals = np.full(count, psi.c_const)
    if psi.c_weight != 0.0 or psi.c_deriv != 0.0:
        xstar = _cycle_points(inst, digits)
        idx = np.arange(count)
        rotated = (idx % k ** (n - 1)) * k + idx // k ** (n - 1)
        pts = xstar[rotated]
        first = digits[:, 0]
        if psi.c_weight != 0.0:
            vals = vals + psi.c_weight * np.log(_branch_values(inst, first, pts, "weight"))
        if psi.c_deriv != 0.0:
            vals = vals + psi.c_deriv * np.log(_branch_values(inst, first, pts, "deriv"))
    gibbs = float(np.dot(q, vals))
    return fd, gibbs


def pressure_second_difference(
    phi: Potential, psi: Potential, h: float, depth: int, budget: int = WORD_BUDGET
) -> float:
    """Central second difference of t -> P(phi + t psi) at t=0 — a crude
    curvature probe; no variance estimator is offered beyond it."""
    model = _TransferModel(phi.inst, depth, budget)
    plus = model.pressure(phi + psi.scaled(h)).value
    mid = model.pressure(phi).value
    minus = model.pressure(phi + psi.scaled(-h)).value
    return (plus - 2.0 * mid + minus) / (h * h)

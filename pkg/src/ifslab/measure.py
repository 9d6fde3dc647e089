"""Discrete measures on [0,1] and the weighted-scheme Markov operator.

The stationary measure of a validated scheme is approximated two ways:

* depth-n evolution: push a Dirac mass through the Markov operator
  nu -> sum_i (T_i)_*(g_i nu) exactly, n times.  Starting from a point
  mass at x0 the result is the full depth-n tree with one atom per
  branch word (before merging) and weights given by the products of
  weight values along the word read at x0; the operator preserves total
  mass exactly because the weights sum to 1 pointwise.
* chaos game: a single random orbit where at each step branch i is
  chosen with probability g_i(current point), then the point moves
  through T_i.  The empirical distribution of the orbit (after burn-in)
  estimates the stationary measure.

The 1-Wasserstein distance is computed exactly for discrete measures as
the integral of the CDF difference over the merged support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, EvalDomainError, ValidationError
from .rng import SplitMix64
from .system import IFSInstance

_WEIGHT_SUM_TOL = 1e-12
_DOMAIN_SLACK = 1e-9


@dataclass(frozen=True)
class EvolveConfig:
    """Atom-bookkeeping knobs for operator evolution.

    merge_tol > 0 pools atoms closer than the tolerance into their
    weighted mean; prune_eps > 0 discards atoms below the weight floor
    and renormalizes.  The defaults keep every atom exactly.
    """

    merge_tol: float = 0.0
    prune_eps: float = 0.0

    def __post_init__(self):
        if self.merge_tol < 0 or self.prune_eps < 0:
            raise ValidationError("merge_tol and prune_eps must be nonnegative")


class DiscreteMeasure:
    """Finitely supported probability measure with sorted distinct atoms."""

    __slots__ = ("positions", "weights")

    def __init__(self, positions, weights):
        positions = np.asarray(positions, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if positions.ndim != 1 or positions.shape != weights.shape:
            raise ValidationError("positions and weights must be 1-d arrays of equal length")
        if positions.size == 0:
            raise ValidationError("a measure needs at least one atom")
        if positions.size > 1 and not np.all(np.diff(positions) > 0):
            raise ValidationError("positions must be strictly increasing")
        if float(positions[0]) < 0.0 or float(positions[-1]) > 1.0:
            raise ValidationError("positions must lie in [0,1]")
        if not np.all(weights > 0):
            raise ValidationError("weights must be positive")
        total = float(np.sum(weights))
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise ValidationError(f"weights must sum to 1 (got {total!r})")
        positions.setflags(write=False)
        weights.setflags(write=False)
        self.positions = positions
        self.weights = weights

    def __len__(self):
        return self.positions.size

    def __repr__(self):
        return f"DiscreteMeasure(n_atoms={len(self)})"

    @staticmethod
    def dirac(x: float) -> "DiscreteMeasure":
        return DiscreteMeasure(np.array([float(x)]), np.array([1.0]))

    @staticmethod
    def from_atoms(positions, weights, merge_tol: float = 0.0, prune_eps: float = 0.0) -> "DiscreteMeasure":
        """Build a measure from unsorted, possibly duplicated atoms.

        Coincident positions always pool; merge_tol/prune_eps apply the
        corresponding EvolveConfig reductions; weights renormalize last.
        """
        pos, w = _normalize_atoms(
            np.asarray(positions, dtype=float), np.asarray(weights, dtype=float), merge_tol, prune_eps
        )
        return DiscreteMeasure(pos, w)

    def cdf(self, x) -> np.ndarray:
        """F(x) = mass of (-inf, x], vectorized."""
        cum = np.concatenate([[0.0], np.cumsum(self.weights)])
        return cum[np.searchsorted(self.positions, np.asarray(x, dtype=float), side="right")]


def _normalize_atoms(pos, w, merge_tol, prune_eps):
    if pos.size == 0:
        raise ValidationError("a measure needs at least one atom")
    if np.any(w < 0):
        raise ValidationError("atom weights must be nonnegative")
    order = np.argsort(pos, kind="stable")
    pos = pos[order]
    w = w[order]
    # pool exactly coincident positions
    pos, inverse = np.unique(pos, return_inverse=True)
    w = np.bincount(inverse, weights=w, minlength=pos.size)
    if merge_tol > 0 and pos.size > 1:
        new_cluster = np.empty(pos.size, dtype=bool)
        new_cluster[0] = True
        new_cluster[1:] = np.diff(pos) >= merge_tol
        cluster = np.cumsum(new_cluster) - 1
        n = int(cluster[-1]) + 1
        mass = np.bincount(cluster, weights=w, minlength=n)
        first = pos[new_cluster]
        centers = np.bincount(cluster, weights=w * pos, minlength=n)
        # a cluster of zero total weight keeps its first position
        safe = mass > 0
        merged = first.copy()
        merged[safe] = centers[safe] / mass[safe]
        pos, w = merged, mass
    keep = w > 0
    if prune_eps > 0:
        keep &= w >= prune_eps
    if not np.any(keep):
        raise ValidationError("pruning removed every atom")
    pos, w = pos[keep], w[keep]
    w = w / float(np.sum(w))
    return pos, w


def markov_step(inst: IFSInstance, nu: DiscreteMeasure, config: EvolveConfig = None) -> DiscreteMeasure:
    """One application of nu -> sum_i (T_i)_*(g_i nu)."""
    config = config or EvolveConfig()
    xs = nu.positions
    all_pos = []
    all_w = []
    for i, br in enumerate(inst.branches, start=1):
        g = np.broadcast_to(np.asarray(br.weight(xs), dtype=float), xs.shape)
        bad = np.nonzero(~(g > 0))[0]
        if bad.size:
            j = int(bad[0])
            raise EvalDomainError(
                f"weight {i} evaluated to {g[j]!r} at atom x={xs[j]!r}; weights must stay positive"
            )
        t = np.broadcast_to(np.asarray(br.map(xs), dtype=float), xs.shape)
        if float(np.min(t)) < -_DOMAIN_SLACK or float(np.max(t)) > 1.0 + _DOMAIN_SLACK:
            raise ValidationError(f"map {i} sends an atom outside [0,1]; validate the scheme first")
        all_pos.append(np.clip(t, 0.0, 1.0))
        all_w.append(g * nu.weights)
    return DiscreteMeasure.from_atoms(
        np.concatenate(all_pos), np.concatenate(all_w), config.merge_tol, config.prune_eps
    )


def depth_n_measure(
    inst: IFSInstance,
    x0: float,
    n: int,
    config: EvolveConfig = None,
    atom_budget: int = 1 << 24,
) -> DiscreteMeasure:
    """Exact depth-n image of the point mass at x0 under the operator.

    Raises BudgetError before any step that would exceed atom_budget
    atoms prior to merging.
    """
    if n < 0:
        raise ValidationError("depth must be nonnegative")
    if not 0.0 <= x0 <= 1.0:
        raise ValidationError("x0 must lie in [0,1]")
    mu = DiscreteMeasure.dirac(x0)
    for _ in range(n):
        if len(mu) * inst.k > atom_budget:
            raise BudgetError(
                f"next step needs {len(mu) * inst.k} atoms (> budget {atom_budget}); "
                "raise the budget or set merge_tol/prune_eps"
            )
        mu = markov_step(inst, mu, config)
    return mu


def chaos_game(
    inst: IFSInstance,
    x0: float,
    burn_in: int,
    samples: int,
    seed: int,
) -> DiscreteMeasure:
    """Empirical measure of one weight-driven random orbit.

    Branches are selected by inverse CDF on (g_1(x), ..., g_k(x)) in
    branch order, using the splitmix64 stream for the given seed, so
    (x0, burn_in, samples, seed) fully determines the output.
    """
    n_samples = int(samples)
    if n_samples <= 0:
        raise ValidationError("samples must be positive")
    if burn_in < 0:
        raise ValidationError("burn_in must be nonnegative")
    gens = SplitMix64(seed)
    maps = [br.map.scalar for br in inst.branches]
    weights = [br.weight.scalar for br in inst.branches]
    k = inst.k
    x = float(x0)
    samples = np.empty(n_samples, dtype=float)
    try:
        for step in range(-burn_in, n_samples):
            u = gens.uniform()
            acc = 0.0
            chosen = k - 1
            for i in range(k):
                gi = weights[i](x)
                if not gi > 0:
                    raise EvalDomainError(
                        f"weight {i + 1} evaluated to {gi!r} at x={x!r}; weights must stay positive"
                    )
                acc += gi
                if u < acc:
                    chosen = i
                    break
            x = maps[chosen](x)
            if x < -_DOMAIN_SLACK or x > 1.0 + _DOMAIN_SLACK:
                raise ValidationError(
                    f"map {chosen + 1} left [0,1] at step {step}; validate the scheme first"
                )
            x = min(1.0, max(0.0, x))
            if step >= 0:
                samples[step] = x
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise EvalDomainError(f"orbit evaluation failed: {exc}") from exc
    pos, counts = np.unique(samples, return_counts=True)
    return DiscreteMeasure(pos, counts / float(n_samples))


def integrate(nu: DiscreteMeasure, f) -> float:
    """Integral of f against nu; f may be scalar-only or vectorized."""
    try:
        vals = np.asarray(f(nu.positions), dtype=float)
        if vals.shape != nu.positions.shape:
            raise ValueError
    except Exception:
        vals = np.array([float(f(float(x))) for x in nu.positions])
    return float(np.dot(nu.weights, vals))


def w1_distance(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Exact 1-Wasserstein distance: integral of |F_mu - F_nu|."""
    pts = np.union1d(mu.positions, nu.positions)
    if pts.size == 1:
        return 0.0
    left = pts[:-1]
    return float(np.sum(np.abs(mu.cdf(left) - nu.cdf(left)) * np.diff(pts)))


def stationarity_residual(inst: IFSInstance, nu: DiscreteMeasure, test_fns) -> float:
    """max_f |int f d(S nu) - int f d nu| over the given test functions.

    int f d(S nu) is computed exactly as sum_i int g_i (f o T_i) d nu,
    with no atom merging, so this measures stationarity, not bookkeeping.
    """
    xs = nu.positions
    images = []
    gw = []
    for br in inst.branches:
        t = np.broadcast_to(np.asarray(br.map(xs), dtype=float), xs.shape)
        g = np.broadcast_to(np.asarray(br.weight(xs), dtype=float), xs.shape)
        images.append(np.clip(t, 0.0, 1.0))
        gw.append(g * nu.weights)
    worst = 0.0
    for f in test_fns:
        lhs = 0.0
        for t, w in zip(images, gw):
            try:
                vals = np.asarray(f(t), dtype=float)
                if vals.shape != t.shape:
                    raise ValueError
            except Exception:
                vals = np.array([float(f(float(x))) for x in t])
            lhs += float(np.dot(w, vals))
        worst = max(worst, abs(lhs - integrate(nu, f)))
    return worst

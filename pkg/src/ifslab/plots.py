"""Matplotlib renderers for report output (headless Agg backend).

Each renderer draws one figure to a file path and returns the path;
nothing here affects the numeric pipeline, so figures carry whatever
rows/diagnostics the caller already computed.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first

_DPI = 130


def render_measure_figure(measure, path: str, title: str = "stationary measure") -> str:
    """Atom weights as vertical strokes plus the cumulative distribution."""
    fig, (ax_w, ax_c) = plt.subplots(2, 1, figsize=(7.2, 5.4), sharex=True)
    ax_w.vlines(measure.positions, 0.0, measure.weights, lw=0.8)
    ax_w.set_ylabel("atom weight")
    ax_w.set_title(f"{title} ({len(measure)} atoms)")
    cum = measure.weights.cumsum()
    ax_c.step(measure.positions, cum, where="post", lw=1.2)
    ax_c.set_xlabel("x")
    ax_c.set_ylabel("cumulative mass")
    ax_c.set_xlim(0.0, 1.0)
    ax_c.set_ylim(0.0, 1.05)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_sweep_figure(rows, path: str, title: str = "parameter sweep") -> str:
    """Quantity against the parameter; failed rows marked on the axis."""
    good = [r for r in rows if not r.error and math.isfinite(r.value)]
    bad = [r for r in rows if r.error or not math.isfinite(r.value)]
    fig, ax = plt.subplots(figsize=(7.2, 4.4))
    if good:
        xs = [r.param for r in good]
        ys = [r.value for r in good]
        ax.plot(xs, ys, "-o", ms=2.5, lw=1.0)
        errs = [r.err_estimate for r in good]
        if all(math.isfinite(e) for e in errs) and max(errs, default=0.0) > 0.0:
            lo = [y - e for y, e in zip(ys, errs)]
            hi = [y + e for y, e in zip(ys, errs)]
            ax.fill_between(xs, lo, hi, alpha=0.25, lw=0)
    if bad:
        for r in bad:
            ax.axvline(r.param, color="crimson", lw=0.6, alpha=0.5)
    ax.set_xlabel("parameter")
    ax.set_ylabel("value")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_diagnostic_figure(diag, path: str, title: str = "difference-quotient growth") -> str:
    """Log-log quotients with the fitted growth line and the verdict."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    hs = list(diag.ladder)
    qs = [max(q, 1e-300) for q in diag.quotients]
    ax.loglog(hs, qs, "o-", ms=4, lw=1.0, label="max quotient over fan")
    if math.isfinite(diag.exponent) and len(hs) >= 2:
        anchor_h = hs[len(hs) // 2]
        anchor_q = qs[len(qs) // 2]
        fit = [anchor_q * (h / anchor_h) ** diag.exponent for h in hs]
        ax.loglog(hs, fit, "--", lw=0.9, label=f"slope {diag.exponent:+.3f}")
    if diag.err_estimate > 0.0:
        noise = [diag.err_estimate / h**diag.order for h in hs]
        ax.loglog(hs, noise, ":", lw=0.9, label="noise scale")
    ax.set_xlabel("step h")
    ax.set_ylabel(f"|order-{diag.order} quotient|")
    ax.set_title(f"{title}: {diag.verdict} (probe {diag.probe:g})")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path

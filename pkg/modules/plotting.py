"""Figures for sweep and ratio tables."""
import logging
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from modules.errors import ConfigError  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams["font.size"] = 9
plt.rcParams["savefig.bbox"] = "tight"


def _style(ax):
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    ax.grid(alpha=0.3)


def plot_sweep(rows, output_path, fit=None):
    """Logical error rate against p, one curve per L, with Wilson error bars.

    Args:
        rows: sweep rows (dicts with L, p, rate_any, ci_low, ci_high)
        output_path: image file to write
        fit: optional ThresholdFit whose p_th is marked
    """
    if not rows:
        raise ConfigError("nothing to plot: the sweep table is empty")
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for L in sorted({r["L"] for r in rows}):
        curve = sorted((r for r in rows if r["L"] == L), key=lambda r: r["p"])
        ps = [r["p"] for r in curve]
        rates = [r["rate_any"] for r in curve]
        errors = [
            [r["rate_any"] - r["ci_low"] for r in curve],
            [r["ci_high"] - r["rate_any"] for r in curve],
        ]
        ax.errorbar(ps, rates, yerr=errors, marker="o", markersize=3, capsize=2, label=f"L={L}")
    if fit is not None:
        ax.axvline(fit.p_th, color="grey", linestyle="--", linewidth=1, label=f"p_th={fit.p_th:.4f}")
    first = rows[0]
    ax.set_title(f"ell={first['ell']} {first['deformation']} eta={first['eta']}")
    ax.set_xlabel("physical error rate p")
    ax.set_ylabel("logical error rate")
    ax.legend(frameon=False)
    _style(ax)
    fig.savefig(output_path, dpi=200)
    plt.close(fig)
    logger.info("✅ Wrote sweep plot to %s", output_path)
    return output_path


def plot_ratios(rows, output_path):
    """Ratio to the reference code against bias, one curve per (ell, deformation)."""
    if not rows:
        raise ConfigError("nothing to plot: the ratio table is empty")
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    keys = sorted({(r["ell"], r["deformation"]) for r in rows})
    finite_etas = [float(r["eta"]) for r in rows if not math.isinf(float(r["eta"]))]
    for ell, deformation in keys:
        curve = sorted(
            (r for r in rows if (r["ell"], r["deformation"]) == (ell, deformation)),
            key=lambda r: float(r["eta"]),
        )
        curve = [r for r in curve if r["ratio"] is not None and not math.isinf(float(r["eta"]))]
        etas = [float(r["eta"]) for r in curve]
        ratios = [r["ratio"] for r in curve]
        ax.plot(etas, ratios, marker="o", markersize=3, label=f"ell={ell} {deformation}")
    ax.axhline(1.0, color="grey", linewidth=0.8)
    if finite_etas:
        ax.set_xscale("log")
    ax.set_xlabel("bias eta")
    ax.set_ylabel("rate / reference rate")
    ax.legend(frameon=False)
    _style(ax)
    fig.savefig(output_path, dpi=200)
    plt.close(fig)
    logger.info("✅ Wrote ratio plot to %s", output_path)
    return output_path

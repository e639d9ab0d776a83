"""Deterministic SVG figures from the CSV artifacts.

Rendering goes through matplotlib's SVG backend with a fixed hash salt and no
date metadata, so identical CSV input produces byte-identical SVG output and
golden-file comparisons stay meaningful.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["PlotError", "plot_demod_csv", "plot_sweep_csv"]

_SAVEFIG_KW = dict(format="svg", metadata={"Date": None})
_COLORS = {"u1": "tab:blue", "u2": "tab:orange", "u3": "tab:green"}

matplotlib.rcParams["svg.hashsalt"] = "ctsdm"

class PlotError(ValueError):
    """CSV content does not match the expected plotting schema."""

def _read_csv(path, expected_header):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PlotError(f"{path}: empty file") from None
        if header != expected_header:
            raise PlotError(
                f"{path}: expected columns {expected_header}, found {header}")
        rows = list(reader)
    if not rows:
        raise PlotError(f"{path}: no data rows")
    return rows

def plot_demod_csv(csv_path, svg_path) -> None:
    """Two stacked panels: the two filtered estimates, then their difference."""
    rows = _read_csv(csv_path, ["t", "z_hat", "z_hat_sd", "error"])
    try:
        data = np.array(rows, dtype=np.float64)
    except ValueError as exc:
        raise PlotError(f"{csv_path}: non-numeric row ({exc})") from exc
    t, z_hat, z_hat_sd, err = data.T

    fig, (ax_top, ax_bot) = plt.subplots(
        2, 1, figsize=(8.0, 5.0), sharex=True, constrained_layout=True)
    ax_top.plot(t, z_hat_sd, color="tab:orange", lw=0.9, label="filtered bitstream")
    ax_top.plot(t, z_hat, color="tab:blue", lw=0.9, ls="--", label="filtered input")
    ax_top.set_ylabel("estimate")
    ax_top.legend(loc="upper right", fontsize=8)
    ax_top.grid(True, alpha=0.3)
    ax_bot.plot(t, err, color="tab:red", lw=0.8)
    ax_bot.set_xlabel("t")
    ax_bot.set_ylabel("difference")
    ax_bot.grid(True, alpha=0.3)
    fig.savefig(svg_path, **_SAVEFIG_KW)
    plt.close(fig)

def plot_sweep_csv(csv_path, svg_path) -> None:
    """Log-log error-versus-1/N series with least-squares slopes in the legend."""
    from .analysis import fit_loglog_slope

    rows = _read_csv(csv_path, ["input_label", "N", "l2_error"])
    series = {}
    for row in rows:
        if len(row) != 3:
            raise PlotError(f"{csv_path}: malformed row {row}")
        label, n_str, err_str = row
        try:
            series.setdefault(label, []).append((int(n_str), float(err_str)))
        except ValueError as exc:
            raise PlotError(f"{csv_path}: non-numeric row ({exc})") from exc

    fig, ax = plt.subplots(figsize=(6.4, 4.8), constrained_layout=True)
    for label in sorted(series):
        pts = sorted(series[label])
        inv_n = np.array([1.0 / n for n, _ in pts])
        errs = np.array([e for _, e in pts])
        color = _COLORS.get(label)
        if len(pts) >= 3 and np.all(errs > 0):
            slope, _ = fit_loglog_slope(pts)
            fit = 10.0 ** (np.polyval(
                np.polyfit(np.log10(inv_n), np.log10(errs), 1), np.log10(inv_n)))
            ax.loglog(inv_n, fit, ls="--", lw=0.8, color=color)
            text = f"{label} (slope {slope:.2f})"
        else:
            text = label
        ax.loglog(inv_n, errs, "o-", lw=1.0, ms=4, color=color, label=text)
    ax.set_xlabel("1/N")
    ax.set_ylabel("L2 error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.savefig(svg_path, **_SAVEFIG_KW)
    plt.close(fig)

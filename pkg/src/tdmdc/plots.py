"""Static SVG figures for sweep diagrams and MAC tables.

All figures are rendered headless and with a fixed hash salt and no
embedded creation date, so repeated runs of the same configuration produce
byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "tdmdc"

import matplotlib.pyplot as plt
import numpy as np

from tdmdc.modal import FLAG_NEW, FLAG_STABLE_ALL, FLAG_STABLE_FREQ

_FLAG_STYLE = {
    FLAG_NEW: dict(marker="o", facecolors="none", edgecolors="0.6", label="new"),
    FLAG_STABLE_FREQ: dict(marker="^", facecolors="none", edgecolors="tab:orange", label="stable f"),
    FLAG_STABLE_ALL: dict(marker="o", facecolors="tab:blue", edgecolors="tab:blue", label="stable f+z"),
}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _split_by_flag(diagram):
    groups = {flag: ([], [], []) for flag in _FLAG_STYLE}
    for tau, mode, flag in diagram.entries:
        taus, freqs, damps = groups[flag]
        taus.append(tau)
        freqs.append(mode.freq_hz)
        damps.append(mode.damping)
    return groups


def plot_diagram_freq(diagram, path, ref_freqs=None):
    """Frequency stabilization diagram: delay order over frequency.

    Reference frequencies, when given, appear as dashed vertical lines.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    if ref_freqs is not None:
        for f in np.atleast_1d(ref_freqs):
            ax.axvline(f, color="0.8", linestyle="--", linewidth=0.8, zorder=0)
    for flag, (taus, freqs, _) in _split_by_flag(diagram).items():
        if taus:
            ax.scatter(freqs, taus, s=14, **_FLAG_STYLE[flag])
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("delay order")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_diagram_damp(diagram, path, ref_damps=None):
    """Damping estimates over delay order, dashed lines at references."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    if ref_damps is not None:
        for z in np.atleast_1d(ref_damps):
            ax.axhline(z, color="0.8", linestyle="--", linewidth=0.8, zorder=0)
    for flag, (taus, _, damps) in _split_by_flag(diagram).items():
        if taus:
            ax.scatter(taus, damps, s=14, **_FLAG_STYLE[flag])
    ax.set_xlabel("delay order")
    ax.set_ylabel("damping ratio")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_mac(mac_matrix, path):
    """MAC heatmap with per-cell values."""
    mac_matrix = np.asarray(mac_matrix)
    n_est, n_ref = mac_matrix.shape
    fig, ax = plt.subplots(figsize=(1.0 + 0.7 * n_ref, 1.0 + 0.7 * n_est))
    im = ax.imshow(mac_matrix, vmin=0.0, vmax=1.0, cmap="viridis", origin="lower")
    for i in range(n_est):
        for j in range(n_ref):
            v = mac_matrix[i, j]
            ax.text(
                j,
                i,
                f"{v:.2f}",
                ha="center",
                va="center",
                fontsize=7,
                color="white" if v < 0.6 else "black",
            )
    ax.set_xticks(range(n_ref), [str(j + 1) for j in range(n_ref)])
    ax.set_yticks(range(n_est), [str(i + 1) for i in range(n_est)])
    ax.set_xlabel("reference mode")
    ax.set_ylabel("estimated mode")
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    _save(fig, path)

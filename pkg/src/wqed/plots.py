"""Optional PNG rendering of CLI outputs (opt-in via --plot).

Plots are produced from the already-written CSV tables, never from
in-memory state, so enabling them cannot change any shipped artifact.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["render"]


def _read_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(c) for c in row] for row in reader]
    return header, np.array(rows)


def _save(fig, outdir, name):
    path = os.path.join(outdir, name)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def _plot_spectrum(outdir):
    path = os.path.join(outdir, "spectrum.csv")
    if not os.path.exists(path):
        return
    _, data = _read_csv(path)
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(data[:, 0], data[:, 1])
    ax.set_xlabel("omega")
    ax.set_ylabel("intensity")
    _save(fig, outdir, "spectrum.png")


def _plot_populations(outdir):
    path = os.path.join(outdir, "populations.csv")
    if not os.path.exists(path):
        return
    header, data = _read_csv(path)
    fig, ax = plt.subplots(figsize=(6, 3))
    for i, label in enumerate(header[1:], start=1):
        ax.plot(data[:, 0], data[:, i], label=label)
    ax.set_xlabel("t")
    ax.legend()
    _save(fig, outdir, "populations.png")


def _plot_i1(outdir):
    path = os.path.join(outdir, "i1.csv")
    if not os.path.exists(path):
        return
    _, data = _read_csv(path)
    fig, ax = plt.subplots(figsize=(4, 3))
    ax.bar(data[:, 0], data[:, 1])
    ax.set_xlabel("sideband n")
    ax.set_ylabel("filtered intensity")
    _save(fig, outdir, "i1.png")


def _plot_g2_grid(outdir):
    path = os.path.join(outdir, "g2.csv")
    if not os.path.exists(path):
        return
    header, data = _read_csv(path)
    fig, ax = plt.subplots(figsize=(5, 3))
    if header[0] == "t":
        for i, label in enumerate(header[1:], start=1):
            ax.plot(data[:, 0], data[:, i], label=label)
        ax.set_xlabel("t")
        ax.legend()
    else:
        n1 = np.unique(data[:, 0]).astype(int)
        n2 = np.unique(data[:, 1]).astype(int)
        grid = data[:, 2].reshape(len(n1), len(n2))
        im = ax.imshow(np.log10(np.maximum(grid, 1e-12)),
                       origin="lower",
                       extent=(n2[0] - 0.5, n2[-1] + 0.5,
                               n1[0] - 0.5, n1[-1] + 0.5))
        fig.colorbar(im, ax=ax, label="log10 g2")
        ax.set_xlabel("n2")
        ax.set_ylabel("n1")
    _save(fig, outdir, "g2.png")


def _plot_spectra(outdir):
    path = os.path.join(outdir, "spectra.csv")
    if not os.path.exists(path):
        return
    header, data = _read_csv(path)
    fig, ax = plt.subplots(figsize=(6, 3))
    for i, label in enumerate(header[1:], start=1):
        ax.plot(data[:, 0], data[:, i], label=label)
    ax.set_xlabel("omega")
    ax.legend()
    _save(fig, outdir, "spectra.png")


def _plot_timebin(outdir):
    path = os.path.join(outdir, "timebin.csv")
    if not os.path.exists(path):
        return
    _, data = _read_csv(path)
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(data[:, 0], data[:, 1], label="pop1")
    ax.plot(data[:, 0], data[:, 2], label="pop2")
    ax.set_xlabel("gamma t")
    ax.legend()
    _save(fig, outdir, "timebin.png")


def _plot_lattice(outdir):
    path = os.path.join(outdir, "density.csv")
    if not os.path.exists(path):
        return
    _, data = _read_csv(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(data[:, 1:], aspect="auto", origin="lower",
                   extent=(1, data.shape[1] - 1, data[0, 0], data[-1, 0]))
    fig.colorbar(im, ax=ax, label="P_j")
    ax.set_xlabel("cavity j")
    ax.set_ylabel("t J")
    _save(fig, outdir, "density.png")


_BY_KIND = {
    "floquet-optimize": (_plot_spectrum,),
    "emit-spectrum": (_plot_populations, _plot_spectrum),
    "spectra": (_plot_spectra,),
    "correlations": (_plot_i1, _plot_g2_grid),
    "g2-dynamics": (_plot_g2_grid,),
    "mps-run": (_plot_timebin,),
    "lattice-run": (_plot_lattice,),
}


def render(kind: str, outdir: str) -> None:
    """Render the standard plots for one scenario kind."""
    for fn in _BY_KIND.get(kind, ()):
        fn(outdir)

"""Matplotlib renderings of the figure tables (PNG, headless backend)."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SCHEME_LABEL = {"ramsey": "Ramsey + asymmetric drive", "dd": "spin echo / DD"}


def _grid(table, xcol, ycol, zcol):
    xs = sorted({r[xcol] for r in table.rows})
    ys = sorted({r[ycol] for r in table.rows})
    z = np.full((len(ys), len(xs)), np.nan)
    xi = {v: i for i, v in enumerate(xs)}
    yi = {v: i for i, v in enumerate(ys)}
    for r in table.rows:
        z[yi[r[ycol]], xi[r[xcol]]] = r[zcol]
    return np.array(xs), np.array(ys), z


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_fig4(table, path):
    x, y, z = _grid(table, "dz_over_R", "normalized_current", "depolarization_ratio")
    fig, ax = plt.subplots(figsize=(5, 4))
    m = ax.pcolormesh(x, y, z, shading="nearest", cmap="viridis")
    fig.colorbar(m, ax=ax, label="depolarization / thermal polarization")
    ax.set_xlabel(r"$r\cos\theta / R$")
    ax.set_ylabel(r"$\gamma\mu_0 I_{RF}/\tilde\Gamma R$")
    return _save(fig, path)


def plot_fig5(table, path):
    x, y, z = _grid(table, "z_rf", "normalized_current", "normalized_signal")
    fig, ax = plt.subplots(figsize=(5, 4))
    m = ax.pcolormesh(x * 1e6, y, z, shading="nearest", cmap="magma")
    fig.colorbar(m, ax=ax, label=r"$|\Delta\omega_{FQ}|/\Delta\omega_{FQ,max}$")
    ax.set_yscale("log")
    ax.set_xlabel(r"$z_{RF}$ ($\mu$m)")
    ax.set_ylabel(r"$\gamma\mu_0 I_{RF}/\tilde\Gamma R$")
    return _save(fig, path)


def _finite(rows, xkey, ykey):
    pts = [(r[xkey], r[ykey]) for r in rows if np.isfinite(r[ykey])]
    return np.array(pts).T if pts else (np.array([]), np.array([]))


def plot_fig6(table, path):
    fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharey=True)
    for ax, scheme in zip(axes, ("ramsey", "dd")):
        for L in sorted({r["loop_side"] for r in table.rows}):
            x, y = _finite(table.where(scheme=scheme, loop_side=L), "h", "rho_min_cm3")
            ax.loglog(x * 1e6, y, "o-", ms=4, label=f"L = {L * 1e6:g} um")
        ax.set_title(SCHEME_LABEL[scheme])
        ax.set_xlabel(r"$h$ ($\mu$m)")
    axes[0].set_ylabel(r"$\rho_{min}$ (cm$^{-3}$)")
    axes[0].legend()
    return _save(fig, path)


def plot_fig7(table, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    for scheme in ("ramsey", "dd"):
        x, y = _finite(table.where(scheme=scheme), "b_ex", "rho_min_cm3")
        ax.semilogy(x * 1e3, y, "o", ms=4, label=SCHEME_LABEL[scheme])
    ax.set_xlabel(r"$B_{ex}$ (mT)")
    ax.set_ylabel(r"$\rho_{min}$ (cm$^{-3}$)")
    ax.legend()
    return _save(fig, path)


def plot_fig8(table, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    for n in sorted({r["n"] for r in table.rows}):
        x, y = _finite(table.where(n=n), "b_ex", "rho_min_cm3")
        ax.semilogy(x * 1e3, y, "o-", ms=3, label=f"n = {n}")
    ax.axvline(4.0, color="0.6", ls="--", lw=1)
    ax.text(4.12, 0.35, "device guideline", transform=ax.get_xaxis_transform(),
            fontsize=7, color="0.4", rotation=90, va="bottom")
    ax.set_xlabel(r"$B_{ex}$ (mT)")
    ax.set_ylabel(r"$\rho_{min}$ (cm$^{-3}$)")
    ax.legend(ncol=2)
    return _save(fig, path)


def plot_fig10(table, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    styles = {"ramsey": "o-", "dd": "s--"}
    for p in sorted({r["placement"] for r in table.rows}):
        for scheme in ("ramsey", "dd"):
            x, y = _finite(table.where(placement=p, scheme=scheme), "width", "n_min")
            if len(x):
                ax.loglog(x * 1e6, y, styles[scheme], ms=3, label=f"{p}, {scheme}")
    ax.set_xlabel(r"$l$ ($\mu$m)")
    ax.set_ylabel(r"$N_{min}$")
    ax.legend()
    return _save(fig, path)


PLOTTERS = {"fig4": plot_fig4, "fig5": plot_fig5, "fig6": plot_fig6, "fig7": plot_fig7,
            "fig8": plot_fig8, "fig10": plot_fig10}

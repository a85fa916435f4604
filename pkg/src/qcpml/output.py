"""CSV and SVG emission for solves and studies.

CSV schemas are part of the tool's interface and are written with
full-precision shortest round-trip floats, so identical runs produce
byte-identical files.  Plots are self-contained single-file SVGs rendered
through the Agg backend.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "write_field_csv",
    "write_study_csv",
    "write_spectrum_csv",
    "write_curves_csv",
    "write_decay_csv",
    "plot_log_error",
    "plot_heatmap",
    "plot_spectrum",
]

FIELD_HEADER = "x,y,re_u,im_u"
STUDY_HEADER = "R,h,err_l2,err_h1,ratio,pivot,seconds"
SPECTRUM_HEADER = "re_mu,im_mu,dist_to_curve,converged"


def _fmt(v):
    return repr(float(v))


def _ensure_dir(path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)


def write_field_csv(path, mesh, grid):
    """Nodal field values as ``x,y,re_u,im_u`` rows in x-major order."""
    _ensure_dir(path)
    with open(path, "w") as fh:
        fh.write(FIELD_HEADER + "\n")
        for i, x in enumerate(mesh.x_nodes):
            for j, y in enumerate(mesh.y_nodes):
                u = grid[i, j]
                fh.write(
                    f"{_fmt(x)},{_fmt(y)},{_fmt(u.real)},{_fmt(u.imag)}\n"
                )


def write_study_csv(path, records):
    """Study records as ``R,h,err_l2,err_h1,ratio,pivot,seconds`` rows."""
    _ensure_dir(path)
    with open(path, "w") as fh:
        fh.write(STUDY_HEADER + "\n")
        for rec in records:
            fh.write(
                ",".join(
                    _fmt(v)
                    for v in (rec.R, rec.h, rec.err_l2, rec.err_h1,
                              rec.ratio, rec.pivot, rec.seconds)
                )
                + "\n"
            )


def write_spectrum_csv(path, rows):
    """Eigenvalue rows as ``re_mu,im_mu,dist_to_curve,converged``."""
    _ensure_dir(path)
    with open(path, "w") as fh:
        fh.write(SPECTRUM_HEADER + "\n")
        for mu, dist, conv in rows:
            fh.write(
                f"{_fmt(mu.real)},{_fmt(mu.imag)},{_fmt(dist)},{int(conv)}\n"
            )


def write_curves_csv(path, curves):
    """Sampled essential-spectrum curves as ``nu,xi,re_mu,im_mu`` rows."""
    _ensure_dir(path)
    with open(path, "w") as fh:
        fh.write("nu,xi,re_mu,im_mu\n")
        for curve in curves:
            for xi, mu in zip(curve.xi, curve.points):
                fh.write(
                    f"{_fmt(curve.nu)},{_fmt(xi)},{_fmt(mu.real)},{_fmt(mu.imag)}\n"
                )


def write_decay_csv(path, x, amp):
    """Per-mode amplitude profile along the axis as ``x,abs_a`` rows."""
    _ensure_dir(path)
    with open(path, "w") as fh:
        fh.write("x,abs_a\n")
        for xi, ai in zip(x, amp):
            fh.write(f"{_fmt(xi)},{_fmt(ai)}\n")


def plot_log_error(path, records, fit=None, title="PML truncation error"):
    """Log-linear plot of study errors against R, with the fitted decay."""
    _ensure_dir(path)
    R = np.array([rec.R for rec in records])
    e2 = np.array([rec.err_l2 for rec in records])
    e1 = np.array([rec.err_h1 for rec in records])
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.semilogy(R, e2, "o-", label="L2 on x < r")
    ax.semilogy(R, e1, "s-", label="H1 on x < r")
    if fit is not None and not fit.inconclusive:
        ax.semilogy(R, np.exp(fit.intercept - fit.rate * R), "k--",
                    label=f"fit: exp(-{fit.rate:.3f} R)")
    ax.set_xlabel("R")
    ax.set_ylabel("relative error")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_heatmap(path, mesh, magnitude, title="|u|"):
    """Magnitude heatmap of a nodal grid over the parameter rectangle."""
    _ensure_dir(path)
    fig, ax = plt.subplots(figsize=(7.0, 2.8))
    # rasterize the dense mesh layer so the SVG stays small and self-contained
    pc = ax.pcolormesh(mesh.x_nodes, mesh.y_nodes,
                       np.asarray(magnitude).T, shading="gouraud",
                       rasterized=True)
    ax.axvline(mesh.r, color="w", lw=0.8, ls="--")
    fig.colorbar(pc, ax=ax, label=title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_spectrum(path, eigenvalues, curves, shifts=()):
    """Computed eigenvalues over the analytic essential-spectrum curves."""
    _ensure_dir(path)
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for curve in curves:
        ax.plot(curve.points.real, curve.points.imag, "-", color="0.6", lw=1.0)
        ax.plot([curve.nu], [0.0], "k.", ms=4)
    ev = np.asarray(eigenvalues, dtype=complex)
    if ev.size:
        ax.plot(ev.real, ev.imag, "rx", ms=7, label="pencil eigenvalues")
    for s in shifts:
        ax.plot([s.real], [s.imag], "b+", ms=8)
    ax.set_xlabel("Re mu")
    ax.set_ylabel("Im mu")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)

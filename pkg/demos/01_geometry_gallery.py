"""
Geometry gallery
================

The built-in waveguide geometries, how fast their metrics settle to the
identity along the axis, and what the complex scaled curve looks like.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from qcpml import LogShiftMap, PhiPsiMap, StraightMap
from qcpml.geometry import ExpDecayProfile, InvLogProfile, OneProfile, PowerDecayProfile
from qcpml.scaling import PmlProfile, scaled_point

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

# -- the physical shapes ----------------------------------------------------
# Each geometry maps the parameter strip (-L0, inf) x (0, 1) onto a 2D
# domain whose walls flatten out at infinity.

families = {
    "straight": StraightMap(),
    "log shift": LogShiftMap(),
    "phi = 1 + e^-x": PhiPsiMap(phi=ExpDecayProfile(), psi=OneProfile()),
    "psi = 1 + (x+1)^-2": PhiPsiMap(phi=OneProfile(), psi=PowerDecayProfile(s=2.0)),
    "phi = 1 + 1/log(x+2)": PhiPsiMap(phi=InvLogProfile(), psi=OneProfile()),
}

fig, axes = plt.subplots(1, len(families), figsize=(16, 2.8), sharey=False)
x = np.linspace(-0.4, 12.0, 300)
for ax, (label, geom) in zip(axes, families.items()):
    for y in (0.0, 1.0):
        zeta, eta = geom.eval_map(x, np.full_like(x, y))
        ax.plot(zeta, eta, "k-")
    ax.set_title(label, fontsize=9)
    ax.set_xlabel("zeta")
axes[0].set_ylabel("eta")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "geometry_shapes.svg"))
print("wrote geometry_shapes.svg")

# -- metric decay toward the identity ---------------------------------------
# The solver relies on g(x, .) -> Id as x grows; the rate differs wildly
# between families (the inverse-log family is deliberately glacial).

fig, ax = plt.subplots(figsize=(5.5, 4))
xs = np.geomspace(1.0, 1e4, 60)
for label, geom in families.items():
    dev = geom.decay_profile(xs)
    if np.any(dev > 0):
        ax.loglog(xs, np.maximum(dev, 1e-18), label=label)
ax.set_xlabel("x")
ax.set_ylabel("max |g(x, y) - Id|")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(os.path.join(OUT, "metric_decay.svg"))
print("wrote metric_decay.svg")

# -- the scaled curve ---------------------------------------------------------
# Complex scaling bends the axial coordinate into the upper half-plane
# beyond x = r; the bend angle is arg(1 + lambda).

fig, ax = plt.subplots(figsize=(5.5, 3))
x = np.linspace(0.0, 10.0, 400)
for lam in (0.25j, 0.5j, 0.5 + 0.5j):
    z = scaled_point(PmlProfile(lam=lam, r=2.0), x)
    ax.plot(z.real, z.imag, label=f"lambda = {lam}")
ax.axvline(2.0, color="0.7", ls="--", lw=0.8)
ax.set_xlabel("Re z")
ax.set_ylabel("Im z")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(os.path.join(OUT, "scaled_curve.svg"))
print("wrote scaled_curve.svg")

"""
Essential spectrum of the scaled operator
=========================================

With a complex scaling parameter the continuous spectrum rotates off the
real axis into rays mu = nu + (1 + lambda)^{-2} xi^2 hanging from each
transverse threshold nu.  On a long truncated strip the discrete pencil
eigenvalues line up along those rays; eigenvalues that stay put as lambda
varies would be resonances instead.
"""

import math
from pathlib import Path

from qcpml import StraightMap, harness
from qcpml.scaling import PmlProfile

OUT = Path(__file__).parent / "output"

lam = 0.5j
nu1 = math.pi**2
shifts = [nu1 + t * (1.0 + lam) ** (-2) for t in (0.5, 2.0)]

cfg = harness.StudyConfig(
    geometry=StraightMap(bounded_length=2.0),
    profile=PmlProfile(lam=lam, r=2.0),
    mu0=20.0,
    hx=1.0 / 16,
    ny=16,
    source_kind="modeband",
    source_params=dict(k=1, x0=0.0, x1=1.0),
    study="spectrum",
    R=20.0,
    shifts=shifts,
    eig_count=3,
    out_dir=OUT / "spectrum",
)

scan = harness.run_spectrum(cfg)
print(f"ray angle -2 arg(1 + lambda) = {-2 * math.degrees(math.atan(0.5)):.1f} deg")
for mu, d, ok in zip(scan.eigenvalues, scan.distances, scan.converged):
    mark = "" if ok else "  (unconverged)"
    print(f"mu = {mu.real:8.4f} {mu.imag:+8.4f}i   distance to ray {d:.3f}{mark}")
print(f"eigenvalue overlay written to {cfg.out_dir}")

"""Transverse spectrum of the strip cross-section and derived quantities.

For the cross-section (0, 1) with Dirichlet ends, the transverse operator
has eigenvalues ``nu_k = (k pi)^2`` (the thresholds) and orthonormal modes
``phi_k(y) = sqrt(2) sin(k pi y)``.  From these the module derives

* the admissible axial decay bound ``beta_max`` for a spectral parameter
  ``mu0`` and scaling parameter ``lambda``,
* the essential-spectrum curves ``mu(xi) = nu - (1 + lambda)^{-2}
  (beta + i xi)^2`` of the scaled (and exponentially conjugated) operator,
* an admissibility report for ``mu0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AdmissibilityError",
    "thresholds",
    "transverse_mode",
    "default_mode_count",
    "SpectralData",
    "EssentialCurve",
    "beta_max",
    "essential_curves",
    "ray_distance",
    "AdmissibilityReport",
    "admissibility",
]


class AdmissibilityError(ValueError):
    """Spectral parameter at (or too close to) a threshold."""


def thresholds(count):
    """First ``count`` thresholds (k pi)^2, k = 1..count."""
    if count < 1:
        raise ValueError("count must be at least 1")
    k = np.arange(1, count + 1)
    return (k * math.pi) ** 2


def transverse_mode(k, y):
    """Orthonormal transverse mode phi_k(y) = sqrt(2) sin(k pi y), k >= 1."""
    return math.sqrt(2.0) * np.sin(k * math.pi * np.asarray(y, dtype=float))


def default_mode_count(mu0, margin=100.0):
    """Smallest K with nu_K > mu0 + margin.

    Captures every propagating mode plus an evanescent tail; modes beyond
    the margin cannot move the beta_max minimum.
    """
    return max(1, int(math.ceil(math.sqrt(max(mu0 + margin, 1.0)) / math.pi)))


@dataclass(frozen=True)
class SpectralData:
    """Thresholds and modes of the transverse operator, K modes retained."""

    K: int
    thresholds: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.thresholds is None:
            object.__setattr__(self, "thresholds", thresholds(self.K))

    @classmethod
    def for_mu0(cls, mu0, margin=100.0):
        return cls(K=default_mode_count(mu0, margin))

    def mode(self, k, y):
        if not 1 <= k <= self.K:
            raise ValueError(f"mode index {k} outside 1..{self.K}")
        return transverse_mode(k, y)


def _check_mu0(mu0, spectral):
    nu = spectral.thresholds
    dist = np.abs(nu - mu0).min()
    if dist < 1e-8:
        raise AdmissibilityError(
            f"mu0 = {mu0} is within {dist:.3g} of the threshold "
            f"{nu[np.abs(nu - mu0).argmin()]:.6f}"
        )
    if nu[-1] <= mu0:
        raise AdmissibilityError(
            f"retained modes end below mu0 = {mu0}; increase K past "
            f"{default_mode_count(mu0)}"
        )


def beta_max(mu0, lam, spectral):
    """Supremum of admissible axial decay rates,

        min over thresholds nu of |Im{(1 + lam) sqrt(mu0 - nu)}|.

    The square root is principal; for nu > mu0 it equals i sqrt(nu - mu0)
    and the absolute imaginary part is branch independent.  Every beta in
    [0, beta_max) is an admissible decay rate for the layer.
    """
    _check_mu0(mu0, spectral)
    roots = np.sqrt(np.asarray(mu0 - spectral.thresholds, dtype=complex))
    return float(np.abs(np.imag((1.0 + lam) * roots)).min())


@dataclass(frozen=True)
class EssentialCurve:
    """Sampled essential-spectrum curve attached to one threshold."""

    nu: float
    xi: np.ndarray
    points: np.ndarray


def essential_curves(lam, beta, spectral, xi_range=None):
    """Essential-spectrum curves mu(xi) = nu - (1+lam)^{-2} (beta + i xi)^2.

    For beta = 0 each curve is the ray of angle -2 arg(1 + lam) from its
    threshold; beta != 0 bends the rays into parabolas.
    """
    if abs(1.0 + lam) == 0.0:
        raise ValueError("1 + lambda must be nonzero")
    if xi_range is None:
        xi_range = np.linspace(0.0, 10.0, 201)
    xi = np.asarray(xi_range, dtype=float)
    w = (1.0 + lam) ** (-2)
    return [
        EssentialCurve(nu=float(nu), xi=xi, points=nu - w * (beta + 1j * xi) ** 2)
        for nu in spectral.thresholds
    ]


def ray_distance(mu, lam, spectral):
    """Distance from a complex point to the nearest beta = 0 essential ray.

    Each ray is {nu + t w : t >= 0} with w = (1 + lam)^{-2}; the distance
    is computed by orthogonal projection, clamped at the threshold vertex.
    """
    w = (1.0 + lam) ** (-2)
    best = math.inf
    for nu in spectral.thresholds:
        c = (mu - nu) / w
        if c.real >= 0.0:
            d = abs(c.imag) * abs(w)
        else:
            d = abs(mu - nu)
        best = min(best, d)
    return best


@dataclass
class AdmissibilityReport:
    """Distances of mu0 to the thresholds and essential curves."""

    mu0: float
    threshold_distance: float
    curve_distance: float
    admissible: bool
    notes: list = field(default_factory=list)


def admissibility(mu0, lam, spectral):
    """Report the position of mu0 relative to thresholds and (beta = 0)
    essential-spectrum rays; flag it inadmissible if either distance falls
    below 1e-6.

    The remaining hypothesis, that mu0 is not a discrete eigenvalue of the
    full operator, is surfaced downstream by solver near-singularity
    diagnostics, not here.
    """
    nu = spectral.thresholds
    threshold_distance = float(np.abs(nu - mu0).min())
    curve_distance = float(ray_distance(complex(mu0), lam, spectral))
    notes = []
    if complex(lam).imag == 0.0:
        notes.append(
            "lambda is real: essential curves degenerate to the real rays "
            "[nu, inf)"
        )
    admissible = threshold_distance >= 1e-6 and curve_distance >= 1e-6
    return AdmissibilityReport(
        mu0=mu0,
        threshold_distance=threshold_distance,
        curve_distance=curve_distance,
        admissible=admissible,
        notes=notes,
    )

"""Quasi-cylinder geometries for the 2D Dirichlet waveguide solver.

A geometry is an analytic diffeomorphism ``kappa`` of the parameter strip
``(-L0, inf) x (0, 1)`` onto the physical domain, with Jacobian tending to
the identity as the axial coordinate goes to +infinity.  Everything the
solver needs is the metric

    g(z, y) = J(z, y)^T J(z, y),    J = Jacobian of kappa,

evaluated along a complex axial coordinate ``z``.  The transpose carries no
conjugation, so ``g`` is complex symmetric wherever ``z`` is complex.

Three families are built in:

* ``StraightMap``: the identity map, ``(x, y) -> (x, y)``.
* ``LogShiftMap``: ``(x, y) -> (x, y + log(x + 2))``, a strip drifting
  logarithmically sideways.
* ``PhiPsiMap``: ``(x, y) -> (int_0^x phi(t) dt, y * psi(x))`` for axial
  profile functions ``phi`` and ``psi`` drawn from a small catalogue, all
  of which tend to 1 at infinity.

Each family extends to complex axial argument by the same closed-form
formulas, and is analytic in a sector ``|arg z| < alpha < pi/4`` away from
its singularities (which lie left of the parameter strip for the default
parameters).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expi

__all__ = [
    "DomainError",
    "ProfileFn",
    "OneProfile",
    "ExpDecayProfile",
    "PowerDecayProfile",
    "InvLogProfile",
    "profile_from_name",
    "GeometryMap",
    "StraightMap",
    "LogShiftMap",
    "PhiPsiMap",
    "geometry_from_name",
    "DEFAULT_ALPHA",
]

# Largest admissible sector half-angle, shaved slightly below pi/4.  All
# built-in families are analytic in any sub-sector of |arg z| < pi/4 away
# from their (left-of-strip) singularities.
DEFAULT_ALPHA = math.pi / 4 - 1e-3


class DomainError(ValueError):
    """Evaluation requested outside the analyticity region of a geometry."""


def _as_complex(z):
    return np.asarray(z, dtype=complex)


def _offending(mask, z):
    """First offending value of ``z`` where ``mask`` is True, for messages."""
    mask = np.atleast_1d(np.asarray(mask))
    zz = np.broadcast_to(np.atleast_1d(_as_complex(z)), mask.shape)
    idx = np.argwhere(mask)
    return zz[tuple(idx[0])] if len(idx) else None


# ---------------------------------------------------------------------------
# Axial profile functions
# ---------------------------------------------------------------------------


class ProfileFn:
    """Axial profile evaluable at complex argument, with derivative and
    antiderivative.

    The antiderivative is normalized so that ``antideriv(0) == 0``; it is
    only ever needed at real arguments (physical-coordinate evaluation),
    while ``__call__`` and ``deriv`` must accept complex ``z``.
    ``left_singularity`` is the rightmost singular point on the negative
    real axis; the parameter strip must stay strictly right of it.
    """

    name = "base"
    left_singularity = -math.inf

    def __call__(self, z):
        raise NotImplementedError

    def deriv(self, z):
        raise NotImplementedError

    def antideriv(self, x):
        raise NotImplementedError

    def singular_mask(self, z):
        """Boolean mask of arguments at or beyond a singularity."""
        z = _as_complex(z)
        return np.zeros(z.shape, dtype=bool)

    def __repr__(self):
        return f"{type(self).__name__}()"


class OneProfile(ProfileFn):
    """The constant profile 1."""

    name = "one"

    def __call__(self, z):
        return np.ones_like(_as_complex(z))

    def deriv(self, z):
        return np.zeros_like(_as_complex(z))

    def antideriv(self, x):
        return np.asarray(x, dtype=float) + 0.0


class ExpDecayProfile(ProfileFn):
    """1 + e^{-z}; entire."""

    name = "exp"

    def __call__(self, z):
        return 1.0 + np.exp(-_as_complex(z))

    def deriv(self, z):
        return -np.exp(-_as_complex(z))

    def antideriv(self, x):
        x = np.asarray(x, dtype=float)
        return x - np.exp(-x) + 1.0


class PowerDecayProfile(ProfileFn):
    """1 + (z + 1)^{-s} with s > 0; analytic for Re(z + 1) > 0."""

    name = "power"
    left_singularity = -1.0

    def __init__(self, s):
        if s <= 0:
            raise ValueError(f"power exponent must be positive, got {s}")
        self.s = float(s)

    def __call__(self, z):
        return 1.0 + (_as_complex(z) + 1.0) ** (-self.s)

    def deriv(self, z):
        return -self.s * (_as_complex(z) + 1.0) ** (-self.s - 1.0)

    def antideriv(self, x):
        x = np.asarray(x, dtype=float)
        if self.s == 1.0:
            return x + np.log(x + 1.0)
        p = 1.0 - self.s
        return x + ((x + 1.0) ** p - 1.0) / p

    def singular_mask(self, z):
        return np.real(_as_complex(z) + 1.0) <= 0.0

    def __repr__(self):
        return f"PowerDecayProfile(s={self.s})"


class InvLogProfile(ProfileFn):
    """1 + 1/log(z + 2); analytic for Re(z + 2) > 0 away from z = -1.

    The antiderivative involves the logarithmic integral li; it is
    evaluated through the exponential integral, li(t) = Ei(log t).
    """

    name = "invlog"
    left_singularity = -1.0

    def __call__(self, z):
        return 1.0 + 1.0 / np.log(_as_complex(z) + 2.0)

    def deriv(self, z):
        w = _as_complex(z) + 2.0
        return -1.0 / (w * np.log(w) ** 2)

    def antideriv(self, x):
        x = np.asarray(x, dtype=float)
        return x + expi(np.log(x + 2.0)) - expi(np.log(2.0))

    def singular_mask(self, z):
        z = _as_complex(z)
        w = z + 2.0
        return (np.real(w) <= 0.0) | (np.abs(w - 1.0) < 1e-12)


_PROFILES = {
    "one": OneProfile,
    "exp": ExpDecayProfile,
    "power": PowerDecayProfile,
    "invlog": InvLogProfile,
}


def profile_from_name(name, **params):
    """Construct a profile function from its configuration name."""
    try:
        cls = _PROFILES[name]
    except KeyError:
        raise ValueError(
            f"unknown profile {name!r}; choose from {sorted(_PROFILES)}"
        ) from None
    return cls(**params)


# ---------------------------------------------------------------------------
# Geometry maps
# ---------------------------------------------------------------------------


@dataclass
class GeometryMap:
    """Base class for the built-in diffeomorphism families.

    Parameters
    ----------
    alpha : float
        Half-angle of the axial analyticity sector, 0 < alpha < pi/4.
    bounded_length : float
        Axial extent L0 > 0 of the bounded part; the parameter rectangle
        is (-L0, inf) x (0, 1).
    """

    alpha: float = DEFAULT_ALPHA
    bounded_length: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.alpha < math.pi / 4:
            raise ValueError(f"alpha must be in (0, pi/4), got {self.alpha}")
        if self.bounded_length <= 0.0:
            raise ValueError("bounded_length must be positive")
        left = self._left_singularity()
        if -self.bounded_length <= left:
            raise ValueError(
                f"{type(self).__name__} is singular at x = {left}; the "
                f"bounded part may only extend to L0 < {-left}"
            )

    def _left_singularity(self):
        """Rightmost axial singularity on (-inf, 0); -inf if entire."""
        return -math.inf

    # -- subclass hooks -----------------------------------------------------

    def _jacobian_entries(self, z, y):
        """Return (J11, J12, J21, J22) broadcast over ``z`` and ``y``."""
        raise NotImplementedError

    def _singular_mask(self, z):
        z = _as_complex(z)
        return np.zeros(z.shape, dtype=bool)

    def eval_map(self, x, y):
        """Physical coordinates (zeta, eta) of the parameter point (x, y)."""
        raise NotImplementedError

    # -- shared machinery ---------------------------------------------------

    def check_domain(self, z):
        """Raise :class:`DomainError` if ``z`` leaves the analyticity region.

        The admissible region is Re z >= -L0 (with a small tolerance) and
        clear of the family's singularities; the sector condition on arg z
        holds automatically along any scaled curve with |lambda| < sin(alpha).
        """
        z = _as_complex(z)
        bad = np.real(z) < -self.bounded_length - 1e-12
        bad |= self._singular_mask(z)
        if np.any(bad):
            raise DomainError(
                f"axial coordinate z = {_offending(bad, z)} is outside the "
                f"analyticity region of {type(self).__name__} "
                f"(Re z >= {-self.bounded_length} required)"
            )

    def jacobian(self, z, y):
        """Jacobian matrix of the map at complex axial coordinate ``z``.

        Rows are (d zeta/dx, d zeta/dy) and (d eta/dx, d eta/dy).  Returns
        an array of shape ``broadcast(z, y).shape + (2, 2)``.
        """
        self.check_domain(z)
        j11, j12, j21, j22 = self._jacobian_entries(_as_complex(z), np.asarray(y))
        shape = np.broadcast(np.asarray(z), np.asarray(y)).shape
        out = np.empty(shape + (2, 2), dtype=complex)
        out[..., 0, 0] = j11
        out[..., 0, 1] = j12
        out[..., 1, 0] = j21
        out[..., 1, 1] = j22
        return out

    def det_jacobian(self, z, y):
        """det J(z, y); the analytic square root of det g along real data."""
        J = self.jacobian(z, y)
        return J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]

    def metric(self, z, y):
        """Metric g(z, y) = J^T J (transpose without conjugation)."""
        J = self.jacobian(z, y)
        return np.einsum("...ki,...kj->...ij", J, J)

    def decay_profile(self, x_samples, y_samples=None):
        """Sup over ``y`` of the max-entry norm of g(x, y) - Id, per ``x``.

        Numerical witness that the metric tends to the identity along the
        axis; used by diagnostics and tests.
        """
        x = np.asarray(x_samples, dtype=float)
        if y_samples is None:
            y_samples = np.linspace(0.0, 1.0, 21)
        y = np.asarray(y_samples, dtype=float)
        g = self.metric(x[:, None], y[None, :])
        dev = np.abs(g - np.eye(2))
        return dev.max(axis=(1, 2, 3))


@dataclass
class StraightMap(GeometryMap):
    """Identity map: the domain is the straight strip itself."""

    def eval_map(self, x, y):
        zeta, eta = np.broadcast_arrays(np.asarray(x, dtype=float),
                                        np.asarray(y, dtype=float))
        return zeta + 0.0, eta + 0.0

    def _jacobian_entries(self, z, y):
        one = np.ones(np.broadcast(z, y).shape, dtype=complex)
        return one, 0.0 * one, 0.0 * one, one


@dataclass
class LogShiftMap(GeometryMap):
    """(x, y) -> (x, y + log(x + 2)): logarithmically drifting strip.

    The shift is singular at x = -2, so the bounded part is limited to
    L0 < 2; the default keeps a comfortable margin.
    """

    bounded_length: float = 1.0

    def _left_singularity(self):
        return -2.0

    def eval_map(self, x, y):
        x = np.asarray(x, dtype=float)
        self.check_domain(x)
        return x + 0.0, np.asarray(y, dtype=float) + np.log(x + 2.0)

    def _jacobian_entries(self, z, y):
        shape = np.broadcast(z, y).shape
        one = np.ones(shape, dtype=complex)
        j21 = np.broadcast_to(1.0 / (z + 2.0), shape)
        return one, 0.0 * one, j21.astype(complex), one

    def _singular_mask(self, z):
        return np.real(z + 2.0) <= 0.0


@dataclass
class PhiPsiMap(GeometryMap):
    """(x, y) -> (int_0^x phi, y psi(x)) for catalogue profiles phi, psi.

    Power and inverse-log profiles are singular at x = -1, capping the
    bounded part at L0 < 1 for those choices.
    """

    bounded_length: float = 0.5
    phi: ProfileFn = field(default_factory=OneProfile)
    psi: ProfileFn = field(default_factory=OneProfile)

    def _left_singularity(self):
        return max(self.phi.left_singularity, self.psi.left_singularity)

    def eval_map(self, x, y):
        x = np.asarray(x, dtype=float)
        self.check_domain(x)
        return self.phi.antideriv(x), np.asarray(y, dtype=float) * self.psi(x).real

    def _jacobian_entries(self, z, y):
        shape = np.broadcast(z, y).shape
        j11 = np.broadcast_to(self.phi(z), shape).astype(complex)
        j21 = np.broadcast_to(np.asarray(y) * self.psi.deriv(z), shape).astype(complex)
        j22 = np.broadcast_to(self.psi(z), shape).astype(complex)
        return j11, np.zeros(shape, dtype=complex), j21, j22

    def _singular_mask(self, z):
        return self.phi.singular_mask(z) | self.psi.singular_mask(z)


_GEOMETRIES = {
    "straight": StraightMap,
    "logshift": LogShiftMap,
    "phipsi": PhiPsiMap,
}


def geometry_from_name(kind, alpha=DEFAULT_ALPHA, bounded_length=2.0,
                       phi=None, psi=None, phi_params=None, psi_params=None):
    """Construct a geometry from configuration-file fields.

    ``phi``/``psi`` are profile names (for the ``phipsi`` family) with
    optional parameter dicts, e.g. ``phi="power", phi_params={"s": 2.0}``.
    """
    kind = kind.lower()
    if kind not in _GEOMETRIES:
        raise ValueError(
            f"unknown geometry {kind!r}; choose from {sorted(_GEOMETRIES)}"
        )
    if kind == "phipsi":
        phi_fn = profile_from_name(phi or "one", **(phi_params or {}))
        psi_fn = profile_from_name(psi or "one", **(psi_params or {}))
        return PhiPsiMap(alpha=alpha, bounded_length=bounded_length,
                         phi=phi_fn, psi=psi_fn)
    return _GEOMETRIES[kind](alpha=alpha, bounded_length=bounded_length)

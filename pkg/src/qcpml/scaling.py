"""Complex axial scaling and the resulting PML coefficient fields.

The absorbing layer is realized by deforming the axial coordinate along

    x  ->  x + lambda * s(x - r),

where ``s`` is a fixed C^2 ramp (zero below 0, slope 1 beyond 1) and
``lambda`` is a complex parameter with ``|lambda| < sin(alpha)``.  Pulling
the geometry metric back through this deformation yields the complex
symmetric scaled metric

    g_s(x, y) = D g(x + lambda s(x - r), y) D,
    D = diag(1 + lambda s'(x - r), 1),

which agrees exactly with the unscaled metric for x <= r (the perfectly
matched interface).  The weak form of the scaled Helmholtz operator needs
only the weight W = sqrt(det g_s) and the conductivity C = W g_s^{-1};
both are produced here, on arbitrary broadcastable sample arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RAMP_WIDTH",
    "s_value",
    "s_prime",
    "PmlProfile",
    "ScaledCoefficients",
    "ProfileValidationError",
    "SingularMetricError",
    "ProfileDiagnostics",
    "scaled_point",
    "axial_stretch",
    "scaled_metric",
    "coefficients",
    "validate_profile",
]

# Width of the smooth ramp between s' = 0 and s' = 1.
RAMP_WIDTH = 1.0


class ProfileValidationError(ValueError):
    """PML profile violates the admissibility bounds for its geometry."""


class SingularMetricError(ArithmeticError):
    """Scaled metric is (near) singular; the PML start r is too small."""


def s_prime(t):
    """Derivative of the scaling ramp: 0 for t <= 0, a raised-cosine rise
    on [0, 1], and 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    mid = 0.5 * (1.0 - np.cos(math.pi * np.clip(t, 0.0, 1.0)))
    return np.where(t <= 0.0, 0.0, np.where(t >= 1.0, 1.0, mid))


def s_value(t):
    """Scaling function s(t) = integral of :func:`s_prime` from 0."""
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 0.0, 1.0)
    ramp = 0.5 * tc - np.sin(math.pi * tc) / (2.0 * math.pi)
    return np.where(t <= 0.0, 0.0, np.where(t >= 1.0, t - 0.5, ramp))


@dataclass(frozen=True)
class PmlProfile:
    """Scaling parameters: complex ``lam`` and layer start ``r > 0``.

    ``ramp_width`` is fixed; it records the constant width-1 ramp the
    module is built around.  Admissibility of ``lam`` against a concrete
    geometry (|lam| < sin(alpha), sampled sectoriality) is checked by
    :func:`validate_profile`, not at construction, so that diagnostics can
    be produced for bad parameters.
    """

    lam: complex
    r: float
    ramp_width: float = RAMP_WIDTH

    def __post_init__(self):
        if self.r <= 0.0:
            raise ValueError(f"PML start r must be positive, got {self.r}")
        if self.ramp_width != RAMP_WIDTH:
            raise ValueError("ramp width is fixed to 1")


def scaled_point(profile, x):
    """Complex scaled coordinate x + lam * s(x - r); equals x for x <= r."""
    x = np.asarray(x, dtype=float)
    return x + profile.lam * s_value(x - profile.r)


def axial_stretch(profile, x):
    """Axial derivative of the scaled coordinate, 1 + lam * s'(x - r)."""
    x = np.asarray(x, dtype=float)
    return 1.0 + profile.lam * s_prime(x - profile.r)


def scaled_metric(geom, profile, x, y):
    """Scaled metric g_s(x, y); complex symmetric, equal to the geometry
    metric wherever x <= r."""
    z = scaled_point(profile, x)
    d = axial_stretch(profile, x)
    g = geom.metric(z, y)
    out = np.array(g, copy=True)
    out[..., 0, 0] *= d * d
    out[..., 0, 1] *= d
    out[..., 1, 0] *= d
    return out


@dataclass
class ScaledCoefficients:
    """Weak-form coefficient fields of the scaled operator.

    ``weight`` is W = sqrt(det g_s) on the branch that is continuous along
    the scaled curve and positive in the unscaled region; ``conductivity``
    is the complex symmetric matrix C = W g_s^{-1}.
    """

    weight: np.ndarray
    conductivity: np.ndarray


def coefficients(geom, profile, x, y):
    """Evaluate the PML coefficient fields at broadcastable samples.

    The determinant of the scaled metric factorizes as
    (stretch * det J)^2, so the branch-continuous square root is taken as
    W = stretch * det J directly; no branch tracking is needed.
    """
    z = scaled_point(profile, x)
    d = axial_stretch(profile, x)
    g = geom.metric(z, y)
    det_j = geom.det_jacobian(z, y)
    weight = d * det_j
    if np.any(np.abs(weight) ** 2 < 1e-12):
        bad = np.abs(weight) ** 2 < 1e-12
        xx = np.broadcast_to(np.asarray(x, dtype=float), bad.shape)
        raise SingularMetricError(
            "det g is below 1e-12 at x = "
            f"{xx[tuple(np.argwhere(bad)[0])]}; the PML start r is too "
            "small for this geometry"
        )
    # C = W g_s^{-1} = adj(g_s) / W with g_s = D g D.
    cond = np.empty(np.broadcast(np.asarray(x), np.asarray(y)).shape + (2, 2),
                    dtype=complex)
    cond[..., 0, 0] = g[..., 1, 1] / weight
    cond[..., 0, 1] = -d * g[..., 0, 1] / weight
    cond[..., 1, 0] = cond[..., 0, 1]
    cond[..., 1, 1] = d * d * g[..., 0, 0] / weight
    return ScaledCoefficients(weight=weight, conductivity=cond)


@dataclass
class ProfileDiagnostics:
    """Sampled admissibility report for a (geometry, profile) pair."""

    ok: bool
    lambda_in_disk: bool
    worst_angle: float
    ellipticity: float
    worst_point: tuple
    warnings: list = field(default_factory=list)


def validate_profile(geom, profile, x_max=None, n_x=80, n_y=17, n_angle=16):
    """Check the scaling disk bound and sample the field-of-values bounds.

    Samples ``xi . g_s^{-1} xi`` for real unit vectors ``xi`` over a grid
    covering the bounded part, the interface, and the active layer, and
    reports the worst sector angle and the ellipticity constant.  Raises
    :class:`ProfileValidationError` if |lam| >= sin(alpha), if the worst
    angle reaches pi/2 - 1e-3, or if the ellipticity falls to 1e-6.
    """
    lam = complex(profile.lam)
    warnings_ = []
    lambda_ok = abs(lam) < math.sin(geom.alpha)
    if lam.imag == 0.0 and lam != 0.0:
        warnings_.append(
            "lambda is real and nonzero: the layer rescales but absorbs nothing"
        )

    if x_max is None:
        x_max = profile.r + 10.0
    # sample strictly inside the open parameter rectangle
    span = x_max + geom.bounded_length
    x = np.linspace(-geom.bounded_length + 1e-4 * span, x_max, n_x)
    y = np.linspace(1.0 / (n_y + 1), 1.0 - 1.0 / (n_y + 1), n_y)
    g = scaled_metric(geom, profile, x[:, None], y[None, :])
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    ginv = np.empty_like(g)
    ginv[..., 0, 0] = g[..., 1, 1] / det
    ginv[..., 0, 1] = -g[..., 0, 1] / det
    ginv[..., 1, 0] = ginv[..., 0, 1]
    ginv[..., 1, 1] = g[..., 0, 0] / det

    theta = np.linspace(0.0, math.pi, n_angle, endpoint=False)
    xi = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    # values[i, j, t] = xi_t . g_s^{-1}(x_i, y_j) xi_t
    values = np.einsum("ta,ijab,tb->ijt", xi, ginv, xi)

    angles = np.abs(np.angle(values))
    mods = np.abs(values)
    worst = np.unravel_index(np.argmax(angles), angles.shape)
    worst_angle = float(angles[worst])
    ellipticity = float(min(mods.min(), 1.0 / mods.max()))
    worst_point = (float(x[worst[0]]), float(y[worst[1]]), float(theta[worst[2]]))

    ok = lambda_ok and worst_angle < math.pi / 2 - 1e-3 and ellipticity > 1e-6
    diag = ProfileDiagnostics(
        ok=ok,
        lambda_in_disk=lambda_ok,
        worst_angle=worst_angle,
        ellipticity=ellipticity,
        worst_point=worst_point,
        warnings=warnings_,
    )
    if not ok:
        if not lambda_ok:
            reason = (f"|lambda| = {abs(lam):.6g} is not below "
                      f"sin(alpha) = {math.sin(geom.alpha):.6g}")
        elif worst_angle >= math.pi / 2 - 1e-3:
            reason = (f"sector angle {worst_angle:.6g} >= pi/2 - 1e-3 at "
                      f"sample point {worst_point}")
        else:
            reason = (f"ellipticity {ellipticity:.3g} <= 1e-6 at sample "
                      f"point {worst_point}")
        err = ProfileValidationError(f"inadmissible PML profile: {reason}")
        err.diagnostics = diag
        raise err
    return diag

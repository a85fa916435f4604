"""Tensor-product Q1 finite elements for the scaled Helmholtz problem.

The mesh covers the parameter rectangle (-L0, R) x (0, 1) with three
uniform axial bands, (-L0, 0), (0, r) and (r, R), whose node sets contain
x = 0 and x = r exactly so that the matched interface falls on element
boundaries.  Assembly realizes the complex symmetric weak form

    b(u, v) = int C grad(u) . grad(v)  -  mu0 int W u v,
    l(v)    = int W f v,

with the PML weight W and conductivity C evaluated at 2x2 Gauss points,
bilinear quadrilateral elements, and homogeneous Dirichlet conditions
eliminated on all four sides.  No conjugation enters the form, so the
assembled matrix equals its transpose; the solver treats it as complex
symmetric rather than Hermitian.

Unknowns are numbered lexicographically with x major (y fastest), which
keeps the matrix banded with half-bandwidth ny - 1 for ny y-nodes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import scaling
from .spectral import transverse_mode

__all__ = [
    "MeshError",
    "TensorMesh",
    "build_mesh",
    "ModeBandSource",
    "GaussianSource",
    "ManufacturedSource",
    "source_from_config",
    "DiscreteProblem",
    "assemble",
    "norms_on_region",
    "nodal_values",
]

_GAUSS = np.array([-1.0, 1.0]) / math.sqrt(3.0)


class MeshError(ValueError):
    """Invalid mesh construction parameters."""


@dataclass(frozen=True)
class TensorMesh:
    """Tensor-product mesh over (-L0, R) x (0, 1).

    ``x_nodes`` contains exact entries at 0 and r; spacing is uniform
    within each of the three axial bands.  ``y_nodes`` is uniform.
    """

    x_nodes: np.ndarray
    y_nodes: np.ndarray
    L0: float
    r: float
    R: float

    @property
    def nx(self):
        return len(self.x_nodes)

    @property
    def ny(self):
        return len(self.y_nodes)

    @property
    def n_interior(self):
        return (self.nx - 2) * (self.ny - 2)

    @property
    def half_bandwidth(self):
        return self.ny - 1

    def dof_map(self):
        """Grid of interior dof indices, -1 on the Dirichlet boundary."""
        idx = -np.ones((self.nx, self.ny), dtype=np.int64)
        idx[1:-1, 1:-1] = np.arange(self.n_interior).reshape(
            self.nx - 2, self.ny - 2
        )
        return idx

    def node_index_of_x(self, x_cut, tol=1e-10):
        """Index of the node equal to ``x_cut``; raises if none matches."""
        i = int(np.argmin(np.abs(self.x_nodes - x_cut)))
        if abs(self.x_nodes[i] - x_cut) > tol:
            raise MeshError(f"x = {x_cut} is not aligned to a mesh node")
        return i


def build_mesh(L0, r, R, hx, Ny):
    """Build the three-band tensor mesh with target axial spacing ``hx``
    and ``Ny`` y-subintervals.

    Each band gets ceil(band / hx) subintervals, so the actual spacing
    never exceeds ``hx`` and the nodes land exactly on 0 and r.
    """
    if not (0.0 < r < R):
        raise MeshError(f"need 0 < r < R, got r = {r}, R = {R}")
    if L0 <= 0.0 or hx <= 0.0:
        raise MeshError("L0 and hx must be positive")
    if Ny < 4:
        raise MeshError(f"Ny must be at least 4, got {Ny}")

    def band(a, b):
        n = max(1, int(math.ceil((b - a) / hx - 1e-12)))
        return np.linspace(a, b, n + 1), n

    xs0, _ = band(-L0, 0.0)
    xs1, _ = band(0.0, r)
    xs2, n2 = band(r, R)
    if n2 == 1:
        warnings.warn(
            f"PML band (r, R) = ({r}, {R}) holds a single element at "
            f"hx = {hx}", stacklevel=2,
        )
    x_nodes = np.concatenate([xs0, xs1[1:], xs2[1:]])
    y_nodes = np.linspace(0.0, 1.0, Ny + 1)
    return TensorMesh(x_nodes=x_nodes, y_nodes=y_nodes, L0=L0, r=r, R=R)


# ---------------------------------------------------------------------------
# Sources
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModeBandSource:
    """f(x, y) = phi_k(y) on the band x0 <= x <= x1, zero elsewhere."""

    k: int = 1
    x0: float = 0.0
    x1: float = 1.0

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        band = ((x >= self.x0) & (x <= self.x1)).astype(float)
        return band * transverse_mode(self.k, y)

    def support(self):
        return self.x0, self.x1


@dataclass(frozen=True)
class GaussianSource:
    """Isotropic Gaussian bump of given center, width and amplitude."""

    x_c: float
    y_c: float
    sigma: float
    amplitude: float = 1.0

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        q = ((x - self.x_c) ** 2 + (y - self.y_c) ** 2) / (2.0 * self.sigma ** 2)
        return self.amplitude * np.exp(-q)

    def support(self):
        # effective support; the tails beyond 6 sigma are negligible
        return self.x_c - 6.0 * self.sigma, self.x_c + 6.0 * self.sigma


@dataclass(frozen=True)
class ManufacturedSource:
    """Right-hand side manufactured from u* = sin(pi (x+L0)/W) sin(pi y).

    On the straight strip with lambda = 0 the exact solution of
    (Delta - mu0) u = f is u*, which drives the discretization-order
    check.  W = L0 + R is the full axial extent.
    """

    L0: float
    R: float
    mu0: float

    @property
    def width(self):
        return self.L0 + self.R

    def exact_solution(self, x, y):
        x = np.asarray(x, dtype=float)
        return np.sin(math.pi * (x + self.L0) / self.width) * np.sin(
            math.pi * np.asarray(y, dtype=float)
        )

    def evaluate(self, x, y):
        factor = (math.pi / self.width) ** 2 + math.pi ** 2 - self.mu0
        return factor * self.exact_solution(x, y)

    def support(self):
        return -self.L0, self.R


def source_from_config(kind, params):
    """Construct a source from configuration-file fields."""
    kind = kind.lower()
    if kind == "modeband":
        return ModeBandSource(**params)
    if kind == "gaussian":
        return GaussianSource(**params)
    if kind == "manufactured":
        return ManufacturedSource(**params)
    raise ValueError(f"unknown source kind {kind!r}")


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


@dataclass
class DiscreteProblem:
    """Assembled complex symmetric system on the interior unknowns.

    ``matrix`` is A = K - mu0 M; ``stiffness`` and ``mass`` are kept
    separately for spectral (pencil) studies.  ``dof_map`` maps grid nodes
    to interior indices (-1 on the boundary).
    """

    mesh: TensorMesh
    matrix: sp.csr_matrix
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    rhs: np.ndarray
    dof_map: np.ndarray
    mu0: float
    warnings: list = field(default_factory=list)

    @property
    def half_bandwidth(self):
        return self.mesh.half_bandwidth


def _shape_data(qx, qy):
    """Q1 shape values and reference gradients at one 2x2 Gauss point.

    Local node order is tensor order: (dx, dy) in {0,1}^2, a = 2 dx + dy,
    attached to grid node (ix + dx, iy + dy).
    """
    xi, eta = _GAUSS[qx], _GAUSS[qy]
    lx = np.array([0.5 * (1 - xi), 0.5 * (1 + xi)])
    ly = np.array([0.5 * (1 - eta), 0.5 * (1 + eta)])
    dlx = np.array([-0.5, 0.5])
    dly = np.array([-0.5, 0.5])
    n = np.array([lx[dx] * ly[dy] for dx in (0, 1) for dy in (0, 1)])
    dn_dxi = np.array([dlx[dx] * ly[dy] for dx in (0, 1) for dy in (0, 1)])
    dn_deta = np.array([lx[dx] * dly[dy] for dx in (0, 1) for dy in (0, 1)])
    return n, dn_dxi, dn_deta


def _quadrature_x(nodes):
    """Gauss abscissae per element of a 1D node vector, shape (ne, 2)."""
    h = np.diff(nodes)
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    return mid[:, None] + 0.5 * h[:, None] * _GAUSS[None, :], h


def assemble(geom, profile, mu0, mesh, source):
    """Assemble stiffness, mass and load for (Delta_scaled - mu0) u = f.

    Coefficients are evaluated at the tensor product of per-element 2x2
    Gauss points; elements wholly left of the PML start see exactly the
    unscaled coefficients step by step, which is what makes the interface
    reflection-free at the matrix level.
    """
    notes = []
    lo, hi = source.support()
    if hi > profile.r and not isinstance(source, ManufacturedSource):
        msg = (f"source support extends to x = {hi} beyond the PML start "
               f"r = {profile.r}; oracle comparisons are not exact")
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)

    xq, hx = _quadrature_x(mesh.x_nodes)   # (nex, 2), (nex,)
    yq, hy = _quadrature_x(mesh.y_nodes)   # (ney, 2), (ney,)
    nex, ney = len(hx), len(hy)

    # coefficient fields on the full quadrature grid, shape (2 nex, 2 ney)
    co = scaling.coefficients(geom, profile, xq.reshape(-1)[:, None],
                              yq.reshape(-1)[None, :])
    W = co.weight
    C = co.conductivity
    F = source.evaluate(xq.reshape(-1)[:, None], yq.reshape(-1)[None, :])

    detj = 0.25 * hx[:, None] * hy[None, :]          # (nex, ney)
    inv_hx = 2.0 / hx
    inv_hy = 2.0 / hy

    Ke = np.zeros((nex, ney, 4, 4), dtype=complex)
    Me = np.zeros((nex, ney, 4, 4), dtype=complex)
    be = np.zeros((nex, ney, 4), dtype=complex)

    for qx in (0, 1):
        for qy in (0, 1):
            n, dn_dxi, dn_deta = _shape_data(qx, qy)
            sel = np.ix_(2 * np.arange(nex) + qx, 2 * np.arange(ney) + qy)
            c00 = C[..., 0, 0][sel] * detj
            c01 = C[..., 0, 1][sel] * detj
            c11 = C[..., 1, 1][sel] * detj
            wq = W[sel] * detj
            fq = (W[sel] * F[sel]) * detj

            gx = inv_hx[:, None] * dn_dxi[None, :]   # (nex, 4)
            gy = inv_hy[:, None] * dn_deta[None, :]  # (ney, 4)

            Ke += np.einsum("xy,xa,xb->xyab", c00, gx, gx)
            Ke += np.einsum("xy,xa,yb->xyab", c01, gx, gy)
            Ke += np.einsum("xy,ya,xb->xyab", c01, gy, gx)
            Ke += np.einsum("xy,ya,yb->xyab", c11, gy, gy)
            Me += np.einsum("xy,a,b->xyab", wq, n, n)
            be += np.einsum("xy,a->xya", fq, n)

    # scatter into the interior system
    dof = mesh.dof_map()
    ex = np.arange(nex)[:, None, None]
    ey = np.arange(ney)[None, :, None]
    local_dx = np.array([0, 0, 1, 1])[None, None, :]
    local_dy = np.array([0, 1, 0, 1])[None, None, :]
    gnode = dof[ex + local_dx, ey + local_dy]        # (nex, ney, 4)

    rows = np.broadcast_to(gnode[..., :, None], Ke.shape).reshape(-1)
    cols = np.broadcast_to(gnode[..., None, :], Ke.shape).reshape(-1)
    keep = (rows >= 0) & (cols >= 0)
    n_int = mesh.n_interior
    K = sp.coo_matrix(
        (Ke.reshape(-1)[keep], (rows[keep], cols[keep])), shape=(n_int, n_int)
    ).tocsr()
    M = sp.coo_matrix(
        (Me.reshape(-1)[keep], (rows[keep], cols[keep])), shape=(n_int, n_int)
    ).tocsr()

    b = np.zeros(n_int, dtype=complex)
    rows_b = gnode.reshape(-1)
    keep_b = rows_b >= 0
    np.add.at(b, rows_b[keep_b], be.reshape(-1)[keep_b])

    return DiscreteProblem(
        mesh=mesh,
        matrix=(K - mu0 * M).tocsr(),
        stiffness=K,
        mass=M,
        rhs=b,
        dof_map=dof,
        mu0=mu0,
        warnings=notes,
    )


# ---------------------------------------------------------------------------
# Norms and field reconstruction
# ---------------------------------------------------------------------------


def nodal_values(u, mesh, dof_map=None):
    """Expand an interior dof vector to the full (nx, ny) nodal grid."""
    if dof_map is None:
        dof_map = mesh.dof_map()
    grid = np.zeros((mesh.nx, mesh.ny), dtype=complex)
    interior = dof_map >= 0
    grid[interior] = np.asarray(u)[dof_map[interior]]
    return grid


def norms_on_region(u, mesh, x_cut, dof_map=None):
    """(L2, H1-seminorm, H2 proxy) of a dof vector over x < x_cut.

    L2 and the H1 seminorm are elementwise 2x2 Gauss quadrature of the Q1
    interpolant.  The H2 proxy is a broken sum of nodal second differences;
    it is a diagnostic, not a conforming H2 norm, since the elements carry
    no curvature.
    """
    i_cut = mesh.node_index_of_x(x_cut)
    if i_cut < 1:
        raise MeshError("x_cut leaves no elements to integrate over")
    grid = nodal_values(u, mesh, dof_map)

    xs = mesh.x_nodes[: i_cut + 1]
    hx = np.diff(xs)
    hy = np.diff(mesh.y_nodes)
    nex, ney = len(hx), len(hy)
    inv_hx = 2.0 / hx
    inv_hy = 2.0 / hy
    detj = 0.25 * hx[:, None] * hy[None, :]

    corners = np.empty((nex, ney, 4), dtype=complex)
    corners[..., 0] = grid[:i_cut, :-1]
    corners[..., 1] = grid[:i_cut, 1:]
    corners[..., 2] = grid[1 : i_cut + 1, :-1]
    corners[..., 3] = grid[1 : i_cut + 1, 1:]

    l2_sq = 0.0
    h1_sq = 0.0
    for qx in (0, 1):
        for qy in (0, 1):
            n, dn_dxi, dn_deta = _shape_data(qx, qy)
            uq = corners @ n
            ux = np.einsum("xya,a,x->xy", corners, dn_dxi, inv_hx)
            uy = np.einsum("xya,a,y->xy", corners, dn_deta, inv_hy)
            l2_sq += float(np.sum(detj * np.abs(uq) ** 2))
            h1_sq += float(np.sum(detj * (np.abs(ux) ** 2 + np.abs(uy) ** 2)))

    h2_sq = _h2_proxy_sq(grid, mesh, i_cut)
    return math.sqrt(l2_sq), math.sqrt(h1_sq), math.sqrt(h2_sq)


def _h2_proxy_sq(grid, mesh, i_cut):
    """Broken second differences of nodal values over x < x_cut."""
    xs = mesh.x_nodes
    ys = mesh.y_nodes
    hy = ys[1] - ys[0]
    total = 0.0
    # d2/dx2 via a nonuniform 3-point stencil; d2/dy2 uniform
    for i in range(1, i_cut):
        h1 = xs[i] - xs[i - 1]
        h2 = xs[i + 1] - xs[i]
        cell = 0.5 * (h1 + h2) * hy
        d2x = (
            2.0 * grid[i - 1, :] / (h1 * (h1 + h2))
            - 2.0 * grid[i, :] / (h1 * h2)
            + 2.0 * grid[i + 1, :] / (h2 * (h1 + h2))
        )
        total += float(np.sum(np.abs(d2x[1:-1]) ** 2)) * cell
    d2y = (grid[1:i_cut, :-2] - 2.0 * grid[1:i_cut, 1:-1] + grid[1:i_cut, 2:]) / hy**2
    dx_cells = 0.5 * (xs[2 : i_cut + 1] - xs[: i_cut - 1])
    total += float(np.sum(np.abs(d2y) ** 2 * dx_cells[:, None])) * hy
    return total

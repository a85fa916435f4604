"""Configuration-driven experiment runner.

Wires the geometry, scaling, assembly, solver and oracle modules into the
five study kinds:

* ``solve``: one truncated-problem solve, dumped as CSV and a heatmap.
* ``converge``: sweep over the truncation length R, with errors on the
  matched region x < r measured against the modal oracle (straight strip)
  or against a reference run at large R, and a fitted exponential decay
  rate after plateau exclusion.
* ``decay``: slope of the dominant mode amplitude inside the layer.
* ``stability``: R-uniformity of the solution-to-data norm ratio.
* ``spectrum``: pencil eigenvalues near chosen shifts, compared with the
  analytic essential-spectrum curves.

Every study validates its PML profile and spectral admissibility before
touching the mesh.  Norms are computed in parameter coordinates.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:          # Python < 3.11
    import tomli as tomllib

from . import fem, oracle, output, scaling, solver, spectral
from .geometry import StraightMap, geometry_from_name
from .scaling import PmlProfile

__all__ = [
    "ConfigError",
    "StudyConfig",
    "load_config",
    "StudyRecord",
    "RateFit",
    "fit_rate",
    "RunResult",
    "run_solve",
    "run_convergence",
    "run_decay_probe",
    "run_stability",
    "run_spectrum",
    "run_study",
]


class ConfigError(ValueError):
    """Configuration is inconsistent or inadmissible."""


@dataclass
class StudyConfig:
    """One experiment: geometry, scaling, discretization, source, study."""

    geometry: object
    profile: PmlProfile
    mu0: float
    hx: float
    ny: int
    source_kind: str
    source_params: dict
    study: str = "solve"
    R: float = 8.0
    R_list: list = field(default_factory=list)
    R_ref: float = None
    reference: str = "oracle"
    shifts: list = field(default_factory=list)
    eig_count: int = 3
    out_dir: Path = Path("out")
    threads: int = 1
    seed: int = 0

    @property
    def L0(self):
        return self.geometry.bounded_length

    def make_source(self, R):
        params = dict(self.source_params)
        if self.source_kind.lower() == "manufactured":
            params.setdefault("L0", self.L0)
            params.setdefault("R", R)
            params.setdefault("mu0", self.mu0)
        return fem.source_from_config(self.source_kind, params)

    def spectral_data(self):
        return spectral.SpectralData.for_mu0(self.mu0)

    def validate(self):
        """Profile and admissibility gates; run before any solve."""
        try:
            diag = scaling.validate_profile(self.geometry, self.profile)
        except scaling.ProfileValidationError as exc:
            raise ConfigError(str(exc)) from exc
        for msg in diag.warnings:
            warnings.warn(msg, stacklevel=2)
        report = spectral.admissibility(
            self.mu0, self.profile.lam, self.spectral_data()
        )
        if not report.admissible:
            raise ConfigError(
                f"mu0 = {self.mu0} is inadmissible: threshold distance "
                f"{report.threshold_distance:.3g}, essential-curve distance "
                f"{report.curve_distance:.3g}"
            )
        return diag, report


def load_config(path, out_dir=None, threads=None, seed=None):
    """Parse a TOML study configuration.

    Sections: [geometry] kind/alpha/params, [pml] lambda_re/lambda_im/r,
    [domain] L0/mu0, [mesh] hx/ny, [source] kind/params, [study]
    kind/R/R_list/R_ref/reference/shifts/count, [output] directory.
    """
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    try:
        geo = raw["geometry"]
        pml = raw["pml"]
        dom = raw["domain"]
        mesh = raw["mesh"]
        src = raw["source"]
    except KeyError as exc:
        raise ConfigError(f"missing configuration section {exc}") from exc

    geo_kwargs = dict(geo.get("params", {}))
    if "alpha" in geo:
        geo_kwargs["alpha"] = geo["alpha"]
    geo_kwargs["bounded_length"] = dom.get("L0", 2.0)
    try:
        geometry = geometry_from_name(geo["kind"], **geo_kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad geometry section: {exc}") from exc

    profile = PmlProfile(
        lam=complex(pml.get("lambda_re", 0.0), pml.get("lambda_im", 0.0)),
        r=pml["r"],
    )
    study = raw.get("study", {})
    shifts = [complex(s[0], s[1]) for s in study.get("shifts", [])]
    out = raw.get("output", {})
    cfg = StudyConfig(
        geometry=geometry,
        profile=profile,
        mu0=dom["mu0"],
        hx=mesh["hx"],
        ny=int(mesh["ny"]),
        source_kind=src.get("kind", "modeband"),
        source_params=dict(src.get("params", {})),
        study=study.get("kind", "solve"),
        R=float(study.get("R", 8.0)),
        R_list=[float(v) for v in study.get("R_list", [])],
        R_ref=study.get("R_ref"),
        reference=study.get("reference", "oracle"),
        shifts=shifts,
        eig_count=int(study.get("count", 3)),
        out_dir=Path(out.get("directory", "out")),
    )
    if out_dir is not None:
        cfg.out_dir = Path(out_dir)
    if threads is not None:
        cfg.threads = int(threads)
    if seed is not None:
        cfg.seed = int(seed)
    return cfg


# ---------------------------------------------------------------------------
# Records and rate fitting
# ---------------------------------------------------------------------------


@dataclass
class StudyRecord:
    """One row of a sweep: errors on x < r, stability ratio, diagnostics."""

    R: float
    h: float
    err_l2: float
    err_h1: float
    ratio: float
    pivot: float
    seconds: float
    beta_max: float = math.nan
    fitted_rate: float = math.nan


@dataclass
class RateFit:
    """Least-squares decay rate of log(error) against R."""

    rate: float
    intercept: float
    points_used: int
    inconclusive: bool
    reason: str = ""


def fit_rate(records, errors=None):
    """Fit a positive decay constant to (R, log error) after plateau
    exclusion.

    Trailing records whose error is within a factor 3 of the sweep minimum
    are the discretization plateau and are dropped; at least four points
    must survive for a conclusive fit.
    """
    if errors is None:
        errors = [rec.err_l2 for rec in records]
    R = np.array([rec.R for rec in records], dtype=float)
    e = np.array(errors, dtype=float)
    order = np.argsort(R)
    R, e = R[order], e[order]

    if len(R) < 4:
        return RateFit(math.nan, math.nan, 0, True, "fewer than 4 records")
    positive = e > 0.0
    if not positive.all():
        keep_from = np.nonzero(~positive)[0].max() + 1
        R, e = R[keep_from:], e[keep_from:]
        if len(R) < 4:
            return RateFit(math.nan, math.nan, 0, True,
                           "fewer than 4 nonzero records")
    floor = 3.0 * e.min()
    n = len(e)
    while n > 0 and e[n - 1] <= floor:
        n -= 1
    if n < 4:
        return RateFit(math.nan, math.nan, n, True,
                       f"only {n} points above the plateau")
    A = np.stack([np.ones(n), -R[:n]], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(e[:n]), rcond=None)
    return RateFit(rate=float(coef[1]), intercept=float(coef[0]),
                   points_used=n, inconclusive=False)


# ---------------------------------------------------------------------------
# Single solves
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    """Solved truncated problem plus solver diagnostics."""

    R: float
    mesh: fem.TensorMesh
    problem: fem.DiscreteProblem
    u: np.ndarray
    pivot_ratio: float
    residual: float
    seconds: float

    def grid(self):
        return fem.nodal_values(self.u, self.mesh, self.problem.dof_map)


def _single_run(cfg, R):
    t0 = time.perf_counter()
    mesh = fem.build_mesh(cfg.L0, cfg.profile.r, R, cfg.hx, cfg.ny)
    problem = fem.assemble(cfg.geometry, cfg.profile, cfg.mu0, mesh,
                           cfg.make_source(R))
    hb = mesh.half_bandwidth
    fac = solver.factor(problem.matrix, kl=hb, ku=hb)
    u = solver.solve(fac, problem.rhs)
    b = problem.rhs
    num = np.linalg.norm(problem.matrix @ u - b)
    den = fac.max_entry * np.linalg.norm(u) + np.linalg.norm(b)
    residual = float(num / den) if den > 0 else 0.0
    return RunResult(
        R=R, mesh=mesh, problem=problem, u=u,
        pivot_ratio=fac.pivot_ratio, residual=residual,
        seconds=time.perf_counter() - t0,
    )


def _run_many(cfg, R_values):
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(lambda R: _single_run(cfg, R), R_values))
    return [_single_run(cfg, R) for R in R_values]


def _oracle_direction(profile):
    return "outgoing" if profile.lam.imag > 0 else "incoming"


def _oracle_solution(cfg):
    """Modal reference for the current config; straight geometry only."""
    if not isinstance(cfg.geometry, StraightMap):
        raise ConfigError(
            "the modal oracle exists only for the straight strip; use "
            "reference = 'self' for quasi-cylinder geometries"
        )
    data = cfg.spectral_data()
    profiles = oracle.project_source(cfg.make_source(cfg.R), data, L0=cfg.L0)
    return oracle.ModalSolution(
        mu0=cfg.mu0, L0=cfg.L0, profiles=profiles,
        direction=_oracle_direction(cfg.profile),
        thresholds=data.thresholds,
    )


def _grid_errors_on_gr(run, ref_grid, r):
    """Relative L2/H1 errors of a run against reference nodal values,
    both restricted to x < r."""
    mesh = run.mesh
    i_r = mesh.node_index_of_x(r)
    diff = run.grid()
    diff[: i_r + 1, :] -= ref_grid[: i_r + 1, :]
    diff[i_r + 1 :, :] = 0.0
    dof = run.problem.dof_map
    interior = dof >= 0
    dvec = np.zeros(mesh.n_interior, dtype=complex)
    dvec[dof[interior]] = diff[interior]
    rvec = np.zeros(mesh.n_interior, dtype=complex)
    rgrid = np.zeros_like(diff)
    rgrid[: i_r + 1, :] = ref_grid[: i_r + 1, :]
    rvec[dof[interior]] = rgrid[interior]
    d2, d1, _ = fem.norms_on_region(dvec, mesh, r, dof)
    r2, r1, _ = fem.norms_on_region(rvec, mesh, r, dof)
    return d2 / r2 if r2 > 0 else d2, d1 / r1 if r1 > 0 else d1


def _source_l2_norm(cfg, mesh, R):
    """L2 norm of the physical source over the mesh, by 2x2 Gauss."""
    source = cfg.make_source(R)
    xq, hx = fem._quadrature_x(mesh.x_nodes)
    yq, hy = fem._quadrature_x(mesh.y_nodes)
    f = source.evaluate(xq.reshape(-1)[:, None], yq.reshape(-1)[None, :])
    detj = 0.25 * hx[:, None] * hy[None, :]
    total = 0.0
    for qx in (0, 1):
        for qy in (0, 1):
            sel = np.ix_(2 * np.arange(len(hx)) + qx, 2 * np.arange(len(hy)) + qy)
            total += float(np.sum(detj * np.abs(f[sel]) ** 2))
    return math.sqrt(total)


def _stability_ratio(cfg, run):
    l2, h1, _ = fem.norms_on_region(run.u, run.mesh, run.mesh.R)
    g = _source_l2_norm(cfg, run.mesh, run.R)
    return math.sqrt(l2**2 + h1**2) / g if g > 0 else math.nan


# ---------------------------------------------------------------------------
# Studies
# ---------------------------------------------------------------------------


def run_solve(cfg, write_files=True):
    """Assemble, factor and solve once; dump field, heatmap, diagnostics."""
    cfg.validate()
    run = _single_run(cfg, cfg.R)
    grid = run.grid()
    l2_gr, h1_gr, _ = fem.norms_on_region(run.u, run.mesh, cfg.profile.r)
    diagnostics = {
        "R": run.R,
        "unknowns": run.mesh.n_interior,
        "pivot_ratio": run.pivot_ratio,
        "residual": run.residual,
        "l2_on_gr": l2_gr,
        "h1_on_gr": h1_gr,
        "seconds": run.seconds,
        "warnings": run.problem.warnings,
    }
    if write_files:
        out = Path(cfg.out_dir)
        output.write_field_csv(out / "field.csv", run.mesh, grid)
        output.plot_heatmap(out / "field.svg", run.mesh, np.abs(grid))
        if isinstance(cfg.geometry, StraightMap) and not isinstance(
            cfg.make_source(cfg.R), fem.ManufacturedSource
        ):
            # modal reference in the same schema, for pointwise differencing
            sol = _oracle_solution(cfg)
            ref = sol.evaluate(run.mesh.x_nodes[:, None],
                               run.mesh.y_nodes[None, :])
            output.write_field_csv(out / "oracle.csv", run.mesh, ref)
        with open(out / "diagnostics.json", "w") as fh:
            json.dump(diagnostics, fh, indent=2)
    return run, diagnostics


@dataclass
class ConvergenceStudy:
    records: list
    fit: RateFit
    beta_max: float
    reference: str


def _reference_grids(cfg, runs):
    """Reference nodal grids per run, shaped like each run's mesh."""
    if cfg.reference == "oracle":
        sol = _oracle_solution(cfg)
        return [
            sol.evaluate(run.mesh.x_nodes[:, None], run.mesh.y_nodes[None, :])
            for run in runs
        ], None
    R_ref = cfg.R_ref if cfg.R_ref is not None else max(cfg.R_list) + 2.0
    ref_run = _single_run(cfg, R_ref)
    ref_grid = ref_run.grid()
    grids = []
    for run in runs:
        i_r = run.mesh.node_index_of_x(cfg.profile.r)
        if not np.allclose(run.mesh.x_nodes[: i_r + 1],
                           ref_run.mesh.x_nodes[: i_r + 1], atol=1e-12):
            raise ConfigError(
                "reference and test meshes disagree on x < r; keep hx fixed "
                "across the sweep"
            )
        g = np.zeros((run.mesh.nx, run.mesh.ny), dtype=complex)
        g[: i_r + 1, :] = ref_grid[: i_r + 1, :]
        grids.append(g)
    return grids, ref_run


def run_convergence(cfg, write_files=True):
    """R-sweep with errors on x < r and a fitted exponential decay rate."""
    cfg.validate()
    if len(cfg.R_list) < 4:
        raise ConfigError("converge study needs at least 4 values of R")
    bmax = spectral.beta_max(cfg.mu0, cfg.profile.lam, cfg.spectral_data())
    runs = _run_many(cfg, sorted(cfg.R_list))
    ref_grids, ref_run = _reference_grids(cfg, runs)

    records = []
    for run, ref in zip(runs, ref_grids):
        if ref_run is not None and run.R == ref_run.R:
            continue      # the reference itself is not an error sample
        e2, e1 = _grid_errors_on_gr(run, ref, cfg.profile.r)
        records.append(StudyRecord(
            R=run.R, h=cfg.hx, err_l2=e2, err_h1=e1,
            ratio=_stability_ratio(cfg, run),
            pivot=run.pivot_ratio, seconds=run.seconds, beta_max=bmax,
        ))
    fit = fit_rate(records)
    for rec in records:
        rec.fitted_rate = fit.rate
    study = ConvergenceStudy(records=records, fit=fit, beta_max=bmax,
                             reference=cfg.reference)
    if write_files:
        out = Path(cfg.out_dir)
        output.write_study_csv(out / "converge.csv", records)
        output.plot_log_error(out / "converge.svg", records, fit)
    return study


@dataclass
class DecayProbe:
    x: np.ndarray
    amplitude: np.ndarray
    slope: float
    expected_slope: float
    window: tuple
    mode: int


def run_decay_probe(cfg, write_files=True, run=None):
    """Slope of log|a_k(x)| inside the layer for the probed mode.

    The discrete solution is projected onto the transverse mode of the
    band source (mode 1 otherwise) at every x node; the slope is fitted
    on (r + 1, R - 1), truncated where the amplitude underflows 1e-14.
    """
    cfg.validate()
    if not isinstance(cfg.geometry, StraightMap):
        raise ConfigError("the decay probe projects transverse modes and "
                          "is meaningful on the straight strip only")
    if run is None:
        run = _single_run(cfg, cfg.R)
    source = cfg.make_source(cfg.R)
    mode = source.k if isinstance(source, fem.ModeBandSource) else 1
    grid = run.grid()
    mesh = run.mesh
    hy = mesh.y_nodes[1] - mesh.y_nodes[0]
    phi = spectral.transverse_mode(mode, mesh.y_nodes)
    amp = np.abs(grid @ phi) * hy          # trapezoid; ends are Dirichlet

    nu = (mode * math.pi) ** 2
    if cfg.mu0 > nu:
        expected = -math.sqrt(cfg.mu0 - nu) * cfg.profile.lam.imag
    else:
        expected = -math.sqrt(nu - cfg.mu0)

    lo, hi = cfg.profile.r + 1.0, run.R - 1.0
    sel = (mesh.x_nodes >= lo) & (mesh.x_nodes <= hi)
    x = mesh.x_nodes[sel]
    a = amp[sel]
    alive = a > 1e-14
    if not alive.all():
        cut = np.argmin(alive)            # first underflow truncates
        x, a = x[:cut], a[:cut]
    if len(x) < 2:
        raise ConfigError("decay window is empty; increase R or the mesh")
    A = np.stack([np.ones(len(x)), x], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(a), rcond=None)
    probe = DecayProbe(
        x=mesh.x_nodes, amplitude=amp, slope=float(coef[1]),
        expected_slope=float(expected), window=(lo, hi), mode=mode,
    )
    if write_files:
        out = Path(cfg.out_dir)
        output.write_decay_csv(out / "decay.csv", probe.x, probe.amplitude)
    return probe


@dataclass
class StabilityStudy:
    records: list
    variation: float
    flagged: bool


def run_stability(cfg, write_files=True, runs=None):
    """Solution-to-data norm ratios across the R sweep.

    The ratio sqrt(L2^2 + H1^2)(v_R) / ||f||_L2 must level off for large
    R; a variation above 10 percent across the top half of the sweep is
    flagged (near-resonance or R still too short).
    """
    cfg.validate()
    if runs is None:
        if not cfg.R_list:
            raise ConfigError("stability study needs R_list")
        runs = _run_many(cfg, sorted(cfg.R_list))
    records = [
        StudyRecord(
            R=run.R, h=cfg.hx, err_l2=math.nan, err_h1=math.nan,
            ratio=_stability_ratio(cfg, run),
            pivot=run.pivot_ratio, seconds=run.seconds,
        )
        for run in runs
    ]
    top = [rec.ratio for rec in records[len(records) // 2 :]]
    variation = (max(top) - min(top)) / (sum(top) / len(top))
    study = StabilityStudy(records=records, variation=float(variation),
                           flagged=variation > 0.10)
    if write_files:
        output.write_study_csv(Path(cfg.out_dir) / "stability.csv", records)
    return study


@dataclass
class SpectrumScan:
    eigenvalues: np.ndarray
    distances: np.ndarray
    converged: np.ndarray
    curves: list
    notes: list


def run_spectrum(cfg, write_files=True):
    """Pencil eigenvalues near the configured shifts, with distances to
    the analytic essential-spectrum curves."""
    cfg.validate()
    if not cfg.shifts:
        raise ConfigError("spectrum study needs at least one shift")
    mesh = fem.build_mesh(cfg.L0, cfg.profile.r, cfg.R, cfg.hx, cfg.ny)
    if mesh.n_interior > 20000:
        raise ConfigError(
            f"spectrum scans are meant for coarse meshes; "
            f"{mesh.n_interior} unknowns is too many"
        )
    problem = fem.assemble(cfg.geometry, cfg.profile, cfg.mu0, mesh,
                           cfg.make_source(cfg.R))
    data = cfg.spectral_data()
    rng = np.random.default_rng(cfg.seed)
    v0 = rng.standard_normal(mesh.n_interior) + 0j

    values, dists, conv, notes = [], [], [], []
    for shift in cfg.shifts:
        try:
            res = solver.eigs_near(problem.stiffness, problem.mass, shift,
                                   cfg.eig_count, v0=v0)
        except solver.NearSingularError as exc:
            notes.append(f"shift {shift}: {exc}")
            continue
        notes.extend(res.notes)
        for mu, ok in zip(res.values, res.converged):
            values.append(mu)
            dists.append(spectral.ray_distance(mu, cfg.profile.lam, data))
            conv.append(bool(ok))
    curves = spectral.essential_curves(cfg.profile.lam, 0.0, data)
    scan = SpectrumScan(
        eigenvalues=np.array(values, dtype=complex),
        distances=np.array(dists, dtype=float),
        converged=np.array(conv, dtype=bool),
        curves=curves,
        notes=notes,
    )
    if write_files:
        out = Path(cfg.out_dir)
        output.write_spectrum_csv(
            out / "spectrum.csv",
            list(zip(scan.eigenvalues, scan.distances, scan.converged)),
        )
        output.write_curves_csv(out / "curves.csv", curves)
        output.plot_spectrum(out / "spectrum.svg", scan.eigenvalues, curves,
                             shifts=cfg.shifts)
    return scan


_STUDIES = {
    "solve": run_solve,
    "converge": run_convergence,
    "decay": run_decay_probe,
    "stability": run_stability,
    "spectrum": run_spectrum,
}


def run_study(cfg, write_files=True):
    """Dispatch on the configured study kind."""
    try:
        runner = _STUDIES[cfg.study]
    except KeyError:
        raise ConfigError(
            f"unknown study kind {cfg.study!r}; choose from {sorted(_STUDIES)}"
        ) from None
    return runner(cfg, write_files=write_files)

"""End-to-end pipelines behind the command line and the figure recipes.

Every pipeline writes its artifacts into one output directory and returns
an ordered metrics dict; :func:`run_pipeline` adds ``manifest.json`` with the
SHA-256 of each artifact. Nothing time- or host-dependent is written, so
identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, RunConfig, parse_config_text
from .diffraction import (disk_window, extract_sideband, far_field, mixing_term_error,
                          nrmse)
from .fields import (ATOMIC_UNITS, MOMENTUM_SPACE, RadialProfile, ScalarField2D,
                     au_to_fs, fs_to_au, make_cubic_grid, make_grid)
from .mask import (MaskSpec, RadialDesign, binarize, commensurate_grid, gamma_from_spm,
                   sideband_amplitude, synth_mask)
from .mpi import (K_CENTER_05EV, OMEGA_34, MpiSpec, equatorial_density, equatorial_slice,
                  field_symmetry_order, field_trace, gamma_from_mpi, kappa_mpi, pmd_density_3d,
                  polarization_angle_rate, trace_symmetry_distance, unwrapped_polarization_angle)
from .specfun import first_k_eq
from .tomography import ball_phantom, blob_phantom, fourier_slice_reconstruct, project_all
from .topology import (angle_difference, azimuthal_spectrum, lz_charge_sweep,
                       petal_rotation_angle, petal_spiral_fit, snap_integer)


class NumericFailure(RuntimeError):
    """A pipeline produced a non-finite or otherwise unusable result."""


class Run:
    """Output directory, artifact list and metrics of one pipeline run."""

    def __init__(self, out_dir, threads=None):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.threads = threads
        self.artifacts = []
        self.metrics = {}

    def path(self, name):
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        if name not in self.artifacts:
            self.artifacts.append(name)
        return p

    def metric(self, key, value):
        if isinstance(value, (float, np.floating)):
            value = float(value)
            if not math.isfinite(value):
                raise NumericFailure(f"metric {key} is not finite")
        elif isinstance(value, np.integer):
            value = int(value)
        self.metrics[key] = value


def _checked(build, *args, **kwargs):
    """Construct a parameter object, reporting invalid values as config errors."""
    try:
        return build(*args, **kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError([str(exc)]) from None


# ------------------------------------------------------------------ SPM

def mask_spec_from(cfg: RunConfig) -> MaskSpec:
    s = cfg.section("mask")
    radial = cfg.section("mask.radial")
    design = None
    if radial:
        if set(radial) != {"C", "C2"}:
            raise ConfigError(["[mask.radial] needs both C and C2"])
        design = _checked(RadialDesign, radial["C"], radial["C2"])
    return _checked(MaskSpec, s.get("m", 4), s.get("n", 3), s.get("kappa_spm", 0.0),
                    s.get("k0", 15.0), s.get("R", 1.85), design, s.get("threshold", 0.5))


def _spm_grid(cfg, spec):
    g = cfg.section("grid")
    extent = g.get("extent", 8.0 * spec.R)
    return _checked(commensurate_grid, spec, g.get("n", 2048), extent)


def _build_mask(run, cfg, spec, grid):
    """Mask (binarized unless switched off), written as OAMF, PGM and contours."""
    mask = synth_mask(spec, grid)
    if spec.radial is not None:
        r, _ = grid.polar()
        mask = ScalarField2D(grid, np.where(r <= spec.R, mask.values, 0.0))
    binarized = cfg.get("mask", "binarize", True)
    if binarized:
        mask = binarize(mask, spec.binarize_threshold)
    io.write_field(run.path("mask.oamf"), mask)
    if cfg.get("output", "pgm", True):
        io.write_pgm8(run.path("mask.pgm"), mask.values)
    if binarized and cfg.get("output", "contours", True):
        io.write_contours_csv(run.path("mask_contours.csv"), io.mask_contours(mask))
    r, _ = grid.polar()
    inside = r <= spec.R
    run.metric("grid_n", grid.nx)
    run.metric("grid_extent_um", grid.extent_x)
    run.metric("mask_binarized", bool(binarized))
    run.metric("mask_open_fraction", float(mask.values[inside].mean()) / float(mask.values.max()))
    return mask


def _ring_radius(spec):
    """Reciprocal radius used for the petal analysis of a sideband."""
    if spec.radial is not None:
        return 1.0 / math.sqrt(spec.radial.C2)
    if spec.m != spec.n:
        return first_k_eq(spec.n, spec.m, spec.R)
    return 3.0 / spec.R


def _diffract(run, cfg, spec, grid, mask, prefix=""):
    q = spec.m + spec.n
    s = cfg.get("mask", "sideband", 1)
    if s not in (-1, 1):
        raise ConfigError(["mask.sideband must be -1 or +1"])
    res = far_field(mask, workers=run.threads)
    inten = res.intensity
    if not np.all(np.isfinite(inten.values)):
        raise NumericFailure("far field is not finite")
    log = cfg.get("diffraction", "log_scale", True)
    if cfg.get("output", "pgm", True):
        io.write_pgm16(run.path(f"{prefix}diffraction.pgm"), inten.values, log=log)
    center = s * spec.k0
    window = cfg.get("diffraction", "window_fraction", 0.4) * spec.k0 or 4.0 / spec.R
    crop = extract_sideband(res, center, window)
    io.write_field(run.path(f"{prefix}sideband.oamf"), crop)
    if cfg.get("output", "pgm", True):
        io.write_pgm16(run.path(f"{prefix}sideband.pgm"), np.abs(crop.values) ** 2)
    flipped = inten.values[::-1, ::-1]
    friedel = np.abs(inten.values[1:, 1:] - flipped[:-1, :-1]).max() / inten.values.max()
    run.metric(f"{prefix}sideband", s)
    run.metric(f"{prefix}friedel_error", friedel)
    k_ring = _ring_radius(spec)
    run.metric(f"{prefix}ring_radius_per_um", k_ring)
    spec_q = azimuthal_spectrum(inten, k_ring, 13, center=(center, 0.0))
    contrasts = [spec_q.contrast(j) for j in range(1, 14)]
    for j, c in enumerate(contrasts, start=1):
        run.metric(f"{prefix}contrast_q{j}", c)
    run.metric(f"{prefix}petal_angle_rad", petal_rotation_angle(inten, q, k_ring,
                                                                center=(center, 0.0)))
    run.metric(f"{prefix}gamma_rad", gamma_from_spm(spec.kappa_spm, spec.m, spec.n, s))
    return res, contrasts


def pipeline_mask(run, cfg):
    spec = mask_spec_from(cfg)
    grid = _spm_grid(cfg, spec)
    _build_mask(run, cfg, spec, grid)


def pipeline_diffract(run, cfg):
    spec = mask_spec_from(cfg)
    grid = _spm_grid(cfg, spec)
    mask = _build_mask(run, cfg, spec, grid)
    _diffract(run, cfg, spec, grid, mask)


# ------------------------------------------------------------------ MPI

def mpi_spec_from(cfg: RunConfig) -> MpiSpec:
    s = cfg.section("mpi")
    radial = _checked(RadialProfile.gaussian, s.get("k_center", K_CENTER_05EV),
                      s.get("k_sigma", 0.02))
    return _checked(MpiSpec, s.get("m", 4), s.get("n", 3), s.get("omega", OMEGA_34),
                    s.get("phi_r", 0.0), s.get("phi_b", 0.0), s.get("phi_ce", 0.0),
                    s.get("zeta", 0.0), s.get("tau", 0.0),
                    s.get("envelope_fwhm", fs_to_au(25.0)), radial,
                    s.get("amplitude_ratio", 1.0))


def _mpi_grid(cfg):
    g = cfg.section("mpi.grid")
    n = g.get("n", 1024)
    ext = g.get("extent", 0.35)
    return _checked(make_grid, n, n, ext, ext, MOMENTUM_SPACE, ATOMIC_UNITS)


def _mpi_density(run, cfg, spec, grid, prefix=""):
    dens = equatorial_density(spec, grid)
    if not np.all(np.isfinite(dens.values)):
        raise NumericFailure("equatorial density is not finite")
    io.write_field(run.path(f"{prefix}equatorial_density.oamf"), dens)
    if cfg.get("output", "pgm", True):
        io.write_pgm16(run.path(f"{prefix}equatorial_density.pgm"), dens.values)
    q = spec.m + spec.n
    k_ring = spec.radial.params["k_center"]
    run.metric(f"{prefix}kappa_rad", kappa_mpi(spec))
    run.metric(f"{prefix}gamma_rad", gamma_from_mpi(spec))
    sp = azimuthal_spectrum(dens, k_ring, q)
    run.metric(f"{prefix}contrast_q{q}", sp.contrast(q))
    run.metric(f"{prefix}petal_angle_rad", petal_rotation_angle(dens, q, k_ring))
    return dens


def _spiral(run, density, q, k_center, k_sigma, tau, prefix=""):
    ks = np.linspace(max(k_center - 8 * k_sigma, 1e-3), k_center + 8 * k_sigma, 200)
    ks = ks[ks < min(density.grid.x[-1], density.grid.y[-1])]
    fit = petal_spiral_fit(density, q, ks)
    predicted = tau / (2.0 * q)
    run.metric(f"{prefix}spiral_slope", fit.slope)
    run.metric(f"{prefix}spiral_slope_predicted", predicted)
    run.metric(f"{prefix}spiral_rings", int(fit.k.size))
    if predicted != 0:
        run.metric(f"{prefix}spiral_slope_rel_error", abs(fit.slope / predicted - 1.0))
    return fit


def pipeline_mpi(run, cfg):
    spec = mpi_spec_from(cfg)
    dens = _mpi_density(run, cfg, spec, _mpi_grid(cfg))
    if spec.tau != 0:
        _spiral(run, dens, spec.m + spec.n, spec.radial.params["k_center"],
                spec.radial.params["k_sigma"], spec.tau)


def pipeline_field(run, cfg):
    spec = mpi_spec_from(cfg)
    f = cfg.section("field")
    duration = f.get("duration", 4.0 * spec.envelope_fwhm if math.isfinite(spec.envelope_fwhm)
                     else 2 * math.pi / spec.omega)
    samples = f.get("samples", 4001)
    if samples < 2 or not duration > 0:
        raise ConfigError(["field.samples must be >= 2 and field.duration positive"])
    t = np.linspace(-duration / 2, duration / 2, samples)
    trace = field_trace(spec, t)
    rows = [(float(a), float(b), float(c))
            for a, b, c in zip(au_to_fs(trace[:, 0]), trace[:, 1], trace[:, 2])]
    io.write_table_csv(run.path("field_trace.csv"), ["t_fs", "ex", "ey"], rows)
    S = field_symmetry_order(spec.n, spec.m)
    run.metric("symmetry_order", S)
    run.metric("trace_hausdorff", trace_symmetry_distance(spec))
    tt, ang = unwrapped_polarization_angle(
        MpiSpec(spec.m, spec.n, spec.omega, spec.phi_r, spec.phi_b, spec.phi_ce, spec.zeta,
                0.0, math.inf, spec.radial, spec.amplitude_ratio),
        np.linspace(0, 2 * math.pi / spec.omega, 20001))
    slope = np.polyfit(tt, ang, 1)[0]
    rate = polarization_angle_rate(spec)
    run.metric("polarization_rate", slope)
    run.metric("polarization_rate_predicted", rate)
    run.metric("polarization_rate_rel_error", abs(slope / rate - 1.0) if rate else abs(slope))


# ------------------------------------------------------------ topology

def pipeline_topology(run, cfg):
    s = cfg.section("topology")
    m, n = s.get("m", 4), s.get("n", 3)
    lo, hi, count = s.get("beta_min", 0.1), s.get("beta_max", 3.0), s.get("count", 59)
    if not (0 < lo <= hi) or count < 1 or m < 0 or n < 0:
        raise ConfigError(["topology: need 0 < beta_min <= beta_max, count >= 1, m, n >= 0"])
    betas = np.linspace(lo, hi, count)
    rows = lz_charge_sweep(m, n, betas, s.get("contour_radius", 1.0))
    rows = [r + (snap_integer(r[4]),) for r in rows]
    io.write_table_csv(run.path("lz_charge_sweep.csv"),
                       ["beta0", "lz_closed_form", "lz_numeric", "charge_closed_form",
                        "charge_numeric", "charge_numeric_snapped"], rows)
    run.metric("sweep_points", len(rows))
    run.metric("lz_max_abs_diff", max(abs(r[1] - r[2]) for r in rows))


# ----------------------------------------------------------- tomography

def pipeline_tomo(run, cfg):
    s = cfg.section("tomo")
    n = s.get("n", 128)
    count = s.get("angles", 45)
    step = s.get("step", math.radians(4.0))
    if n < 16 or count < 2 or not step > 0 or (count - 1) * step >= math.pi:
        raise ConfigError(["tomo: need n >= 16 and count angles of positive step inside [0, pi)"])
    phantom = s.get("phantom", "pmd")
    if phantom == "pmd":
        grid = _checked(make_cubic_grid, n, s.get("extent", 0.32))
        spec = mpi_spec_from(cfg)
        truth = pmd_density_3d(spec, grid, axis="y")
    elif phantom == "ball":
        grid = _checked(make_cubic_grid, n, s.get("extent", 1.0))
        truth = ball_phantom(grid, s.get("ball_radius", 0.6))
    else:
        grid = _checked(make_cubic_grid, n, s.get("extent", 1.0))
        truth = blob_phantom(grid, seed=cfg.seed)
    angles = step * np.arange(count)
    proj = project_all(truth, angles)
    io.write_projection_stack(run.path("projections.oamf"), proj)
    run.path("projections.oamf.angles.csv")
    rec = fourier_slice_reconstruct(proj, workers=run.threads)
    io.write_field(run.path("reconstruction.oamf"), rec.density)
    run.metric("phantom", phantom)
    run.metric("projections", count)
    run.metric("nrmse", nrmse(rec.values, truth.values))
    run.metric("clamped_fraction", rec.clamped_fraction)
    run.metric("raw_mass", rec.raw_mass)
    run.metric("true_mass", float(truth.values.sum() * np.prod(grid.spacing)))
    if phantom == "pmd":
        sl = equatorial_slice(rec.density, "y")
        q = spec.m + spec.n
        run.metric(f"equatorial_contrast_q{q}",
                   azimuthal_spectrum(sl, spec.radial.params["k_center"], q).contrast(q))
        if cfg.get("output", "pgm", True):
            io.write_pgm16(run.path("equatorial_slice.pgm"), sl.values)


# -------------------------------------------------------------- figures

FIGURE_CONFIGS = {
    "fig3a": """
command = "reproduce"
[reproduce]
figure = "fig3a"
[mask]
m = 4
n = 3
k0 = "15 per_um"
R = "1.85 um"
kappa_spm = "0 rad"
threshold = 0.5
sideband = 1
[grid]
n = 2048
extent = "14.8 um"
""",
    "fig3b": """
command = "reproduce"
[reproduce]
figure = "fig3b"
[mpi]
m = 4
n = 3
envelope_fwhm = "25 fs"
k_center = "0.5 eV"
k_sigma = "0.02 au"
[mpi.grid]
n = 1024
extent = "0.35 au"
""",
    "fig4a": """
command = "reproduce"
[reproduce]
figure = "fig4a"
[mask]
m = 4
n = 3
k0 = "15 per_um"
R = "1.85 um"
sideband = 1
[grid]
n = 2048
extent = "14.8 um"
""",
    "fig4b": """
command = "reproduce"
[reproduce]
figure = "fig4b"
[mpi]
m = 4
n = 3
k_center = "0.5 eV"
k_sigma = "0.02 au"
[mpi.grid]
n = 1024
extent = "0.35 au"
""",
    "fig5a": """
command = "reproduce"
[reproduce]
figure = "fig5a"
[mask]
m = 4
n = 3
k0 = "15 per_um"
R = "2.65 um"
sideband = 1
[mask.radial]
C = "-0.22 um2"
C2 = "0.17 um2"
[grid]
n = 2048
extent = "21.2 um"
""",
    "fig5b": """
command = "reproduce"
[reproduce]
figure = "fig5b"
[mpi]
m = 4
n = 3
tau = "-20 fs"
k_center = "0.5 eV"
k_sigma = "0.02 au"
[mpi.grid]
n = 1024
extent = "0.35 au"
""",
    "figA1": """
command = "reproduce"
[reproduce]
figure = "figA1"
[mask]
m = 4
n = 3
k0 = "30 per_um"
R = "1.85 um"
binarize = false
[grid]
n = 2048
extent = "14.8 um"
""",
    "figA2": """
command = "reproduce"
[reproduce]
figure = "figA2"
[topology]
m = 4
n = 3
beta_min = 0.1
beta_max = 3.0
count = 59
contour_radius = 1.0
""",
}


def figure_config(name) -> RunConfig:
    """Built-in configuration of a figure recipe."""
    if name not in FIGURE_CONFIGS:
        raise ConfigError([f"unknown figure {name!r}"])
    return parse_config_text(FIGURE_CONFIGS[name])


def merge_configs(base: RunConfig, override: RunConfig) -> RunConfig:
    """Values of ``override`` replace those of ``base`` key by key."""
    sections = {k: dict(v) for k, v in base.sections.items()}
    for name, values in override.sections.items():
        sections.setdefault(name, {}).update(values)
    return RunConfig(base.command, override.seed, sections)


def _fig3a(run, cfg):
    spec = mask_spec_from(cfg)
    grid = _spm_grid(cfg, spec)
    mask = _build_mask(run, cfg, spec, grid)
    _, contrasts = _diffract(run, cfg, spec, grid, mask)
    q = spec.m + spec.n
    others = [c for j, c in enumerate(contrasts, start=1) if j != q]
    run.metric("contrast_order", contrasts[q - 1])
    run.metric("contrast_other_max", max(others))
    io.write_table_csv(run.path("symmetry_report.csv"), ["order", "contrast"],
                       [(j, float(c)) for j, c in enumerate(contrasts, start=1)])


def _fig3b(run, cfg):
    spec = mpi_spec_from(cfg)
    _mpi_density(run, cfg, spec, _mpi_grid(cfg))
    pipeline_field(run, cfg)


def _rotation_report(run, name, labels, angles, expected, q):
    rows = []
    for lab, a, e in zip(labels, angles, expected):
        d = angle_difference(a, angles[0], q)
        rows.append((lab, float(a), float(d), float(e), float(abs(angle_difference(d, e, q)))))
    io.write_table_csv(run.path(name), ["setting", "petal_angle_rad", "rotation_rad",
                                        "expected_rad", "abs_error_rad"], rows)
    run.metric("rotation_max_error_deg", math.degrees(max(r[4] for r in rows)))


def _fig4a(run, cfg):
    base = mask_spec_from(cfg)
    q = base.m + base.n
    angles, labels = [], []
    kappas = (0.0, math.pi / 2, math.pi)
    for i, kap in enumerate(kappas):
        spec = MaskSpec(base.m, base.n, kap, base.k0, base.R, base.radial,
                        base.binarize_threshold)
        grid = _spm_grid(cfg, spec)
        mask = _build_mask(run, cfg, spec, grid) if i == 0 else binarize(
            synth_mask(spec, grid), spec.binarize_threshold)
        _diffract(run, cfg, spec, grid, mask, prefix=f"kappa{i}_")
        angles.append(run.metrics[f"kappa{i}_petal_angle_rad"])
        labels.append(f"kappa_spm={kap:.6f}")
    _rotation_report(run, "rotation_report.csv", labels, angles,
                     [k / q for k in kappas], q)


def _fig4b(run, cfg):
    base = mpi_spec_from(cfg)
    q = base.m + base.n
    grid = _mpi_grid(cfg)
    settings = (("reference", {}), ("phi_ce=pi", {"phi_ce": math.pi}),
                ("phi_b=pi/3", {"phi_b": math.pi / 3}))
    angles, expected = [], []
    for i, (label, change) in enumerate(settings):
        params = dict(m=base.m, n=base.n, omega=base.omega, phi_r=base.phi_r,
                      phi_b=base.phi_b, phi_ce=base.phi_ce, zeta=base.zeta, tau=base.tau,
                      envelope_fwhm=base.envelope_fwhm, radial=base.radial,
                      amplitude_ratio=base.amplitude_ratio)
        params.update(change)
        spec = MpiSpec(**params)
        _mpi_density(run, cfg, spec, grid, prefix=f"setting{i}_")
        angles.append(run.metrics[f"setting{i}_petal_angle_rad"])
        expected.append((kappa_mpi(spec) - kappa_mpi(base)) / q)
    _rotation_report(run, "rotation_report.csv", [s[0] for s in settings], angles,
                     expected, q)


def _fig5a(run, cfg):
    spec = mask_spec_from(cfg)
    if spec.radial is None:
        raise ConfigError(["fig5a needs a [mask.radial] design"])
    grid = _spm_grid(cfg, spec)
    mask = _build_mask(run, cfg, spec, grid)
    res, _ = _diffract(run, cfg, spec, grid, mask)
    s = cfg.get("mask", "sideband", 1)
    q = spec.m + spec.n
    center = s * spec.k0
    width = 1.0 / math.sqrt(spec.radial.C2)
    ks = np.linspace(0.3 * width, 2.0 * width, 120)
    fit = petal_spiral_fit(res.intensity, q, ks, center=(center, 0.0))
    run.metric("spiral_slope", fit.slope)
    # design value, the same on both orders; truncating the chirped arm at the
    # aperture lowers the realized slope
    run.metric("spiral_slope_design", spec.radial.C / q)
    run.metric("spiral_rings", int(fit.k.size))
    io.write_table_csv(run.path("spiral_fit.csv"), ["k_per_um", "petal_angle_rad"],
                       [(float(k), float(a)) for k, a in zip(fit.k, fit.angle)])


def _fig5b(run, cfg):
    spec = mpi_spec_from(cfg)
    dens = _mpi_density(run, cfg, spec, _mpi_grid(cfg))
    fit = _spiral(run, dens, spec.m + spec.n, spec.radial.params["k_center"],
                  spec.radial.params["k_sigma"], spec.tau)
    io.write_table_csv(run.path("spiral_fit.csv"), ["k_au", "petal_angle_rad"],
                       [(float(k), float(a)) for k, a in zip(fit.k, fit.angle)])


def analytic_sideband_nrmse(spec, grid, window_fraction=0.4, workers=None):
    """NRMSE between the numeric ``+k0`` sideband of the unbinarized mask and
    the analytic sideband intensity inside ``window_fraction * k0``."""
    res = far_field(synth_mask(spec, grid), workers=workers)
    radius = window_fraction * spec.k0
    sub = extract_sideband(res, spec.k0, radius)
    kk, xi = sub.grid.polar()
    ana = np.abs(sideband_amplitude(spec, kk, xi, 1)) ** 2
    return nrmse(np.abs(sub.values) ** 2, ana, disk_window(sub.grid, radius)), res


def _figA1(run, cfg):
    spec = mask_spec_from(cfg)
    grid = _spm_grid(cfg, spec)
    err, res = analytic_sideband_nrmse(spec, grid, workers=run.threads)
    run.metric("grid_n", grid.nx)
    run.metric("grid_extent_um", grid.extent_x)
    run.metric("sideband_nrmse", err)
    if cfg.get("output", "pgm", True):
        io.write_pgm16(run.path("diffraction.pgm"), res.intensity.values, log=True)
    rows = []
    extent = cfg.get("grid", "extent", 8.0 * spec.R)
    for k0 in (15.0, 30.0, 60.0):
        s = MaskSpec(spec.m, spec.n, spec.kappa_spm, k0, spec.R)
        g = commensurate_grid(s, grid.nx, extent)
        e = mixing_term_error(s, g, workers=run.threads)
        rows.append((k0, float(e)))
        run.metric(f"mixing_error_k0_{int(k0)}", e)
    io.write_table_csv(run.path("mixing_error.csv"), ["k0_per_um", "mixing_error"], rows)


def _figA2(run, cfg):
    pipeline_topology(run, cfg)


FIGURES = {"fig3a": _fig3a, "fig3b": _fig3b, "fig4a": _fig4a, "fig4b": _fig4b,
           "fig5a": _fig5a, "fig5b": _fig5b, "figA1": _figA1, "figA2": _figA2}

PIPELINES = {"mask": pipeline_mask, "diffract": pipeline_diffract, "mpi": pipeline_mpi,
             "field": pipeline_field, "topology": pipeline_topology, "tomo": pipeline_tomo}


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(run, cfg, label):
    entries = [{"path": name, "bytes": (run.out / name).stat().st_size,
                "sha256": _sha256(run.out / name)} for name in sorted(run.artifacts)]
    doc = {"command": label, "seed": cfg.seed, "artifacts": entries, "metrics": run.metrics}
    path = run.out / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def run_pipeline(cfg: RunConfig, out_dir, threads=None, figure=None):
    """Run the configured command; returns the :class:`Run` record.

    For ``reproduce`` the figure comes from ``figure`` or ``[reproduce]``;
    any sections present in ``cfg`` override the built-in recipe values.
    """
    run = Run(out_dir, threads)
    if cfg.command == "reproduce":
        name = figure or cfg.get("reproduce", "figure")
        if name is None:
            raise ConfigError(["reproduce needs a figure name"])
        recipe = figure_config(name)
        user = RunConfig(cfg.command, cfg.seed,
                         {k: v for k, v in cfg.sections.items() if k not in ("reproduce",
                                                                              "run")})
        effective = merge_configs(recipe, user)
        FIGURES[name](run, effective)
        label = f"reproduce {name}"
    else:
        PIPELINES[cfg.command](run, cfg)
        label = cfg.command
    write_manifest(run, cfg, label)
    return run

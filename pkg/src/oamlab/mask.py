"""Holographic amplitude masks for mixed-OAM electron beams.

A mask is the intensity of the target wave (charges ``m`` and ``-n``)
interfering with a tilted plane wave ``exp(i k0 x)``. Sideband index
``s = +1`` is the diffraction order centred at ``kx = +k0`` (it carries the
conjugate target), ``s = -1`` the one at ``kx = -k0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fields import ComplexField2D, Grid2D, ScalarField2D, REAL_SPACE
from .specfun import aperture_hankel_table, inverse_hankel_transform

J1_FIRST_ZERO = 3.8317059702075125


def wrap_angle(a):
    """Wrap to the half-open interval ``(-pi, pi]``."""
    w = math.remainder(a, 2 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass(frozen=True)
class RadialDesign:
    """Quadratic radial phase ``C k^2`` on the m-arm and a Gaussian
    ``exp(-C2 k^2 / 2)`` envelope on both arms (lengths in um)."""

    C: float
    C2: float

    def __post_init__(self):
        if not self.C2 > 0:
            raise ValueError("C2 must be positive")


@dataclass(frozen=True)
class MaskSpec:
    m: int
    n: int
    kappa_spm: float = 0.0
    k0: float = 15.0
    R: float = 1.85
    radial: Optional[RadialDesign] = None
    binarize_threshold: float = 0.5

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ValueError("charges must be non-negative")
        if not self.R > 0:
            raise ValueError("aperture radius must be positive")
        if self.k0 < 0:
            raise ValueError("carrier k0 must be non-negative")
        if not 0 < self.binarize_threshold < 1:
            raise ValueError("binarize_threshold must lie in (0, 1)")
        if 0 < self.k0 < 2 * J1_FIRST_ZERO / self.R:
            warnings.warn("carrier k0 too small to separate the sidebands from the "
                          "central order", stacklevel=3)


def commensurate_grid(spec: MaskSpec, n=2048, extent=None):
    """Real-space grid whose reciprocal lattice has ``k0`` on a node.

    ``extent`` is the requested half-width (default ``2 R``); it is enlarged
    to the next value for which ``k0`` is an integer number of reciprocal
    samples.
    """
    extent = 2.0 * spec.R if extent is None else float(extent)
    if extent < spec.R:
        raise ValueError("grid half-width smaller than the aperture")
    if spec.k0 > 0:
        steps = math.ceil(spec.k0 * extent / math.pi - 1e-9)
        extent = steps * math.pi / spec.k0
    return Grid2D(n, n, extent, extent)


def _check_sampling(spec, grid):
    nyquist = math.pi / grid.dx
    needed = spec.k0 + 2.0 * (spec.m + spec.n + 4) / spec.R
    if nyquist < needed:
        warnings.warn(f"Nyquist wavenumber {nyquist:.3g} below carrier plus sideband "
                      f"width {needed:.3g}", stacklevel=3)


def _target(spec, phi):
    return np.exp(1j * (spec.m * phi + spec.kappa_spm)) + np.exp(-1j * spec.n * phi)


def synth_mask(spec: MaskSpec, grid: Grid2D) -> ScalarField2D:
    """Aperture times the three-wave interference intensity."""
    if grid.space_tag != REAL_SPACE:
        raise ValueError("masks are synthesized on a real-space grid")
    if min(grid.extent_x, grid.extent_y) < spec.R:
        raise ValueError("grid does not contain the full aperture")
    if spec.radial is not None:
        return synth_mask_radial(spec, grid)
    _check_sampling(spec, grid)
    X, _ = grid.mesh()
    r, phi = grid.polar()
    wave = _target(spec, phi) + np.exp(1j * spec.k0 * X)
    values = np.where(r <= spec.R, np.abs(wave) ** 2, 0.0)
    return ScalarField2D(grid, values)


def synth_mask_expanded(spec: MaskSpec, grid: Grid2D) -> ScalarField2D:
    """Same mask written as the constant, (m+n)-fold and carrier-beat terms."""
    X, _ = grid.mesh()
    r, phi = grid.polar()
    m, n, kap, k0 = spec.m, spec.n, spec.kappa_spm, spec.k0
    values = (3.0 + 2.0 * np.cos((n + m) * phi + kap)
              + 4.0 * np.cos(((n - m) * phi - kap + 2 * k0 * X) / 2)
              * np.cos(((m + n) * phi + kap) / 2))
    return ScalarField2D(grid, np.where(r <= spec.R, values, 0.0))


def radial_arm_tables(spec: MaskSpec, r, nk=2048):
    """Real-space radial amplitudes of the m- and n-arms of a radial design.

    Returns ``(h_m, h_n)`` evaluated at radii ``r``, each normalized to unit
    peak modulus.
    """
    design = spec.radial
    if design is None:
        raise ValueError("mask spec has no radial design")
    k_max = math.sqrt(2.0 * math.log(1e8) / design.C2)
    k = np.linspace(0.0, k_max, nk)
    envelope = np.exp(-0.5 * design.C2 * k * k)
    h_m = inverse_hankel_transform(spec.m, k, np.exp(1j * design.C * k * k) * envelope, r)
    h_n = inverse_hankel_transform(spec.n, k, envelope, r)
    return h_m, h_n


def synth_mask_radial(spec: MaskSpec, grid: Grid2D, table_points=1024) -> ScalarField2D:
    """Mask whose arms carry inverse-Hankel-designed radial amplitudes.

    The radial tables are computed on ``table_points`` radii up to the grid
    corner and interpolated linearly onto the grid.
    """
    if spec.radial is None:
        raise ValueError("synth_mask_radial needs a radial design")
    _check_sampling(spec, grid)
    X, _ = grid.mesh()
    r, phi = grid.polar()
    r_tab = np.linspace(0.0, float(r.max()), table_points)
    h_m, h_n = radial_arm_tables(spec, r_tab)
    if r.max() > r_tab[-1] + 1e-12:
        raise ValueError("radial table does not cover the grid")
    hm = np.interp(r, r_tab, h_m.real) + 1j * np.interp(r, r_tab, h_m.imag)
    hn = np.interp(r, r_tab, h_n.real)
    wave = (np.exp(1j * (spec.m * phi + spec.kappa_spm)) * hm
            + np.exp(-1j * spec.n * phi) * hn + np.exp(1j * spec.k0 * X))
    return ScalarField2D(grid, np.abs(wave) ** 2)


def binarize(mask: ScalarField2D, threshold_fraction=0.5) -> ScalarField2D:
    """1 where the mask reaches ``threshold_fraction`` of its maximum."""
    v = mask.values
    if np.any(v < 0):
        raise ValueError("mask must be non-negative")
    peak = float(v.max())
    if peak <= 0:
        raise ValueError("cannot binarize an all-zero mask")
    return ScalarField2D(mask.grid, (v >= threshold_fraction * peak).astype(float))


def gamma_from_spm(kappa_spm, m, n, sideband):
    """Superposition phase in sideband ``s``: ``kappa + s (m - n) pi / 2``."""
    if sideband not in (-1, 1):
        raise ValueError("sideband must be -1 or +1")
    return wrap_angle(kappa_spm + sideband * (m - n) * math.pi / 2)


def sideband_center(spec: MaskSpec, sideband):
    if sideband not in (-1, 1):
        raise ValueError("sideband must be -1 or +1")
    return sideband * spec.k0


@dataclass
class AnalyticDiffraction:
    """Fourier components of the circular-aperture mask on one momentum grid.

    ``components[j]`` holds the transform of the j-th term of the
    decomposition: 0 the apertured constant, 1 the (m+n)-fold ring term,
    2 the order at ``+k0`` and 3 the order at ``-k0``.
    """

    grid: Grid2D
    components: dict = field(default_factory=dict)

    def total(self, include=(0, 1, 2, 3)):
        return ComplexField2D(self.grid, sum(self.components[j].values for j in include))

    def incoherent_sum(self, include=(0, 1, 2, 3)):
        """Sum of |component|^2, i.e. the pattern with mixing terms dropped."""
        return ScalarField2D(self.grid, sum(np.abs(self.components[j].values) ** 2
                                            for j in include))


def _hankel_on(order, k, R):
    return aperture_hankel_table(abs(order), k, R)


def sideband_amplitude(spec: MaskSpec, kk, xi, sideband):
    """Analytic amplitude of one sideband in its own shifted polar coordinates."""
    m, n, kap = spec.m, spec.n, spec.kappa_spm
    Im = _hankel_on(m, kk, spec.R)
    In = _hankel_on(n, kk, spec.R)
    s = sideband
    return 2 * np.pi * ((1j) ** (-m) * np.exp(-1j * s * (m * xi + kap)) * Im
                        + (1j) ** (-n) * np.exp(1j * s * n * xi) * In)


def analytic_fourier(spec: MaskSpec, grid: Grid2D, include=(0, 1, 2, 3)) -> AnalyticDiffraction:
    """Closed-form transform of the circular-aperture mask, term by term."""
    if spec.radial is not None:
        raise ValueError("radially designed masks have no analytic transform; "
                         "use the numeric far field")
    if not grid.is_momentum:
        raise ValueError("analytic_fourier needs a momentum grid")
    KX, KY = grid.mesh()
    k = np.hypot(KX, KY)
    xi = np.arctan2(KY, KX)
    out = AnalyticDiffraction(grid)
    q = spec.m + spec.n
    if 0 in include:
        out.components[0] = ComplexField2D(grid, 6 * np.pi * _hankel_on(0, k, spec.R))
    if 1 in include:
        out.components[1] = ComplexField2D(
            grid, 4 * np.pi * _hankel_on(q, k, spec.R) * (-1j) ** q
            * np.cos(q * xi + spec.kappa_spm))
    for j, s in ((2, 1), (3, -1)):
        if j in include:
            kx_s = KX - s * spec.k0
            ks = np.hypot(kx_s, KY)
            xs = np.arctan2(KY, kx_s)
            out.components[j] = ComplexField2D(grid, sideband_amplitude(spec, ks, xs, s))
    return out

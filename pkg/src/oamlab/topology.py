"""Probability current, OAM expectation value, topological charge and
azimuthal petal analysis of mixed-OAM densities."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .fields import (ATOMIC, ComplexField2D, PhysicalConstants, ScalarField2D,
                     SuperpositionSpec, bilinear_sample, eval_superposition_polar)


# ---------------------------------------------------------------- current

def probability_current(psi: ComplexField2D, constants: PhysicalConstants = ATOMIC):
    """``(hbar/m) Im(psi* grad psi)`` by central differences.

    Returns ``(jx, jy)`` arrays on the grid of ``psi``. Warns when adjacent
    samples differ in phase by more than pi away from density nodes.
    """
    v = np.asarray(psi.values)
    g = psi.grid
    dpsi_dy, dpsi_dx = np.gradient(v, g.dy, g.dx)
    rho = np.abs(v) ** 2
    strong = rho > 0.01 * rho.max()
    steps = ((v[1:, :] * np.conj(v[:-1, :]), strong[1:, :] & strong[:-1, :]),
             (v[:, 1:] * np.conj(v[:, :-1]), strong[:, 1:] & strong[:, :-1]))
    if any(np.any(np.abs(np.angle(p[both])) > 0.5 * math.pi) for p, both in steps):
        warnings.warn("phase changes by more than pi/2 between neighbouring samples; "
                      "the finite-difference current is under-resolved", stacklevel=2)
    c = constants.hbar_over_mass
    return c * np.imag(np.conj(v) * dpsi_dx), c * np.imag(np.conj(v) * dpsi_dy)


def current_polar(jx, jy, grid):
    """Radial and azimuthal components ``(j_r, j_xi)`` about the origin."""
    _, xi = grid.polar()
    c, s = np.cos(xi), np.sin(xi)
    return c * jx + s * jy, -s * jx + c * jy


def azimuthal_flow_ratio(psi: ComplexField2D, constants: PhysicalConstants = ATOMIC,
                         node_fraction=0.01):
    """Mean of ``k j_xi / (rho hbar/m)`` over samples with ``rho`` above
    ``node_fraction`` of the maximum; also returns the radial-to-azimuthal
    RMS ratio of the current over the same samples."""
    jx, jy = probability_current(psi, constants)
    jr, jxi = current_polar(jx, jy, psi.grid)
    k, _ = psi.grid.polar()
    rho = np.abs(psi.values) ** 2
    sel = (rho > node_fraction * rho.max()) & (k > 0)
    ratio = k[sel] * jxi[sel] / (rho[sel] * constants.hbar_over_mass)
    rms_r = math.sqrt(float(np.mean(jr[sel] ** 2)))
    rms_xi = math.sqrt(float(np.mean(jxi[sel] ** 2)))
    return float(np.mean(ratio)), rms_r / rms_xi


# ------------------------------------------------------------ <Lz> and charge

def expectation_lz(m, n, beta0):
    """``(beta0^2 m - n) / (1 + beta0^2)`` in units of hbar."""
    if not beta0 > 0:
        raise ValueError("beta0 must be positive")
    b2 = beta0 * beta0
    return (b2 * m - n) / (1.0 + b2)


def expectation_lz_numeric(ring_values, samples=None):
    """``<Lz>`` of uniformly spaced ring samples by spectral differentiation.

    ``ring_values`` are complex samples on ``[0, 2 pi)``; ``samples`` is
    accepted for symmetry with the ring samplers and must match their count.
    """
    v = np.asarray(ring_values, dtype=complex)
    if samples is not None and int(samples) != v.size:
        raise ValueError("sample count does not match the ring values")
    if v.size < 16:
        raise ValueError("need at least 16 ring samples")
    c = np.fft.fft(v)
    power = np.abs(c) ** 2
    total = power.sum()
    if total <= 1e-300 * v.size:
        raise ValueError("ring norm is numerically zero")
    q = np.fft.fftfreq(v.size, 1.0 / v.size)
    return float(np.sum(q * power) / total)


def ring_current_integral(ring_values):
    """``int_0^{2pi} Im(psi* d psi/d xi) d xi`` for ring samples normalized to
    unit ``int |psi|^2 d xi``; equals the ring-integrated azimuthal current
    times the ring radius in units of hbar/m."""
    v = np.asarray(ring_values, dtype=complex)
    N = v.size
    q = np.fft.fftfreq(N, 1.0 / N)
    dv = np.fft.ifft(1j * q * np.fft.fft(v))
    norm = np.sum(np.abs(v) ** 2) * 2 * math.pi / N
    return float(np.sum(np.imag(np.conj(v) * dv)) * 2 * math.pi / N / norm)


def topological_charge_closed_form(m, n, beta0):
    """Piecewise charge: ``m`` below ``beta0 = 1``, ``(m - n)/2`` at exactly 1
    and ``-n`` above.

    The winding of ``beta0 e^{i m xi} + e^{-i n xi}`` itself follows the
    dominant term (``-n`` below 1, ``m`` above), see
    :func:`topological_charge_numeric`.
    """
    if not beta0 > 0:
        raise ValueError("beta0 must be positive")
    if beta0 == 1:
        return (m - n) / 2.0
    return float(m) if beta0 < 1 else float(-n)


def _sampler(psi, center):
    if isinstance(psi, ComplexField2D):
        def f(x, y):
            return bilinear_sample(psi.values, psi.grid, x + center[0], y + center[1])
        return f
    if callable(psi):
        return lambda x, y: np.asarray(psi(x + center[0], y + center[1]), dtype=complex)
    raise TypeError("psi must be a ComplexField2D or a callable f(kx, ky)")


def topological_charge_numeric(psi, contour_radius, samples=256, node_skipping=True,
                               node_eps=1e-9, max_samples=2 ** 18, center=(0.0, 0.0)):
    """Winding number of ``psi`` along a circle, ``(1/2pi) sum dphi``.

    ``psi`` is a :class:`ComplexField2D` (bilinearly sampled) or a callable
    of ``(kx, ky)``. Samples are doubled until every phase increment is below
    pi/2. With ``node_skipping``, samples whose density is under
    ``node_eps`` of the ring maximum are dropped, and increments that stay
    above pi/2 at ``max_samples`` (a zero crossed on the contour, where the
    phase jumps by pi) are reduced modulo pi, so the jump itself does not
    count. Without node skipping such a contour raises ``ValueError``.
    """
    if contour_radius <= 0:
        raise ValueError("contour radius must be positive")
    f = _sampler(psi, center)
    N = max(int(samples), 16)
    while True:
        xi = 2 * math.pi * np.arange(N) / N
        vals = f(contour_radius * np.cos(xi), contour_radius * np.sin(xi))
        rho = np.abs(vals) ** 2
        if rho.max() == 0:
            raise ValueError("field vanishes on the whole contour")
        keep = rho > node_eps * rho.max() if node_skipping else np.ones(N, bool)
        ph = np.angle(vals[keep])
        d = np.angle(np.exp(1j * np.diff(np.append(ph, ph[0]))))
        big = np.abs(d) > 0.5 * math.pi
        if not np.any(big) or N >= max_samples:
            break
        N *= 2
    if np.any(big):
        if not node_skipping:
            raise ValueError("phase jump above pi/2 persists at the sampling limit "
                             "(zero on the contour)")
        d[big] = d[big] - math.pi * np.round(d[big] / math.pi)
    return float(np.sum(d) / (2 * math.pi))


def snap_integer(value, tol=0.05):
    """Round to the nearest integer when within ``tol``; else return as is."""
    r = round(value)
    return float(r) if abs(value - r) <= tol else float(value)


@dataclass
class TopologyReport:
    lz_closed_form: float
    lz_numeric: float
    charge_closed_form: float
    charge_numeric: float
    contour_radius: float

    def as_dict(self):
        return dict(self.__dict__)


def analyze_superposition(spec: SuperpositionSpec, contour_radius=1.0, samples=None):
    """Closed-form and numeric ``<Lz>`` and charge of an analytic state."""
    q = spec.m + spec.n
    samples = 32 * q if samples is None else samples
    xi = 2 * math.pi * np.arange(max(samples, 8 * q)) / max(samples, 8 * q)
    ring = eval_superposition_polar(spec, np.full_like(xi, contour_radius), xi)

    def psi(kx, ky):
        return eval_superposition_polar(spec, np.hypot(kx, ky), np.arctan2(ky, kx))

    return TopologyReport(
        lz_closed_form=expectation_lz(spec.m, spec.n, spec.beta0),
        lz_numeric=expectation_lz_numeric(ring),
        charge_closed_form=topological_charge_closed_form(spec.m, spec.n, spec.beta0),
        charge_numeric=topological_charge_numeric(psi, contour_radius, samples),
        contour_radius=contour_radius)


def lz_charge_sweep(m, n, betas, contour_radius=1.0):
    """Rows ``(beta0, lz_closed, lz_numeric, charge_closed, charge_numeric)``."""
    rows = []
    for b in betas:
        rep = analyze_superposition(SuperpositionSpec(m, n, float(b)), contour_radius)
        rows.append((float(b), rep.lz_closed_form, rep.lz_numeric,
                     rep.charge_closed_form, rep.charge_numeric))
    return rows


# ------------------------------------------------------------ ring spectrum

@dataclass
class AzimuthalSpectrum:
    """Azimuthal Fourier coefficients ``c_0..c_qmax`` of a density ring."""

    k: float
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        c[0] = c[0].real
        self.coefficients = c

    @property
    def c0(self):
        return float(self.coefficients[0].real)

    def contrast(self, q):
        if self.c0 <= 0:
            raise ValueError("ring mean is not positive")
        return min(1.0, max(0.0, 2.0 * abs(self.coefficients[q]) / self.c0))


def _density_values(density):
    if isinstance(density, ComplexField2D):
        return ScalarField2D(density.grid, np.abs(density.values) ** 2)
    return density


def azimuthal_spectrum(density, k_ring, q_max, samples=None, center=(0.0, 0.0)):
    """``c_q = (1/2pi) int rho(k_ring, xi) e^{-i q xi} d xi`` for q = 0..q_max.

    The ring is sampled bilinearly at ``samples`` points (default
    ``max(16 q_max, 1024)``) about ``center``.
    """
    density = _density_values(density)
    if q_max < 0:
        raise ValueError("q_max must be non-negative")
    N = max(16 * q_max, 1024) if samples is None else int(samples)
    if N < 16 * max(q_max, 1):
        raise ValueError("need at least 16 q_max ring samples")
    xi = 2 * math.pi * np.arange(N) / N
    vals = bilinear_sample(density.values, density.grid,
                           center[0] + k_ring * np.cos(xi), center[1] + k_ring * np.sin(xi))
    c = np.fft.fft(vals)[:q_max + 1] / N
    return AzimuthalSpectrum(float(k_ring), c)


def petal_rotation_angle(density, q, k_ring, center=(0.0, 0.0), samples=None):
    """Petal orientation ``arg(c_q)/q`` wrapped to ``(-pi/q, pi/q]``.

    For ``rho ~ 1 + cos(q xi + gamma)`` this returns ``gamma/q``; shifting
    ``gamma`` by ``delta`` changes the angle by ``delta/q``.
    """
    spec = azimuthal_spectrum(density, k_ring, q, samples, center)
    cq = spec.coefficients[q]
    if abs(cq) <= 0.05 * spec.c0:
        raise ValueError("azimuthal modulation too weak to define a petal angle")
    a = math.remainder(math.atan2(cq.imag, cq.real), 2 * math.pi) / q
    return math.pi / q if math.isclose(a, -math.pi / q, abs_tol=1e-15) else a


def angle_difference(a, b, q):
    """``a - b`` wrapped to ``(-pi/q, pi/q]`` (petal angles are q-periodic)."""
    period = 2 * math.pi / q
    d = math.remainder(a - b, period)
    return period / 2 if math.isclose(d, -period / 2, abs_tol=1e-15) else d


@dataclass
class SpiralFit:
    """Petal phase ``arg(c_q)/q`` against ``k^2`` on the usable rings."""

    k: np.ndarray
    angle: np.ndarray
    slope: float
    intercept: float


def petal_spiral_fit(density, q, k_values, min_contrast=0.5, center=(0.0, 0.0), samples=None):
    """Fit ``arg(c_q)/q = slope k^2 + intercept`` over rings with contrast
    at least ``min_contrast``; phases are unwrapped along ``k``."""
    ks, phases = [], []
    for k in np.asarray(k_values, dtype=float):
        spec = azimuthal_spectrum(density, k, q, samples, center)
        if spec.c0 > 0 and spec.contrast(q) >= min_contrast:
            ks.append(k)
            phases.append(np.angle(spec.coefficients[q]))
    if len(ks) < 3:
        raise ValueError("fewer than three rings pass the contrast threshold")
    ks = np.array(ks)
    angle = np.unwrap(np.array(phases)) / q
    slope, intercept = np.polyfit(ks * ks, angle, 1)
    return SpiralFit(ks, angle, float(slope), float(intercept))


def symmetry_contrast(density, q, k_ring, center=(0.0, 0.0), samples=None):
    """``2 |c_q| / c_0`` clamped to ``[0, 1]``."""
    spec = azimuthal_spectrum(density, k_ring, q, samples, center)
    if spec.c0 <= 0:
        raise ValueError("zero ring mean")
    return spec.contrast(q)

"""Bichromatic counter-rotating circular (CRCP) fields and the mixed-OAM
photoelectron wavefunction of two interfering multiphoton channels.

Labels: the red arm oscillates at ``n * omega`` (left circular) and is
absorbed ``m`` times, the blue arm oscillates at ``m * omega`` (right
circular) and is absorbed ``n`` times. Both reach the same final energy
``m * n * omega`` and carry OAM ``+m`` and ``-n`` respectively. All
quantities are in atomic units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .fields import (ATOMIC, Grid2D, Grid3D, PhysicalConstants, RadialProfile,
                     ScalarField2D, ScalarField3D, SuperpositionSpec, HARTREE_EV,
                     fs_to_au)
from .mask import wrap_angle
from .specfun import assoc_legendre

NM_AU = 45.56335252767  # photon energy in hartree times wavelength in nm

#: fundamental for the 880 nm / 660 nm (3:4) pulse pair
OMEGA_34 = NM_AU / 880.0 / 3.0
#: photoelectron momentum of the 0.5 eV interference window
K_CENTER_05EV = math.sqrt(2.0 * 0.5 / HARTREE_EV)


def _default_radial():
    return RadialProfile.gaussian(K_CENTER_05EV, 0.02)


@dataclass(frozen=True)
class MpiSpec:
    """Two-channel multiphoton ionization setup.

    ``m`` photonicity of the red channel (also the blue frequency multiple),
    ``n`` photonicity of the blue channel. ``tau`` delays the blue pulse,
    ``envelope_fwhm`` is the intensity FWHM (``inf`` for continuous waves),
    ``amplitude_ratio`` the weight of the OAM ``+m`` channel relative to the
    ``-n`` channel, which becomes ``beta0`` in the equatorial plane.
    """

    m: int = 4
    n: int = 3
    omega: float = OMEGA_34
    phi_r: float = 0.0
    phi_b: float = 0.0
    phi_ce: float = 0.0
    zeta: float = 0.0
    tau: float = 0.0
    envelope_fwhm: float = fs_to_au(25.0)
    radial: RadialProfile = field(default_factory=_default_radial)
    amplitude_ratio: float = 1.0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("photonicities must be >= 1")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not self.envelope_fwhm > 0:
            raise ValueError("envelope_fwhm must be positive")
        if not self.amplitude_ratio > 0:
            raise ValueError("amplitude_ratio must be positive")

    @property
    def red_frequency(self):
        return self.n * self.omega

    @property
    def blue_frequency(self):
        return self.m * self.omega


def envelope(t, fwhm):
    """Gaussian field envelope with intensity FWHM ``fwhm`` (1 for ``inf``)."""
    t = np.asarray(t, dtype=float)
    if math.isinf(fwhm):
        return np.ones_like(t)
    return np.exp(-2.0 * math.log(2.0) * (t / fwhm) ** 2)


def complex_field(spec: MpiSpec, t):
    """Analytic (negative-frequency) field vector, shape ``(2,) + t.shape``.

    The waveplate angle enters as ``exp(-i zeta)`` on the left and
    ``exp(+i zeta)`` on the right circular arm, i.e. an active rotation of
    the whole field by ``zeta``.
    """
    t = np.asarray(t, dtype=float)
    e_plus = np.array([1.0, 1j]) / math.sqrt(2.0)
    e_minus = np.array([1.0, -1j]) / math.sqrt(2.0)
    red = (envelope(t, spec.envelope_fwhm)
           * np.exp(-1j * (spec.red_frequency * t + spec.phi_r + spec.phi_ce + spec.zeta)))
    tb = t - spec.tau
    blue = (envelope(tb, spec.envelope_fwhm)
            * np.exp(-1j * (spec.blue_frequency * tb + spec.phi_b + spec.phi_ce - spec.zeta)))
    return (e_plus.reshape((2,) + (1,) * t.ndim) * red
            + e_minus.reshape((2,) + (1,) * t.ndim) * blue)


def electric_field(spec: MpiSpec, t):
    """Real field ``(Ex, Ey)``; scalars in, floats out."""
    E = complex_field(spec, t).real
    if np.ndim(t) == 0:
        return float(E[0]), float(E[1])
    return E[0], E[1]


def field_trace(spec: MpiSpec, t):
    """``(t, Ex, Ey)`` columns as one array of shape ``(len(t), 3)``."""
    t = np.asarray(t, dtype=float)
    ex, ey = electric_field(spec, t)
    return np.column_stack([t, ex, ey])


def field_symmetry_order(n, m):
    """Rotational symmetry of the CRCP trace, ``(n + m) / gcd(n, m)``."""
    n, m = int(n), int(m)
    if n < 1 or m < 1:
        raise ValueError("frequency multiples must be >= 1")
    return (n + m) // math.gcd(n, m)


def polarization_angle_rate(spec: MpiSpec):
    """Angular velocity of the instantaneous polarization direction.

    Equals ``(n_blue - n_red) * omega / 2`` written with the photonicities of
    the blue (``n``) and red (``m``) channels.
    """
    return (spec.n - spec.m) * spec.omega / 2.0


def unwrapped_polarization_angle(spec: MpiSpec, t, rel_floor=1e-6):
    """Unwrapped ``arctan(Ey / Ex)`` (period pi) on samples where the field is
    not vanishing; returns ``(t_kept, angle)``."""
    t = np.asarray(t, dtype=float)
    ex, ey = electric_field(spec, t)
    mag = np.hypot(ex, ey)
    keep = mag > rel_floor * mag.max()
    ang = np.arctan2(ey[keep], ex[keep])
    return t[keep], np.unwrap(ang, period=math.pi)


def trace_symmetry_distance(spec: MpiSpec, order=None, samples=None):
    """Hausdorff distance between a full-period CW trace and its copy rotated
    by ``2 pi / order`` (default the field symmetry order)."""
    cw = MpiSpec(spec.m, spec.n, spec.omega, spec.phi_r, spec.phi_b, spec.phi_ce,
                 spec.zeta, 0.0, math.inf, spec.radial, spec.amplitude_ratio)
    S = field_symmetry_order(spec.n, spec.m) if order is None else int(order)
    q = spec.n + spec.m
    samples = 360 * q if samples is None else int(samples)
    t = 2 * math.pi / spec.omega * np.arange(samples) / samples
    ex, ey = electric_field(cw, t)
    pts = np.column_stack([ex, ey])
    a = 2 * math.pi / S
    rot = pts @ np.array([[math.cos(a), math.sin(a)], [-math.sin(a), math.cos(a)]])
    return max(directed_hausdorff(pts, rot)[0], directed_hausdorff(rot, pts)[0])


def kappa_mpi(spec: MpiSpec):
    """Relative phase of the ``+m`` channel set by the optical phases."""
    m, n = spec.m, spec.n
    k = -m * spec.phi_r + n * spec.phi_b - (m - n) * spec.phi_ce + (m + n) * spec.zeta
    return wrap_angle(k)


def gamma_from_mpi(spec: MpiSpec):
    """Equatorial superposition phase ``kappa + (m - n) pi/2 + m pi``."""
    return wrap_angle(kappa_mpi(spec) + (spec.m - spec.n) * math.pi / 2 + spec.m * math.pi)


def time_delay_gamma(k, tau, gamma0, constants: PhysicalConstants = ATOMIC):
    """``gamma0 + hbar tau k^2 / (2 m_e)`` (unwrapped)."""
    k = np.asarray(k, dtype=float)
    return gamma0 + constants.hbar_over_mass * tau * k * k / 2.0


def _angular(l, mu, cos_theta):
    """``P_{l,mu}(cos theta)`` scaled to unit modulus at the equator."""
    p = assoc_legendre(l, mu, cos_theta)
    return p / abs(assoc_legendre(l, mu, 0.0))


def photoelectron_wavefunction(spec: MpiSpec, k, xi, theta):
    """Two-channel wavefunction ``psi_{m,m} e^{i kappa} + psi_{n,-n}``.

    Each ``psi_{l,mu} = i^l R(k) P_{l,mu}(cos theta) e^{i mu xi}`` uses the
    exact Legendre factor divided by ``|P_{l,mu}(0)|``, so the equatorial
    channel ratio is exactly ``amplitude_ratio``. A blue delay ``tau`` adds
    the phase ``tau k^2 / 2`` to the ``+m`` channel.
    """
    k = np.asarray(k, dtype=float)
    xi = np.asarray(xi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(k < 0):
        raise ValueError("k must be non-negative")
    if np.any(theta < 0) or np.any(theta > math.pi):
        raise ValueError("theta must lie in [0, pi]")
    m, n = spec.m, spec.n
    ct = np.cos(theta)
    radial = spec.radial(k)
    phase_m = kappa_mpi(spec) + time_delay_gamma(k, spec.tau, 0.0)
    psi_m = ((1j) ** m * spec.amplitude_ratio * radial * _angular(m, m, ct)
             * np.exp(1j * (m * xi + phase_m)))
    psi_n = (1j) ** n * radial * _angular(n, -n, ct) * np.exp(-1j * n * xi)
    return psi_m + psi_n


def equatorial_superposition(spec: MpiSpec) -> SuperpositionSpec:
    """Equivalent :class:`SuperpositionSpec` in the equatorial plane (tau=0)."""
    return SuperpositionSpec(spec.m, spec.n, spec.amplitude_ratio,
                             gamma_from_mpi(spec), spec.radial)


def equatorial_density(spec: MpiSpec, grid: Grid2D) -> ScalarField2D:
    if not grid.is_momentum:
        raise ValueError("equatorial density needs a momentum grid")
    k, xi = grid.polar()
    psi = photoelectron_wavefunction(spec, k, xi, np.full_like(k, math.pi / 2))
    return ScalarField2D(grid, np.abs(psi) ** 2)


def pmd_density_3d(spec: MpiSpec, grid: Grid3D, axis="z", slab=8) -> ScalarField3D:
    """``|Psi|^2`` on a Cartesian momentum grid.

    ``axis`` is the polarization-plane normal (laser propagation direction);
    with ``"y"`` the petals lie in the x-z plane, which is the layout the
    tomography module reconstructs slice by slice.
    """
    if grid.space_tag != "momentum":
        raise ValueError("pmd_density_3d needs a momentum-space grid")
    if axis not in ("y", "z"):
        raise ValueError("axis must be 'y' or 'z'")
    out = np.empty(grid.shape)
    X, Y = np.meshgrid(grid.x, grid.y)
    for lo in range(0, grid.nz, slab):
        z = grid.z[lo:lo + slab][:, None, None]
        if axis == "z":
            a, b, c = X[None], Y[None], z
        else:
            a, b, c = z + 0 * X[None], X[None] + 0 * z, Y[None] + 0 * z
        # (a, b) span the polarization plane, c is along the normal
        k = np.sqrt(a * a + b * b + c * c)
        xi = np.arctan2(b, a)
        theta = np.arccos(np.clip(np.divide(c, k, out=np.ones_like(k), where=k > 0), -1, 1))
        out[lo:lo + slab] = np.abs(photoelectron_wavefunction(spec, k, xi, theta)) ** 2
    return ScalarField3D(grid, out)


def equatorial_slice(density: ScalarField3D, axis="y") -> ScalarField2D:
    """Central slice perpendicular to ``axis`` as a 2D field.

    For ``axis="y"`` the first 2D coordinate is z and the second x, matching
    the in-plane angle ``atan2(x, z)`` used by :func:`pmd_density_3d`.
    """
    g = density.grid
    if axis == "z":
        return ScalarField2D(Grid2D(g.nx, g.ny, g.extent_x, g.extent_y, g.space_tag,
                                    g.unit_tag), density.values[g.nz // 2])
    if axis == "y":
        return ScalarField2D(Grid2D(g.nz, g.nx, g.extent_z, g.extent_x, g.space_tag,
                                    g.unit_tag), density.values[:, g.ny // 2, :].T)
    raise ValueError("axis must be 'y' or 'z'")

"""Sample grids, sampled fields, physical constants and the mixed-OAM state.

All arrays are stored row-major with shape ``(ny, nx)`` (or ``(nz, ny, nx)``),
so the first index runs along y. Sample ``i`` along an axis with ``n`` samples
and spacing ``d`` sits at coordinate ``(i - n // 2) * d``; index ``n // 2`` is
the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import constants as sc

REAL_SPACE = "real"
MOMENTUM_SPACE = "momentum"
SPACE_TAGS = (REAL_SPACE, MOMENTUM_SPACE)

MICROMETERS = "micrometers"
INVERSE_MICROMETERS = "inverse-micrometers"
ATOMIC_UNITS = "atomic-units"
UNIT_TAGS = (MICROMETERS, INVERSE_MICROMETERS, ATOMIC_UNITS)

MIN_SAMPLES = 16


def _axis(n, d):
    return (np.arange(n) - n // 2) * d


def _wrap_branch(phi):
    # atan2 gives -pi for (negative x, -0.0); fold it onto +pi
    return np.where(phi <= -np.pi, phi + 2 * np.pi, phi)


@dataclass(frozen=True)
class Grid2D:
    """Uniform origin-centred 2D lattice.

    ``extent_x`` and ``extent_y`` are physical half-widths, so the sample
    spacing is ``2 * extent / n``.
    """

    nx: int
    ny: int
    extent_x: float
    extent_y: float
    space_tag: str = REAL_SPACE
    unit_tag: str = MICROMETERS

    def __post_init__(self):
        for n in (self.nx, self.ny):
            if int(n) != n or n < MIN_SAMPLES or n % 2:
                raise ValueError(
                    f"sample counts must be even and >= {MIN_SAMPLES}, got {n}")
        if not (self.extent_x > 0 and self.extent_y > 0):
            raise ValueError("grid extents must be positive")
        if not (np.isfinite(self.extent_x) and np.isfinite(self.extent_y)):
            raise ValueError("grid extents must be finite")
        if self.space_tag not in SPACE_TAGS:
            raise ValueError(f"unknown space tag {self.space_tag!r}")
        if self.unit_tag not in UNIT_TAGS:
            raise ValueError(f"unknown unit tag {self.unit_tag!r}")

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def dx(self):
        return 2.0 * self.extent_x / self.nx

    @property
    def dy(self):
        return 2.0 * self.extent_y / self.ny

    @property
    def x(self):
        return _axis(self.nx, self.dx)

    @property
    def y(self):
        return _axis(self.ny, self.dy)

    def mesh(self):
        """Return ``(X, Y)`` coordinate arrays of shape ``(ny, nx)``."""
        return np.meshgrid(self.x, self.y)

    def polar(self):
        """Return ``(r, phi)`` with ``r >= 0`` and ``phi`` in ``(-pi, pi]``."""
        X, Y = self.mesh()
        return np.hypot(X, Y), _wrap_branch(np.arctan2(Y, X))

    @property
    def is_momentum(self):
        return self.space_tag == MOMENTUM_SPACE

    def index_of(self, x, y):
        """Fractional array indices ``(row, col)`` of a physical point."""
        return y / self.dy + self.ny // 2, x / self.dx + self.nx // 2


@dataclass(frozen=True)
class Grid3D:
    """Uniform origin-centred 3D lattice, array shape ``(nz, ny, nx)``."""

    nx: int
    ny: int
    nz: int
    extent_x: float
    extent_y: float
    extent_z: float
    space_tag: str = MOMENTUM_SPACE
    unit_tag: str = ATOMIC_UNITS

    def __post_init__(self):
        for n in (self.nx, self.ny, self.nz):
            if int(n) != n or n < MIN_SAMPLES or n % 2:
                raise ValueError(
                    f"sample counts must be even and >= {MIN_SAMPLES}, got {n}")
        if min(self.extent_x, self.extent_y, self.extent_z) <= 0:
            raise ValueError("grid extents must be positive")

    @property
    def shape(self):
        return (self.nz, self.ny, self.nx)

    @property
    def spacing(self):
        return (2.0 * self.extent_z / self.nz, 2.0 * self.extent_y / self.ny,
                2.0 * self.extent_x / self.nx)

    @property
    def x(self):
        return _axis(self.nx, self.spacing[2])

    @property
    def y(self):
        return _axis(self.ny, self.spacing[1])

    @property
    def z(self):
        return _axis(self.nz, self.spacing[0])

    def slice_grid(self):
        """The x-y grid of one constant-z plane."""
        return Grid2D(self.nx, self.ny, self.extent_x, self.extent_y,
                      self.space_tag, self.unit_tag)


def make_grid(nx, ny, extent_x, extent_y, space_tag=REAL_SPACE,
              unit_tag=MICROMETERS):
    return Grid2D(int(nx), int(ny), float(extent_x), float(extent_y),
                  space_tag, unit_tag)


def make_cubic_grid(n, extent, space_tag=MOMENTUM_SPACE, unit_tag=ATOMIC_UNITS):
    return Grid3D(n, n, n, extent, extent, extent, space_tag, unit_tag)


def reciprocal_of(grid: Grid2D) -> Grid2D:
    """DFT-conjugate grid.

    The reciprocal spacing is ``2 pi / (n dx)`` and the reciprocal half-width
    is ``pi n / (2 extent)``, i.e. the Nyquist wavenumber ``pi / dx``.
    """
    if grid.space_tag == REAL_SPACE:
        space = MOMENTUM_SPACE
        unit = INVERSE_MICROMETERS if grid.unit_tag == MICROMETERS else grid.unit_tag
    else:
        space = REAL_SPACE
        unit = MICROMETERS if grid.unit_tag == INVERSE_MICROMETERS else grid.unit_tag
    return Grid2D(grid.nx, grid.ny,
                  math.pi * grid.nx / (2.0 * grid.extent_x),
                  math.pi * grid.ny / (2.0 * grid.extent_y),
                  space, unit)


class _Field:
    dtype = np.float64

    def __init__(self, grid, values):
        values = np.array(values, dtype=self.dtype, copy=True)
        if values.shape != grid.shape:
            if values.size != int(np.prod(grid.shape)):
                raise ValueError(
                    f"value array of shape {values.shape} does not fit grid {grid.shape}")
            values = values.reshape(grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    def __repr__(self):
        return f"{type(self).__name__}(grid={self.grid!r})"


class ComplexField2D(_Field):
    """Complex amplitude sampled on a :class:`Grid2D` (read-only values)."""

    dtype = np.complex128

    def intensity(self):
        return ScalarField2D(self.grid, np.abs(self.values) ** 2)

    def l2_norm(self):
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2))
                         * self.grid.dx * self.grid.dy)

    def normalized(self):
        """Copy scaled to unit L2 norm on the grid."""
        norm = self.l2_norm()
        if norm == 0:
            raise ValueError("cannot normalize an all-zero field")
        return ComplexField2D(self.grid, self.values / norm)


class ScalarField2D(_Field):
    """Real values sampled on a :class:`Grid2D` (read-only values)."""


class ScalarField3D(_Field):
    """Real values sampled on a :class:`Grid3D` (read-only values)."""


def l2_normalize(psi: ComplexField2D) -> ComplexField2D:
    return psi.normalized()


@dataclass(frozen=True)
class PhysicalConstants:
    """hbar and electron mass in one of two unit systems.

    ``"SI-micron"`` keeps SI values but :attr:`hbar_over_mass` is returned in
    um^2/s so that currents computed from wavenumbers in 1/um come out in
    1/s per unit density. ``"atomic-units"`` sets both to exactly 1.
    """

    unit_system: str = "atomic-units"
    hbar: float = field(init=False)
    electron_mass: float = field(init=False)

    def __post_init__(self):
        if self.unit_system == "atomic-units":
            hbar, mass = 1.0, 1.0
        elif self.unit_system == "SI-micron":
            hbar, mass = sc.hbar, sc.m_e
        else:
            raise ValueError(f"unknown unit system {self.unit_system!r}")
        object.__setattr__(self, "hbar", hbar)
        object.__setattr__(self, "electron_mass", mass)

    @property
    def hbar_over_mass(self):
        if self.unit_system == "SI-micron":
            return self.hbar / self.electron_mass * 1e12
        return self.hbar / self.electron_mass


ATOMIC = PhysicalConstants("atomic-units")
SI_MICRON = PhysicalConstants("SI-micron")

AU_TIME_FS = sc.physical_constants["atomic unit of time"][0] * 1e15
HARTREE_EV = sc.physical_constants["Hartree energy in eV"][0]


def fs_to_au(t_fs):
    return t_fs / AU_TIME_FS


def au_to_fs(t_au):
    return t_au * AU_TIME_FS


class RadialProfile:
    """Real radial weight G(k).

    Build instances with :meth:`gaussian`, :meth:`aperture_hankel` or
    :meth:`tabulated`; call the instance on an array of radii.
    """

    def __init__(self, kind, **params):
        self.kind = kind
        self.params = params
        if kind == "gaussian":
            if not params["k_sigma"] > 0:
                raise ValueError("gaussian profile needs k_sigma > 0")
        elif kind == "tabulated":
            k = np.asarray(params["k"], dtype=float)
            g = np.asarray(params["g"], dtype=float)
            if k.ndim != 1 or k.shape != g.shape or k.size < 2:
                raise ValueError("tabulated profile needs matching 1D k and g")
            if np.any(np.diff(k) <= 0):
                raise ValueError("tabulated k must be strictly increasing")
            self.params = {"k": k, "g": g}
        elif kind == "aperture-hankel":
            if int(params["order"]) < 0 or not params["R"] > 0:
                raise ValueError("aperture-hankel profile needs order >= 0 and R > 0")
        elif kind != "constant":
            raise ValueError(f"unknown radial profile kind {kind!r}")

    @classmethod
    def gaussian(cls, k_center, k_sigma):
        return cls("gaussian", k_center=float(k_center), k_sigma=float(k_sigma))

    @classmethod
    def aperture_hankel(cls, order, R):
        return cls("aperture-hankel", order=int(order), R=float(R))

    @classmethod
    def tabulated(cls, k, g):
        return cls("tabulated", k=k, g=g)

    @classmethod
    def constant(cls, value=1.0):
        return cls("constant", value=float(value))

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        p = self.params
        if self.kind == "gaussian":
            return np.exp(-0.5 * ((k - p["k_center"]) / p["k_sigma"]) ** 2)
        if self.kind == "tabulated":
            return np.interp(k, p["k"], p["g"], left=0.0, right=0.0)
        if self.kind == "constant":
            return np.full(k.shape, p["value"])
        from .specfun import aperture_hankel_table
        return aperture_hankel_table(p["order"], k, p["R"])

    def __repr__(self):
        shown = {key: v for key, v in self.params.items() if np.ndim(v) == 0}
        return f"RadialProfile({self.kind!r}, {shown})"


@dataclass(frozen=True)
class SuperpositionSpec:
    """Two-component OAM state G(k) (beta0 e^{i gamma} e^{i m xi} + e^{-i n xi})."""

    m: int
    n: int
    beta0: float = 1.0
    gamma: float = 0.0
    radial_profile: Optional[RadialProfile] = None

    def __post_init__(self):
        if self.m < 0 or self.n < 0 or self.m + self.n < 1:
            raise ValueError("need m, n >= 0 with m + n >= 1")
        if not self.beta0 > 0:
            raise ValueError("beta0 must be positive")

    def radial(self, k):
        if self.radial_profile is None:
            return np.ones_like(np.asarray(k, dtype=float))
        return self.radial_profile(k)


def eval_superposition_polar(spec: SuperpositionSpec, k, xi, gamma=None):
    """Evaluate the superposition at polar momentum coordinates.

    ``gamma`` may be an array broadcastable with ``k`` to model a
    k-dependent relative phase; it defaults to ``spec.gamma``.
    """
    k = np.asarray(k, dtype=float)
    xi = np.asarray(xi, dtype=float)
    g = spec.gamma if gamma is None else np.asarray(gamma, dtype=float)
    angular = spec.beta0 * np.exp(1j * (g + spec.m * xi)) + np.exp(-1j * spec.n * xi)
    return spec.radial(k) * angular


def eval_superposition(spec: SuperpositionSpec, grid: Grid2D, gamma=None) -> ComplexField2D:
    if not grid.is_momentum:
        raise ValueError("superposition states are evaluated on a momentum grid")
    k, xi = grid.polar()
    if callable(gamma):
        gamma = gamma(k)
    return ComplexField2D(grid, eval_superposition_polar(spec, k, xi, gamma))


def bilinear_sample(values, grid: Grid2D, x, y):
    """Bilinearly interpolate ``values`` (shape ``grid.shape``) at points.

    Raises ``ValueError`` when a point falls outside the sampled lattice.
    """
    row, col = grid.index_of(np.asarray(x, float), np.asarray(y, float))
    if (np.any(row < 0) or np.any(col < 0) or np.any(row > grid.ny - 1)
            or np.any(col > grid.nx - 1)):
        raise ValueError("sample points fall outside the grid")
    r0 = np.clip(np.floor(row).astype(int), 0, grid.ny - 2)
    c0 = np.clip(np.floor(col).astype(int), 0, grid.nx - 2)
    fr = row - r0
    fc = col - c0
    v = values
    return ((1 - fr) * (1 - fc) * v[r0, c0] + (1 - fr) * fc * v[r0, c0 + 1]
            + fr * (1 - fc) * v[r0 + 1, c0] + fr * fc * v[r0 + 1, c0 + 1])


def sample_ring(field_like, radius, samples, center=(0.0, 0.0)):
    """Sample a 2D field on a circle; returns ``(xi, values)``.

    ``xi`` is uniform on ``[0, 2 pi)``.
    """
    xi = 2 * np.pi * np.arange(samples) / samples
    x = center[0] + radius * np.cos(xi)
    y = center[1] + radius * np.sin(xi)
    return xi, bilinear_sample(field_like.values, field_like.grid, x, y)


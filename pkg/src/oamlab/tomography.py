"""Projection of 3D momentum densities and Fourier-slice reconstruction.

The rotation axis is the grid y-axis and the detector is the x-y plane, so a
projection at angle ``a`` is

    P_a(x, y) = int rho(x cos a + z sin a, y, -x sin a + z cos a) dz

and the 1D transform of each detector row is a central line of the 2D
transform of the corresponding constant-y slice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.ndimage import map_coordinates

from .fields import Grid2D, Grid3D, ScalarField2D, ScalarField3D


@dataclass
class ProjectionSet:
    """Detector images, one per rotation angle, on a shared x-y grid."""

    angles: np.ndarray
    images: np.ndarray
    grid: Grid2D

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        self.images = np.asarray(self.images, dtype=float)
        if self.images.ndim != 3 or self.images.shape[0] != self.angles.size:
            raise ValueError("need one image per angle")
        if self.images.shape[1:] != self.grid.shape:
            raise ValueError("projection images do not match the detector grid")
        if np.any(np.diff(self.angles) <= 0):
            raise ValueError("angles must be strictly increasing")
        if self.angles.size and (self.angles[0] < 0 or self.angles[-1] >= math.pi):
            raise ValueError("angles must lie in [0, pi)")
        if np.any(self.images < 0):
            raise ValueError("projection images must be non-negative")

    def __len__(self):
        return self.angles.size

    def image(self, i) -> ScalarField2D:
        return ScalarField2D(self.grid, self.images[i])


def _check_cubic(grid: Grid3D):
    if not (grid.nx == grid.nz and math.isclose(grid.extent_x, grid.extent_z)):
        raise ValueError("projection needs equal x and z sampling")


def _rotated_coords(grid: Grid3D, angle):
    """Index coordinates of the rotated sample positions (trilinear lookup)."""
    nz, ny, nx = grid.shape
    dz, dy, dx = grid.spacing
    x = grid.x
    z = grid.z
    Z, X = np.meshgrid(z, x, indexing="ij")
    c, s = math.cos(angle), math.sin(angle)
    xs = X * c + Z * s
    zs = -X * s + Z * c
    ci = xs / dx + nx // 2
    zi = zs / dz + nz // 2
    return zi, ci


def _shear(values, shift, axis, d):
    """Shift each 1D line along ``axis`` by ``shift`` (broadcast over the other
    axes) using the Fourier shift theorem; ``out(u) = in(u + shift)``."""
    n = values.shape[axis]
    k = 2 * math.pi * sfft.rfftfreq(n, d)
    shape = [1] * values.ndim
    shape[axis] = k.size
    spec = sfft.rfft(values, axis=axis) * np.exp(1j * k.reshape(shape) * shift)
    return sfft.irfft(spec, n=n, axis=axis)


def _rotate_fourier(values, grid: Grid3D, angle):
    # three shears x, z, x on a zero-padded (z, y, x) volume
    nz, ny, nx = grid.shape
    dz, _, dx = grid.spacing
    pz, px = nz // 2, nx // 2
    vol = np.pad(values, ((pz, pz), (0, 0), (px, px)))
    x = (np.arange(vol.shape[2]) - vol.shape[2] // 2) * dx
    z = (np.arange(vol.shape[0]) - vol.shape[0] // 2) * dz
    t = math.tan(angle / 2)
    s = math.sin(angle)
    vol = _shear(vol, t * z[:, None, None], 2, dx)
    vol = _shear(vol, -s * x[None, None, :], 0, dz)
    vol = _shear(vol, t * z[:, None, None], 2, dx)
    return vol[pz:pz + nz, :, px:px + nx]


def rotate_density(density: ScalarField3D, angle, interpolation="fourier") -> ScalarField3D:
    """Density seen in a frame rotated by ``angle`` about y:
    ``out(x, y, z) = rho(x cos a + z sin a, y, -x sin a + z cos a)``.

    ``"fourier"`` rotates by three Fourier-shift shears on a twice padded
    volume, which is exact for band-limited densities and conserves the
    sum; ``"linear"`` uses bilinear lookup in each x-z plane.
    """
    g = density.grid
    _check_cubic(g)
    if interpolation == "fourier":
        if abs(math.remainder(angle, 2 * math.pi)) > 0.5 * math.pi:
            # keep each shear below 45 degrees: rotate by pi first (exact index flip)
            flipped = density.values[::-1, :, ::-1]
            if g.nx % 2 == 0:
                flipped = np.roll(flipped, 1, axis=(0, 2))
            return ScalarField3D(g, _rotate_fourier(flipped, g, math.remainder(angle - math.pi,
                                                                               2 * math.pi)))
        return ScalarField3D(g, _rotate_fourier(density.values, g, angle))
    if interpolation != "linear":
        raise ValueError("interpolation must be 'fourier' or 'linear'")
    zi, ci = _rotated_coords(g, angle)
    out = np.empty(g.shape)
    for j in range(g.ny):
        out[:, j, :] = map_coordinates(density.values[:, j, :], [zi, ci], order=1,
                                       mode="constant", cval=0.0)
    return ScalarField3D(g, out)


def project(density: ScalarField3D, angle, interpolation="fourier") -> ScalarField2D:
    """Line integrals along z of the density rotated by ``angle`` about y."""
    g = density.grid
    rotated = rotate_density(density, angle, interpolation).values
    dz = g.spacing[0]
    return ScalarField2D(g.slice_grid(), np.clip(rotated.sum(axis=0) * dz, 0.0, None))


def project_all(density: ScalarField3D, angles, interpolation="fourier") -> ProjectionSet:
    angles = np.asarray(angles, dtype=float)
    images = np.stack([project(density, a, interpolation).values for a in angles])
    return ProjectionSet(angles, images, density.grid.slice_grid())


def uniform_angles(count=45, step_deg=4.0):
    """``count`` angles ``0, step, 2 step, ...`` in radians."""
    return np.deg2rad(step_deg) * np.arange(count)


@dataclass
class Reconstruction:
    density: ScalarField3D
    clamped_fraction: float
    raw_mass: float

    @property
    def values(self):
        return self.density.values


def _polar_weights(angles, N, P, dx):
    """Bilinear (angle, radial-frequency) lookup for every Cartesian
    frequency of a ``P x P`` transform; returns flat indices and weights
    into an ``(n_angles, P)`` table of centred row spectra."""
    na = angles.size
    du = 2 * math.pi / (P * dx)
    kk = (np.arange(P) - P // 2) * du
    KZ, KX = np.meshgrid(kk, kk, indexing="ij")
    k = np.hypot(KX, KZ)
    theta = np.arctan2(-KZ, KX)
    flip = (theta < 0) | (theta >= math.pi)
    theta = np.where(flip, np.mod(theta + math.pi, math.pi), theta)
    u = np.where(flip, -k, k)
    # bracket [a_i, a_{i+1}); the wrap brackets reuse the opposite line with u -> -u
    i0 = np.searchsorted(angles, theta, side="right") - 1
    below = i0 < 0
    above = i0 >= na - 1
    inner = ~below & ~above
    i0c = np.clip(i0, 0, na - 2)
    a_lo = np.where(inner, angles[i0c], np.where(below, angles[-1] - math.pi, angles[-1]))
    a_hi = np.where(inner, angles[i0c + 1], np.where(below, angles[0], angles[0] + math.pi))
    t = (theta - a_lo) / (a_hi - a_lo)
    i0 = np.where(inner, i0c, np.where(below, na - 1, na - 1))
    i1 = np.where(inner, i0c + 1, 0)
    u0 = np.where(below, -u, u)
    u1 = np.where(above, -u, u)
    idx, wts = [], []
    for ia, uu, wa in ((i0, u0, 1 - t), (i1, u1, t)):
        pos = uu / du + P // 2
        j0 = np.floor(pos).astype(int)
        f = pos - j0
        for jj, wr in ((j0, 1 - f), (j0 + 1, f)):
            ok = (jj >= 0) & (jj < P)
            idx.append(np.where(ok, ia * P + np.clip(jj, 0, P - 1), 0).ravel())
            wts.append(np.where(ok, wa * wr, 0.0).ravel())
    return np.stack(idx), np.stack(wts)


def fourier_slice_reconstruct(projections: ProjectionSet, oversample=2, workers=None,
                              nz=None) -> Reconstruction:
    """Slice-by-slice direct Fourier reconstruction.

    Each detector row (constant y) is zero-padded by ``oversample`` and
    transformed; the resulting radial lines are interpolated bilinearly in
    (angle, frequency) onto a Cartesian frequency grid, which is inverted
    and cropped. Negative values are clamped to zero; the clamped share of
    the absolute mass is reported.
    """
    na = len(projections)
    if na < 2:
        raise ValueError("need at least two projection angles")
    g2 = projections.grid
    N = g2.nx
    nz = N if nz is None else nz
    if nz != N:
        raise ValueError("reconstruction depth must equal the detector width")
    P = int(oversample) * N
    dx = g2.dx
    idx, wts = _polar_weights(projections.angles, N, P, dx)
    pad = np.zeros((g2.ny, na, P))
    lo = (P - N) // 2
    # rows: (ny, na, N) with the x origin at index N/2 -> P/2 after padding
    pad[:, :, lo:lo + N] = np.transpose(projections.images, (1, 0, 2))
    spec = sfft.fftshift(sfft.fft(sfft.ifftshift(pad, axes=-1), axis=-1, workers=workers),
                         axes=-1) * dx
    flat = spec.reshape(g2.ny, na * P)
    cart = np.zeros((g2.ny, P * P), dtype=complex)
    for i in range(idx.shape[0]):
        cart += flat[:, idx[i]] * wts[i]
    cart = cart.reshape(g2.ny, P, P)
    img = sfft.fftshift(sfft.ifft2(sfft.ifftshift(cart, axes=(-2, -1)), axes=(-2, -1),
                                   workers=workers), axes=(-2, -1)).real
    img /= dx * dx
    vol = img[:, lo:lo + N, lo:lo + N]  # (ny, z, x)
    vol = np.ascontiguousarray(np.transpose(vol, (1, 0, 2)))
    raw_mass = float(vol.sum() * dx ** 2 * g2.dy)
    neg = -vol[vol < 0].sum()
    total = np.abs(vol).sum()
    clamped = float(neg / total) if total > 0 else 0.0
    vol = np.clip(vol, 0.0, None)
    grid = Grid3D(N, g2.ny, N, g2.extent_x, g2.extent_y, g2.extent_x,
                  g2.space_tag, g2.unit_tag)
    return Reconstruction(ScalarField3D(grid, vol), clamped, raw_mass)


def vmi_radial_remap(image: ScalarField2D, mode="energy-linear", r_floor=None) -> ScalarField2D:
    """Radial remap ``r -> r^2 / r_max`` (energy-linear) preserving counts.

    ``r_max`` is the largest radius inside the image, so the outer edge stays
    fixed. The density weight ``r_max / (2 r')`` is capped at ``r' = r_floor``
    (default half a pixel). ``"k-linear"`` returns the image unchanged.
    """
    if mode == "k-linear":
        return ScalarField2D(image.grid, image.values)
    if mode != "energy-linear":
        raise ValueError("mode must be 'k-linear' or 'energy-linear'")
    g = image.grid
    r_max = min(g.x[-1], g.y[-1])
    rp, phi = g.polar()
    r_src = np.sqrt(rp * r_max)
    ci = r_src * np.cos(phi) / g.dx + g.nx // 2
    ri = r_src * np.sin(phi) / g.dy + g.ny // 2
    vals = map_coordinates(image.values, [ri, ci], order=1, mode="constant", cval=0.0)
    floor = 0.5 * min(g.dx, g.dy) if r_floor is None else r_floor
    weight = r_max / (2.0 * np.maximum(rp, floor))
    out = np.where(rp <= r_max, vals * weight, 0.0)
    return ScalarField2D(g, out)


def ball_phantom(grid: Grid3D, radius, center=(0.0, 0.0, 0.0)) -> ScalarField3D:
    """Unit-density ball with a one-sample linear edge (partial volume)."""
    dz, dy, dx = grid.spacing
    Z, Y, X = np.meshgrid(grid.z - center[2], grid.y - center[1], grid.x - center[0],
                          indexing="ij")
    r = np.sqrt(X * X + Y * Y + Z * Z)
    h = max(dx, dy, dz)
    return ScalarField3D(grid, np.clip((radius - r) / h + 0.5, 0.0, 1.0))


def blob_phantom(grid: Grid3D, count=6, seed=0, max_radius_fraction=0.6) -> ScalarField3D:
    """Sum of random isotropic Gaussian blobs inside the inscribed sphere."""
    rng = np.random.default_rng(seed)
    ext = min(grid.extent_x, grid.extent_y, grid.extent_z)
    Z, Y, X = np.meshgrid(grid.z, grid.y, grid.x, indexing="ij")
    out = np.zeros(grid.shape)
    for _ in range(count):
        c = rng.uniform(-1, 1, 3) * max_radius_fraction * ext / math.sqrt(3)
        w = rng.uniform(0.05, 0.15) * ext
        a = rng.uniform(0.5, 1.5)
        out += a * np.exp(-((X - c[0]) ** 2 + (Y - c[1]) ** 2 + (Z - c[2]) ** 2) / (2 * w * w))
    return ScalarField3D(grid, out)

"""Numeric far-field (Fraunhofer) diffraction of sampled masks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .fields import (ComplexField2D, Grid2D, ScalarField2D, REAL_SPACE,
                     reciprocal_of)


@dataclass
class DiffractionResult:
    """Far-field amplitude on the reciprocal grid of ``source_grid``."""

    amplitude: ComplexField2D
    source_grid: Grid2D

    @property
    def grid(self):
        return self.amplitude.grid

    @property
    def intensity(self) -> ScalarField2D:
        return self.amplitude.intensity()


def _pad2(values, grid):
    ny, nx = grid.shape
    out = np.zeros((2 * ny, 2 * nx), dtype=values.dtype)
    out[ny // 2:ny // 2 + ny, nx // 2:nx // 2 + nx] = values
    g = Grid2D(2 * nx, 2 * ny, 2 * grid.extent_x, 2 * grid.extent_y,
               grid.space_tag, grid.unit_tag)
    return out, g


def far_field(mask, pad=False, workers=None) -> DiffractionResult:
    """Continuous-normalized Fourier transform with kernel ``exp(-i k.r)``.

    The sample at index ``n/2`` is the origin in both spaces, so the centring
    is done with ``ifftshift``/``fftshift`` only. ``pad`` doubles the grid
    with zeros (halving the reciprocal spacing).
    """
    grid = mask.grid
    if grid.space_tag != REAL_SPACE:
        raise ValueError("far_field expects a real-space field")
    values = np.asarray(mask.values)
    if pad:
        values, grid = _pad2(values, grid)
    spec = sfft.fftshift(sfft.fft2(sfft.ifftshift(values), workers=workers))
    spec *= grid.dx * grid.dy
    return DiffractionResult(ComplexField2D(reciprocal_of(grid), spec), grid)


def extract_sideband(result, center_kx, window_radius, center_ky=0.0) -> ComplexField2D:
    """Square crop around ``(center_kx, center_ky)`` re-centred at the origin.

    The crop half-width is the window radius plus one sample; the centre
    snaps to the nearest lattice node (use a commensurate grid to make the
    snap exact). Values are copied unchanged.
    """
    field = result.amplitude if isinstance(result, DiffractionResult) else result
    grid = field.grid
    if window_radius <= 0:
        raise ValueError("window radius must be positive")
    row, col = grid.index_of(center_kx, center_ky)
    row, col = int(round(float(row))), int(round(float(col)))
    half = max(8, int(math.ceil(window_radius / min(grid.dx, grid.dy))) + 1)
    if row - half < 0 or col - half < 0 or row + half > grid.ny or col + half > grid.nx:
        raise ValueError("sideband window exceeds the reciprocal grid")
    crop = field.values[row - half:row + half, col - half:col + half]
    sub = Grid2D(2 * half, 2 * half, half * grid.dx, half * grid.dy,
                 grid.space_tag, grid.unit_tag)
    return type(field)(sub, crop)


def disk_window(grid: Grid2D, radius):
    r, _ = grid.polar()
    return r <= radius


def nrmse(a, b, weights=None):
    """``||a - b|| / ||b||`` over the selected samples."""
    a = np.asarray(a)
    b = np.asarray(b)
    if weights is not None:
        a = a[weights]
        b = b[weights]
    den = np.linalg.norm(b)
    if den == 0:
        raise ValueError("reference has zero norm")
    return float(np.linalg.norm(a - b) / den)


def mask_terms(spec, grid):
    """Real-space pieces whose transforms are the four mask components.

    Returns ``{0: 3 circ, 1: ring term, 2: carrier term at +k0,
    3: carrier term at -k0}``; their sum is the (unbinarized) mask.
    """
    X, _ = grid.mesh()
    r, phi = grid.polar()
    inside = r <= spec.R
    a = np.exp(1j * (spec.m * phi + spec.kappa_spm))
    b = np.exp(-1j * spec.n * phi)
    c = np.exp(1j * spec.k0 * X)
    plus = np.where(inside, c * np.conj(a + b), 0.0)
    return {0: np.where(inside, 3.0, 0.0),
            1: np.where(inside, 2.0 * np.real(a * np.conj(b)), 0.0),
            2: plus,
            3: np.conj(plus)}


def mixing_term_error(spec, grid, window_fraction=0.4, workers=None):
    """Relative size of the cross terms neglected by the incoherent sum.

    Compares the numeric pattern of the full mask with the sum of the numeric
    patterns of its four components inside a disk of radius
    ``window_fraction * k0`` around the ``+k0`` sideband (radius ``4/R``
    around the origin when ``k0 = 0``).
    """
    terms = mask_terms(spec, grid)
    k_grid = reciprocal_of(grid)
    total = np.zeros(grid.shape, dtype=complex)
    incoherent = np.zeros(grid.shape)
    for j in range(4):
        amp = far_field(ComplexField2D(grid, terms[j]), workers=workers).amplitude.values
        total += amp
        incoherent += np.abs(amp) ** 2
    radius = window_fraction * spec.k0 if spec.k0 > 0 else 4.0 / spec.R
    KX, KY = k_grid.mesh()
    window = np.hypot(KX - spec.k0, KY) <= radius
    return nrmse(np.abs(total) ** 2, incoherent, window)

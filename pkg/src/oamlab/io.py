"""File formats: OAMF raw fields, PGM previews and CSV tables.

OAMF layout (little-endian): ``b"OAMF"``, u32 version (1), u32 ndim,
u32 dims[ndim] in array-shape order, u8 dtype (0 float64, 1 complex128),
f64 extents[ndim] (half-widths, same order as dims), u8 unit tag
(0 micrometers, 1 inverse micrometers, 2 atomic units), then the row-major
payload.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np
from skimage.measure import find_contours

from .fields import (ATOMIC_UNITS, INVERSE_MICROMETERS, MICROMETERS, MOMENTUM_SPACE,
                     REAL_SPACE, ComplexField2D, Grid2D, Grid3D, ScalarField2D,
                     ScalarField3D)

MAGIC = b"OAMF"
VERSION = 1
UNIT_CODES = {MICROMETERS: 0, INVERSE_MICROMETERS: 1, ATOMIC_UNITS: 2}
UNIT_NAMES = {v: k for k, v in UNIT_CODES.items()}


def write_oamf(path, values, extents, unit_tag):
    """Write an array with per-axis half-widths; returns the path."""
    values = np.asarray(values)
    if np.iscomplexobj(values):
        code, payload = 1, values.astype("<c16")
    else:
        code, payload = 0, values.astype("<f8")
    extents = [float(e) for e in extents]
    if len(extents) != values.ndim:
        raise ValueError("need one extent per array axis")
    if unit_tag not in UNIT_CODES:
        raise ValueError(f"unknown unit tag {unit_tag!r}")
    head = MAGIC + struct.pack("<II", VERSION, values.ndim)
    head += struct.pack(f"<{values.ndim}I", *values.shape)
    head += struct.pack("<B", code)
    head += struct.pack(f"<{values.ndim}d", *extents)
    head += struct.pack("<B", UNIT_CODES[unit_tag])
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(payload).tobytes())
    return path


def read_oamf(path):
    """Return ``(values, extents, unit_tag)``."""
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError("not an OAMF file")
    version, ndim = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise ValueError(f"unsupported OAMF version {version}")
    off = 12
    dims = struct.unpack_from(f"<{ndim}I", data, off)
    off += 4 * ndim
    (code,) = struct.unpack_from("<B", data, off)
    off += 1
    extents = struct.unpack_from(f"<{ndim}d", data, off)
    off += 8 * ndim
    (unit,) = struct.unpack_from("<B", data, off)
    off += 1
    if code not in (0, 1) or unit not in UNIT_NAMES:
        raise ValueError("corrupt OAMF header")
    dtype = "<c16" if code else "<f8"
    count = int(np.prod(dims)) if dims else 1
    values = np.frombuffer(data, dtype=dtype, count=count, offset=off).reshape(dims)
    if off + values.nbytes != len(data):
        raise ValueError("OAMF payload size does not match the header")
    return values.astype(complex if code else float), tuple(extents), UNIT_NAMES[unit]


def write_field(path, field_obj):
    """Write a 2D or 3D field with its grid extents."""
    g = field_obj.grid
    if isinstance(g, Grid3D):
        extents = (g.extent_z, g.extent_y, g.extent_x)
    else:
        extents = (g.extent_y, g.extent_x)
    return write_oamf(path, field_obj.values, extents, g.unit_tag)


def read_field(path, space_tag=None):
    """Read a file written by :func:`write_field` back into a field object."""
    values, extents, unit = read_oamf(path)
    if space_tag is None:
        space_tag = REAL_SPACE if unit == MICROMETERS else MOMENTUM_SPACE
    if values.ndim == 2:
        grid = Grid2D(values.shape[1], values.shape[0], extents[1], extents[0],
                      space_tag, unit)
        cls = ComplexField2D if np.iscomplexobj(values) else ScalarField2D
        return cls(grid, values)
    if values.ndim == 3 and not np.iscomplexobj(values):
        grid = Grid3D(values.shape[2], values.shape[1], values.shape[0],
                      extents[2], extents[1], extents[0], space_tag, unit)
        return ScalarField3D(grid, values)
    raise ValueError("unsupported field layout")


def _pgm(path, arr, maxval):
    h, w = arr.shape
    head = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    body = arr.astype(">u2" if maxval > 255 else "u1").tobytes()
    Path(path).write_bytes(head + body)
    return Path(path)


def write_pgm8(path, values):
    """8-bit PGM of a field scaled to its maximum (binary masks map to 0/255).

    Rows are flipped so that +y points up in image viewers.
    """
    v = np.asarray(values, dtype=float)
    peak = v.max()
    scaled = np.zeros_like(v) if peak <= 0 else np.clip(v / peak, 0, 1)
    return _pgm(path, np.rint(np.flipud(scaled) * 255), 255)


def write_pgm16(path, values, log=False, dynamic_range=1e-6):
    """16-bit PGM, linear or log-scaled over ``dynamic_range`` of the peak."""
    v = np.asarray(values, dtype=float)
    peak = v.max()
    if peak <= 0:
        scaled = np.zeros_like(v)
    elif log:
        floor = peak * dynamic_range
        scaled = np.log(np.maximum(v, floor) / floor) / np.log(peak / floor)
    else:
        scaled = np.clip(v / peak, 0, 1)
    return _pgm(path, np.rint(np.flipud(scaled) * 65535), 65535)


def read_pgm(path):
    """Minimal P5 reader (no comments); returns the array as written."""
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    body = parts[4]
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(body, dtype=dtype, count=w * h).reshape(h, w)


def mask_contours(binary: ScalarField2D, level=0.5):
    """Closed polygons (physical x, y) around the transmitting regions."""
    g = binary.grid
    padded = np.pad(np.asarray(binary.values, float), 1)
    polys = []
    for c in find_contours(padded, level):
        rows, cols = c[:, 0] - 1, c[:, 1] - 1
        polys.append(np.column_stack([(cols - g.nx // 2) * g.dx, (rows - g.ny // 2) * g.dy]))
    return polys


def write_contours_csv(path, polygons):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["polygon", "x_um", "y_um"])
        for i, p in enumerate(polygons):
            for x, y in p:
                w.writerow([i, f"{x:.9g}", f"{y:.9g}"])
    return Path(path)


def write_table_csv(path, header, rows, fmt="{:.12g}"):
    """CSV with a header row; floats are written with a fixed format."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt.format(v) if isinstance(v, float) else v for v in row])
    return Path(path)


def read_table_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


def write_projection_stack(path, projections):
    """Angle-major OAMF stack plus ``<path>.angles.csv`` sidecar."""
    g = projections.grid
    write_oamf(path, projections.images, (np.pi / 2, g.extent_y, g.extent_x), g.unit_tag)
    side = Path(str(path) + ".angles.csv")
    write_table_csv(side, ["index", "angle_rad"],
                    [(i, float(a)) for i, a in enumerate(projections.angles)], fmt="{:.17g}")
    return Path(path), side

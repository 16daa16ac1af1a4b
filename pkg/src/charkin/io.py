"""Self-describing binary grid dumps and plot-ready CSV export.

Binary layout (little-endian)::

    magic    4s   b"CHKN"
    version  u32
    dims     u32  N
    points   u32 * N
    ext_lam  f64 * N
    ext_mu   f64 * N
    hbar     f64
    omega    f64
    tag      u8   0 normal, 1 symmetric, 2 antinormal, 3 classical, 4 wigner
    data     f64 * 2 * prod(G)^2, interleaved (re, im), row-major over grid.shape

A ``wigner`` dump stores a phase-space field on the dual (x, p) grid of the
header's (lambda, mu) grid.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import CharField, Ordering, PhaseGrid

MAGIC = b"CHKN"
VERSION = 1
WIGNER_TAG = "wigner"
TAGS = ["normal", "symmetric", "antinormal", "classical", WIGNER_TAG]


class DumpFormatError(ValueError):
    pass


@dataclass
class Dump:
    grid: PhaseGrid
    tag: str
    data: np.ndarray

    def as_charfield(self) -> CharField:
        if self.tag == WIGNER_TAG:
            raise DumpFormatError("a wigner dump holds a phase-space field, not a CharField")
        return CharField(self.grid, self.data, Ordering(self.tag))


def _header(grid: PhaseGrid, tag: str) -> bytes:
    n = grid.dims
    return b"".join([
        MAGIC,
        struct.pack("<II", VERSION, n),
        struct.pack(f"<{n}I", *grid.points),
        struct.pack(f"<{n}d", *grid.extent_lambda),
        struct.pack(f"<{n}d", *grid.extent_mu),
        struct.pack("<dd", grid.hbar, grid.omega),
        struct.pack("<B", TAGS.index(tag)),
    ])


def write_dump(path: str | Path, field: CharField | np.ndarray, grid: PhaseGrid | None = None,
               tag: str | None = None) -> Path:
    """Write a CharField, or a bare array with explicit ``grid`` and ``tag``."""
    if isinstance(field, CharField):
        grid, tag, data = field.grid, field.ordering.value, field.data
    else:
        if grid is None or tag is None:
            raise TypeError("bare arrays need grid and tag")
        data = np.asarray(field)
    if tag not in TAGS:
        raise DumpFormatError(f"unknown tag {tag!r}")
    data = np.ascontiguousarray(data, dtype="<c16")
    if data.shape != grid.shape:
        raise DumpFormatError("data shape does not match grid")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_header(grid, tag))
        fh.write(data.view("<f8").tobytes())
    return path


def read_dump(path: str | Path) -> Dump:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise DumpFormatError(f"{path}: bad magic {raw[:4]!r}")
    off = 4
    version, n = struct.unpack_from("<II", raw, off)
    off += 8
    if version != VERSION:
        raise DumpFormatError(f"{path}: unsupported version {version}")
    points = struct.unpack_from(f"<{n}I", raw, off)
    off += 4 * n
    ext_l = struct.unpack_from(f"<{n}d", raw, off)
    off += 8 * n
    ext_m = struct.unpack_from(f"<{n}d", raw, off)
    off += 8 * n
    hbar, omega = struct.unpack_from("<dd", raw, off)
    off += 16
    (tag_idx,) = struct.unpack_from("<B", raw, off)
    off += 1
    if tag_idx >= len(TAGS):
        raise DumpFormatError(f"{path}: unknown ordering tag {tag_idx}")
    grid = PhaseGrid(n, tuple(ext_l), tuple(ext_m), tuple(points), hbar, omega)
    values = np.frombuffer(raw, dtype="<f8", offset=off)
    if values.size != 2 * grid.size:
        raise DumpFormatError(f"{path}: expected {grid.size} samples, found {values.size // 2}")
    data = values.view("<c16").reshape(grid.shape).astype(complex)
    return Dump(grid, TAGS[tag_idx], data)


def write_csv(path: str | Path, field: CharField | np.ndarray, grid: PhaseGrid | None = None,
              tag: str | None = None) -> Path:
    """One row per node: coordinates (lambda..., mu... or x..., p...), re, im."""
    if isinstance(field, CharField):
        grid, tag, data = field.grid, field.ordering.value, field.data
    else:
        data = np.asarray(field)
    n = grid.dims
    if tag == WIGNER_TAG:
        axes = grid.dual_mesh()
        names = [f"x{i}" for i in range(n)] + [f"p{i}" for i in range(n)]
    else:
        axes = grid.mesh()
        names = [f"lambda{i}" for i in range(n)] + [f"mu{i}" for i in range(n)]
    if n == 1:
        names = [nm[:-1] for nm in names]
    coords = [c.ravel() for c in axes[0] + axes[1]]
    flat = np.asarray(data).ravel()
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + ["re", "im"])
        for row in zip(*coords, flat.real, flat.imag):
            writer.writerow([repr(float(v)) for v in row])
    return path

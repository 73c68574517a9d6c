"""Binary and CSV serialisation of spectral fields.

Binary layout: magic ``FL2L``, version u32 = 1, n u8, J u32, inv_h u32,
then one little-endian f64 pair (re, im) per node in row-major order.
"""

from __future__ import annotations

import csv
import struct

import numpy as np

from .spectral import FrequencyGrid, SpectralField

MAGIC = b"FL2L"
VERSION = 1
_HEADER = struct.Struct("<4sIBII")


class FieldFormatError(ValueError):
    """Malformed binary field file."""


def write_field(path, field: SpectralField):
    grid = field.grid
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(MAGIC, VERSION, grid.n, grid.J, grid.inv_h))
        flat = np.ascontiguousarray(field.values).ravel()
        pairs = np.empty(2 * flat.size, dtype="<f8")
        pairs[0::2] = flat.real
        pairs[1::2] = flat.imag
        handle.write(pairs.tobytes())


def read_field(path) -> SpectralField:
    with open(path, "rb") as handle:
        header = handle.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise FieldFormatError("truncated header")
        magic, version, n, J, inv_h = _HEADER.unpack(header)
        if magic != MAGIC:
            raise FieldFormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FieldFormatError(f"unsupported version {version}")
        grid = FrequencyGrid(n, J, inv_h)
        raw = np.frombuffer(handle.read(), dtype="<f8")
        if raw.size != 2 * grid.node_count:
            raise FieldFormatError(
                f"expected {2 * grid.node_count} floats, found {raw.size}"
            )
        values = (raw[0::2] + 1j * raw[1::2]).reshape(grid.shape)
        return SpectralField(grid, values)


def field_to_csv(path, field: SpectralField):
    grid = field.grid
    points = grid.node_points()
    flat = field.values.ravel()
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"xi_{k + 1}" for k in range(grid.n)] + ["re", "im"])
        for point, value in zip(points, flat):
            writer.writerow(
                [f"{x:.17g}" for x in point] + [f"{value.real:.17g}", f"{value.imag:.17g}"]
            )

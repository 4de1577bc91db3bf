"""Binary field files.

Layout (all little-endian): the magic ``FBF1``, ``u32`` dimension ``d``, ``d`` ``u32``
axis sizes, ``f64`` side length ``L``, then the row-major ``f64`` samples. Vector
fields store their components one after another.
"""
import logging
import struct
from pathlib import Path
from typing import Final, Union

import numpy as np

from fracbq.errors import FieldFormatError, GridError
from fracbq.spectral import Field, ScalarField, VectorField, make_grid

logger = logging.getLogger(__name__)

MAGIC: Final = b"FBF1"
_SAMPLE: Final = np.dtype("<f8")


def encode_field(field: Field) -> bytes:
    grid = field.grid
    header = MAGIC + struct.pack(f"<I{grid.d}I", grid.d, *grid.shape) + struct.pack("<d", grid.L)
    return header + np.ascontiguousarray(field.samples, dtype=_SAMPLE).tobytes(order="C")


def decode_field(payload: bytes) -> Field:
    if payload[:4] != MAGIC:
        raise FieldFormatError(f"Bad magic {payload[:4]!r}, expected {MAGIC!r}")
    offset = 4
    if len(payload) < offset + 4:
        raise FieldFormatError("Truncated header: missing dimension")
    (d,) = struct.unpack_from("<I", payload, offset)
    offset += 4
    if len(payload) < offset + 4 * d + 8:
        raise FieldFormatError("Truncated header: missing axis sizes or side length")
    sizes = struct.unpack_from(f"<{d}I", payload, offset)
    offset += 4 * d
    (side,) = struct.unpack_from("<d", payload, offset)
    offset += 8
    if len(set(sizes)) != 1:
        raise FieldFormatError(f"Axis sizes {sizes} are not uniform")
    try:
        grid = make_grid(d, sizes[0], side)
    except GridError as exc:
        raise FieldFormatError(f"Header describes an invalid grid: {exc}") from exc

    body = payload[offset:]
    points = int(np.prod(grid.shape))
    count, remainder = divmod(len(body), _SAMPLE.itemsize)
    if remainder:
        raise FieldFormatError(f"Sample block of {len(body)} bytes is not a whole number of f64 values")
    samples = np.frombuffer(body, dtype=_SAMPLE).astype(np.float64)
    if count == points:
        return ScalarField(grid, samples.reshape(grid.shape))
    if count == d * points:
        return VectorField(grid, samples.reshape((d,) + grid.shape))
    raise FieldFormatError(f"Expected {points} or {d * points} samples, found {count}")


def write_field(field: Field, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_field(field))
    logger.debug("Wrote %s", path)
    return path


def read_field(path: Union[str, Path]) -> Field:
    return decode_field(Path(path).read_bytes())

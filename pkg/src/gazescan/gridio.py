"""Scalar grid export/import.

Two on-disk forms:

* PGM (P5, 8-bit) for portable grayscale viewing. Quantized; not for round-trips.
* Raw dump: small binary header (magic, version, width, depth, pitch) followed
  by row-major float64 little-endian samples. Bit-exact round trip.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import DomainError, RecordCorruptError

RAW_MAGIC = b"GSGR"
RAW_VERSION = 1
_HEADER = struct.Struct("<4sIII d")  # magic, version, width, depth, pitch_mm


def save_raw(path, values: np.ndarray, pitch_mm: float) -> None:
    arr = np.ascontiguousarray(values, dtype="<f8")
    if arr.ndim != 2:
        raise DomainError("raw dump expects a 2-D grid")
    depth, width = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(RAW_MAGIC, RAW_VERSION, width, depth, float(pitch_mm)))
        fh.write(arr.tobytes())


def load_raw(path) -> tuple[np.ndarray, float]:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise RecordCorruptError(f"{path}: truncated header")
        magic, version, width, depth, pitch = _HEADER.unpack(head)
        if magic != RAW_MAGIC:
            raise RecordCorruptError(f"{path}: bad magic {magic!r}")
        if version != RAW_VERSION:
            raise RecordCorruptError(f"{path}: unsupported raw version {version}")
        payload = fh.read()
    expected = width * depth * 8
    if len(payload) != expected:
        raise RecordCorruptError(f"{path}: payload {len(payload)} B, expected {expected} B")
    arr = np.frombuffer(payload, dtype="<f8").reshape(depth, width).copy()
    return arr, pitch


def save_pgm(path, values: np.ndarray) -> None:
    """Write a [0, 1] grid as an 8-bit P5 graymap."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise DomainError("PGM export expects a 2-D grid")
    q = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    depth, width = q.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {depth}\n255\n".encode("ascii"))
        fh.write(q.tobytes())


def load_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    # header: magic, width, height, maxval, single whitespace, then raster
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":  # comment line
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    if fields[0] != b"P5":
        raise RecordCorruptError(f"{path}: not a P5 graymap")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise RecordCorruptError(f"{path}: unsupported maxval {maxval}")
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise RecordCorruptError(f"{path}: truncated raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width) / 255.0

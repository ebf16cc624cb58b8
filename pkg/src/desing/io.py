"""Cloud file formats: labeled CSV and a fixed little-endian binary.

CSV: one point per row, optionally preceded by a label column (the
reader sniffs: a non-numeric first cell means labels are present).
Floats are written with repr-faithful precision, so a CSV round trip
reproduces float64 coordinates exactly.

Binary: a 16-byte header, magic "EMB1", then three little-endian
u32 fields: element size in bytes (4 or 8), point count N, ambient
dimension n. The payload is N*n little-endian IEEE floats, row-major.
Embedding tables are large; a fixed binary layout keeps ingestion at
memcpy speed.
"""

import csv
import struct

import numpy as np

from .errors import (
    DimensionMismatch,
    MalformedHeader,
    NonFiniteValue,
)
from .geometry import PointCloud

MAGIC = b"EMB1"
_HEADER = struct.Struct("<4sIII")

CSV_FORMAT = "csv"
RAW_F32 = "rawf32"
RAW_F64 = "rawf64"

FORMATS = (CSV_FORMAT, RAW_F32, RAW_F64)


def read_csv(path):
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if row:
                rows.append(row)
    if not rows:
        raise MalformedHeader(f"{path}: no data rows")
    try:
        float(rows[0][0])
        labeled = False
    except ValueError:
        labeled = True
    width = len(rows[0])
    labels = [] if labeled else None
    data = np.empty((len(rows), width - (1 if labeled else 0)))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DimensionMismatch(
                f"{path}: row {i} has {len(row)} fields, expected {width}",
                row=i,
            )
        cells = row
        if labeled:
            labels.append(cells[0])
            cells = cells[1:]
        for j, cell in enumerate(cells):
            try:
                value = float(cell)
            except ValueError as exc:
                raise NonFiniteValue(
                    f"{path}: row {i}, column {j}: not a number: {cell!r}",
                    row=i,
                    col=j,
                ) from exc
            if not np.isfinite(value):
                raise NonFiniteValue(
                    f"{path}: row {i}, column {j}: non-finite value",
                    row=i,
                    col=j,
                )
            data[i, j] = value
    return PointCloud(data, labels=labels)


def write_csv(cloud, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        for i in range(len(cloud)):
            row = [] if cloud.labels is None else [cloud.labels[i]]
            row.extend(repr(float(c)) for c in cloud.points[i])
            writer.writerow(row)


def _elem_size(fmt):
    if fmt == RAW_F32:
        return 4
    if fmt == RAW_F64:
        return 8
    raise MalformedHeader(f"not a raw format: {fmt!r}")


def write_raw(cloud, path, fmt=RAW_F64):
    size = _elem_size(fmt)
    dtype = "<f4" if size == 4 else "<f8"
    n_points, n = cloud.points.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, size, n_points, n))
        fh.write(np.ascontiguousarray(cloud.points, dtype=dtype).tobytes())


def read_raw(path, fmt=None):
    """Read a binary cloud; when fmt is given, the header must agree."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        payload = fh.read()
    if len(header) < _HEADER.size:
        raise MalformedHeader(
            f"{path}: header truncated at {len(header)} bytes,"
            f" expected {_HEADER.size}"
        )
    magic, size, n_points, n = _HEADER.unpack(header)
    if magic != MAGIC:
        raise MalformedHeader(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if size not in (4, 8):
        raise MalformedHeader(f"{path}: element size {size} not in (4, 8)")
    if fmt is not None and size != _elem_size(fmt):
        raise MalformedHeader(
            f"{path}: header says {size}-byte elements, caller expected {fmt}"
        )
    expected = n_points * n * size
    if len(payload) != expected:
        raise MalformedHeader(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
            f" ({n_points} x {n} x {size})"
        )
    dtype = "<f4" if size == 4 else "<f8"
    data = np.frombuffer(payload, dtype=dtype).reshape(n_points, n)
    data = data.astype(np.float64)
    bad = np.argwhere(~np.isfinite(data))
    if bad.size:
        i, j = bad[0]
        raise NonFiniteValue(
            f"{path}: non-finite value at row {i}, column {j}",
            row=int(i),
            col=int(j),
        )
    return PointCloud(data)


def ingest(path, fmt=CSV_FORMAT):
    """Load a cloud in one of the documented formats."""
    if fmt == CSV_FORMAT:
        return read_csv(path)
    if fmt in (RAW_F32, RAW_F64):
        return read_raw(path, fmt)
    raise MalformedHeader(f"unknown format {fmt!r}; expected one of {FORMATS}")


def write_cloud(cloud, path, fmt=CSV_FORMAT):
    if fmt == CSV_FORMAT:
        write_csv(cloud, path)
    elif fmt in (RAW_F32, RAW_F64):
        write_raw(cloud, path, fmt)
    else:
        raise MalformedHeader(f"unknown format {fmt!r}; expected one of {FORMATS}")

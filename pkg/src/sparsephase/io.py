"""Binary field files, iteration-trace CSVs and the results table.

Field file layout (little-endian)::

    offset  size  content
    0       8     magic b"SPRFLD01"
    8       1     dtype code: 0 = float64, 1 = complex (float64 real, float64 imag)
    9       4     rows (uint32)
    13      4     cols (uint32)
    17      ...   rows*cols values, row-major
"""

from __future__ import annotations

import csv
import os
import struct
from dataclasses import asdict, dataclass, fields

import numpy as np

MAGIC = b"SPRFLD01"
HEADER = struct.Struct("<8sBII")
REAL64, COMPLEX128 = 0, 1
_DTYPES = {REAL64: np.dtype("<f8"), COMPLEX128: np.dtype("<c16")}
_MAX_DIM = 2**32 - 1
_MAX_PAYLOAD = 2**62


class FieldFormatError(ValueError):
    pass


class BadMagicError(FieldFormatError):
    pass


class TruncatedPayloadError(FieldFormatError):
    pass


class DimensionOverflowError(FieldFormatError):
    pass


class UnknownDtypeError(FieldFormatError):
    pass


def write_field(path, field) -> None:
    arr = np.asarray(field)
    if arr.ndim != 2:
        raise ValueError("only 2-D fields can be written")
    rows, cols = arr.shape
    if rows > _MAX_DIM or cols > _MAX_DIM:
        raise DimensionOverflowError(f"dimensions {arr.shape} do not fit in uint32")
    code = COMPLEX128 if np.iscomplexobj(arr) else REAL64
    payload = np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes()
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, code, rows, cols))
        fh.write(payload)


def read_field(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < HEADER.size:
        if not MAGIC.startswith(data[:8]):
            raise BadMagicError("bad magic")
        raise TruncatedPayloadError(f"file shorter than the {HEADER.size}-byte header")
    magic, code, rows, cols = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError("bad magic")
    if code not in _DTYPES:
        raise UnknownDtypeError(f"unknown dtype code {code}")
    dtype = _DTYPES[code]
    expected = rows * cols * dtype.itemsize
    if expected > _MAX_PAYLOAD:
        raise DimensionOverflowError(f"dimensions {rows}x{cols} overflow the payload size")
    payload = data[HEADER.size:]
    if len(payload) < expected:
        raise TruncatedPayloadError(f"payload has {len(payload)} bytes, expected {expected}")
    if len(payload) > expected:
        raise FieldFormatError(f"payload has {len(payload) - expected} trailing bytes")
    out = np.frombuffer(payload, dtype=dtype).reshape(rows, cols)
    return out.astype(np.complex128 if code == COMPLEX128 else np.float64)


def fmt_float(x) -> str:
    """17 significant digits, '.' decimal separator; empty for None."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def _parse_float(s):
    return None if s == "" else float(s)


TRACE_COLUMNS = ("k", "change", "rms_support", "rms_full", "dist1", "dist2", "dist3")


def write_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for k, *values in trace.rows():
            w.writerow([str(int(k))] + [fmt_float(v) for v in values])


def read_trace(path):
    from sparsephase.solver import IterationTrace

    trace = IterationTrace()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        for row in reader:
            k, change, rs, rf, d1, d2, d3 = row
            trace.append(int(k), float(change), _parse_float(rs), _parse_float(rf),
                         (_parse_float(d1), _parse_float(d2), _parse_float(d3)))
    return trace


@dataclass
class RunRecord:
    """One row of the results table."""

    run_id: str
    algorithm: str
    n: int
    aperture_diameter: float
    true_sparsity: int
    s_parameter: int
    photon_budget: float | None
    seed: int
    iterations_used: int
    termination_reason: str
    final_change: float
    final_rms_support: float | None
    final_rms_full: float | None
    measured_sparsity: int
    rate_estimate: float | None
    rate_r2: float | None
    wall_time_ms: float

    def to_row(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                out.append("")
            elif isinstance(v, (bool, np.bool_)):
                out.append(str(v).lower())
            elif isinstance(v, (int, np.integer)):
                out.append(str(int(v)))
            elif isinstance(v, (float, np.floating)):
                out.append(fmt_float(v))
            else:
                out.append(str(v))
        return out

    @classmethod
    def from_row(cls, row: dict) -> RunRecord:
        kwargs = {}
        for f in fields(cls):
            raw = row[f.name]
            if f.name in ("run_id", "algorithm", "termination_reason"):
                kwargs[f.name] = raw
            elif f.name in ("n", "true_sparsity", "s_parameter", "seed", "iterations_used", "measured_sparsity"):
                kwargs[f.name] = int(raw)
            else:
                kwargs[f.name] = _parse_float(raw)
        return cls(**kwargs)

    def as_dict(self) -> dict:
        return asdict(self)


RUN_COLUMNS = tuple(f.name for f in fields(RunRecord))


def append_run_record(path, record: RunRecord) -> None:
    """Append one row, writing the header first if the file is new or empty."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(RUN_COLUMNS)
        w.writerow(record.to_row())


def read_run_records(path) -> list[RunRecord]:
    if not os.path.exists(path):
        return []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is not None and tuple(reader.fieldnames) != RUN_COLUMNS:
            raise ValueError(f"unexpected results header {reader.fieldnames}")
        return [RunRecord.from_row(row) for row in reader]

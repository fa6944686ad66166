"""Dense matrix files, LIBSVM datasets and report serialization.

Dense matrix layout (little endian)::

    bytes 0-3    magic b"L0PK"
    bytes 4-7    version, u32 (currently 1)
    bytes 8-11   rows, u32
    bytes 12-15  cols, u32
    bytes 16-    rows*cols float64, row-major
"""
import csv
import json
import math
import struct
from pathlib import Path

import numpy as np

from .bench import REPORT_FIELDS, ExperimentReport, ReportRow

MAGIC = b"L0PK"
VERSION = 1
_HEADER = struct.Struct("<4sIII")
_U32_MAX = 2**32 - 1
DEFAULT_MAX_ELEMENTS = 200_000_000


class FormatError(ValueError):
    """Malformed input file."""


class BadMagicError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    pass


class TrailingDataError(FormatError):
    pass


class DimensionOverflowError(FormatError):
    pass


class LibsvmError(FormatError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path, self.lineno = path, lineno


class NonIncreasingIndexError(LibsvmError):
    pass


class UnparsableTokenError(LibsvmError):
    pass


class UnknownLabelError(LibsvmError):
    pass


class FeatureIndexError(LibsvmError):
    pass


class ReportWriteError(OSError):
    pass


def save_dense_matrix(path, matrix):
    a = np.asarray(matrix, dtype="<f8")
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got {a.ndim} dimensions")
    rows, cols = a.shape
    if rows > _U32_MAX or cols > _U32_MAX:
        raise DimensionOverflowError(f"{rows}x{cols} does not fit the u32 header")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, rows, cols))
        fh.write(np.ascontiguousarray(a).tobytes())


def load_dense_matrix(path, max_elements=DEFAULT_MAX_ELEMENTS):
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size or data[:4] != MAGIC:
        raise BadMagicError(f"{path}: not an L0PK matrix file (bad magic)")
    _, version, rows, cols = _HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported version {version}")
    count = rows * cols
    if count > max_elements:
        raise DimensionOverflowError(f"{path}: {rows}x{cols} exceeds the {max_elements}-element cap")
    payload = len(data) - _HEADER.size
    if payload < count * 8:
        raise TruncatedPayloadError(f"{path}: header says {rows}x{cols} ({count * 8} bytes), found {payload}")
    if payload > count * 8:
        raise TrailingDataError(f"{path}: {payload - count * 8} bytes after the payload")
    return np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(rows, cols).astype(float)


_LABELS = {1.0: 1.0, -1.0: -1.0, 0.0: -1.0}


def load_libsvm(path, n_features_hint=None, max_elements=DEFAULT_MAX_ELEMENTS):
    """Read a LIBSVM text file into a dense matrix and +-1 labels.

    Indices are 1-based and must increase strictly within a line. Labels
    ``+1``/``1``, ``-1`` and ``0`` are accepted, ``0`` mapping to ``-1``.
    Blank lines and ``#`` comments are skipped.
    """
    labels, entries = [], []
    width = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                raw = float(tokens[0])
            except ValueError:
                raise UnparsableTokenError(path, lineno, f"bad label {tokens[0]!r}") from None
            if raw not in _LABELS:
                raise UnknownLabelError(path, lineno, f"label {tokens[0]!r} is not one of +1, -1, 0")
            row = []
            last = 0
            for tok in tokens[1:]:
                idx_s, sep, val_s = tok.partition(":")
                try:
                    if not sep:
                        raise ValueError
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise UnparsableTokenError(path, lineno, f"bad feature token {tok!r}") from None
                if idx < 1:
                    raise FeatureIndexError(path, lineno, f"index {idx} is not 1-based")
                if idx <= last:
                    raise NonIncreasingIndexError(path, lineno, f"index {idx} follows {last}")
                if n_features_hint is not None and idx > n_features_hint:
                    raise FeatureIndexError(path, lineno, f"index {idx} exceeds {n_features_hint} features")
                last = idx
                row.append((idx - 1, val))
            width = max(width, last)
            labels.append(_LABELS[raw])
            entries.append(row)
    n = n_features_hint if n_features_hint is not None else width
    if len(labels) * n > max_elements:
        raise DimensionOverflowError(f"{path}: densifying {len(labels)}x{n} exceeds the {max_elements}-element cap")
    X = np.zeros((len(labels), n))
    for i, row in enumerate(entries):
        for j, v in row:
            X[i, j] = v
    return X, np.array(labels)


def _fmt(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None or math.isnan(value):
        return "nan"
    return f"{value:.6g}"


def write_report_csv(report, path):
    """One row per (method, n, s), floats to 6 significant digits."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_FIELDS)
            for row in sorted(report.rows, key=lambda r: (r.method, r.n, r.s)):
                w.writerow([_fmt(getattr(row, f)) for f in REPORT_FIELDS])
    except OSError as exc:
        raise ReportWriteError(f"cannot write report to {path}: {exc}") from exc


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def report_to_dict(report):
    rows = []
    for row in sorted(report.rows, key=lambda r: (r.method, r.n, r.s)):
        d = {f: _json_value(getattr(row, f)) for f in REPORT_FIELDS}
        if row.accuracy_mean is not None:
            d["accuracy_mean"] = row.accuracy_mean
        rows.append(d)
    failures = [
        {"method": m, "n": n, "s": s, "replicate": rep, "error": err}
        for m, n, s, rep, err in report.failures
    ]
    return {"kind": report.kind, "meta": report.meta, "rows": rows, "failures": failures}


def write_report_json(report, path):
    try:
        with open(path, "w") as fh:
            json.dump(report_to_dict(report), fh, indent=2, sort_keys=False)
            fh.write("\n")
    except OSError as exc:
        raise ReportWriteError(f"cannot write report to {path}: {exc}") from exc


def read_report_json(path):
    with open(path) as fh:
        d = json.load(fh)
    rows = []
    for r in d["rows"]:
        kw = {f: (math.nan if r[f] is None else r[f]) for f in REPORT_FIELDS}
        rows.append(ReportRow(**kw, accuracy_mean=r.get("accuracy_mean")))
    failures = [(f["method"], f["n"], f["s"], f["replicate"], f["error"]) for f in d["failures"]]
    return ExperimentReport(rows=rows, failures=failures, kind=d["kind"], meta=d["meta"])


def write_trace_csv(trace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("k", "H", "step_norm", "gap_norm", "support_size", "restarted"))
        for k, h, step, gap, size, restarted in trace.rows():
            w.writerow((k, repr(h), repr(step), repr(gap), size, restarted))

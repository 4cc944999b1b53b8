"""
Binary dumps, CSV exports and text manifests for torus fields.

A dump holds one time slice of one field:

    magic "CIB2" | version u32 | N u32 | n_components u32 | timestamp f64
    | component values, row-major little-endian f64 | sha256 of all preceding bytes

Time series are stored as one dump per sample plus a `key = value` manifest.
"""
import hashlib
import logging
import struct
from pathlib import Path

import numpy as np

from common.errors import ChecksumMismatch, GridError
from common.torus_config import CHECKSUM_BYTES, FIELD_MAGIC, FIELD_VERSION
from common.torus_fields import Grid, ScalarField, SymTraceFreeTensor2Field, VectorField2, components

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<4sIIId")
FIELD_KINDS = {"scalar": 1, "vector": 2, "tensor": 2}


def field_kind(field) -> str:
    if isinstance(field, ScalarField):
        return "scalar"
    if isinstance(field, VectorField2):
        return "vector"
    if isinstance(field, SymTraceFreeTensor2Field):
        return "tensor"
    raise TypeError(f"Not a torus field: {type(field).__name__}")


def _from_components(kind: str, grid: Grid, values: np.ndarray):
    parts = [ScalarField(grid, v) for v in values]
    if kind == "scalar":
        return parts[0]
    if kind == "vector":
        return VectorField2(*parts)
    return SymTraceFreeTensor2Field(*parts)


def encode_field(field, timestamp: float = 0.0) -> bytes:
    parts = components(field)
    if parts[0].time_shape:
        raise GridError("A dump holds a single time slice")
    if not all(p.is_real for p in parts):
        raise ValueError("Only real fields can be dumped")
    N = parts[0].grid.N
    body = _HEADER.pack(FIELD_MAGIC, FIELD_VERSION, N, len(parts), float(timestamp))
    body += b"".join(np.ascontiguousarray(p.values, dtype="<f8").tobytes() for p in parts)
    return body + hashlib.sha256(body).digest()


def decode_field(blob: bytes, kind: str):
    """Inverse of encode_field; returns (field, timestamp)."""
    if kind not in FIELD_KINDS:
        raise ValueError(f"Unknown field kind '{kind}'")
    if len(blob) < _HEADER.size + CHECKSUM_BYTES:
        raise ChecksumMismatch("Dump is truncated")
    body, digest = blob[:-CHECKSUM_BYTES], blob[-CHECKSUM_BYTES:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumMismatch("Dump checksum does not match its contents")

    magic, version, N, n_comp, timestamp = _HEADER.unpack_from(body)
    if magic != FIELD_MAGIC:
        raise ChecksumMismatch(f"Bad magic {magic!r}")
    if version != FIELD_VERSION:
        raise ValueError(f"Unsupported dump version {version}")
    if n_comp != FIELD_KINDS[kind]:
        raise ValueError(f"Dump holds {n_comp} components, a {kind} field needs {FIELD_KINDS[kind]}")
    values = np.frombuffer(body, dtype="<f8", offset=_HEADER.size)
    if values.size != n_comp * N * N:
        raise ChecksumMismatch("Dump payload size does not match its header")
    return _from_components(kind, Grid(N), values.reshape(n_comp, N, N).astype(float)), timestamp


def dump_field(path, field, timestamp: float = 0.0) -> Path:
    path = Path(path)
    path.write_bytes(encode_field(field, timestamp))
    return path


def load_field(path, kind: str):
    return decode_field(Path(path).read_bytes(), kind)


def write_key_values(path, entries: dict) -> Path:
    """Plain `key = value` text file; sequences are written comma separated."""
    path = Path(path)
    lines = []
    for key, value in entries.items():
        if isinstance(value, (list, tuple, np.ndarray)):
            value = ", ".join(_format_value(v) for v in value)
        else:
            value = _format_value(value)
        lines.append(f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _format_value(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def read_key_values(path) -> dict[str, str]:
    """Parse a `key = value` file; blank lines and `#` comments are skipped."""
    entries = {}
    for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{number}: expected 'key = value', got '{raw}'")
        key, value = (s.strip() for s in line.split("=", 1))
        entries[key] = value
    return entries


def dump_series(directory, name: str, field, times) -> Path:
    """One dump per time sample plus `<name>.manifest`; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    times = np.asarray(times, dtype=float)
    n_t = components(field)[0].values.shape[0]
    if n_t != len(times):
        raise GridError(f"{n_t} samples but {len(times)} times")

    files = []
    for j, t in enumerate(times):
        file_name = f"{name}_{j:04d}.cib"
        dump_field(directory / file_name, field[j], t)
        files.append(file_name)
    manifest = write_key_values(directory / f"{name}.manifest", {
        "kind": field_kind(field),
        "n_t": n_t,
        "times": list(times),
        "files": files,
    })
    logger.debug("Wrote %d slices of %s to %s", n_t, name, directory)
    return manifest


def load_series(manifest_path):
    """Inverse of dump_series; returns (time-sampled field, times)."""
    manifest_path = Path(manifest_path)
    entries = read_key_values(manifest_path)
    kind = entries["kind"]
    files = [s.strip() for s in entries["files"].split(",")]
    times = np.array([float(s) for s in entries["times"].split(",")])
    if len(files) != int(entries["n_t"]) or len(times) != len(files):
        raise ChecksumMismatch(f"Manifest {manifest_path} lists an inconsistent number of samples")

    slices = []
    for file_name, t in zip(files, times):
        field, stamp = load_field(manifest_path.parent / file_name, kind)
        if stamp != t:
            raise ChecksumMismatch(f"{file_name} carries time {stamp}, manifest says {t}")
        slices.append(field)
    stack = {"scalar": ScalarField.stack, "vector": VectorField2.stack, "tensor": SymTraceFreeTensor2Field.stack}[kind]
    return stack(slices), times


def export_csv(path, field) -> Path:
    """Rows x1, x2, component values... for one time slice."""
    parts = components(field)
    if parts[0].time_shape:
        raise GridError("CSV export takes a single time slice")
    grid = parts[0].grid
    x1, x2 = grid.nodes
    columns = [x1.ravel(), x2.ravel()] + [p.values.real.ravel() for p in parts]
    names = {"scalar": ["value"], "vector": ["u1", "u2"], "tensor": ["T11", "T12"]}[field_kind(field)]
    path = Path(path)
    np.savetxt(path, np.column_stack(columns), delimiter=",", header=",".join(["x1", "x2"] + names), comments="")
    return path


def write_table_csv(path, rows: list[dict]) -> Path:
    """Write a list of flat dicts as CSV, columns in first-row order."""
    path = Path(path)
    if not rows:
        path.write_text("", encoding="utf-8")
        return path
    header = list(rows[0].keys())
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_value(row.get(key, "")) for key in header))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path

"""Tensor file formats shared by the CLI and any external producer.

Binary layout (little-endian throughout)::

    bytes 0-3   magic "SOLE"
    byte  4     format version (1)
    bytes 5-8   u32 ndim
    then        ndim x u32 dims
    then        float32 payload, C order, exactly prod(dims) values

CSV is the interchange fallback: comma-separated rows, ``.`` decimal point,
values printed to 9 significant digits (round-trips float32 exactly); loading
always yields a 2-D array.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

__all__ = ["MAGIC", "VERSION", "load_tensor", "save_tensor"]

MAGIC = b"SOLE"
VERSION = 1

# Refuse absurd headers before trusting prod(dims): caps both per-dim size
# and total element count.
_MAX_ELEMS = 1 << 31


def save_tensor(path, arr: np.ndarray, fmt: str | None = None) -> None:
    """Write ``arr`` as float32 to ``path``; format from arg or extension."""
    path = Path(path)
    arr = np.asarray(arr, dtype=np.float32)
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "bin")
    if fmt == "csv":
        rows = arr.reshape(1, -1) if arr.ndim < 2 else arr.reshape(-1, arr.shape[-1])
        lines = [",".join(f"{v:.9g}" for v in row) for row in rows]
        path.write_text("\n".join(lines) + "\n")
        return
    if fmt != "bin":
        raise ValueError(f"unknown tensor format {fmt!r}")
    header = struct.pack(f"<4sBI{arr.ndim}I", MAGIC, VERSION, arr.ndim, *arr.shape)
    path.write_bytes(header + arr.tobytes())


def load_tensor(path) -> np.ndarray:
    """Read a tensor written by :func:`save_tensor` (format auto-detected)."""
    path = Path(path)
    blob = path.read_bytes()
    if blob[:4] == MAGIC:
        return _load_binary(blob)
    return _load_csv(blob, path)


def _load_binary(blob: bytes) -> np.ndarray:
    if len(blob) < 9:
        raise ValueError("truncated-payload: header needs at least 9 bytes")
    version, ndim = struct.unpack_from("<BI", blob, 4)
    if version != VERSION:
        raise ValueError(f"bad-version: expected {VERSION}, got {version}")
    if ndim > 8:
        raise ValueError(f"dim-overflow: {ndim} dimensions (max 8)")
    if len(blob) < 9 + 4 * ndim:
        raise ValueError("truncated-payload: header ends inside the dim list")
    dims = struct.unpack_from(f"<{ndim}I", blob, 9)
    count = 1
    for d in dims:
        count *= d
        if count > _MAX_ELEMS:
            raise ValueError(f"dim-overflow: {dims} exceeds {_MAX_ELEMS} elements")
    payload = blob[9 + 4 * ndim :]
    if len(payload) != 4 * count:
        kind = "truncated-payload" if len(payload) < 4 * count else "trailing-bytes"
        raise ValueError(f"{kind}: expected {4 * count} payload bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()


def _load_csv(blob: bytes, path: Path) -> np.ndarray:
    text = blob.decode("utf-8").strip()
    if not text:
        raise ValueError(f"empty-file: {path} holds no values")
    rows = []
    width = None
    for ln, line in enumerate(text.splitlines(), start=1):
        try:
            row = [float(v) for v in line.split(",")]
        except ValueError as e:
            raise ValueError(f"bad-value: {path}:{ln}: {e}") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ValueError(
                f"ragged-rows: {path}:{ln} has {len(row)} values, expected {width}"
            )
        rows.append(row)
    return np.asarray(rows, dtype=np.float32)

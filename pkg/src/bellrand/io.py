"""File formats: trials, 4x4 tables, hashed parameter records and bit strings.

Trials (binary): magic b"BELLTRL1", little-endian uint64 trial count, then one
byte per trial holding x<<3 | y<<2 | a<<1 | b ('+' = 1), upper nibble zero.
Trials (text): CSV with header x,y,a,b; settings 0/1 and outcomes + or 0.

Tables: a metadata block of "key: value" lines, a line "---", then the 4x4
grid with a header row of outcome labels and one row per setting pair.
Floats are written with repr, so every table round-trips bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import struct
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from bellrand.core import (
    COL_LABELS,
    ROW_LABELS,
    BellFunction,
    CountTable,
    JointDistribution,
    ValidationError,
)

__all__ = [
    "FormatError",
    "MAGIC",
    "read_trials",
    "iter_trials",
    "trial_count",
    "write_trials",
    "read_trials_csv",
    "write_trials_csv",
    "read_table",
    "write_table",
    "load_fixture",
    "write_params",
    "read_params",
    "canonical_hash",
    "write_json",
    "read_json",
    "write_bits",
    "read_bits",
]

MAGIC = b"BELLTRL1"
HEADER = 16


class FormatError(ValueError):
    pass


# ---- trials ---------------------------------------------------------------

def _open_codes(path) -> tuple[np.ndarray, int]:
    path = Path(path)
    size = path.stat().st_size
    with open(path, "rb") as fh:
        head = fh.read(HEADER)
    if len(head) < 8 or head[:8] != MAGIC:
        raise FormatError(f"{path}: bad magic at byte offset 0")
    if len(head) < HEADER:
        raise FormatError(f"{path}: truncated header at byte offset {len(head)}")
    (count,) = struct.unpack("<Q", head[8:16])
    if size - HEADER < count:
        raise FormatError(f"{path}: truncated payload at byte offset {size} (expected {HEADER + count} bytes)")
    if size - HEADER > count:
        raise FormatError(f"{path}: trailing data at byte offset {HEADER + count}")
    if count == 0:
        return np.zeros(0, dtype=np.uint8), 0
    return np.memmap(path, dtype=np.uint8, mode="r", offset=HEADER, shape=(count,)), count


def _check_codes(codes: np.ndarray, base: int, path) -> None:
    bad = np.flatnonzero(codes >= 16)
    if bad.size:
        off = HEADER + base + int(bad[0])
        raise FormatError(f"{path}: invalid trial byte 0x{int(codes[bad[0]]):02x} at byte offset {off}")


def trial_count(path) -> int:
    return _open_codes(path)[1]


def iter_trials(path, start: int = 0, count: int | None = None, chunk: int = 1 << 22) -> Iterator[np.ndarray]:
    """Yield validated code chunks for trials start .. start+count-1."""
    codes, total = _open_codes(path)
    stop = total if count is None else start + count
    if start < 0 or stop > total or start > stop:
        raise FormatError(f"{path}: requested trials {start}..{stop} of {total}")
    for lo in range(start, stop, chunk):
        block = np.array(codes[lo : min(stop, lo + chunk)])
        _check_codes(block, lo, path)
        yield block


def read_trials(path) -> np.ndarray:
    """All trial codes of a binary trial file as a uint8 array."""
    parts = list(iter_trials(path))
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)


def write_trials(path, trials) -> int:
    """Write codes (array, iterable of arrays, or TrialRecords); returns the count."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    n = 0
    with open(tmp, "wb") as fh:
        fh.write(MAGIC + struct.pack("<Q", 0))
        for block in _code_blocks(trials):
            if np.any(block >= 16):
                raise ValidationError("trial codes must be below 16")
            fh.write(block.tobytes())
            n += block.size
        fh.seek(8)
        fh.write(struct.pack("<Q", n))
    os.replace(tmp, path)
    return n


def _code_blocks(trials) -> Iterator[np.ndarray]:
    from bellrand.core import TrialRecord

    if isinstance(trials, np.ndarray):
        yield trials.astype(np.uint8).ravel()
        return
    buf = []
    for item in trials:
        if isinstance(item, TrialRecord):
            buf.append(item.code)
        else:
            if buf:
                yield np.array(buf, dtype=np.uint8)
                buf = []
            yield np.asarray(item, dtype=np.uint8).ravel()
    if buf:
        yield np.array(buf, dtype=np.uint8)


def write_trials_csv(path, trials) -> int:
    n = 0
    with open(path, "w") as fh:
        fh.write("x,y,a,b\n")
        for block in _code_blocks(trials):
            for c in block.tolist():
                fh.write(f"{(c >> 3) & 1},{(c >> 2) & 1},{'+' if c & 2 else '0'},{'+' if c & 1 else '0'}\n")
                n += 1
    return n


def read_trials_csv(path) -> np.ndarray:
    out = []
    offset = 0
    with open(path, "rb") as fh:
        header = fh.readline()
        if header.strip() != b"x,y,a,b":
            raise FormatError(f"{path}: expected header 'x,y,a,b' at byte offset 0")
        offset = len(header)
        for line in fh:
            text = line.strip()
            if text:
                fields = text.split(b",")
                if len(fields) != 4 or fields[0] not in (b"0", b"1") or fields[1] not in (b"0", b"1") \
                        or fields[2] not in (b"+", b"0") or fields[3] not in (b"+", b"0"):
                    raise FormatError(f"{path}: invalid trial {text.decode(errors='replace')!r} at byte offset {offset}")
                x, y = int(fields[0]), int(fields[1])
                a, b = fields[2] == b"+", fields[3] == b"+"
                out.append((x << 3) | (y << 2) | (a << 1) | b)
            offset += len(line)
    return np.array(out, dtype=np.uint8)


# ---- tables ---------------------------------------------------------------

_KINDS = ("counts", "distribution", "bell")


def _fmt(v, kind) -> str:
    return str(int(v)) if kind == "counts" else repr(float(v))


def write_table(path, obj, provenance: str | None = None, **meta) -> None:
    if isinstance(obj, CountTable):
        kind, grid = "counts", obj.counts
    elif isinstance(obj, JointDistribution):
        kind, grid = "distribution", obj.p
        meta.setdefault("uniform_settings", obj.uniform_settings)
        meta.setdefault("non_signaling", obj.non_signaling)
    elif isinstance(obj, BellFunction):
        kind, grid = "bell", obj.t_values
        meta.setdefault("m", obj.m)
        meta.setdefault("alpha", obj.alpha)
    else:
        raise TypeError(f"cannot write {type(obj).__name__} as a table")
    lines = ["# bellrand table", f"kind: {kind}"]
    if provenance:
        lines.append(f"provenance: {provenance}")
    for k, v in meta.items():
        if isinstance(v, bool):
            v = str(v).lower()
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{k}: {v}")
    lines.append("---")
    lines.append("xy " + " ".join(COL_LABELS))
    for r, label in enumerate(ROW_LABELS):
        lines.append(label + " " + " ".join(_fmt(v, kind) for v in grid[r]))
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_value(v: str):
    low = v.strip().lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v.strip()


def parse_table(text: str, source: str = "<table>"):
    """Parse table text into (object, metadata)."""
    meta: dict = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].strip() != "---":
        line = lines[i].strip()
        i += 1
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise FormatError(f"{source}: malformed metadata line {i}: {line!r}")
        k, v = line.split(":", 1)
        meta[k.strip()] = _parse_value(v)
    if i >= len(lines):
        raise FormatError(f"{source}: missing '---' separator")
    body = [ln.split() for ln in lines[i + 1 :] if ln.strip() and not ln.lstrip().startswith("#")]
    if len(body) != 5:
        raise FormatError(f"{source}: dimension: expected a header and 4 rows, found {len(body)} lines")
    if body[0][1:] != list(COL_LABELS):
        raise FormatError(f"{source}: dimension: header must list {' '.join(COL_LABELS)}")
    grid = []
    for r, row in enumerate(body[1:]):
        if row[0] != ROW_LABELS[r] or len(row) != 5:
            raise FormatError(f"{source}: dimension: row {r + 1} must be '{ROW_LABELS[r]}' with 4 values")
        try:
            grid.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise FormatError(f"{source}: row {ROW_LABELS[r]}: {exc}") from None
    grid = np.array(grid)
    kind = meta.get("kind")
    if kind not in _KINDS:
        raise FormatError(f"{source}: kind must be one of {_KINDS}")
    try:
        if kind == "counts":
            obj = CountTable(grid)
        elif kind == "distribution":
            obj = JointDistribution(grid, uniform_settings=bool(meta.get("uniform_settings", True)),
                                    non_signaling=bool(meta.get("non_signaling", True)))
        else:
            obj = _bell_from_grid(grid, meta, source)
    except ValidationError as exc:
        raise FormatError(f"{source}: {exc}") from None
    return obj, meta


def _bell_from_grid(grid, meta, source) -> BellFunction:
    from bellrand.pbr import compute_m

    alpha = float(meta.get("alpha", 0.0))
    exact = compute_m(grid, alpha)
    stated = meta.get("m")
    if stated is not None and abs(float(stated) - exact) > 1e-6:
        raise ValidationError(f"stated m={stated} disagrees with the recomputed bound {exact!r}")
    # A stated m rounded below the true maximum would not be a valid bound.
    m = max(float(stated), exact) if stated is not None else exact
    bell = BellFunction(grid, m, alpha)
    bell.check()
    return bell


def read_table(path, with_meta: bool = False):
    obj, meta = parse_table(Path(path).read_text(), str(path))
    return (obj, meta) if with_meta else obj


def load_fixture(name: str, with_meta: bool = False):
    """Published tables shipped with the package: table1, table_s2, table_s3, table_s5."""
    ref = resources.files("bellrand") / "fixtures" / f"{name}.txt"
    text = ref.read_text()
    if name == "table_s5":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        header, data = rows[0], rows[1:]
        return [dict(zip(header, (_parse_value(v) for v in r))) for r in data]
    obj, meta = parse_table(text, name)
    return (obj, meta) if with_meta else obj


# ---- JSON records ---------------------------------------------------------

def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def canonical_hash(payload: dict) -> str:
    blob = json.dumps(_jsonable(payload), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_params(path, params: dict) -> str:
    """Freeze a parameter record together with its SHA-256; returns the hash."""
    digest = canonical_hash(params)
    write_json(path, {"format": "bellrand-params/1", "params": params, "sha256": digest})
    return digest


def read_params(path) -> tuple[dict, str]:
    rec = read_json(path)
    if rec.get("format") != "bellrand-params/1" or "params" not in rec:
        raise FormatError(f"{path}: not a parameter record")
    digest = canonical_hash(rec["params"])
    if digest != rec.get("sha256"):
        raise FormatError(f"{path}: parameter hash mismatch (record was modified after freezing)")
    return rec["params"], digest


# ---- bit strings ----------------------------------------------------------

def write_bits(path, bits, **meta) -> None:
    """Raw little-endian packed bits plus a JSON sidecar (path + '.json')."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if np.any(bits > 1):
        raise ValidationError("bits must be 0 or 1")
    Path(path).write_bytes(np.packbits(bits, bitorder="little").tobytes())
    side = {"bits": int(bits.size), "sha256": hashlib.sha256(Path(path).read_bytes()).hexdigest()}
    side.update(meta)
    write_json(str(path) + ".json", side)


def read_bits(path, nbits: int | None = None) -> np.ndarray:
    data = np.frombuffer(Path(path).read_bytes(), dtype=np.uint8)
    side = Path(str(path) + ".json")
    if nbits is None and side.exists():
        nbits = int(read_json(side)["bits"])
    bits = np.unpackbits(data, bitorder="little")
    if nbits is None:
        return bits
    if nbits > bits.size:
        raise FormatError(f"{path}: holds {bits.size} bits, expected {nbits}")
    return bits[:nbits].copy()

"""On-disk solved tables and a keyed cache directory.

File layout (little-endian)::

    b"TCRG"  u8 version  u16 n
    u8 robber tag [u16 m if speedy]
    u8 cop count, then per cop: u8 tag [u16 m if speedy]
    u8 flags (bit 0: translation quotient, robber pinned at (0, 0))
    u64 state count
    u16 value per state, in canonical index order
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import struct
import tempfile
import time
from pathlib import Path

import numpy as np

from .engine import GameSpec
from .moves import CHIEF, FOOT, KNIGHT, SPEEDY, MoveRule
from .solver import DEFAULT_MAX_STATES, RESERVED, SolvedTable, solve, state_count

logger = logging.getLogger(__name__)

MAGIC = b"TCRG"
VERSION = 1
FLAG_QUOTIENT = 0x01
SUFFIX = ".tcrg"
CACHE_ENV = "COPCHASE_CACHE"

RULE_TAGS = {FOOT: 0, KNIGHT: 1, CHIEF: 2, SPEEDY: 3}
TAG_RULES = {v: k for k, v in RULE_TAGS.items()}


class TableLoadError(ValueError):
    """A table file could not be decoded.  ``reason`` is a short machine-readable code."""

    def __init__(self, reason: str, message: str, path: str | os.PathLike | None = None) -> None:
        super().__init__(f"{path}: {message}" if path is not None else message)
        self.reason = reason
        self.path = path


def _encode_rule(rule: MoveRule) -> bytes:
    out = struct.pack("<B", RULE_TAGS[rule.tag])
    if rule.tag == SPEEDY:
        out += struct.pack("<H", rule.m)
    return out


def encode_header(spec: GameSpec, quotient: bool = False) -> bytes:
    parts = [MAGIC, struct.pack("<BH", VERSION, spec.n), _encode_rule(spec.robber_rule)]
    parts.append(struct.pack("<B", spec.k))
    parts.extend(_encode_rule(r) for r in spec.cop_rules)
    parts.append(struct.pack("<BQ", FLAG_QUOTIENT if quotient else 0, state_count(spec, quotient)))
    return b"".join(parts)


def table_bytes(table: SolvedTable, quotient: bool = False) -> bytes:
    values = table.values_array(quotient).astype("<u2", copy=False)
    return encode_header(table.spec, quotient) + values.tobytes()


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def save_table(table: SolvedTable, path: str | os.PathLike, quotient: bool = False) -> Path:
    path = Path(path)
    _atomic_write(path, table_bytes(table, quotient))
    return path


class _Reader:
    def __init__(self, data: bytes, path) -> None:
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise TableLoadError("truncated", "file ends inside the header", self.path)
        out = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return out

    def rule(self) -> MoveRule:
        (tag,) = self.take("<B")
        if tag not in TAG_RULES:
            raise TableLoadError("bad-rule", f"unknown rule tag {tag}", self.path)
        name = TAG_RULES[tag]
        if name == SPEEDY:
            (m,) = self.take("<H")
            return MoveRule(SPEEDY, m)
        return MoveRule(name)


def parse_table(data: bytes, path=None) -> tuple[SolvedTable, bool]:
    """Decode table bytes; returns the table and whether the file was a quotient layout."""
    rd = _Reader(data, path)
    if data[:4] != MAGIC:
        raise TableLoadError("bad-magic", f"expected magic {MAGIC!r}, found {data[:4]!r}", path)
    rd.pos = 4
    version, n = rd.take("<BH")
    if version != VERSION:
        raise TableLoadError("bad-version", f"unsupported version {version}", path)
    try:
        robber = rd.rule()
        (k,) = rd.take("<B")
        cops = tuple(rd.rule() for _ in range(k))
        spec = GameSpec(n, cops, robber)
    except TableLoadError:
        raise
    except ValueError as exc:
        raise TableLoadError("bad-spec", str(exc), path) from exc
    flags, count = rd.take("<BQ")
    if flags & ~FLAG_QUOTIENT:
        raise TableLoadError("bad-flags", f"unknown flag bits {flags:#04x}", path)
    quotient = bool(flags & FLAG_QUOTIENT)
    expected = state_count(spec, quotient)
    if count != expected:
        raise TableLoadError("count-mismatch", f"header says {count} states, spec has {expected}", path)
    body = len(data) - rd.pos
    if body < 2 * count:
        raise TableLoadError("truncated", f"need {2 * count} value bytes, found {body}", path)
    if body > 2 * count:
        raise TableLoadError("trailing-bytes", f"{body - 2 * count} bytes after the values", path)
    values = np.frombuffer(data, dtype="<u2", count=count, offset=rd.pos)
    if np.any(values == RESERVED):
        raise TableLoadError("bad-value", "reserved value code in table", path)
    try:
        table = SolvedTable.from_values_array(spec, values.astype(np.uint16), quotient)
    except ValueError as exc:
        raise TableLoadError("bad-value", str(exc), path) from exc
    return table, quotient


def load_table(path: str | os.PathLike) -> SolvedTable:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise TableLoadError("unreadable", str(exc), path) from exc
    return parse_table(data, path)[0]


# --------------------------------------------------------------------------
# cache


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or Path.home() / ".cache"
    return Path(base) / "copchase"


def cache_key(spec: GameSpec, quotient: bool = False) -> str:
    return hashlib.sha256(spec.canonical_string(int(quotient)).encode()).hexdigest()


def cache_path(spec: GameSpec, cache_dir: str | os.PathLike | None = None, quotient: bool = False) -> Path:
    root = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    return root / (cache_key(spec, quotient) + SUFFIX)


def cache_lookup(spec: GameSpec, cache_dir=None, quotient: bool = False) -> SolvedTable | None:
    path = cache_path(spec, cache_dir, quotient)
    if not path.exists():
        return None
    try:
        table = load_table(path)
    except TableLoadError as exc:
        logger.warning("ignoring unreadable cache entry: %s", exc)
        return None
    if table.spec != spec:
        logger.warning("cache entry %s holds %s, wanted %s", path, table.spec, spec)
        return None
    return table


def cache_store(table: SolvedTable, cache_dir=None, quotient: bool = False) -> Path:
    path = cache_path(table.spec, cache_dir, quotient)
    save_table(table, path, quotient)
    meta = {
        "spec": table.spec.to_json(),
        "canonical": table.spec.canonical_string(int(quotient)),
        "state_count": state_count(table.spec, quotient),
        "max_plies": table.max_plies,
        "saved_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "solver": {k: v for k, v in table.metadata.items() if isinstance(v, (int, float, str))},
    }
    _atomic_write(path.with_suffix(".json"), json.dumps(meta, indent=2, sort_keys=True).encode())
    return path


def cached_solve(
    spec: GameSpec,
    cache_dir=None,
    max_states: int = DEFAULT_MAX_STATES,
    quotient: bool = False,
) -> SolvedTable:
    """Solve ``spec`` or reuse a cached table for it."""
    table = cache_lookup(spec, cache_dir, quotient)
    if table is not None:
        logger.info("cache hit for %s", spec.canonical_string(int(quotient)))
        return table
    table = solve(spec, max_states)
    try:
        cache_store(table, cache_dir, quotient)
    except OSError as exc:
        logger.warning("could not write cache entry: %s", exc)
    return table

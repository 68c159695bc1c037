import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from copchase.engine import GameSpec
from copchase.solver import ROBBER_WIN, solve
from copchase.store import (
    MAGIC,
    TableLoadError,
    cache_key,
    cache_path,
    cached_solve,
    encode_header,
    load_table,
    parse_table,
    save_table,
    table_bytes,
)

SPECS = [
    (3, ["knight", "knight"], "foot"),
    (4, ["chief", "foot"], "foot"),
    (5, ["chief"], "speedy:2"),
    (5, ["foot", "knight"], "foot"),
]


def test_header_layout():
    spec = GameSpec.from_names(11, ["chief", "foot"], "speedy:2")
    h = encode_header(spec)
    assert h[:4] == MAGIC
    assert struct.unpack_from("<BH", h, 4) == (1, 11)
    # robber: tag 3 + m, cops: count, chief (2), foot (0), flags, count
    assert h[7:10] == bytes([3, 2, 0])
    assert h[10:13] == bytes([2, 2, 0])
    flags, count = struct.unpack_from("<BQ", h, 13)
    assert flags == 0 and count == 121 * 121 * 121 * 2
    assert len(h) == 22


@pytest.mark.parametrize("n,cops,robber", SPECS)
@pytest.mark.parametrize("quotient", [False, True])
def test_roundtrip_is_byte_identical(tmp_path, n, cops, robber, quotient, table_for):
    table = table_for(n, cops, robber)
    path = save_table(table, tmp_path / "t.tcrg", quotient)
    loaded = load_table(path)
    assert loaded.spec == table.spec
    assert np.array_equal(loaded.cop_values, table.cop_values)
    assert np.array_equal(loaded.robber_values, table.robber_values)
    save_table(loaded, tmp_path / "u.tcrg", quotient)
    assert (tmp_path / "u.tcrg").read_bytes() == path.read_bytes()


def test_values_little_endian(table_for):
    table = table_for(3, ["knight"])
    data = table_bytes(table)
    body = np.frombuffer(data[-2 * table.state_count:], dtype="<u2")
    assert np.array_equal(body, table.values_array())
    assert ROBBER_WIN in body


@pytest.mark.parametrize(
    "mutate,reason",
    [
        (lambda b: b"XCRG" + b[4:], "bad-magic"),
        (lambda b: b[:4] + bytes([2]) + b[5:], "bad-version"),
        (lambda b: b[:-1], "truncated"),
        (lambda b: b[:10], "truncated"),
        (lambda b: b + b"\0\0", "trailing-bytes"),
        (lambda b: b[:7] + bytes([9]) + b[8:], "bad-rule"),
    ],
)
def test_corrupt_files_raise_structured_errors(tmp_path, mutate, reason, table_for):
    data = table_bytes(table_for(3, ["knight", "knight"]))
    path = tmp_path / "bad.tcrg"
    path.write_bytes(mutate(data))
    with pytest.raises(TableLoadError) as info:
        load_table(path)
    assert info.value.reason == reason


def test_reserved_code_rejected(table_for):
    data = bytearray(table_bytes(table_for(3, ["knight"])))
    data[-2:] = b"\xfe\xff"
    with pytest.raises(TableLoadError) as info:
        parse_table(bytes(data))
    assert info.value.reason == "bad-value"


def test_missing_file():
    with pytest.raises(TableLoadError) as info:
        load_table("/nonexistent/table.tcrg")
    assert info.value.reason == "unreadable"


def test_cache_keys_distinct():
    a = GameSpec.from_names(7, ["knight", "chief"], "foot")
    b = GameSpec.from_names(7, ["chief", "knight"], "foot")
    assert cache_key(a) != cache_key(b)
    assert cache_key(a) != cache_key(a, quotient=True)
    assert len(cache_key(a)) == 64


def test_cached_solve_writes_and_reuses(tmp_path, monkeypatch):
    spec = GameSpec.from_names(4, ["knight", "knight"], "foot")
    first = cached_solve(spec)
    path = cache_path(spec)
    assert path.parent == tmp_path / "cache"
    assert path.exists()
    meta = json.loads(path.with_suffix(".json").read_text())
    assert meta["canonical"] == spec.canonical_string()
    assert meta["state_count"] == first.state_count

    monkeypatch.setattr("copchase.store.solve", lambda *a, **k: pytest.fail("cache not used"))
    again = cached_solve(spec)
    assert np.array_equal(again.cop_values, first.cop_values)


def test_corrupt_cache_entry_is_a_miss(tmp_path):
    spec = GameSpec.from_names(4, ["knight"], "foot")
    path = cache_path(spec)
    path.parent.mkdir(parents=True)
    path.write_bytes(b"garbage")
    table = cached_solve(spec)
    assert table.spec == spec
    assert load_table(path).spec == spec


def test_cache_entry_for_other_spec_is_a_miss(tmp_path):
    spec = GameSpec.from_names(4, ["knight"], "foot")
    other = solve(GameSpec.from_names(3, ["knight"], "foot"))
    save_table(other, cache_path(spec))
    assert cached_solve(spec).spec == spec


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 6), st.lists(st.sampled_from(["knight", "chief", "foot"]), min_size=1, max_size=2))
def test_roundtrip_property(n, cops):
    table = solve(GameSpec.from_names(n, cops, "foot"))
    for quotient in (False, True):
        data = table_bytes(table, quotient)
        back, q = parse_table(data)
        assert q == quotient
        assert table_bytes(back, quotient) == data

from __future__ import annotations

import random
import struct
from bisect import bisect_right

import pytest

from expsearch import (Config, ConfigError, ContractError, DomainError, LevelTable,
                       OrderedSet, level_capacity, new, orderable_bits)


def keys_of(s):
    return [e.key for e in s]


def test_empty_set_has_height_one_and_no_children():
    s = new(Config(k=2, word_bits=64))
    assert len(s) == 0
    assert s.height == 1
    assert s.root.first is None
    assert s.minimum() is None and s.maximum() is None
    assert s.search(5) is None
    assert s.audit().ok


@pytest.mark.parametrize("bad", [dict(k=1), dict(finger_mode=True, local_steps_per_update=100),
                                 dict(word_bits=0), dict(word_bits=65),
                                 dict(sstruct_variant="btree"), dict(counter_q=0),
                                 dict(touch_ceiling=0)])
def test_invalid_configs_are_rejected(bad):
    with pytest.raises(ConfigError):
        OrderedSet(Config(**bad))


def test_finger_mode_accepts_the_default_step_count():
    assert OrderedSet(Config(finger_mode=True)).config.local_steps_per_update == 1000
    OrderedSet(Config(finger_mode=True, local_steps_per_update=840))


def test_level_capacities_for_k2():
    t = LevelTable(k=2)
    assert level_capacity(t, 0) == 1
    assert level_capacity(t, 1) == 84
    # alpha^4 with alpha^2 = 84
    assert level_capacity(t, 2) == 84 * 84 == 7056
    assert level_capacity(t, 3) == 7056 ** 2
    with pytest.raises(DomainError):
        level_capacity(t, -1)


@pytest.mark.parametrize("k", [2, 3, 4])
@pytest.mark.parametrize("finger", [False, True])
def test_level_table_ratios(k, finger):
    t = LevelTable(k=k, finger=finger, levels=6)
    assert t[0] == 1 and t[1] >= 84
    for i in range(1, 6):
        assert t[i + 1] >= 18 * t[i]
        if finger:
            assert t[i + 1] < t[i] ** 2


def test_predecessor_semantics():
    s = OrderedSet()
    for k in (3, 7):
        s.insert(k)
    assert s.search(5).key == 3
    assert s.search(7).key == 7
    assert s.search(2) is None
    assert s.search(2**64 - 1).key == 7
    assert s.lookup(5) is None
    assert s.lookup(7).key == 7


def test_insert_into_empty_and_delete_absent():
    s = OrderedSet()
    e = s.insert(10)
    assert s.minimum() is e and s.maximum() is e
    assert s.delete_key(11) is False
    assert keys_of(s) == [10]
    assert s.successor(e) is None and s.predecessor(e) is None


def test_duplicates_lookup_returns_latest():
    s = OrderedSet()
    a = s.insert(7, "first")
    b = s.insert(7, "second")
    s.insert(3)
    assert s.lookup(7) is b
    assert s.search(7) is b
    assert s.predecessor(b) is a
    s.delete_key(7)
    assert s.lookup(7) is a


def test_stale_handles_raise():
    s = OrderedSet()
    e = s.insert(5)
    s.insert(9)
    s.finger_delete(e)
    with pytest.raises(ContractError):
        s.successor(e)
    with pytest.raises(ContractError):
        s.finger_delete(e)
    with pytest.raises(ContractError):
        s.finger_insert(e, 6)


def test_finger_insert_order_violations():
    s = OrderedSet()
    a = s.insert(5)
    s.insert(9)
    with pytest.raises(ContractError):
        s.finger_insert(a, 10)
    with pytest.raises(ContractError):
        s.finger_insert(a, 4)


def test_finger_insert_splitter_rule_below_successor_splitter():
    s = OrderedSet()
    a = s.insert(5)
    nine = s.insert(9)
    u = s.finger_insert(a, 6)
    # 6 < splitter(9): sibling after 5 with splitter 6
    assert u.splitter == 6
    assert s.parent(u) is s.parent(a)
    assert nine.splitter == 9
    assert s.audit().ok


def test_finger_insert_takes_successor_splitter():
    s = OrderedSet()
    e = s.insert(10)
    assert e.splitter == 0
    # inserting 4 before the first leaf: 4 >= splitter 0, so 4 takes splitter 0
    u = s.finger_insert(None, 4)
    assert u.splitter == 0 and e.splitter == 10
    assert keys_of(s) == [4, 10]
    assert s.audit().ok


def test_delete_first_child_transfers_splitter():
    s = OrderedSet.from_sorted(range(0, 4000, 2))
    for u in s._levels_top_down()[-1][1:4]:
        first = u.first
        sp = first.splitter
        nxt = first.right
        s.finger_delete(first)
        assert nxt.splitter == sp
        assert s.parent(nxt).splitter == sp or s.parent(nxt).first is nxt
    assert s.audit().ok


def test_delete_only_element_restores_empty_root():
    s = OrderedSet()
    s.insert(1)
    s.delete_key(1)
    assert len(s) == 0 and s.height == 1 and s.root.first is None
    assert s.audit().ok


def test_traversal_matches_sorted_order():
    rng = random.Random(4)
    s = OrderedSet()
    ks = [rng.randrange(1 << 20) for _ in range(3000)]
    for k in ks:
        s.insert(k)
    out = []
    e = s.minimum()
    while e is not None:
        out.append(e.key)
        e = s.successor(e)
    assert out == sorted(ks)
    back = []
    e = s.maximum()
    while e is not None:
        back.append(e.key)
        e = s.predecessor(e)
    assert back == sorted(ks, reverse=True)


def test_random_searches_match_scan_oracle():
    rng = random.Random(11)
    keys = sorted(rng.randrange(1 << 64) for _ in range(20000))
    s = OrderedSet.from_sorted(keys)
    for _ in range(20000):
        y = rng.randrange(1 << 64)
        j = bisect_right(keys, y) - 1
        got = s.search(y)
        assert (got.key if got else None) == (keys[j] if j >= 0 else None)


def test_height_grows_once_past_n1_and_shrinks_back():
    s = OrderedSet()
    heights = []
    for k in range(600):
        s.insert(k)
        if not heights or heights[-1] != s.height:
            heights.append(s.height)
    assert heights == [1, 2]
    for k in range(600):
        s.delete_key(k)
    assert s.height == 1 and len(s) == 0


def test_churn_keeps_audit_clean():
    rng = random.Random(2)
    s = OrderedSet()
    live = []
    for i in range(30000):
        if live and rng.random() < 0.45:
            k = live.pop(rng.randrange(len(live)))
            assert s.delete_key(k)
        else:
            k = rng.randrange(1 << 16)
            s.insert(k)
            live.append(k)
        if i % 3000 == 0:
            rep = s.audit()
            assert rep.ok, rep.violations[:5]
    assert keys_of(s) == sorted(live)
    assert s.audit().ok


def test_from_sorted_rejects_unsorted_and_out_of_range():
    with pytest.raises(DomainError):
        OrderedSet.from_sorted([3, 1])
    with pytest.raises(DomainError):
        OrderedSet.from_sorted([1, 1 << 64])


def test_keys_outside_universe():
    s = OrderedSet(Config(word_bits=8))
    with pytest.raises(DomainError):
        s.insert(256)
    with pytest.raises(DomainError):
        s.insert(-1)
    s.insert(255)


def test_search_path_length_bound():
    s = OrderedSet.from_sorted(list(range(0, 300000, 3)))
    caps = s.caps
    h = next(i for i in range(1, 10) if caps[i] >= len(s))
    rng = random.Random(0)
    for _ in range(2000):
        _, vert, _ = s.search_trace(rng.randrange(300000))
        assert vert <= h + 1


def test_space_of_empty_set_is_constant():
    assert OrderedSet().space_usage() == OrderedSet(Config(sstruct_variant="veb")).space_usage()


def test_orderable_bits():
    vals = [-2.0, -1.0, 0.0, 1.0, 2.0]
    mapped = [orderable_bits(v) for v in vals]
    assert mapped == sorted(mapped) and len(set(mapped)) == 5
    assert orderable_bits(0.0) == orderable_bits(-0.0)
    assert orderable_bits(float("-inf")) < orderable_bits(-1e308)
    assert orderable_bits(float("inf")) > orderable_bits(1e308)
    with pytest.raises(DomainError):
        orderable_bits(float("nan"))


def test_orderable_bits_random_pairs():
    rng = random.Random(5)
    for _ in range(100000):
        a, b = (struct.unpack(">d", struct.pack(">Q", rng.getrandbits(64)))[0] for _ in range(2))
        if a != a or b != b:
            continue
        if a < b:
            assert orderable_bits(a) < orderable_bits(b)
        elif a > b:
            assert orderable_bits(a) > orderable_bits(b)
        else:
            assert orderable_bits(a) == orderable_bits(b)

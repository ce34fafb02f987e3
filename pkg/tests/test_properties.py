from __future__ import annotations

from bisect import bisect_right

from hypothesis import given, settings, strategies as st

from expsearch import Config, OrderedSet
from expsearch.finger import Finger, finger_search
from expsearch.hashdict import Reciprocal, fks_build, ph_lookup
from expsearch.sstruct import build
from expsearch.stringset import StringSet

W16 = st.integers(0, (1 << 16) - 1)
W64 = st.integers(0, (1 << 64) - 1)

op_strategy = st.lists(
    st.tuples(st.sampled_from("IIDSL"), st.integers(0, 400)), max_size=400)


@given(op_strategy, st.sampled_from(["sorted", "veb", "fusion", "auto"]), st.booleans())
@settings(max_examples=40)
def test_set_matches_sorted_list(ops, variant, finger_mode):
    cfg = Config(sstruct_variant=variant, finger_mode=finger_mode, word_bits=16)
    s = OrderedSet(cfg)
    ref: list[int] = []
    for code, k in ops:
        if code == "I":
            s.insert(k)
            ref.insert(bisect_right(ref, k), k)
        elif code == "D":
            assert s.delete_key(k) == (k in ref)
            if k in ref:
                ref.remove(k)
        elif code == "L":
            assert (s.lookup(k) is not None) == (k in ref)
        else:
            e = s.search(k)
            j = bisect_right(ref, k) - 1
            assert (None if e is None else e.key) == (ref[j] if j >= 0 else None)
    assert list(s.keys()) == ref
    rep = s.audit()
    assert rep.ok, rep.violations


@given(st.lists(W16, min_size=1, max_size=200, unique=True), st.lists(W16, max_size=50),
       st.sampled_from(["sorted", "veb", "fusion"]))
def test_static_structures_match_bisect(keys, queries, variant):
    keys.sort()
    t = build(keys, variant, 16)
    for q in queries + keys + [k + 1 for k in keys if k + 1 < 1 << 16]:
        assert t.query(q) == bisect_right(keys, q) - 1


@given(st.sets(W64, max_size=300), st.lists(W64, max_size=40))
def test_fks_membership(keys, probes):
    keys = sorted(keys)
    h = fks_build(keys, 64)
    for i, k in enumerate(keys):
        assert ph_lookup(h, k) == i
    for q in probes:
        if q not in keys:
            assert ph_lookup(h, q) is None


@given(st.integers(1, (1 << 32) - 1), st.integers(0, (1 << 32) - 1))
def test_reciprocal_division(p, x):
    r = Reciprocal(p, 32)
    assert r.divmod(x) == divmod(x, p)
    assert r.guess(x) in (x // p, x // p - 1)


words = st.lists(st.integers(0, 5), min_size=0, max_size=6).map(tuple)


@given(st.lists(st.tuples(st.booleans(), words), max_size=200), st.lists(words, max_size=30))
def test_string_set_matches_sorted_oracle(ops, queries):
    t = StringSet(width=8)
    bag: list[tuple] = []
    for ins, w in ops:
        if ins:
            t.insert(w)
            bag.append(w)
        else:
            assert t.delete(w) == (w in bag)
            if w in bag:
                bag.remove(w)
    ref = sorted(bag)
    assert list(t) == ref
    for q in queries:
        j = bisect_right(ref, q) - 1
        assert t.search(q) == (ref[j] if j >= 0 else None)
    assert t.audit().ok


@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=2000, unique=True),
       st.integers(0, 10**6 + 10), st.data())
@settings(max_examples=40)
def test_finger_search_equals_search(keys, y, data):
    keys.sort()
    s = OrderedSet.from_sorted(keys, Config(finger_mode=True))
    x = s.lookup(data.draw(st.sampled_from(keys)))
    assert finger_search(s, Finger(x), y) is s.search(y)

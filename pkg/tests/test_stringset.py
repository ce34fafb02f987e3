from __future__ import annotations

import random
from bisect import bisect_right

import pytest

from expsearch.stringset import StringSet, format_words, heavy_threshold, parse_words

A, B, C, D = 0xA, 0xB, 0xC, 0xD


def oracle_pred(sorted_keys, q):
    j = bisect_right(sorted_keys, q) - 1
    return sorted_keys[j] if j >= 0 else None


def brute_lcp(stored, q):
    best = 0
    for s in stored:
        n = 0
        while n < len(s) and n < len(q) and s[n] == q[n]:
            n += 1
        best = max(best, n)
    return best


def test_empty_trie():
    t = StringSet()
    node, depth = t.lcp_descend((1, 2))
    assert node is t.root and depth == 0
    assert t.search((5,)) is None
    assert t.audit().ok


def test_two_strings_predecessor():
    t = StringSet()
    t.insert((A, B))
    t.insert((A, C))
    assert t.search((A, D)) == (A, C)
    assert t.search((A, B)) == (A, B)
    assert t.search((A,)) is None
    node, depth = t.lcp_descend((A, D))
    assert node.depth == 1 and depth == 1


def test_prefix_sorts_before_extension():
    t = StringSet()
    for s in [(1,), (1, 0), (1, 0, 0), (0,)]:
        t.insert(s)
    assert t.distinct_strings() == [(0,), (1,), (1, 0), (1, 0, 0)]
    assert t.search((1, 0, 0, 0)) == (1, 0, 0)
    assert t.search((0, 5)) == (0,)


def test_threshold_arithmetic():
    t = StringSet()
    assert heavy_threshold(1024) == 64
    assert t._above(33, 1024, 2) and not t._above(32, 1024, 2)
    assert t._period(1024) == 16


def test_word_parsing_round_trip():
    assert parse_words("1f:0:ab") == (0x1F, 0, 0xAB)
    assert format_words((0x1F, 0, 0xAB)) == "1f:0:ab"
    with pytest.raises(ValueError):
        parse_words("")
    with pytest.raises(ValueError):
        parse_words("100", width=8)
    with pytest.raises(ValueError):
        StringSet(width=8).insert((256,))


def test_delete_absent_is_noop():
    t = StringSet()
    t.insert((1, 2))
    assert t.delete((1, 3)) is False
    assert t.delete((1,)) is False
    assert len(t) == 1


def test_multiset_counts():
    t = StringSet()
    assert t.insert((4, 4)) is True
    assert t.insert((4, 4)) is False
    assert t.count((4, 4)) == 2 and len(t) == 2 and t.distinct == 1
    assert t.delete((4, 4)) and t.count((4, 4)) == 1


def _shape(t):
    # balancing state of light sets and hash periods is not restored; compare the trie
    sizes = sorted((x.depth, x.size) for x in t._nodes())
    return t.audit().notes["nodes"], sizes, t.distinct_strings()


def test_insert_then_delete_restores_structure():
    rng = random.Random(1)
    t = StringSet(width=8)
    for _ in range(300):
        t.insert(tuple(rng.randrange(4) for _ in range(rng.randint(1, 6))))
    for _ in range(100):
        before = _shape(t)
        s = tuple(rng.randrange(4) for _ in range(rng.randint(1, 7)))
        if s in t:
            continue
        t.insert(s)
        t.delete(s)
        assert _shape(t) == before


def test_insert_touches_bounded_by_shared_prefix():
    rng = random.Random(2)
    t = StringSet()
    stored = []
    for _ in range(3000):
        s = tuple(rng.randrange(3) for _ in range(rng.randint(1, 12)))
        ell = brute_lcp(stored, s)
        t.insert(s)
        stored.append(s)
        assert t.last_touch <= ell + 4


def test_oracle_fuzz_with_lcp():
    rng = random.Random(5)
    t = StringSet(width=16)
    bag: dict = {}
    for i in range(6000):
        s = tuple(rng.randrange(1 << rng.choice((2, 16))) for _ in range(rng.randint(1, 20)))
        r = rng.random()
        if r < 0.5:
            t.insert(s)
            bag[s] = bag.get(s, 0) + 1
        elif r < 0.7 and bag:
            victim = rng.choice(list(bag))
            assert t.delete(victim)
            bag[victim] -= 1
            if not bag[victim]:
                del bag[victim]
        else:
            keys = sorted(bag)
            assert t.search(s) == oracle_pred(keys, s)
            if i % 20 == 0:
                _, depth = t.lcp_descend(s)
                assert depth == min(len(s), brute_lcp(keys, s))
        if i % 500 == 0:
            rep = t.audit()
            assert rep.ok, rep.violations
    assert sorted(bag) == t.distinct_strings()


def test_heavy_children_always_covered():
    rng = random.Random(9)
    t = StringSet()
    # skewed first words so a few children dominate the root
    for i in range(20000):
        first = min(int(rng.expovariate(0.3)), 200)
        s = (first, rng.randrange(1 << 20), rng.randrange(4))
        if rng.random() < 0.25 and len(t):
            t.delete(s)
        else:
            t.insert(s)
        if i % 1000 == 999:
            rep = t.audit()
            assert rep.ok, rep.violations
            assert rep.notes["heavy_missing"] == 0
    assert t.heavy_hits > 0


def test_grown_child_enters_dictionary():
    t = StringSet()
    for c in range(1, 200):
        t.insert((c, 0))
    # one child grows from 1 to well past the heavy threshold
    for j in range(1, 400):
        t.insert((7, j))
        rep = t.audit()
        assert rep.notes["heavy_missing"] == 0


def test_space_linear():
    rng = random.Random(3)
    ratios = []
    for n in (1000, 4000, 16000):
        t = StringSet()
        while t.distinct < n:
            t.insert(tuple(rng.randrange(1 << 8) for _ in range(rng.randint(1, 10))))
        ratios.append(t.space_usage() / t.distinct)
    assert max(ratios) < 2 * min(ratios)
    assert max(ratios) < 64

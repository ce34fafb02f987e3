from __future__ import annotations

import random
from bisect import bisect_right

import pytest

from expsearch import Config, ContractError, OrderedSet
from expsearch.finger import (COUNTER_STRATEGIES, CounterQueue, Finger, LADDER_LEVELS,
                              counter_bound, counter_game, counter_round, finger_search,
                              finger_search_trace, ladder_build, ladder_query, ladder_range,
                              marks_from_walks)
from expsearch.harness import elements_between, finger_updates


def pred(keys, y):
    j = bisect_right(keys, y) - 1
    return keys[j] if j >= 0 else None


def test_adjacent_finger_search():
    s = OrderedSet.from_sorted(range(1, 101))
    f = Finger(s.lookup(50))
    e = finger_search(s, f, 55)
    assert e.key == 55
    assert elements_between(s, f.element, e, True, 100) == 4


def test_finger_at_maximum():
    s = OrderedSet.from_sorted(range(1, 101))
    f = Finger(s.maximum())
    assert finger_search(s, f, 10**6).key == 100
    assert finger_search(s, Finger(s.minimum()), 0) is None


def test_stale_finger():
    s = OrderedSet.from_sorted(range(10))
    e = s.lookup(4)
    f = Finger(e)
    s.finger_delete(e)
    assert not f.valid
    with pytest.raises(ContractError):
        finger_search(s, f, 5)


@pytest.mark.parametrize("finger_mode", [False, True])
def test_finger_search_matches_plain_search(finger_mode):
    rng = random.Random(3)
    keys = sorted(rng.randrange(1 << 30) for _ in range(30000))
    s = OrderedSet.from_sorted(keys, Config(finger_mode=finger_mode))
    elems = list(s)
    for _ in range(20000):
        f = Finger(elems[rng.randrange(len(elems))])
        span = 1 << rng.randint(0, 30)
        y = max(0, min((1 << 30) - 1, f.key + rng.randint(-span, span)))
        got = finger_search(s, f, y)
        want = s.search(y)
        assert got is want


def test_ascent_locality():
    rng = random.Random(7)
    keys = sorted(rng.randrange(1 << 40) for _ in range(50000))
    s = OrderedSet.from_sorted(keys)
    elems = list(s)
    peaks = set()
    for _ in range(5000):
        x = elems[rng.randrange(len(elems))]
        y = rng.randrange(1 << 40)
        e, peak, _, _ = finger_search_trace(s, Finger(x), y)
        peaks.add(peak)
        if peak >= 2:
            need = -(-s.caps[peak - 1] // 10)
            if e is None:
                e = s.minimum()
            assert elements_between(s, x, e, y >= x.key, need) >= need
    assert max(peaks) >= 2


def test_counter_queue_operations():
    cq = CounterQueue()
    for o in "abc":
        cq.add(o)
    for _ in range(5):
        cq.increment("a")
    cq.increment("b")
    assert cq.max_value() == 5 and cq.check()
    assert cq.pick(3) == "a"
    assert cq.value("a") == 2
    cq.subtract("a", 7)
    assert cq.value("a") == 0
    cq.remove("b")
    assert "b" not in cq and len(cq) == 2 and cq.check()
    assert counter_round(cq, ["c", "c", "c"], 2) == "c"
    assert cq.value("c") == 1


def test_counter_bound_formula():
    assert counter_bound(1, 2) == 4
    assert counter_bound(4, 3) == 18
    assert counter_bound(1024, 8) == 2 * 8 * 11


@pytest.mark.parametrize("strategy", COUNTER_STRATEGIES)
def test_counter_game_small(strategy):
    for p in (1, 4, 64):
        for q in (2, 3):
            r = counter_game(p, q, 3000, strategy, seed=1)
            assert r["max_counter"] <= r["bound"]


def test_counter_game_single_target_p1024():
    r = counter_game(1024, 2, 5000, "single-target")
    assert r["max_counter"] <= 2 * 2 * 10 + 2


def test_marks_from_walks_matches_direct_simulation():
    rng = random.Random(0)
    for _ in range(500):
        h = rng.randint(1, 5)
        bits = rng.getrandbits(h + 1)
        walks = rng.randint(0, 300)
        marks = [(bits >> j) & 1 for j in range(h + 1)]
        counts = [0] * (h + 1)
        for _ in range(walks):
            j = 0
            while j < h and marks[j]:
                j += 1
            for i in range(j):
                marks[i] = 0
            marks[j] = 1
            counts[j] += 1
        got_counts, got_bits = marks_from_walks(bits, h, walks)
        assert got_counts == counts
        assert got_bits == sum(m << j for j, m in enumerate(marks))


def test_first_update_marks_parent_chain_bottom_up():
    counts, bits = marks_from_walks(0, 3, 1)
    assert counts == [1, 0, 0, 0] and bits == 1
    counts, bits = marks_from_walks(0, 3, 2)
    assert counts == [1, 1, 0, 0] and bits == 2


def test_finger_mode_ticket_budgets():
    s = OrderedSet(Config(finger_mode=True))
    rng = random.Random(4)
    elems = []
    for _ in range(30000):
        if elems and rng.random() < 0.45:
            e = elems.pop(rng.randrange(len(elems)))
            s.finger_delete(e)
        else:
            k = rng.randrange(1 << 16)
            e = s.insert(k)
            elems.append(e)
    assert s.stats.completed
    for lvl, mn in s.stats.min_steps.items():
        n = s.caps[lvl]
        assert mn >= s.required_steps(lvl)
        assert mn >= -(-n // (1 << lvl)) or lvl == 1
        assert mn * mn >= n
    rep = s.audit()
    assert rep.ok, rep.violations[:5]
    assert s.max_approx_error <= 1 / 8


def test_approx_weights_exact_on_quiescent_tree():
    s = OrderedSet.from_sorted(range(20000), Config(finger_mode=True))
    assert all(v == 0.0 for v in s.approx_error_report().values())


def test_finger_update_touches_are_bounded():
    r = finger_updates(3000, 20000, seed=2, audit_every=5000)
    assert r["problems"] == []
    assert r["touch_max"] <= r["touch_ceiling"]
    assert r["touch_breaches"] == 0


def test_ladder_ranges():
    assert [ladder_range(i) for i in range(LADDER_LEVELS)] == [4, 16, 65536]


def test_ladder_worked_example():
    X = [0, 3, 10, 70000]
    L = ladder_build(0, X)
    assert L.level_for(3) == 0
    assert ladder_query(L, 0, 3) == 3
    assert ladder_query(L, 0, 9) == 3
    assert L.level_for(12) == 1 and ladder_query(L, 0, 12) == 10
    assert L.level_for(65535) == 2 and ladder_query(L, 0, 65535) == 10
    assert L.level_for(69999) == -1 and ladder_query(L, 0, 69999) == 10
    # beyond the last range: fallback to global search
    assert L.level_for(70000) == -1 and ladder_query(L, 0, 70000) == 70000
    with pytest.raises(ValueError):
        ladder_build(4, X)


def test_ladder_on_ordered_set_matches_search():
    rng = random.Random(5)
    keys = sorted(rng.randrange(1 << 20) for _ in range(5000))
    s = OrderedSet.from_sorted(keys)
    elems = list(s)
    for _ in range(50):
        x = elems[rng.randrange(len(elems))]
        L = ladder_build(x, s)
        assert L.epoch == s.epoch
        for _ in range(50):
            y = x.key + rng.randrange(1 << rng.randint(1, 20))
            if y >= 1 << 20:
                continue
            assert L.query(y) is s.search(y)

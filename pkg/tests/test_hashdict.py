from __future__ import annotations

import random

import numpy as np
import pytest

from expsearch.hashdict import (PerfectHash, Reciprocal, StaticDict, fks_build,
                                next_prime_above_pow2, ph_lookup, reciprocal_div_batch,
                                static_dict_build)


def test_reciprocal_worked_examples():
    r = Reciprocal(7, 16)
    assert r.r == 9362
    assert r.guess(100) == 14 and r.div(100) == 14
    assert r.guess(65534) == 9361
    assert r.div(65534) == 9362
    assert r.mod(65534) == 0
    assert r.divmod(65533) == (9361, 6)


def test_reciprocal_rejects_zero():
    with pytest.raises(ValueError):
        Reciprocal(0)


def test_reciprocal_exhaustive_small_slice():
    for p in (1, 2, 3, 7, 10, 255, 997, 1000):
        r = Reciprocal(p, 16)
        for x in range(1 << 16):
            assert r.div(x) == x // p


def test_reciprocal_guess_is_at_most_one_short():
    rng = random.Random(0)
    for _ in range(20000):
        p = rng.randrange(1, 1 << 64)
        x = rng.randrange(1 << 64)
        g = Reciprocal(p).guess(x)
        assert x // p - 1 <= g <= x // p


def test_batch_matches_scalar():
    rng = np.random.default_rng(1)
    x = rng.integers(0, 2**64, size=20000, dtype=np.uint64)
    p = rng.integers(1, 2**64, size=20000, dtype=np.uint64)
    p[:50] = 1
    p[50:100] = 2**63
    got = reciprocal_div_batch(x, p)
    assert np.array_equal(got, x // p)
    small = reciprocal_div_batch(np.arange(1 << 16, dtype=np.uint64), 7, width=16)
    assert np.array_equal(small, np.arange(1 << 16, dtype=np.uint64) // 7)


def test_prime_above_pow2():
    assert next_prime_above_pow2(4) == 17
    assert next_prime_above_pow2(8) == 257
    assert next_prime_above_pow2(16) == 65537
    assert next_prime_above_pow2(64) == 2**64 + 13


def test_fks_small_worked_example():
    h = fks_build([1, 5, 9], width=8)
    assert [ph_lookup(h, k) for k in (1, 5, 9)] == [0, 1, 2]
    assert h.collisions() == 0
    absent = [k for k in range(256) if k not in (1, 5, 9)][:13]
    for k in absent:
        val, probes = h.lookup_probes(k)
        assert val is None and probes <= 2


def test_fks_empty():
    h = fks_build([])
    assert len(h) == 0 and h.lookup(3) is None and h.cells == 0


def test_fks_rejects_duplicates_and_range():
    with pytest.raises(ValueError):
        fks_build([4, 4])
    with pytest.raises(ValueError):
        fks_build([256], width=8)


def test_fks_random_tables():
    rng = random.Random(4)
    keys = list({rng.getrandbits(64) for _ in range(1000)})
    h = fks_build(keys)
    assert h.collisions() == 0
    assert h.cells <= 6 * len(keys)
    for i, k in enumerate(keys):
        val, probes = h.lookup_probes(k)
        assert val == i and probes <= 2
    stored = set(keys)
    for _ in range(20000):
        k = rng.getrandbits(64)
        val, probes = h.lookup_probes(k)
        assert (val is not None) == (k in stored) and probes <= 2


def test_fks_tables_are_deterministic():
    rng = random.Random(6)
    keys = [rng.getrandbits(32) for _ in range(300)]
    assert fks_build(keys, 32).fingerprint() == fks_build(keys, 32).fingerprint()


def test_fks_adversarial_multiples_of_table_size():
    # keys differing by multiples of small table sizes must still separate
    keys = [j * 1024 for j in range(200)] + [j * 3 for j in range(1, 200)]
    h = PerfectHash(sorted(set(keys)), None, 64)
    assert h.collisions() == 0


def test_static_dict_branches():
    d = static_dict_build([3, 9, 27])
    assert d.branch == "fusion"
    assert StaticDict.threshold(64, 1 / 8) == 64.0 ** 8
    assert 9 in d and 10 not in d
    with pytest.raises(ValueError):
        static_dict_build([1], eps=0.2)


def test_static_dict_exhaustive_8bit():
    rng = random.Random(3)
    for _ in range(20):
        keys = rng.sample(range(256), rng.randint(1, 40))
        d = static_dict_build(keys, width=8, eps=0.15)
        ks = set(keys)
        worst = 0
        for q in range(256):
            hit, probes = d.member_probes(q)
            assert hit == (q in ks)
            worst = max(worst, probes)
        assert worst <= 8


def test_static_dict_fks_branch(monkeypatch):
    # d >= W**(1/eps) needs more than W**6 keys, so force the branch
    monkeypatch.setattr(StaticDict, "threshold", staticmethod(lambda width, eps=0.125: 0.0))
    rng = random.Random(9)
    keys = list({rng.getrandbits(64) for _ in range(500)})
    d = static_dict_build(keys)
    assert d.branch == "fks"
    ks = set(keys)
    for q in keys + [rng.getrandbits(64) for _ in range(2000)]:
        hit, probes = d.member_probes(q)
        assert hit == (q in ks) and probes <= 2

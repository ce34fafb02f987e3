"""Deterministic hashing substrate.

Three pieces live here:

* :class:`Reciprocal` replaces ``x // p`` and ``x % p`` by one multiplication
  with a precomputed reciprocal plus a single correction test.
* :class:`PerfectHash` is a two-level table in the style of Fredman, Komlos
  and Szemeredi.  Construction draws multipliers from a fixed-seed sequence, all
  modular reductions go through :class:`Reciprocal`, and a lookup reads at
  most two cells.
* :class:`StaticDict` is a static membership dictionary that picks a perfect
  hash table for large sets and a tree of fusion nodes for small ones.

Every build is a pure function of its input: identical key sets give
bit-identical tables.
"""

from __future__ import annotations

import random
from array import array
from collections import Counter
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Reciprocal",
    "reciprocal_div_batch",
    "next_prime_above_pow2",
    "PerfectHash",
    "fks_build",
    "ph_lookup",
    "StaticDict",
    "static_dict_build",
]


def _floor_pow2_over(p: int, width: int) -> int:
    """Return floor(2**width / p) with shifts and subtraction only."""
    q = 0
    rem = 0
    for bit in range(width, -1, -1):
        rem = (rem << 1) | (1 if bit == width else 0)
        q <<= 1
        if rem >= p:
            rem -= p
            q |= 1
    return q


class Reciprocal:
    """Division by a fixed divisor ``p`` via multiplication.

    ``r = floor(2**width / p)`` is computed once by restoring division.  For
    ``0 <= x < 2**width`` the first guess ``(x * r) >> width`` is either exact
    or one too small, so a single comparison fixes it.
    """

    __slots__ = ("p", "width", "r")

    def __init__(self, p: int, width: int = 64) -> None:
        if p <= 0:
            raise ValueError(f"divisor must be positive, got {p}")
        if width <= 0:
            raise ValueError(f"width must be positive, got {width}")
        self.p = p
        self.width = width
        self.r = _floor_pow2_over(p, width)

    def guess(self, x: int) -> int:
        """First quotient estimate, before the correction test."""
        return (x * self.r) >> self.width

    def div(self, x: int) -> int:
        q = (x * self.r) >> self.width
        if (q + 1) * self.p <= x:
            q += 1
        return q

    def mod(self, x: int) -> int:
        q = (x * self.r) >> self.width
        rem = x - q * self.p
        if rem >= self.p:
            rem -= self.p
        return rem

    def divmod(self, x: int) -> tuple[int, int]:
        q = (x * self.r) >> self.width
        rem = x - q * self.p
        if rem >= self.p:
            return q + 1, rem - self.p
        return q, rem

    def __repr__(self) -> str:
        return f"Reciprocal(p={self.p}, width={self.width}, r={self.r})"


reciprocal_div = Reciprocal.div
reciprocal_mod = Reciprocal.mod


_MULT_CACHE: dict[int, tuple[random.Random, list[int]]] = {}


_EMPTY = object()


def _value_store(values) -> tuple[array | list, object]:
    """Cell value storage: a typed array when every value is a small index."""
    if isinstance(values, range) or all(type(v) is int and 0 <= v < 0xFFFFFFFF for v in values):
        hi = max(values, default=0)
        if hi < 0xFFFF:
            return array("H"), 0xFFFF
        return array("I"), 0xFFFFFFFF
    return [], _EMPTY


def _multiplier_seq(prime: int) -> list[int]:
    entry = _MULT_CACHE.get(prime)
    if entry is None:
        entry = _MULT_CACHE[prime] = (random.Random(0x9E3779B97F4A7C15), [])
    return entry[1]


def _multiplier_at(prime: int, i: int) -> int:
    """Element ``i`` of the fixed pseudo-random multiplier sequence for ``prime``."""
    seq = _multiplier_seq(prime)
    rng = _MULT_CACHE[prime][0]
    while len(seq) <= i:
        seq.append(rng.randrange(1, prime))
    return seq[i]


@lru_cache(maxsize=4096)
def _cached_reciprocal(p: int, width: int) -> Reciprocal:
    return Reciprocal(p, width)


# ---------------------------------------------------------------------------
# vectorised twin used for bulk verification
# ---------------------------------------------------------------------------

_M32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


def _mul_wide(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full 128-bit product of uint64 arrays as (high, low) words."""
    a_lo = a & _M32
    a_hi = a >> _S32
    b_lo = b & _M32
    b_hi = b >> _S32
    ll = a_lo * b_lo
    hl = a_hi * b_lo
    lh = a_lo * b_hi
    hh = a_hi * b_hi
    cross = (ll >> _S32) + (hl & _M32) + lh
    hi = hh + (hl >> _S32) + (cross >> _S32)
    lo = (cross << _S32) | (ll & _M32)
    return hi, lo


def _reciprocal_array(p: np.ndarray, width: int) -> np.ndarray:
    """floor(2**width / p) elementwise; entries with p == 1 are left as 0."""
    rem = np.zeros_like(p)
    q = np.zeros_like(p)
    one = np.uint64(1)
    for bit in range(width, -1, -1):
        b = one if bit == width else np.uint64(0)
        # 2*rem + b >= p, written so nothing overflows
        gap = p - rem - b
        take = rem >= gap
        rem = np.where(take, rem - gap, rem * np.uint64(2) + b)
        if bit < 64:
            q = (q << one) | take.astype(np.uint64)
    return q


def reciprocal_div_batch(x: Sequence[int] | np.ndarray, p: Sequence[int] | np.ndarray,
                         width: int = 64) -> np.ndarray:
    """Vectorised reciprocal division of uint64 arrays.

    Runs the same algorithm as :class:`Reciprocal` (restoring division for the
    reciprocal, a wide multiply, one correction) with numpy word arithmetic.
    ``p == 1`` needs a ``width + 1`` bit reciprocal and is answered directly.
    """
    if not 1 <= width <= 64:
        raise ValueError("width must be in [1, 64]")
    xa = np.asarray(x, dtype=np.uint64)
    pa = np.asarray(p, dtype=np.uint64)
    if np.any(pa == 0):
        raise ValueError("divisor must be positive")
    # reciprocals are computed before broadcasting so a scalar divisor costs one
    r = _reciprocal_array(pa, width)
    xa, pa, r = np.broadcast_arrays(xa, pa, r)
    hi, lo = _mul_wide(xa, r)
    if width == 64:
        q = hi
    else:
        q = (hi << np.uint64(64 - width)) | (lo >> np.uint64(width))
    rem = xa - q * pa
    q = q + (rem >= pa).astype(np.uint64)
    return np.where(pa == 1, xa, q)


# ---------------------------------------------------------------------------
# primes for universe reduction
# ---------------------------------------------------------------------------

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def _is_prime(n: int) -> bool:
    # deterministic Miller-Rabin; these bases are exact below 3.3e24
    if n < 2:
        return False
    for sp in _MR_BASES:
        if n % sp == 0:
            return n == sp
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=None)
def next_prime_above_pow2(width: int) -> int:
    """Smallest prime greater than ``2**width`` (injective reduction of W-bit keys)."""
    if width > 80:
        raise ValueError("width too large for the deterministic primality test")
    n = (1 << width) + 1
    while not _is_prime(n):
        n += 1
    return n


# ---------------------------------------------------------------------------
# two-level perfect hashing
# ---------------------------------------------------------------------------

_FKS_TARGET = 3  # sum of squared bucket sizes must stay below 3*d


class PerfectHash:
    """Static two-level perfect hash table over distinct W-bit keys.

    ``lookup`` returns the position of the key in the build input or ``None``.
    Top-level cell ``j`` is the triple ``(offset, size, multiplier)`` locating
    the second-level table of bucket ``j``; second-level cells hold a key and
    its value.  Layout lives in typed arrays (multipliers as indices into the
    shared multiplier sequence) so that thousands of small tables stay cheap.
    Nothing is mutated by queries.
    """

    __slots__ = (
        "d", "width", "prime", "_red_prime", "top_mult", "_red_top", "_mseq",
        "top_off", "top_midx", "cell_keys", "cell_vals", "_empty",
        "build_units", "candidates_tried",
    )

    def __init__(self, keys: Sequence[int], values: Sequence[object] | None = None,
                 width: int = 64) -> None:
        d = len(keys)
        self.d = d
        self.width = width
        self.build_units = 0
        self.candidates_tried = 0
        if values is None:
            values = range(d)
        elif len(values) != d:
            raise ValueError("keys and values differ in length")
        # bucket j spans cells [top_off[j], top_off[j + 1])
        self.top_off = array("I", [0])
        self.top_midx = array("I")
        self.cell_keys: array | list = (array("I") if width <= 32 else
                                        array("Q") if width <= 64 else [])
        self.cell_vals, self._empty = _value_store(values)
        if d == 0:
            self.prime = 0
            self._red_prime = None
            self.top_mult = 0
            self._red_top = None
            self._mseq = []
            return
        if min(keys) < 0 or max(keys) >= 1 << width:
            bad = next(k for k in keys if not 0 <= k < 1 << width)
            raise ValueError(f"key {bad} outside the {width}-bit universe")
        if len(set(keys)) != d:
            dup = next(k for k, c in Counter(keys).items() if c > 1)
            raise ValueError(f"duplicate key {dup}")
        prime = next_prime_above_pow2(width)
        self.prime = prime
        # a*x < prime * 2**width <= 2**(2*width + 1)
        red_p = _cached_reciprocal(prime, 2 * width + 2)
        self._red_prime = red_p
        red_top = _cached_reciprocal(d, width + 2)
        self._red_top = red_top

        # multipliers come from a fixed pseudo-random sequence over [1, prime)
        seq = _multiplier_seq(prime)
        self._mseq = seq
        target = _FKS_TARGET * d
        i = 0
        while True:
            a = _multiplier_at(prime, i)
            i += 1
            self.candidates_tried += 1
            # builds may divide; the reciprocal reducers give the same residues
            # and are what lookups use
            slots = [(a * k) % prime % d for k in keys]
            self.build_units += d
            total = sum(c * c for c in Counter(slots).values())
            if total < target:
                break
            if i > 10_000:
                raise RuntimeError("level-one multiplier search exhausted")
        self.top_mult = a

        buckets: list[list[int]] = [[] for _ in range(d)]
        for idx, j in enumerate(slots):
            buckets[j].append(idx)

        top_off, top_midx = self.top_off, self.top_midx
        cell_keys = self.cell_keys
        cell_vals = self.cell_vals
        empty = self._empty
        offset = 0
        for members in buckets:
            b = len(members)
            if b == 0:
                top_off.append(offset)
                top_midx.append(0)
                continue
            if b == 1:
                cell_keys.append(keys[members[0]])
                cell_vals.append(values[members[0]])
                offset += 1
                top_off.append(offset)
                top_midx.append(0)
                self.build_units += 1
                continue
            size = b * b
            tries = 0
            while True:
                a2 = _multiplier_at(prime, i)
                i += 1
                tries += 1
                self.candidates_tried += 1
                self.build_units += b
                pos = [(a2 * keys[m]) % prime % size for m in members]
                if len(set(pos)) == b:
                    break
                if tries > 10_000:
                    raise RuntimeError("level-two multiplier search exhausted")
            top_midx.append(i - 1)
            table_v: list[object] = [empty] * size
            table_k = [0] * size
            for m, pslot in zip(members, pos):
                table_k[pslot] = keys[m]
                table_v[pslot] = values[m]
            cell_keys.extend(table_k)
            cell_vals.extend(table_v)
            offset += size
            top_off.append(offset)

    # -- queries -----------------------------------------------------------

    def lookup_probes(self, key: int) -> tuple[object | None, int]:
        """Return ``(value or None, cells read)``."""
        if self.d == 0:
            return None, 0
        if not 0 <= key < (1 << self.width):
            return None, 0
        red_p = self._red_prime
        j = self._red_top.mod(red_p.mod(self.top_mult * key))
        pos = self.top_off[j]
        size = self.top_off[j + 1] - pos
        if size == 0:
            return None, 1
        if size > 1:
            mult = self._mseq[self.top_midx[j]]
            pos += _cached_reciprocal(size, self.width + 2).mod(red_p.mod(mult * key))
        v = self.cell_vals[pos]
        if self.cell_keys[pos] == key and v is not self._empty and v != self._empty:
            return v, 2
        return None, 2

    def lookup(self, key: int) -> object | None:
        return self.lookup_probes(key)[0]

    def __contains__(self, key: int) -> bool:
        return self.lookup_probes(key)[0] is not None

    def __len__(self) -> int:
        return self.d

    def stored_keys(self) -> list[int]:
        e = self._empty
        return [k for k, v in zip(self.cell_keys, self.cell_vals) if v is not e and v != e]

    # -- accounting --------------------------------------------------------

    @property
    def second_level_cells(self) -> int:
        return len(self.cell_keys)

    @property
    def cells(self) -> int:
        """Top-level cells plus second-level cells."""
        return len(self.top_midx) + len(self.cell_keys)

    @property
    def c_fks(self) -> float:
        return self.cells / self.d if self.d else 0.0

    def collisions(self) -> int:
        """Stored keys that share a final cell with another stored key (direct scan)."""
        return self.d - len(self.stored_keys())

    def fingerprint(self) -> tuple:
        off = self.top_off
        mults = tuple(self._mseq[m] if off[j + 1] - off[j] > 1 else 0
                      for j, m in enumerate(self.top_midx))
        return (self.top_mult, tuple(off), mults,
                tuple(self.stored_keys()))

    def stats(self) -> dict:
        return {
            "d": self.d,
            "top_multiplier": self.top_mult,
            "top_cells": len(self.top_midx),
            "second_level_cells": len(self.cell_keys),
            "c_fks": round(self.c_fks, 4),
            "candidates_tried": self.candidates_tried,
            "build_units": self.build_units,
        }


def fks_build(keys: Iterable[int], width: int = 64) -> PerfectHash:
    """Build a perfect hash table whose values are the input positions."""
    return PerfectHash(list(keys), None, width)


def ph_lookup(h: PerfectHash, key: int) -> int | None:
    return h.lookup(key)  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# static membership dictionary
# ---------------------------------------------------------------------------


class StaticDict:
    """Deterministic static dictionary with constant worst-case probes.

    Uses a perfect hash table once ``d >= W**(1/eps)``; below that threshold a
    static tree of fusion nodes answers membership through a predecessor query
    followed by an equality test.
    """

    __slots__ = ("keys", "width", "eps", "branch", "_hash", "_tree", "build_units")

    def __init__(self, keys: Sequence[int], width: int = 64, eps: float = 1 / 8) -> None:
        if not 0 < eps < 1 / 6:
            raise ValueError("eps must lie in (0, 1/6)")
        from .sstruct import FusionTree  # local import: sstruct depends on this module

        ordered = sorted(keys)
        for a, b in zip(ordered, ordered[1:]):
            if a == b:
                raise ValueError(f"duplicate key {a}")
        self.keys = ordered
        self.width = width
        self.eps = eps
        d = len(ordered)
        self.branch = "fks" if d >= self.threshold(width, eps) else "fusion"
        self._hash: PerfectHash | None = None
        self._tree = None
        if self.branch == "fks":
            self._hash = PerfectHash(ordered, None, width)
            self.build_units = self._hash.build_units
        else:
            self._tree = FusionTree(ordered, width)
            self.build_units = self._tree.build_units

    @staticmethod
    def threshold(width: int, eps: float = 1 / 8) -> float:
        return float(width) ** (1.0 / eps)

    def member_probes(self, key: int) -> tuple[bool, int]:
        if self._hash is not None:
            val, probes = self._hash.lookup_probes(key)
            return val is not None, probes
        idx, probes = self._tree.query_probes(key)
        return idx >= 0 and self.keys[idx] == key, probes

    def __contains__(self, key: int) -> bool:
        return self.member_probes(key)[0]

    def __len__(self) -> int:
        return len(self.keys)


def static_dict_build(keys: Iterable[int], width: int = 64, eps: float = 1 / 8) -> StaticDict:
    return StaticDict(list(keys), width, eps)

"""Static predecessor structures over a node's splitters.

All variants share one contract: built once from a sorted list of distinct
keys, then ``query(k)`` returns the index of the largest key ``<= k`` or ``-1``
when ``k`` lies below every key.  ``query_probes`` additionally reports the
number of probes the query made; queries never mutate the structure.

Variants
--------
``sorted``  binary search over a plain array (baseline).
``veb``     binary trie with one perfect hash table per prefix length and a
            binary search over prefix lengths.  ``query_adaptive`` replaces the
            binary search by an exponential-then-binary search whose cost
            depends on the length of the query's distinguishing prefix.
``fusion``  static B-tree of fusion nodes; each node ranks a query among its
            few keys with one packed sketch comparison.
``auto``    chooses between ``fusion`` and ``veb`` with :func:`select_structure`.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from typing import Sequence

from .hashdict import PerfectHash

__all__ = [
    "VARIANTS",
    "StaticSearch",
    "SortedSearch",
    "VebTrie",
    "FusionNode",
    "FusionTree",
    "fusion_cap",
    "select_structure",
    "build",
    "veb_probe_bound",
]

VARIANTS = ("sorted", "veb", "fusion", "auto")


def _check_sorted_distinct(keys: Sequence[int], width: int) -> None:
    limit = 1 << width
    prev = -1
    for k in keys:
        if k <= prev:
            raise ValueError("keys must be sorted and distinct")
        prev = k
    if keys and (keys[0] < 0 or keys[-1] >= limit):
        raise ValueError(f"keys must lie in [0, 2**{width})")


class StaticSearch:
    """Common interface; subclasses set ``keys`` and ``variant``."""

    variant = "abstract"
    keys: Sequence[int]
    width: int
    build_units: int = 0

    def query(self, k: int) -> int:
        return self.query_probes(k)[0]

    def query_probes(self, k: int) -> tuple[int, int]:  # pragma: no cover - interface
        raise NotImplementedError

    def space_units(self) -> int:  # pragma: no cover - interface
        raise NotImplementedError

    def __len__(self) -> int:
        return len(self.keys)


class SortedSearch(StaticSearch):
    variant = "sorted"
    __slots__ = ("keys", "width", "build_units")

    def __init__(self, keys: Sequence[int], width: int = 64) -> None:
        self.keys = list(keys)
        self.width = width
        self.build_units = len(self.keys)

    def query_probes(self, k: int) -> tuple[int, int]:
        n = len(self.keys)
        probes = n.bit_length()
        return bisect_right(self.keys, k) - 1, probes

    def query(self, k: int) -> int:
        return bisect_right(self.keys, k) - 1

    def space_units(self) -> int:
        return len(self.keys) + 1


def veb_probe_bound(width: int) -> int:
    """Table probes allowed per trie query: ceil(log2(W+1)) + 2."""
    return math.ceil(math.log2(width + 1)) + 2


class VebTrie(StaticSearch):
    """Binary trie over W-bit keys with one perfect hash table per depth.

    The table for depth ``l`` holds every length-``l`` prefix of a stored key.
    Its value is a neighbour link: for a node whose only child is the 0-child
    the link is the largest leaf below it, otherwise the smallest.  A query
    finds the longest stored prefix of ``k``, follows the link and steps one
    leaf to the left if the leaf found exceeds ``k``.
    """

    variant = "veb"
    __slots__ = ("keys", "width", "tables", "build_units", "_entries")

    def __init__(self, keys: Sequence[int], width: int = 64) -> None:
        keys = list(keys)
        _check_sorted_distinct(keys, width)
        self.keys = keys
        self.width = width
        self.build_units = 0
        self._entries = 0
        tables: list[PerfectHash | None] = [None] * (width + 1)
        d = len(keys)
        if d:
            for depth in range(width + 1):
                shift = width - depth
                prefixes: list[int] = []
                links: list[int] = []
                i = 0
                while i < d:
                    p = keys[i] >> shift
                    j = i + 1
                    while j < d and keys[j] >> shift == p:
                        j += 1
                    # child bit of the first/last key below this prefix
                    if depth < width:
                        cbit = shift - 1
                        lo_bit = (keys[i] >> cbit) & 1
                        hi_bit = (keys[j - 1] >> cbit) & 1
                        link = j - 1 if hi_bit == 0 and lo_bit == 0 else i
                    else:
                        link = i
                    prefixes.append(p)
                    links.append(link)
                    i = j
                self._entries += len(prefixes)
                table = PerfectHash(prefixes, links, max(depth, 1))
                self.build_units += len(prefixes) + table.build_units
                tables[depth] = table
        self.tables = tables

    def _finish(self, depth: int, link: int, k: int) -> int:
        if depth < self.width and self.keys[link] > k:
            return link - 1
        return link

    def query_probes(self, k: int) -> tuple[int, int]:
        if not self.keys:
            return -1, 0
        w = self.width
        tables = self.tables
        lo, hi = 0, w
        link = tables[0].lookup(0)
        probes = 0
        while lo < hi:
            mid = (lo + hi + 1) >> 1
            v = tables[mid].lookup(k >> (w - mid))
            probes += 1
            if v is None:
                hi = mid - 1
            else:
                lo = mid
                link = v
        return self._finish(lo, link, k), probes

    def query_adaptive_probes(self, k: int) -> tuple[int, int]:
        """Exponential search over prefix lengths, then binary search."""
        if not self.keys:
            return -1, 0
        w = self.width
        tables = self.tables
        link = tables[0].lookup(0)
        probes = 0
        good = 0
        bad = w + 1
        step = 1
        while True:
            depth = min(step, w)
            v = tables[depth].lookup(k >> (w - depth))
            probes += 1
            if v is None:
                bad = depth
                break
            good = depth
            link = v
            if depth == w:
                break
            step <<= 1
        lo, hi = good, bad - 1
        while lo < hi:
            mid = (lo + hi + 1) >> 1
            v = tables[mid].lookup(k >> (w - mid))
            probes += 1
            if v is None:
                hi = mid - 1
            else:
                lo = mid
                link = v
        return self._finish(lo, link, k), probes

    def query_adaptive(self, k: int) -> int:
        return self.query_adaptive_probes(k)[0]

    def distinguishing_prefix(self, k: int) -> int:
        """Length of the shortest prefix of ``k`` absent from the trie (W+1 on a hit)."""
        if not self.keys:
            return 0
        w = self.width
        depth = 0
        while depth < w and self.tables[depth + 1].lookup(k >> (w - depth - 1)) is not None:
            depth += 1
        return depth + 1

    def space_units(self) -> int:
        return sum(t.cells for t in self.tables if t is not None) + len(self.keys) + 1


def veb_query(t: VebTrie, k: int) -> int:
    return t.query(k)


def veb_query_adaptive(t: VebTrie, k: int) -> int:
    return t.query_adaptive(k)


# ---------------------------------------------------------------------------
# fusion nodes
# ---------------------------------------------------------------------------


def fusion_cap(width: int) -> int:
    """Keys per fusion node: max(2, floor(W ** (1/6)))."""
    c = int(round(width ** (1.0 / 6.0)))
    if c ** 6 > width:
        c -= 1
    return max(2, c)


class FusionNode:
    """Constant-probe predecessor node over at most ``cap`` keys.

    Build: the distinguishing bit positions of the keys are gathered, and a
    multiplier spreads them into an approximate sketch whose order matches the
    key order.  The sketches are packed into one word with a guard bit per
    field.  Query: the query's sketch is replicated by multiplication and
    subtracted from the packed word; the surviving guard bits count keys whose
    sketch is at least the query's.  One correction pass recomputes the sketch
    of a probe value built from the longest common prefix with a neighbouring
    key, which makes the rank exact.
    """

    __slots__ = (
        "keys", "width", "bits", "mask", "mult", "positions", "shift", "swidth",
        "tmask", "field", "packed", "guards", "ones", "build_units",
    )

    def __init__(self, keys: Sequence[int], width: int = 64, cap: int | None = None) -> None:
        keys = list(keys)
        _check_sorted_distinct(keys, width)
        cap = fusion_cap(width) if cap is None else cap
        if len(keys) > cap:
            raise ValueError(f"fusion node holds at most {cap} keys, got {len(keys)}")
        self.keys = keys
        self.width = width
        self.build_units = 1
        d = len(keys)
        bits = sorted({(a ^ b).bit_length() - 1 for a, b in zip(keys, keys[1:])})
        self.bits = bits
        r = len(bits)
        self.mask = 0
        for b in bits:
            self.mask |= 1 << b
        if r == 0:
            self.mult = 0
            self.positions = []
            self.shift = 0
            self.swidth = 1
            self.tmask = 0
        else:
            self._choose_multiplier(bits)
        self.field = self.swidth + 1
        self.ones = 0
        for i in range(d):
            self.ones |= 1 << (i * self.field)
        self.guards = self.ones << self.swidth
        packed = 0
        for i, k in enumerate(keys):
            packed |= ((1 << self.swidth) | self.sketch(k)) << (i * self.field)
        self.packed = packed

    def _choose_multiplier(self, bits: list[int]) -> None:
        r = len(bits)
        r3 = max(1, r ** 3)
        # m'_t avoids every residue b_i - b_j + m'_k (mod r^3) used so far
        chosen: list[int] = []
        for _ in range(r):
            forbidden = set()
            for bi in bits:
                for bj in bits:
                    for mk in chosen:
                        forbidden.add((bi - bj + mk) % r3)
                        self.build_units += 1
            m = 0
            while m in forbidden:
                m += 1
            chosen.append(m)
        base = max(bits) + 1
        mults = []
        positions = []
        for i, (b, m) in enumerate(zip(bits, chosen)):
            lo = base + i * r3
            want = (b + m) % r3
            t = lo + ((want - lo) % r3)
            positions.append(t)
            mults.append(t - b)
        self.mult = sum(1 << m for m in mults)
        self.positions = positions
        self.shift = positions[0]
        self.swidth = positions[-1] - positions[0] + 1
        tmask = 0
        for t in positions:
            tmask |= 1 << t
        self.tmask = tmask

    def sketch(self, x: int) -> int:
        if not self.bits:
            return 0
        return (((x & self.mask) * self.mult) & self.tmask) >> self.shift

    def _count_ge(self, s: int) -> int:
        """Keys whose sketch is >= s; the guard bit of field i survives iff so."""
        diff = (self.packed - s * self.ones) & self.guards
        total = ((diff >> self.swidth) * self.ones) >> ((len(self.keys) - 1) * self.field)
        return total & ((1 << self.field) - 1)

    def query(self, q: int) -> int:
        keys = self.keys
        d = len(keys)
        if d == 0:
            return -1
        if d == 1:
            return 0 if q >= keys[0] else -1
        i = d - self._count_ge(self.sketch(q))
        best = -1
        best_j = 0
        for j in (i - 1, i):
            if 0 <= j < d:
                diff = (q ^ keys[j]).bit_length()
                if best < 0 or diff < best:
                    best, best_j = diff, j
        if best == 0:
            return best_j
        p = best - 1  # q leaves the trie at bit p
        if (q >> p) & 1:
            # every key sharing the prefix above p is smaller than q
            e = (((q >> p) << p) ^ (1 << p)) | ((1 << p) - 1)
            return d - self._count_ge(self.sketch(e) + 1) - 1
        # every key sharing the prefix above p is larger than q
        e = ((q >> p) | 1) << p
        return d - self._count_ge(self.sketch(e)) - 1

    def query_probes(self, q: int) -> tuple[int, int]:
        return self.query(q), 1

    def space_units(self) -> int:
        return 2 * len(self.keys) + 6


class FusionTree(StaticSearch):
    """Static B-tree whose nodes are fusion nodes of at most ``cap`` keys.

    Internal nodes store separator keys; a query descends one node per level,
    so probes are bounded by the height ``ceil(log(d) / log(cap + 1)) + 1``.
    """

    variant = "fusion"
    __slots__ = ("keys", "width", "cap", "root", "build_units", "_nodes", "height")

    class _Node:
        __slots__ = ("fn", "index", "children")

        def __init__(self, fn: FusionNode, index: list[int], children: list | None) -> None:
            self.fn = fn
            self.index = index
            self.children = children

    def __init__(self, keys: Sequence[int], width: int = 64, cap: int | None = None) -> None:
        keys = list(keys)
        _check_sorted_distinct(keys, width)
        self.keys = keys
        self.width = width
        self.cap = fusion_cap(width) if cap is None else cap
        self.build_units = 0
        self._nodes = 0
        self.height = 0
        self.root = self._build(0, len(keys), 1) if keys else None

    def _build(self, lo: int, hi: int, depth: int):
        m = hi - lo
        cap = self.cap
        self._nodes += 1
        self.height = max(self.height, depth)
        if m <= cap:
            idx = list(range(lo, hi))
            fn = FusionNode([self.keys[i] for i in idx], self.width, cap)
            self.build_units += fn.build_units + len(idx)
            return FusionTree._Node(fn, idx, None)
        # cap separators, cap+1 subtrees of near-equal size
        rest = m - cap
        parts = cap + 1
        sizes = [rest // parts + (1 if j < rest % parts else 0) for j in range(parts)]
        idx = []
        children = []
        pos = lo
        for j in range(parts):
            children.append(self._build(pos, pos + sizes[j], depth + 1) if sizes[j] else None)
            pos += sizes[j]
            if j < cap:
                idx.append(pos)
                pos += 1
        fn = FusionNode([self.keys[i] for i in idx], self.width, cap)
        self.build_units += fn.build_units + len(idx)
        return FusionTree._Node(fn, idx, children)

    def query_probes(self, k: int) -> tuple[int, int]:
        node = self.root
        best = -1
        probes = 0
        while node is not None:
            probes += 1
            r = node.fn.query(k)
            if r >= 0:
                best = node.index[r]
                if self.keys[best] == k:
                    return best, probes
            if node.children is None:
                break
            node = node.children[r + 1]
        return best, probes

    def query(self, k: int) -> int:
        return self.query_probes(k)[0]

    def space_units(self) -> int:
        return 3 * self._nodes * (self.cap + 1) + len(self.keys) + 1


def fusion_build(keys: Sequence[int], width: int = 64) -> FusionNode:
    return FusionNode(keys, width)


def fusion_query(node: FusionNode, k: int) -> int:
    return node.query(k)


def fusion_tree_build(keys: Sequence[int], width: int = 64) -> FusionTree:
    return FusionTree(keys, width)


def select_structure(d: int, width: int) -> str:
    """Pick ``fusion`` when 1 + log d / log W < log W, otherwise ``veb``.

    Equality goes to ``veb``.  Logarithms are base 2.
    """
    lw = math.log2(width) if width > 1 else 1.0
    ld = math.log2(d) if d > 1 else 0.0
    return "fusion" if 1.0 + ld / lw < lw else "veb"


def build(keys: Sequence[int], variant: str = "sorted", width: int = 64) -> StaticSearch:
    """Build a static structure; ``keys`` must be sorted and distinct."""
    if variant == "auto":
        variant = select_structure(len(keys), width)
    if variant == "sorted":
        _check_sorted_distinct(keys, width)
        return SortedSearch(keys, width)
    if variant == "veb":
        return VebTrie(keys, width)
    if variant == "fusion":
        return FusionTree(keys, width)
    raise ValueError(f"unknown structure variant {variant!r}")

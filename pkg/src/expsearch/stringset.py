"""Ordered sets of word strings.

Strings are sequences of ``W``-bit words compared lexicographically, with a
shorter string sorting before its extensions.  Internally each word is
shifted up by one and a ``0`` terminator is appended, so no stored string is
a prefix of another.

The trie is path-compressed.  A branching node at depth ``d`` sends a query
on its ``d``-th character either through a perfect hash over its heavy
children or through an integer ordered set over all child labels.  A child
with more than ``m^(1-1/k)`` descendants (``m`` = the node's own count) is
always in the hash; the hash is rebuilt from a candidate list every
``m^(1-1/k)/4`` updates below the node.
"""

from __future__ import annotations

from fractions import Fraction

from .core import AuditReport, Config, OrderedSet
from .hashdict import PerfectHash

__all__ = ["StringSet", "TrieNode", "StringLeaf", "parse_words", "format_words",
           "heavy_threshold"]

SWEEP_PER_UPDATE = 2
NODE_UNITS = 6
LEAF_UNITS = 4


def parse_words(text: str, width: int = 64) -> tuple[int, ...]:
    """``"1f:0:ab"`` -> ``(0x1f, 0, 0xab)``."""
    text = text.strip()
    if not text:
        raise ValueError("empty string key")
    out = []
    for part in text.split(":"):
        w = int(part, 16)
        if not 0 <= w < (1 << width):
            raise ValueError(f"word {part} exceeds {width} bits")
        out.append(w)
    return tuple(out)


def format_words(words) -> str:
    return ":".join(format(w, "x") for w in words)


def _iroot_floor(x: int, n: int) -> int:
    """Largest r with r**n <= x."""
    if x < 2:
        return x
    r = int(round(x ** (1.0 / n)))
    while r ** n > x:
        r -= 1
    while (r + 1) ** n <= x:
        r += 1
    return r


def heavy_threshold(m: int, k=Fraction(5, 2)) -> int:
    """``floor(m^(1-1/k))``."""
    e = 1 - 1 / Fraction(k)
    return _iroot_floor(m ** e.numerator, e.denominator)


class StringLeaf:
    __slots__ = ("key", "words", "count", "prev", "next", "alive")

    def __init__(self, key: tuple, words: tuple) -> None:
        self.key = key
        self.words = words
        self.count = 1
        self.prev = self.next = None
        self.alive = True

    # leaves double as trie children
    @property
    def depth(self) -> int:
        return len(self.key)

    @property
    def rep(self) -> "StringLeaf":
        return self

    @property
    def size(self) -> int:
        return 1

    @property
    def min_leaf(self) -> "StringLeaf":
        return self

    @property
    def max_leaf(self) -> "StringLeaf":
        return self

    def __repr__(self) -> str:
        return f"StringLeaf({format_words(self.words)}, x{self.count})"


class TrieNode:
    __slots__ = ("depth", "rep", "size", "min_leaf", "max_leaf", "light", "bottom",
                 "heavy", "cand", "period_left", "rebuilds", "sweep")

    def __init__(self, depth: int, rep: StringLeaf, width: int) -> None:
        self.depth = depth
        self.rep = rep
        self.size = 0
        self.min_leaf = None
        self.max_leaf = None
        # labels >= 1 (word + 1) live in the light set keyed by word; the
        # terminator child (label 0) is held apart
        self.light = OrderedSet(Config(word_bits=width))
        self.bottom = None
        self.heavy: PerfectHash | None = None
        self.cand: dict = {}
        self.period_left = 1
        self.rebuilds = 0
        self.sweep = None

    def __repr__(self) -> str:
        return f"TrieNode(depth={self.depth}, size={self.size})"


class StringSet:
    """Multiset of word strings with lexicographic predecessor search."""

    def __init__(self, width: int = 64, k=Fraction(5, 2)) -> None:
        if not 1 <= width <= 64:
            raise ValueError("width must be in [1, 64]")
        k = Fraction(k)
        if k <= 1:
            raise ValueError("k must exceed 1")
        self.width = width
        self.k = k
        e = 1 - 1 / k
        self._ep, self._eq = e.numerator, e.denominator
        self.root = TrieNode(0, None, width)
        self.head = StringLeaf((), ())
        self.tail = StringLeaf((), ())
        self.head.next = self.tail
        self.tail.prev = self.head
        self.total = 0
        self.distinct = 0
        self.touch_max = 0
        self.last_touch = 0
        self.heavy_hits = 0
        self.light_queries = 0

    # -- thresholds ----------------------------------------------------------

    def _above(self, c: int, m: int, scale: int = 1) -> bool:
        """``c > m^(1-1/k) / scale`` in exact integer arithmetic."""
        return (scale * c) ** self._eq > m ** self._ep

    def _period(self, m: int) -> int:
        return max(1, _iroot_floor(m ** self._ep, self._eq) // 4)

    # -- encoding ------------------------------------------------------------

    def _encode(self, words) -> tuple:
        limit = 1 << self.width
        out = []
        for w in words:
            if not isinstance(w, int) or not 0 <= w < limit:
                raise ValueError(f"word {w!r} outside [0, 2^{self.width})")
            out.append(w + 1)
        out.append(0)
        return tuple(out)

    # -- child access --------------------------------------------------------

    def _child_elem(self, node: TrieNode, c: int):
        """Light-set element for label ``c`` (``None`` for the terminator)."""
        if node.heavy is not None:
            e = node.heavy.lookup(c)
            if e is not None and e.alive:
                self.heavy_hits += 1
                return e
        self.light_queries += 1
        return node.light.lookup(c - 1)

    def _child(self, node: TrieNode, c: int):
        if c == 0:
            return node.bottom
        e = self._child_elem(node, c)
        return None if e is None else e.payload

    def _set_child(self, node: TrieNode, c: int, child) -> None:
        if c == 0:
            node.bottom = child
            return
        e = self._child_elem(node, c)
        if e is None:
            e = node.light.insert(c - 1, child)
        else:
            e.payload = child
        self._refresh_candidate(node, c, child, e)

    def _remove_child(self, node: TrieNode, c: int) -> None:
        if c == 0:
            node.bottom = None
            return
        node.light.delete_key(c - 1)
        node.cand.pop(c, None)

    def _children(self, node: TrieNode):
        if node.bottom is not None:
            yield 0, node.bottom
        for e in node.light:
            yield e.key + 1, e.payload

    def _nchildren(self, node: TrieNode) -> int:
        return len(node.light) + (node.bottom is not None)

    # -- heavy bookkeeping ---------------------------------------------------

    def _refresh_candidate(self, node: TrieNode, c: int, child, e) -> None:
        if c == 0:
            return
        m = node.size
        if self._above(child.size, m, 2):
            node.cand[c] = e
        elif c in node.cand and not self._above(child.size + 1, m, 2):
            del node.cand[c]

    def _charge(self, node: TrieNode) -> None:
        # sibling sizes do not change, but the node's own size does
        light = node.light
        for _ in range(SWEEP_PER_UPDATE):
            e = node.sweep
            if e is None or not e.alive:
                e = light.minimum()
                if e is None:
                    break
            self._refresh_candidate(node, e.key + 1, e.payload, e)
            node.sweep = light.successor(e)
        node.period_left -= 1
        if node.period_left > 0:
            return
        labels = []
        elems = []
        for c, e in node.cand.items():
            if e.alive:
                labels.append(c)
                elems.append(e)
        node.heavy = PerfectHash(labels, elems, self.width + 1) if labels else None
        node.rebuilds += 1
        node.period_left = self._period(max(node.size, 1))

    # -- queries -------------------------------------------------------------

    def _descend(self, key: tuple):
        """Walk down; returns ``(path, outcome, child, j)``.

        ``outcome`` is ``"hit"`` (child is the leaf), ``"missing"`` (no child
        for ``key[j]`` at ``path[-1]``) or ``"split"`` (``child`` diverges from
        ``key`` at position ``j``).
        """
        node = self.root
        path = [node]
        while True:
            d = node.depth
            c = key[d]
            child = self._child(node, c)
            if child is None:
                return path, "missing", None, d
            rep = child.rep.key
            end = child.depth
            j = d + 1
            while j < end and rep[j] == key[j]:
                j += 1
            if j < end:
                return path, "split", child, j
            if isinstance(child, StringLeaf):
                return path, "hit", child, end
            node = child
            path.append(node)

    def _pred_in_node(self, node: TrieNode, c: int):
        """Largest leaf below ``node`` whose label at this node is ``< c``."""
        if c > 0:
            e = node.light.search(c - 2) if c >= 2 else None
            if e is not None:
                return e.payload.max_leaf
            if node.bottom is not None:
                return node.bottom
        leaf = node.min_leaf.prev if node.min_leaf is not None else self.tail.prev
        return None if leaf is self.head else leaf

    def _locate(self, key: tuple):
        path, outcome, child, j = self._descend(key)
        self.last_touch = len(path) + 1
        if self.last_touch > self.touch_max:
            self.touch_max = self.last_touch
        if outcome == "hit":
            return child
        node = path[-1]
        if outcome == "missing":
            if node.size == 0:
                return None
            return self._pred_in_node(node, key[node.depth])
        if key[j] < child.rep.key[j]:
            leaf = child.min_leaf.prev
            return None if leaf is self.head else leaf
        return child.max_leaf

    def search(self, words):
        """Largest stored string ``<=`` the query, or ``None``."""
        leaf = self._locate(self._encode(words))
        return None if leaf is None else leaf.words

    def lookup(self, words) -> bool:
        key = self._encode(words)
        leaf = self._locate(key)
        return leaf is not None and leaf.key == key

    __contains__ = lookup

    def count(self, words) -> int:
        key = self._encode(words)
        leaf = self._locate(key)
        return leaf.count if leaf is not None and leaf.key == key else 0

    def lcp_descend(self, words):
        """Deepest branching node on the query's path and the matched length in words."""
        key = self._encode(words)
        path, outcome, child, j = self._descend(key)
        node = path[-1]
        if outcome == "missing":
            return node, node.depth
        if outcome == "split":
            return node, j
        return node, len(key) - 1

    def __len__(self) -> int:
        return self.total

    def __iter__(self):
        x = self.head.next
        while x is not self.tail:
            for _ in range(x.count):
                yield x.words
            x = x.next

    def distinct_strings(self) -> list:
        out = []
        x = self.head.next
        while x is not self.tail:
            out.append(x.words)
            x = x.next
        return out

    # -- updates -------------------------------------------------------------

    def _link_after(self, prev: StringLeaf | None, leaf: StringLeaf) -> None:
        p = self.head if prev is None else prev
        n = p.next
        leaf.prev = p
        leaf.next = n
        p.next = leaf
        n.prev = leaf

    def insert(self, words) -> bool:
        """Add one copy; returns ``True`` when the string was not present."""
        key = self._encode(words)
        self.total += 1
        if self.distinct == 0:
            leaf = StringLeaf(key, tuple(words))
            self._link_after(None, leaf)
            self.distinct = 1
            root = self.root
            root.rep = leaf
            self._adjust(root, leaf)
            self._set_child(root, key[0], leaf)
            self._charge(root)
            return True
        path, outcome, child, j = self._descend(key)
        self.last_touch = len(path) + 1
        if self.last_touch > self.touch_max:
            self.touch_max = self.last_touch
        if outcome == "hit":
            child.count += 1
            return False
        node = path[-1]
        leaf = StringLeaf(key, tuple(words))
        if outcome == "missing":
            pred = self._pred_in_node(node, key[node.depth])
            self._link_after(pred, leaf)
            for x in path:
                self._adjust(x, leaf)
            self._set_child(node, key[node.depth], leaf)
        else:
            if key[j] < child.rep.key[j]:
                pred = child.min_leaf.prev
                self._link_after(None if pred is self.head else pred, leaf)
            else:
                self._link_after(child.max_leaf, leaf)
            mid = TrieNode(j, child.rep, self.width)
            mid.size = child.size
            mid.min_leaf = child.min_leaf
            mid.max_leaf = child.max_leaf
            mid.period_left = self._period(mid.size + 1)
            self._set_child(mid, child.rep.key[j], child)
            for x in path:
                self._adjust(x, leaf)
            self._adjust(mid, leaf)
            self._set_child(mid, key[j], leaf)
            self._set_child(node, key[node.depth], mid)
            path.append(mid)
        self._after_update(path, key)
        self.distinct += 1
        return True

    def _adjust(self, x: TrieNode, leaf: StringLeaf) -> None:
        x.size += 1
        if x.min_leaf is None or leaf.key < x.min_leaf.key:
            x.min_leaf = leaf
        if x.max_leaf is None or leaf.key > x.max_leaf.key:
            x.max_leaf = leaf

    def _after_update(self, path: list, key: tuple) -> None:
        # sizes on the path changed: refresh candidacy of each path child
        for i, x in enumerate(path):
            if i + 1 < len(path):
                c = key[x.depth]
                e = self._child_elem(x, c) if c else None
                if e is not None:
                    self._refresh_candidate(x, c, path[i + 1], e)
            self._charge(x)

    def delete(self, words) -> bool:
        """Remove one copy; ``False`` if the string is absent."""
        key = self._encode(words)
        if self.distinct == 0:
            return False
        path, outcome, leaf, _ = self._descend(key)
        if outcome != "hit":
            return False
        self.total -= 1
        if leaf.count > 1:
            leaf.count -= 1
            return True
        node = path[-1]
        self._remove_child(node, key[node.depth])
        for x in path:
            x.size -= 1
            if x.min_leaf is leaf:
                x.min_leaf = leaf.next if x.size else None
            if x.max_leaf is leaf:
                x.max_leaf = leaf.prev if x.size else None
            if x.rep is leaf:
                x.rep = x.min_leaf if x.size else None
        leaf.prev.next = leaf.next
        leaf.next.prev = leaf.prev
        leaf.alive = False
        self.distinct -= 1
        if len(path) > 1 and self._nchildren(node) == 1:
            # splice out the now unary node
            parent = path[-2]
            _, only = next(self._children(node))
            self._set_child(parent, key[parent.depth], only)
            path.pop()
        self._after_update(path, key)
        return True

    # -- accounting ----------------------------------------------------------

    def _nodes(self):
        stack = [self.root]
        while stack:
            x = stack.pop()
            yield x
            for _, ch in self._children(x):
                if isinstance(ch, TrieNode):
                    stack.append(ch)

    def space_usage(self) -> int:
        """Units beyond the stored strings: trie nodes, light sets, hash cells."""
        units = 0
        for x in self._nodes():
            units += NODE_UNITS + x.light.space_usage() + len(x.cand)
            if x.heavy is not None:
                units += x.heavy.cells
        units += LEAF_UNITS * self.distinct
        return units

    def audit(self) -> AuditReport:
        rep = AuditReport()
        keys = []
        x = self.head.next
        while x is not self.tail:
            keys.append(x.key)
            if x.next.prev is not x:
                rep.add("leaf list back link broken")
            x = x.next
        if any(a >= b for a, b in zip(keys, keys[1:])):
            rep.add("leaf list not strictly sorted")
        if len(keys) != self.distinct:
            rep.add(f"{len(keys)} leaves but distinct={self.distinct}")
        missing_heavy = 0
        cand_off = 0
        nodes = 0
        seen = 0

        def walk(node: TrieNode, lo: int):
            nonlocal missing_heavy, cand_off, nodes, seen
            nodes += 1
            total = 0
            mn = mx = None
            kids = list(self._children(node))
            if node is not self.root and len(kids) < 2:
                rep.add(f"unary node at depth {node.depth}")
            prev = -1
            for c, ch in kids:
                if c <= prev:
                    rep.add("child labels out of order")
                prev = c
                if ch.depth <= node.depth:
                    rep.add("child not deeper than parent")
                if ch.rep is None or ch.rep.key[node.depth] != c:
                    rep.add(f"child label {c} disagrees with its representative")
                if isinstance(ch, StringLeaf):
                    size = 1
                    seen += 1
                    lmin = lmax = ch
                else:
                    size = walk(ch, node.depth)
                    lmin, lmax = ch.min_leaf, ch.max_leaf
                total += size
                if mn is None:
                    mn = lmin
                mx = lmax
                if c == 0:
                    continue
                if self._above(size, node.size):
                    e = node.heavy.lookup(c) if node.heavy is not None else None
                    if e is None or not e.alive or e.payload is not ch:
                        missing_heavy += 1
                want = self._above(size, node.size, 2)
                if want != (c in node.cand) and want == self._above(size + 1, node.size, 2):
                    cand_off += 1
            if total != node.size:
                rep.add(f"node size {node.size} but {total} leaves below")
            if node.size and (node.min_leaf is not mn or node.max_leaf is not mx):
                rep.add(f"min/max leaf stale at depth {node.depth}")
            if node.rep is not None and node.size:
                rk = node.rep.key
                if node.min_leaf.key[:node.depth] != rk[:node.depth]:
                    rep.add("representative prefix mismatch")
            return total

        walk(self.root, 0)
        if seen != self.distinct:
            rep.add(f"trie holds {seen} leaves, expected {self.distinct}")
        if missing_heavy:
            rep.add(f"{missing_heavy} heavy children absent from the hash")
        rep.notes["nodes"] = nodes
        rep.notes["candidate_mismatches"] = cand_off
        rep.notes["heavy_missing"] = missing_heavy
        return rep

    def stats(self) -> dict:
        return {"strings": self.total, "distinct": self.distinct,
                "touch_max": self.touch_max, "heavy_hits": self.heavy_hits,
                "light_queries": self.light_queries, "space_units": self.space_usage()}

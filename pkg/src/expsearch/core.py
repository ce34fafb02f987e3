"""Ordered set of word-sized integer keys on a worst-case exponential search tree.

Keys are ``W``-bit unsigned integers.  Every stored key is a leaf in a global
sorted doubly linked list; internal nodes at height ``i`` hold between
``n_i/4`` and ``n_i`` leaves and route searches with a static structure over
their children's splitters.  ``search`` returns the element with the largest
key not above the query, ``lookup`` only exact matches.  Equal keys are kept
in insertion order, the latest one rightmost.
"""

from __future__ import annotations

import gc
import math
import struct
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, Decimal, localcontext

from .balance import (DELTA, JOIN, M_FACTOR, MU, S_FACTOR, SCALE, Node, TreeEngine)
from .finger import FingerScheduler
from .sstruct import VARIANTS

__all__ = [
    "Config", "ConfigError", "ContractError", "DomainError", "LevelTable", "Element",
    "OrderedSet", "AuditReport", "level_capacity", "orderable_bits", "new",
]

TAIL_SPLITTER = 1 << 70
NODE_UNITS = 12
LEAF_UNITS = 6


class ConfigError(ValueError):
    """Invalid configuration."""


class ContractError(RuntimeError):
    """A caller broke an operation's precondition (stale handle, order)."""


class DomainError(ValueError):
    """Argument outside the operation's domain."""


@dataclass(frozen=True)
class Config:
    k: int = 2
    alpha: float | None = None
    word_bits: int = 64
    universe_bound: int | None = None
    finger_mode: bool = False
    local_steps_per_update: int = 1000
    sstruct_variant: str = "sorted"
    counter_q: int = 2
    touch_ceiling: int = 64

    def validate(self) -> None:
        if not isinstance(self.k, int) or self.k < 2:
            raise ConfigError(f"recursion exponent k must be an integer >= 2, got {self.k!r}")
        if not 1 <= self.word_bits <= 64:
            raise ConfigError("word_bits must lie in [1, 64]")
        if self.universe_bound is not None and not 0 < self.universe_bound <= 1 << self.word_bits:
            raise ConfigError("universe_bound must lie in (0, 2**word_bits]")
        if self.alpha is not None and self.alpha <= 1:
            raise ConfigError("alpha must exceed 1")
        if self.sstruct_variant not in VARIANTS:
            raise ConfigError(f"unknown sstruct variant {self.sstruct_variant!r}")
        if self.finger_mode and self.local_steps_per_update < 840:
            raise ConfigError("finger mode needs at least 840 local steps per update")
        if self.counter_q < 1:
            raise ConfigError("counter_q must be positive")
        if self.touch_ceiling < 1:
            raise ConfigError("touch_ceiling must be positive")

    @property
    def universe(self) -> int:
        return self.universe_bound if self.universe_bound is not None else 1 << self.word_bits


class LevelTable:
    """Capacities ``n_0 = 1, n_1, n_2, ...`` extended on demand."""

    __slots__ = ("k", "alpha", "finger", "capacities", "_exact")

    def __init__(self, k: int = 2, alpha: float | None = None, finger: bool = False,
                 levels: int = 5) -> None:
        self.k = k
        self.finger = finger
        # k=2 with the default base gives n_i = 84**(2**(i-1)) exactly
        self._exact = k == 2 and alpha is None
        if alpha is None:
            alpha = math.sqrt(84) if k == 2 else max(84 ** ((k - 1) / k),
                                                     18 ** ((k - 1) ** 2 / k))
        self.alpha = alpha
        self.capacities = [1]
        while len(self.capacities) <= levels:
            self.extend()

    def _raw(self, i: int) -> int:
        if self._exact:
            return 84 ** (1 << (i - 1))
        with localcontext() as ctx:
            ctx.prec = 80
            e = (Decimal(self.k) / Decimal(self.k - 1)) ** i
            v = (e * Decimal(self.alpha).ln()).exp()
            r = v.to_integral_value()
            if abs(v - r) <= v * Decimal("1e-40"):
                return int(r)
            return int(v.to_integral_value(rounding=ROUND_CEILING))

    def extend(self) -> None:
        caps = self.capacities
        i = len(caps)
        n = self._raw(i)
        prev = caps[-1]
        if i == 1:
            n = max(n, 84)
        else:
            n = max(n, 18 * prev + (1 if self.finger else 0))
            if self.finger and n >= prev * prev:
                n = prev * prev - 1
        caps.append(n)

    def __getitem__(self, i: int) -> int:
        while i >= len(self.capacities):
            self.extend()
        return self.capacities[i]

    def __len__(self) -> int:
        return len(self.capacities)


def level_capacity(table: LevelTable, i: int) -> int:
    if i < 0:
        raise DomainError("level must be non-negative")
    return table[i]


class Element:
    """A stored key; doubles as the leaf of the tree."""

    __slots__ = ("key", "payload", "splitter", "parent", "left", "right", "alive", "mark",
                 "stamp")
    level = 0
    weight = 1
    approx = 1
    ticket = None
    tied_to = None
    forward = None
    split_peer = None
    router = None

    def __init__(self, key, payload=None, splitter: int = 0) -> None:
        self.key = key
        self.payload = payload
        self.splitter = splitter
        self.parent = None
        self.left = self.right = None
        self.alive = True
        self.mark = False
        self.stamp = 0

    def __repr__(self) -> str:
        return f"Element({self.key!r})" if self.alive else f"Element({self.key!r}, deleted)"


@dataclass
class AuditReport:
    violations: list[str] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, msg: str) -> None:
        if len(self.violations) < 50:
            self.violations.append(msg)
        self.notes["violation_count"] = self.notes.get("violation_count", 0) + 1


class OrderedSet(FingerScheduler, TreeEngine):
    """Dynamic ordered set over ``W``-bit integer keys."""

    def __init__(self, config: Config | None = None, **overrides) -> None:
        if config is None:
            config = Config(**overrides)
        elif overrides:
            config = Config(**{**config.__dict__, **overrides})
        config.validate()
        self.config = config
        self.levels = LevelTable(config.k, config.alpha, config.finger_mode)
        self.caps = self.levels.capacities
        self.width = config.word_bits
        self.universe = config.universe
        self.variant = config.sstruct_variant
        self.finger_mode = config.finger_mode
        self.head = Element(None, splitter=-1)
        self.tail = Element(None, splitter=TAIL_SPLITTER)
        self.head.right = self.tail
        self.tail.left = self.head
        self.epoch = 0
        self._engine_init()
        self._finger_init()

    def _extend_caps(self) -> None:
        self.levels.extend()

    # -- size and shape ------------------------------------------------------

    def __len__(self) -> int:
        return self.root.weight

    @property
    def height(self) -> int:
        return self.root.level

    def __iter__(self):
        x = self.head.right
        tail = self.tail
        while x is not tail:
            yield x
            x = x.right

    def keys(self) -> list:
        out = []
        x = self.head.right
        tail = self.tail
        while x is not tail:
            out.append(x.key)
            x = x.right
        return out

    def __contains__(self, k) -> bool:
        return self.lookup(k) is not None

    def _check_key(self, k) -> None:
        if not isinstance(k, int) or not 0 <= k < self.universe:
            raise DomainError(f"key {k!r} outside [0, {self.universe})")

    def _check_live(self, e: Element) -> None:
        if not isinstance(e, Element) or not e.alive or e is self.head or e is self.tail:
            raise ContractError("stale or foreign element handle")

    # -- queries -------------------------------------------------------------

    def search_trace(self, y: int):
        """``(element or None, vertical node visits, lateral moves)``."""
        root = self.root
        if root.first is None:
            return None, 1, 0
        leaf, vert, lat = self._descend(root, y)
        st = self.stats
        st.searches += 1
        st.lateral_moves += lat
        if lat > st.max_lateral:
            st.max_lateral = lat
        if vert > st.max_vertical:
            st.max_vertical = vert
        if leaf.key > y:
            leaf = leaf.left
            if leaf is self.head:
                leaf = None
        return leaf, vert, lat

    def search(self, y: int) -> Element | None:
        """Element with the largest key ``<= y`` (latest among equals)."""
        self._check_key(y)
        return self.search_trace(y)[0]

    def lookup(self, k: int) -> Element | None:
        e = self.search(k)
        return e if e is not None and e.key == k else None

    def minimum(self) -> Element | None:
        x = self.head.right
        return None if x is self.tail else x

    def maximum(self) -> Element | None:
        x = self.tail.left
        return None if x is self.head else x

    def predecessor(self, e: Element) -> Element | None:
        self._check_live(e)
        x = e.left
        return None if x is self.head else x

    def successor(self, e: Element) -> Element | None:
        self._check_live(e)
        x = e.right
        return None if x is self.tail else x

    # -- updates -------------------------------------------------------------

    def insert(self, k: int, payload=None) -> Element:
        self._check_key(k)
        e = self.search_trace(k)[0]
        return self.finger_insert(e, k, payload)

    def delete_key(self, k: int) -> bool:
        e = self.lookup(k)
        if e is None:
            return False
        self.finger_delete(e)
        return True

    def finger_insert(self, after: Element | None, k: int, payload=None) -> Element:
        """Insert ``k`` right after ``after`` (``None`` means at the front)."""
        self._check_key(k)
        v = self.head if after is None else after
        if v is not self.head:
            self._check_live(v)
            if v.key > k:
                raise ContractError(f"key {k} below its predecessor {v.key}")
        v2 = v.right
        if v2 is not self.tail and k > v2.key:
            raise ContractError(f"key {k} above its successor {v2.key}")
        u = Element(k, payload)
        self.epoch += 1
        root = self.root
        if root.first is None:
            P = root
            u.splitter = 0
            P.first = P.last = u
            hint = None
        else:
            s = v2.splitter
            if k < s:
                P = self.parent(v)
                u.splitter = k
                hint = ("after", u, v)
                if P.last is v:
                    P.last = u
            else:
                P = self.parent(v2)
                u.splitter = s
                v2.splitter = v2.key
                hint = ("before", u, v2)
                if P.first is v2:
                    P.first = u
        u.parent = P
        u.left = v
        u.right = v2
        v.right = u
        v2.left = u
        if self.finger_mode:
            self._finger_changed(u, P, 1, hint)
        else:
            self._leaf_changed(P, 1, hint)
        return u

    def finger_delete(self, e: Element) -> None:
        self._check_live(e)
        self.epoch += 1
        P = self.parent(e)
        was_last = P.last is e
        if P.first is e:
            if was_last:
                P.first = P.last = None
            else:
                nx = e.right
                nx.splitter = e.splitter
                P.first = nx
        elif was_last:
            P.last = e.left
        t = P.ticket
        if t is not None and t.cur is e:
            t.cur = None if was_last else e.right
        l, r = e.left, e.right
        l.right = r
        r.left = l
        e.alive = False
        e.parent = None
        if self.finger_mode:
            self._finger_changed(e, P, -1, ("drop", e, e))
        else:
            self._leaf_changed(P, -1, ("drop", e, e))

    # -- bulk loading --------------------------------------------------------

    @classmethod
    def from_sorted(cls, keys, config: Config | None = None, payloads=None,
                    **overrides) -> "OrderedSet":
        """Build a quiescent tree over sorted ``keys`` with neutral node weights."""
        # the build allocates millions of linked objects; collecting midway
        # only re-traverses them
        paused = gc.isenabled()
        gc.disable()
        try:
            return cls._from_sorted(keys, config, payloads, **overrides)
        finally:
            if paused:
                gc.enable()

    @classmethod
    def _from_sorted(cls, keys, config, payloads, **overrides) -> "OrderedSet":
        s = cls(config, **overrides)
        keys = list(keys)
        for i in range(1, len(keys)):
            if keys[i] < keys[i - 1]:
                raise DomainError("from_sorted needs keys in non-decreasing order")
        if not keys:
            return s
        for k in (keys[0], keys[-1]):
            s._check_key(k)
        prev = s.head
        level_nodes: list = []
        for i, k in enumerate(keys):
            e = Element(k, None if payloads is None else payloads[i], k)
            e.left = prev
            prev.right = e
            prev = e
            level_nodes.append(e)
        prev.right = s.tail
        s.tail.left = prev
        level_nodes[0].splitter = 0
        level = 0
        while True:
            n_up = s._cap(level + 1)
            target = max(1, (41 * n_up) // SCALE)
            total = len(level_nodes) if level == 0 else sum(x.weight for x in level_nodes)
            if total * SCALE < S_FACTOR * n_up:
                break
            groups = max(2, round(total / target))
            parents = []
            per = len(level_nodes) / groups
            for g in range(groups):
                lo, hi = round(g * per), round((g + 1) * per)
                chunk = level_nodes[lo:hi]
                parents.append(s._make_parent(level + 1, chunk))
            s._link_level(parents)
            if level == 0:
                level1 = parents
            level_nodes = parents
            level += 1
        root = s._make_parent(level + 1, level_nodes)
        root.parent = None
        root.left = root.right = None
        if s.finger_mode:
            s._register_level1(level1 if level else [root])
        s.root = root
        s.epoch += 1
        return s

    def _make_parent(self, level: int, chunk: list) -> Node:
        node = self._new_node(level, chunk[0].splitter)
        node.first = chunk[0]
        node.last = chunk[-1]
        w = 0
        for c in chunk:
            c.parent = node
            w += c.weight
        node.weight = w
        node.approx = w
        if level >= 2:
            self._reset_cut(node)
            self._advance_cut(node, len(chunk) + 2)
        self._rebuild_now(node)
        return node

    @staticmethod
    def _link_level(nodes: list) -> None:
        for a, b in zip(nodes, nodes[1:]):
            a.right = b
            b.left = a

    # -- space and audit -----------------------------------------------------

    def _levels_top_down(self):
        levels = []
        row = [self.root]
        while row and row[0].level >= 1:
            levels.append(row)
            if row[0].level == 1:
                break
            nxt = []
            for u in row:
                x = u.first
                while x is not None:
                    nxt.append(x)
                    if x is u.last:
                        break
                    x = x.right
            row = nxt
        return levels

    def space_usage(self) -> int:
        """Abstract space units: node records, leaf records and router contents."""
        units = NODE_UNITS + 2 * LEAF_UNITS
        units += LEAF_UNITS * len(self)
        for row in self._levels_top_down():
            for u in row:
                units += NODE_UNITS
                if u.router is not None:
                    units += u.router.space_units()
        return units

    def required_steps(self, level: int) -> int:
        """Steps every completed level-``level`` ticket must have received."""
        return self._ticket_budget(level)

    def audit(self, deep: bool = True) -> AuditReport:
        """Check the tree, the leaf list and the scheduler state."""
        rep = AuditReport()
        caps = self.caps
        head, tail = self.head, self.tail
        root = self.root
        # leaf list
        count = 0
        prev = head
        x = head.right
        prev_key = None
        prev_split = -1
        while x is not tail:
            if x.left is not prev:
                rep.add(f"leaf list back link broken at {x.key}")
            if not x.alive:
                rep.add(f"dead leaf {x.key} still linked")
            if prev_key is not None and x.key < prev_key:
                rep.add(f"leaf keys out of order: {prev_key} > {x.key}")
            if x.splitter > x.key:
                rep.add(f"leaf {x.key} splitter {x.splitter} above key")
            if prev_key is not None and prev_key > x.splitter:
                rep.add(f"leaf {x.key} splitter {x.splitter} below predecessor key")
            if x.splitter < prev_split:
                rep.add("leaf splitters decrease")
            prev_split = x.splitter
            prev_key = x.key
            prev = x
            x = x.right
            count += 1
        if tail.left is not prev:
            rep.add("tail back link broken")
        if count and head.right.splitter != 0:
            rep.add("first leaf splitter is not 0")
        if root.weight != count:
            rep.add(f"root weight {root.weight} != {count} leaves")
        if root.parent is not None:
            rep.add("root has a parent")
        if count == 0 and root.level != 1:
            rep.add("empty tree above height 1")
        rep.notes["size"] = count
        rep.notes["height"] = root.level
        if not deep:
            return rep
        levels = self._levels_top_down()
        h = root.level
        leaf_total = 0
        window_violations = 0
        tickets = {}
        for row in levels:
            prev_node = None
            for u in row:
                lvl = u.level
                n = caps[lvl]
                if not u.alive:
                    rep.add(f"dead node reachable {u!r}")
                if prev_node is not None:
                    if prev_node.right is not u or u.left is not prev_node:
                        rep.add(f"level links broken at {u!r}")
                    if u.splitter < prev_node.splitter:
                        rep.add(f"splitters decrease at {u!r}")
                prev_node = u
                # children
                run = []
                w = 0
                pre = None
                cut = u.cut
                c = u.first
                if c is None:
                    if u is not root or lvl != 1:
                        rep.add(f"empty non-root node {u!r}")
                else:
                    if c.splitter != u.splitter:
                        rep.add(f"{u!r} splitter differs from its first child")
                    while True:
                        run.append(c)
                        if c is cut:
                            pre = w
                        w += c.weight
                        if c.level != lvl - 1:
                            rep.add(f"level mismatch below {u!r}")
                        cp = c.parent
                        if cp is not u or u.forward is not None or u.split_peer is not None:
                            if self.parent(c) is not u:
                                rep.add(f"parent of {c!r} resolves to {self.parent(c)!r}, expected {u!r}")
                        if c is u.last:
                            break
                        c = c.right
                        if c is None or c is tail:
                            rep.add(f"children run of {u!r} does not reach last")
                            break
                kids = len(run)
                if w != u.weight:
                    rep.add(f"{u!r} weight {u.weight} != children sum {w}")
                if lvl >= 2 and u.first is not None:
                    if pre is None:
                        rep.add(f"{u!r} cut child is not a child")
                    elif pre != u.prefix:
                        rep.add(f"{u!r} prefix {u.prefix} != {pre}")
                if u is root:
                    if u.weight > n:
                        rep.add(f"root weight {u.weight} above n_{lvl}={n}")
                    if lvl > 1 and kids < 2 and not (u.first is not None and u.first.ticket):
                        rep.add(f"root at height {lvl} has {kids} children")
                else:
                    lo = -(-n // 4)
                    if not lo <= u.weight <= n:
                        window_violations += 1
                        rep.add(f"{u!r} outside [{lo}, {n}]")
                    if lvl >= 1 and kids < 4:
                        rep.add(f"{u!r} has only {kids} children")
                if lvl == 1:
                    leaf_total += u.weight
                    self._audit_router_exact(u, run, rep)
                t = u.ticket
                if t is not None:
                    tickets[t.uid] = t
                    if t.a.ticket is not t:
                        rep.add(f"ticket {t!r} not owned by its first participant")
                if u.tied_to is not None:
                    t = u.tied_to
                    if u not in t.ties:
                        rep.add(f"{u!r} tied to a ticket that does not list it")
                    if t.a.ticket is not t:
                        rep.add(f"{u!r} tied to a finished ticket")
                    elif not any(u.left is p or u.right is p for p in t.participants()):
                        rep.add(f"{u!r} tied to a non-adjacent ticket")
                if u.split_peer is not None and (u.ticket is None or u.ticket.kind == JOIN):
                    rep.add(f"{u!r} has a stale split peer")
        rep.notes["window_violations"] = window_violations
        if levels and root.first is not None and leaf_total != count:
            rep.add(f"level-1 weights sum to {leaf_total}, expected {count}")
        for t in tickets.values():
            self._audit_ticket(t, rep)
        st = self.stats
        for lvl, mn in st.min_steps.items():
            need = self.required_steps(lvl)
            if mn < need:
                rep.add(f"a level-{lvl} ticket completed after {mn} < {need} steps")
        if st.budget_shortfalls:
            rep.add(f"{st.budget_shortfalls} tickets completed under budget")
        if st.zero_neighbor:
            rep.add(f"{st.zero_neighbor} small nodes had no neighbour")
        if st.bad_ties:
            rep.add(f"{st.bad_ties} ties lost adjacency")
        if st.multi_step_levels:
            rep.add(f"{st.multi_step_levels} updates stepped two tickets on one level")
        if self.finger_mode:
            self._audit_finger(levels, rep)
        return rep

    def _audit_router_exact(self, u: Node, run: list, rep: AuditReport) -> None:
        r = u.router
        if r is None:
            rep.add(f"{u!r} has no router")
            return
        if r.handles != run or r.keys != [c.splitter for c in run]:
            rep.add(f"level-1 router of {u!r} is stale")

    def _audit_ticket(self, t, rep: AuditReport) -> None:
        if self.finger_mode:
            return
        n = self.caps[t.level]
        if t.kind == JOIN:
            w = t.a.weight
            if not (JOIN_LOW * n <= SCALE * w <= (S_FACTOR + M_FACTOR + 1) * n):
                rep.add(f"join weight {w} outside [44b, 83b] at level {t.level}")
        else:
            for p in t.participants():
                w2 = 2 * SCALE * p.weight
                if not ((S_FACTOR - 1 - DELTA) * n <= w2 <= (S_FACTOR + M_FACTOR + 2 + DELTA) * n):
                    rep.add(f"split half {p.weight} outside [25b, 45.5b] at level {t.level}")


JOIN_LOW = 2 * MU + 2  # smallest weight of a join in progress, in units of b


def new(config: Config | None = None, **overrides) -> OrderedSet:
    return OrderedSet(config, **overrides)


_NEG_ZERO = struct.unpack(">Q", struct.pack(">d", -0.0))[0]


def orderable_bits(f: float) -> int:
    """Order-preserving map from a 64-bit float to an unsigned 64-bit key.

    ``-0.0`` maps to the same key as ``0.0``.
    """
    f = float(f)
    if math.isnan(f):
        raise DomainError("NaN has no position in the order")
    if f == 0.0:
        f = 0.0
    (bits,) = struct.unpack(">Q", struct.pack(">d", f))
    if bits >> 63:
        return (~bits) & 0xFFFF_FFFF_FFFF_FFFF
    return bits | (1 << 63)

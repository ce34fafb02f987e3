"""Worst-case rebalancing for the multiway tree, plus a standalone weight game.

Every internal node at height ``i`` has a latency ``b_i = n_i / 84``.  The
protocol keeps free nodes within ``[21 b_i, 58 b_i]``: a free node reaching
``58 b`` splits, a free node falling to ``24 b`` joins a free sibling or ties
itself to a busy one.  Joins and splits happen structurally at once; their
cleanup (child parent links, cut cursor, router rebuilds) is a *ticket* that
must collect ``ceil(n_i/84)`` local steps before it completes.

Children of a node are a contiguous run of the level-wide doubly linked list,
so joins and splits only rewire ``first``/``last`` and a few links.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import asdict, dataclass, field

from .sstruct import build as build_static

__all__ = [
    "MU", "DELTA", "M_FACTOR", "S_FACTOR", "SCALE",
    "Node", "Ticket", "Router", "TreeEngine", "EngineStats",
    "GameConfig", "GameStats", "game_simulate", "STRATEGIES",
    "SchedulerError",
]

MU = 21
DELTA = 7
M_FACTOR = MU + 3                # join/tie threshold, in units of b
S_FACTOR = 2 * MU + DELTA + 9    # split threshold, in units of b
SCALE = 84                       # n_i = 84 b_i

REDIRECTS_PER_STEP = 84
CURSOR_MOVES_PER_STEP = 8
CURSOR_MOVES_PER_UPDATE = 4

JOIN = "join"
SPLIT = "split"


class SchedulerError(RuntimeError):
    """Raised when the scheduler is asked to do something its rules forbid."""


class Router:
    """Immutable snapshot of a node's children, searchable by splitter."""

    __slots__ = ("handles", "keys", "index", "last_of", "time")

    def __init__(self, handles: list, keys: list[int], time: int, variant: str = "sorted",
                 width: int = 64) -> None:
        self.handles = handles
        self.keys = keys
        self.time = time
        if variant == "sorted":
            self.index = None
            self.last_of = None
        else:
            uniq: list[int] = []
            last_of: list[int] = []
            for pos, k in enumerate(keys):
                if uniq and uniq[-1] == k:
                    last_of[-1] = pos
                else:
                    uniq.append(k)
                    last_of.append(pos)
            self.index = build_static(uniq, variant, width)
            self.last_of = last_of

    def route(self, y: int):
        if self.index is None:
            i = bisect_right(self.keys, y) - 1
        else:
            j = self.index.query(y)
            i = self.last_of[j] if j >= 0 else -1
        return self.handles[i] if i >= 0 else None

    def probes(self, y: int) -> int:
        if self.index is None:
            return max(1, len(self.keys).bit_length())
        return self.index.query_probes(y)[1]

    def space_units(self) -> int:
        units = 2 * len(self.handles) + 1
        if self.index is not None:
            units += self.index.space_units() + len(self.last_of)
        return units


class Node:
    """Internal tree node at height ``level >= 1``."""

    __slots__ = (
        "level", "first", "last", "splitter", "weight", "approx", "parent",
        "forward", "dead_at", "alive", "split_peer", "left", "right", "ticket",
        "tied_to", "cut", "prefix", "router", "dirty", "rebuild", "mark", "uid",
    )

    def __init__(self, level: int, splitter: int, uid: int) -> None:
        self.level = level
        self.splitter = splitter
        self.uid = uid
        self.first = self.last = None
        self.weight = 0
        self.approx = 0
        self.parent = None
        self.forward = None
        self.dead_at = -1
        self.alive = True
        self.split_peer = None
        self.left = self.right = None
        self.ticket = None
        self.tied_to = None
        self.cut = None
        self.prefix = 0
        self.router = None
        self.dirty = True
        self.rebuild = None
        self.mark = False

    def __repr__(self) -> str:
        state = "dead" if not self.alive else (self.ticket.kind if self.ticket else
                                               ("tied" if self.tied_to else "free"))
        return f"Node(L{self.level}#{self.uid} s={self.splitter} w={self.weight} {state})"


class Ticket:
    """An in-flight join or split cleanup."""

    __slots__ = ("kind", "level", "a", "b", "steps", "budget", "ties", "cur", "target",
                 "uid", "start_weight")

    def __init__(self, kind: str, level: int, a: Node, b: Node | None, budget: int,
                 uid: int) -> None:
        self.kind = kind
        self.level = level
        self.a = a
        self.b = b
        self.steps = 0
        self.budget = budget
        self.ties: list[Node] = []
        self.cur = None
        self.target = None
        self.uid = uid
        self.start_weight = 0

    def participants(self) -> tuple:
        return (self.a,) if self.b is None else (self.a, self.b)

    def __repr__(self) -> str:
        return f"Ticket({self.kind} L{self.level} {self.steps}/{self.budget})"


@dataclass
class EngineStats:
    joins: dict = field(default_factory=dict)
    splits: dict = field(default_factory=dict)
    completed: dict = field(default_factory=dict)
    min_steps: dict = field(default_factory=dict)
    budget_shortfalls: int = 0
    redirect_overruns: int = 0
    rebuild_overruns: int = 0
    cut_fallbacks: int = 0
    bad_cuts: int = 0
    zero_neighbor: int = 0
    bad_ties: int = 0
    root_grows: int = 0
    root_shrinks: int = 0
    peer_index_checks: int = 0
    multi_step_levels: int = 0
    max_lateral: int = 0
    lateral_moves: int = 0
    searches: int = 0
    max_vertical: int = 0

    def as_dict(self) -> dict:
        d = asdict(self)
        for key in ("joins", "splits", "completed", "min_steps"):
            d[key] = {str(k): v for k, v in sorted(d[key].items())}
        return d


def _live(x):
    while x.forward is not None:
        x = x.forward
    return x


def _group(x):
    t = x.ticket
    return t if t is not None else x.tied_to


class TreeEngine:
    """Tree mechanics shared by the ordered-set front end.

    Subclasses provide ``caps`` (level capacities), ``head``/``tail`` leaf
    sentinels, ``root``, ``variant``, ``width`` and ``finger_mode``.
    """

    caps: list[int]
    finger_mode: bool = False

    def _engine_init(self) -> None:
        self.clock = 0
        self._uid = 0
        self.stats = EngineStats()
        self.root = self._new_node(1, 0)
        self.root.dirty = False
        self.root.router = Router([], [], 0, "sorted")
        self._steps_this_update: dict | None = None

    # -- small helpers -----------------------------------------------------

    def _new_node(self, level: int, splitter: int) -> Node:
        self._uid += 1
        return Node(level, splitter, self._uid)

    def budget(self, level: int) -> int:
        n = self.caps[level]
        return -(-n // SCALE)

    def _sched_weight(self, x: Node) -> int:
        return x.weight

    def _cap(self, level: int) -> int:
        caps = self.caps
        while level >= len(caps):
            self._extend_caps()
        return caps[level]

    def _extend_caps(self) -> None:  # pragma: no cover - overridden
        raise SchedulerError("level table exhausted")

    # -- parent computation ------------------------------------------------

    def parent(self, x):
        """Current parent of ``x``: one forward hop, then split-peer resolution."""
        p = x.parent
        if p is None:
            return None
        f = p.forward
        if f is not None:
            p = f
        peer = p.split_peer
        if peer is not None:
            xs = x.splitter
            ps = peer.splitter
            if xs > ps:
                return peer
            if xs == ps:
                self.stats.peer_index_checks += 1
                y = peer.first
                while y is not None and y.splitter == ps:
                    if y is x:
                        return peer
                    if y is peer.last:
                        break
                    y = y.right
        return p

    def path_to_root(self, x) -> list:
        path = [x]
        parent = self.parent
        p = parent(x)
        while p is not None:
            path.append(p)
            p = parent(p)
        return path

    # -- cut cursor ---------------------------------------------------------

    def _before(self, x, c) -> bool:
        """Is child ``x`` strictly before child ``c`` of the same parent."""
        if x is c or c is None:
            return False
        xs, cs = x.splitter, c.splitter
        if xs != cs:
            return xs < cs
        y = c.left
        while y is not None and y.splitter == cs:
            if y is x:
                return True
            y = y.left
        return False

    def _reset_cut(self, u: Node) -> None:
        last = u.last
        u.cut = last
        u.prefix = u.weight - last.weight

    @staticmethod
    def _cut_score(u: Node, c, pre: int) -> tuple[int, int]:
        bad = 1 if (c is u.first or c is None) else 0
        if not bad:
            g = _group(c)
            if g is not None and g is _group(c.left):
                bad = 1
        return bad, abs(u.weight - 2 * pre)

    def _advance_cut(self, u: Node, moves: int) -> None:
        c = u.cut
        if c is None:
            return
        if c.forward is not None:
            self._reset_cut(u)
            c = u.cut
        pre = u.prefix
        score = self._cut_score
        cur = score(u, c, pre)
        first, last = u.first, u.last
        for _ in range(moves):
            best = None
            if c is not first:
                lc = c.left
                lpre = pre - lc.weight
                s = score(u, lc, lpre)
                if s < cur:
                    best = (lc, lpre, s)
            if best is None and c is not last:
                rpre = pre + c.weight
                rc = c.right
                s = score(u, rc, rpre)
                if s < cur:
                    best = (rc, rpre, s)
            if best is None:
                break
            c, pre, cur = best
        u.cut = c
        u.prefix = pre

    def _scan_cut(self, u: Node):
        best = None
        pre = 0
        c = u.first
        while True:
            if c is not u.first:
                s = self._cut_score(u, c, pre)
                if best is None or s < best[0]:
                    best = (s, c, pre)
            if c is u.last:
                break
            pre += c.weight
            c = c.right
        return best

    def _choose_cut(self, u: Node):
        n = self.caps[u.level]
        c, pre = u.cut, u.prefix
        if c is not None:
            bad, diff = self._cut_score(u, c, pre)
            if not bad and SCALE * diff <= DELTA * n:
                return c, pre
        self.stats.cut_fallbacks += 1
        found = self._scan_cut(u)
        if found is None:
            raise SchedulerError(f"no cut position in {u!r}")
        (bad, diff), c, pre = found
        if bad or SCALE * diff > DELTA * n:
            self.stats.bad_cuts += 1
            if bad:
                raise SchedulerError(f"no legal cut position in {u!r}")
        return c, pre

    # -- routers -----------------------------------------------------------

    def _router_chunk(self, level: int) -> int:
        lower = self.caps[level - 1]
        slices = max(1, -(-lower // 160))
        maxdeg = 4 * self._cap(level) // lower + 8
        return -(-maxdeg // slices)

    def _patch_router(self, u: Node, hint) -> bool:
        """Copy-and-patch a sorted level-1 router for one leaf change.

        ``hint`` is ``(kind, leaf, anchor)``: ``"after"`` puts ``leaf`` right
        after ``anchor``, ``"before"`` right before it, ``"drop"`` removes
        ``anchor``.  Returns ``False`` when a full rebuild is needed.
        """
        r = u.router
        if r is None or r.index is not None or u.dirty or u.rebuild is not None:
            return False
        kind, leaf, anchor = hint
        try:
            i = r.handles.index(anchor)
        except ValueError:
            return False
        handles = r.handles[:]
        keys = r.keys[:]
        if kind == "after":
            handles.insert(i + 1, leaf)
            keys.insert(i + 1, leaf.splitter)
        elif kind == "before":
            keys[i] = anchor.splitter
            handles.insert(i, leaf)
            keys.insert(i, leaf.splitter)
        else:
            del handles[i]
            del keys[i]
            if i < len(keys):
                keys[i] = handles[i].splitter
        self.clock += 1
        u.router = Router(handles, keys, self.clock, "sorted")
        return True

    def _rebuild_now(self, u: Node) -> None:
        handles = []
        x = u.first
        if x is not None:
            last = u.last
            while True:
                handles.append(x)
                if x is last:
                    break
                x = x.right
        self.clock += 1
        u.router = Router(handles, [h.splitter for h in handles], self.clock,
                          self.variant, self.width)
        u.rebuild = None
        u.dirty = False

    def _rebuild_step(self, u: Node, slices: int = 1) -> None:
        st = u.rebuild
        if st is None:
            if not u.dirty:
                return
            u.dirty = False
            self.clock += 1
            st = u.rebuild = [None, [], self.clock]
        quota = self._router_chunk(u.level) * slices
        x = st[0]
        handles = st[1]
        last = u.last
        while quota > 0:
            if x is None:
                nx = u.first
            else:
                x = _live(x)
                if x is last:
                    break
                nx = x.right
            handles.append(nx)
            x = nx
            quota -= 1
            if x is last:
                break
        st[0] = x
        if x is last:
            u.router = Router(handles, [h.splitter for h in handles], st[2],
                              self.variant, self.width)
            u.rebuild = None

    def _finish_rebuild(self, u: Node) -> bool:
        if u.rebuild is None and not u.dirty:
            return False
        if u.level == 1:
            self._rebuild_now(u)
        else:
            while u.rebuild is not None or u.dirty:
                self._rebuild_step(u, 1 << 20)
        return True

    # -- ticket lifecycle --------------------------------------------------

    def _tie(self, x: Node, t: Ticket) -> None:
        x.tied_to = t
        t.ties.append(x)

    def _untie(self, x: Node) -> None:
        t = x.tied_to
        if t is not None:
            t.ties.remove(x)
            x.tied_to = None

    def _new_ticket(self, kind: str, level: int, a: Node, b: Node | None) -> Ticket:
        self._uid += 1
        t = Ticket(kind, level, a, b, self._ticket_budget(level), self._uid)
        a.ticket = t
        if b is not None:
            b.ticket = t
        book = self.stats.joins if kind == JOIN else self.stats.splits
        book[level] = book.get(level, 0) + 1
        return t

    def _ticket_budget(self, level: int) -> int:
        return self.budget(level)

    def _begin_join(self, a: Node, b: Node, P: Node) -> Ticket:
        if a.right is not b or a.ticket is not None or b.ticket is not None:
            raise SchedulerError(f"illegal join {a!r} {b!r}")
        self._untie(a)
        self._untie(b)
        self.clock += 1
        level = a.level
        bfirst = b.first
        a.last = b.last
        a.weight += b.weight
        a.approx += b.approx
        nr = b.right
        a.right = nr
        if nr is not None:
            nr.left = a
        b.forward = a
        b.dead_at = self.clock
        b.alive = False
        if P.last is b:
            P.last = a
        if P.cut is b:
            if P.last is not a:
                P.cut = nr
                P.prefix += b.weight
            else:
                P.cut = a
                P.prefix -= a.weight - b.weight
        P.dirty = True
        t = self._new_ticket(JOIN, level, a, None)
        t.cur = bfirst
        t.target = a
        t.start_weight = a.weight
        a.rebuild = None
        a.dirty = True
        if level == 1:
            self._rebuild_now(a)
        else:
            self._reset_cut(a)
        self._on_join(a, b)
        return t

    def _begin_split(self, u: Node, P: Node | None) -> Ticket:
        if u.ticket is not None:
            raise SchedulerError(f"split of busy node {u!r}")
        self._untie(u)
        level = u.level
        if level == 1:
            half = u.weight // 2
            c = u.first
            for _ in range(half):
                c = c.right
            pre = half
        else:
            c, pre = self._choose_cut(u)
        self.clock += 1
        v = self._new_node(level, c.splitter)
        v.first = c
        v.last = u.last
        u.last = c.left
        wv = u.weight - pre
        v.weight = wv
        u.weight = pre
        v.approx = wv
        u.approx -= wv
        nr = u.right
        v.left = u
        v.right = nr
        if nr is not None:
            nr.left = v
        u.right = v
        v.parent = u.parent
        u.split_peer = v
        t = self._new_ticket(SPLIT, level, u, v)
        t.cur = c
        t.target = v
        t.start_weight = u.weight + v.weight
        u.rebuild = None
        u.dirty = True
        v.router = u.router
        if level == 1:
            self._rebuild_now(u)
            self._rebuild_now(v)
        else:
            self._reset_cut(u)
            self._reset_cut(v)
        if P is None:
            R = self._new_node(level + 1, u.splitter)
            self._cap(level + 1)
            R.first = u
            R.last = v
            R.weight = u.weight + v.weight
            R.approx = u.approx + v.approx
            R.cut = v
            R.prefix = u.weight
            R.router = None
            R.dirty = True
            u.parent = v.parent = R
            self.root = R
            self.stats.root_grows += 1
        else:
            if P.last is u:
                P.last = v
            P.dirty = True
        self._on_split(u, v)
        return t

    def _on_join(self, a: Node, b: Node) -> None:
        """Hook for finger-mode bookkeeping."""

    def _on_split(self, u: Node, v: Node) -> None:
        """Hook for finger-mode bookkeeping."""

    def _redirect(self, t: Ticket, quota: int) -> None:
        target = t.target
        x = t.cur
        while quota > 0 and x is not None:
            if x.forward is not None:
                x = _live(x)
            x.parent = target
            quota -= 1
            x = None if x is target.last else x.right
        t.cur = x

    def _step(self, t: Ticket, n: int = 1) -> None:
        if t.a.ticket is not t:
            return
        t.steps += n
        self._redirect(t, REDIRECTS_PER_STEP * n)
        parts = t.participants()
        if t.level >= 2:
            moves = min(CURSOR_MOVES_PER_STEP * n, 4096)
            for p in parts:
                self._advance_cut(p, moves)
        for p in parts:
            if p.rebuild is not None or p.dirty:
                if p.level == 1:
                    self._rebuild_now(p)
                else:
                    self._rebuild_step(p, n)
        P = self.parent(t.a)
        if P is not None and (P.rebuild is not None or P.dirty):
            self._rebuild_step(P, n)
        if t.steps >= t.budget:
            self._complete(t)

    def _complete(self, t: Ticket) -> None:
        st = self.stats
        if t.cur is not None:
            st.redirect_overruns += 1
            self._redirect(t, 1 << 60)
        for p in t.participants():
            if self._finish_rebuild(p):
                st.rebuild_overruns += 1
        P = self.parent(t.a)
        if P is not None and self._finish_rebuild(P):
            st.rebuild_overruns += 1
        level = t.level
        st.completed[level] = st.completed.get(level, 0) + 1
        prev = st.min_steps.get(level)
        if prev is None or t.steps < prev:
            st.min_steps[level] = t.steps
        if t.steps < t.budget:
            st.budget_shortfalls += 1
        ties = t.ties
        t.ties = []
        for x in ties:
            x.tied_to = None
        n = self.caps[level]
        if t.kind == JOIN:
            a = t.a
            a.ticket = None
            if P is not None and SCALE * self._sched_weight(a) >= S_FACTOR * n:
                t2 = self._begin_split(a, P)
                for x in ties:
                    if x.left is a or x.right is a or x.left is t2.b or x.right is t2.b:
                        self._tie(x, t2)
                    else:
                        st.bad_ties += 1
            elif ties and P is not None:
                x = ties[0]
                if x.right is a:
                    t2 = self._begin_join(x, a, P)
                elif x.left is a:
                    t2 = self._begin_join(a, x, P)
                else:
                    st.bad_ties += 1
                    t2 = None
                if t2 is not None:
                    for y in ties[1:]:
                        if y.left is t2.a or y.right is t2.a:
                            self._tie(y, t2)
                        else:
                            st.bad_ties += 1
            self._maybe_collapse()
        else:
            u, v = t.a, t.b
            u.ticket = None
            v.ticket = None
            u.split_peer = None
            for x in ties:
                if x.right is u:
                    if u.ticket is None and x.ticket is None:
                        self._begin_join(x, u, P)
                elif x.left is v:
                    if v.ticket is None and x.ticket is None:
                        self._begin_join(v, x, P)
                else:
                    st.bad_ties += 1

    def _maybe_collapse(self) -> None:
        R = self.root
        while R.level > 1:
            c = R.first
            if c is not R.last or c.ticket is not None or c.tied_to is not None:
                return
            c.parent = None
            R.alive = False
            R.first = R.last = None
            self.root = c
            self.stats.root_shrinks += 1
            R = c

    # -- protocol ----------------------------------------------------------

    def _protocol(self, x: Node, P: Node | None) -> None:
        if x.ticket is not None:
            return
        n = self.caps[x.level]
        w = SCALE * self._sched_weight(x)
        if P is None:
            if w >= S_FACTOR * n:
                self._begin_split(x, None)
            return
        if w >= S_FACTOR * n:
            self._begin_split(x, P)
            return
        if w <= M_FACTOR * n:
            if x.tied_to is not None:
                return
            left = x.left if P.first is not x else None
            right = x.right if P.last is not x else None
            if left is not None and left.ticket is None:
                self._begin_join(left, x, P)
            elif right is not None and right.ticket is None:
                self._begin_join(x, right, P)
            else:
                nb = left if left is not None else right
                if nb is None:
                    self.stats.zero_neighbor += 1
                    return
                self._tie(x, nb.ticket)
        elif x.tied_to is not None:
            self._untie(x)

    # -- the per-update schedule ------------------------------------------

    def _leaf_changed(self, p: Node, delta: int, hint=None) -> None:
        """Run the schedule after a leaf below level-1 node ``p`` changed."""
        path = self.path_to_root(p)
        top = len(path) - 1
        before = self._before
        for j in range(top + 1):
            x = path[j]
            x.weight += delta
            if j < top:
                P = path[j + 1]
                if before(x, P.cut):
                    P.prefix += delta
        if hint is None or not self._patch_router(p, hint):
            self._rebuild_now(p)
        self._schedule_path(path)
        self._maybe_collapse()

    def _schedule_path(self, path: list) -> None:
        top = len(path) - 1
        for j in range(top + 1):
            x = path[j]
            if not x.alive:
                continue
            P = None if (j == top or x is self.root) else path[j + 1]
            self._protocol(x, P)
            t = x.ticket
            if t is None:
                t = x.tied_to
            if t is not None:
                self._step(t)
            if x.alive and x.level >= 2:
                self._advance_cut(x, CURSOR_MOVES_PER_UPDATE)
                if x.rebuild is not None or x.dirty:
                    self._rebuild_step(x)

    # -- searching ----------------------------------------------------------

    def _descend(self, node, y: int):
        """Descend from ``node`` (which must cover ``y``) to a leaf; returns
        ``(leaf, vertical_visits, lateral_moves)``."""
        vert = 1
        lat = 0
        r = node.router
        while node.level > 0:
            h = r.route(y) if r is not None else None
            if h is None:
                h = node.first
            r = None
            if h.forward is not None:
                r = h.router
                while h.forward is not None:
                    e = h
                    h = h.forward
                    fr = h.router
                    if fr is not None and (r is None or fr.time > e.dead_at):
                        r = fr
            else:
                r = h.router
            while True:
                rt = h.right
                if rt is None or rt.splitter > y:
                    break
                h = rt
                r = h.router
                lat += 1
            node = h
            vert += 1
        return node, vert, lat


# ---------------------------------------------------------------------------
# the standalone weight game
# ---------------------------------------------------------------------------

STRATEGIES = ("random", "grow", "churn", "adversarial")
_SKEW = {"random": 0, "grow": 0, "churn": 0, "adversarial": 1}
_CUTMODE = {"random": 0, "grow": 0, "churn": 2, "adversarial": 1}


@dataclass(frozen=True)
class GameConfig:
    b: int = 1
    mu: int = MU
    delta: int = DELTA

    def __post_init__(self) -> None:
        if self.mu <= 1:
            raise ValueError("mu must exceed 1")
        if self.b < 1 or self.delta < 0:
            raise ValueError("b must be positive and delta non-negative")

    @property
    def m(self) -> int:
        return self.mu + 3

    @property
    def s(self) -> int:
        return 2 * self.mu + self.delta + 9

    @property
    def weight_low(self) -> int:
        return self.mu * self.b

    @property
    def weight_high(self) -> int:
        return (3 * self.mu + self.delta + 14) * self.b

    @property
    def segment_high(self) -> int:
        return (5 * self.mu + self.delta + 19) * self.b


@dataclass
class GameStats:
    min_weight: int
    max_weight: int
    max_segment: int
    splits: int
    joins: int
    ties: int = 0
    rounds: int = 0
    updates: int = 0
    refused: int = 0
    deferred_cuts: int = 0
    cuts: int = 0
    concats: int = 0
    lists_added: int = 0
    lists_removed: int = 0
    zero_neighbor: int = 0
    faults: int = 0
    join_weight: tuple = (0, 0)
    split_halves: tuple = (0, 0)
    strategy: str = ""
    b: int = 1
    bounds: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        bd = self.bounds
        return (self.zero_neighbor == 0 and self.faults == 0
                and self.min_weight >= bd.get("weight_low", self.min_weight)
                and self.max_weight <= bd.get("weight_high", self.max_weight)
                and self.max_segment <= bd.get("segment_high", self.max_segment))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["join_weight"] = list(self.join_weight)
        d["split_halves"] = list(self.split_halves)
        d["ok"] = self.ok
        return d


def game_simulate(config: GameConfig, adversary: str = "random", rounds: int = 10**6,
                  seed: int = 0) -> GameStats:
    """Play the weight game; returns extreme weights and segment sizes seen."""
    from . import _game as g

    if adversary not in STRATEGIES:
        raise ValueError(f"unknown strategy {adversary!r}; pick from {STRATEGIES}")
    b = config.b
    if adversary == "grow":
        nlists, per_list = 1, 8
        cap = 64 + 2 * (rounds // (config.mu * b)) + 1024
    else:
        nlists, per_list = 4, 8
        cap = 4096
    st = g.new_state(cap, 1024, b, config.mu, config.delta, _SKEW[adversary], _CUTMODE[adversary])
    S, P, L, pool, sfree, pfree, lfree, meta = st
    g.run_game(S, P, L, pool, sfree, pfree, lfree, meta, g.STRATEGY_CODES[adversary],
               rounds, seed, nlists, per_list)
    if meta[g.M_OVERFLOW]:
        raise SchedulerError("game state capacity exhausted")
    mx = int(meta[g.M_MAXW])
    return GameStats(
        min_weight=int(meta[g.M_MINW]), max_weight=mx,
        max_segment=max(int(meta[g.M_MAXSEG]), mx),
        splits=int(meta[g.M_SPLITS]), joins=int(meta[g.M_JOINS]), ties=int(meta[g.M_TIES]),
        rounds=rounds, updates=int(meta[g.M_UPDATES]), refused=int(meta[g.M_REFUSED]),
        deferred_cuts=int(meta[g.M_DEFERRED]), cuts=int(meta[g.M_CUTS]),
        concats=int(meta[g.M_CONCATS]), lists_added=int(meta[g.M_ADDS]),
        lists_removed=int(meta[g.M_REMOVES]), zero_neighbor=int(meta[g.M_ZERO]),
        faults=int(meta[g.M_FAULTS]),
        join_weight=(int(meta[g.M_JMIN]), int(meta[g.M_JMAX])) if meta[g.M_JOINS] else (0, 0),
        split_halves=(int(meta[g.M_HMIN]), int(meta[g.M_HMAX])) if meta[g.M_SPLITS] else (0, 0),
        strategy=adversary, b=b,
        bounds={"weight_low": config.weight_low, "weight_high": config.weight_high,
                "segment_high": config.segment_high},
    )

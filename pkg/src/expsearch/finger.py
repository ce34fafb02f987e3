"""Finger search and constant-work finger updates.

Three mechanisms live here.

* ``FingerScheduler`` is mixed into the ordered set.  In finger mode a leaf
  update no longer spends one local step on every level.  Level-1 work is a
  direct charge of 84 steps.  Higher levels get steps from a marking
  scheme: each update places ``C`` walks from the leaf, each walk marks the
  nearest unmarked ancestor and unmarks the path below it.  Along one root
  path the marks behave like a binary counter, so the ``C`` walks are
  evaluated in closed form.  Decisions above level 1 use approximate weights
  fed by a counter queue over level-1 nodes.
* ``finger_search`` walks up from a finger through level links until a node
  covers the target, then searches down.
* ``RangeLadder`` holds static structures over the keys in ``[x, x + 2^(2^(2^i)))``.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_left, bisect_right

from .sstruct import build as build_static

__all__ = [
    "CounterQueue", "counter_game", "counter_round", "counter_bound", "COUNTER_STRATEGIES",
    "FingerScheduler", "Finger", "finger_search", "finger_search_trace",
    "RangeLadder", "ladder_build", "ladder_query", "ladder_range", "LADDER_LEVELS",
    "marks_from_walks",
]

LEVEL1_DIRECT_STEPS = 84


# ---------------------------------------------------------------------------
# counter queue
# ---------------------------------------------------------------------------


class _Bucket:
    __slots__ = ("value", "prev", "next", "members")

    def __init__(self, value: int) -> None:
        self.value = value
        self.prev = self.next = None
        self.members: dict = {}


class CounterQueue:
    """Counters kept in buckets on a sorted doubly linked list of values.

    The largest counter is at the tail of the list.  Unit increments move a
    counter to the adjacent bucket; subtracting ``q`` walks at most ``q``
    buckets.
    """

    __slots__ = ("_of", "lo", "hi", "picks")

    def __init__(self) -> None:
        self._of: dict = {}
        self.lo: _Bucket | None = None
        self.hi: _Bucket | None = None
        self.picks = 0

    def __len__(self) -> int:
        return len(self._of)

    def __contains__(self, obj) -> bool:
        return obj in self._of

    def value(self, obj) -> int:
        return self._of[obj].value

    def max_value(self) -> int:
        return self.hi.value if self.hi is not None else 0

    def _unlink(self, b: _Bucket) -> None:
        if b.prev is not None:
            b.prev.next = b.next
        else:
            self.lo = b.next
        if b.next is not None:
            b.next.prev = b.prev
        else:
            self.hi = b.prev

    def _insert_after(self, b: _Bucket | None, nb: _Bucket) -> None:
        # b None means at the front
        if b is None:
            nb.next = self.lo
            nb.prev = None
            if self.lo is not None:
                self.lo.prev = nb
            else:
                self.hi = nb
            self.lo = nb
            return
        nb.prev = b
        nb.next = b.next
        if b.next is not None:
            b.next.prev = nb
        else:
            self.hi = nb
        b.next = nb

    def _move(self, obj, src: _Bucket, dst: _Bucket) -> None:
        del src.members[obj]
        dst.members[obj] = None
        self._of[obj] = dst
        if not src.members:
            self._unlink(src)

    def add(self, obj, value: int = 0) -> None:
        if obj in self._of:
            return
        b = self.lo
        prev = None
        while b is not None and b.value < value:
            prev, b = b, b.next
        if b is None or b.value != value:
            nb = _Bucket(value)
            self._insert_after(prev, nb)
            b = nb
        b.members[obj] = None
        self._of[obj] = b

    def remove(self, obj) -> None:
        b = self._of.pop(obj, None)
        if b is None:
            return
        del b.members[obj]
        if not b.members:
            self._unlink(b)

    def increment(self, obj) -> None:
        b = self._of[obj]
        v = b.value + 1
        nb = b.next
        if nb is None or nb.value != v:
            nb = _Bucket(v)
            self._insert_after(b, nb)
        self._move(obj, b, nb)

    def subtract(self, obj, q: int) -> None:
        b = self._of[obj]
        target = b.value - q if b.value > q else 0
        if target == b.value:
            return
        p = b.prev
        while p is not None and p.value > target:
            p = p.prev
        if p is not None and p.value == target:
            dst = p
        else:
            dst = _Bucket(target)
            self._insert_after(p, dst)
        self._move(obj, b, dst)

    def pick(self, q: int):
        """Take a largest counter, subtract ``q`` (floor 0), return its owner."""
        if self.hi is None:
            return None
        obj = next(iter(self.hi.members))
        self.subtract(obj, q)
        self.picks += 1
        return obj

    def check(self) -> bool:
        b = self.lo
        prev = None
        while b is not None:
            if not b.members or (prev is not None and prev.value >= b.value):
                return False
            if b.prev is not prev:
                return False
            prev, b = b, b.next
        return prev is self.hi


COUNTER_STRATEGIES = ("round-robin", "single-target", "random", "halving")


def counter_round(cq: CounterQueue, incremented, q: int):
    """Apply the increments of one round, then pick; returns the picked owner."""
    for obj in incremented:
        if obj not in cq:
            cq.add(obj)
        cq.increment(obj)
    return cq.pick(q)


def counter_bound(p: int, q: int) -> int:
    return 2 * q * ((p.bit_length() - 1) + 1)


def counter_game(p: int, q: int, rounds: int, strategy: str = "round-robin",
                 seed: int = 0) -> dict:
    """Run the counter game; each round is ``q`` unit increments then one pick."""
    if p < 1 or q < 1:
        raise ValueError("p and q must be positive")
    if strategy not in COUNTER_STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    rng = random.Random(seed)
    cq = CounterQueue()
    for i in range(p):
        cq.add(i)
    best = 0
    pos = 0
    active = list(range(p))
    phase_left = len(active)
    for _ in range(rounds):
        for _ in range(q):
            if strategy == "round-robin":
                c = pos % p
                pos += 1
            elif strategy == "single-target":
                c = 0
            elif strategy == "random":
                c = rng.randrange(p)
            else:
                c = active[pos % len(active)]
                pos += 1
                phase_left -= 1
                if phase_left <= 0:
                    if len(active) > 1:
                        active.sort(key=cq.value, reverse=True)
                        active = active[: (len(active) + 1) // 2]
                    else:
                        active = list(range(p))
                    phase_left = len(active)
            cq.increment(c)
        m = cq.max_value()
        if m > best:
            best = m
        cq.pick(q)
    return {"p": p, "q": q, "rounds": rounds, "strategy": strategy,
            "max_counter": best, "bound": counter_bound(p, q)}


# ---------------------------------------------------------------------------
# marking walks in closed form
# ---------------------------------------------------------------------------


def marks_from_walks(bits: int, height: int, walks: int) -> tuple[list[int], int]:
    """Effect of ``walks`` placement walks on a path with mark bits ``bits``.

    Bit ``j`` is the mark of the level-``j`` node on the path (bit 0 is the
    leaf, bit ``height`` the root).  Returns the number of times each level
    gets marked and the new mark bits.
    """
    x = bits
    y = x + walks
    counts = [0] * (height + 1)
    for j in range(height):
        counts[j] = ((y >> j) - (y >> (j + 1))) - ((x >> j) - (x >> (j + 1)))
    counts[height] = (y >> height) - (x >> height)
    low = y & ((1 << height) - 1)
    root_bit = (bits >> height) & 1
    if counts[height] > 0:
        root_bit = 1
    return counts, low | (root_bit << height)


# ---------------------------------------------------------------------------
# the finger-mode schedule
# ---------------------------------------------------------------------------


class FingerScheduler:
    """Finger-mode hooks for the tree engine (a mixin)."""

    def _finger_init(self) -> None:
        self.counters = CounterQueue()
        self._pending = None
        self._fupdates = 0
        self._touch = 0
        self._work = 0
        self.touch_max = 0
        self.touch_total = 0
        self.touch_breaches = 0
        self.finger_updates = 0
        self.max_counter = 0
        self.max_approx_error = 0.0
        if self.finger_mode:
            self.counters.add(self.root)

    def _sched_weight(self, x) -> int:
        if self.finger_mode and x.level >= 2:
            return x.approx
        return x.weight

    def _ticket_budget(self, level: int) -> int:
        n = self.caps[level]
        if not self.finger_mode:
            return -(-n // 84)
        if level == 1:
            return n
        root = math.isqrt(n)
        if root * root < n:
            root += 1
        return max(-(-n >> level), root)

    def _on_join(self, a, b) -> None:
        if self.finger_mode:
            self._touch += 2
            a.mark = True
            if a.level == 1:
                self.counters.remove(b)

    def _on_split(self, u, v) -> None:
        if self.finger_mode:
            self._touch += 2
            u.mark = v.mark = True
            if u.level == 1:
                self.counters.add(v)

    def _register_level1(self, nodes) -> None:
        self.counters.remove(self.root)
        for u in nodes:
            self.counters.add(u)

    def _finger_changed(self, leaf, p, delta: int, hint=None) -> None:
        self._touch = 0
        path = self.path_to_root(p)
        top = len(path) - 1
        self._touch += len(path)
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
        cq = self.counters
        if p not in cq:
            cq.add(p)
        cq.increment(p)
        v = cq.max_value()
        if v > self.max_counter:
            self.max_counter = v

        # approximate-weight ascent owed by the previous pick
        pend = self._pending
        self._pending = None
        if pend is not None:
            self._ascend(*pend)

        # level 1: direct charge
        if p.alive:
            P1 = self.parent(p)
            self._protocol(p, P1)
            t = p.ticket or p.tied_to
            if t is not None:
                self._step(t, LEVEL1_DIRECT_STEPS)

        # placement walks
        h = len(path)
        bits = 1 if leaf.mark else 0
        for i, node in enumerate(path):
            if node.mark:
                bits |= 1 << (i + 1)
        counts, newbits = marks_from_walks(bits, h, self.config.local_steps_per_update)
        leaf.mark = bool(newbits & 1)
        for i, node in enumerate(path):
            node.mark = bool((newbits >> (i + 1)) & 1)
        for i in range(1, h + 1):
            n_i = counts[i]
            node = path[i - 1]
            if n_i <= 0 or not node.alive:
                continue
            self._touch += 1
            t = node.ticket or node.tied_to
            if t is None:
                self._protocol(node, self.parent(node))
                t = node.ticket or node.tied_to
                if t is None:
                    continue
                n_i = 1
            self._step(t, n_i)

        # every q updates pick a largest counter
        self._fupdates += 1
        q = self.config.counter_q
        if self._fupdates % q == 0:
            picked = cq.pick(q)
            if picked is not None:
                self._touch += 1
                node = picked
                while node.forward is not None:
                    node = node.forward
                if picked is not node:
                    cq.remove(picked)
                if node.alive:
                    d = node.weight - node.approx
                    node.approx = node.weight
                    self._pending = (node, d)
        self._maybe_collapse()
        self.finger_updates += 1
        self.touch_total += self._touch
        if self._touch > self.touch_max:
            self.touch_max = self._touch
        if self._touch > self.config.touch_ceiling:
            self.touch_breaches += 1

    def _ascend(self, v, d: int) -> None:
        while v.forward is not None:
            v = v.forward
        if not v.alive:
            return
        x = self.parent(v)
        while x is not None:
            self._touch += 1
            x.approx += d
            P = self.parent(x)
            self._protocol(x, P)
            t = x.ticket or x.tied_to
            if t is not None:
                self._step(t)
            if not x.alive:
                break
            x = P

    def approx_error_report(self) -> dict:
        """Largest ``|approx - weight|`` per level as a fraction of ``n_i``."""
        worst: dict = {}
        row = [self.root]
        while row and row[0].level >= 2:
            nxt = []
            for u in row:
                lvl = u.level
                err = abs(u.approx - u.weight) / self.caps[lvl]
                if err > worst.get(lvl, 0.0):
                    worst[lvl] = err
                c = u.first
                while c is not None:
                    nxt.append(c)
                    if c is u.last:
                        break
                    c = c.right
            row = nxt
        return worst

    def _audit_finger(self, levels, rep) -> None:
        worst = self.approx_error_report()
        mx = max(worst.values(), default=0.0)
        if mx > self.max_approx_error:
            self.max_approx_error = mx
        rep.notes["approx_error"] = {str(k): round(v, 5) for k, v in worst.items()}
        if mx > 1 / 8:
            rep.add(f"approximate weight error {mx:.4f} n_i exceeds n_i/8")
        if not self.counters.check():
            rep.add("counter queue value list is not sorted")
        rep.notes["touch_max"] = self.touch_max
        if self.touch_breaches:
            rep.add(f"{self.touch_breaches} finger updates touched more than "
                    f"{self.config.touch_ceiling} nodes")
        for row in levels:
            if row[0].level == 1:
                for u in row:
                    if u not in self.counters:
                        rep.add(f"level-1 node {u!r} has no counter")


# ---------------------------------------------------------------------------
# finger search
# ---------------------------------------------------------------------------


class Finger:
    """A client-held reference to a stored element."""

    __slots__ = ("element", "epoch")

    def __init__(self, element, epoch: int = 0) -> None:
        self.element = element
        self.epoch = epoch

    @property
    def valid(self) -> bool:
        return self.element.alive

    @property
    def key(self):
        return self.element.key


def _covers(u, y: int) -> bool:
    if u.splitter > y:
        return False
    r = u.right
    return r is None or y < r.splitter


def finger_search_trace(s, f, y: int):
    """``(answer, peak_level, vertical_visits, lateral_moves)``."""
    from .core import ContractError

    e = f.element if isinstance(f, Finger) else f
    if e is None or not getattr(e, "alive", False) or e is s.head or e is s.tail:
        raise ContractError("stale finger")
    s._check_key(y)
    parent = s.parent
    u = e
    up = 0
    hop = 0
    if y >= e.key:
        while not _covers(u, y):
            r = u.right
            if r is not None and _covers(r, y):
                u = r
                hop = 1
                break
            p = parent(u)
            if p is None:
                break
            u = p
            up += 1
    else:
        head = s.head
        while not _covers(u, y):
            lft = u.left
            if lft is not None and lft is not head and _covers(lft, y):
                u = lft
                hop = 1
                break
            p = parent(u)
            if p is None:
                break
            u = p
            up += 1
    peak = u.level
    vert = up + 1
    lat = hop
    if peak > 0:
        u, v2, dl = s._descend(u, y)
        vert += v2 - 1
        lat += dl
    if u.key is None or u.key > y:
        u = u.left
        while u is not s.head and u.key > y:
            u = u.left
        if u is s.head:
            u = None
    return u, peak, vert, lat


def finger_search(s, f, y: int):
    """Element with the largest key ``<= y``, searched from finger ``f``."""
    return finger_search_trace(s, f, y)[0]


# ---------------------------------------------------------------------------
# range ladders
# ---------------------------------------------------------------------------

LADDER_LEVELS = 3


def ladder_range(i: int) -> int:
    return 1 << (1 << (1 << i))


class RangeLadder:
    """Static structures over the keys in ``[x, x + 2^(2^(2^i)))``, i < LADDER_LEVELS.

    Built over a snapshot; ``epoch`` records the source's modification count.
    """

    __slots__ = ("x", "levels", "fallback", "epoch", "width")

    def __init__(self, x: int, keys: list[int], handles: list | None, width: int = 64,
                 variant: str = "sorted", fallback=None, epoch: int = 0) -> None:
        self.x = x
        self.width = width
        self.fallback = fallback
        self.epoch = epoch
        if handles is None:
            handles = keys
        # one dedupe pass (last handle per key wins), then a prefix per level
        uniq: list[int] = []
        hs: list = []
        prev = None
        for k, h in zip(keys, handles):
            if k == prev:
                hs[-1] = h
            else:
                uniq.append(k)
                hs.append(h)
                prev = k
        self.levels = []
        for i in range(LADDER_LEVELS):
            hi = x + ladder_range(i)
            cut = bisect_left(uniq, hi)
            self.levels.append((hi, build_static(uniq[:cut], variant, width), hs[:cut]))

    def level_for(self, y: int) -> int:
        for i, (hi, _, _) in enumerate(self.levels):
            if y < hi:
                return i
        return -1

    def query(self, y: int):
        if y < self.x:
            raise ValueError("ladder queries need y >= x")
        i = self.level_for(y)
        if i < 0:
            return self.fallback(y) if self.fallback is not None else None
        _, st, hs = self.levels[i]
        j = st.query(y)
        return hs[j] if j >= 0 else None


def ladder_build(x, X, width: int = 64, variant: str = "sorted") -> RangeLadder:
    """Build a ladder at ``x``.

    ``X`` is either a sorted sequence of keys containing ``x`` or an ordered
    set, in which case ``x`` is one of its elements and answers are elements.
    """
    from .core import Element, OrderedSet

    if isinstance(X, OrderedSet):
        e = x
        if not isinstance(e, Element) or not e.alive:
            from .core import ContractError
            raise ContractError("ladder anchor is not a stored element")
        # start at the first element with key x so equal keys are included
        while e.left is not X.head and e.left.key == e.key:
            e = e.left
        x0 = e.key
        hi = x0 + ladder_range(LADDER_LEVELS - 1)
        keys, hs = [], []
        tail = X.tail
        while e is not tail and e.key < hi:
            keys.append(e.key)
            hs.append(e)
            e = e.right
        return RangeLadder(x0, keys, hs, X.width, variant, X.search, X.epoch)
    keys = sorted(X)
    i = bisect_right(keys, x - 1)
    if i >= len(keys) or keys[i] != x:
        raise ValueError("x must belong to X")

    def fallback(y, _keys=keys):
        j = bisect_right(_keys, y) - 1
        return _keys[j] if j >= 0 else None

    return RangeLadder(x, keys[i:], None, width, variant, fallback)


def ladder_query(L: RangeLadder, x, y: int):
    """Predecessor of ``y`` through the ladder anchored at ``x``."""
    xk = x.key if hasattr(x, "key") else x
    if xk != L.x:
        raise ValueError("ladder anchored elsewhere")
    return L.query(y)

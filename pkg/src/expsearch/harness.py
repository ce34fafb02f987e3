"""Workload runner, differential fuzzer, auditor and benchmark driver.

Workload grammar, one op per line, ``#`` starts a comment::

    I <key>            insert            D <key>      delete one copy
    S <key>            predecessor       L <key>      exact look-up
    MIN | MAX
    TAG <t> <key>      bind finger t to the stored element with that key
    FS <t> <key>       finger search from t
    FI <t> <key>       insert next to finger t, then move t to the new element
    SI|SD|SS <words>   string insert / delete / predecessor; words are
                       colon-separated hex, e.g. ``1f:0:ab``

Keys are decimal or ``0x`` hex.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import random
import statistics
import sys
import time
from dataclasses import asdict, dataclass, field

from sortedcontainers import SortedList

from .core import Config, ContractError, DomainError, OrderedSet
from .finger import (Finger, counter_game, COUNTER_STRATEGIES, finger_search_trace,
                     ladder_build, ladder_range, LADDER_LEVELS)
from .stringset import StringSet, format_words, parse_words

__all__ = ["WorkloadOp", "WorkloadError", "RunStats", "parse_workload", "format_op",
           "generate_ops", "run_ops", "fuzz", "sweep", "finger_updates", "bench", "main",
           "OPCODES"]

OPCODES = ("I", "D", "S", "L", "MIN", "MAX", "TAG", "FS", "FI", "SI", "SD", "SS")
_KEY_OPS = {"I", "D", "S", "L"}
_TAG_OPS = {"TAG", "FS", "FI"}
_STR_OPS = {"SI", "SD", "SS"}
# a missing or stale ladder is rebuilt only on every n-th finger search
LADDER_REBUILD_EVERY = 32


class WorkloadError(ValueError):
    def __init__(self, line: int, msg: str) -> None:
        super().__init__(f"line {line}: {msg}")
        self.line = line


@dataclass(frozen=True)
class WorkloadOp:
    opcode: str
    arg: object = None
    tag: str | None = None
    line: int = 0


def _parse_key(tok: str, line: int) -> int:
    try:
        k = int(tok, 16) if tok.lower().startswith("0x") else int(tok, 10)
    except ValueError:
        raise WorkloadError(line, f"bad key {tok!r}") from None
    if k < 0:
        raise WorkloadError(line, f"negative key {tok!r}")
    return k


def parse_line(text: str, line: int = 1) -> WorkloadOp | None:
    body = text.split("#", 1)[0].strip()
    if not body:
        return None
    parts = body.split()
    op = parts[0].upper()
    if op not in OPCODES:
        raise WorkloadError(line, f"unknown opcode {parts[0]!r}")
    args = parts[1:]
    if op in ("MIN", "MAX"):
        if args:
            raise WorkloadError(line, f"{op} takes no argument")
        return WorkloadOp(op, line=line)
    if op in _KEY_OPS:
        if len(args) != 1:
            raise WorkloadError(line, f"{op} takes one key")
        return WorkloadOp(op, _parse_key(args[0], line), line=line)
    if op in _TAG_OPS:
        if len(args) != 2:
            raise WorkloadError(line, f"{op} takes a tag and a key")
        return WorkloadOp(op, _parse_key(args[1], line), tag=args[0], line=line)
    if len(args) != 1:
        raise WorkloadError(line, f"{op} takes one string")
    try:
        return WorkloadOp(op, parse_words(args[0]), line=line)
    except ValueError as exc:
        raise WorkloadError(line, str(exc)) from None


def parse_workload(text: str) -> list[WorkloadOp]:
    ops = []
    for i, raw in enumerate(text.splitlines(), 1):
        op = parse_line(raw, i)
        if op is not None:
            ops.append(op)
    return ops


def format_op(op: WorkloadOp) -> str:
    if op.opcode in ("MIN", "MAX"):
        return op.opcode
    if op.opcode in _STR_OPS:
        return f"{op.opcode} {format_words(op.arg)}"
    if op.opcode in _TAG_OPS:
        return f"{op.opcode} {op.tag} {op.arg}"
    return f"{op.opcode} {op.arg}"


@dataclass
class RunStats:
    ops: dict = field(default_factory=dict)
    mismatches: int = 0
    first_mismatch: dict | None = None
    audits: int = 0
    audit_failures: int = 0
    audit_messages: list = field(default_factory=list)
    max_nodes_touched_per_finger_update: int = 0
    max_probes: dict = field(default_factory=dict)
    coverage: dict = field(default_factory=dict)
    locality_violations: int = 0
    stale_fingers: int = 0
    contract_errors: int = 0
    engine: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    strings: dict = field(default_factory=dict)
    size: int = 0
    height: int = 0
    seed: int | None = None
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.mismatches == 0 and self.audit_failures == 0

    def as_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        if not timing:
            d.pop("wall_time")
        return d


class Runner:
    """Executes ops against the structures and, with ``check``, the oracles."""

    def __init__(self, config: Config, check: bool = True, hash_audit: bool = False,
                 string_width: int = 64) -> None:
        self.set = OrderedSet(config)
        self.strings = None
        self.string_width = string_width
        self.check = check
        self.hash_audit = hash_audit
        self.oracle = SortedList()
        self.soracle = SortedList()
        self.tags: dict[str, Finger] = {}
        self.ladders: dict[str, object] = {}
        self.stats = RunStats()
        self._fs_count = 0

    # -- helpers -------------------------------------------------------------

    def _bump(self, key: str, by: int = 1) -> None:
        c = self.stats.coverage
        c[key] = c.get(key, 0) + by

    def _probe(self, key: str, value: int) -> None:
        mp = self.stats.max_probes
        if value > mp.get(key, 0):
            mp[key] = value

    def _pred(self, y: int):
        j = self.oracle.bisect_right(y) - 1
        return self.oracle[j] if j >= 0 else None

    def _mismatch(self, index: int, op: WorkloadOp, got, want) -> None:
        st = self.stats
        st.mismatches += 1
        if st.first_mismatch is None:
            st.first_mismatch = {"op_index": index, "line": op.line, "op": format_op(op),
                                 "got": got, "expected": want}

    # -- execution -----------------------------------------------------------

    def execute(self, index: int, op: WorkloadOp) -> None:
        st = self.stats
        st.ops[op.opcode] = st.ops.get(op.opcode, 0) + 1
        s = self.set
        oc = op.opcode
        k = op.arg
        chk = self.check
        if oc == "I":
            s.insert(k)
            if chk:
                self.oracle.add(k)
        elif oc == "D":
            got = s.delete_key(k)
            if chk:
                want = k in self.oracle
                if want:
                    self.oracle.remove(k)
                if got != want:
                    self._mismatch(index, op, got, want)
        elif oc == "S":
            e, vert, lat = s.search_trace(k) if 0 <= k < s.universe else (s.search(k), 0, 0)
            self._probe("search_vertical", vert)
            self._probe("search_lateral", lat)
            if chk:
                got = None if e is None else e.key
                want = self._pred(k)
                if got != want:
                    self._mismatch(index, op, got, want)
        elif oc == "L":
            got = s.lookup(k) is not None
            if chk and got != (k in self.oracle):
                self._mismatch(index, op, got, not got)
        elif oc in ("MIN", "MAX"):
            e = s.minimum() if oc == "MIN" else s.maximum()
            if chk:
                got = None if e is None else e.key
                want = None
                if self.oracle:
                    want = self.oracle[0] if oc == "MIN" else self.oracle[-1]
                if got != want:
                    self._mismatch(index, op, got, want)
        elif oc == "TAG":
            e = s.lookup(k)
            if e is None:
                self.tags.pop(op.tag, None)
            else:
                self.tags[op.tag] = Finger(e, s.epoch)
            self.ladders.pop(op.tag, None)
            if chk and (e is not None) != (k in self.oracle):
                self._mismatch(index, op, e is not None, k in self.oracle)
        elif oc == "FS":
            self._finger_search(index, op)
        elif oc == "FI":
            self._finger_insert(index, op)
        else:
            self._string_op(index, op)

    def _finger_of(self, tag: str):
        f = self.tags.get(tag)
        if f is None or not f.valid:
            self.stats.stale_fingers += 1
            return None
        return f

    def _finger_search(self, index: int, op: WorkloadOp) -> None:
        f = self._finger_of(op.tag)
        if f is None:
            return
        s = self.set
        y = op.arg
        x = f.key
        self._fs_count += 1
        if 0 <= y - x < ladder_range(LADDER_LEVELS - 1):
            lad = self.ladders.get(op.tag)
            if lad is not None and lad.epoch != s.epoch:
                lad = None
            if lad is None and self._fs_count % LADDER_REBUILD_EVERY == 0:
                lad = ladder_build(f.element, s)
                self.ladders[op.tag] = lad
                self._bump("ladder_builds")
            if lad is not None:
                e = lad.query(y)
                self._bump("ladder_queries")
                if self.check:
                    got = None if e is None else e.key
                    want = self._pred(y)
                    if got != want:
                        self._mismatch(index, op, got, want)
                return
        e, peak, vert, lat = finger_search_trace(s, f, y)
        self._bump("finger_searches")
        if peak > 0:
            self._bump("finger_ascents")
        if lat:
            self._bump("horizontal_moves", lat)
        self._probe("finger_vertical", vert)
        self._probe("finger_peak_level", peak)
        if self.check:
            got = None if e is None else e.key
            want = self._pred(y)
            if got != want:
                self._mismatch(index, op, got, want)
            if peak >= 2:
                need = -(-s.caps[peak - 1] // 10)
                q = elements_between(s, f.element, e, y >= x, need)
                self._bump("locality_checks")
                if q < need:
                    self.stats.locality_violations += 1
                    self._audit_fail(f"op {index}: ascent to level {peak} with only {q} keys between")

    def _finger_insert(self, index: int, op: WorkloadOp) -> None:
        f = self._finger_of(op.tag)
        if f is None:
            return
        s = self.set
        k = op.arg
        try:
            s._check_key(k)
        except DomainError:
            self.stats.contract_errors += 1
            return
        pred = finger_search_trace(s, f, k)[0]
        e = s.finger_insert(pred, k)
        self.tags[op.tag] = Finger(e, s.epoch)
        self._bump("finger_inserts")
        if self.check:
            self.oracle.add(k)

    def _string_op(self, index: int, op: WorkloadOp) -> None:
        if self.strings is None:
            self.strings = StringSet(self.string_width)
        ss = self.strings
        w = op.arg
        if op.opcode == "SI":
            ss.insert(w)
            if self.check:
                self.soracle.add(w)
        elif op.opcode == "SD":
            got = ss.delete(w)
            if self.check:
                want = w in self.soracle
                if want:
                    self.soracle.remove(w)
                if got != want:
                    self._mismatch(index, op, got, want)
        else:
            got = ss.search(w)
            if self.check:
                j = self.soracle.bisect_right(w) - 1
                want = self.soracle[j] if j >= 0 else None
                if got != want:
                    self._mismatch(index, op, None if got is None else format_words(got),
                                   None if want is None else format_words(want))
        self._probe("string_nodes", ss.last_touch)

    # -- audits --------------------------------------------------------------

    def _audit_fail(self, msg: str) -> None:
        st = self.stats
        st.audit_failures += 1
        if len(st.audit_messages) < 20:
            st.audit_messages.append(msg)

    def audit(self, index: int | None = None) -> None:
        st = self.stats
        st.audits += 1
        rep = self.set.audit()
        where = "" if index is None else f"after op {index}: "
        for v in rep.violations:
            self._audit_fail(where + v)
        if self.check and self.set.keys() != list(self.oracle):
            self._audit_fail(where + "leaf sequence differs from the oracle")
        if self.hash_audit:
            for msg in hash_audit(self.set):
                self._audit_fail(where + msg)
        if self.strings is not None:
            srep = self.strings.audit()
            for v in srep.violations:
                self._audit_fail(where + "strings: " + v)

    def finish(self, t0: float) -> RunStats:
        st = self.stats
        s = self.set
        st.wall_time = round(time.perf_counter() - t0, 3)
        st.size = len(s)
        st.height = s.height
        st.engine = s.stats.as_dict()
        st.max_nodes_touched_per_finger_update = s.touch_max
        budgets = {}
        for lvl, got in sorted(s.stats.min_steps.items()):
            budgets[str(lvl)] = {"min_steps": got, "required": s.required_steps(lvl)}
        st.budgets = budgets
        if s.finger_mode:
            st.engine["max_counter"] = s.max_counter
            st.engine["max_approx_error"] = round(s.max_approx_error, 6)
            st.engine["mean_touch"] = round(s.touch_total / max(1, s.finger_updates), 3)
        if self.strings is not None:
            sst = self.strings.stats()
            sst["space_per_string"] = round(sst["space_units"] / max(1, self.strings.distinct), 3)
            st.strings = sst
        return st


def elements_between(s: OrderedSet, a, b, rightward: bool, cap: int) -> int:
    """Stored elements strictly between ``a`` and ``b`` in list order, counted up to ``cap``."""
    stop = s.tail if rightward else s.head
    x = a
    q = -1
    while x is not b and x is not stop and q < cap:
        x = x.right if rightward else x.left
        q += 1
    return max(q, 0)


def hash_audit(s: OrderedSet) -> list[str]:
    """Check every hashed router: no second-level collisions, at most two probes."""
    out = []
    for row in s._levels_top_down():
        for u in row:
            r = u.router
            if r is None or r.index is None:
                continue
            for t in getattr(r.index, "tables", None) or ():
                if t is None:
                    continue
                if t.collisions():
                    out.append(f"perfect hash under {u!r} has collisions")
                for k in t.stored_keys()[:8]:
                    if t.lookup_probes(k)[1] > 2:
                        out.append(f"perfect hash under {u!r} needs more than two probes")
    return out


# ---------------------------------------------------------------------------
# workload generation
# ---------------------------------------------------------------------------


def generate_ops(seed: int, n: int, finger_bias: float = 0.0, string_bias: float = 0.0,
                 width: int = 64):
    """Deterministic mixed workload; keeps its own model to pick live keys."""
    rng = random.Random(seed)
    U = 1 << width
    live = SortedList()
    tags = {}
    tag_names = ("a", "b", "c", "d")
    slive = []
    salpha = [0, 1, 2, 3, U - 1]

    def rand_key():
        r = rng.random()
        if r < 0.5:
            return rng.randrange(U)
        if r < 0.8:
            return rng.randrange(min(U, 4096))
        if live:
            x = live[rng.randrange(len(live))]
            return min(U - 1, max(0, x + rng.randint(-300, 300)))
        return rng.randrange(U)

    def rand_words():
        ln = rng.randint(1, 20) if rng.random() < 0.3 else rng.randint(1, 4)
        return tuple(rng.choice(salpha) if rng.random() < 0.8 else rng.randrange(U)
                     for _ in range(ln))

    for _ in range(n):
        if string_bias and rng.random() < string_bias:
            r = rng.random()
            if r < 0.5:
                w = rand_words()
                slive.append(w)
                yield WorkloadOp("SI", w)
            elif r < 0.75:
                if slive and rng.random() < 0.7:
                    i = rng.randrange(len(slive))
                    slive[i], slive[-1] = slive[-1], slive[i]
                    w = slive.pop()
                else:
                    w = rand_words()
                yield WorkloadOp("SD", w)
            else:
                yield WorkloadOp("SS", rand_words())
            continue
        if finger_bias and rng.random() < finger_bias:
            t = rng.choice(tag_names)
            r = rng.random()
            if t not in tags or r < 0.08:
                if not live:
                    k = rand_key()
                    live.add(k)
                    yield WorkloadOp("I", k)
                k = live[rng.randrange(len(live))]
                tags[t] = k
                yield WorkloadOp("TAG", k, tag=t)
            elif r < 0.6:
                x = tags[t]
                span = 1 << rng.randint(0, width - 1 if rng.random() < 0.1 else 18)
                y = min(U - 1, max(0, x + rng.randint(-span, span)))
                yield WorkloadOp("FS", y, tag=t)
            else:
                x = tags[t]
                k = min(U - 1, max(0, x + rng.randint(-64, 64)))
                live.add(k)
                tags[t] = k
                yield WorkloadOp("FI", k, tag=t)
            continue
        r = rng.random()
        if r < 0.40:
            k = rand_key()
            live.add(k)
            yield WorkloadOp("I", k)
        elif r < 0.65:
            if live and rng.random() < 0.8:
                k = live[rng.randrange(len(live))]
            else:
                k = rand_key()
            if k in live:
                live.remove(k)
            yield WorkloadOp("D", k)
        elif r < 0.85:
            yield WorkloadOp("S", rand_key())
        elif r < 0.95:
            yield WorkloadOp("L", rand_key())
        else:
            yield WorkloadOp("MIN" if r < 0.975 else "MAX")


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------


def run_ops(ops, config: Config | None = None, check: bool = True, check_every: int = 0,
            hash_audit: bool = False, stop_on_mismatch: bool = True) -> RunStats:
    config = config or Config()
    runner = Runner(config, check=check, hash_audit=hash_audit)
    t0 = time.perf_counter()
    i = -1
    for i, op in enumerate(ops):
        try:
            runner.execute(i, op)
        except (ContractError, DomainError) as exc:
            runner.stats.contract_errors += 1
            runner._audit_fail(f"op {i} ({format_op(op)}): {exc}")
        if stop_on_mismatch and runner.stats.mismatches:
            break
        if check_every and (i + 1) % check_every == 0:
            runner.audit(i)
    if check_every:
        runner.audit(i)
    return runner.finish(t0)


def fuzz(seed: int, ops: int = 10**5, check_every: int = 1000, finger_bias: float = 0.0,
         string_bias: float = 0.0, config: Config | None = None,
         hash_audit: bool = False) -> RunStats:
    config = config or Config()
    st = run_ops(generate_ops(seed, ops, finger_bias, string_bias, config.word_bits),
                 config, check=True, check_every=check_every, hash_audit=hash_audit)
    st.seed = seed
    return st


def _sweep_one(job):
    seed, ops, check_every, finger_bias, string_bias, config = job
    return fuzz(seed, ops, check_every, finger_bias, string_bias, config)


def sweep(seeds, ops: int = 10**5, check_every: int = 1000, finger_bias: float = 0.0,
          string_bias: float = 0.0, config: Config | None = None,
          workers: int | None = None) -> list[RunStats]:
    """Fuzz many seeds, one independent set per worker process."""
    config = config or Config()
    jobs = [(sd, ops, check_every, finger_bias, string_bias, config) for sd in seeds]
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(jobs) <= 1:
        return [_sweep_one(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_one, jobs))


def locate_failure(seed: int, ops: int, finger_bias: float, string_bias: float,
                   config: Config) -> dict:
    """Replay with an audit after every op to find the first failing op."""
    runner = Runner(config, check=True)
    for i, op in enumerate(generate_ops(seed, ops, finger_bias, string_bias, config.word_bits)):
        try:
            runner.execute(i, op)
        except (ContractError, DomainError):
            return {"seed": seed, "first_failing_op": i, "op": format_op(op)}
        before = runner.stats.audit_failures
        if not runner.stats.mismatches:
            runner.audit(i)
        if runner.stats.mismatches or runner.stats.audit_failures > before:
            return {"seed": seed, "first_failing_op": i, "op": format_op(op),
                    "replay": f"expsearch fuzz --seed {seed} --ops {i + 1} --check-every 1"}
    return {"seed": seed, "first_failing_op": None}


def finger_updates(n: int, updates: int, seed: int = 0, config: Config | None = None,
                   hot: float = 0.5, phase: int = 50_000, audit_every: int = 0) -> dict:
    """Finger inserts/deletes around ``n`` live keys; reports nodes touched per update.

    Inserts land next to a hot element with probability ``hot`` (the hot spot
    moves every ``phase`` updates) so splits and joins keep happening.
    """
    config = config or Config(finger_mode=True)
    if not config.finger_mode:
        raise ValueError("finger_updates needs a finger-mode config")
    rng = random.Random(seed)
    U = 1 << config.word_bits
    keys = sorted(rng.randrange(U) for _ in range(n))
    s = OrderedSet.from_sorted(keys, config)
    live = list(s)
    pos = {id(e): i for i, e in enumerate(live)}
    hot_e = live[rng.randrange(len(live))]
    audits = 0
    problems: list[str] = []

    def drop(e):
        i = pos.pop(id(e))
        last = live.pop()
        if last is not e:
            live[i] = last
            pos[id(last)] = i

    for t in range(updates):
        if t % phase == 0 or not hot_e.alive:
            hot_e = live[rng.randrange(len(live))]
        if len(live) <= n and (len(live) < n or rng.random() < 0.5):
            e = hot_e if rng.random() < hot else live[rng.randrange(len(live))]
            nxt = e.right
            hi = nxt.key if nxt is not s.tail else U - 1
            k = e.key + (hi - e.key) // 2
            u = s.finger_insert(e, k)
            pos[id(u)] = len(live)
            live.append(u)
        else:
            e = live[rng.randrange(len(live))]
            if e is hot_e:
                hot_e = e.left if e.left is not s.head else e.right
            drop(e)
            s.finger_delete(e)
        if audit_every and (t + 1) % audit_every == 0:
            rep = s.audit()
            audits += 1
            problems.extend(rep.violations[:3])
    return {"n": n, "updates": updates, "height": s.height, "size": len(s),
            "touch_max": s.touch_max,
            "touch_mean": round(s.touch_total / max(1, s.finger_updates), 3),
            "touch_ceiling": config.touch_ceiling, "touch_breaches": s.touch_breaches,
            "max_counter": s.max_counter, "audits": audits, "problems": problems}


def search_probes(s: OrderedSet, y: int) -> int:
    """Static-structure probes spent by routers along the search path for ``y``."""
    leaf = s.search(y) or s.minimum()
    if leaf is None:
        return 0
    total = 0
    for u in s.path_to_root(s.parent(leaf)):
        if u.router is not None:
            total += u.router.probes(y)
    return total


def bench(sizes, variants, repeat: int = 3, seed: int = 0, queries: int = 2000) -> list[dict]:
    rows = []
    for n in sizes:
        rng = random.Random(seed + n)
        keys = sorted(rng.getrandbits(64) for _ in range(n))
        qs = [rng.getrandbits(64) for _ in range(queries)]
        for v in variants:
            s = OrderedSet.from_sorted(keys, Config(sstruct_variant=v))
            times = []
            for _ in range(repeat):
                t0 = time.perf_counter_ns()
                for q in qs:
                    s.search(q)
                times.append((time.perf_counter_ns() - t0) / len(qs))
            probes = [search_probes(s, q) for q in qs[:200]]
            space = s.space_usage()
            rows.append({"size": n, "variant": v, "median_ns_per_op": round(statistics.median(times)),
                         "mean_probes": round(sum(probes) / len(probes), 3),
                         "max_probes": max(probes), "height": s.height,
                         "space_units": space, "space_per_key": round(space / n, 4)})
    return rows


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def _env_seed(arg):
    if arg is not None:
        return arg
    env = os.environ.get("XSET_SEED")
    return int(env) if env else 0


def _config_from(args) -> Config:
    return Config(sstruct_variant=args.sstruct, finger_mode=args.finger_mode,
                  word_bits=args.word_bits)


def _emit(obj, out) -> None:
    json.dump(obj, out, indent=2, sort_keys=True, default=str)
    out.write("\n")


def _add_structure_flags(p) -> None:
    p.add_argument("--sstruct", default="sorted", choices=("sorted", "veb", "fusion", "auto"),
                   help="static search structure used by the routers")
    p.add_argument("--finger-mode", action="store_true",
                   help="constant-work finger-update scheduling")
    p.add_argument("--word-bits", type=int, default=64)
    p.add_argument("--hash-audit", action="store_true",
                   help="also verify hashed routers at every audit")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="expsearch", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="execute a workload file")
    p.add_argument("workload")
    _add_structure_flags(p)
    p.add_argument("--check", action="store_true", help="lockstep oracle comparison")
    p.add_argument("--check-every", type=int, default=0, help="full audit period (0 = end only)")

    p = sub.add_parser("fuzz", help="seeded differential fuzzing")
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=int, default=1, help="run this many consecutive seeds")
    p.add_argument("--ops", type=int, default=10**5)
    p.add_argument("--check-every", type=int, default=1000)
    p.add_argument("--finger-bias", type=float, default=0.0)
    p.add_argument("--string-bias", type=float, default=0.0)
    p.add_argument("--dump", help="write the first seed's workload here")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    _add_structure_flags(p)

    p = sub.add_parser("bench", help="search timing, probes and space as CSV")
    p.add_argument("--sizes", default="1000,10000,100000")
    p.add_argument("--sstruct", default="sorted,veb,fusion")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("audit", help="build a set and print its full audit report")
    p.add_argument("workload", nargs="?")
    p.add_argument("--n", type=int, default=10000, help="random keys when no workload is given")
    p.add_argument("--seed", type=int)
    _add_structure_flags(p)

    p = sub.add_parser("game", help="simulate the weight-balancing game")
    p.add_argument("--b", type=int, default=1)
    p.add_argument("--mu", type=int, default=21)
    p.add_argument("--delta", type=int, default=7)
    p.add_argument("--rounds", type=int, default=10**6)
    p.add_argument("--strategy", default="random")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("counters", help="simulate the counter-picking game")
    p.add_argument("--p", type=int, default=64)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--rounds", type=int, default=10**4)
    p.add_argument("--strategy", default="round-robin", choices=COUNTER_STRATEGIES)
    p.add_argument("--seed", type=int)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    cmd = args.cmd
    if cmd == "run":
        try:
            with open(args.workload) as fh:
                ops = parse_workload(fh.read())
        except WorkloadError as exc:
            print(f"parse error: {exc}", file=sys.stderr)
            return 2
        st = run_ops(ops, _config_from(args), check=args.check, check_every=args.check_every,
                     hash_audit=args.hash_audit)
        _emit(st.as_dict(), out)
        return 0 if st.ok else 1
    if cmd == "fuzz":
        seed0 = _env_seed(args.seed)
        cfg = _config_from(args)
        reports = []
        ok = True
        seeds = range(seed0, seed0 + args.seeds)
        if args.dump:
            with open(args.dump, "w") as fh:
                for op in generate_ops(seed0, args.ops, args.finger_bias, args.string_bias,
                                       cfg.word_bits):
                    fh.write(format_op(op) + "\n")
        if args.hash_audit:
            results = [fuzz(sd, args.ops, args.check_every, args.finger_bias, args.string_bias,
                            cfg, True) for sd in seeds]
        else:
            results = sweep(seeds, args.ops, args.check_every, args.finger_bias,
                            args.string_bias, cfg, args.workers)
        for seed, st in zip(seeds, results):
            d = st.as_dict()
            if not st.ok:
                ok = False
                d["failure"] = locate_failure(seed, args.ops, args.finger_bias,
                                              args.string_bias, cfg)
            reports.append(d)
        _emit(reports[0] if len(reports) == 1 else reports, out)
        return 0 if ok else 1
    if cmd == "bench":
        sizes = [int(x) for x in args.sizes.split(",") if x]
        variants = [v for v in args.sstruct.split(",") if v]
        rows = bench(sizes, variants, args.repeat, _env_seed(args.seed))
        w = csv.DictWriter(out, fieldnames=list(rows[0].keys()) if rows else ["size"])
        w.writeheader()
        w.writerows(rows)
        return 0
    if cmd == "audit":
        cfg = _config_from(args)
        if args.workload:
            with open(args.workload) as fh:
                ops = parse_workload(fh.read())
        else:
            rng = random.Random(_env_seed(args.seed))
            ops = [WorkloadOp("I", rng.getrandbits(cfg.word_bits)) for _ in range(args.n)]
        runner = Runner(cfg, check=True, hash_audit=args.hash_audit)
        t0 = time.perf_counter()
        for i, op in enumerate(ops):
            runner.execute(i, op)
        runner.audit()
        st = runner.finish(t0)
        rep = runner.set.audit()
        d = st.as_dict()
        d["report"] = {"ok": rep.ok, "violations": rep.violations[:20], "notes": rep.notes}
        _emit(d, out)
        return 0 if st.ok else 1
    if cmd == "game":
        from .balance import GameConfig, game_simulate, STRATEGIES
        if args.strategy not in STRATEGIES:
            print(f"unknown strategy {args.strategy!r}; pick from {', '.join(STRATEGIES)}",
                  file=sys.stderr)
            return 2
        res = game_simulate(GameConfig(args.b, args.mu, args.delta), args.strategy,
                            args.rounds, _env_seed(args.seed))
        _emit(res.as_dict(), out)
        return 0 if res.ok else 1
    if cmd == "counters":
        res = counter_game(args.p, args.q, args.rounds, args.strategy, _env_seed(args.seed))
        res["ok"] = res["max_counter"] <= res["bound"]
        _emit(res, out)
        return 0 if res["ok"] else 1
    return 2  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

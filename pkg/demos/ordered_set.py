"""Predecessor search, updates and an audit on a 64-bit ordered set."""

from __future__ import annotations

import random

from expsearch import Config, OrderedSet

rng = random.Random(1)
s = OrderedSet(Config(sstruct_variant="auto"))
for _ in range(50_000):
    s.insert(rng.getrandbits(64))
for k in list(s.keys())[::3]:
    s.delete_key(k)

q = rng.getrandbits(64)
e, visits, lateral = s.search_trace(q)
print(f"{len(s)} keys, height {s.height}")
print(f"predecessor of {q:#x}: {e.key:#x} ({visits} node visits, {lateral} lateral moves)")
print("minimum", hex(s.minimum().key), "maximum", hex(s.maximum().key))
rep = s.audit()
print("audit ok:", rep.ok, {k: rep.notes[k] for k in sorted(rep.notes)[:6]})

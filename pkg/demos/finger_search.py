"""Finger searches, finger updates and a range ladder."""

from __future__ import annotations

from expsearch import Config, Finger, OrderedSet, finger_search, ladder_build, ladder_query
from expsearch.finger import finger_search_trace

s = OrderedSet.from_sorted(range(0, 2_000_000, 2), Config(finger_mode=True))
f = Finger(s.lookup(1000))
for y in (1001, 1100, 50_000, 1_999_999):
    e, peak, vert, lat = finger_search_trace(s, f, y)
    print(f"from 1000 to {y}: answer {e.key}, ascent peak level {peak}, {vert} visits")

# finger inserts next to a moving element touch a bounded number of nodes
for k in range(1000, 41_000, 2):
    u = s.finger_insert(s.lookup(k), k + 1)
    if k % 4 == 0:
        s.finger_delete(u)
print("max nodes touched per finger update:", s.touch_max)

L = ladder_build(s.lookup(500), s)
print("ladder query 500 -> 515:", ladder_query(L, 500, 515).key)
print("finger search 500 -> 515:", finger_search(s, Finger(s.lookup(500)), 515).key)

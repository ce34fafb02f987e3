"""Lexicographic predecessor search over word strings."""

from __future__ import annotations

from expsearch.stringset import StringSet, format_words, parse_words

t = StringSet()
for text in ("a:b", "a:c", "a:c:1", "ff", "a"):
    t.insert(parse_words(text))

for text in ("a:d", "a:c:0", "0", "ff:0"):
    got = t.search(parse_words(text))
    print(f"{text:>7} -> {format_words(got) if got is not None else None}")

node, depth = t.lcp_descend(parse_words("a:d"))
print("longest stored prefix of a:d has", depth, "word(s)")
print(t.stats())

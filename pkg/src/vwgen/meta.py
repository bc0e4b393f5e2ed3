"""Context-free machinery over the metarules.

The metarules of a grammar form an ordinary context-free grammar over small
marks.  This module answers membership (via an all-substrings chart),
enumerates terminal metaproductions in canonical (length, lexicographic)
order under bounds, and classifies metanotion languages as finite or
infinite.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterator

from .model import Chunk, MetaRef, Segment, UnknownMetanotionError, VWGrammar

# A grammar symbol in flattened rule form: ("mark", ch) or ("meta", name).
Symbol = tuple[str, str]

_FULL_LANGUAGE_CAP = 200_000


@dataclass(frozen=True)
class MetaEnumeration:
    """Bounded listing of one metanotion's terminal metaproductions."""

    metanotion: str
    produced: tuple[str, ...]
    exhausted: bool


def _flatten(alt: tuple[Segment, ...]) -> tuple[Symbol, ...]:
    out: list[Symbol] = []
    for seg in alt:
        if isinstance(seg, MetaRef):
            out.append(("meta", seg.name))
        else:
            out.extend(("mark", ch) for ch in seg.text)
    return tuple(out)


class MetaChart:
    """All-substrings Earley recognizer over one mark string.

    Items are seeded for every rule at every position, so one pass answers
    `derives(name, i, j)` for any metanotion and any substring.  Handles
    empty alternatives, left recursion and cycles.
    """

    def __init__(self, rules: tuple[tuple[str, tuple[Symbol, ...]], ...], text: str):
        self.text = text
        n = len(text)
        nrules = len(rules)
        sets: list[set[tuple[int, int, int]]] = [set() for _ in range(n + 1)]
        complete: list[set[tuple[str, int]]] = [set() for _ in range(n + 1)]
        pending: list[list[tuple[int, int, int]]] = [[] for _ in range(n + 2)]
        for i in range(n + 1):
            items = sets[i]
            agenda = pending[i] + [(r, 0, i) for r in range(nrules)]
            while agenda:
                item = agenda.pop()
                if item in items:
                    continue
                items.add(item)
                r, dot, origin = item
                rhs = rules[r][1]
                if dot == len(rhs):
                    key = (rules[r][0], origin)
                    if key in complete[i]:
                        continue
                    complete[i].add(key)
                    expected = ("meta", rules[r][0])
                    for r2, d2, o2 in list(sets[origin]):
                        rhs2 = rules[r2][1]
                        if d2 < len(rhs2) and rhs2[d2] == expected:
                            agenda.append((r2, d2 + 1, o2))
                else:
                    kind, sym = rhs[dot]
                    if kind == "meta":
                        # The expected metanotion may already be complete over
                        # the empty span ending here; advance through it.
                        if (sym, i) in complete[i]:
                            agenda.append((r, dot + 1, origin))
                    elif i < n and sym == text[i]:
                        pending[i + 1].append((r, dot + 1, origin))
        self._complete = complete

    def derives(self, name: str, start: int, end: int) -> bool:
        return (name, start) in self._complete[end]

    def spans(self, name: str) -> frozenset[tuple[int, int]]:
        return frozenset(
            (origin, end)
            for end, done in enumerate(self._complete)
            for lhs, origin in done
            if lhs == name
        )


class MetaEngine:
    """Shared caches for membership, enumeration and finiteness queries."""

    def __init__(self, grammar: VWGrammar):
        self.grammar = grammar
        rules: list[tuple[str, tuple[Symbol, ...]]] = []
        self._expansions: dict[str, list[tuple[Symbol, ...]]] = {}
        for name, rule in grammar.metarules.items():
            alts = [_flatten(a) for a in rule.alternatives]
            self._expansions[name] = alts
            rules.extend((name, a) for a in alts)
        self._rules = tuple(rules)
        self._charts: dict[str, MetaChart] = {}
        self._length_sets: dict[int, dict[str, frozenset[int]]] = {}
        self._feasible: dict[tuple, bool] = {}
        self._full: dict[str, frozenset[str] | None] = {}
        self._finite: dict[str, bool] = {}

    def _require(self, name: str) -> None:
        if name not in self._expansions:
            raise UnknownMetanotionError(name)

    def chart(self, text: str) -> MetaChart:
        found = self._charts.get(text)
        if found is None:
            found = self._charts[text] = MetaChart(self._rules, text)
            if len(self._charts) > 4096:
                self._charts.clear()
        return found

    def contains(self, name: str, text: str) -> bool:
        self._require(name)
        return self.chart(text).derives(name, 0, len(text))

    # -- bounded enumeration -------------------------------------------------

    def _lengths(self, cap: int) -> dict[str, frozenset[int]]:
        cached = self._length_sets.get(cap)
        if cached is not None:
            return cached
        current: dict[str, set[int]] = {name: set() for name in self._expansions}
        changed = True
        while changed:
            changed = False
            for name, alts in self._expansions.items():
                for alt in alts:
                    sums = {0}
                    for kind, sym in alt:
                        if kind == "mark":
                            sums = {s + 1 for s in sums if s + 1 <= cap}
                        else:
                            sums = {
                                s + l
                                for s in sums
                                for l in current[sym]
                                if s + l <= cap
                            }
                        if not sums:
                            break
                    new = sums - current[name]
                    if new:
                        current[name].update(new)
                        changed = True
        frozen = {name: frozenset(v) for name, v in current.items()}
        self._length_sets[cap] = frozen
        return frozen

    def _seq_possible(self, seq: tuple[Symbol, ...], total: int,
                      lengths: dict[str, frozenset[int]]) -> bool:
        key = (seq, total, id(lengths))
        cached = self._feasible.get(key)
        if cached is not None:
            return cached
        feasible = {0}
        answer = False
        for kind, sym in seq:
            if kind == "mark":
                feasible = {s + 1 for s in feasible if s + 1 <= total}
            else:
                feasible = {
                    s + l for s in feasible for l in lengths[sym] if s + l <= total
                }
            if not feasible:
                break
        else:
            answer = total in feasible
        self._feasible[key] = answer
        return answer

    def _gen_seq(self, seq: tuple[Symbol, ...], total: int,
                 stack: frozenset[tuple[str, int]],
                 lengths: dict[str, frozenset[int]]) -> Iterator[str]:
        if not seq:
            if total == 0:
                yield ""
            return
        (kind, sym), rest = seq[0], seq[1:]
        if kind == "mark":
            if total >= 1 and self._seq_possible(rest, total - 1, lengths):
                for tail in self._gen_seq(rest, total - 1, stack, lengths):
                    yield sym + tail
            return
        streams = []
        for l in sorted(lengths[sym]):
            if l > total:
                break
            if not self._seq_possible(rest, total - l, lengths):
                continue
            streams.append(self._gen_cross(sym, l, rest, total - l, stack, lengths))
        yield from heapq.merge(*streams)

    def _gen_cross(self, name: str, l: int, rest: tuple[Symbol, ...], remainder: int,
                   stack: frozenset[tuple[str, int]],
                   lengths: dict[str, frozenset[int]]) -> Iterator[str]:
        for word in self._gen_meta(name, l, stack, lengths):
            for tail in self._gen_seq(rest, remainder, stack, lengths):
                yield word + tail

    def _gen_meta(self, name: str, l: int, stack: frozenset[tuple[str, int]],
                  lengths: dict[str, frozenset[int]]) -> Iterator[str]:
        # Re-entering the same (name, length) cannot introduce new words:
        # every word has a derivation avoiding such a repetition.
        if (name, l) in stack:
            return
        stack = stack | {(name, l)}
        streams = [
            self._gen_seq(alt, l, stack, lengths)
            for alt in self._expansions[name]
            if self._seq_possible(alt, l, lengths)
        ]
        last = None
        for word in heapq.merge(*streams):
            if word != last:
                last = word
                yield word

    def full_language(self, name: str) -> frozenset[str] | None:
        """Entire (finite) language of a metanotion, or None past the cap."""
        self._require(name)
        if name in self._full:
            return self._full[name]
        if not self.is_finite(name):
            self._full[name] = None
            return None
        # Restrict to productions reachable from `name` whose members are all
        # productive; anything else is either irrelevant or infinite.
        productive = self._productive()
        useful = {
            lhs: [a for a in alts
                  if all(k == "mark" or s in productive for k, s in a)]
            for lhs, alts in self._expansions.items()
            if lhs in productive
        }
        relevant: set[str] = set()
        frontier = [name] if name in useful else []
        while frontier:
            cur = frontier.pop()
            if cur in relevant:
                continue
            relevant.add(cur)
            for alt in useful[cur]:
                frontier.extend(s for k, s in alt if k == "meta")
        words: dict[str, set[str]] = {n: set() for n in relevant}
        overflow = False
        changed = True
        while changed and not overflow:
            changed = False
            for lhs in sorted(relevant):
                alts = useful[lhs]
                for alt in alts:
                    combos = {""}
                    for kind, sym in alt:
                        if kind == "mark":
                            combos = {w + sym for w in combos}
                        else:
                            combos = {w + v for w in combos for v in words[sym]}
                        if len(combos) > _FULL_LANGUAGE_CAP:
                            overflow = True
                            break
                    if overflow:
                        break
                    fresh = combos - words[lhs]
                    if fresh:
                        words[lhs].update(fresh)
                        if len(words[lhs]) > _FULL_LANGUAGE_CAP:
                            overflow = True
                            break
                        changed = True
                if overflow:
                    break
        result = None if overflow else frozenset(words.get(name, ()))
        self._full[name] = result
        return result

    def enumerate(self, name: str, max_len: int, max_items: int) -> MetaEnumeration:
        self._require(name)
        if max_len < 0 or max_items < 0:
            raise ValueError("enumeration bounds must be >= 0")
        lengths = self._lengths(max_len)
        produced: list[str] = []
        clipped = False
        for l in sorted(lengths[name]):
            if clipped:
                break
            for word in self._gen_meta(name, l, frozenset(), lengths):
                if len(produced) >= max_items:
                    clipped = True
                    break
                produced.append(word)
        exhausted = False
        if not clipped and self.is_finite(name):
            full = self.full_language(name)
            exhausted = full is not None and len(produced) == len(full)
        return MetaEnumeration(name, tuple(produced), exhausted)

    # -- finiteness ------------------------------------------------------------

    def _productive(self) -> set[str]:
        productive: set[str] = set()
        changed = True
        while changed:
            changed = False
            for name, alts in self._expansions.items():
                if name in productive:
                    continue
                for alt in alts:
                    if all(kind == "mark" or sym in productive for kind, sym in alt):
                        productive.add(name)
                        changed = True
                        break
        return productive

    def is_finite(self, name: str) -> bool:
        self._require(name)
        cached = self._finite.get(name)
        if cached is not None:
            return cached
        productive = self._productive()
        if name not in productive:
            self._finite[name] = True  # empty language
            return True
        useful = {
            lhs: [a for a in alts
                  if all(k == "mark" or s in productive for k, s in a)]
            for lhs, alts in self._expansions.items()
            if lhs in productive
        }
        nonempty: set[str] = set()
        changed = True
        while changed:
            changed = False
            for lhs, alts in useful.items():
                if lhs in nonempty:
                    continue
                for alt in alts:
                    if any(k == "mark" or s in nonempty for k, s in alt):
                        nonempty.add(lhs)
                        changed = True
                        break
        # Edges of the recursion graph; an edge pumps when the surrounding
        # context of the occurrence can derive at least one mark.
        edges: dict[str, set[str]] = {lhs: set() for lhs in useful}
        pumping: set[tuple[str, str]] = set()
        for lhs, alts in useful.items():
            for alt in alts:
                metas = [(idx, s) for idx, (k, s) in enumerate(alt) if k == "meta"]
                for idx, target in metas:
                    edges[lhs].add(target)
                    context_grows = any(
                        (k == "mark") or (j != idx and s in nonempty)
                        for j, (k, s) in enumerate(alt)
                    )
                    if context_grows:
                        pumping.add((lhs, target))
        reach: dict[str, set[str]] = {}
        for node in edges:
            seen = set()
            frontier = [node]
            while frontier:
                cur = frontier.pop()
                for nxt in edges.get(cur, ()):
                    if nxt not in seen:
                        seen.add(nxt)
                        frontier.append(nxt)
            reach[node] = seen
        infinite = any(
            (name == u or u in reach[name]) and (v == u or u in reach[v])
            for u, v in pumping
        )
        self._finite[name] = not infinite
        return not infinite


def meta_contains(grammar: VWGrammar, name: str, text: str) -> bool:
    """True iff `text` is a terminal metaproduction of `name`."""
    return MetaEngine(grammar).contains(name, text)


def enumerate_meta(grammar: VWGrammar, name: str, max_len: int, max_items: int) -> MetaEnumeration:
    """All metaproductions of `name` up to max_len, clipped to max_items."""
    return MetaEngine(grammar).enumerate(name, max_len, max_items)


def is_meta_finite(grammar: VWGrammar, name: str) -> bool:
    """True iff the metanotion's language is finite (the empty one counts)."""
    return MetaEngine(grammar).is_finite(name)

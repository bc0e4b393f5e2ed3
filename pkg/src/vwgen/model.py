"""Core immutable data types for two-level (van Wijngaarden style) grammars.

A grammar has two layers: metarules form a context-free grammar over small
marks, and its words substitute into hyperrules.  Within one hyperrule every
occurrence of the same metanotion must receive the identical substitution
(the uniform replacement rule); `ground` is the operation that performs a
substitution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

SMALL_MARKS = frozenset("abcdefghijklmnopqrstuvwxyz0123456789[]()<>',-")
BIG_MARKS = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZ")

# Suffix that marks a notion as terminal under the symbol-suffix convention.
TERMINAL_MARKER = "symbol"

SYMBOL_SUFFIX = "symbol-suffix"
NO_MATCH = "no-match"
TERMINAL_CONVENTIONS = (SYMBOL_SUFFIX, NO_MATCH)


class GrammarError(Exception):
    """Base class for grammar-level failures."""


class UnknownMetanotionError(GrammarError):
    def __init__(self, name: str):
        super().__init__(f"unknown metanotion: {name}")
        self.name = name


class UnboundMetanotionError(GrammarError):
    def __init__(self, name: str):
        super().__init__(f"metanotion {name} has no binding")
        self.name = name


@dataclass(frozen=True)
class MetaRef:
    """A metanotion reference inside a hypernotion."""

    name: str


@dataclass(frozen=True)
class Chunk:
    """A run of ground small marks inside a hypernotion."""

    text: str


Segment = MetaRef | Chunk


def fuse(segments: Iterable[Segment]) -> tuple[Segment, ...]:
    """Merge adjacent chunks and drop empty ones.

    The result never contains two neighbouring Chunk segments, so segment
    sequences built from arbitrary pieces compare canonically.
    """
    out: list[Segment] = []
    for seg in segments:
        if isinstance(seg, Chunk):
            if not seg.text:
                continue
            if out and isinstance(out[-1], Chunk):
                out[-1] = Chunk(out[-1].text + seg.text)
                continue
        out.append(seg)
    return tuple(out)


@dataclass(frozen=True)
class Hypernotion:
    """An alternating sequence of metanotion references and mark chunks.

    A hypernotion with no MetaRef segments is ground: it denotes exactly one
    protonotion.  With metanotions it denotes the (possibly infinite) set of
    protonotions reachable by substitution.
    """

    segments: tuple[Segment, ...] = ()

    @classmethod
    def of(cls, *segments: Segment) -> "Hypernotion":
        return cls(fuse(segments))

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    @property
    def is_ground(self) -> bool:
        return all(isinstance(s, Chunk) for s in self.segments)

    def metanotion_names(self) -> tuple[str, ...]:
        """Referenced metanotion names, in first-occurrence order."""
        seen: dict[str, None] = {}
        for seg in self.segments:
            if isinstance(seg, MetaRef):
                seen.setdefault(seg.name)
        return tuple(seen)

    def ground_text(self) -> str:
        if not self.is_ground:
            raise UnboundMetanotionError(self.metanotion_names()[0])
        return "".join(s.text for s in self.segments)  # type: ignore[union-attr]

    def concat(self, other: "Hypernotion") -> "Hypernotion":
        return Hypernotion(fuse(self.segments + other.segments))


def ground(h: Hypernotion, binding: Mapping[str, str]) -> str:
    """Substitute every metanotion reference and concatenate.

    Raises UnboundMetanotionError if a referenced metanotion has no entry.
    """
    parts: list[str] = []
    for seg in h.segments:
        if isinstance(seg, Chunk):
            parts.append(seg.text)
        else:
            try:
                parts.append(binding[seg.name])
            except KeyError:
                raise UnboundMetanotionError(seg.name) from None
    return "".join(parts)


@dataclass(frozen=True)
class Metarule:
    """One metanotion and its context-free alternatives.

    Each alternative is a segment sequence; member boundaries from the
    source text carry no meaning beyond tokenization.
    """

    lhs: str
    alternatives: tuple[tuple[Segment, ...], ...]

    def metanotion_names(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for alt in self.alternatives:
            for seg in alt:
                if isinstance(seg, MetaRef):
                    seen.setdefault(seg.name)
        return tuple(seen)


@dataclass(frozen=True)
class Hyperrule:
    """A rule schema: one left-side hypernotion, alternatives of members."""

    lhs: Hypernotion
    alternatives: tuple[tuple[Hypernotion, ...], ...]

    def metanotion_names(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for name in self.lhs.metanotion_names():
            seen.setdefault(name)
        for alt in self.alternatives:
            for member in alt:
                for name in member.metanotion_names():
                    seen.setdefault(name)
        return tuple(seen)


@dataclass(frozen=True)
class VWGrammar:
    """A validated two-level grammar.

    `metarules` preserves declaration order; `start` is the ground left side
    of the first hyperrule.  All contained values are immutable and safe to
    share between threads.
    """

    metarules: Mapping[str, Metarule]
    hyperrules: tuple[Hyperrule, ...]
    start: Hypernotion
    small_alphabet: frozenset[str] = SMALL_MARKS
    terminal_convention: str = SYMBOL_SUFFIX

    @property
    def metanotion_names(self) -> frozenset[str]:
        return frozenset(self.metarules)

    @property
    def start_text(self) -> str:
        return self.start.ground_text()


@dataclass(frozen=True)
class Notion:
    """One element of a sentential form: a protonotion plus terminal status."""

    text: str
    terminal: bool = False


@dataclass(frozen=True)
class SententialForm:
    notions: tuple[Notion, ...] = ()

    @classmethod
    def open(cls, texts: Iterable[str]) -> "SententialForm":
        return cls(tuple(Notion(t) for t in texts if t))

    def leftmost_open(self) -> int | None:
        for i, n in enumerate(self.notions):
            if not n.terminal:
                return i
        return None

    @property
    def is_word(self) -> bool:
        return all(n.terminal for n in self.notions)

    def texts(self) -> tuple[str, ...]:
        return tuple(n.text for n in self.notions)


BindingItems = tuple[tuple[str, str], ...]


def binding_items(binding: Mapping[str, str]) -> BindingItems:
    """Canonical (name-sorted) tuple view of a binding, usable in hashes."""
    return tuple(sorted(binding.items()))


@dataclass(frozen=True)
class TraceStep:
    """One derivation event and the sentential form it produced.

    rule_index/alt_index of -1 record a terminal-marking step (no hyperrule
    applied, the leftmost open notion was converted to a terminal).
    """

    form: SententialForm
    rule_index: int
    notion_index: int
    alt_index: int
    binding: BindingItems = ()


@dataclass(frozen=True)
class DerivationTrace:
    steps: tuple[TraceStep, ...] = ()

    @property
    def applications(self) -> int:
        """Number of genuine hyperrule applications (terminal marks excluded)."""
        return sum(1 for s in self.steps if s.rule_index >= 0)

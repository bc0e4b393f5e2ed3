"""Match ground notions against hyperrule left sides and instantiate rules.

Matching a protonotion against a hypernotion means segmenting the target so
that chunk segments match literally and every metanotion segment covers a
terminal metaproduction of its metanotion, with repeated metanotions bound
to identical substrings.  Each consistent segmentation yields a binding; a
binding applied to a whole hyperrule produces one ground production rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .meta import MetaEngine
from .model import (
    BindingItems,
    Chunk,
    Hyperrule,
    MetaRef,
    UnboundMetanotionError,
    VWGrammar,
    binding_items,
    ground,
)
from .notation import render_protonotion


@dataclass(frozen=True)
class MatchLimits:
    """Caps keeping matching finite on adversarial grammars."""

    max_solutions: int = 64
    max_meta_len: int = 32


#: (segment index, start offset, end offset) over the target protonotion.
SegmentationEntry = tuple[int, int, int]


@dataclass(frozen=True)
class MatchSolution:
    binding: BindingItems
    segmentation: tuple[SegmentationEntry, ...]

    @property
    def mapping(self) -> dict[str, str]:
        return dict(self.binding)


@dataclass(frozen=True)
class MatchResult:
    solutions: tuple[MatchSolution, ...]
    truncated: tuple[str, ...] = ()


@dataclass(frozen=True)
class GroundRule:
    """A hyperrule with one binding applied throughout."""

    lhs: str
    rhs_alternatives: tuple[tuple[str, ...], ...]


def match_lhs(
    grammar: VWGrammar,
    target: str,
    rule: Hyperrule,
    limits: MatchLimits = MatchLimits(),
    engine: MetaEngine | None = None,
) -> MatchResult:
    """All ways the rule's left side can produce `target`.

    Solutions come in canonical order (segmentation offsets compared
    lexicographically).  Hitting a limit is reported through `truncated`,
    never as an exception.
    """
    segments = rule.lhs.segments
    n = len(target)
    if rule.lhs.is_ground:
        if rule.lhs.ground_text() == target:
            seg_entries = []
            pos = 0
            for i, seg in enumerate(segments):
                seg_entries.append((i, pos, pos + len(seg.text)))  # type: ignore[union-attr]
                pos += len(seg.text)  # type: ignore[union-attr]
            return MatchResult((MatchSolution((), tuple(seg_entries)),))
        return MatchResult(())

    if engine is None:
        engine = MetaEngine(grammar)
    chart = engine.chart(target)
    truncated: set[str] = set()
    solutions: list[MatchSolution] = []
    binding: dict[str, str] = {}
    entries: list[SegmentationEntry] = []

    # End offsets each segment may reach from a given start offset.
    def ends(seg_index: int, start: int) -> list[int]:
        seg = segments[seg_index]
        if isinstance(seg, Chunk):
            stop = start + len(seg.text)
            if stop <= n and target.startswith(seg.text, start):
                return [stop]
            return []
        out = []
        for end in range(start, n + 1):
            if chart.derives(seg.name, start, end):
                if end - start > limits.max_meta_len:
                    truncated.add("meta-len")
                    continue
                out.append(end)
        return out

    # Positions from which the remaining segments can still reach the end.
    viable: list[set[int]] = [set() for _ in range(len(segments) + 1)]
    viable[len(segments)] = {n}
    for i in range(len(segments) - 1, -1, -1):
        seg = segments[i]
        for start in range(n + 1):
            if isinstance(seg, Chunk):
                stop = start + len(seg.text)
                if stop <= n and target.startswith(seg.text, start) and stop in viable[i + 1]:
                    viable[i].add(start)
            else:
                for end in range(start, n + 1):
                    if end in viable[i + 1] and chart.derives(seg.name, start, end):
                        viable[i].add(start)
                        break

    def walk(seg_index: int, pos: int) -> None:
        if "solutions" in truncated:
            return
        if seg_index == len(segments):
            if pos == n:
                if len(solutions) >= limits.max_solutions:
                    truncated.add("solutions")
                else:
                    solutions.append(MatchSolution(binding_items(binding), tuple(entries)))
            return
        seg = segments[seg_index]
        for end in ends(seg_index, pos):
            if end not in viable[seg_index + 1]:
                continue
            bound_here = False
            if isinstance(seg, MetaRef):
                piece = target[pos:end]
                already = binding.get(seg.name)
                if already is not None:
                    if already != piece:
                        continue
                else:
                    binding[seg.name] = piece
                    bound_here = True
            entries.append((seg_index, pos, end))
            walk(seg_index + 1, end)
            entries.pop()
            if bound_here:
                del binding[seg.name]

    if 0 in viable[0]:
        walk(0, 0)
    return MatchResult(tuple(solutions), tuple(sorted(truncated)))


def consistent_across_rule(rule: Hyperrule, solution: MatchSolution) -> dict[str, str]:
    """The rule-wide binding implied by one left-side match.

    Metanotions that occur only on the right side stay unbound here; they
    are free and get expanded during derivation.
    """
    binding = solution.mapping
    for name in rule.lhs.metanotion_names():
        if name not in binding:
            raise UnboundMetanotionError(name)
    return binding


def free_metanotions(rule: Hyperrule, binding: Mapping[str, str]) -> tuple[str, ...]:
    """Names used in the rule that the binding leaves open, sorted."""
    return tuple(sorted(set(rule.metanotion_names()) - set(binding)))


def instantiate(grammar: VWGrammar, rule: Hyperrule, binding: Mapping[str, str]) -> GroundRule:
    """Apply one complete binding to every hypernotion of the rule."""
    return GroundRule(
        lhs=ground(rule.lhs, binding),
        rhs_alternatives=tuple(
            tuple(ground(member, binding) for member in alt)
            for alt in rule.alternatives
        ),
    )


def render_ground_rule(rule: GroundRule) -> str:
    """One-line rendering in rule-table style ("aii : a symbol, ai.")."""
    alts = "; ".join(
        ", ".join(render_protonotion(m, spaced_marker=True) if m else "EMPTY" for m in alt)
        for alt in rule.rhs_alternatives
    )
    return f"{render_protonotion(rule.lhs)} : {alts}."

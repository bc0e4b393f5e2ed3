"""Bounded word generation, random derivation and word transformation.

Generation keeps a queue of sentential forms.  One step rewrites the
leftmost open notion: every hyperrule left side is matched against it, and
each (match, alternative, free-metanotion expansion) becomes a successor in
which the notion is replaced by the grounded members.  A notion nothing
matches becomes a terminal: under the symbol-suffix convention only notions
ending in the terminal marker survive (the marker is stripped), under the
no-match convention every unmatched notion is terminal as written.

Bounds make the undecidable tractable: `max_steps` caps the rewrite depth of
any single notion's ancestry, `free_meta_len` caps expansions chosen for
metanotions that occur only on a right side, and queue/word/length budgets
cap the search as a whole.  Exceeding a budget sets a truncation flag
instead of failing.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .matching import MatchLimits, MatchResult, match_lhs
from .meta import MetaEngine
from .model import (
    SYMBOL_SUFFIX,
    TERMINAL_MARKER,
    DerivationTrace,
    GrammarError,
    Hyperrule,
    Notion,
    SententialForm,
    TraceStep,
    VWGrammar,
    binding_items,
    ground,
)

_FREE_EXPANSION_CAP = 512
_RANDOM_RESTARTS = 32

EXHAUSTIVE = "exhaustive"
RANDOM = "random"


class NoDerivationError(GrammarError):
    """Raised when a transformation cannot produce any word within bounds."""


@dataclass(frozen=True)
class GenerationConfig:
    mode: str = EXHAUSTIVE
    seed: int = 0
    max_steps: int = 200
    max_forms: int = 100_000
    max_notion_len: int = 64
    max_words: int = 1000
    free_meta_len: int = 8
    echo_fixpoint: bool = False

    def __post_init__(self) -> None:
        if self.mode not in (EXHAUSTIVE, RANDOM):
            raise ValueError(f"unknown mode: {self.mode!r}")
        for name in ("max_steps", "max_forms", "max_notion_len", "max_words",
                     "free_meta_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class GeneratedWord:
    tokens: tuple[str, ...]
    trace: DerivationTrace


@dataclass(frozen=True)
class GenResult:
    words: tuple[GeneratedWord, ...]
    truncated: tuple[str, ...] = ()

    def token_set(self) -> set[tuple[str, ...]]:
        return {w.tokens for w in self.words}

    def rendered(self, convention: str) -> list[str]:
        return [render_word(w.tokens, convention) for w in self.words]


@dataclass(frozen=True)
class SplitResult:
    """Per-part outputs of coordinated generation, aligned by derivation."""

    parts: tuple[GenResult, ...]
    shared: tuple[dict[str, str], ...]

    @property
    def k(self) -> int:
        return len(self.parts)


def render_word(tokens: Iterable[str], convention: str) -> str:
    """Symbol-suffix terminals are marks and concatenate; token terminals
    keep their identity and are blank-separated."""
    if convention == SYMBOL_SUFFIX:
        return "".join(tokens)
    return " ".join(tokens)


@dataclass(frozen=True)
class _Item:
    form: SententialForm
    depths: tuple[int, ...]
    parts: tuple[int, ...]
    trace: tuple[TraceStep, ...]
    applications: int

    def key(self) -> tuple:
        return (self.form, self.depths)


class _Deriver:
    """Successor computation shared by all generation modes."""

    def __init__(self, grammar: VWGrammar, cfg: GenerationConfig):
        self.grammar = grammar
        self.cfg = cfg
        self.engine = MetaEngine(grammar)
        self.truncated: dict[str, None] = {}
        self.dead_ends = 0
        self._match_cache: dict[tuple[str, int], MatchResult] = {}
        self._expansion_cache: dict[str, tuple[str, ...]] = {}

    def flag(self, reason: str) -> None:
        self.truncated.setdefault(reason)

    def _match(self, text: str, rule_index: int) -> MatchResult:
        key = (text, rule_index)
        found = self._match_cache.get(key)
        if found is None:
            found = match_lhs(
                self.grammar, text, self.grammar.hyperrules[rule_index],
                MatchLimits(), self.engine)
            self._match_cache[key] = found
        return found

    def _free_choices(self, name: str) -> tuple[str, ...]:
        found = self._expansion_cache.get(name)
        if found is None:
            enumeration = self.engine.enumerate(
                name, self.cfg.free_meta_len, _FREE_EXPANSION_CAP)
            if not enumeration.exhausted:
                if len(enumeration.produced) >= _FREE_EXPANSION_CAP:
                    self.flag("free-meta-items")
                else:
                    self.flag("free-meta-len")
            found = self._expansion_cache[name] = enumeration.produced
        return found

    def successors(self, item: _Item) -> list[_Item]:
        index = item.form.leftmost_open()
        if index is None:
            return []
        notion = item.form.notions[index]
        matches: list[tuple[int, Hyperrule, object]] = []
        for rule_index, rule in enumerate(self.grammar.hyperrules):
            result = self._match(notion.text, rule_index)
            for reason in result.truncated:
                self.flag(f"match-{reason}")
            matches.extend((rule_index, rule, sol) for sol in result.solutions)

        if not matches:
            return self._mark_terminal(item, index)
        if item.depths[index] >= self.cfg.max_steps:
            self.flag("max-steps")
            return []

        out: list[_Item] = []
        for rule_index, rule, solution in matches:
            base = solution.mapping  # type: ignore[attr-defined]
            for alt_index, alt in enumerate(rule.alternatives):
                names = {n for member in alt for n in member.metanotion_names()}
                free = sorted(names - set(base))
                pools = [self._free_choices(n) for n in free]
                if any(not pool for pool in pools):
                    continue
                for combo in itertools.product(*pools):
                    binding = dict(base)
                    binding.update(zip(free, combo))
                    successor = self._apply(item, index, rule_index, alt_index,
                                            alt, binding)
                    if successor is not None:
                        out.append(successor)
        return out

    def _apply(self, item: _Item, index: int, rule_index: int, alt_index: int,
               alt: tuple, binding: dict[str, str]) -> _Item | None:
        members = [ground(member, binding) for member in alt]
        if any(len(m) > self.cfg.max_notion_len for m in members):
            self.flag("max-notion-len")
            return None
        depth = item.depths[index] + 1
        # The very first application from a single start notion fixes the
        # top-level part each member (and its descendants) belongs to.
        if item.applications == 0 and len(item.form.notions) == 1:
            inserted = [(Notion(m), depth, ordinal + 1)
                        for ordinal, m in enumerate(members) if m]
        else:
            inserted = [(Notion(m), depth, item.parts[index]) for m in members if m]
        notions = (item.form.notions[:index]
                   + tuple(n for n, _, _ in inserted)
                   + item.form.notions[index + 1:])
        depths = (item.depths[:index]
                  + tuple(d for _, d, _ in inserted)
                  + item.depths[index + 1:])
        parts = (item.parts[:index]
                 + tuple(p for _, _, p in inserted)
                 + item.parts[index + 1:])
        form = SententialForm(notions)
        step = TraceStep(form, rule_index, index, alt_index, binding_items(binding))
        return _Item(form, depths, parts, item.trace + (step,),
                     item.applications + 1)

    def _mark_terminal(self, item: _Item, index: int) -> list[_Item]:
        notion = item.form.notions[index]
        text = notion.text
        if self.grammar.terminal_convention == SYMBOL_SUFFIX:
            if not text.endswith(TERMINAL_MARKER):
                self.dead_ends += 1
                return []
            text = text[: -len(TERMINAL_MARKER)]
        if text:
            notions = (item.form.notions[:index] + (Notion(text, terminal=True),)
                       + item.form.notions[index + 1:])
            depths = item.depths
            parts = item.parts
        else:
            notions = item.form.notions[:index] + item.form.notions[index + 1:]
            depths = item.depths[:index] + item.depths[index + 1:]
            parts = item.parts[:index] + item.parts[index + 1:]
        form = SententialForm(notions)
        step = TraceStep(form, -1, index, -1)
        return [_Item(form, depths, parts, item.trace + (step,), item.applications)]


def _start_item(texts: Sequence[str]) -> _Item:
    form = SententialForm.open(texts)
    n = len(form.notions)
    return _Item(form, (0,) * n, (0,) * n, (), 0)


def _exhaustive(deriver: _Deriver, start: _Item) -> list[_Item]:
    cfg = deriver.cfg
    queue: list[_Item] = [start]
    head = 0
    seen = {start.key()}
    finished: list[_Item] = []
    emitted: set[tuple[str, ...]] = set()
    while head < len(queue):
        item = queue[head]
        head += 1
        if item.form.is_word:
            tokens = item.form.texts()
            if tokens not in emitted:
                emitted.add(tokens)
                finished.append(item)
                if len(finished) >= cfg.max_words:
                    if head < len(queue):
                        deriver.flag("max-words")
                    break
            continue
        for successor in deriver.successors(item):
            if len(queue) >= cfg.max_forms:
                deriver.flag("max-forms")
                break
            key = successor.key()
            if key not in seen:
                seen.add(key)
                queue.append(successor)
    return finished


def _random(deriver: _Deriver, start: _Item) -> list[_Item]:
    cfg = deriver.cfg
    master = random.Random(cfg.seed)
    finished: list[_Item] = []
    for _ in range(cfg.max_words):
        walk = random.Random(master.getrandbits(64))
        item = start
        restarts = 0
        while True:
            if item.form.is_word:
                finished.append(item)
                break
            successors = deriver.successors(item)
            if not successors:
                restarts += 1
                if restarts > _RANDOM_RESTARTS:
                    deriver.flag("dead-ends")
                    break
                item = start
                continue
            item = successors[walk.randrange(len(successors))]
    return finished


def _run(grammar: VWGrammar, cfg: GenerationConfig, start_texts: Sequence[str]) -> tuple[list[_Item], _Deriver]:
    deriver = _Deriver(grammar, cfg)
    start = _start_item(start_texts)
    if not start.form.notions:
        raise ValueError("the starting form must contain at least one notion")
    if cfg.mode == RANDOM:
        items = _random(deriver, start)
    else:
        items = _exhaustive(deriver, start)
    return items, deriver


def _to_result(items: Iterable[_Item], deriver: _Deriver) -> GenResult:
    words = tuple(
        GeneratedWord(item.form.texts(), DerivationTrace(item.trace))
        for item in items
    )
    return GenResult(words, tuple(deriver.truncated))


def step(
    grammar: VWGrammar, form: SententialForm, cfg: GenerationConfig | None = None
) -> list[tuple[SententialForm, TraceStep]]:
    """Successor forms of one rewriting step on the leftmost open notion."""
    cfg = cfg or GenerationConfig()
    deriver = _Deriver(grammar, cfg)
    n = len(form.notions)
    item = _Item(form, (0,) * n, (0,) * n, (), 0)
    return [(s.form, s.trace[-1]) for s in deriver.successors(item)]


def generate(grammar: VWGrammar, cfg: GenerationConfig | None = None) -> GenResult:
    """Words of the grammar's language reachable within the configured bounds."""
    cfg = cfg or GenerationConfig()
    items, deriver = _run(grammar, cfg, [grammar.start_text])
    return _to_result(items, deriver)


def transform(
    grammar: VWGrammar, input_notions: Sequence[str], cfg: GenerationConfig | None = None
) -> GenResult:
    """Rewrite an input word (used as the starting form) into variants.

    A "variant" in which no hyperrule ever applied is just the input echoed
    back; those are suppressed unless cfg.echo_fixpoint asks for them.
    Raises NoDerivationError when nothing at all can be produced.
    """
    cfg = cfg or GenerationConfig()
    if not [t for t in input_notions if t]:
        raise ValueError("transform needs a nonempty input word")
    items, deriver = _run(grammar, cfg, input_notions)
    if not cfg.echo_fixpoint:
        items = [item for item in items if item.applications > 0]
    if not items:
        raise NoDerivationError(
            "no variant derivable within bounds"
            + (f" ({deriver.dead_ends} dead ends)" if deriver.dead_ends else ""))
    return _to_result(items, deriver)


def split_parts(grammar: VWGrammar, cfg: GenerationConfig | None = None) -> SplitResult:
    """Coordinated generation: one output per top-level member of the start rule.

    Every complete derivation is partitioned by which member of the first
    applied alternative each terminal descends from; the binding chosen in
    that first step (the information shared between parts) is reported
    alongside.
    """
    cfg = cfg or GenerationConfig()
    items, deriver = _run(grammar, cfg, [grammar.start_text])
    items = [item for item in items if item.applications > 0]
    if not items:
        raise NoDerivationError("no complete derivation within bounds")
    first = items[0].trace[0]
    k = len(grammar.hyperrules[first.rule_index].alternatives[first.alt_index])
    per_part: list[list[GeneratedWord]] = [[] for _ in range(k)]
    shared: list[dict[str, str]] = []
    for item in items:
        head = item.trace[0]
        width = len(grammar.hyperrules[head.rule_index].alternatives[head.alt_index])
        if width != k:
            raise NoDerivationError(
                "derivations disagree on the number of top-level parts")
        trace = DerivationTrace(item.trace)
        shared.append(dict(head.binding))
        for part in range(k):
            tokens = tuple(
                notion.text
                for notion, p in zip(item.form.notions, item.parts)
                if p == part + 1
            )
            per_part[part].append(GeneratedWord(tokens, trace))
    flags = tuple(deriver.truncated)
    return SplitResult(
        parts=tuple(GenResult(tuple(words), flags) for words in per_part),
        shared=tuple(shared),
    )


def replay(
    grammar: VWGrammar, start: SententialForm, trace: DerivationTrace
) -> SententialForm:
    """Re-apply a trace step by step, checking each recorded form."""
    form = start
    for step_no, entry in enumerate(trace.steps):
        index = entry.notion_index
        notion = form.notions[index]
        if entry.rule_index < 0:
            text = notion.text
            if grammar.terminal_convention == SYMBOL_SUFFIX:
                if not text.endswith(TERMINAL_MARKER):
                    raise GrammarError(f"step {step_no}: cannot mark {text!r} terminal")
                text = text[: -len(TERMINAL_MARKER)]
            new = (Notion(text, terminal=True),) if text else ()
        else:
            rule = grammar.hyperrules[entry.rule_index]
            binding = dict(entry.binding)
            members = [ground(m, binding) for m in rule.alternatives[entry.alt_index]]
            new = tuple(Notion(m) for m in members if m)
        form = SententialForm(form.notions[:index] + new + form.notions[index + 1:])
        if form != entry.form:
            raise GrammarError(f"step {step_no}: replay diverged from the trace")
    return form

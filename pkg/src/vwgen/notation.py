"""Parse, validate and render the textual two-level grammar notation.

File format (.vw): metarules are written `NAME :: alt; alt.` and hyperrules
`hypernotion : member, member; alt.`  Alternatives split on `;`, hyperrule
members on `,`, metarule members on blanks; every rule ends with `.`.
`EMPTY` stands for the empty sequence, `','` for a literal comma mark, and
`#` starts a comment.  Blanks are insignificant everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import (
    BIG_MARKS,
    SMALL_MARKS,
    SYMBOL_SUFFIX,
    TERMINAL_CONVENTIONS,
    TERMINAL_MARKER,
    Chunk,
    GrammarError,
    Hypernotion,
    Hyperrule,
    MetaRef,
    Metarule,
    Segment,
    UnknownMetanotionError,
    VWGrammar,
    fuse,
)

EMPTY_TOKEN = "EMPTY"


class AmbiguousHypernotionError(GrammarError):
    def __init__(self, body: str):
        super().__init__(f"hypernotion {body!r} tokenizes in more than one way")
        self.body = body


@dataclass(frozen=True)
class SourceSpan:
    line: int
    col: int
    length: int = 1


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: SourceSpan

    def __str__(self) -> str:
        return f"{self.span.line}:{self.span.col}: [{self.code}] {self.message}"


@dataclass
class ValidationReport:
    errors: list[Diagnostic] = field(default_factory=list)
    warnings: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _tile(run: str, names: frozenset[str]) -> list[tuple[str, ...]]:
    """All ways to cover an uppercase run with metanotion names (up to 2)."""
    results: list[tuple[str, ...]] = []

    def go(pos: int, acc: list[str]) -> None:
        if len(results) >= 2:
            return
        if pos == len(run):
            results.append(tuple(acc))
            return
        for name in names:
            if run.startswith(name, pos):
                acc.append(name)
                go(pos + len(name), acc)
                acc.pop()

    go(0, [])
    return results


class _Scanner:
    """Turns one member body into segments, collecting positioned errors."""

    def __init__(self, source: "_Source", names: frozenset[str], alphabet: frozenset[str]):
        self.source = source
        self.names = names
        self.alphabet = alphabet

    def scan(self, start: int, end: int) -> tuple[tuple[Segment, ...], list[Diagnostic]]:
        text = self.source.text
        errors: list[Diagnostic] = []
        segments: list[Segment] = []
        chunk: list[str] = []

        def flush_chunk() -> None:
            if chunk:
                segments.append(Chunk("".join(chunk)))
                chunk.clear()

        i = start
        while i < end:
            ch = text[i]
            if ch in " \t\r\n":
                i += 1
                continue
            if ch in BIG_MARKS:
                run_start = i
                while i < end and text[i] in BIG_MARKS:
                    i += 1
                run = text[run_start:i]
                if run == EMPTY_TOKEN:
                    errors.append(Diagnostic(
                        "empty-misuse",
                        "EMPTY must stand alone as a whole member",
                        self.source.span(run_start, len(run))))
                    continue
                tilings = _tile(run, self.names)
                if not tilings:
                    errors.append(Diagnostic(
                        "undefined-metanotion",
                        f"{run!r} is not a sequence of defined metanotions",
                        self.source.span(run_start, len(run))))
                elif len(tilings) > 1:
                    errors.append(Diagnostic(
                        "ambiguous-hypernotion",
                        f"{run!r} tokenizes in more than one way "
                        f"(e.g. {' '.join(tilings[0])} / {' '.join(tilings[1])})",
                        self.source.span(run_start, len(run))))
                else:
                    flush_chunk()
                    segments.extend(MetaRef(n) for n in tilings[0])
                continue
            if ch == "'" and text.startswith("','", i):
                chunk.append(",")
                i += 3
                continue
            if ch in self.alphabet and ch != ",":
                chunk.append(ch)
                i += 1
                continue
            errors.append(Diagnostic(
                "bad-mark",
                f"character {ch!r} is not a small syntactic mark here",
                self.source.span(i, 1)))
            i += 1
        flush_chunk()
        return fuse(segments), errors


class _Source:
    """Raw grammar text plus offset/line bookkeeping; comments blanked out."""

    def __init__(self, raw: str):
        self.raw = raw
        chars = list(raw)
        i = 0
        while i < len(chars):
            if chars[i] == "#":
                while i < len(chars) and chars[i] != "\n":
                    chars[i] = " "
                    i += 1
            else:
                i += 1
        self.text = "".join(chars)
        self.line_starts = [0]
        for j, ch in enumerate(raw):
            if ch == "\n":
                self.line_starts.append(j + 1)

    def span(self, offset: int, length: int = 1) -> SourceSpan:
        lo, hi = 0, len(self.line_starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.line_starts[mid] <= offset:
                lo = mid
            else:
                hi = mid - 1
        return SourceSpan(lo + 1, offset - self.line_starts[lo] + 1, max(1, length))


def _split_outside_quotes(text: str, start: int, end: int, sep: str) -> list[tuple[int, int]]:
    """Ranges between `sep` occurrences, treating ',' inside quotes as opaque."""
    pieces: list[tuple[int, int]] = []
    piece_start = start
    i = start
    while i < end:
        if text.startswith("','", i):
            i += 3
            continue
        if text[i] == sep:
            pieces.append((piece_start, i))
            piece_start = i + 1
        i += 1
    pieces.append((piece_start, end))
    return pieces


def _is_blank(text: str, start: int, end: int) -> bool:
    return not text[start:end].strip()


def _normalized(text: str, start: int, end: int) -> str:
    return "".join(text[start:end].split())


def tokenize_hypernotion(body: str, names: frozenset[str] | set[str]) -> Hypernotion:
    """Decompose one hypernotion body against a metanotion name set.

    Raises AmbiguousHypernotionError when more than one decomposition exists
    and UnknownMetanotionError when an uppercase run cannot be tiled at all.
    """
    source = _Source(body)
    scanner = _Scanner(source, frozenset(names), SMALL_MARKS)
    segments, errors = scanner.scan(0, len(body))
    for err in errors:
        if err.code == "ambiguous-hypernotion":
            raise AmbiguousHypernotionError(body)
        if err.code == "undefined-metanotion":
            raise UnknownMetanotionError(err.message.split("'")[1])
        raise GrammarError(err.message)
    return Hypernotion(segments)


@dataclass
class _RawRule:
    start: int          # offset of first non-blank char
    length: int
    lhs: tuple[int, int]
    rhs: tuple[int, int]
    is_meta: bool


def _split_rules(source: _Source, report: ValidationReport) -> list[_RawRule]:
    text = source.text
    rules: list[_RawRule] = []
    pos = 0
    while pos < len(text):
        dot = text.find(".", pos)
        if dot < 0:
            if not _is_blank(text, pos, len(text)):
                report.errors.append(Diagnostic(
                    "syntax", "text after the last '.' is not a rule",
                    source.span(pos + len(text[pos:]) - len(text[pos:].lstrip()))))
            break
        start, end = pos, dot
        while start < end and text[start] in " \t\r\n":
            start += 1
        if start == end:
            report.errors.append(Diagnostic(
                "syntax", "empty rule before '.'", source.span(dot)))
            pos = dot + 1
            continue
        colon = text.find(":", start, end)
        if colon < 0:
            report.errors.append(Diagnostic(
                "syntax", "rule has no ':' separator", source.span(start, end - start)))
            pos = dot + 1
            continue
        is_meta = colon + 1 < end and text[colon + 1] == ":"
        rhs_start = colon + (2 if is_meta else 1)
        rules.append(_RawRule(start, end - start, (start, colon), (rhs_start, end), is_meta))
        pos = dot + 1
    return rules


def validate_grammar(text: str, terminal_convention: str = SYMBOL_SUFFIX) -> ValidationReport:
    report = ValidationReport()
    _parse(text, terminal_convention, report)
    return report


def parse_grammar(
    text: str, terminal_convention: str = SYMBOL_SUFFIX
) -> VWGrammar | ValidationReport:
    """Parse grammar source; returns the grammar, or the report on any error."""
    report = ValidationReport()
    grammar = _parse(text, terminal_convention, report)
    if report.errors or grammar is None:
        return report
    return grammar


def _parse(
    text: str, terminal_convention: str, report: ValidationReport
) -> VWGrammar | None:
    if terminal_convention not in TERMINAL_CONVENTIONS:
        raise ValueError(f"unknown terminal convention: {terminal_convention!r}")
    source = _Source(text)
    raw_rules = _split_rules(source, report)

    # Pass 1: metarule names, so hypernotions can be tokenized in pass 2.
    names: dict[str, int] = {}
    for rule in raw_rules:
        if not rule.is_meta:
            continue
        lhs_text = _normalized(source.text, *rule.lhs)
        span = source.span(rule.lhs[0], rule.lhs[1] - rule.lhs[0])
        if not lhs_text or any(ch not in BIG_MARKS for ch in lhs_text):
            report.errors.append(Diagnostic(
                "syntax", f"metarule name {lhs_text!r} must be uppercase letters", span))
        elif lhs_text == EMPTY_TOKEN:
            report.errors.append(Diagnostic(
                "syntax", "EMPTY is reserved and cannot name a metanotion", span))
        elif lhs_text in names:
            report.errors.append(Diagnostic(
                "duplicate-metarule", f"metanotion {lhs_text} is defined twice", span))
        else:
            names[lhs_text] = rule.lhs[0]
    name_set = frozenset(names)
    scanner = _Scanner(source, name_set, SMALL_MARKS)

    def scan_member(start: int, end: int) -> tuple[Segment, ...] | None:
        segments, errors = scanner.scan(start, end)
        report.errors.extend(errors)
        return None if errors else segments

    metarules: dict[str, Metarule] = {}
    hyperrules: list[Hyperrule] = []
    for rule in raw_rules:
        rhs_pieces = _split_outside_quotes(source.text, *rule.rhs, sep=";")
        if rule.is_meta:
            lhs_text = _normalized(source.text, *rule.lhs)
            if lhs_text not in names or names.get(lhs_text) != rule.lhs[0]:
                continue  # reported in pass 1
            alts: list[tuple[Segment, ...]] = []
            broken = False
            for alt_start, alt_end in rhs_pieces:
                comma_pieces = _split_outside_quotes(source.text, alt_start, alt_end, sep=",")
                if len(comma_pieces) > 1:
                    report.errors.append(Diagnostic(
                        "syntax", "bare ',' in a metarule; write ',' quoted",
                        source.span(comma_pieces[0][1])))
                    broken = True
                    continue
                norm = _normalized(source.text, alt_start, alt_end)
                if norm == EMPTY_TOKEN:
                    alts.append(())
                    continue
                if not norm:
                    report.errors.append(Diagnostic(
                        "syntax", "empty metarule alternative (use EMPTY)",
                        source.span(alt_start)))
                    broken = True
                    continue
                segs = scan_member(alt_start, alt_end)
                if segs is None:
                    broken = True
                else:
                    alts.append(segs)
            if not broken and alts:
                metarules[lhs_text] = Metarule(lhs_text, tuple(alts))
        else:
            lhs_segs = scan_member(*rule.lhs)
            if lhs_segs is None:
                continue
            if not lhs_segs:
                report.errors.append(Diagnostic(
                    "syntax", "hyperrule left side may not be empty",
                    source.span(rule.start)))
                continue
            alternatives: list[tuple[Hypernotion, ...]] = []
            broken = False
            for alt_start, alt_end in rhs_pieces:
                members: list[Hypernotion] = []
                for mem_start, mem_end in _split_outside_quotes(
                        source.text, alt_start, alt_end, sep=","):
                    norm = _normalized(source.text, mem_start, mem_end)
                    if norm == EMPTY_TOKEN:
                        members.append(Hypernotion())
                        continue
                    if not norm:
                        report.errors.append(Diagnostic(
                            "syntax", "empty hyperrule member (use EMPTY)",
                            source.span(mem_start)))
                        broken = True
                        continue
                    segs = scan_member(mem_start, mem_end)
                    if segs is None:
                        broken = True
                    else:
                        members.append(Hypernotion(segs))
                if not broken and not members:
                    report.errors.append(Diagnostic(
                        "syntax", "empty hyperrule alternative (use EMPTY)",
                        source.span(alt_start)))
                    broken = True
                if not broken:
                    alternatives.append(tuple(members))
            if not broken and alternatives:
                hyperrules.append(Hyperrule(Hypernotion(lhs_segs), tuple(alternatives)))

    if report.errors:
        return None
    if not hyperrules:
        report.errors.append(Diagnostic(
            "no-hyperrules", "a grammar needs at least one hyperrule to fix the start",
            SourceSpan(1, 1)))
        return None
    start = hyperrules[0].lhs
    if not start.is_ground:
        report.errors.append(Diagnostic(
            "non-ground-start",
            "the first hyperrule's left side designates the start and must "
            "contain no metanotions",
            SourceSpan(1, 1)))
        return None

    grammar = VWGrammar(
        metarules=metarules,
        hyperrules=tuple(hyperrules),
        start=start,
        terminal_convention=terminal_convention,
    )
    _warn_empty_languages(grammar, report)
    return grammar


def _warn_empty_languages(grammar: VWGrammar, report: ValidationReport) -> None:
    productive: set[str] = set()
    changed = True
    while changed:
        changed = False
        for name, rule in grammar.metarules.items():
            if name in productive:
                continue
            for alt in rule.alternatives:
                if all(not isinstance(s, MetaRef) or s.name in productive for s in alt):
                    productive.add(name)
                    changed = True
                    break
    for name in grammar.metarules:
        if name not in productive:
            report.warnings.append(Diagnostic(
                "empty-metanotion",
                f"metanotion {name} generates the empty language",
                SourceSpan(1, 1)))


def load_grammar(path: str, terminal_convention: str = SYMBOL_SUFFIX) -> VWGrammar:
    """Read and parse a grammar file, raising on validation errors."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    result = parse_grammar(text, terminal_convention)
    if isinstance(result, ValidationReport):
        details = "; ".join(str(e) for e in result.errors)
        raise GrammarError(f"{path}: {details}")
    return result


def render_protonotion(text: str, spaced_marker: bool = False) -> str:
    """Render ground marks, quoting commas.

    With spaced_marker, a trailing terminal marker is set off by a blank
    ("asymbol" prints as "a symbol"), matching conventional rule tables.
    """
    if spaced_marker and text.endswith(TERMINAL_MARKER) and len(text) > len(TERMINAL_MARKER):
        stem = text[: -len(TERMINAL_MARKER)]
        return f"{render_protonotion(stem)} {TERMINAL_MARKER}"
    return text.replace(",", "','")


def _render_hypernotion(h: Hypernotion) -> str:
    pieces: list[str] = []
    prev_meta = False
    for seg in h.segments:
        if isinstance(seg, MetaRef):
            if prev_meta:
                pieces.append(" ")
            pieces.append(seg.name)
            prev_meta = True
        else:
            pieces.append(render_protonotion(seg.text))
            prev_meta = False
    return "".join(pieces) if pieces else EMPTY_TOKEN


def _render_meta_alternative(alt: tuple[Segment, ...]) -> str:
    if not alt:
        return EMPTY_TOKEN
    return " ".join(
        seg.name if isinstance(seg, MetaRef) else render_protonotion(seg.text)
        for seg in alt
    )


def render_hyperrule(rule: Hyperrule) -> str:
    alts = "; ".join(
        ", ".join(_render_hypernotion(m) for m in alt)
        for alt in rule.alternatives
    )
    return f"{_render_hypernotion(rule.lhs)} : {alts}."


def render_grammar(grammar: VWGrammar) -> str:
    """Render back to notation; reparsing yields a structurally equal grammar."""
    lines: list[str] = []
    for rule in grammar.metarules.values():
        alts = "; ".join(_render_meta_alternative(a) for a in rule.alternatives)
        lines.append(f"{rule.lhs} :: {alts}.")
    if grammar.metarules:
        lines.append("")
    for rule in grammar.hyperrules:
        lines.append(render_hyperrule(rule))
    return "\n".join(lines) + "\n"

"""Command-line interface: validation, meta queries, matching, generation,
transformation, split-part generation and equivalence auditing.

Exit codes: 0 success, 1 validation or equivalence failure, 2 usage error.
All randomness is funnelled through --seed, so any invocation repeated with
identical flags produces byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import derive, matching, meta, notation, toyisa
from .model import NO_MATCH, SYMBOL_SUFFIX, SententialForm, VWGrammar

_CONVENTION_DEFAULTS = {
    "check": SYMBOL_SUFFIX,
    "meta": SYMBOL_SUFFIX,
    "match": SYMBOL_SUFFIX,
    "generate": SYMBOL_SUFFIX,
    "split": SYMBOL_SUFFIX,
    # Transformation-style commands exist for grammars whose unmatched
    # notions are the terminals, so they default to the other convention.
    "transform": NO_MATCH,
    "audit": NO_MATCH,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("grammar", help="grammar file (.vw)")
    parser.add_argument("--terminal-convention",
                        choices=[SYMBOL_SUFFIX, NO_MATCH], default=None)
    parser.add_argument("--json", action="store_true",
                        help="machine-readable output, one JSON record per line")


def _add_bounds(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-steps", type=int, default=200,
                        help="rewrite depth allowed for any single notion")
    parser.add_argument("--max-forms", type=int, default=100_000)
    parser.add_argument("--max-notion-len", type=int, default=64)
    parser.add_argument("--max-words", type=int, default=1000)
    parser.add_argument("--free-meta-len", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--mode", choices=[derive.EXHAUSTIVE, derive.RANDOM],
                        default=derive.EXHAUSTIVE)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vwgen",
        description="two-level grammar engine: generate, transform, audit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate a grammar file")
    _add_common(p)

    p = sub.add_parser("meta", help="enumerate a metanotion's language")
    _add_common(p)
    p.add_argument("name", help="metanotion name")
    p.add_argument("--max-len", type=int, default=8)
    p.add_argument("--max-items", type=int, default=50)

    p = sub.add_parser("match", help="match a notion against every rule's left side")
    _add_common(p)
    p.add_argument("target", help="ground notion (blanks are ignored)")

    p = sub.add_parser("generate", help="enumerate words of the language")
    _add_common(p)
    _add_bounds(p)
    p.add_argument("--trace", action="store_true", help="print derivation traces")

    p = sub.add_parser("transform", help="rewrite an input word into variants")
    _add_common(p)
    _add_bounds(p)
    p.add_argument("--input", required=True,
                   help="input word; ';' separates notions, blanks are ignored")
    p.add_argument("--echo-fixpoint", action="store_true",
                   help="emit the input itself when nothing rewrites")
    p.add_argument("--trace", action="store_true")

    p = sub.add_parser("split", help="coordinated multi-part generation")
    _add_common(p)
    _add_bounds(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("audit", help="check that variants preserve semantics")
    _add_common(p)
    _add_bounds(p)
    p.add_argument("--input", required=True, help="seed program")
    p.add_argument("--num-probes", type=int, default=16)
    p.add_argument("--probes", help="probe states file (name=value lines)")
    p.add_argument("--ignore", action="append", default=[],
                   help="location to ignore: register name, address, or 'stack'")
    p.add_argument("--echo-fixpoint", action="store_true")
    return parser


def _load(args: argparse.Namespace) -> VWGrammar | None:
    convention = args.terminal_convention or _CONVENTION_DEFAULTS[args.command]
    try:
        text = Path(args.grammar).read_text(encoding="utf-8")
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return None
    result = notation.parse_grammar(text, convention)
    if isinstance(result, notation.ValidationReport):
        for diag in result.errors:
            print(f"{args.grammar}:{diag}", file=sys.stderr)
        return None
    return result


def _config(args: argparse.Namespace) -> derive.GenerationConfig:
    return derive.GenerationConfig(
        mode=args.mode,
        seed=args.seed,
        max_steps=args.max_steps,
        max_forms=args.max_forms,
        max_notion_len=args.max_notion_len,
        max_words=args.max_words,
        free_meta_len=args.free_meta_len,
        echo_fixpoint=getattr(args, "echo_fixpoint", False),
    )


def _input_notions(text: str) -> list[str]:
    return [piece for piece in ("".join(p.split()) for p in text.split(";")) if piece]


def _print_trace(word: derive.GeneratedWord) -> None:
    for index, entry in enumerate(word.trace.steps):
        binding = " ".join(f"{k}={v}" for k, v in entry.binding)
        line = (f"# {index} rule={entry.rule_index} notion={entry.notion_index} "
                f"alt={entry.alt_index}")
        print(line + (f" {binding}" if binding else ""))


def _emit_words(result: derive.GenResult, grammar: VWGrammar,
                as_json: bool, trace: bool) -> None:
    for word in result.words:
        rendered = derive.render_word(word.tokens, grammar.terminal_convention)
        if as_json:
            print(json.dumps({"tokens": list(word.tokens), "rendered": rendered}))
        else:
            print(rendered)
        if trace:
            _print_trace(word)
    if result.truncated:
        print(f"note: output truncated by {', '.join(result.truncated)}",
              file=sys.stderr)


def _cmd_check(args: argparse.Namespace) -> int:
    try:
        text = Path(args.grammar).read_text(encoding="utf-8")
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    convention = args.terminal_convention or SYMBOL_SUFFIX
    report = notation.validate_grammar(text, convention)
    if args.json:
        print(json.dumps({
            "ok": report.ok,
            "errors": [[d.code, d.message, d.span.line, d.span.col] for d in report.errors],
            "warnings": [[d.code, d.message, d.span.line, d.span.col] for d in report.warnings],
        }))
    else:
        for diag in report.errors:
            print(f"{args.grammar}:{diag}")
        for diag in report.warnings:
            print(f"{args.grammar}:{diag} (warning)")
        if report.ok:
            print("ok")
    return 0 if report.ok else 1


def _cmd_meta(args: argparse.Namespace) -> int:
    grammar = _load(args)
    if grammar is None:
        return 1
    engine = meta.MetaEngine(grammar)
    try:
        enumeration = engine.enumerate(args.name, args.max_len, args.max_items)
        finite = engine.is_finite(args.name)
    except meta.UnknownMetanotionError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    if args.json:
        print(json.dumps({
            "metanotion": args.name,
            "finite": finite,
            "produced": list(enumeration.produced),
            "exhausted": enumeration.exhausted,
        }))
        return 0
    print(f"{args.name}: {'finite' if finite else 'infinite'}")
    for word in enumeration.produced:
        print(word if word else "EMPTY")
    print(f"exhausted: {'true' if enumeration.exhausted else 'false'}")
    return 0


def _cmd_match(args: argparse.Namespace) -> int:
    grammar = _load(args)
    if grammar is None:
        return 1
    engine = meta.MetaEngine(grammar)
    target = "".join(args.target.split())
    for index, rule in enumerate(grammar.hyperrules):
        result = matching.match_lhs(grammar, target, rule, engine=engine)
        if not result.solutions:
            continue
        header = notation.render_hyperrule(rule)
        if args.json:
            for sol in result.solutions:
                print(json.dumps({
                    "rule": index,
                    "binding": dict(sol.binding),
                    "segmentation": [list(s) for s in sol.segmentation],
                }))
        else:
            print(f"rule {index}: {header}")
            for sol in result.solutions:
                table = " ".join(f"{k}={v}" for k, v in sol.binding) or "(ground)"
                print(f"  {table}")
        if result.truncated:
            print(f"note: rule {index} truncated by {', '.join(result.truncated)}",
                  file=sys.stderr)
    return 0


def _cmd_generate(args: argparse.Namespace) -> int:
    grammar = _load(args)
    if grammar is None:
        return 1
    result = derive.generate(grammar, _config(args))
    _emit_words(result, grammar, args.json, args.trace)
    return 0


def _cmd_transform(args: argparse.Namespace) -> int:
    grammar = _load(args)
    if grammar is None:
        return 1
    notions = _input_notions(args.input)
    try:
        result = derive.transform(grammar, notions, _config(args))
    except derive.NoDerivationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    _emit_words(result, grammar, args.json, args.trace)
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    grammar = _load(args)
    if grammar is None:
        return 1
    try:
        result = derive.split_parts(grammar, _config(args))
    except derive.NoDerivationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for index, part in enumerate(result.parts, start=1):
        lines = [derive.render_word(w.tokens, grammar.terminal_convention)
                 for w in part.words]
        (out / f"part{index}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    shared_lines = [
        " ".join(f"{k}={v}" for k, v in sorted(binding.items()))
        for binding in result.shared
    ]
    (out / "shared.txt").write_text("\n".join(shared_lines) + "\n", encoding="utf-8")
    print(f"wrote {result.k} parts x {len(result.shared)} derivations to {out}")
    return 0


def _parse_ignore(entries: list[str]) -> tuple[str | int, ...]:
    out: list[str | int] = []
    for entry in entries:
        if entry in toyisa.REGISTERS or entry == toyisa.STACK_SCRATCH:
            out.append(entry)
        else:
            out.append(int(entry, 0))
    return tuple(out)


def audit(grammar: VWGrammar, program_text: str, cfg: derive.GenerationConfig,
          probes: list[toyisa.MachineState],
          ignore: tuple[str | int, ...] = (toyisa.STACK_SCRATCH,),
          constants: dict[str, int] | None = None) -> tuple[list[tuple[str, str]], int]:
    """Transform a program, re-parse every variant and compare semantics.

    Returns (report lines, exit code); a line is (status, rendered variant)
    with status PASS, FAIL or PARSE-FAIL.
    """
    constants = constants if constants is not None else dict(toyisa.DEMO_CONSTANTS)
    original = toyisa.parse_program(program_text, constants)
    try:
        result = derive.transform(grammar, _input_notions(program_text), cfg)
    except derive.NoDerivationError:
        return [], 0
    lines: list[tuple[str, str]] = []
    failures = 0
    for word in result.words:
        rendered = derive.render_word(word.tokens, grammar.terminal_convention)
        try:
            variant = toyisa.parse_program(rendered, constants)
        except toyisa.BadInstructionError as err:
            lines.append(("PARSE-FAIL", f"{rendered!r}: {err}"))
            failures += 1
            continue
        if toyisa.equivalent(original, variant, probes, ignore):
            lines.append(("PASS", rendered))
        else:
            detail = ""
            for probe in probes:
                diffs = toyisa.differences(original, variant, probe, ignore)
                if diffs:
                    detail = f" ({diffs[0]})"
                    break
            lines.append(("FAIL", rendered + detail))
            failures += 1
    return lines, (1 if failures else 0)


def _cmd_audit(args: argparse.Namespace) -> int:
    grammar = _load(args)
    if grammar is None:
        return 1
    if args.probes:
        probes = toyisa.load_probes(Path(args.probes).read_text(encoding="utf-8"))
    else:
        probes = toyisa.probe_states(args.num_probes, args.seed)
    ignore = _parse_ignore(args.ignore) or (toyisa.STACK_SCRATCH,)
    try:
        lines, code = audit(grammar, args.input, _config(args), probes, ignore)
    except toyisa.ToyIsaError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    passed = sum(1 for status, _ in lines if status == "PASS")
    if args.json:
        for status, text in lines:
            print(json.dumps({"status": status, "variant": text}))
        print(json.dumps({"variants": len(lines), "passed": passed}))
    else:
        for status, text in lines:
            print(f"{status} {text}")
        print(f"{len(lines)} variants: {passed} pass, {len(lines) - passed} fail")
    return code


_COMMANDS = {
    "check": _cmd_check,
    "meta": _cmd_meta,
    "match": _cmd_match,
    "generate": _cmd_generate,
    "transform": _cmd_transform,
    "split": _cmd_split,
    "audit": _cmd_audit,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    return _COMMANDS[args.command](args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

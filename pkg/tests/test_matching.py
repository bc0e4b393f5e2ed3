import random

import pytest

from vwgen.matching import (
    MatchLimits,
    consistent_across_rule,
    free_metanotions,
    instantiate,
    match_lhs,
    render_ground_rule,
)
from vwgen.meta import MetaEngine
from vwgen.model import UnboundMetanotionError, VWGrammar, ground
from vwgen.notation import parse_grammar

from oracles import brute_meta_words, oracle_match


def grammar_of(text) -> VWGrammar:
    g = parse_grammar(text)
    assert isinstance(g, VWGrammar)
    return g


def rule_by_lhs(grammar, metas):
    for rule in grammar.hyperrules:
        if rule.lhs.metanotion_names() == tuple(metas):
            return rule
    raise LookupError(metas)


class TestMatchLhs:
    def test_counted_letter(self, anbncn):
        rule = anbncn.hyperrules[1]  # A·i·N : A symbol, AN.
        result = match_lhs(anbncn, "aii", rule)
        assert [s.mapping for s in result.solutions] == [{"A": "a", "N": "i"}]

    def test_single_letter(self, anbncn):
        rule = anbncn.hyperrules[2]  # A·i : A symbol.
        result = match_lhs(anbncn, "ci", rule)
        assert [s.mapping for s in result.solutions] == [{"A": "c"}]

    def test_no_solutions(self, anbncn):
        rule = anbncn.hyperrules[1]
        assert match_lhs(anbncn, "abc", rule).solutions == ()

    def test_ground_lhs_exact_equality(self, anbncn):
        rule = anbncn.hyperrules[0]  # s : aN, bN, cN.
        assert len(match_lhs(anbncn, "s", rule).solutions) == 1
        assert match_lhs(anbncn, "ss", rule).solutions == ()

    def test_segmentation_reconstructs_target(self, toyisa_grammar):
        engine = MetaEngine(toyisa_grammar)
        target = "moveax,0x12"
        for rule in toyisa_grammar.hyperrules:
            for sol in match_lhs(toyisa_grammar, target, rule, engine=engine).solutions:
                pieces = "".join(target[s:e] for _, s, e in sol.segmentation)
                assert pieces == target
                assert ground(rule.lhs, sol.mapping) == target

    def test_zero_width_binding(self, infinite_alphabet):
        rule = rule_by_lhs(infinite_alphabet, ("N", "C"))  # N C tail
        result = match_lhs(infinite_alphabet, "itail", rule)
        assert [s.mapping for s in result.solutions] == [{"C": "i", "N": ""}]
        assert result.solutions[0].segmentation[0] == (0, 0, 0)

    def test_repeated_metanotion_must_agree(self):
        g = grammar_of("A :: a; b.\ns : x.\nAyA : A symbol.")
        rule = g.hyperrules[1]
        assert [s.mapping for s in match_lhs(g, "aya", rule).solutions] == [{"A": "a"}]
        assert match_lhs(g, "ayb", rule).solutions == ()

    def test_solution_cap_reports_truncation(self):
        g = grammar_of("H :: a; aa; aaa.\nK :: a; aa; aaa.\ns : x.\nHK : y.")
        rule = g.hyperrules[1]
        result = match_lhs(g, "aaaa", rule, MatchLimits(max_solutions=2))
        assert len(result.solutions) == 2
        assert "solutions" in result.truncated

    def test_meta_len_cap_reports_truncation(self):
        g = grammar_of("N :: i N; i.\ns : x.\nN : y.")
        result = match_lhs(g, "i" * 40, g.hyperrules[1], MatchLimits(max_meta_len=8))
        assert result.solutions == ()
        assert "meta-len" in result.truncated

    def test_canonical_order_and_determinism(self):
        g = grammar_of("H :: a; aa; aaa.\nK :: a; aa; aaa.\ns : x.\nHK : y.")
        rule = g.hyperrules[1]
        result = match_lhs(g, "aaaa", rule)
        assert [s.mapping for s in result.solutions] == [
            {"H": "a", "K": "aaa"}, {"H": "aa", "K": "aa"}, {"H": "aaa", "K": "a"}]
        segmentations = [s.segmentation for s in result.solutions]
        assert segmentations == sorted(segmentations)
        assert match_lhs(g, "aaaa", rule) == result


class TestRuleBinding:
    def test_binding_passes_through(self, anbncn):
        rule = anbncn.hyperrules[1]
        sol = match_lhs(anbncn, "aii", rule).solutions[0]
        binding = consistent_across_rule(rule, sol)
        assert binding == {"A": "a", "N": "i"}
        assert free_metanotions(rule, binding) == ()

    def test_free_names_flagged(self, anbncn):
        rule = anbncn.hyperrules[0]  # s : aN, bN, cN.
        sol = match_lhs(anbncn, "s", rule).solutions[0]
        binding = consistent_across_rule(rule, sol)
        assert binding == {}
        assert free_metanotions(rule, binding) == ("N",)

    def test_rhs_grounds_with_binding(self, anbncn):
        rule = anbncn.hyperrules[1]
        binding = {"A": "a", "N": "i"}
        members = [ground(m, binding) for m in rule.alternatives[0]]
        assert members == ["asymbol", "ai"]


class TestInstantiate:
    def test_paper_table_rows(self, anbncn):
        rule = anbncn.hyperrules[1]
        row = instantiate(anbncn, rule, {"A": "a", "N": "ii"})
        assert render_ground_rule(row) == "aiii : a symbol, aii."
        row = instantiate(anbncn, rule, {"A": "b", "N": "i"})
        assert render_ground_rule(row) == "bii : b symbol, bi."

    def test_meta_free_rule_is_identity(self, cf8):
        rule = cf8.hyperrules[3]  # v : EMPTY.
        row = instantiate(cf8, rule, {})
        assert row.lhs == "v"
        assert row.rhs_alternatives == (("",),)
        assert render_ground_rule(row) == "v : EMPTY."

    def test_missing_binding_raises(self, anbncn):
        with pytest.raises(UnboundMetanotionError):
            instantiate(anbncn, anbncn.hyperrules[1], {"A": "a"})

    def test_uniform_replacement_structurally(self, kary3):
        rule = rule_by_lhs(kary3, ("INFOS",))
        row = instantiate(kary3, rule, {"INFOS": "iii"})
        assert row.lhs.count("iii") == 1
        for alt in row.rhs_alternatives:
            for member in alt:
                if "tally" in member:
                    assert member.endswith("iii")


class TestAgainstOracle:
    """Exhaustive segmentation cross-check on a few hundred dev-scale cases;
    the acceptance suite scales this past ten thousand."""

    def test_engine_agrees_with_oracle(self, anbncn, infinite_alphabet, toyisa_grammar):
        rng = random.Random(20260809)
        wide = MatchLimits(max_solutions=10_000, max_meta_len=16)
        cases = 0
        for grammar, marks in [
            (anbncn, "abci"),
            (infinite_alphabet, "nitail"),
            (toyisa_grammar, "movesp,0x1[]"),
        ]:
            engine = MetaEngine(grammar)
            pools = {
                name: sorted(brute_meta_words(grammar, name, 3))
                for name in grammar.metarules
            }
            targets = set()
            for _ in range(40):
                targets.add("".join(rng.choice(marks)
                                    for _ in range(rng.randrange(9))))
            for rule in grammar.hyperrules:
                names = rule.lhs.metanotion_names()
                if names and all(pools[n] for n in names):
                    for _ in range(10):
                        binding = {n: rng.choice(pools[n]) for n in names}
                        text = ground(rule.lhs, binding)
                        targets.add(text)
                        if text:
                            pos = rng.randrange(len(text))
                            targets.add(text[:pos] + rng.choice(marks) + text[pos + 1:])
            for target in sorted(targets):
                if len(target) > 8:
                    continue
                for rule in grammar.hyperrules:
                    got = match_lhs(grammar, target, rule, wide, engine)
                    assert got.truncated == ()
                    expected = oracle_match(grammar, target, rule, engine)
                    assert {(s.binding, s.segmentation) for s in got.solutions} \
                        == expected, (target, rule.lhs)
                    cases += 1
        assert cases >= 500

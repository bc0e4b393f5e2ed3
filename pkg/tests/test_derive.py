import pytest

from vwgen.derive import (
    EXHAUSTIVE,
    RANDOM,
    GenerationConfig,
    NoDerivationError,
    generate,
    render_word,
    replay,
    split_parts,
    step,
    transform,
)
from vwgen.model import (
    NO_MATCH,
    SYMBOL_SUFFIX,
    DerivationTrace,
    Notion,
    SententialForm,
    VWGrammar,
)
from vwgen.notation import parse_grammar

from oracles import (
    brute_meta_words,
    cf_generate,
    expand_ground_rules,
    expected_equal_power_words,
    is_equal_power_word,
)


def grammar_of(text, convention=SYMBOL_SUFFIX) -> VWGrammar:
    g = parse_grammar(text, convention)
    assert isinstance(g, VWGrammar)
    return g


def words_of(result, convention):
    return [render_word(w.tokens, convention) for w in result.words]


class TestStep:
    def test_sentence_offers_both_codings(self, toyisa_grammar):
        form = SententialForm.open(["move0ineax"])
        successors = [f.texts() for f, _ in step(toyisa_grammar, form)]
        assert successors == [
            ("mov", "eax", ",", "0"),
            ("save0", "restoreeax"),
        ]

    def test_save_offers_push_or_pointer_move(self, toyisa_grammar):
        form = SententialForm.open(["save0"])
        successors = [f.texts() for f, _ in step(toyisa_grammar, form)]
        assert successors == [
            ("push", "0"),
            ("subtract4fromesp", "move0in[esp]"),
        ]

    def test_suffix_marking(self, anbncn):
        form = SententialForm.open(["bsymbol"])
        successors = step(anbncn, form)
        assert len(successors) == 1
        marked, meta = successors[0]
        assert marked.notions == (Notion("b", terminal=True),)
        assert meta.rule_index == -1

    def test_dead_end_under_suffix_convention(self, anbncn):
        assert step(anbncn, SententialForm.open(["zzz"])) == []

    def test_no_match_marks_as_written(self, toyisa_grammar):
        successors = step(toyisa_grammar, SententialForm.open(["mov"]))
        assert [f.texts() for f, _ in successors] == [("mov",)]
        assert successors[0][0].notions[0].terminal

    def test_leftmost_notion_rewritten_first(self, toyisa_grammar):
        form = SententialForm.open(["save0", "restoreeax"])
        for successor, meta in step(toyisa_grammar, form):
            assert meta.notion_index == 0
            assert successor.notions[-1] == Notion("restoreeax")


class TestGenerate:
    def test_counting_language(self, anbncn):
        cfg = GenerationConfig(max_steps=60, free_meta_len=3)
        result = generate(anbncn, cfg)
        assert words_of(result, SYMBOL_SUFFIX) == ["abc", "aabbcc", "aaabbbccc"]

    def test_variant_count_8(self, cf8):
        result = generate(cf8, GenerationConfig())
        assert len(result.token_set()) == 8
        assert result.truncated == ()
        original = ("mov", "eax", ",", "key", "xor", "[", "ebx", "]", ",",
                    "eax", "inc", "ebx")
        assert original in result.token_set()

    def test_variant_count_216(self, cf216):
        result = generate(cf216, GenerationConfig())
        assert len(result.token_set()) == 216
        assert result.truncated == ()

    def test_equal_power_pattern(self, infinite_alphabet):
        cfg = GenerationConfig(max_steps=7, free_meta_len=3)
        result = generate(infinite_alphabet, cfg)
        words = result.token_set()
        assert all(is_equal_power_word(w) for w in words)
        assert words == expected_equal_power_words(7, 3)

    def test_words_contain_no_open_notion(self, cf216, anbncn):
        for grammar, cfg in [
            (cf216, GenerationConfig()),
            (anbncn, GenerationConfig(free_meta_len=3)),
        ]:
            for word in generate(grammar, cfg).words:
                assert all(token for token in word.tokens)

    def test_breadth_first_emission_order(self, anbncn):
        result = generate(anbncn, GenerationConfig(free_meta_len=4))
        lengths = [len(w.trace.steps) for w in result.words]
        assert lengths == sorted(lengths)

    def test_budget_truncation_flags(self, anbncn):
        tight = generate(anbncn, GenerationConfig(max_forms=4, free_meta_len=3))
        assert "max-forms" in tight.truncated
        capped = generate(anbncn, GenerationConfig(max_words=1, free_meta_len=3))
        assert "max-words" in capped.truncated
        assert len(capped.words) == 1

    def test_notion_length_cap(self, anbncn):
        # "asymbol" needs 7 marks; counters above i^6 push members past 7.
        result = generate(anbncn, GenerationConfig(max_notion_len=7, free_meta_len=8))
        assert "max-notion-len" in result.truncated
        assert words_of(result, SYMBOL_SUFFIX) == [
            "a" * n + "b" * n + "c" * n for n in range(1, 7)]


class TestTransform:
    def test_reaches_stack_coding_at_depth_three(self, toyisa_grammar):
        result = transform(toyisa_grammar, ["moveax,0"], GenerationConfig(max_steps=3))
        assert ("push", "0", "pop", "eax") in result.token_set()

    def test_full_variant_set(self, toyisa_grammar):
        result = transform(toyisa_grammar, ["moveax,0"], GenerationConfig(max_steps=6))
        assert words_of(result, NO_MATCH) == [
            "mov eax , 0",
            "push 0 pop eax",
            "push 0 mov eax , [esp] add esp , 4",
            "sub esp , 4 mov [esp] , 0 pop eax",
            "sub esp , 4 mov [esp] , 0 mov eax , [esp] add esp , 4",
        ]

    def test_multi_notion_input(self, toyisa_grammar):
        result = transform(toyisa_grammar, ["push5", "popebx"],
                           GenerationConfig(max_steps=6))
        assert ("push", "5", "pop", "ebx") in result.token_set()
        assert len(result.token_set()) == 4

    def test_fixed_seed_is_reproducible(self, toyisa_grammar):
        cfg = GenerationConfig(mode=RANDOM, seed=42, max_words=5, max_steps=6)
        first = transform(toyisa_grammar, ["moveax,0"], cfg)
        second = transform(toyisa_grammar, ["moveax,0"], cfg)
        assert first == second

    def test_start_symbol_input_equals_generate(self, anbncn):
        cfg = GenerationConfig(free_meta_len=3)
        via_input = transform(anbncn, ["s"], cfg)
        via_start = generate(anbncn, cfg)
        assert via_input.token_set() == via_start.token_set()

    def test_unmatched_input_raises(self, toyisa_grammar):
        with pytest.raises(NoDerivationError):
            transform(toyisa_grammar, ["nop"], GenerationConfig())

    def test_echo_fixpoint_keeps_input(self, toyisa_grammar):
        cfg = GenerationConfig(echo_fixpoint=True)
        result = transform(toyisa_grammar, ["nop"], cfg)
        assert result.token_set() == {("nop",)}

    def test_dead_end_branch_raises_under_suffix(self):
        g = grammar_of("s : a.\nq : nosuffix.")
        with pytest.raises(NoDerivationError):
            transform(g, ["q"], GenerationConfig())

    def test_random_words_within_exhaustive_set(self, toyisa_grammar):
        exhaustive = transform(toyisa_grammar, ["moveax,0"],
                               GenerationConfig(max_steps=6)).token_set()
        for seed in range(8):
            cfg = GenerationConfig(mode=RANDOM, seed=seed, max_words=6, max_steps=6)
            random_result = transform(toyisa_grammar, ["moveax,0"], cfg)
            assert random_result.token_set() <= exhaustive


class TestTraces:
    def test_replay_reproduces_every_word(self, toyisa_grammar):
        result = transform(toyisa_grammar, ["moveax,0"], GenerationConfig(max_steps=6))
        start = SententialForm.open(["moveax,0"])
        for word in result.words:
            final = replay(toyisa_grammar, start, word.trace)
            assert final.texts() == word.tokens
            again = replay(toyisa_grammar, start, word.trace)
            assert again == final

    def test_trace_records_bindings(self, anbncn):
        result = generate(anbncn, GenerationConfig(free_meta_len=2))
        first = result.words[0].trace.steps[0]
        assert first.rule_index == 0
        assert dict(first.binding) == {"N": "i"}

    def test_applications_exclude_markings(self, anbncn):
        result = generate(anbncn, GenerationConfig(free_meta_len=2))
        trace = result.words[0].trace
        marks = sum(1 for s in trace.steps if s.rule_index < 0)
        assert trace.applications + marks == len(trace.steps)
        assert marks == 3  # one per letter of "abc"


class TestSplitParts:
    def test_three_coordinated_parts(self, kary3):
        cfg = GenerationConfig(mode=RANDOM, seed=11, max_words=50)
        result = split_parts(kary3, cfg)
        assert result.k == 3
        assert len(result.shared) == 50
        markers = [words[0].tokens[0] for words in
                   (part.words for part in result.parts)]
        assert markers == ["one", "two", "three"]
        for index in range(50):
            tallies = {
                part.words[index].tokens.count("i") for part in result.parts
            }
            assert len(tallies) == 1
            assert result.shared[index]["INFOS"] == "i" * tallies.pop()

    def test_exhaustive_split_counts_match(self, kary3):
        result = split_parts(kary3, GenerationConfig(free_meta_len=4))
        assert result.k == 3
        assert len(result.shared) == 4  # one derivation per counter value
        for index, binding in enumerate(result.shared):
            for part in result.parts:
                assert part.words[index].tokens.count("i") == len(binding["INFOS"])

    def test_degenerate_single_part(self):
        g = grammar_of("s : a symbol.")
        result = split_parts(g, GenerationConfig())
        assert result.k == 1
        assert result.parts[0].words[0].tokens == ("a",)
        assert generate(g, GenerationConfig()).words[0].tokens == ("a",)

    def test_no_derivation(self):
        g = grammar_of("s : q.\nq : s.")  # endless ping-pong, never terminal
        with pytest.raises(NoDerivationError):
            split_parts(g, GenerationConfig(max_steps=5))


class TestDegenerateEquivalence:
    """Generation through matching equals a plain rewriter over the fully
    instantiated rule set whenever every metanotion language is finite."""

    def run_both(self, grammar, cfg):
        engine_words = generate(grammar, cfg).token_set()
        meta_words = {
            name: brute_meta_words(grammar, name, 8) for name in grammar.metarules
        }
        table = expand_ground_rules(grammar, meta_words)
        oracle_words = cf_generate(
            table, grammar.start_text, grammar.terminal_convention, cfg.max_steps)
        assert engine_words == oracle_words

    def test_cf8(self, cf8):
        self.run_both(cf8, GenerationConfig())

    def test_cf216(self, cf216):
        self.run_both(cf216, GenerationConfig())

    def test_finite_counter_grammar(self):
        g = grammar_of(
            "N :: i; ii; iii.\n"
            "s : aN, bN.\n"
            "aiN : a symbol, aN.\nai : a symbol.\n"
            "biN : b symbol, bN.\nbi : b symbol.\n")
        self.run_both(g, GenerationConfig())
        result = generate(g, GenerationConfig())
        assert words_of(result, SYMBOL_SUFFIX) == ["ab", "aabb", "aaabbb"]

    def test_junk_grammar_shape(self, cf216):
        # Every junk block is a two-instruction prefix; spot-check one word.
        result = generate(cf216, GenerationConfig())
        assert ("add", "edx", ",", "1", "dec", "edx", "mov", "eax", ",", "key",
                "xor", "[", "ebx", "]", ",", "eax", "inc", "ebx") \
            in result.token_set()

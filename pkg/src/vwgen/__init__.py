"""Two-level (van Wijngaarden) grammar engine.

Parse .vw grammar files, query the metagrammar, match notions against
hyperrule left sides, generate or transform words under explicit bounds,
and audit that grammar-driven instruction rewrites preserve semantics.
"""

from .derive import (
    GenerationConfig,
    GenResult,
    NoDerivationError,
    SplitResult,
    generate,
    render_word,
    split_parts,
    step,
    transform,
)
from .matching import (
    GroundRule,
    MatchLimits,
    MatchResult,
    MatchSolution,
    consistent_across_rule,
    free_metanotions,
    instantiate,
    match_lhs,
    render_ground_rule,
)
from .meta import (
    MetaEngine,
    MetaEnumeration,
    enumerate_meta,
    is_meta_finite,
    meta_contains,
)
from .model import (
    GrammarError,
    Hypernotion,
    Hyperrule,
    Metarule,
    Notion,
    SententialForm,
    UnboundMetanotionError,
    UnknownMetanotionError,
    VWGrammar,
    fuse,
    ground,
)
from .notation import (
    AmbiguousHypernotionError,
    ValidationReport,
    load_grammar,
    parse_grammar,
    render_grammar,
    tokenize_hypernotion,
    validate_grammar,
)

__all__ = [
    "AmbiguousHypernotionError",
    "GenerationConfig",
    "GenResult",
    "GrammarError",
    "GroundRule",
    "Hypernotion",
    "Hyperrule",
    "MatchLimits",
    "MatchResult",
    "MatchSolution",
    "MetaEngine",
    "MetaEnumeration",
    "Metarule",
    "NoDerivationError",
    "Notion",
    "SententialForm",
    "SplitResult",
    "UnboundMetanotionError",
    "UnknownMetanotionError",
    "VWGrammar",
    "ValidationReport",
    "consistent_across_rule",
    "enumerate_meta",
    "free_metanotions",
    "fuse",
    "generate",
    "ground",
    "instantiate",
    "is_meta_finite",
    "load_grammar",
    "match_lhs",
    "meta_contains",
    "parse_grammar",
    "render_grammar",
    "render_ground_rule",
    "render_word",
    "split_parts",
    "step",
    "tokenize_hypernotion",
    "transform",
    "validate_grammar",
]

"""Laboratory for covert politeness rewriting in email threads.

The package splits into reading (analysis), writing (transform), thread
bookkeeping (thread), a deterministic mail-network simulator (simnet),
and recipient-side detectors (sentinel).  All of them speak the rule
packs defined in lexicon.
"""

from .analysis import (
    ClassificationResult,
    HeadAct,
    WeightinessFactors,
    classify,
    extract_head_act,
    perceived_weightiness,
    recommend_strategy,
    weightiness,
)
from .errors import (
    AtdlabError,
    DanglingQuoteError,
    EmptyBodyError,
    HeadActError,
    LedgerError,
    LedgerInconsistencyError,
    PackError,
    ReversalError,
    ScenarioError,
    SlotError,
    ViewMismatchError,
)
from .lexicon import (
    Marker,
    MarkerHit,
    RulePack,
    StrategyLabel,
    Template,
    load_default_pack,
    load_pack,
    match_markers,
    render_template,
    serialize_pack,
)

__version__ = "0.1.0"

__all__ = [
    "AtdlabError",
    "ClassificationResult",
    "DanglingQuoteError",
    "EmptyBodyError",
    "HeadAct",
    "HeadActError",
    "LedgerError",
    "LedgerInconsistencyError",
    "Marker",
    "MarkerHit",
    "PackError",
    "ReversalError",
    "RulePack",
    "ScenarioError",
    "SlotError",
    "StrategyLabel",
    "Template",
    "ViewMismatchError",
    "WeightinessFactors",
    "classify",
    "extract_head_act",
    "load_default_pack",
    "load_pack",
    "match_markers",
    "perceived_weightiness",
    "recommend_strategy",
    "render_template",
    "serialize_pack",
    "weightiness",
    "__version__",
]

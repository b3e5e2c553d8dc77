"""Canonical example texts used across tests, docs, and demos.

One request, four dressings.  The terse and polite budget emails are
the before/after pair for the interception demo; STRATEGY_EXAMPLES maps
each strategy to a body that classifies as exactly that strategy under
the default pack.  load_corpus() returns the bundled request corpus.
"""

import json
from importlib import resources

from .lexicon import StrategyLabel

# The same budget request rendered in each strategy.
STRATEGY_EXAMPLES: dict[StrategyLabel, str] = {
    StrategyLabel.BALD_ON_RECORD: "We need a budget, now!",
    StrategyLabel.POSITIVE: (
        "Jake, we need a budget. Let's finalize it for the proposal today?"
    ),
    StrategyLabel.NEGATIVE: (
        "Jake, I know you are busy, but would you be willing to meet with "
        "me for just an hour? We need a budget for the proposal - the "
        "deadline is today."
    ),
    StrategyLabel.OFF_RECORD: (
        "Proposals that include budgets are more likely to receive funding"
    ),
}

# Before and after of the flagship rewrite: a blunt one-liner and the
# deferential version a tampering relay would substitute for it.
TERSE_BUDGET_EMAIL = "We need a budget."

POLITE_BUDGET_EMAIL = (
    "I know you are busy, but would you be willing to meet with me for "
    "just a half an hour, we need a budget for the proposal - the "
    "deadline is today?"
)

# Head-act tokens shared by the pair above.
BUDGET_HEAD_TOKENS = ("we", "need", "a", "budget")


def load_corpus() -> list[dict]:
    """The bundled request corpus: dicts with id, body, and label."""
    data = resources.files("atdlab").joinpath("data/corpus.json").read_bytes()
    return json.loads(data)["messages"]

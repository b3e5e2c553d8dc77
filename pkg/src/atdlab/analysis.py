"""Reading a message body: strategy label, head act, and weightiness.

Classification sums marker weights per strategy and picks the argmax,
breaking ties toward the more direct strategy.  Head-act extraction
peels away greeting and markers, then finds the first clause holding a
request-core verb.  The weightiness calculus maps social factors to a
recommended strategy and back to the range a reader would infer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

from ._text import ByteMap, split_clauses, tokenize
from .errors import EmptyBodyError, HeadActError
from .lexicon import MarkerHit, RulePack, StrategyLabel, match_markers

Body = Union[str, Sequence[str]]

# A greeting is one or two capitalized words and a comma before the rest
# of the segment.  "Jake, we need a budget" drops "Jake, ".
_GREETING_RE = re.compile(r"^\s*[A-Z][A-Za-z']*(?:\s+[A-Z][A-Za-z']*)?,\s*")

# Strategy rank thresholds on total weightiness; width 0.75 per band.
RANK_BAND = 0.75


@dataclass
class ClassificationResult:
    """Label plus the evidence behind it."""

    label: StrategyLabel
    scores: dict[StrategyLabel, float]
    hits: list[MarkerHit]


@dataclass(frozen=True)
class HeadAct:
    """The request core: normalized tokens plus where they came from.

    span is a byte range into the segment the head act was found in.
    """

    tokens: tuple[str, ...]
    span: tuple[int, int]
    segment: int = 0

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class WeightinessFactors:
    """Social distance, hearer power, and imposition, each in [0, 1]."""

    distance_d: float
    power_p: float
    imposition_r: float

    def __post_init__(self):
        for name in ("distance_d", "power_p", "imposition_r"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be within [0, 1], got {value}")


def _as_segments(body: Body) -> list[str]:
    if isinstance(body, str):
        return [body]
    segments = list(body)
    for seg in segments:
        if not isinstance(seg, str):
            raise TypeError("body segments must be strings")
    return segments


def classify(body: Body, pack: RulePack) -> ClassificationResult:
    """Judge which strategy a body wears.

    Request-core markers and markers filed under the bald strategy carry
    no score; the bald score is always zero, so an unmarked body reads
    as bald on record.  Ties break toward the lower rank.
    """
    segments = _as_segments(body)
    if not any(seg.strip() for seg in segments):
        raise EmptyBodyError("cannot classify a body with no visible text")
    scores = {label: 0.0 for label in StrategyLabel}
    all_hits: list[MarkerHit] = []
    for idx, seg in enumerate(segments):
        for hit in match_markers(seg, pack):
            hit.segment = idx
            all_hits.append(hit)
            if hit.marker.category == "request-core":
                continue
            if hit.marker.strategy == StrategyLabel.BALD_ON_RECORD:
                continue
            scores[hit.marker.strategy] += hit.marker.weight
    top = max(scores.values())
    label = min(label for label in StrategyLabel if scores[label] == top)
    return ClassificationResult(label=label, scores=scores, hits=all_hits)


def extract_head_act(body: Body, pack: RulePack) -> HeadAct:
    """Locate the request core inside a body.

    Per segment: strip a leading greeting, delete every matched marker
    span except request-core ones, split what remains into clauses, and
    take the first clause holding a request-core verb.  Tokens come back
    lowercased; the span points at the clause's tokens in the original
    segment.  Raises HeadActError when no segment yields a clause.
    """
    segments = _as_segments(body)
    for idx, seg in enumerate(segments):
        found = _extract_from_segment(seg, idx, pack)
        if found is not None:
            return found
    raise HeadActError(
        f"no clause with a request-core verb in {len(segments)} segment(s)"
    )


def _extract_from_segment(seg: str, idx: int, pack: RulePack) -> HeadAct | None:
    m = _GREETING_RE.match(seg)
    base = m.end() if m else 0
    work = seg[base:]
    drop = [
        hit.char_span
        for hit in match_markers(work, pack)
        if hit.marker.category != "request-core"
    ]
    processed, origin = _delete_spans(work, drop)
    for clause, clause_start, _ in split_clauses(processed):
        tokens = tokenize(clause)
        words = tuple(t.lower for t in tokens)
        if not any(w in pack.core_verbs for w in words):
            continue
        first, last = tokens[0], tokens[-1]
        orig_start = base + origin[clause_start + first.start]
        orig_end = base + origin[clause_start + last.end - 1] + 1
        bmap = ByteMap(seg)
        return HeadAct(
            tokens=words,
            span=bmap.span_to_bytes(orig_start, orig_end),
            segment=idx,
        )
    return None


def _delete_spans(
    text: str, spans: list[tuple[int, int]]
) -> tuple[str, list[int]]:
    """Remove character spans; keep a map from kept position to original."""
    cut = [False] * len(text)
    for start, end in spans:
        for i in range(start, end):
            cut[i] = True
    kept: list[str] = []
    origin: list[int] = []
    for i, ch in enumerate(text):
        if not cut[i]:
            kept.append(ch)
            origin.append(i)
    return "".join(kept), origin


def modal_label(labels: Sequence[StrategyLabel]) -> StrategyLabel:
    """The most frequent label; count ties break toward the lower rank."""
    if not labels:
        raise ValueError("modal_label needs at least one label")
    counts = {label: 0 for label in StrategyLabel}
    for label in labels:
        counts[label] += 1
    top = max(counts.values())
    return min(label for label in StrategyLabel if counts[label] == top)


def weightiness(factors: WeightinessFactors) -> float:
    """Total imposition weight: the plain sum of the three factors."""
    return factors.distance_d + factors.power_p + factors.imposition_r


def recommend_strategy(w: float) -> StrategyLabel:
    """The strategy a speaker would pick for a given weightiness."""
    if not 0.0 <= w <= 3.0:
        raise ValueError(f"weightiness must be within [0, 3], got {w}")
    for label in StrategyLabel:
        if w < RANK_BAND * (label.rank + 1):
            return label
    return StrategyLabel.OFF_RECORD


def perceived_weightiness(label: StrategyLabel) -> tuple[float, float]:
    """The half-open weightiness range a reader infers from a label."""
    return (RANK_BAND * label.rank, RANK_BAND * (label.rank + 1))

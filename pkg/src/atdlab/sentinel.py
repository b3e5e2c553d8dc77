"""Recipient-side detectors for covert rewriting.

Three detectors with three different vantage points: diff_detect holds
a device's view against canonical sent text, quote_mismatch_detect
checks one device's view against itself, and drift_detect watches a
sender's strategy labels for a recent shift.  evaluate() drives them
over scenario suites and reports per-scenario hit and false-alarm
rates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ._text import normalize_quoted_text
from .analysis import modal_label
from .errors import DanglingQuoteError, ViewMismatchError
from .lexicon import RulePack, StrategyLabel, load_default_pack
from .simnet import ScenarioConfig, Transcript, run
from .thread import Message, render_quote

VERDICT_CLEAN = "clean"
VERDICT_MUTATED = "mutated"
VERDICT_SUSPICIOUS = "suspicious"

DETECTOR_NAMES = ("diff", "quote", "drift")

DRIFT_WINDOW = 3
DRIFT_ALARM = 0.5


@dataclass(frozen=True)
class Evidence:
    """One concrete finding: what kind, where, and what was seen."""

    kind: str
    message_id: str
    detail: str

    def to_json(self) -> dict:
        return {"kind": self.kind, "message_id": self.message_id, "detail": self.detail}


@dataclass
class DetectionReport:
    verdict: str
    score: float
    evidence: list[Evidence] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "score": self.score,
            "evidence": [e.to_json() for e in self.evidence],
        }


def _as_messages(view: Iterable) -> list[Message]:
    messages: list[Message] = []
    for item in view:
        messages.append(item if isinstance(item, Message) else Message.from_json(item))
    return messages


def diff_detect(rendered: Iterable, canonical: Iterable) -> DetectionReport:
    """Compare what a device shows against what was really sent.

    Fresh texts are compared per message id after normalizing the
    spacing of quote-prefix runs, so a client that re-wraps "> " as
    ">  " does not raise a false alarm.  Every id in the rendered view
    must exist in the canonical view; extra canonical messages are
    ignored.  The score is the mutated fraction of compared messages.
    """
    rendered_msgs = _as_messages(rendered)
    canonical_by_id = {m.id: m for m in _as_messages(canonical)}
    missing = [m.id for m in rendered_msgs if m.id not in canonical_by_id]
    if missing:
        raise ViewMismatchError(
            f"rendered view holds ids absent from the canonical view: {missing}"
        )
    evidence: list[Evidence] = []
    for shown in rendered_msgs:
        truth = canonical_by_id[shown.id]
        shown_fresh = normalize_quoted_text(shown.fresh_text())
        truth_fresh = normalize_quoted_text(truth.fresh_text())
        if shown_fresh != truth_fresh:
            evidence.append(
                Evidence(
                    kind="fresh-text-mismatch",
                    message_id=shown.id,
                    detail=(
                        f"device shows {shown_fresh!r} where sender wrote "
                        f"{truth_fresh!r}"
                    ),
                )
            )
    score = len(evidence) / len(rendered_msgs) if rendered_msgs else 0.0
    verdict = VERDICT_MUTATED if evidence else VERDICT_CLEAN
    return DetectionReport(verdict=verdict, score=score, evidence=evidence)


def quote_mismatch_detect(view: Iterable) -> DetectionReport:
    """Check one device's view against itself.

    Every quoted segment is re-rendered from the view's own copy of the
    quoted message; any textual disagreement means the thread this
    device shows is not even internally consistent.  A quote naming a
    message the view does not hold raises DanglingQuoteError.  The
    score is the mismatching fraction of quoted segments.
    """
    messages = _as_messages(view)
    by_id = {m.id: m for m in messages}
    evidence: list[Evidence] = []
    total_quotes = 0
    for message in messages:
        for seg in message.quotes():
            total_quotes += 1
            source = by_id.get(seg.source_id)
            if source is None:
                raise DanglingQuoteError(
                    f"message {message.id!r} quotes {seg.source_id!r}, which "
                    f"this view does not hold"
                )
            expected = render_quote(source).text
            if normalize_quoted_text(seg.text) != normalize_quoted_text(expected):
                evidence.append(
                    Evidence(
                        kind="quote-mismatch",
                        message_id=message.id,
                        detail=(
                            f"quote of {seg.source_id!r} disagrees with this "
                            f"device's copy of it"
                        ),
                    )
                )
    score = len(evidence) / total_quotes if total_quotes else 0.0
    verdict = VERDICT_MUTATED if evidence else VERDICT_CLEAN
    return DetectionReport(verdict=verdict, score=score, evidence=evidence)


def drift_detect(
    labels: Sequence[StrategyLabel],
    window: int = DRIFT_WINDOW,
    alarm: float = DRIFT_ALARM,
) -> DetectionReport:
    """Watch one sender's strategy labels for a recent shift.

    The score is the rank distance between the modal label of the last
    `window` messages and the modal label of the whole history, scaled
    to [0, 1].  At or above `alarm` the verdict turns suspicious.  This
    is a statistical tell, not proof: a sender whose recent tone simply
    changed looks the same as a rewritten one.
    """
    if not labels:
        raise ValueError("drift_detect needs at least one label")
    if window < 1:
        raise ValueError("window must be at least 1")
    if alarm < 0:
        raise ValueError("alarm must be non-negative")
    recent = list(labels[-window:])
    recent_mode = modal_label(recent)
    overall_mode = modal_label(list(labels))
    score = abs(recent_mode.rank - overall_mode.rank) / 3
    evidence: list[Evidence] = []
    if score >= alarm:
        evidence.append(
            Evidence(
                kind="strategy-drift",
                message_id="",
                detail=(
                    f"recent modal strategy {recent_mode.wire_name} sits "
                    f"{abs(recent_mode.rank - overall_mode.rank)} ranks from "
                    f"the overall modal {overall_mode.wire_name}"
                ),
            )
        )
    verdict = VERDICT_SUSPICIOUS if evidence else VERDICT_CLEAN
    return DetectionReport(verdict=verdict, score=score, evidence=evidence)


@dataclass(frozen=True)
class EvalRow:
    """Hit and false-alarm rates for one detector on one scenario.

    A rate is None when its denominator is empty; the CSV writes "n/a".
    Units differ per detector: diff counts messages, quote counts
    device views, drift counts sender-to-receiver directions.
    """

    scenario: str
    detector: str
    tpr: float | None
    fpr: float | None

    def to_csv_row(self) -> list[str]:
        def fmt(x: float | None) -> str:
            return "n/a" if x is None else str(x)

        return [self.scenario, self.detector, fmt(self.tpr), fmt(self.fpr)]


def _rate(hits: int, total: int) -> float | None:
    return hits / total if total else None


def _eval_diff(transcript: Transcript) -> EvalRow:
    tp = fp = pos = neg = 0
    for d in transcript.deliveries:
        report = diff_detect([d.delivered], [d.sent])
        flagged = report.verdict == VERDICT_MUTATED
        if d.altered:
            pos += 1
            tp += 1 if flagged else 0
        else:
            neg += 1
            fp += 1 if flagged else 0
    return EvalRow(
        scenario=transcript.config.name,
        detector="diff",
        tpr=_rate(tp, pos),
        fpr=_rate(fp, neg),
    )


def _eval_quote(transcript: Transcript) -> EvalRow:
    tp = fp = pos = neg = 0
    for actor, mailbox in sorted(transcript.views.items()):
        truth = any(
            d.inconsistent_quotes
            for d in transcript.deliveries
            if d.sent.to_actor == actor
        )
        flagged = quote_mismatch_detect(mailbox).verdict == VERDICT_MUTATED
        if truth:
            pos += 1
            tp += 1 if flagged else 0
        else:
            neg += 1
            fp += 1 if flagged else 0
    return EvalRow(
        scenario=transcript.config.name,
        detector="quote",
        tpr=_rate(tp, pos),
        fpr=_rate(fp, neg),
    )


def _eval_drift(transcript: Transcript) -> EvalRow:
    tp = fp = pos = neg = 0
    altered_dirs = {
        f"{d.sent.from_actor}->{d.sent.to_actor}"
        for d in transcript.deliveries
        if d.altered
    }
    for direction, labels in sorted(transcript.direction_labels().items()):
        flagged = drift_detect(labels).verdict == VERDICT_SUSPICIOUS
        if direction in altered_dirs:
            pos += 1
            tp += 1 if flagged else 0
        else:
            neg += 1
            fp += 1 if flagged else 0
    return EvalRow(
        scenario=transcript.config.name,
        detector="drift",
        tpr=_rate(tp, pos),
        fpr=_rate(fp, neg),
    )


_EVALUATORS = {"diff": _eval_diff, "quote": _eval_quote, "drift": _eval_drift}


def evaluate(
    scenarios: Sequence[ScenarioConfig],
    pack: RulePack | None = None,
    detectors: Sequence[str] = DETECTOR_NAMES,
    out_csv: Path | str | None = None,
) -> list[EvalRow]:
    """Run every scenario once, then score each detector on it.

    Positives for diff are altered messages; for quote, device views
    whose delivered quotes disagreed with the receiver's expected view;
    for drift, directions that carried at least one altered message.
    Rows come back scenario-major in the detector order given, and are
    optionally written as CSV with an "n/a" painted over any rate whose
    denominator was empty.
    """
    pack = pack or load_default_pack()
    for name in detectors:
        if name not in _EVALUATORS:
            raise ValueError(
                f"unknown detector {name!r}; expected a subset of {DETECTOR_NAMES}"
            )
    rows: list[EvalRow] = []
    for config in scenarios:
        transcript = run(config, pack)
        for name in detectors:
            rows.append(_EVALUATORS[name](transcript))
    if out_csv is not None:
        write_evaluation_csv(rows, out_csv)
    return rows


def write_evaluation_csv(rows: Sequence[EvalRow], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["scenario", "detector", "tpr", "fpr"])
        for row in rows:
            writer.writerow(row.to_csv_row())
    return path

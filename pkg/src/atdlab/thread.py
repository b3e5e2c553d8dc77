"""Threaded messages, quoting, and the interception ledger.

A message is fresh text plus zero or more quoted earlier messages.  The
ledger is the attacker-side memory: what each message really said, and
which rewrite each recipient's copy carries.  Interception consults it
to keep every device's view of the thread self-consistent, so that
quoted text always matches what that device was shown before.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ._text import prefix_quote
from .errors import (
    HeadActError,
    LedgerError,
    LedgerInconsistencyError,
    ScenarioError,
)
from .analysis import classify
from .lexicon import RulePack, StrategyLabel
from .transform import TransformRecord, apply_record, rewrite

SEGMENT_KINDS = ("fresh", "quote")


@dataclass(frozen=True)
class Segment:
    """One block of a body: the author's words or a quoted message."""

    kind: str
    text: str
    source_id: str | None = None
    attribution: str | None = None

    def __post_init__(self):
        if self.kind not in SEGMENT_KINDS:
            raise ValueError(f"segment kind must be one of {SEGMENT_KINDS}")
        if self.kind == "fresh" and (self.source_id or self.attribution):
            raise ValueError("fresh segments carry no source_id or attribution")
        if self.kind == "quote" and not (self.source_id and self.attribution):
            raise ValueError("quote segments need source_id and attribution")

    def to_json(self) -> dict:
        doc: dict = {"kind": self.kind, "text": self.text}
        if self.kind == "quote":
            doc["source_id"] = self.source_id
            doc["attribution"] = self.attribution
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Segment":
        return cls(
            kind=doc["kind"],
            text=doc["text"],
            source_id=doc.get("source_id"),
            attribution=doc.get("attribution"),
        )


@dataclass(frozen=True)
class Message:
    """One email as composed or as delivered."""

    id: str
    thread_id: str
    from_actor: str
    to_actor: str
    subject: str
    sent_at: str
    segments: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    def fresh_text(self) -> str:
        return "\n\n".join(s.text for s in self.segments if s.kind == "fresh")

    def quotes(self) -> tuple[Segment, ...]:
        return tuple(s for s in self.segments if s.kind == "quote")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "thread_id": self.thread_id,
            "from": self.from_actor,
            "to": self.to_actor,
            "subject": self.subject,
            "sent_at": self.sent_at,
            "segments": [s.to_json() for s in self.segments],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Message":
        return cls(
            id=doc["id"],
            thread_id=doc["thread_id"],
            from_actor=doc["from"],
            to_actor=doc["to"],
            subject=doc["subject"],
            sent_at=doc["sent_at"],
            segments=tuple(Segment.from_json(s) for s in doc["segments"]),
        )


def render_quote(message: Message) -> Segment:
    """Quote a message the way a mail client would.

    The message's fresh text comes first, every line prefixed with
    "> "; each quote the message itself carried follows, attribution
    line included, gaining one more prefix level.  The result carries
    the quoted message's id and an attribution built from its sender
    and timestamp.
    """
    lines = [prefix_quote(message.fresh_text())]
    for seg in message.quotes():
        lines.append("> " + seg.attribution)
        lines.append(prefix_quote(seg.text))
    return Segment(
        kind="quote",
        text="\n".join(lines),
        source_id=message.id,
        attribution=f"On {message.sent_at}, {message.from_actor} wrote:",
    )


@dataclass(frozen=True)
class TargetSpec:
    """How one recipient's incoming mail is re-dressed.

    Exactly one of strategy (an absolute target) or delta (a rank shift
    from the classified source, clamped to the scale) is set.
    """

    strategy: StrategyLabel | None = None
    delta: int | None = None

    def __post_init__(self):
        if (self.strategy is None) == (self.delta is None):
            raise ScenarioError("a target needs exactly one of strategy or delta")

    def resolve(self, source: StrategyLabel) -> StrategyLabel:
        if self.strategy is not None:
            return self.strategy
        rank = max(0, min(3, source.rank + self.delta))
        return StrategyLabel(rank)

    def to_json(self) -> dict:
        if self.strategy is not None:
            return {"strategy": self.strategy.wire_name}
        return {"delta": self.delta}

    @classmethod
    def from_json(cls, doc: dict) -> "TargetSpec":
        known = {"strategy", "delta"}
        extra = set(doc) - known
        if extra:
            raise ScenarioError(f"unknown target fields {sorted(extra)}")
        strategy = doc.get("strategy")
        return cls(
            strategy=StrategyLabel.from_name(strategy) if strategy else None,
            delta=doc.get("delta"),
        )


@dataclass(frozen=True)
class AttackConfig:
    """What the interception point does to this thread.

    targets maps recipient actor ids to rewrite specs.  Rewriting
    starts at message sequence start_index; earlier traffic passes
    untouched.  fix_quotes keeps each device's quoted history aligned
    with what that device saw; switching it off models a sloppy
    attacker.  slots feeds template slots such as a deadline.
    """

    targets: dict[str, TargetSpec] = field(default_factory=dict)
    start_index: int = 0
    fix_quotes: bool = True
    slots: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "targets": {k: v.to_json() for k, v in sorted(self.targets.items())},
            "start_index": self.start_index,
            "fix_quotes": self.fix_quotes,
            "slots": dict(sorted(self.slots.items())),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AttackConfig":
        known = {"targets", "start_index", "fix_quotes", "slots"}
        extra = set(doc) - known
        if extra:
            raise ScenarioError(f"unknown attack fields {sorted(extra)}")
        targets = {
            actor: TargetSpec.from_json(spec)
            for actor, spec in doc.get("targets", {}).items()
        }
        return cls(
            targets=targets,
            start_index=doc.get("start_index", 0),
            fix_quotes=doc.get("fix_quotes", True),
            slots=dict(doc.get("slots", {})),
        )


@dataclass
class _Entry:
    message: Message
    seq: int
    records: dict[str, TransformRecord] = field(default_factory=dict)

    @property
    def quote_children(self) -> list[tuple[str, str]]:
        return [(s.source_id, s.attribution) for s in self.message.quotes()]


class Ledger:
    """Attacker-side memory of every message and every per-device rewrite."""

    def __init__(self):
        self._entries: dict[str, _Entry] = {}
        self._order: list[str] = []

    def __len__(self) -> int:
        return len(self._order)

    def __contains__(self, message_id: str) -> bool:
        return message_id in self._entries

    def register_sent(self, message: Message) -> int:
        """Record a message as composed.  Returns its sequence index."""
        if message.id in self._entries:
            raise LedgerError(f"message id {message.id!r} registered twice")
        seq = len(self._order)
        self._entries[message.id] = _Entry(message=message, seq=seq)
        self._order.append(message.id)
        return seq

    def add_record(self, message_id: str, viewer: str, record: TransformRecord):
        entry = self._entry(message_id)
        if viewer in entry.records:
            raise LedgerError(
                f"message {message_id!r} already has a record for {viewer!r}"
            )
        entry.records[viewer] = record

    def record_for(self, message_id: str, viewer: str) -> TransformRecord | None:
        return self._entry(message_id).records.get(viewer)

    def original_fresh(self, message_id: str) -> str:
        return self._entry(message_id).message.fresh_text()

    def view_fresh(self, viewer: str, message_id: str) -> str:
        """The fresh text of a message as the viewer's device shows it."""
        entry = self._entry(message_id)
        record = entry.records.get(viewer)
        fresh = entry.message.fresh_text()
        return apply_record(record, fresh) if record else fresh

    def expected_quote_text(self, viewer: str, message_id: str) -> str:
        """Reconstruct what quoting a message looks like on the viewer's device.

        Built from ledger structure alone, never by parsing quoted text:
        the viewer's fresh-text view, then each quoted child's
        attribution and its own reconstruction, one prefix level deeper.
        """
        entry = self._entry(message_id)
        lines = [prefix_quote(self.view_fresh(viewer, message_id))]
        for child_id, attribution in entry.quote_children:
            lines.append("> " + attribution)
            lines.append(prefix_quote(self.expected_quote_text(viewer, child_id)))
        return "\n".join(lines)

    def message_ids(self) -> list[str]:
        return list(self._order)

    def entry_snapshot(self, message_id: str) -> dict:
        entry = self._entry(message_id)
        return {
            "message": entry.message.to_json(),
            "seq": entry.seq,
            "records": {
                viewer: record.to_json()
                for viewer, record in sorted(entry.records.items())
            },
        }

    def _entry(self, message_id: str) -> _Entry:
        try:
            return self._entries[message_id]
        except KeyError:
            raise LedgerError(f"message id {message_id!r} is not in the ledger") from None


def intercept_deliver(
    message: Message,
    attack: AttackConfig | None,
    ledger: Ledger,
    pack: RulePack,
) -> Message:
    """Pass one message through the interception point.

    The message registers in the ledger as composed.  With no attack it
    is delivered byte for byte.  Otherwise incoming quotes are checked
    against the sender's expected view (a mismatch means the ledger and
    the thread have diverged, which aborts delivery) and rewritten to
    the receiver's view; then, if the receiver is targeted and the
    thread has reached the attack's start index, the fresh text is
    re-dressed and the rewrite is recorded against the receiver.

    A fresh text whose strategy already matches the target, or one with
    no extractable head act, passes through unchanged.
    """
    seq = ledger.register_sent(message)
    if attack is None:
        return message

    segments: list[Segment] = []
    for seg in message.segments:
        if seg.kind != "quote":
            segments.append(seg)
            continue
        if attack.fix_quotes:
            expected = ledger.expected_quote_text(message.from_actor, seg.source_id)
            if seg.text != expected:
                raise LedgerInconsistencyError(
                    f"message {message.id!r} quotes {seg.source_id!r} with text "
                    f"that does not match the sender's view"
                )
            seg = replace(
                seg,
                text=ledger.expected_quote_text(message.to_actor, seg.source_id),
            )
        segments.append(seg)
    delivered = replace(message, segments=tuple(segments))

    spec = attack.targets.get(message.to_actor)
    if spec is None or seq < attack.start_index:
        return delivered
    fresh = message.fresh_text()
    if not fresh.strip():
        return delivered
    source = classify(fresh, pack).label
    target = spec.resolve(source)
    if target == source:
        return delivered
    try:
        new_body, record = rewrite(
            fresh, target, pack, slots=attack.slots, message_id=message.id
        )
    except HeadActError:
        return delivered
    ledger.add_record(message.id, message.to_actor, record)
    rebuilt = [Segment(kind="fresh", text=new_body)]
    rebuilt.extend(s for s in delivered.segments if s.kind == "quote")
    return replace(delivered, segments=tuple(rebuilt))

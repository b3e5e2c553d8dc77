"""Writing a body: strategy rewrites and reversible edit records.

Every mutation is captured as a TransformRecord holding byte-span edits
against the pre-edit text.  Applying a record replays the mutation;
reversing one restores the original and refuses loudly if the text in
hand does not carry the recorded replacements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ._text import sentence_starts, tokenize
from .analysis import classify, extract_head_act
from .errors import ReversalError, SlotError
from .lexicon import RulePack, StrategyLabel, render_template

# Verbs that read as apologetic when an "I" sentence opens with them.
APOLOGY_PRONE_VERBS = frozenset(
    {
        "need", "want", "think", "believe", "feel", "know", "have",
        "made", "did", "forgot", "missed", "sent", "said", "wrote",
        "changed", "moved", "broke", "left", "took",
    }
)

DEFAULT_APOLOGY_PHRASE = "I'm sorry, but "

STRATEGY_RULE_PREFIX = "strategy-template"
APOLOGY_RULE_ID = "apologetic-i"


@dataclass(frozen=True)
class Edit:
    """One replacement; start and end are byte offsets into the pre-edit text."""

    start: int
    end: int
    original: str
    replacement: str
    rule_id: str

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"invalid edit span ({self.start}, {self.end})")


@dataclass
class TransformRecord:
    """The full account of one body mutation, enough to undo it."""

    message_id: str
    source: StrategyLabel
    target: StrategyLabel
    edits: list[Edit] = field(default_factory=list)

    def __post_init__(self):
        last = 0
        for edit in self.edits:
            if edit.start < last:
                raise ValueError("edits must be ordered and non-overlapping")
            last = edit.end

    def to_json(self) -> dict:
        return {
            "message_id": self.message_id,
            "source": self.source.wire_name,
            "target": self.target.wire_name,
            "edits": [
                {
                    "start": e.start,
                    "end": e.end,
                    "original": e.original,
                    "replacement": e.replacement,
                    "rule_id": e.rule_id,
                }
                for e in self.edits
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TransformRecord":
        return cls(
            message_id=doc["message_id"],
            source=StrategyLabel.from_name(doc["source"]),
            target=StrategyLabel.from_name(doc["target"]),
            edits=[
                Edit(
                    start=e["start"],
                    end=e["end"],
                    original=e["original"],
                    replacement=e["replacement"],
                    rule_id=e["rule_id"],
                )
                for e in doc["edits"]
            ],
        )


def apply_record(record: TransformRecord, text: str) -> str:
    """Replay a record against the text it was minted for.

    All spans address the pre-edit byte string, so the edits splice in
    one simultaneous pass.  A span whose bytes do not equal the recorded
    original raises ReversalError.
    """
    data = text.encode("utf-8")
    out = bytearray()
    cursor = 0
    for edit in record.edits:
        if edit.end > len(data):
            raise ReversalError(
                f"edit span ({edit.start}, {edit.end}) falls outside the text"
            )
        found = data[edit.start : edit.end].decode("utf-8", errors="replace")
        if found != edit.original:
            raise ReversalError(
                f"text at bytes {edit.start}..{edit.end} is {found!r}, "
                f"record expects {edit.original!r}"
            )
        out += data[cursor : edit.start]
        out += edit.replacement.encode("utf-8")
        cursor = edit.end
    out += data[cursor:]
    return out.decode("utf-8")


def reverse(record: TransformRecord, text: str) -> str:
    """Undo a record, recovering the pre-edit text.

    Walks the edits with a running offset, checks that each replacement
    is exactly where it should be in the mutated text, and splices the
    originals back.  Any mismatch raises ReversalError.
    """
    data = text.encode("utf-8")
    out = bytearray()
    cursor = 0
    shift = 0
    for edit in record.edits:
        start = edit.start + shift
        repl = edit.replacement.encode("utf-8")
        end = start + len(repl)
        if end > len(data) or data[start:end] != repl:
            found = data[start : min(end, len(data))].decode(
                "utf-8", errors="replace"
            )
            raise ReversalError(
                f"mutated text at bytes {start}..{end} is {found!r}, "
                f"record expects {edit.replacement!r}"
            )
        out += data[cursor:start]
        out += edit.original.encode("utf-8")
        cursor = end
        shift += len(repl) - (edit.end - edit.start)
    out += data[cursor:]
    return out.decode("utf-8")


def rewrite(
    body: str,
    target: StrategyLabel,
    pack: RulePack,
    slots: dict[str, str] | None = None,
    message_id: str = "",
) -> tuple[str, TransformRecord]:
    """Re-dress a body in the target strategy, keeping the head act.

    The head act is extracted, poured into the first template the pack
    offers for the target, and the whole body is replaced in one edit.
    Raises HeadActError when the body has no request core and SlotError
    when the chosen template needs a slot the caller did not fill.
    """
    source = classify(body, pack).label
    head = extract_head_act(body, pack)
    template = pack.templates_for(target)[0]
    values: dict[str, str | None] = {"head": head.text}
    if slots:
        for name, value in slots.items():
            if name == "head":
                raise SlotError("the head slot is filled from the body itself")
            values[name] = value
    for slot in template.required_slots:
        if values.get(slot) is None:
            raise SlotError(
                f"template ({target.wire_name}) requires slot {slot!r}"
            )
    new_body = render_template(template, values)
    record = TransformRecord(
        message_id=message_id,
        source=source,
        target=target,
        edits=[
            Edit(
                start=0,
                end=len(body.encode("utf-8")),
                original=body,
                replacement=new_body,
                rule_id=f"{STRATEGY_RULE_PREFIX}:{target.wire_name}",
            )
        ],
    )
    return new_body, record


def apply_sorry(
    body: str,
    pack: RulePack,
    message_id: str = "",
    phrase: str = DEFAULT_APOLOGY_PHRASE,
) -> tuple[str, TransformRecord]:
    """Make first-person sentences read apologetic.

    Each sentence that opens with the bare pronoun "I" followed by an
    apology-prone verb gains the apology phrase in front of it.  The
    strategy is unchanged; the record's source and target are both the
    body's current label.
    """
    label = (
        classify(body, pack).label
        if body.strip()
        else StrategyLabel.BALD_ON_RECORD
    )
    data = body.encode("utf-8")
    edits: list[Edit] = []
    for start in sentence_starts(body):
        tokens = tokenize(body[start:])
        # tokens[0].start == 0 keeps sentences that open with punctuation
        # (a quotation mark before the pronoun) out of scope; the edit span
        # must sit exactly on the "I".
        if len(tokens) < 2 or tokens[0].text != "I" or tokens[0].start != 0:
            continue
        if tokens[1].text.lower() not in APOLOGY_PRONE_VERBS:
            continue
        byte_start = len(body[:start].encode("utf-8"))
        edits.append(
            Edit(
                start=byte_start,
                end=byte_start + 1,
                original="I",
                replacement=phrase + "I",
                rule_id=APOLOGY_RULE_ID,
            )
        )
    record = TransformRecord(
        message_id=message_id, source=label, target=label, edits=edits
    )
    if not edits:
        return body, record
    return apply_record(record, body), record

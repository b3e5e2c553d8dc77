"""Rule packs: the vocabulary a deployment uses to read and write politeness.

A pack bundles three things: markers (surface phrases that signal a
politeness strategy), templates (skeletons for rendering a request in a
chosen strategy), and the closed list of request-core verbs that anchor
the head act.  Packs are data, not code; they load from JSON, validate
hard, and round-trip through serialization unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from functools import lru_cache
from importlib import resources
from typing import BinaryIO, Iterable, Union

from ._text import ByteMap, Token, tokenize, whitespace_only_between
from .errors import PackError, SlotError

MAX_PATTERN_WORDS = 12

# Environment variable naming an alternative default pack file.
RULE_PACK_ENV = "ATDLAB_PACK"

CATEGORIES = frozenset(
    {"address", "hedge", "deference", "solidarity", "urgency", "hint", "request-core"}
)

SLOT_NAMES = frozenset({"head", "name", "deadline"})


class StrategyLabel(IntEnum):
    """Politeness strategies, ordered from most direct to most indirect.

    The integer value is the rank used for distance arithmetic.
    """

    BALD_ON_RECORD = 0
    POSITIVE = 1
    NEGATIVE = 2
    OFF_RECORD = 3

    @property
    def rank(self) -> int:
        return int(self)

    @property
    def wire_name(self) -> str:
        return _LABEL_NAMES[self]

    @classmethod
    def from_name(cls, name: str) -> "StrategyLabel":
        try:
            return _NAME_LABELS[name]
        except KeyError:
            raise PackError(
                f"unknown strategy name {name!r}; expected one of "
                f"{sorted(_NAME_LABELS)}"
            ) from None


_LABEL_NAMES = {
    StrategyLabel.BALD_ON_RECORD: "bald_on_record",
    StrategyLabel.POSITIVE: "positive",
    StrategyLabel.NEGATIVE: "negative",
    StrategyLabel.OFF_RECORD: "off_record",
}
_NAME_LABELS = {v: k for k, v in _LABEL_NAMES.items()}


@dataclass
class Marker:
    """One surface phrase and the strategy evidence it carries."""

    id: str
    category: str
    strategy: StrategyLabel
    pattern: str
    weight: float
    words: tuple[str, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        self.words = tuple(w.lower() for w in self.pattern.split())


@dataclass
class Template:
    """A body skeleton for one strategy.

    Slots appear as {name} placeholders.  A bracketed region such as
    "[ - the deadline is {deadline}]" is emitted only when its single
    optional slot has a value; otherwise the whole region vanishes.
    """

    strategy: StrategyLabel
    body: str
    required_slots: frozenset[str]
    optional_slots: frozenset[str]


@dataclass
class MarkerHit:
    """A marker occurrence; span is a byte range into the segment text."""

    marker: Marker
    span: tuple[int, int]
    char_span: tuple[int, int] = field(compare=False)
    segment: int = 0


@dataclass
class RulePack:
    """Immutable-by-convention bundle of markers, templates, and verbs."""

    version: str
    language: str
    markers: list[Marker]
    templates: list[Template]
    request_core_verbs: tuple[str, ...]

    def templates_for(self, label: StrategyLabel) -> list[Template]:
        return [t for t in self.templates if t.strategy == label]

    @property
    def core_verbs(self) -> frozenset[str]:
        return frozenset(self.request_core_verbs)


PackSource = Union[bytes, str, BinaryIO]


def load_pack(source: PackSource) -> RulePack:
    """Parse and validate a pack from JSON bytes, text, or a binary stream.

    Every validation failure raises PackError with a message naming the
    offending entry.
    """
    raw = _read_source(source)
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise PackError(f"pack is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise PackError("pack root must be a JSON object")
    return _pack_from_doc(doc)


def serialize_pack(pack: RulePack) -> str:
    """Render a pack back to canonical JSON text.

    Loading the output yields a pack equal to the input.
    """
    doc = {
        "version": pack.version,
        "language": pack.language,
        "markers": [
            {
                "id": m.id,
                "category": m.category,
                "strategy": m.strategy.wire_name,
                "pattern": m.pattern,
                "weight": m.weight,
            }
            for m in pack.markers
        ],
        "templates": [
            {
                "strategy": t.strategy.wire_name,
                "body": t.body,
                "required_slots": sorted(t.required_slots),
                "optional_slots": sorted(t.optional_slots),
            }
            for t in pack.templates
        ],
        "request_core_verbs": list(pack.request_core_verbs),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


@lru_cache(maxsize=1)
def load_default_pack() -> RulePack:
    """The pack bundled with the package.  Cached; treat as read-only."""
    data = resources.files("atdlab").joinpath("data/default_pack.json").read_bytes()
    return load_pack(data)


def _read_source(source: PackSource) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, str):
        return source.encode("utf-8")
    if hasattr(source, "read"):
        data = source.read()
        return data if isinstance(data, bytes) else data.encode("utf-8")
    raise PackError(f"cannot read pack from {type(source).__name__}")


def _require_fields(obj: dict, allowed: dict[str, type], where: str) -> None:
    for key in obj:
        if key not in allowed:
            raise PackError(f"{where}: unknown field {key!r}")
    for key, typ in allowed.items():
        if key not in obj:
            raise PackError(f"{where}: missing field {key!r}")
        if typ is float:
            if not isinstance(obj[key], (int, float)) or isinstance(obj[key], bool):
                raise PackError(f"{where}: field {key!r} must be a number")
        elif not isinstance(obj[key], typ):
            raise PackError(f"{where}: field {key!r} must be {typ.__name__}")


def _pack_from_doc(doc: dict) -> RulePack:
    _require_fields(
        doc,
        {
            "version": str,
            "language": str,
            "markers": list,
            "templates": list,
            "request_core_verbs": list,
        },
        "pack",
    )
    if doc["language"] != "en":
        raise PackError(f"pack language must be 'en', got {doc['language']!r}")
    if not doc["version"]:
        raise PackError("pack version must be a non-empty string")

    markers = [_marker_from_doc(m, i) for i, m in enumerate(doc["markers"])]
    seen: set[str] = set()
    for m in markers:
        if m.id in seen:
            raise PackError(f"marker id {m.id!r} appears more than once")
        seen.add(m.id)

    verbs = _verbs_from_doc(doc["request_core_verbs"])
    templates = [_template_from_doc(t, i) for i, t in enumerate(doc["templates"])]

    pack = RulePack(
        version=doc["version"],
        language=doc["language"],
        markers=markers,
        templates=templates,
        request_core_verbs=verbs,
    )
    _check_coverage(pack)
    _check_template_consistency(pack)
    return pack


def _marker_from_doc(obj, index: int) -> Marker:
    where = f"marker[{index}]"
    if not isinstance(obj, dict):
        raise PackError(f"{where}: must be an object")
    _require_fields(
        obj,
        {"id": str, "category": str, "strategy": str, "pattern": str, "weight": float},
        where,
    )
    where = f"marker {obj['id']!r}"
    if not obj["id"]:
        raise PackError(f"marker[{index}]: id must be non-empty")
    if obj["category"] not in CATEGORIES:
        raise PackError(f"{where}: unknown category {obj['category']!r}")
    strategy = StrategyLabel.from_name(obj["strategy"])
    weight = float(obj["weight"])
    if weight <= 0:
        raise PackError(f"{where}: weight must be positive")
    _check_pattern(obj["pattern"], where)
    return Marker(
        id=obj["id"],
        category=obj["category"],
        strategy=strategy,
        pattern=obj["pattern"],
        weight=weight,
    )


def _check_pattern(pattern: str, where: str) -> None:
    words = pattern.split()
    if not 1 <= len(words) <= MAX_PATTERN_WORDS:
        raise PackError(
            f"{where}: pattern must have 1 to {MAX_PATTERN_WORDS} words, "
            f"got {len(words)}"
        )
    wildcards = sum(1 for w in words if w == "*")
    if wildcards > 1:
        raise PackError(f"{where}: at most one '*' wildcard is allowed")
    for w in words:
        if w == "*":
            continue
        toks = tokenize(w)
        if len(toks) != 1 or toks[0].text.lower() != w.lower():
            raise PackError(
                f"{where}: pattern word {w!r} must be a single plain word"
            )


def _verbs_from_doc(raw: list) -> tuple[str, ...]:
    if not raw:
        raise PackError("request_core_verbs must be non-empty")
    verbs: list[str] = []
    for v in raw:
        if not isinstance(v, str) or not v:
            raise PackError("request_core_verbs entries must be non-empty strings")
        toks = tokenize(v)
        if len(toks) != 1 or toks[0].text.lower() != v.lower():
            raise PackError(f"request-core verb {v!r} must be a single plain word")
        verbs.append(v.lower())
    if len(set(verbs)) != len(verbs):
        raise PackError("request_core_verbs contains duplicates")
    return tuple(sorted(verbs))


def _template_from_doc(obj, index: int) -> Template:
    where = f"template[{index}]"
    if not isinstance(obj, dict):
        raise PackError(f"{where}: must be an object")
    _require_fields(
        obj,
        {"strategy": str, "body": str, "required_slots": list, "optional_slots": list},
        where,
    )
    strategy = StrategyLabel.from_name(obj["strategy"])
    where = f"template[{index}] ({strategy.wire_name})"
    required = _slot_set(obj["required_slots"], where, "required_slots")
    optional = _slot_set(obj["optional_slots"], where, "optional_slots")
    if required & optional:
        raise PackError(f"{where}: slots cannot be both required and optional")
    if "head" not in required:
        raise PackError(f"{where}: required_slots must include 'head'")
    template = Template(
        strategy=strategy,
        body=obj["body"],
        required_slots=required,
        optional_slots=optional,
    )
    _check_template_shape(template, where)
    return template


def _slot_set(raw: list, where: str, which: str) -> frozenset[str]:
    slots: set[str] = set()
    for s in raw:
        if not isinstance(s, str) or s not in SLOT_NAMES:
            raise PackError(f"{where}: {which} entry {s!r} is not a known slot")
        if s in slots:
            raise PackError(f"{where}: {which} lists {s!r} twice")
        slots.add(s)
    return frozenset(slots)


# Template bodies parse into a flat list of parts.  A part is either
# literal text, a slot, or a region holding its own text/slot parts.


@dataclass
class _TextPart:
    text: str


@dataclass
class _SlotPart:
    slot: str


@dataclass
class _RegionPart:
    parts: list
    slot: str


def _parse_body(body: str, where: str) -> list:
    parts: list = []
    i = 0
    buf: list[str] = []

    def flush():
        if buf:
            parts.append(_TextPart("".join(buf)))
            buf.clear()

    while i < len(body):
        ch = body[i]
        if ch == "[":
            flush()
            close = body.find("]", i + 1)
            if close < 0:
                raise PackError(f"{where}: unclosed '[' in body")
            inner = _parse_body(body[i + 1 : close], where)
            slots = [p.slot for p in inner if isinstance(p, _SlotPart)]
            if any(isinstance(p, _RegionPart) for p in inner):
                raise PackError(f"{where}: regions cannot nest")
            if len(slots) != 1:
                raise PackError(
                    f"{where}: a bracketed region must hold exactly one slot"
                )
            parts.append(_RegionPart(inner, slots[0]))
            i = close + 1
        elif ch == "]":
            raise PackError(f"{where}: unmatched ']' in body")
        elif ch == "{":
            flush()
            close = body.find("}", i + 1)
            if close < 0:
                raise PackError(f"{where}: unclosed '{{' in body")
            slot = body[i + 1 : close]
            if slot not in SLOT_NAMES:
                raise PackError(f"{where}: body names unknown slot {slot!r}")
            parts.append(_SlotPart(slot))
            i = close + 1
        else:
            buf.append(ch)
            i += 1
    flush()
    return parts


def _check_template_shape(template: Template, where: str) -> None:
    parts = _parse_body(template.body, where)
    bare = {p.slot for p in parts if isinstance(p, _SlotPart)}
    regioned = {p.slot for p in parts if isinstance(p, _RegionPart)}
    for slot in bare:
        if slot not in template.required_slots:
            raise PackError(
                f"{where}: slot {slot!r} appears bare in the body but is "
                f"not in required_slots"
            )
    for slot in regioned:
        if slot not in template.optional_slots:
            raise PackError(
                f"{where}: slot {slot!r} appears in a region but is not in "
                f"optional_slots"
            )
    for slot in template.required_slots:
        if slot not in bare:
            raise PackError(f"{where}: required slot {slot!r} never appears bare")
    for slot in template.optional_slots:
        if slot not in regioned:
            raise PackError(
                f"{where}: optional slot {slot!r} never appears in a region"
            )


def render_template(template: Template, values: dict[str, str | None]) -> str:
    """Fill a template.

    Required slots must have a value; a missing one raises SlotError.
    Optional slots without a value erase their whole bracketed region.
    The head is capitalized exactly when it starts the rendered body or
    follows sentence punctuation; elsewhere it is inserted verbatim.
    """
    for slot in values:
        if slot not in SLOT_NAMES:
            raise SlotError(f"unknown slot {slot!r}")
    parts = _parse_body(template.body, f"template ({template.strategy.wire_name})")
    out: list[str] = []
    _render_parts(parts, template, values, out)
    return "".join(out)


def _render_parts(parts, template, values, out) -> None:
    for part in parts:
        if isinstance(part, _TextPart):
            out.append(part.text)
        elif isinstance(part, _SlotPart):
            value = values.get(part.slot)
            if value is None:
                raise SlotError(
                    f"template ({template.strategy.wire_name}) requires slot "
                    f"{part.slot!r}"
                )
            out.append(_cased(part.slot, value, out))
        else:
            if values.get(part.slot) is not None:
                _render_parts(part.parts, template, values, out)


def _cased(slot: str, value: str, out: list[str]) -> str:
    if slot != "head" or not value:
        return value
    before = "".join(out).rstrip()
    if before == "" or before[-1] in ".!?":
        return value[0].upper() + value[1:]
    return value


def _check_coverage(pack: RulePack) -> None:
    for label in StrategyLabel:
        if not pack.templates_for(label):
            raise PackError(f"pack has no template for strategy {label.wire_name}")
        if label == StrategyLabel.BALD_ON_RECORD:
            continue
        if not any(
            m.strategy == label and m.category != "request-core" for m in pack.markers
        ):
            raise PackError(f"pack has no marker for strategy {label.wire_name}")


def _check_template_consistency(pack: RulePack) -> None:
    # Each template, rendered with sample values, must classify as its
    # own strategy; otherwise the pack disagrees with itself.
    from . import analysis

    verb = pack.request_core_verbs[0]
    sample = {"head": f"we {verb} a report", "name": "Sam", "deadline": "today"}
    for i, template in enumerate(pack.templates):
        body = render_template(template, sample)
        label = analysis.classify(body, pack).label
        if label != template.strategy:
            raise PackError(
                f"template[{i}] ({template.strategy.wire_name}): rendered "
                f"sample classifies as {label.wire_name}"
            )


def match_markers(text: str, pack: RulePack) -> list[MarkerHit]:
    """All marker occurrences, leftmost-longest, non-overlapping.

    The scan walks tokens left to right.  At each token the longest
    matching pattern wins; equal-length candidates at the same spot tie
    toward the lexicographically smallest marker id.  A multi-word
    pattern matches only when its tokens are separated by whitespace
    alone.  Spans are byte offsets into the text.
    """
    tokens = tokenize(text)
    bmap = ByteMap(text)
    hits: list[MarkerHit] = []
    i = 0
    n = len(tokens)
    while i < n:
        best: Marker | None = None
        best_len = 0
        for marker in pack.markers:
            k = len(marker.words)
            if i + k > n:
                continue
            if best is not None and (
                k < best_len or (k == best_len and marker.id >= best.id)
            ):
                continue
            if _words_match(marker.words, tokens, i, text):
                best = marker
                best_len = k
        if best is None:
            i += 1
            continue
        first, last = tokens[i], tokens[i + best_len - 1]
        hits.append(
            MarkerHit(
                marker=best,
                span=bmap.span_to_bytes(first.start, last.end),
                char_span=(first.start, last.end),
            )
        )
        i += best_len
    return hits


def _words_match(
    words: tuple[str, ...], tokens: list[Token], start: int, text: str
) -> bool:
    for j, w in enumerate(words):
        tok = tokens[start + j]
        if w != "*" and tok.lower != w:
            return False
        if j > 0 and not whitespace_only_between(
            text, tokens[start + j - 1].end, tok.start
        ):
            return False
    return True

"""Deterministic two-party mail network with an interception point.

A scenario names the actors, how they reply, what the interception
point does, and how jumpy the judgment of the receiving side is.  Given
the same scenario and pack, run() produces byte-identical output every
time: the only randomness is a seeded Mersenne Twister, and timestamps
march on a fixed nine-minute grid.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from importlib import resources
from pathlib import Path

from ._text import token_texts
from .analysis import classify, modal_label
from .errors import ScenarioError
from .lexicon import RulePack, StrategyLabel, load_default_pack
from .thread import (
    AttackConfig,
    Ledger,
    Message,
    Segment,
    intercept_deliver,
    render_quote,
)

REPLY_POLICIES = ("acknowledge", "counter_request", "scrutiny")

RNG_ALGORITHM = "mersenne-twister"

BASE_TIME = datetime(2026, 1, 5, 9, 0, 0, tzinfo=timezone.utc)
TIME_STEP = timedelta(minutes=9)

# Request cores the generator draws from.  None contains a marker
# phrase, so the rendered body's strategy comes from its template alone.
HEAD_BANK = (
    "we need a budget",
    "i need the quarterly report",
    "we need the final slides",
    "i want the updated figures",
    "we need your signature on the contract",
    "i need an estimate for the vendor costs",
    "we need the test results",
    "i want a summary of the meeting",
    "we need the invoice list",
    "i need the deployment plan",
)

DEADLINE_BANK = ("today", "tomorrow", "friday")

ACK_BANK = (
    "Got it, thanks.",
    "Understood, will do.",
    "Received, thank you.",
    "Noted with thanks.",
)

SCRUTINY_BODY = "Something reads off here. Did you write this exact text?"

EVENT_TRUTH_DEFAULT_ABANDONED = "truth_default_abandoned"


@dataclass(frozen=True)
class JudgmentConfig:
    """Receiver-side tampering judgment: weights and alarm threshold."""

    threshold: float = 0.75
    w_edit: float = 0.4
    w_rank: float = 0.4
    w_drift: float = 0.2

    def __post_init__(self):
        for name in ("threshold", "w_edit", "w_rank", "w_drift"):
            if getattr(self, name) < 0:
                raise ScenarioError(f"judgment {name} must be non-negative")
        if self.w_edit + self.w_rank + self.w_drift > 1.0 + 1e-9:
            raise ScenarioError("judgment weights must sum to at most 1")

    def to_json(self) -> dict:
        return {
            "threshold": self.threshold,
            "weights": {
                "edit": self.w_edit,
                "rank": self.w_rank,
                "drift": self.w_drift,
            },
        }

    @classmethod
    def from_json(cls, doc: dict) -> "JudgmentConfig":
        known = {"threshold", "weights"}
        extra = set(doc) - known
        if extra:
            raise ScenarioError(f"unknown judgment fields {sorted(extra)}")
        weights = doc.get("weights", {})
        extra = set(weights) - {"edit", "rank", "drift"}
        if extra:
            raise ScenarioError(f"unknown judgment weights {sorted(extra)}")
        defaults = cls()
        return cls(
            threshold=doc.get("threshold", defaults.threshold),
            w_edit=weights.get("edit", defaults.w_edit),
            w_rank=weights.get("rank", defaults.w_rank),
            w_drift=weights.get("drift", defaults.w_drift),
        )


@dataclass(frozen=True)
class ActorSpec:
    id: str
    reply_policy: str
    base_strategy: StrategyLabel | None = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "reply_policy": self.reply_policy,
            "base_strategy": (
                self.base_strategy.wire_name if self.base_strategy else None
            ),
        }


@dataclass(frozen=True)
class ScriptEvent:
    from_actor: str
    body: str
    quote_prev: bool = False
    subject: str | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a run needs; loads from JSON and validates hard."""

    name: str
    seed: int
    actors: tuple[ActorSpec, ...]
    mode: str  # "generated" or "explicit"
    messages: int = 0
    opener: str = ""
    events: tuple[ScriptEvent, ...] = ()
    subject: str = "Team planning"
    attack: AttackConfig | None = None
    judgment: JudgmentConfig = field(default_factory=JudgmentConfig)

    def actor_ids(self) -> tuple[str, str]:
        return (self.actors[0].id, self.actors[1].id)

    def other(self, actor_id: str) -> str:
        a, b = self.actor_ids()
        return b if actor_id == a else a

    @classmethod
    def from_json(cls, doc: dict) -> "ScenarioConfig":
        known = {"name", "seed", "actors", "script", "attack", "judgment"}
        extra = set(doc) - known
        if extra:
            raise ScenarioError(f"unknown scenario fields {sorted(extra)}")
        for required in ("name", "seed", "actors", "script"):
            if required not in doc:
                raise ScenarioError(f"scenario is missing {required!r}")
        if not isinstance(doc["name"], str) or not doc["name"]:
            raise ScenarioError("scenario name must be a non-empty string")
        if not isinstance(doc["seed"], int) or isinstance(doc["seed"], bool):
            raise ScenarioError("scenario seed must be an integer")

        actors = tuple(_actor_from_json(a) for a in doc["actors"])
        if len(actors) != 2 or actors[0].id == actors[1].id:
            raise ScenarioError("a scenario needs exactly two distinct actors")

        script = doc["script"]
        mode = script.get("mode")
        ids = {a.id for a in actors}
        if mode == "generated":
            extra = set(script) - {"mode", "messages", "opener", "subject"}
            if extra:
                raise ScenarioError(f"unknown script fields {sorted(extra)}")
            messages = script.get("messages")
            if not isinstance(messages, int) or messages < 1:
                raise ScenarioError("script.messages must be a positive integer")
            opener = script.get("opener")
            if opener not in ids:
                raise ScenarioError(f"script.opener {opener!r} is not an actor")
            for actor in actors:
                if actor.base_strategy is None:
                    raise ScenarioError(
                        f"actor {actor.id!r} needs base_strategy in generated mode"
                    )
            events: tuple[ScriptEvent, ...] = ()
        elif mode == "explicit":
            extra = set(script) - {"mode", "events", "subject"}
            if extra:
                raise ScenarioError(f"unknown script fields {sorted(extra)}")
            raw_events = script.get("events")
            if not raw_events:
                raise ScenarioError("script.events must be non-empty")
            events = tuple(_event_from_json(e, ids) for e in raw_events)
            if events[0].quote_prev:
                raise ScenarioError("the first event cannot quote a predecessor")
            messages, opener = len(events), events[0].from_actor
        else:
            raise ScenarioError(
                f"script.mode must be 'generated' or 'explicit', got {mode!r}"
            )

        attack = doc.get("attack")
        if attack is not None:
            attack = AttackConfig.from_json(attack)
            for target in attack.targets:
                if target not in ids:
                    raise ScenarioError(f"attack target {target!r} is not an actor")
        judgment = JudgmentConfig.from_json(doc.get("judgment", {}))
        return cls(
            name=doc["name"],
            seed=doc["seed"],
            actors=actors,
            mode=mode,
            messages=messages,
            opener=opener,
            events=events,
            subject=script.get("subject", "Team planning"),
            attack=attack,
            judgment=judgment,
        )


def _actor_from_json(doc: dict) -> ActorSpec:
    known = {"id", "reply_policy", "base_strategy"}
    extra = set(doc) - known
    if extra:
        raise ScenarioError(f"unknown actor fields {sorted(extra)}")
    actor_id = doc.get("id")
    if not isinstance(actor_id, str) or not actor_id:
        raise ScenarioError("actor id must be a non-empty string")
    policy = doc.get("reply_policy")
    if policy not in REPLY_POLICIES:
        raise ScenarioError(
            f"actor {actor_id!r} reply_policy must be one of {REPLY_POLICIES}"
        )
    base = doc.get("base_strategy")
    return ActorSpec(
        id=actor_id,
        reply_policy=policy,
        base_strategy=StrategyLabel.from_name(base) if base else None,
    )


def _event_from_json(doc: dict, ids: set[str]) -> ScriptEvent:
    known = {"from", "body", "quote_prev", "subject"}
    extra = set(doc) - known
    if extra:
        raise ScenarioError(f"unknown event fields {sorted(extra)}")
    sender = doc.get("from")
    if sender not in ids:
        raise ScenarioError(f"event sender {sender!r} is not an actor")
    body = doc.get("body")
    if not isinstance(body, str) or not body.strip():
        raise ScenarioError("event body must be a non-empty string")
    return ScriptEvent(
        from_actor=sender,
        body=body,
        quote_prev=bool(doc.get("quote_prev", False)),
        subject=doc.get("subject"),
    )


def load_scenario(source) -> ScenarioConfig:
    """Load a scenario from a dict, JSON text/bytes, or a file path."""
    if isinstance(source, dict):
        return ScenarioConfig.from_json(source)
    if isinstance(source, (str, bytes)) and not _looks_like_json(source):
        source = Path(source).read_bytes()
    elif isinstance(source, Path):
        source = source.read_bytes()
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("scenario root must be a JSON object")
    return ScenarioConfig.from_json(doc)


def _looks_like_json(source) -> bool:
    text = source.decode("utf-8", "replace") if isinstance(source, bytes) else source
    return text.lstrip()[:1] in ("{", "")


def bundled_scenario_names() -> list[str]:
    root = resources.files("atdlab").joinpath("data/scenarios")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled_scenario(name: str) -> ScenarioConfig:
    path = resources.files("atdlab").joinpath(f"data/scenarios/{name}.json")
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise ScenarioError(
            f"no bundled scenario named {name!r}; "
            f"available: {', '.join(bundled_scenario_names())}"
        ) from None
    return load_scenario(data)


def token_edit_distance(a: list[str], b: list[str]) -> int:
    """Levenshtein distance over token lists, single-row dynamic program."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        current = [i]
        for j, tok_b in enumerate(b, start=1):
            cost = 0 if tok_a == tok_b else 1
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
            )
        previous = current
    return previous[-1]


def _label_of(text: str, pack: RulePack) -> StrategyLabel:
    if not text.strip():
        return StrategyLabel.BALD_ON_RECORD
    return classify(text, pack).label


def suspicion(
    delivered: Message,
    original: Message,
    sender_history: list[StrategyLabel],
    pack: RulePack,
    judgment: JudgmentConfig | None = None,
) -> float:
    """How loudly a delivery argues it was tampered with, in [0, 1].

    Three normalized components: token edit distance between delivered
    and original fresh text, strategy rank shift, and disagreement of
    the delivered label with the modal label of the sender's history in
    this direction.  The score is zero exactly when the text survived
    untouched and its label matches the history's mode (or no history
    exists yet).
    """
    judgment = judgment or JudgmentConfig()
    tokens_d = token_texts(delivered.fresh_text())
    tokens_o = token_texts(original.fresh_text())
    longest = max(len(tokens_d), len(tokens_o))
    edit = token_edit_distance(tokens_d, tokens_o) / longest if longest else 0.0
    label_d = _label_of(delivered.fresh_text(), pack)
    label_o = _label_of(original.fresh_text(), pack)
    rank = abs(label_d.rank - label_o.rank) / 3
    drift = 0.0
    if sender_history and label_d != modal_label(sender_history):
        drift = 1.0
    return judgment.w_edit * edit + judgment.w_rank * rank + judgment.w_drift * drift


@dataclass
class Delivery:
    """One message's passage through the interception point."""

    seq: int
    sent: Message
    delivered: Message
    sent_label: StrategyLabel
    delivered_label: StrategyLabel
    altered: bool
    suspicion: float
    detection: bool
    inconsistent_quotes: list[str]

    @property
    def rank_delta(self) -> int:
        return self.delivered_label.rank - self.sent_label.rank

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "sent": self.sent.to_json(),
            "delivered": self.delivered.to_json(),
            "sent_label": self.sent_label.wire_name,
            "delivered_label": self.delivered_label.wire_name,
            "altered": self.altered,
            "rank_delta": self.rank_delta,
            "suspicion": self.suspicion,
            "detection": self.detection,
            "inconsistent_quotes": list(self.inconsistent_quotes),
        }


@dataclass
class Transcript:
    """Everything a run produced, ready to serialize."""

    config: ScenarioConfig
    pack_version: str
    deliveries: list[Delivery]
    events: list[dict]
    views: dict[str, list[Message]]

    def header(self) -> dict:
        return {
            "scenario": self.config.name,
            "seed": self.config.seed,
            "rng_algorithm": RNG_ALGORITHM,
            "pack_version": self.pack_version,
            "judgment": self.config.judgment.to_json(),
            "attack": self.config.attack.to_json() if self.config.attack else None,
            "actors": [a.to_json() for a in self.config.actors],
        }

    def sent_messages(self) -> list[Message]:
        return [d.sent for d in self.deliveries]

    def direction_labels(self) -> dict[str, list[StrategyLabel]]:
        """Delivered strategy labels per sender->receiver direction."""
        directions: dict[str, list[StrategyLabel]] = {}
        for d in self.deliveries:
            key = f"{d.sent.from_actor}->{d.sent.to_actor}"
            directions.setdefault(key, []).append(d.delivered_label)
        return directions

    def metrics(self) -> dict:
        altered = [d for d in self.deliveries if d.altered]
        directions = {}
        for d in self.deliveries:
            key = f"{d.sent.from_actor}->{d.sent.to_actor}"
            bucket = directions.setdefault(
                key, {"messages": 0, "altered": 0, "delivered_labels": []}
            )
            bucket["messages"] += 1
            bucket["altered"] += 1 if d.altered else 0
            bucket["delivered_labels"].append(d.delivered_label.wire_name)
        return {
            "scenario": self.config.name,
            "seed": self.config.seed,
            "messages": len(self.deliveries),
            "altered": len(altered),
            "detections": sum(1 for d in self.deliveries if d.detection),
            "mean_abs_rank_delta_altered": (
                sum(abs(d.rank_delta) for d in altered) / len(altered)
                if altered
                else 0.0
            ),
            "mean_suspicion": (
                sum(d.suspicion for d in self.deliveries) / len(self.deliveries)
                if self.deliveries
                else 0.0
            ),
            "max_suspicion": max((d.suspicion for d in self.deliveries), default=0.0),
            "directions": directions,
        }

    def to_json(self) -> dict:
        return {
            "header": self.header(),
            "deliveries": [d.to_json() for d in self.deliveries],
            "events": list(self.events),
        }

    def write(self, outdir) -> dict[str, Path]:
        """Write transcript.json, per-actor views, metrics, and sent bodies."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        written: dict[str, Path] = {}

        def dump(name: str, doc) -> None:
            path = outdir / name
            path.write_text(
                json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
            written[name] = path

        dump("transcript.json", self.to_json())
        dump(
            "sent.json",
            {"messages": [m.to_json() for m in self.sent_messages()]},
        )
        for actor, mailbox in self.views.items():
            dump(
                f"view_{actor}.json",
                {"actor": actor, "messages": [m.to_json() for m in mailbox]},
            )
        dump("metrics.json", self.metrics())
        return written


def run(config: ScenarioConfig, pack: RulePack | None = None) -> Transcript:
    """Play a scenario through the interception point, deterministically."""
    pack = pack or load_default_pack()
    rng = random.Random(config.seed)
    ledger = Ledger()
    policies = {a.id: a.reply_policy for a in config.actors}
    bases = {a.id: a.base_strategy for a in config.actors}
    histories: dict[tuple[str, str], list[StrategyLabel]] = {}
    views: dict[str, list[Message]] = {a.id: [] for a in config.actors}
    deliveries: list[Delivery] = []
    events: list[dict] = []
    last_for: dict[str, Message] = {}

    for seq in range(config.messages):
        if config.mode == "explicit":
            event = config.events[seq]
            sender = event.from_actor
            receiver = config.other(sender)
            body = event.body
            quote_prev = event.quote_prev
            subject = event.subject
        else:
            participants = (config.opener, config.other(config.opener))
            sender = participants[seq % 2]
            receiver = config.other(sender)
            body = _generated_body(seq, sender, receiver, policies, bases, pack, rng)
            quote_prev = seq > 0
            subject = None

        if subject is None:
            subject = config.subject if seq == 0 else f"Re: {config.subject}"
        segments: list[Segment] = [Segment(kind="fresh", text=body)]
        if quote_prev:
            prev = last_for.get(sender)
            if prev is None:
                raise ScenarioError(
                    f"event {seq} quotes a predecessor, but {sender!r} has "
                    f"no prior message in view"
                )
            segments.append(render_quote(prev))
        message = Message(
            id=f"m{seq + 1:03d}",
            thread_id=config.name,
            from_actor=sender,
            to_actor=receiver,
            subject=subject,
            sent_at=(BASE_TIME + TIME_STEP * seq).isoformat(),
            segments=tuple(segments),
        )

        delivered = intercept_deliver(message, config.attack, ledger, pack)

        history = histories.setdefault((sender, receiver), [])
        score = suspicion(delivered, message, history, pack, config.judgment)
        detection = score >= config.judgment.threshold
        if detection:
            events.append(
                {
                    "kind": EVENT_TRUTH_DEFAULT_ABANDONED,
                    "seq": seq,
                    "actor": receiver,
                    "message_id": message.id,
                    "suspicion": score,
                }
            )
            policies[receiver] = "scrutiny"

        sent_label = _label_of(message.fresh_text(), pack)
        delivered_label = _label_of(delivered.fresh_text(), pack)
        history.append(delivered_label)

        inconsistent = [
            seg.source_id
            for seg in delivered.quotes()
            if seg.text != ledger.expected_quote_text(receiver, seg.source_id)
        ]

        deliveries.append(
            Delivery(
                seq=seq,
                sent=message,
                delivered=delivered,
                sent_label=sent_label,
                delivered_label=delivered_label,
                altered=delivered.fresh_text() != message.fresh_text(),
                suspicion=score,
                detection=detection,
                inconsistent_quotes=inconsistent,
            )
        )
        views[sender].append(message)
        views[receiver].append(delivered)
        last_for[sender] = message
        last_for[receiver] = delivered

    return Transcript(
        config=config,
        pack_version=pack.version,
        deliveries=deliveries,
        events=events,
        views=views,
    )


def _generated_body(
    seq: int,
    sender: str,
    receiver: str,
    policies: dict[str, str],
    bases: dict[str, StrategyLabel | None],
    pack: RulePack,
    rng: random.Random,
) -> str:
    policy = "counter_request" if seq == 0 else policies[sender]
    if policy == "acknowledge":
        return rng.choice(ACK_BANK)
    if policy == "scrutiny":
        return SCRUTINY_BODY
    return _request_body(bases[sender], receiver, pack, rng)


def _request_body(
    base: StrategyLabel, receiver: str, pack: RulePack, rng: random.Random
) -> str:
    from .lexicon import render_template

    head = rng.choice(HEAD_BANK)
    template = rng.choice(pack.templates_for(base))
    values: dict[str, str | None] = {"head": head}
    if "name" in template.optional_slots:
        values["name"] = receiver.capitalize() if rng.random() < 0.5 else None
    if "deadline" in template.optional_slots:
        values["deadline"] = (
            rng.choice(DEADLINE_BANK) if rng.random() < 0.5 else None
        )
    return render_template(template, values)

"""Command-line front door.

Exit codes: 0 for success or a clean detector verdict, 1 for usage or
input problems, 2 for a positive detection.  The ATDLAB_PACK
environment variable points at an alternative rule pack; an explicit
--pack flag wins over it.  All --json output is stable: keys sorted,
two-space indent.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import RANK_BAND, classify, extract_head_act
from .errors import AtdlabError
from .lexicon import (
    RULE_PACK_ENV,
    RulePack,
    StrategyLabel,
    load_default_pack,
    load_pack,
    serialize_pack,
)
from .sentinel import (
    DETECTOR_NAMES,
    DRIFT_ALARM,
    DRIFT_WINDOW,
    VERDICT_CLEAN,
    diff_detect,
    drift_detect,
    evaluate,
    quote_mismatch_detect,
    write_evaluation_csv,
)
from .simnet import bundled_scenario_names, load_bundled_scenario, load_scenario, run as run_scenario
from .thread import Message
from .transform import TransformRecord, apply_sorry, reverse, rewrite

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DETECTED = 2

EXTENSION_PACK_KIND = "politeness-rule-pack"
EXTENSION_FORMAT_VERSION = 1


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; this laboratory reserves 2 for
    detections, so usage errors exit 1 instead."""

    def error(self, message):
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="atdlab",
        description="Politeness-strategy laboratory for email threads.",
    )
    parser.add_argument("--version", action="version", version=f"atdlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_body_args(p):
        p.add_argument("--body", help="message body as a literal argument")
        p.add_argument("--file", help="read the body from this file ('-' for stdin)")

    def add_common(p):
        p.add_argument("--pack", help="rule pack JSON path")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("classify", help="judge a body's politeness strategy")
    add_body_args(p)
    add_common(p)
    p.add_argument("--explain", action="store_true", help="list matched markers")

    p = sub.add_parser("head", help="extract the request core of a body")
    add_body_args(p)
    add_common(p)

    p = sub.add_parser("rewrite", help="re-dress a body in another strategy")
    add_body_args(p)
    add_common(p)
    p.add_argument("--target", required=True, help="target strategy name")
    p.add_argument(
        "--slot",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="fill a template slot (repeatable)",
    )
    p.add_argument("--record", help="write the transform record JSON here")

    p = sub.add_parser("sorry", help="make first-person sentences apologetic")
    add_body_args(p)
    add_common(p)
    p.add_argument("--record", help="write the transform record JSON here")

    p = sub.add_parser("reverse", help="undo a recorded transform")
    add_body_args(p)
    add_common(p)
    p.add_argument("--record", required=True, help="transform record JSON path")

    p = sub.add_parser("simulate", help="run a scenario through the network")
    add_common(p)
    p.add_argument("--scenario", help="scenario JSON path")
    p.add_argument("--name", help="bundled scenario name")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("sentinel", help="run a detector")
    sent_sub = p.add_subparsers(dest="detector", required=True, parser_class=_Parser)

    ps = sent_sub.add_parser("diff", help="device view against canonical sent text")
    ps.add_argument("--view", required=True, help="rendered view JSON path")
    ps.add_argument("--canonical", required=True, help="canonical messages JSON path")
    add_common(ps)

    ps = sent_sub.add_parser("quote", help="device view against itself")
    ps.add_argument("--view", required=True, help="rendered view JSON path")
    add_common(ps)

    ps = sent_sub.add_parser("drift", help="strategy drift of one sender")
    ps.add_argument("--view", required=True, help="rendered view JSON path")
    ps.add_argument("--sender", required=True, help="watch messages from this actor")
    ps.add_argument("--window", type=int, default=DRIFT_WINDOW)
    ps.add_argument("--alarm", type=float, default=DRIFT_ALARM)
    add_common(ps)

    ps = sent_sub.add_parser("evaluate", help="score detectors over scenarios")
    ps.add_argument(
        "--scenario", action="append", default=[], help="scenario JSON path (repeatable)"
    )
    ps.add_argument("--suite", action="store_true", help="include bundled scenarios")
    ps.add_argument("--out", required=True, help="evaluation CSV path")
    ps.add_argument(
        "--detector",
        action="append",
        default=[],
        choices=list(DETECTOR_NAMES),
        help="detector to score (repeatable; default all)",
    )
    add_common(ps)

    p = sub.add_parser("rulepack", help="validate or export rule packs")
    pack_sub = p.add_subparsers(dest="pack_command", required=True, parser_class=_Parser)

    pp = pack_sub.add_parser("validate", help="load a pack and report")
    pp.add_argument("path", help="rule pack JSON path")
    pp.add_argument("--json", action="store_true")

    pp = pack_sub.add_parser("export", help="emit the active pack")
    pp.add_argument("--pack", help="rule pack JSON path")
    pp.add_argument(
        "--format",
        choices=["json", "extension"],
        default="json",
        help="plain pack JSON or the display-extension wrapper",
    )
    pp.add_argument("--out", help="write here instead of stdout")

    p = sub.add_parser("scenarios", help="list bundled scenarios")
    p.add_argument("--json", action="store_true")

    return parser


def _resolve_pack(args) -> RulePack:
    path = getattr(args, "pack", None) or os.environ.get(RULE_PACK_ENV)
    if not path:
        return load_default_pack()
    try:
        return load_pack(Path(path).read_bytes())
    except OSError as exc:
        raise AtdlabError(f"cannot read pack {path!r}: {exc}") from None


def _read_body(args) -> str:
    if args.body is not None and args.file is not None:
        raise AtdlabError("give --body or --file, not both")
    if args.body is not None:
        return args.body
    if args.file is None or args.file == "-":
        return sys.stdin.read()
    try:
        return Path(args.file).read_text(encoding="utf-8")
    except OSError as exc:
        raise AtdlabError(f"cannot read body file {args.file!r}: {exc}") from None


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise AtdlabError(f"cannot read {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise AtdlabError(f"{path!r} is not valid JSON: {exc}") from None


def _read_view(path: str) -> list[Message]:
    doc = _read_json(path)
    raw = doc["messages"] if isinstance(doc, dict) and "messages" in doc else doc
    if not isinstance(raw, list):
        raise AtdlabError(f"{path!r} holds neither a message list nor a view object")
    return [Message.from_json(m) for m in raw]


def _emit(doc) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


def _write_record(path: str | None, record: TransformRecord) -> None:
    if path:
        Path(path).write_text(
            json.dumps(record.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def _cmd_classify(args) -> int:
    pack = _resolve_pack(args)
    result = classify(_read_body(args), pack)
    if args.json:
        doc = {
            "label": result.label.wire_name,
            "scores": {l.wire_name: s for l, s in result.scores.items()},
        }
        if args.explain:
            doc["hits"] = [
                {
                    "id": h.marker.id,
                    "category": h.marker.category,
                    "strategy": h.marker.strategy.wire_name,
                    "weight": h.marker.weight,
                    "segment": h.segment,
                    "span": list(h.span),
                }
                for h in result.hits
            ]
        _emit(doc)
    else:
        print(f"label: {result.label.wire_name}")
        scores = " ".join(
            f"{l.wire_name}={result.scores[l]:g}" for l in StrategyLabel
        )
        print(f"scores: {scores}")
        if args.explain:
            for h in result.hits:
                print(
                    f"  {h.marker.id} [{h.marker.category}] "
                    f"{h.marker.strategy.wire_name} w={h.marker.weight:g} "
                    f"seg={h.segment} bytes={h.span[0]}..{h.span[1]}"
                )
    return EXIT_OK


def _cmd_head(args) -> int:
    pack = _resolve_pack(args)
    head = extract_head_act(_read_body(args), pack)
    if args.json:
        _emit(
            {
                "tokens": list(head.tokens),
                "text": head.text,
                "segment": head.segment,
                "span": list(head.span),
            }
        )
    else:
        print(head.text)
        print(f"segment={head.segment} bytes={head.span[0]}..{head.span[1]}")
    return EXIT_OK


def _parse_slots(pairs: list[str]) -> dict[str, str]:
    slots: dict[str, str] = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep or not name:
            raise AtdlabError(f"--slot wants NAME=VALUE, got {pair!r}")
        slots[name] = value
    return slots


def _cmd_rewrite(args) -> int:
    pack = _resolve_pack(args)
    target = StrategyLabel.from_name(args.target)
    body, record = rewrite(
        _read_body(args), target, pack, slots=_parse_slots(args.slot)
    )
    _write_record(args.record, record)
    if args.json:
        _emit({"body": body, "record": record.to_json()})
    else:
        print(body)
    return EXIT_OK


def _cmd_sorry(args) -> int:
    pack = _resolve_pack(args)
    body, record = apply_sorry(_read_body(args), pack)
    _write_record(args.record, record)
    if args.json:
        _emit({"body": body, "record": record.to_json()})
    else:
        print(body)
    return EXIT_OK


def _cmd_reverse(args) -> int:
    record = TransformRecord.from_json(_read_json(args.record))
    original = reverse(record, _read_body(args))
    if args.json:
        _emit({"body": original})
    else:
        print(original)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    pack = _resolve_pack(args)
    if bool(args.scenario) == bool(args.name):
        raise AtdlabError("give exactly one of --scenario or --name")
    config = (
        load_scenario(args.scenario) if args.scenario else load_bundled_scenario(args.name)
    )
    transcript = run_scenario(config, pack)
    transcript.write(args.out)
    metrics = transcript.metrics()
    if args.json:
        _emit(metrics)
    else:
        print(
            f"scenario {metrics['scenario']}: {metrics['messages']} messages, "
            f"{metrics['altered']} altered, {metrics['detections']} detections"
        )
        print(f"wrote {args.out}")
    return EXIT_OK


def _report_exit(report, args) -> int:
    if args.json:
        _emit(report.to_json())
    else:
        print(f"verdict: {report.verdict}")
        print(f"score: {report.score:g}")
        for e in report.evidence:
            where = f" {e.message_id}" if e.message_id else ""
            print(f"  {e.kind}{where}: {e.detail}")
    return EXIT_OK if report.verdict == VERDICT_CLEAN else EXIT_DETECTED


def _cmd_sentinel(args) -> int:
    if args.detector == "diff":
        report = diff_detect(_read_view(args.view), _read_view(args.canonical))
        return _report_exit(report, args)
    if args.detector == "quote":
        report = quote_mismatch_detect(_read_view(args.view))
        return _report_exit(report, args)
    if args.detector == "drift":
        pack = _resolve_pack(args)
        messages = [m for m in _read_view(args.view) if m.from_actor == args.sender]
        if not messages:
            raise AtdlabError(f"no messages from {args.sender!r} in the view")
        labels = [classify(m.fresh_text(), pack).label for m in messages]
        report = drift_detect(labels, window=args.window, alarm=args.alarm)
        return _report_exit(report, args)
    return _cmd_evaluate(args)


def _cmd_evaluate(args) -> int:
    pack = _resolve_pack(args)
    configs = [load_scenario(p) for p in args.scenario]
    if args.suite:
        configs.extend(load_bundled_scenario(n) for n in bundled_scenario_names())
    if not configs:
        raise AtdlabError("nothing to evaluate: give --scenario and/or --suite")
    detectors = args.detector or list(DETECTOR_NAMES)
    rows = evaluate(configs, pack, detectors=detectors)
    write_evaluation_csv(rows, args.out)
    if args.json:
        _emit(
            [
                {
                    "scenario": r.scenario,
                    "detector": r.detector,
                    "tpr": r.tpr,
                    "fpr": r.fpr,
                }
                for r in rows
            ]
        )
    else:
        for r in rows:
            tpr = "n/a" if r.tpr is None else f"{r.tpr:g}"
            fpr = "n/a" if r.fpr is None else f"{r.fpr:g}"
            print(f"{r.scenario} {r.detector}: tpr={tpr} fpr={fpr}")
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_rulepack(args) -> int:
    if args.pack_command == "validate":
        try:
            pack = load_pack(Path(args.path).read_bytes())
        except OSError as exc:
            raise AtdlabError(f"cannot read pack {args.path!r}: {exc}") from None
        doc = {
            "ok": True,
            "version": pack.version,
            "markers": len(pack.markers),
            "templates": len(pack.templates),
            "request_core_verbs": len(pack.request_core_verbs),
        }
        if args.json:
            _emit(doc)
        else:
            print(
                f"ok: version {pack.version}, {len(pack.markers)} markers, "
                f"{len(pack.templates)} templates, "
                f"{len(pack.request_core_verbs)} request-core verbs"
            )
        return EXIT_OK

    pack = _resolve_pack(args)
    if args.format == "extension":
        doc = {
            "kind": EXTENSION_PACK_KIND,
            "format_version": EXTENSION_FORMAT_VERSION,
            "rank_band": RANK_BAND,
            "pack": json.loads(serialize_pack(pack)),
        }
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        text = serialize_pack(pack)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_scenarios(args) -> int:
    names = bundled_scenario_names()
    if args.json:
        _emit(names)
    else:
        for name in names:
            print(name)
    return EXIT_OK


_COMMANDS = {
    "classify": _cmd_classify,
    "head": _cmd_head,
    "rewrite": _cmd_rewrite,
    "sorry": _cmd_sorry,
    "reverse": _cmd_reverse,
    "simulate": _cmd_simulate,
    "sentinel": _cmd_sentinel,
    "rulepack": _cmd_rulepack,
    "scenarios": _cmd_scenarios,
}


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except AtdlabError as exc:
        print(f"atdlab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

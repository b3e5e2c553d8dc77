"""Regenerate the frozen CLI outputs the extension tests compare against.

The demo extension must display exactly what `atdlab rewrite` would
print for the same body, so every expected value in tests/fixtures is
captured from the installed CLI rather than written by hand.  Run this
after changing the default rule pack, then re-run the vitest suite.

Usage: python3 scripts/regen_fixtures.py  (from the frontend directory)
"""

import json
import subprocess
import sys
from pathlib import Path

FRONTEND = Path(__file__).resolve().parent.parent

# The mailbox bodies shown on the bundled demo page.  demo.html carries
# the same text; the conformance test fails loudly if the two drift.
PAGE_BODIES = [
    {"id": "m-terse", "body": "We need a budget."},
    {
        "id": "m-deadline",
        "body": "Thanks ✨. We need the audit files.\nThe quarter closes soon.",
    },
    {
        "id": "m-greeting",
        "body": "Jake Miller, please send the slides at your convenience.",
    },
    {
        "id": "m-polite",
        "body": (
            "Jake, I know you are busy, but would you be willing to meet "
            "with me for just an hour? We need a budget for the proposal "
            "- the deadline is today."
        ),
    },
    {"id": "m-social", "body": "Thanks for the great dinner last night!"},
    {"id": "m-bald", "body": "We need a budget, now!"},
]

PAGE_TARGET = "negative"

# Engine-level matrix: body, target, slots.
REWRITE_CASES = [
    ("We need a budget.", "bald_on_record", {}),
    ("We need a budget.", "positive", {}),
    ("We need a budget.", "negative", {}),
    ("We need a budget.", "off_record", {}),
    ("We need a budget.", "negative", {"name": "Jake", "deadline": "Friday"}),
    ("We need a budget.", "positive", {"name": "Jake"}),
    (
        "Jake, I know you are busy, but would you be willing to meet with "
        "me for just an hour? We need a budget for the proposal - the "
        "deadline is today.",
        "bald_on_record",
        {},
    ),
    (
        "Jake Miller, please send the slides at your convenience.",
        "off_record",
        {},
    ),
    (
        "Thanks ✨. We need the audit files.\nThe quarter closes soon.",
        "negative",
        {},
    ),
    (
        "I know you are busy, but would you be willing to meet with me "
        "for just a half an hour, we need a budget for the proposal - "
        "the deadline is today?",
        "bald_on_record",
        {},
    ),
]

CLASSIFY_BODIES = [
    "We need a budget, now!",
    "Jake, we need a budget. Let's finalize it for the proposal today?",
    (
        "Jake, I know you are busy, but would you be willing to meet with "
        "me for just an hour? We need a budget for the proposal - the "
        "deadline is today."
    ),
    "Proposals that include budgets are more likely to receive funding",
    "We need a budget.",
    "Thanks for the great dinner last night!",
]

HEAD_BODIES = [
    "We need a budget.",
    "Jake Miller, please send the slides at your convenience.",
    "Thanks ✨. We need the audit files.\nThe quarter closes soon.",
    (
        "I know you are busy, but would you be willing to meet with me "
        "for just a half an hour, we need a budget for the proposal - "
        "the deadline is today?"
    ),
]


def cli(*args: str, body: str | None = None) -> subprocess.CompletedProcess:
    cmd = ["atdlab", *args]
    if body is not None:
        cmd += ["--body", body]
    return subprocess.run(cmd, capture_output=True, text=True)


def cli_json(*args: str, body: str | None = None) -> dict:
    proc = cli(*args, "--json", body=body)
    if proc.returncode != 0:
        raise SystemExit(f"atdlab {args[0]} failed: {proc.stderr.strip()}")
    return json.loads(proc.stdout)


def try_rewrite(body: str, target: str, slots: dict[str, str]) -> dict | None:
    args = ["rewrite", "--target", target]
    for name, value in slots.items():
        args += ["--slot", f"{name}={value}"]
    proc = cli(*args, "--json", body=body)
    if proc.returncode != 0:
        return None
    return json.loads(proc.stdout)


def write(path: Path, doc) -> None:
    path.write_text(
        json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    print(f"wrote {path.relative_to(FRONTEND)}")


def main() -> None:
    proc = cli("rulepack", "export", "--format", "extension")
    if proc.returncode != 0:
        raise SystemExit(f"pack export failed: {proc.stderr.strip()}")
    (FRONTEND / "extension" / "pack.json").write_text(
        proc.stdout, encoding="utf-8"
    )
    print("wrote extension/pack.json")

    page = []
    for entry in PAGE_BODIES:
        rewritten = try_rewrite(entry["body"], PAGE_TARGET, {})
        label = cli_json("classify", body=entry["body"])["label"]
        page.append(
            {
                "id": entry["id"],
                "body": entry["body"],
                "source": label,
                "expected": None if rewritten is None else rewritten["body"],
            }
        )
    write(
        FRONTEND / "tests" / "fixtures" / "page.json",
        {"target": PAGE_TARGET, "messages": page},
    )

    rewrites = []
    for body, target, slots in REWRITE_CASES:
        doc = try_rewrite(body, target, slots)
        if doc is None:
            raise SystemExit(f"rewrite case failed: {body!r} -> {target}")
        rewrites.append(
            {
                "body": body,
                "target": target,
                "slots": slots,
                "expected": doc["body"],
                "source": doc["record"]["source"],
            }
        )
    classifications = [
        {"body": body, **cli_json("classify", body=body)}
        for body in CLASSIFY_BODIES
    ]
    heads = [
        {"body": body, **cli_json("head", body=body)} for body in HEAD_BODIES
    ]
    write(
        FRONTEND / "tests" / "fixtures" / "engine.json",
        {"rewrites": rewrites, "classifications": classifications, "heads": heads},
    )


if __name__ == "__main__":
    sys.exit(main())

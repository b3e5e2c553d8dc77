"""End-to-end acceptance checks for the laboratory.

Each test here covers one headline guarantee and prints a single
pass/fail line, so a full run reads as a checklist.  Expected detector
outcomes were precomputed with brute-force reference implementations
and are frozen below; a change in any frozen value is a behavior
change, not a test update.
"""

import json
import random
import time

import pytest

from atdlab.analysis import (
    WeightinessFactors,
    classify,
    extract_head_act,
    perceived_weightiness,
    recommend_strategy,
    weightiness,
)
from atdlab.fixtures import (
    POLITE_BUDGET_EMAIL,
    STRATEGY_EXAMPLES,
    TERSE_BUDGET_EMAIL,
)
from atdlab.lexicon import StrategyLabel
from atdlab.sentinel import VERDICT_MUTATED, VERDICT_SUSPICIOUS, diff_detect, drift_detect
from atdlab.simnet import bundled_scenario_names, load_bundled_scenario, run
from atdlab.transform import apply_sorry, reverse, rewrite

# Per-direction drift verdicts for every bundled scenario, frozen from a
# brute-force modal-rank reference run.
DRIFT_EXPECTED = {
    "s01_quiet_pair": {"alice->bob": False, "bob->alice": False},
    "s02_chatty_peers": {"alice->bob": False, "bob->alice": False},
    "s03_scripted_pair": {"alice->bob": False, "bob->alice": False},
    "s04_blunt_from_start": {"alice->bob": False, "bob->alice": False},
    "s05_late_onset_blunt": {"alice->bob": False, "bob->alice": True},
    "s06_mutual_soften": {"alice->bob": False, "bob->alice": False},
    "s07_mutual_blunt_onset": {"alice->bob": True, "bob->alice": True},
    "s08_soften_extreme": {"alice->bob": True, "bob->alice": False},
    "s09_exaggerate_detected": {"alice->bob": False, "bob->alice": True},
    "s10_mild_soften_missed": {"alice->bob": False, "bob->alice": False},
    "s11_split_targets": {"alice->bob": True, "bob->alice": True},
    "s12_long_campaign": {"alice->bob": True, "bob->alice": False},
}


@pytest.fixture(scope="module")
def suite(pack):
    configs = [load_bundled_scenario(n) for n in bundled_scenario_names()]
    return [(config, run(config, pack)) for config in configs]


@pytest.fixture
def announce(capsys):
    def _announce(ok: bool, line: str) -> None:
        with capsys.disabled():
            print(f"[{'PASS' if ok else 'FAIL'}] {line}")

    return _announce


def quoted(text: str) -> str:
    return "\n".join("> " + line for line in text.split("\n"))


def random_body(rng: random.Random) -> str:
    nouns = ["ledger", "files", "notes", "totals", "draft", "room", "call", "board"]
    cores = ["need", "want", "send", "review", "share", "update"]
    fillers = ["okay", "please", "perhaps", "José", "café", "✨", "thanks", "soon"]
    sentences = []
    for _ in range(rng.randint(0, 4)):
        roll = rng.random()
        if roll < 0.35:
            words = ["I", rng.choice(["need", "forgot", "sent", "think", "have"])]
            words += rng.choices(nouns, k=rng.randint(1, 3))
        elif roll < 0.6:
            words = ["We", rng.choice(cores), "the", rng.choice(nouns)]
        else:
            words = rng.choices(nouns + fillers, k=rng.randint(2, 6))
        sentences.append(" ".join(words) + rng.choice([".", "!", "?"]))
    anchor = f"We {rng.choice(cores)} the {rng.choice(nouns)}."
    sentences.insert(rng.randrange(len(sentences) + 1), anchor)
    return " ".join(sentences)


def test_fixture_sentences_classify_exactly(pack, announce):
    cases = [(text, label) for label, text in STRATEGY_EXAMPLES.items()]
    cases.append((TERSE_BUDGET_EMAIL, StrategyLabel.BALD_ON_RECORD))
    cases.append((POLITE_BUDGET_EMAIL, StrategyLabel.NEGATIVE))
    started = time.perf_counter()
    wrong = [
        (text, expected, classify(text, pack).label)
        for text, expected in cases
        if classify(text, pack).label is not expected
    ]
    elapsed = time.perf_counter() - started
    ok = not wrong and elapsed < 1.0
    announce(
        ok,
        f"strategy fixtures: {len(cases) - len(wrong)}/{len(cases)} bodies "
        f"classified to their assigned strategies in {elapsed:.3f}s",
    )
    assert not wrong, wrong
    assert elapsed < 1.0


def test_rewrite_round_trip_accuracy(pack, corpus, announce):
    assert len(corpus) >= 40
    started = time.perf_counter()
    checks = 0
    failures = []
    for entry in corpus:
        body = entry["body"]
        original_head = extract_head_act(body, pack).tokens
        for target in StrategyLabel:
            new_body, _ = rewrite(body, target, pack)
            checks += 1
            if classify(new_body, pack).label is not target:
                failures.append((entry["id"], target.wire_name, "label"))
            elif extract_head_act(new_body, pack).tokens != original_head:
                failures.append((entry["id"], target.wire_name, "head"))
    elapsed = time.perf_counter() - started
    ok = not failures and checks >= 160 and elapsed < 5.0
    announce(
        ok,
        f"rewrite round trip: {checks - len(failures)}/{checks} target-label "
        f"and head-act checks across {len(corpus)} bodies in {elapsed:.2f}s",
    )
    assert checks >= 160
    assert not failures, failures[:5]
    assert elapsed < 5.0


def test_exact_reversibility(pack, corpus, announce):
    failures = []
    trips = 0
    for entry in corpus:
        body = entry["body"]
        for target in StrategyLabel:
            new_body, record = rewrite(body, target, pack)
            trips += 1
            if reverse(record, new_body) != body:
                failures.append((entry["id"], target.wire_name))
    rng = random.Random(90125)
    for i in range(1000):
        body = random_body(rng)
        target = rng.choice(list(StrategyLabel))
        new_body, record = rewrite(body, target, pack)
        trips += 1
        if reverse(record, new_body) != body:
            failures.append(("random-rewrite", i))
        sorried, record = apply_sorry(body, pack)
        trips += 1
        if reverse(record, sorried) != body:
            failures.append(("random-sorry", i))
    ok = not failures
    announce(
        ok,
        f"exact reversibility: {trips - len(failures)}/{trips} transform "
        f"round trips byte-exact ({len(corpus) * 4} corpus, 2000 randomized)",
    )
    assert not failures, failures[:5]


def test_author_view_invariant(suite, announce):
    assert len(suite) >= 10
    assert any(config.attack is None for config, _ in suite)
    assert any(
        config.attack is not None and len(config.attack.targets) == 1
        for config, _ in suite
    )
    assert any(
        config.attack is not None and len(config.attack.targets) == 2
        for config, _ in suite
    )

    author_checks = 0
    violations = []
    for config, transcript in suite:
        sent_fresh = {d.sent.id: d.sent.fresh_text() for d in transcript.deliveries}
        shown_fresh = {d.sent.id: d.delivered.fresh_text() for d in transcript.deliveries}
        sender = {d.sent.id: d.sent.from_actor for d in transcript.deliveries}
        children = {
            d.sent.id: [(s.source_id, s.attribution) for s in d.sent.quotes()]
            for d in transcript.deliveries
        }

        def expected(viewer, mid):
            fresh = sent_fresh[mid] if sender[mid] == viewer else shown_fresh[mid]
            lines = [quoted(fresh)]
            for child_id, attribution in children[mid]:
                lines.append("> " + attribution)
                lines.append(quoted(expected(viewer, child_id)))
            return "\n".join(lines)

        def own_nodes(viewer, mid):
            count = 1 if sender[mid] == viewer else 0
            return count + sum(own_nodes(viewer, c) for c, _ in children[mid])

        for delivery in transcript.deliveries:
            receiver = delivery.sent.to_actor
            for seg in delivery.delivered.quotes():
                author_checks += own_nodes(receiver, seg.source_id)
                if seg.text != expected(receiver, seg.source_id):
                    violations.append((config.name, delivery.sent.id, seg.source_id))

    ok = not violations and author_checks > 0
    announce(
        ok,
        f"author view invariant: 0 violations in {author_checks} author-quote "
        f"checks over {len(suite)} scenarios"
        if ok
        else f"author view invariant: {len(violations)} violations",
    )
    assert author_checks > 0
    assert not violations, violations[:5]


def test_deterministic_replay(pack, suite, announce, tmp_path_factory):
    unstable = []
    for config, _ in suite:
        first = run(config, pack)
        second = run(config, pack)
        base = tmp_path_factory.mktemp(f"replay_{config.name}")
        written_a = first.write(base / "a")
        written_b = second.write(base / "b")
        if set(written_a) != set(written_b):
            unstable.append(config.name)
            continue
        for name, path in written_a.items():
            if path.read_bytes() != written_b[name].read_bytes():
                unstable.append(f"{config.name}/{name}")
    ok = not unstable
    announce(
        ok,
        f"deterministic replay: {len(suite) - len(set(unstable))}/{len(suite)} "
        f"scenarios byte-identical across reruns",
    )
    assert not unstable, unstable


def test_detector_ground_truth_rates(suite, announce):
    tp = fp = pos = neg = 0
    for _, transcript in suite:
        for delivery in transcript.deliveries:
            flagged = (
                diff_detect([delivery.delivered], [delivery.sent]).verdict
                == VERDICT_MUTATED
            )
            if delivery.altered:
                pos += 1
                tp += 1 if flagged else 0
            else:
                neg += 1
                fp += 1 if flagged else 0
    diff_ok = pos > 0 and tp == pos and fp == 0

    mismatched = []
    strong_total = strong_flagged = 0
    for config, transcript in suite:
        altered_deltas = {}
        for delivery in transcript.deliveries:
            if delivery.altered:
                key = f"{delivery.sent.from_actor}->{delivery.sent.to_actor}"
                altered_deltas.setdefault(key, []).append(abs(delivery.rank_delta))
        for direction, labels in sorted(transcript.direction_labels().items()):
            flagged = drift_detect(labels).verdict == VERDICT_SUSPICIOUS
            if flagged != DRIFT_EXPECTED[config.name][direction]:
                mismatched.append((config.name, direction))
            deltas = altered_deltas.get(direction, [])
            if deltas and max(deltas) >= 2:
                strong_total += 1
                strong_flagged += 1 if flagged else 0
    drift_ok = (
        not mismatched
        and strong_total > 0
        and strong_flagged / strong_total >= 0.9
    )

    ok = diff_ok and drift_ok
    announce(
        ok,
        f"detector ground truth: diff tpr={tp}/{pos} fpr={fp}/{neg}; drift "
        f"flagged {strong_flagged}/{strong_total} strong-shift directions and "
        f"matched all {sum(len(v) for v in DRIFT_EXPECTED.values())} frozen "
        f"per-direction outcomes",
    )
    assert pos > 0 and tp == pos, f"diff missed {pos - tp} of {pos} altered deliveries"
    assert fp == 0, f"diff false-alarmed on {fp} of {neg} clean deliveries"
    assert not mismatched, mismatched
    assert strong_total > 0
    assert strong_flagged / strong_total >= 0.9


def test_recommendation_monotonicity(announce):
    rng = random.Random(1337)
    breaks = []
    for i in range(1000):
        a = (rng.random(), rng.random(), rng.random())
        b = (rng.random(), rng.random(), rng.random())
        lo = WeightinessFactors(*(min(x, y) for x, y in zip(a, b)))
        hi = WeightinessFactors(*(max(x, y) for x, y in zip(a, b)))
        low_rank = recommend_strategy(weightiness(lo)).rank
        high_rank = recommend_strategy(weightiness(hi)).rank
        if low_rank > high_rank:
            breaks.append(i)

    round_trip_failures = []
    for label in StrategyLabel:
        low, high = perceived_weightiness(label)
        probes = [low, (low + high) / 2, high - 1e-9]
        if any(recommend_strategy(w) is not label for w in probes):
            round_trip_failures.append(label.wire_name)

    ok = not breaks and not round_trip_failures
    announce(
        ok,
        f"recommendation monotonicity: {1000 - len(breaks)}/1000 ordered factor "
        f"pairs non-decreasing; perception round trip held for "
        f"{4 - len(round_trip_failures)}/4 strategies",
    )
    assert not breaks, breaks[:5]
    assert not round_trip_failures, round_trip_failures

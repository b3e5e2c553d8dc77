import csv
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from atdlab.errors import DanglingQuoteError, ViewMismatchError
from atdlab.lexicon import StrategyLabel
from atdlab.sentinel import (
    DRIFT_WINDOW,
    VERDICT_CLEAN,
    VERDICT_MUTATED,
    VERDICT_SUSPICIOUS,
    EvalRow,
    diff_detect,
    drift_detect,
    evaluate,
    quote_mismatch_detect,
)
from atdlab.simnet import load_scenario
from atdlab.thread import Message, Segment, render_quote

BASE_TIME = "2026-01-05T09:00:00+00:00"


def plain_message(mid, frm, to, fresh, quote=None):
    segments = [Segment(kind="fresh", text=fresh)]
    if quote is not None:
        segments.append(quote)
    return Message(
        id=mid,
        thread_id="t1",
        from_actor=frm,
        to_actor=to,
        subject="s",
        sent_at=BASE_TIME,
        segments=tuple(segments),
    )


def generated_scenario(**overrides):
    doc = {
        "name": "inline",
        "seed": 7,
        "actors": [
            {"id": "alice", "reply_policy": "counter_request", "base_strategy": "bald_on_record"},
            {"id": "bob", "reply_policy": "counter_request", "base_strategy": "bald_on_record"},
        ],
        "script": {"mode": "generated", "messages": 6, "opener": "alice"},
    }
    doc.update(overrides)
    return doc


def oracle_drift_score(labels, window=DRIFT_WINDOW):
    """Reference drift score computed straight from the definition."""

    def mode(seq):
        counts = Counter(seq)
        top = max(counts.values())
        return min(label for label, count in counts.items() if count == top)

    return abs(mode(labels[-window:]).rank - mode(labels).rank) / 3


class TestDiffDetect:
    def test_identical_views_are_clean(self):
        msgs = [plain_message("m1", "alice", "bob", "We need the budget.")]
        report = diff_detect(msgs, msgs)
        assert report.verdict == VERDICT_CLEAN
        assert report.score == 0.0
        assert report.evidence == []

    def test_mutated_fresh_is_flagged(self):
        sent = [plain_message("m1", "alice", "bob", "We need the budget.")]
        shown = [plain_message("m1", "alice", "bob", "Send the budget, now!")]
        report = diff_detect(shown, sent)
        assert report.verdict == VERDICT_MUTATED
        assert report.score == 1.0
        assert report.evidence[0].kind == "fresh-text-mismatch"
        assert report.evidence[0].message_id == "m1"

    def test_score_is_mutated_fraction(self):
        sent = [
            plain_message("m1", "alice", "bob", "We need the budget."),
            plain_message("m2", "alice", "bob", "We need the slides."),
        ]
        shown = [
            plain_message("m1", "alice", "bob", "We need the budget."),
            plain_message("m2", "alice", "bob", "Slides, now!"),
        ]
        assert diff_detect(shown, sent).score == 0.5

    def test_quote_prefix_spacing_not_an_alarm(self):
        sent = [plain_message("m1", "alice", "bob", "> > quoted line\nfresh line")]
        shown = [plain_message("m1", "alice", "bob", ">  >  quoted line\nfresh line")]
        assert diff_detect(shown, sent).verdict == VERDICT_CLEAN

    def test_unknown_rendered_id_rejected(self):
        sent = [plain_message("m1", "alice", "bob", "x")]
        shown = [plain_message("m9", "alice", "bob", "x")]
        with pytest.raises(ViewMismatchError):
            diff_detect(shown, sent)

    def test_extra_canonical_messages_ignored(self):
        sent = [
            plain_message("m1", "alice", "bob", "x"),
            plain_message("m2", "alice", "bob", "y"),
        ]
        shown = [plain_message("m1", "alice", "bob", "x")]
        assert diff_detect(shown, sent).verdict == VERDICT_CLEAN

    def test_accepts_json_documents(self):
        sent = [plain_message("m1", "alice", "bob", "x").to_json()]
        shown = [plain_message("m1", "alice", "bob", "y").to_json()]
        assert diff_detect(shown, sent).verdict == VERDICT_MUTATED


class TestQuoteMismatchDetect:
    def test_consistent_view_is_clean(self):
        m1 = plain_message("m1", "alice", "bob", "We need the budget.")
        m2 = plain_message("m2", "bob", "alice", "Noted.", quote=render_quote(m1))
        report = quote_mismatch_detect([m1, m2])
        assert report.verdict == VERDICT_CLEAN
        assert report.score == 0.0

    def test_tampered_quote_is_flagged(self):
        m1 = plain_message("m1", "alice", "bob", "We need the budget.")
        quote = render_quote(m1)
        doctored = Segment(
            kind="quote",
            text="> We need the budget, now!",
            source_id=quote.source_id,
            attribution=quote.attribution,
        )
        m2 = plain_message("m2", "bob", "alice", "Noted.", quote=doctored)
        report = quote_mismatch_detect([m1, m2])
        assert report.verdict == VERDICT_MUTATED
        assert report.score == 1.0
        assert report.evidence[0].kind == "quote-mismatch"
        assert report.evidence[0].message_id == "m2"

    def test_dangling_quote_rejected(self):
        m1 = plain_message("m1", "alice", "bob", "x")
        quote = render_quote(m1)
        m2 = plain_message("m2", "bob", "alice", "y", quote=quote)
        with pytest.raises(DanglingQuoteError):
            quote_mismatch_detect([m2])

    def test_no_quotes_scores_zero(self):
        report = quote_mismatch_detect([plain_message("m1", "alice", "bob", "x")])
        assert report.verdict == VERDICT_CLEAN
        assert report.score == 0.0

    def test_prefix_spacing_tolerated(self):
        m1 = plain_message("m1", "alice", "bob", "We need the budget.")
        quote = render_quote(m1)
        rewrapped = Segment(
            kind="quote",
            text=">  We need the budget.",
            source_id=quote.source_id,
            attribution=quote.attribution,
        )
        m2 = plain_message("m2", "bob", "alice", "Noted.", quote=rewrapped)
        assert quote_mismatch_detect([m1, m2]).verdict == VERDICT_CLEAN


class TestDriftDetect:
    def test_stable_history_is_clean(self):
        labels = [StrategyLabel.NEGATIVE] * 6
        report = drift_detect(labels)
        assert report.verdict == VERDICT_CLEAN
        assert report.score == 0.0

    def test_two_rank_shift_alarms(self):
        labels = [StrategyLabel.NEGATIVE] * 5 + [StrategyLabel.BALD_ON_RECORD] * 2
        report = drift_detect(labels)
        assert report.verdict == VERDICT_SUSPICIOUS
        assert report.score == pytest.approx(2 / 3)
        assert report.evidence[0].kind == "strategy-drift"

    def test_one_rank_shift_stays_below_default_alarm(self):
        labels = [StrategyLabel.NEGATIVE] * 5 + [StrategyLabel.POSITIVE] * 2
        report = drift_detect(labels)
        assert report.verdict == VERDICT_CLEAN
        assert report.score == pytest.approx(1 / 3)

    def test_custom_alarm_catches_small_shift(self):
        labels = [StrategyLabel.NEGATIVE] * 5 + [StrategyLabel.POSITIVE] * 2
        assert drift_detect(labels, alarm=0.3).verdict == VERDICT_SUSPICIOUS

    def test_window_one_tracks_last_label(self):
        labels = [StrategyLabel.NEGATIVE] * 5 + [StrategyLabel.BALD_ON_RECORD]
        assert drift_detect(labels, window=1).score == pytest.approx(2 / 3)

    def test_validation(self):
        with pytest.raises(ValueError):
            drift_detect([])
        with pytest.raises(ValueError):
            drift_detect([StrategyLabel.NEGATIVE], window=0)
        with pytest.raises(ValueError):
            drift_detect([StrategyLabel.NEGATIVE], alarm=-0.1)

    @given(st.lists(st.sampled_from(list(StrategyLabel)), min_size=1, max_size=12))
    def test_matches_reference_score(self, labels):
        assert drift_detect(labels).score == pytest.approx(oracle_drift_score(labels))

    @given(
        st.lists(st.sampled_from(list(StrategyLabel)), min_size=1, max_size=12),
        st.integers(1, 5),
    )
    def test_matches_reference_any_window(self, labels, window):
        assert drift_detect(labels, window=window).score == pytest.approx(
            oracle_drift_score(labels, window)
        )


class TestEvaluate:
    def test_clean_scenario_rates(self, pack):
        rows = evaluate([load_scenario(generated_scenario())], pack)
        by_detector = {r.detector: r for r in rows}
        assert by_detector["diff"].tpr is None
        assert by_detector["diff"].fpr == 0.0
        assert by_detector["quote"].tpr is None
        assert by_detector["quote"].fpr == 0.0
        assert by_detector["drift"].tpr is None
        assert by_detector["drift"].fpr == 0.0

    def test_attacked_scenario_diff_rates(self, pack):
        doc = generated_scenario(attack={"targets": {"bob": {"strategy": "off_record"}}})
        rows = evaluate([load_scenario(doc)], pack)
        by_detector = {r.detector: r for r in rows}
        assert by_detector["diff"].tpr == 1.0
        assert by_detector["diff"].fpr == 0.0

    def test_sloppy_attacker_trips_quote_detector(self, pack):
        doc = generated_scenario(
            attack={"targets": {"bob": {"strategy": "off_record"}}, "fix_quotes": False}
        )
        rows = evaluate([load_scenario(doc)], pack, detectors=("quote",))
        (row,) = rows
        assert row.tpr == 1.0
        assert row.fpr == 0.0

    def test_rows_scenario_major_in_given_order(self, pack):
        a = load_scenario(generated_scenario(name="a"))
        b = load_scenario(generated_scenario(name="b"))
        rows = evaluate([a, b], pack, detectors=("drift", "diff"))
        assert [(r.scenario, r.detector) for r in rows] == [
            ("a", "drift"),
            ("a", "diff"),
            ("b", "drift"),
            ("b", "diff"),
        ]

    def test_unknown_detector_rejected(self, pack):
        with pytest.raises(ValueError):
            evaluate([load_scenario(generated_scenario())], pack, detectors=("vibes",))

    def test_csv_output(self, pack, tmp_path):
        out = tmp_path / "rates.csv"
        evaluate([load_scenario(generated_scenario())], pack, out_csv=out)
        with out.open(newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["scenario", "detector", "tpr", "fpr"]
        assert rows[1][0] == "inline"
        assert rows[1][2] == "n/a"

    def test_eval_row_csv_formatting(self):
        row = EvalRow(scenario="s", detector="diff", tpr=None, fpr=0.25)
        assert row.to_csv_row() == ["s", "diff", "n/a", "0.25"]

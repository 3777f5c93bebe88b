"""Edit-distance counts and pooled WER/CER evaluation."""

import json
import random

import pytest

from ctcfuse import EditCounts, TranscriptRecord, cer, edit_distance, evaluate, wer
from ctcfuse.errors import ToolkitError

from reference import reference_edit_counts


def record(rid, text, language="nb", region=None, split=None):
    return TranscriptRecord(
        id=rid, audio_path=f"/a/{rid}.wav", duration_seconds=1.0,
        raw_text=text, language=language, region=region, split=split,
    )


class TestEditDistance:
    def test_identity(self):
        counts = edit_distance("a b c".split(), "a b c".split())
        assert (counts.substitutions, counts.deletions, counts.insertions) == (0, 0, 0)
        assert counts.reference_length == 3

    def test_single_substitution(self):
        counts = edit_distance("a b c".split(), "a x c".split())
        assert (counts.substitutions, counts.deletions, counts.insertions) == (1, 0, 0)

    def test_kitten_sitting(self):
        counts = edit_distance(list("kitten"), list("sitting"))
        assert counts.total == 3
        assert counts.total == reference_edit_counts("kitten", "sitting")[0]

    def test_empty_reference_counts_insertions(self):
        counts = edit_distance([], ["x", "y"])
        assert (counts.substitutions, counts.deletions, counts.insertions) == (0, 0, 2)

    def test_empty_hypothesis_counts_deletions(self):
        counts = edit_distance(["x", "y"], [])
        assert (counts.substitutions, counts.deletions, counts.insertions) == (0, 2, 0)

    def test_matches_reference_oracle_on_random_pairs(self):
        rng = random.Random(2024)
        alphabet = "abcd"
        for _ in range(1000):
            ref = [rng.choice(alphabet) for _ in range(rng.randrange(0, 31))]
            hyp = [rng.choice(alphabet) for _ in range(rng.randrange(0, 31))]
            counts = edit_distance(ref, hyp)
            total, subs, dels, ins = reference_edit_counts(ref, hyp)
            assert (counts.total, counts.substitutions, counts.deletions,
                    counts.insertions) == (total, subs, dels, ins)

    def test_swap_preserves_substitutions_and_swaps_del_ins(self):
        rng = random.Random(7)
        for _ in range(300):
            ref = [rng.choice("abc") for _ in range(rng.randrange(0, 15))]
            hyp = [rng.choice("abc") for _ in range(rng.randrange(0, 15))]
            forward = edit_distance(ref, hyp)
            backward = edit_distance(hyp, ref)
            assert forward.total == backward.total
            assert forward.substitutions == backward.substitutions
            assert forward.deletions == backward.insertions
            assert forward.insertions == backward.deletions

    def test_triangle_inequality(self):
        rng = random.Random(11)
        for _ in range(200):
            seqs = [
                [rng.choice("ab") for _ in range(rng.randrange(0, 10))] for _ in range(3)
            ]
            ab = edit_distance(seqs[0], seqs[1]).total
            bc = edit_distance(seqs[1], seqs[2]).total
            ac = edit_distance(seqs[0], seqs[2]).total
            assert ac <= ab + bc

    def test_counts_validation(self):
        with pytest.raises(ValueError):
            EditCounts(2, 2, 0, 3)  # S + D exceeds reference length
        with pytest.raises(ValueError):
            EditCounts(-1, 0, 0, 0)


class TestWer:
    def test_one_error_in_three_words(self):
        assert wer([("det er bra", "det var bra")]) == pytest.approx(100 / 3)

    def test_pooled_not_averaged(self):
        # Mean of per-utterance rates would be 25%; pooling gives 1/3.
        value = wer([("a", "a"), ("b b", "b")])
        assert value == pytest.approx(100 / 3)
        assert value != pytest.approx(25.0)

    def test_perfect_is_zero(self):
        assert wer([("god dag", "god dag"), ("hei", "hei")]) == 0.0

    def test_insertions_can_exceed_hundred(self):
        assert wer([("a", "a b c d")]) == pytest.approx(300.0)

    def test_empty_reference_total_rejected(self):
        with pytest.raises(ValueError):
            wer([("", "hei")])


class TestCer:
    def test_identical(self):
        assert cer([("ab", "ab")]) == 0.0

    def test_half(self):
        assert cer([("ab", "ac")]) == 50.0

    def test_spaces_count_as_characters(self):
        # reference "a b" has 3 characters; hypothesis drops the space.
        assert cer([("a b", "ab")]) == pytest.approx(100 / 3)

    def test_matches_reference_oracle(self):
        rng = random.Random(5)
        for _ in range(200):
            ref = "".join(rng.choice("ab ") for _ in range(rng.randrange(1, 12)))
            hyp = "".join(rng.choice("ab ") for _ in range(rng.randrange(0, 12)))
            if not ref:
                continue
            expected = 100 * reference_edit_counts(list(ref), list(hyp))[0] / len(ref)
            assert cer([(ref, hyp)]) == pytest.approx(expected)


class TestEvaluate:
    def test_single_group_equals_overall(self):
        records = [record("u1", "god dag"), record("u2", "takk for nå")]
        report = evaluate(records, {"u1": "god dag", "u2": "takk for oss"}, "language")
        assert set(report.groups) == {"nb"}
        assert report.groups["nb"].words == report.overall.words
        assert report.wer_percent == pytest.approx(20.0)

    def test_group_counts_sum_to_overall(self):
        records = [
            record("u1", "god dag", language="nb"),
            record("u2", "god kveld", language="nb"),
            record("u3", "i dag", language="nn"),
            record("u4", "i går", language="nn"),
        ]
        hyps = {"u1": "god dag", "u2": "god kvell", "u3": "i dag", "u4": "i gård"}
        report = evaluate(records, hyps, "language")
        for field in ("substitutions", "deletions", "insertions", "reference_length"):
            assert getattr(report.overall.words, field) == sum(
                getattr(scores.words, field) for scores in report.groups.values()
            )

    def test_language_split_mimicking_parliament_sets(self):
        records = [
            record("b1", "stortinget er samlet", language="nb"),
            record("b2", "det er bra", language="nb"),
            record("b3", "vi stemmer nå", language="nb"),
            record("n1", "dette er nynorsk", language="nn"),
            record("n2", "eg røystar i dag", language="nn"),
            record("n3", "takk for ordet", language="nn"),
        ]
        hyps = {
            "b1": "stortinget er samlet",
            "b2": "det var bra",
            "b3": "vi stemmer nå",
            "n1": "dette er nynorsk",
            "n2": "eg røyster i dag",
            "n3": "takk for ord",
        }
        report = evaluate(records, hyps, "language")
        assert report.groups["nb"].wer_percent == pytest.approx(100 / 9)
        assert report.groups["nn"].wer_percent == pytest.approx(200 / 10)
        assert report.overall.words.reference_length == 19

    def test_normalization_applied_to_both_sides(self):
        records = [record("u1", "Stortinget, ja.")]
        report = evaluate(records, {"u1": "stortinget ja"}, "language")
        assert report.wer_percent == 0.0

    def test_region_grouping_with_missing_field(self):
        records = [record("u1", "hei", region="Oslo-området"), record("u2", "hei")]
        report = evaluate(records, {"u1": "hei", "u2": "hei"}, "region")
        assert set(report.groups) == {"Oslo-området", "unknown"}

    def test_missing_hypothesis_rejected(self):
        with pytest.raises(ToolkitError, match="no hypothesis"):
            evaluate([record("u1", "hei")], {}, "language")

    def test_unmatched_hypothesis_rejected(self):
        with pytest.raises(ToolkitError, match="no reference"):
            evaluate([record("u1", "hei")], {"u1": "hei", "zz": "hei"}, "language")

    def test_duplicate_hypothesis_rejected(self):
        with pytest.raises(ToolkitError, match="duplicate"):
            evaluate([record("u1", "hei")], [("u1", "hei"), ("u1", "hei")], "language")

    def test_tsv_rendering(self):
        records = [record("u1", "det er bra")]
        report = evaluate(records, {"u1": "det var bra"}, "language")
        text = report.to_tsv()
        lines = text.strip().split("\n")
        assert lines[0] == "group\twer\tcer\tS\tD\tI\tref_len"
        assert lines[1].startswith("nb\t33.33\t")
        assert lines[-1].startswith("overall\t33.33\t")

    def test_json_rendering(self):
        records = [record("u1", "ab")]
        report = evaluate(records, {"u1": "ac"}, "language")
        payload = json.loads(report.to_json())
        assert payload["overall"]["cer_percent"] == pytest.approx(50.0)
        assert payload["groups"]["nb"]["words"]["substitutions"] == 1

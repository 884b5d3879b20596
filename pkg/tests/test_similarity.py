import itertools
import json
from fractions import Fraction

import numpy as np
import pytest

from rotguard.errors import EmptyBaselineError, InvalidScoreError
from rotguard.similarity import (
    LabelSet,
    normalize_labels,
    similarity_index,
    weights,
)

from conftest import BASELINE_LABEL_SCORES, ROTATED_LABEL_SCORES


def oracle_similarity(img1_pairs, img2_pairs) -> Fraction:
    """Direct summation with exact rational arithmetic, written from scratch."""
    conf1 = {label: Fraction(conf) for label, conf in img1_pairs}
    conf2 = {label: Fraction(conf) for label, conf in img2_pairs}
    total1 = sum(conf1.values())
    result = Fraction(0)
    for label, c1 in conf1.items():
        if label not in conf2:
            continue
        weight = Fraction(100) * c1 / total1
        c2 = conf2[label]
        result += weight * c2 / c1 if c2 < c1 else weight
    return result


def grid_fraction(tenths: int) -> Fraction:
    return Fraction(tenths, 10)


class TestWorkedExample:
    def test_weights_match_published_values(self, baseline_labels):
        got = weights(baseline_labels)
        expected = {
            "font": 15.69,
            "line": 14.08,
            "symbol": 13.69,
            "number": 12.68,
            "angle": 12.28,
            "brand": 10.66,
            "logo": 10.66,
            "black and white": 10.26,
        }
        assert set(got) == set(expected)
        for label, value in expected.items():
            assert got[label] == pytest.approx(value, abs=0.01)

    def test_similarity_index_and_percentage_error(self, baseline_labels, rotated_labels):
        report = similarity_index(baseline_labels, rotated_labels)
        assert report.similarity_index == pytest.approx(63.78, abs=0.05)
        assert report.percentage_error == pytest.approx(36.22, abs=0.05)

    def test_per_label_breakdown(self, baseline_labels, rotated_labels):
        report = similarity_index(baseline_labels, rotated_labels)
        rows = {row.label: row for row in report.per_label}
        assert rows["font"].similarity_value == pytest.approx(14.28, abs=0.01)
        assert rows["line"].similarity_value == pytest.approx(13.88, abs=0.01)
        assert rows["symbol"].similarity_value == pytest.approx(13.69, abs=0.01)
        assert rows["logo"].similarity_value == pytest.approx(10.66, abs=0.01)
        assert rows["angle"].similarity_value == pytest.approx(11.27, abs=0.01)
        assert not rows["number"].present_in_img2
        assert rows["number"].similarity_value == 0.0


class TestWeights:
    def test_single_label_gets_full_weight(self):
        assert weights(normalize_labels([("sky", 0.42)])) == {"sky": 100.0}

    def test_equal_confidences_split_evenly(self):
        got = weights(normalize_labels([("a", 0.6), ("b", 0.6)]))
        assert got["a"] == pytest.approx(50.0)
        assert got["b"] == pytest.approx(50.0)

    def test_empty_baseline_raises(self):
        with pytest.raises(EmptyBaselineError):
            weights(LabelSet(()))

    def test_weights_sum_to_100(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            pairs = [(f"label-{i}", float(rng.uniform(0.01, 1.0))) for i in range(n)]
            assert sum(weights(normalize_labels(pairs)).values()) == pytest.approx(
                100.0, abs=1e-9
            )


class TestNormalizeLabels:
    def test_percent_scale_detected(self):
        assert normalize_labels([("Font", 78)]).entries == (("font", 0.78),)

    def test_fraction_scale_preserved(self):
        assert normalize_labels([("Font", 0.78)]).entries == (("font", 0.78),)

    def test_duplicates_merge_keeping_max(self):
        got = normalize_labels([("Sky", 0.91), (" sky ", 0.80)])
        assert got.entries == (("sky", 0.91),)

    def test_sorted_descending(self):
        got = normalize_labels([("a", 0.2), ("b", 0.9), ("c", 0.5)])
        assert got.labels() == ["b", "c", "a"]

    @pytest.mark.parametrize("score", [0, -1, 101, 150.5])
    def test_rejects_out_of_range_scores(self, score):
        with pytest.raises(InvalidScoreError):
            normalize_labels([("x", score)])

    def test_json_round_trip(self, baseline_labels):
        doc = json.loads(json.dumps(baseline_labels.to_json()))
        assert LabelSet.from_json(doc) == baseline_labels

    @pytest.mark.parametrize(
        "doc", [{}, {"labels": "nope"}, {"labels": [{"description": 3, "score": 0.5}]}]
    )
    def test_from_json_rejects_malformed(self, doc):
        with pytest.raises(ValueError):
            LabelSet.from_json(doc)


class TestSimilarityProperties:
    def test_self_similarity_is_100(self, baseline_labels):
        report = similarity_index(baseline_labels, baseline_labels)
        assert report.similarity_index == pytest.approx(100.0, abs=1e-9)
        assert report.percentage_error == pytest.approx(0.0, abs=1e-9)

    def test_disjoint_sets_score_zero(self, baseline_labels):
        other = normalize_labels([("tree", 0.9), ("cloud", 0.8)])
        report = similarity_index(baseline_labels, other)
        assert report.similarity_index == 0.0
        assert report.percentage_error == 100.0

    def test_empty_img2_scores_zero(self, baseline_labels):
        assert similarity_index(baseline_labels, LabelSet(())).similarity_index == 0.0

    def test_empty_baseline_raises(self, rotated_labels):
        with pytest.raises(EmptyBaselineError):
            similarity_index(LabelSet(()), rotated_labels)

    def test_range_and_cap(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n1, n2 = rng.integers(1, 6), rng.integers(0, 6)
            universe = [f"label-{i}" for i in range(8)]
            img1 = normalize_labels(
                [(lab, float(rng.uniform(0.05, 1.0)))
                 for lab in rng.choice(universe, size=n1, replace=False)]
            )
            img2 = normalize_labels(
                [(lab, float(rng.uniform(0.05, 1.0)))
                 for lab in rng.choice(universe, size=n2, replace=False)]
            )
            report = similarity_index(img1, img2)
            assert 0.0 <= report.similarity_index <= 100.0
            assert report.percentage_error == 100.0 - report.similarity_index
            for row in report.per_label:
                assert 0.0 <= row.similarity_value <= row.weight + 1e-12

    def test_joint_scale_invariance(self, baseline_labels, rotated_labels):
        for factor in (0.1, 0.37, 0.5, 0.999):
            scaled1 = LabelSet(
                tuple((lab, conf * factor) for lab, conf in baseline_labels.entries)
            )
            scaled2 = LabelSet(
                tuple((lab, conf * factor) for lab, conf in rotated_labels.entries)
            )
            base = similarity_index(baseline_labels, rotated_labels).similarity_index
            got = similarity_index(scaled1, scaled2).similarity_index
            assert got == pytest.approx(base, abs=1e-9)

    def test_percent_and_fraction_inputs_agree(self):
        pct = similarity_index(
            normalize_labels(BASELINE_LABEL_SCORES), normalize_labels(ROTATED_LABEL_SCORES)
        )
        frac = similarity_index(
            normalize_labels([(l, s / 100) for l, s in BASELINE_LABEL_SCORES]),
            normalize_labels([(l, s / 100) for l, s in ROTATED_LABEL_SCORES]),
        )
        assert pct.similarity_index == pytest.approx(frac.similarity_index, abs=1e-9)

    def test_monotone_in_img2_confidence(self, baseline_labels, rotated_labels):
        base = similarity_index(baseline_labels, rotated_labels).similarity_index
        # lowering any common label's confidence never increases the score
        lowered = LabelSet(
            tuple(
                (lab, conf * 0.5 if lab == "font" else conf)
                for lab, conf in rotated_labels.entries
            )
        )
        assert similarity_index(baseline_labels, lowered).similarity_index <= base
        # dropping a common label never increases the score
        dropped = LabelSet(
            tuple(pair for pair in rotated_labels.entries if pair[0] != "font")
        )
        assert similarity_index(baseline_labels, dropped).similarity_index <= base

    def test_overconfident_img2_earns_no_bonus(self):
        img1 = normalize_labels([("a", 0.5), ("b", 0.5)])
        exact = similarity_index(img1, normalize_labels([("a", 0.5), ("b", 0.5)]))
        inflated = similarity_index(img1, normalize_labels([("a", 0.99), ("b", 0.99)]))
        assert inflated.similarity_index == pytest.approx(
            exact.similarity_index, abs=1e-12
        )

    def test_zero_reward_for_extra_img2_labels(self, baseline_labels, rotated_labels):
        base = similarity_index(baseline_labels, rotated_labels).similarity_index
        extended = LabelSet(
            rotated_labels.entries + (("skyscraper", 0.97), ("noise", 0.01))
        )
        assert similarity_index(baseline_labels, extended).similarity_index == base


class TestBruteForceEquivalence:
    def test_exhaustive_two_label_universe(self):
        labels = ("a", "b")
        grid = range(1, 11)  # tenths: 0.1 .. 1.0
        img1_sets = []
        for k in (1, 2):
            for subset in itertools.combinations(labels, k):
                for confs in itertools.product(grid, repeat=k):
                    img1_sets.append(list(zip(subset, confs)))
        img2_sets = [[]] + img1_sets
        for pairs1 in img1_sets:
            set1 = LabelSet(tuple((l, t / 10) for l, t in pairs1))
            for pairs2 in img2_sets:
                set2 = LabelSet(tuple((l, t / 10) for l, t in pairs2))
                expected = oracle_similarity(
                    [(l, grid_fraction(t)) for l, t in pairs1],
                    [(l, grid_fraction(t)) for l, t in pairs2],
                )
                got = similarity_index(set1, set2).similarity_index
                assert got == pytest.approx(float(expected), abs=1e-9)

    def test_random_sample_up_to_four_labels(self):
        rng = np.random.default_rng(7)
        universe = ["a", "b", "c", "d", "e"]
        for _ in range(3000):
            n1 = int(rng.integers(1, 5))
            n2 = int(rng.integers(0, 5))
            pairs1 = [
                (lab, int(rng.integers(1, 11)))
                for lab in rng.choice(universe, size=n1, replace=False)
            ]
            pairs2 = [
                (lab, int(rng.integers(1, 11)))
                for lab in rng.choice(universe, size=n2, replace=False)
            ]
            set1 = LabelSet(tuple((l, t / 10) for l, t in pairs1))
            set2 = LabelSet(tuple((l, t / 10) for l, t in pairs2))
            expected = oracle_similarity(
                [(l, grid_fraction(t)) for l, t in pairs1],
                [(l, grid_fraction(t)) for l, t in pairs2],
            )
            got = similarity_index(set1, set2).similarity_index
            assert got == pytest.approx(float(expected), abs=1e-9)

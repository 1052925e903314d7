"""Sources, representations, and the averaging-axiom checker."""

import numpy as np
import pytest

from aggkit import (
    AxiomMode,
    DatasetSource,
    OracleSource,
    Representation,
    Tolerance,
    check_axiom,
    check_richness,
    check_strong_richness,
    evaluate,
    feature_set,
    induced_source,
    top_set,
)
from aggkit.errors import (
    MissingDataError,
    MissingSingleton,
    UnknownFeature,
)


class TestFeatureSet:
    def test_accepts_string_or_iterable(self):
        assert feature_set("a") == frozenset(["a"])
        assert feature_set(["a", "b"]) == frozenset(["a", "b"])
        assert feature_set(frozenset(["b", "a"])) == frozenset(["a", "b"])

    def test_rejects_bad_ids(self):
        with pytest.raises(ValueError):
            feature_set([""])
        with pytest.raises(ValueError):
            feature_set(["a b"])
        with pytest.raises(ValueError):
            feature_set(["a,b"])
        with pytest.raises(ValueError):
            feature_set([])


class TestDatasetSource:
    def test_requires_singletons(self):
        with pytest.raises(MissingSingleton):
            DatasetSource(1, {frozenset(["a", "b"]): [0.5]})

    def test_lookup_and_missing(self):
        src = DatasetSource(
            1,
            {
                frozenset(["a"]): [0.0],
                frozenset(["b"]): [1.0],
                frozenset(["a", "b"]): [0.5],
            },
        )
        assert src.has(["a", "b"])
        np.testing.assert_allclose(src.outcome(["b", "a"]), [0.5])
        with pytest.raises(MissingDataError) as err:
            src.outcome(["a", "c"])
        assert err.value.required

    def test_outcomes_are_read_only(self):
        src = DatasetSource(2, {frozenset(["a"]): [1.0, 2.0]})
        out = src.outcome(["a"])
        with pytest.raises(ValueError):
            out[0] = 9.0

    def test_sets_are_canonically_ordered(self):
        src = DatasetSource(
            1,
            {
                frozenset(["b"]): [1.0],
                frozenset(["a"]): [0.0],
                frozenset(["a", "b"]): [0.5],
            },
        )
        assert src.sets() == (
            frozenset(["a"]),
            frozenset(["b"]),
            frozenset(["a", "b"]),
        )


class TestOracleSource:
    def test_caching_and_log(self):
        calls = []

        def fn(fs):
            calls.append(fs)
            return [float(len(fs))]

        src = OracleSource(1, fn, ["a", "b"])
        src.outcome(["a"])
        src.outcome(["a"])
        assert len(calls) == 1
        src.outcome(["a", "b"])
        assert frozenset(["a", "b"]) in src.queried_sets()

    def test_unknown_feature_rejected(self):
        src = OracleSource(1, lambda fs: [0.0], ["a"])
        with pytest.raises(UnknownFeature):
            src.outcome(["z"])


class TestRepresentation:
    def test_normalizes_each_class_at_smallest_member(self):
        rep = Representation(
            weights={"a": 2.0, "b": 4.0, "c": 10.0},
            ranks={"a": 0, "b": 0, "c": 1},
            outcomes={"a": [0.0], "b": [1.0], "c": [2.0]},
        )
        assert rep.weights["a"] == pytest.approx(1.0)
        assert rep.weights["b"] == pytest.approx(2.0)
        assert rep.weights["c"] == pytest.approx(1.0)

    def test_rank_classes_listed_top_down(self, two_tier_rep):
        classes = two_tier_rep.rank_classes()
        assert classes[0] == ("c",)
        assert classes[1] == ("a", "b")

    def test_validation(self):
        with pytest.raises(ValueError):
            Representation(weights={"a": 1.0}, ranks={}, outcomes={"a": [0.0]})
        with pytest.raises(ValueError):
            Representation(
                weights={"a": -1.0}, ranks={"a": 0}, outcomes={"a": [0.0]}
            )

    def test_restrict(self, two_tier_rep):
        sub = two_tier_rep.restrict(["a", "b"])
        assert set(sub.features()) == {"a", "b"}

    def test_top_set_and_evaluate(self, two_tier_rep):
        assert top_set(two_tier_rep, ["a", "b", "c"]) == frozenset(["c"])
        np.testing.assert_allclose(
            evaluate(two_tier_rep, ["a", "b", "c"]), [0.2, 0.9]
        )
        # Within the bottom class the weights 1 and 2 mix the outcomes.
        np.testing.assert_allclose(
            evaluate(two_tier_rep, ["a", "b"]), [2.0 / 3.0, 0.0]
        )


class TestInducedSource:
    def test_all_subsets(self, two_tier_rep):
        src = induced_source(two_tier_rep)
        assert len(src.sets()) == 7

    def test_custom_sets_keep_singletons(self, two_tier_rep):
        src = induced_source(two_tier_rep, [("a", "b")])
        assert src.has(["a"])
        assert src.has(["b"])
        assert src.has(["a", "b"])


class TestCheckAxiom:
    def test_weighted_holds_on_induced_data(self, two_tier_source):
        report = check_axiom(two_tier_source, AxiomMode.WEIGHTED)
        assert report.satisfied
        assert not report.violations

    def test_strict_fails_on_two_tiers(self, two_tier_source):
        # Adding c to {a, b} snaps the outcome to c itself: an endpoint.
        report = check_axiom(two_tier_source, AxiomMode.STRICT)
        assert not report.satisfied
        bad_unions = {v.union for v in report.violations}
        assert ("a", "b", "c") in bad_unions

    def test_strict_holds_on_single_class(self, flat_source):
        assert check_axiom(flat_source, AxiomMode.STRICT).satisfied

    def test_extreme_holds_for_dictatorial_ranks(self):
        rep = Representation(
            weights={"a": 1.0, "b": 1.0, "c": 1.0},
            ranks={"a": 0, "b": 1, "c": 2},
            outcomes={"a": [0.0, 0.0], "b": [1.0, 0.0], "c": [0.0, 1.0]},
        )
        src = induced_source(rep)
        assert check_axiom(src, AxiomMode.EXTREME).satisfied
        assert not check_axiom(src, AxiomMode.STRICT).satisfied

    def test_off_segment_pair_is_flagged(self):
        src = DatasetSource(
            2,
            {
                frozenset(["a"]): [0.0, 0.0],
                frozenset(["b"]): [1.0, 0.0],
                frozenset(["a", "b"]): [0.5, 0.3],
            },
        )
        report = check_axiom(src, AxiomMode.WEIGHTED)
        assert not report.satisfied
        assert report.violations[0].residual == pytest.approx(0.3)

    def test_degenerate_equal_outcomes_pass(self):
        src = DatasetSource(
            1,
            {
                frozenset(["a"]): [0.7],
                frozenset(["b"]): [0.7],
                frozenset(["a", "b"]): [0.7],
            },
        )
        for mode in AxiomMode:
            assert check_axiom(src, mode).satisfied

    def test_degenerate_differing_union_fails(self):
        src = DatasetSource(
            1,
            {
                frozenset(["a"]): [0.7],
                frozenset(["b"]): [0.7],
                frozenset(["a", "b"]): [0.9],
            },
        )
        report = check_axiom(src, AxiomMode.WEIGHTED)
        assert not report.satisfied
        assert report.violations[0].degenerate

    def test_every_bipartition_is_checked(self, flat_source):
        report = check_axiom(flat_source, AxiomMode.WEIGHTED)
        # Three pair unions with one split each, one triple with three.
        assert len(report.checks) == 6

    def test_summary_mentions_verdict(self, flat_source):
        text = check_axiom(flat_source, AxiomMode.WEIGHTED).summary()
        assert "satisfied" in text


class TestRichness:
    def test_plane_spanning_data_is_rich(self, flat_source):
        assert check_richness(flat_source)

    def test_collinear_data_is_not(self, line_three_points):
        assert not check_richness(line_three_points)


class TestStrongRichness:
    def test_full_triangle_has_witnesses(self, flat_source):
        report = check_strong_richness(flat_source)
        assert report.satisfied
        for entry in report.entries:
            assert entry.witness is not None

    def test_missing_pairs_block_the_decision(self):
        src = DatasetSource(
            2,
            {
                frozenset(["a"]): [0.0, 0.0],
                frozenset(["b"]): [1.0, 0.0],
                frozenset(["c"]): [0.0, 1.0],
            },
        )
        with pytest.raises(MissingDataError) as err:
            check_strong_richness(src)
        assert err.value.required

    def test_endpoint_aggregates_lose_the_witness(self):
        # Pair outcomes equal to one endpoint are not interior.
        src = DatasetSource(
            2,
            {
                frozenset(["a"]): [0.0, 0.0],
                frozenset(["b"]): [1.0, 0.0],
                frozenset(["c"]): [0.0, 1.0],
                frozenset(["a", "b"]): [0.0, 0.0],
                frozenset(["a", "c"]): [0.0, 0.0],
                frozenset(["b", "c"]): [0.5, 0.5],
            },
        )
        report = check_strong_richness(src)
        assert not report.satisfied
        assert report.witness_for("a") is None

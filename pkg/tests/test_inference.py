"""Prediction semantics: tie-breaking, forced abstention, degenerate rows."""

import numpy as np
import pytest

from labelforge import (
    DataError,
    LabelPrior,
    ModelParams,
    coverage,
    majority_vote,
    majority_vote_predictions,
    predict,
)
from labelforge.infer import REASON_DEGENERATE, REASON_FORCED, REASON_NONE, REASON_TIE


class TestPredict:
    def test_all_abstain_row_is_tie(self):
        params = ModelParams([0.9], [0.4])
        preds = predict([[0]], params, LabelPrior())
        assert preds[0].label == 0
        assert preds[0].abstain_reason == REASON_TIE
        assert preds[0].score_pos == pytest.approx(0.5)

    def test_single_positive_vote(self):
        params = ModelParams([0.7], [0.5])
        preds = predict([[1]], params, LabelPrior())
        assert preds[0].label == 1
        assert preds[0].score_pos == pytest.approx(0.7)
        assert preds[0].abstain_reason == REASON_NONE

    def test_forced_abstention_overrides_model(self):
        # MV ties on (+1, -1); a lopsided accuracy pair would break the tie
        params = ModelParams([0.95, 0.55], [0.8, 0.8])
        forced = predict([[1, -1]], params, LabelPrior(force_abstain=True))
        assert forced[0].label == 0
        assert forced[0].abstain_reason == REASON_FORCED
        free = predict([[1, -1]], params, LabelPrior(force_abstain=False))
        assert free[0].label == 1

    def test_degenerate_row_abstains(self):
        # abstention on a full-coverage LF has probability zero under both labels
        params = ModelParams([0.7, 0.8], [1.0, 0.5])
        preds = predict([[0, 1]], params, LabelPrior())
        assert preds[0].label == 0
        assert preds[0].abstain_reason == REASON_DEGENERATE
        assert preds[0].score_pos == pytest.approx(0.5)

    def test_strong_p_recapitulates_majority_vote(self):
        rng = np.random.default_rng(42)
        strong = LabelPrior(p=1 - 1e-9, force_abstain=True)
        for _ in range(20):
            n, m = int(rng.integers(3, 30)), int(rng.integers(1, 7))
            votes = rng.integers(-1, 2, size=(n, m))
            votes[0] = 0  # guarantee an all-abstain row
            params = ModelParams(rng.uniform(0.1, 0.9, m), rng.uniform(0.1, 0.9, m))
            preds = predict(votes, params, strong)
            np.testing.assert_array_equal(preds.labels, majority_vote(votes))

    def test_symmetric_prior_ignores_anchor_votes(self):
        rng = np.random.default_rng(3)
        votes = rng.integers(-1, 2, size=(20, 3))
        params = ModelParams(rng.uniform(0.2, 0.8, 3), rng.uniform(0.2, 0.8, 3))
        a = predict(votes, params, LabelPrior(p=0.5, force_abstain=False))
        b = predict(votes, params, None)
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.score_pos, b.score_pos)

    def test_tie_symmetry_under_global_negation(self):
        rng = np.random.default_rng(17)
        votes = rng.integers(-1, 2, size=(40, 4))
        params = ModelParams(rng.uniform(0.2, 0.8, 4), rng.uniform(0.2, 0.8, 4))
        plain = predict(votes, params, LabelPrior())
        flipped = predict(-votes, params, LabelPrior())
        np.testing.assert_array_equal(flipped.labels, -plain.labels)

    def test_label_zero_iff_reason(self):
        rng = np.random.default_rng(23)
        votes = rng.integers(-1, 2, size=(60, 3))
        params = ModelParams(rng.uniform(0.2, 0.8, 3), rng.uniform(0.2, 0.8, 3))
        preds = predict(votes, params, LabelPrior(p=0.8, force_abstain=True))
        for pred in preds:
            assert (pred.label == 0) == (pred.abstain_reason != REASON_NONE)
            assert 0.0 <= pred.score_pos <= 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            predict([[1, 0]], ModelParams([0.7], [0.5]), None)


class TestCoverage:
    def test_full(self):
        params = ModelParams([0.9], [1.0])
        preds = predict([[1], [-1]], params, LabelPrior())
        assert coverage(preds) == 1.0

    def test_zero(self):
        params = ModelParams([0.9], [0.4])
        preds = predict([[0], [0]], params, LabelPrior())
        assert coverage(preds) == 0.0

    def test_forced_matches_mv_coverage(self):
        rng = np.random.default_rng(31)
        votes = rng.integers(-1, 2, size=(50, 3))
        params = ModelParams(rng.uniform(0.3, 0.9, 3), rng.uniform(0.3, 0.9, 3))
        preds = predict(votes, params, LabelPrior(p=1 - 1e-9, force_abstain=True))
        mv_cov = float((majority_vote(votes) != 0).mean())
        assert coverage(preds) == pytest.approx(mv_cov)


class TestMajorityVotePredictions:
    def test_labels_and_scores(self):
        preds = majority_vote_predictions([[1, 1, -1], [0, 0, 0], [-1, -1, 1]])
        np.testing.assert_array_equal(preds.labels, [1, 0, -1])
        np.testing.assert_allclose(preds.score_pos, [2 / 3, 0.5, 1 / 3])
        assert preds[1].abstain_reason == REASON_TIE

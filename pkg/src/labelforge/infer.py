"""Label assignment under the fitted model, with abstention tie-breaking.

Each row gets the more probable label under its posterior; exact ties
(within TIE_EPS, which covers all-abstain rows) abstain. When the label
prior carries ``force_abstain``, rows where the majority vote of the
matrix being predicted abstains are forced to abstain too, regardless of
the model posterior. Rows whose marginal underflows abstain as degenerate
rather than raising, so batch prediction never aborts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import DataError
from .model import (
    MARGINAL_FLOOR,
    LabelPrior,
    ModelParams,
    as_lf_matrix,
    label_prior_pairs,
)
from .priors import majority_vote, vote_fraction

TIE_EPS = 1e-12

REASON_NONE = "none"
REASON_TIE = "tie"
REASON_FORCED = "forced"
REASON_DEGENERATE = "degenerate"


class Prediction(NamedTuple):
    label: int
    score_pos: float
    abstain_reason: str


@dataclass
class Predictions:
    """Per-row predicted labels, positive-class scores, and abstain reasons."""

    labels: np.ndarray
    score_pos: np.ndarray
    abstain_reason: np.ndarray

    def __len__(self) -> int:
        return self.labels.shape[0]

    def __getitem__(self, i: int) -> Prediction:
        return Prediction(
            int(self.labels[i]), float(self.score_pos[i]), str(self.abstain_reason[i])
        )

    def __iter__(self) -> Iterator[Prediction]:
        return (self[i] for i in range(len(self)))


def _joint_products(
    votes: np.ndarray, params: ModelParams, pairs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    acc, cov = params.accuracy, params.coverage
    pos = votes == 1
    neg = votes == -1
    off = votes == 0
    abstain = off * (1.0 - cov)
    factors_pos = abstain + pos * (acc * cov) + neg * ((1.0 - acc) * cov)
    factors_neg = abstain + neg * (acc * cov) + pos * ((1.0 - acc) * cov)
    joint_pos = pairs[:, 0] * np.prod(factors_pos, axis=1)
    joint_neg = pairs[:, 1] * np.prod(factors_neg, axis=1)
    return joint_pos, joint_neg


def predict(votes, params: ModelParams, label_prior: LabelPrior | None = None) -> Predictions:
    """Most probable label per row under the model and label prior.

    Majority-vote anchors for the prior pairs (and for forced abstention)
    are always recomputed from the matrix being predicted.
    """
    votes = as_lf_matrix(votes)
    if votes.shape[1] != params.m:
        raise DataError(f"matrix has {votes.shape[1]} columns but params have {params.m}")
    label_prior = label_prior or LabelPrior()
    mv = majority_vote(votes)
    pairs = label_prior_pairs(mv, label_prior.p)

    joint_pos, joint_neg = _joint_products(votes, params, pairs)
    total = joint_pos + joint_neg
    degenerate = total < MARGINAL_FLOOR
    safe_total = np.where(degenerate, 1.0, total)
    score_pos = np.where(degenerate, 0.5, joint_pos / safe_total)
    score_neg = 1.0 - score_pos

    n = votes.shape[0]
    labels = np.zeros(n, dtype=np.int64)
    reasons = np.full(n, REASON_NONE, dtype="<U10")

    diff = score_pos - score_neg
    labels[diff > TIE_EPS] = 1
    labels[diff < -TIE_EPS] = -1
    reasons[(~degenerate) & (np.abs(diff) <= TIE_EPS)] = REASON_TIE
    labels[degenerate] = 0
    reasons[degenerate] = REASON_DEGENERATE

    if label_prior.force_abstain:
        forced = mv == 0
        labels[forced] = 0
        reasons[forced] = REASON_FORCED

    return Predictions(labels=labels, score_pos=score_pos, abstain_reason=reasons)


def majority_vote_predictions(votes) -> Predictions:
    """Majority vote dressed as predictions; scores are per-row vote fractions."""
    votes = as_lf_matrix(votes)
    labels = majority_vote(votes)
    reasons = np.where(labels == 0, REASON_TIE, REASON_NONE).astype("<U10")
    return Predictions(labels=labels, score_pos=vote_fraction(votes), abstain_reason=reasons)


def coverage(predictions: Predictions) -> float:
    """Fraction of rows with a non-abstaining predicted label."""
    if len(predictions) == 0:
        raise DataError("coverage of an empty prediction set is undefined")
    return float((predictions.labels != 0).sum() / len(predictions))

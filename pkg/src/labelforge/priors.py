"""Automatic prior construction from majority vote over the LF matrix.

Beta-prior means over LF accuracies come from scoring each LF against a
reference label vector: the unweighted majority vote (the default,
ground-truth-free heuristic), the true labels (an experimental upper
bound), random draws (a control), or explicit user values. Prior strength
is the total pseudo-count mass s, split as u = s * mean, v = s * (1 - mean).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, EmptyOverlapError
from .model import BetaPrior, LabelPrior, as_label_vector, as_lf_matrix

PRIOR_SOURCES = ("mv", "empirical", "random", "uniform", "user")


@dataclass(frozen=True)
class PriorSpec:
    """A full prior configuration: beta priors over accuracies plus the label prior.

    ``means`` records the requested accuracy-prior means before boundary
    shrinkage, so prior-quality reports can measure distances against what
    was asked for. ``strength`` is the pseudo-count mass u + v shared by
    all LFs (None for user-supplied priors with uneven mass).
    """

    accuracy_prior: BetaPrior
    label_prior: LabelPrior
    strength: float | None
    source: str
    means: np.ndarray | None = None

    def __post_init__(self):
        if self.source not in PRIOR_SOURCES:
            raise DataError(f"unknown prior source {self.source!r}")
        if self.strength is not None and not self.strength > 0:
            raise DataError(f"prior strength must be > 0, got {self.strength}")
        if self.means is not None:
            object.__setattr__(self, "means", np.asarray(self.means, dtype=np.float64))


def majority_vote(votes) -> np.ndarray:
    """Per-row unweighted majority vote; ties and all-abstain rows yield 0."""
    votes = as_lf_matrix(votes)
    pos = (votes == 1).sum(axis=1)
    neg = (votes == -1).sum(axis=1)
    return np.sign(pos - neg).astype(np.int64)


def vote_fraction(votes) -> np.ndarray:
    """Per-row fraction of non-abstaining votes that are +1 (0.5 when none vote).

    Serves as the soft score attached to majority-vote predictions.
    """
    votes = as_lf_matrix(votes)
    pos = (votes == 1).sum(axis=1).astype(np.float64)
    neg = (votes == -1).sum(axis=1).astype(np.float64)
    total = pos + neg
    out = np.full(votes.shape[0], 0.5, dtype=np.float64)
    voting = total > 0
    out[voting] = pos[voting] / total[voting]
    return out


def accuracy_vs_reference(lf_column, reference) -> float:
    """Fraction of agreements between an LF column and a reference vector,
    counted only over rows where both vote (abstentions excluded on both sides).

    Raises EmptyOverlapError when no row has both nonzero; callers
    substitute the uninformative mean 0.5.
    """
    col = as_label_vector(lf_column)
    ref = as_label_vector(reference)
    if col.shape[0] != ref.shape[0]:
        raise DataError(f"column length {col.shape[0]} != reference length {ref.shape[0]}")
    both = (col != 0) & (ref != 0)
    count = int(both.sum())
    if count == 0:
        raise EmptyOverlapError("no row where both the LF and the reference vote")
    return float((col[both] == ref[both]).sum() / count)


def beta_from_mean(mean: float, strength: float) -> tuple[float, float]:
    """Beta parameters (u, v) with the given mean and pseudo-count mass.

    Means at exactly 0 or 1 are first shrunk to 1/(s+2) or 1 - 1/(s+2) so
    the density stays finite on the open interval.
    """
    if not strength > 0:
        raise DataError(f"strength must be > 0, got {strength}")
    lo = 1.0 / (strength + 2.0)
    if mean <= 0.0:
        mean = lo
    elif mean >= 1.0:
        mean = 1.0 - lo
    return strength * mean, strength * (1.0 - mean)


def reference_accuracies(votes, reference) -> np.ndarray:
    """Per-column accuracy against a reference vector, 0.5 where no overlap."""
    votes = as_lf_matrix(votes)
    means = np.empty(votes.shape[1], dtype=np.float64)
    for j in range(votes.shape[1]):
        try:
            means[j] = accuracy_vs_reference(votes[:, j], reference)
        except EmptyOverlapError:
            means[j] = 0.5
    return means


def _spec_from_means(
    means: np.ndarray,
    strength: float,
    p: float,
    mv_votes: np.ndarray | None,
    force_abstain: bool,
    source: str,
) -> PriorSpec:
    u = np.empty_like(means)
    v = np.empty_like(means)
    for j, mu in enumerate(means):
        u[j], v[j] = beta_from_mean(float(mu), strength)
    return PriorSpec(
        accuracy_prior=BetaPrior(u, v),
        label_prior=LabelPrior(p=p, mv_votes=mv_votes, force_abstain=force_abstain),
        strength=float(strength),
        source=source,
        means=means,
    )


def build_mv_priors(
    votes, strength: float, p: float = 0.5, force_abstain: bool = False
) -> PriorSpec:
    """Priors whose accuracy means score each LF against the majority vote,
    used as a proxy for unavailable ground truth."""
    votes = as_lf_matrix(votes)
    mv = majority_vote(votes)
    means = reference_accuracies(votes, mv)
    return _spec_from_means(means, strength, p, mv, force_abstain, "mv")


def build_empirical_priors(
    votes, truth, strength: float, p: float = 0.5, force_abstain: bool = False
) -> PriorSpec:
    """Priors whose accuracy means are the LF accuracies against ground truth
    (simulated optimal priors; the label prior still anchors to majority vote)."""
    votes = as_lf_matrix(votes)
    truth = as_label_vector(truth, allow_abstain=False)
    if truth.shape[0] != votes.shape[0]:
        raise DataError(f"truth length {truth.shape[0]} != row count {votes.shape[0]}")
    means = reference_accuracies(votes, truth)
    return _spec_from_means(means, strength, p, majority_vote(votes), force_abstain, "empirical")


def build_random_priors(
    m: int, strength: float, seed: int, p: float = 0.5, force_abstain: bool = False
) -> PriorSpec:
    """Priors with means drawn uniformly from (0, 1); deterministic per seed."""
    if m < 1:
        raise DataError(f"need at least one LF, got m={m}")
    rng = np.random.default_rng(seed)
    means = rng.uniform(0.0, 1.0, size=m)
    return _spec_from_means(means, strength, p, None, force_abstain, "random")


def build_uniform_priors(m: int, p: float = 0.5, force_abstain: bool = False) -> PriorSpec:
    """Uniform beta priors (u = v = 1): zero log-density contribution, so the
    regularized objective collapses to the plain-likelihood one."""
    if m < 1:
        raise DataError(f"need at least one LF, got m={m}")
    ones = np.ones(m, dtype=np.float64)
    return PriorSpec(
        accuracy_prior=BetaPrior(ones, ones.copy()),
        label_prior=LabelPrior(p=p, mv_votes=None, force_abstain=force_abstain),
        strength=2.0,
        source="uniform",
        means=np.full(m, 0.5),
    )


def build_user_priors(
    u, v, p: float = 0.5, mv_votes=None, force_abstain: bool = False
) -> PriorSpec:
    """Pass-through for explicit (u, v, p) values supplied by the caller."""
    prior = BetaPrior(np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64))
    mass = prior.u + prior.v
    strength = float(mass[0]) if np.all(mass == mass[0]) else None
    return PriorSpec(
        accuracy_prior=prior,
        label_prior=LabelPrior(p=p, mv_votes=mv_votes, force_abstain=force_abstain),
        strength=strength,
        source="user",
        means=prior.mean(),
    )

"""Classifier ensembles: copy allocation, voting, and baselines.

An ensemble deploys every allocated variant copy onto every machine, so
one test input collects (copies x machines) confidence vectors. Three
aggregation strategies are provided: plurality voting, plain confidence
averaging, and validation-accuracy-weighted averaging.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import ClassifierModel, ConfidenceVector, confidence, predict
from .noise import MachineProfile, NoisyExecutionConfig, substream

STRATEGIES = ("plurality", "average", "accuracy_weighted")


class EnsembleError(ValueError):
    """Raised for invalid ensemble configuration or inputs."""


@dataclass(frozen=True)
class EnsembleConfig:
    ensemble_size: int
    machines: tuple[MachineProfile, ...]
    n_variants: int = 3
    allocation_seed: int = 0
    strategy: str = "plurality"

    def __post_init__(self):
        object.__setattr__(self, "machines", tuple(self.machines))
        if self.ensemble_size < self.n_variants:
            raise EnsembleError("ensemble_size must be >= n_variants")
        if self.strategy not in STRATEGIES:
            raise EnsembleError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class VoteTally:
    """Per-classifier confidences and the resulting vote counts."""

    per_classifier: tuple  # of (classifier_id, ConfidenceVector, predicted label)
    per_class_votes: dict

    @classmethod
    def from_confidences(cls, entries) -> "VoteTally":
        """Build from (classifier_id, ConfidenceVector) pairs."""
        per_classifier = tuple(
            (cid, conf, predict(conf)) for cid, conf in entries
        )
        if not per_classifier:
            raise EnsembleError("tally needs at least one classifier")
        votes = {}
        for _, _, label in per_classifier:
            votes[label] = votes.get(label, 0) + 1
        return cls(per_classifier=per_classifier, per_class_votes=votes)


def allocate_variants(ensemble_size: int, n_variants: int, seed: int) -> list[int]:
    """Variant id per ensemble slot: one of each, extras dealt in seeded rounds.

    Each round hands one extra copy to a without-replacement pick of
    variants, so sizes 3/5/7 give counts (1,1,1), (2,2,1), (3,2,2).
    """
    if ensemble_size < n_variants:
        raise EnsembleError("ensemble_size must be >= n_variants")
    rng = np.random.default_rng(seed)
    counts = [1] * n_variants
    remaining = ensemble_size - n_variants
    while remaining > 0:
        take = min(remaining, n_variants)
        for vid in rng.choice(n_variants, size=take, replace=False):
            counts[int(vid)] += 1
        remaining -= take
    return [vid for vid, c in enumerate(counts) for _ in range(c)]


def plurality_vote(tally: VoteTally):
    """Most-voted label; ties broken by summed confidence, then label order.

    The winner need not hold a majority.
    """
    best = max(tally.per_class_votes.values())
    tied = [label for label, c in tally.per_class_votes.items() if c == best]
    if len(tied) == 1:
        return tied[0]
    sums = {
        label: sum(conf[label] for _, conf, _ in tally.per_classifier)
        for label in tied
    }
    label_order = tally.per_classifier[0][1].class_labels
    return max(tied, key=lambda lab: (sums[lab], -label_order.index(lab)))


def average_aggregate(confidences) -> tuple[object, ConfidenceVector]:
    """Elementwise mean of the confidence vectors, then argmax."""
    confidences = list(confidences)
    if not confidences:
        raise EnsembleError("no confidences to aggregate")
    labels = confidences[0].class_labels
    for conf in confidences:
        if conf.class_labels != labels:
            raise EnsembleError("class label sets differ")
    mean = np.mean([conf.values for conf in confidences], axis=0)
    averaged = ConfidenceVector(values=mean, class_labels=labels)
    return predict(averaged), averaged


def weighted_aggregate(confidences, weights) -> tuple[object, ConfidenceVector]:
    """Accuracy-weighted mean of the confidence vectors, then argmax."""
    confidences = list(confidences)
    weights = np.asarray(list(weights), dtype=float)
    if len(weights) != len(confidences):
        raise EnsembleError("one weight per classifier required")
    if np.any(weights < 0) or weights.sum() <= 0:
        raise EnsembleError("weights must be non-negative and not all zero")
    labels = confidences[0].class_labels
    for conf in confidences:
        if conf.class_labels != labels:
            raise EnsembleError("class label sets differ")
    stacked = np.stack([conf.values for conf in confidences])
    mean = (weights[:, None] * stacked).sum(axis=0) / weights.sum()
    averaged = ConfidenceVector(values=mean, class_labels=labels)
    return predict(averaged), averaged


def aggregate(strategy: str, tally: VoteTally, weights=None):
    confs = [conf for _, conf, _ in tally.per_classifier]
    if strategy == "plurality":
        return plurality_vote(tally)
    if strategy == "average":
        return average_aggregate(confs)[0]
    if strategy == "accuracy_weighted":
        if weights is None:
            raise EnsembleError("accuracy_weighted requires weights")
        return weighted_aggregate(confs, weights)[0]
    raise EnsembleError(f"unknown strategy {strategy!r}")


@dataclass(frozen=True)
class VoteRecord:
    sample_index: int
    true_label: object
    final_label: object
    tally: VoteTally


@dataclass(frozen=True)
class EnsembleResult:
    predictions: tuple
    accuracy: float
    records: tuple[VoteRecord, ...]


def collect_confidences(models, machines, sample_features, sample_index: int,
                        seed: int):
    """One (copy, machine) confidence per classifier for a single input.

    Classifier id (machine_index, copy_index); each gets its own rng
    substream so copies of the same variant on one machine differ.
    """
    entries = []
    for m_idx, machine in enumerate(machines):
        for c_idx, model in enumerate(models):
            rng = substream(seed, m_idx, c_idx, sample_index)
            config = NoisyExecutionConfig(profile=machine, seed=rng)
            entries.append(((m_idx, c_idx), confidence(model, sample_features, config)))
    return entries


def classifier_weights(models, machines, validation_set, seed: int) -> list[float]:
    """Held-out validation accuracy per (machine, copy), for weighted voting."""
    weights = []
    for m_idx, machine in enumerate(machines):
        for c_idx, model in enumerate(models):
            hits = 0
            for s_idx, (features, label) in enumerate(validation_set):
                rng = substream(seed, m_idx, c_idx, 10_000_000 + s_idx)
                config = NoisyExecutionConfig(profile=machine, seed=rng)
                hits += predict(confidence(model, features, config)) == label
            weights.append(hits / len(validation_set))
    if sum(weights) == 0:
        weights = [1.0] * len(weights)
    return weights


def run_ensemble(models, machines, test_set, strategy: str, seed: int,
                 validation_set=None, weights=None) -> EnsembleResult:
    """Evaluate the allocated ensemble on every machine over a test set."""
    test_set = list(test_set)
    if not test_set:
        raise EnsembleError("empty test set")
    if not machines:
        raise EnsembleError("need at least one machine")
    if strategy == "accuracy_weighted" and weights is None:
        if validation_set is None:
            raise EnsembleError("accuracy_weighted needs weights or a validation set")
        weights = classifier_weights(models, machines, validation_set, seed)

    records, predictions, hits = [], [], 0
    for s_idx, (features, true_label) in enumerate(test_set):
        entries = collect_confidences(models, machines, features, s_idx, seed)
        tally = VoteTally.from_confidences(entries)
        final = aggregate(strategy, tally, weights)
        predictions.append(final)
        hits += final == true_label
        records.append(
            VoteRecord(sample_index=s_idx, true_label=true_label,
                       final_label=final, tally=tally)
        )
    return EnsembleResult(
        predictions=tuple(predictions),
        accuracy=hits / len(test_set),
        records=tuple(records),
    )


def rerun_strategy(records, strategy: str, weights=None) -> float:
    """Re-aggregate stored vote records under a different strategy.

    Gives paired strategy comparisons on identical confidences.
    """
    hits = 0
    for record in records:
        hits += aggregate(strategy, record.tally, weights) == record.true_label
    return hits / len(records)


def export_vote_records(records, path: str | Path) -> None:
    """Vote records as delimited text, one row per (sample, classifier)."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["sample_index", "true_label", "final_label", "classifier_id",
             "predicted_label", "confidences", "class_labels"]
        )
        for record in records:
            for cid, conf, pred_label in record.tally.per_classifier:
                writer.writerow([
                    record.sample_index, record.true_label, record.final_label,
                    f"{cid[0]}:{cid[1]}", pred_label,
                    ";".join(repr(v) for v in conf.values),
                    ";".join(str(l) for l in conf.class_labels),
                ])

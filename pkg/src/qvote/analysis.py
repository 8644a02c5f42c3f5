"""Impact-factor statistics and accuracy reporting."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import ConfidenceVector


class AnalysisError(ValueError):
    """Raised for empty or malformed record collections."""


@dataclass(frozen=True)
class ImpactRecord:
    impact: float
    correct: bool
    sample_index: int
    classifier_id: object

    def __post_init__(self):
        if not 0.0 <= self.impact <= 1.0:
            raise AnalysisError(f"impact out of [0,1]: {self.impact}")


@dataclass(frozen=True)
class AccuracyReport:
    mean: float
    std: float | None
    n_runs: int
    setting: str

    def __post_init__(self):
        if not 0.0 <= self.mean <= 1.0:
            raise AnalysisError(f"mean out of [0,1]: {self.mean}")
        if self.std is not None and self.std < 0:
            raise AnalysisError("std must be non-negative")

    def formatted(self) -> str:
        if self.std is None:
            return f"{self.mean:.3f}"
        return f"{self.mean:.3f} +/- {self.std:.3f}"


def impact_factor(conf: ConfidenceVector) -> float:
    """Gap between the largest and second-largest confidence.

    For two classes this is |c1 - c2|; larger gaps mean the classifier
    sways a confidence average harder.
    """
    top_two = np.sort(conf.values)[-2:]
    return float(top_two[1] - top_two[0])


def impact_distribution(records, bins: int = 20):
    """Normalized impact densities over [0, 1] for correct and wrong groups.

    Returns (bin_centers, density_correct, density_wrong); each density
    integrates to 1 over its group.
    """
    records = list(records)
    correct = [r.impact for r in records if r.correct]
    wrong = [r.impact for r in records if not r.correct]
    if not correct or not wrong:
        raise AnalysisError("both the correct and wrong groups must be non-empty")
    edges = np.linspace(0.0, 1.0, bins + 1)
    centers = (edges[:-1] + edges[1:]) / 2.0
    density_correct, _ = np.histogram(correct, bins=edges, density=True)
    density_wrong, _ = np.histogram(wrong, bins=edges, density=True)
    return centers, density_correct, density_wrong


def group_means(records) -> tuple[float, float]:
    """(mean impact of correct predictions, mean impact of wrong ones)."""
    records = list(records)
    correct = [r.impact for r in records if r.correct]
    wrong = [r.impact for r in records if not r.correct]
    if not correct or not wrong:
        raise AnalysisError("both groups must be non-empty")
    return float(np.mean(correct)), float(np.mean(wrong))


def accuracy_stats(run_accuracies, setting: str = "") -> AccuracyReport:
    """Sample mean and (n-1)-denominator standard deviation over runs."""
    values = np.asarray(list(run_accuracies), dtype=float)
    if values.size == 0:
        raise AnalysisError("no run accuracies given")
    std = float(np.std(values, ddof=1)) if values.size >= 2 else None
    return AccuracyReport(
        mean=float(values.mean()), std=std, n_runs=int(values.size), setting=setting
    )


def export_impact_densities(centers, density_correct, density_wrong,
                            path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["bin_center", "density_correct", "density_wrong"])
        for c, dc, dw in zip(centers, density_correct, density_wrong):
            writer.writerow([repr(float(c)), repr(float(dc)), repr(float(dw))])


def export_reports(reports, path: str | Path, header_lines=()) -> None:
    """Accuracy reports as delimited text with comment-prefixed header."""
    with open(path, "w", newline="") as f:
        for line in header_lines:
            f.write(f"# {line}\n")
        writer = csv.writer(f)
        writer.writerow(["setting", "mean", "std", "n_runs"])
        for report in reports:
            writer.writerow([
                report.setting, repr(report.mean),
                "" if report.std is None else repr(report.std), report.n_runs,
            ])

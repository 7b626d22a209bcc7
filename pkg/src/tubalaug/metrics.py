"""Training-cost metrics: accuracy floor and minimum available epochs,
plus parameter-count accounting for the augmentation overhead."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["accuracy_floor", "min_available_epochs", "param_accounting"]


def accuracy_floor(lambda_max: float) -> float:
    """Round an accuracy down to whole percentage points (0.6888 -> 0.68)."""
    return math.floor(lambda_max * 100.0 + 1e-12) / 100.0


def min_available_epochs(series_list, baseline_acc):
    """Minimum available epochs for a group of runs.

    baseline_acc is the reference per-epoch accuracy series; its floored
    maximum sets the bar.  For each series in series_list (and the
    baseline itself) the result holds the first 1-based epoch whose
    accuracy reaches the bar, or None if it never does.

    Returns (lambda_max_0, lambda_floor, [t_ava per series]).
    """
    baseline = np.asarray(baseline_acc, dtype=np.float64)
    if baseline.size == 0:
        raise ValueError("empty baseline accuracy series")
    if baseline.min() < 0 or baseline.max() > 1:
        raise ValueError("accuracies must lie in [0, 1]")
    lambda_max0 = float(baseline.max())
    floor = accuracy_floor(lambda_max0)
    t_ava = []
    for series in series_list:
        series = np.asarray(series, dtype=np.float64)
        if series.size == 0:
            raise ValueError("empty accuracy series")
        hits = np.flatnonzero(series >= floor)
        t_ava.append(int(hits[0]) + 1 if hits.size else None)
    return lambda_max0, floor, t_ava


def param_accounting(model, params=None):
    """(base count, additional augmentation count, additional/base ratio)."""
    base = model.num_params()
    additional = params.num_params if params is not None else 0
    return base, additional, additional / base

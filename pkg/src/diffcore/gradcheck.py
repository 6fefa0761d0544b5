"""Finite-difference verification of analytic gradients."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.diffcore.tensor import Graph, Tensor, backward

BuildFn = Callable[[dict[str, np.ndarray]], tuple[Graph, Tensor]]


@dataclass
class GradCheckReport:
    max_rel_error: float
    checked: int
    skipped: int
    worst_parameter: str | None = None
    max_true_rel_error: float = 0.0
    true_checked: int = 0


def _same_pattern(a: list[np.ndarray], b: list[np.ndarray]) -> bool:
    return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def gradcheck(
    build: BuildFn, params: dict[str, np.ndarray], h: float = 1e-4, floor: float = 1e-6
) -> GradCheckReport:
    """
    Compare backward() against central differences for every parameter entry.

    `build` maps a parameter dict to (graph, scalar loss). The error of an entry is
    |analytic - numeric| / max(|analytic|, |numeric|, 1), which is absolute below 1;
    max_true_rel_error drops the 1 and covers entries with max(|analytic|, |numeric|)
    above floor. Entries whose +/-h perturbation changes any relu activation pattern
    sit on a kink and are skipped.
    """
    graph, loss = build(params)
    analytic = backward(graph, loss)
    base_pattern = graph.relu_patterns

    worst, worst_name, checked, skipped = 0.0, None, 0, 0
    true_worst, true_checked = 0.0, 0
    for name, value in params.items():
        for index in np.ndindex(value.shape):
            plus = {k: v.copy() for k, v in params.items()}
            minus = {k: v.copy() for k, v in params.items()}
            plus[name][index] += h
            minus[name][index] -= h

            graph_plus, loss_plus = build(plus)
            graph_minus, loss_minus = build(minus)
            if not (
                _same_pattern(graph_plus.relu_patterns, base_pattern)
                and _same_pattern(graph_minus.relu_patterns, base_pattern)
            ):
                skipped += 1
                continue

            numeric = (loss_plus.data.item() - loss_minus.data.item()) / (2.0 * h)
            exact = analytic[name][index]
            scale = max(abs(exact), abs(numeric))
            error = abs(exact - numeric) / max(scale, 1.0)
            checked += 1
            if error > worst:
                worst, worst_name = error, name
            if scale > floor:
                true_worst = max(true_worst, abs(exact - numeric) / scale)
                true_checked += 1

    return GradCheckReport(worst, checked, skipped, worst_name, true_worst, true_checked)

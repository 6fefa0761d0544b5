"""
Numerical check that sum_i log(1 - x_i) over the probability simplex peaks at the
uniform point x_i = 1/K.

x is parameterised as softmax(z) with free logits z; gradient ascent with Armijo
backtracking runs from random starts. At the uniform point the Hessian in z is
-P/(K-1)^2 on the simplex tangent space, so (K-1)^2 is the natural first step.
"""

from dataclasses import dataclass

import numpy as np

from src.config import stage_seed
from src.diffcore import tensor as ops
from src.diffcore.tensor import Graph, backward
from src.errors import DomainError, NumericalError
from src.utils.console import log

_ARMIJO = 1e-4
_GRAD_TOL = 1e-13
_MIN_STEP = 1e-12


@dataclass(frozen=True)
class Theorem1Report:
    K: int
    trials: int
    max_deviation: float
    optimum: float
    closed_form: float
    max_iterations: int

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "trials": self.trials,
            "max_deviation": self.max_deviation,
            "optimum": self.optimum,
            "closed_form": self.closed_form,
            "max_iterations": self.max_iterations,
        }


def _objective(z: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient and simplex point of f(softmax(z))."""
    graph = Graph()
    x = ops.softmax(graph.parameter("z", z))
    f = ops.sum(ops.log1m(x))
    return f.data.item(), backward(graph, f)["z"], x.data


def _ascend(z: np.ndarray, max_iter: int) -> tuple[np.ndarray, float, int]:
    k = len(z)
    value, grad, x = _objective(z)
    for iteration in range(1, max_iter + 1):
        if np.max(np.abs(grad)) < _GRAD_TOL:
            return x, value, iteration
        step, slope = float((k - 1) ** 2), float(grad @ grad)
        while True:
            candidate = z + step * grad
            new_value, new_grad, new_x = _objective(candidate)
            if new_value >= value + _ARMIJO * step * slope:
                break
            step *= 0.5
            if step < _MIN_STEP:
                return x, value, iteration
        z, value, grad, x = candidate, new_value, new_grad, new_x
    return x, value, max_iter


def verify_theorem1(
    K: int, trials: int = 100, tol: float = 1e-3, seed: int = 0, max_iter: int = 5000
) -> Theorem1Report:
    """
    Maximise sum_i log(1 - x_i) from `trials` random starts.

    Raises NumericalError if any run ends farther than tol from the uniform point.
    """
    if K < 2:
        raise DomainError("K must be at least 2; with K=1 the only point x=1 gives log 0")
    if not tol > 0:
        raise DomainError("tol must be positive")
    if trials < 1:
        raise DomainError("trials must be at least 1")

    rng = np.random.default_rng(stage_seed(seed, "theorem1"))
    worst, best_value, longest = 0.0, -np.inf, 0
    for _ in range(trials):
        x, value, iterations = _ascend(rng.normal(0.0, 2.0, K), max_iter)
        worst = max(worst, float(np.max(np.abs(x - 1.0 / K))))
        best_value = max(best_value, value)
        longest = max(longest, iterations)

    report = Theorem1Report(K, trials, worst, best_value, K * float(np.log1p(-1.0 / K)), longest)
    log(f"K={K}: max deviation {worst:.3e} over {trials} starts, optimum {best_value:.6f}")
    if worst > tol:
        raise NumericalError("verify_theorem1", f"max deviation {worst:.3e} exceeds tol {tol:g}")
    return report

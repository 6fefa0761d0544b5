"""Uniform-optimum verification command - CLI compatible."""

from typing import Any, Dict

from src.commands.common import failure, success
from src.errors import AnomalyError
from src.robusttrain.theorem import verify_theorem1


def verify_uniform_optimum(
    k: int, trials: int = 100, tol: float = 1e-3, seed: int = 0
) -> Dict[str, Any]:
    """
    Check numerically that sum_i log(1 - x_i) on the K-simplex peaks at x_i = 1/K.

    Returns:
        Dictionary with results:
        {
            "success": bool,
            "exit_code": int,
            "K": int,
            "trials": int,
            "max_deviation": float,
            "optimum": float,
            "closed_form": float,
            "message": str
        }
    """
    try:
        report = verify_theorem1(k, trials=trials, tol=tol, seed=seed)
    except AnomalyError as e:
        return failure(e, K=k, trials=trials)

    return success(
        f"K={k}: max deviation {report.max_deviation:.3e} < {tol:g}, "
        f"optimum {report.optimum:.6f} (closed form {report.closed_form:.6f})",
        **report.to_dict(),
    )

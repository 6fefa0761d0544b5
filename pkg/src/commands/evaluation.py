"""Evaluation and reporting commands - CLI and flow compatible."""

from typing import Any, Dict, Sequence

from src.commands.common import failure, success
from src.config import load_config
from src.errors import AnomalyError
from src.evalbench.matrix import MatrixSpec, run_matrix
from src.evalbench.report import render_report


def evaluate_models(
    config_path: str,
    checkpoints: Sequence[str],
    out: str,
    data_dir: str | None = None,
    scores_out: str | None = None,
) -> Dict[str, Any]:
    """
    Run the detector x task x family matrix over one or more checkpoints.

    Args:
        config_path: RunConfig JSON file (detectors, eval sets, temperature grid)
        checkpoints: Checkpoint paths; each file stem becomes the model tag
        out: Results CSV path
        data_dir: Optional override of eval.data_dir
        scores_out: Optional per-sample score dump path

    Returns:
        Dictionary with results:
        {
            "success": bool,
            "exit_code": int,
            "results": str,
            "auroc_rows": int,
            "accuracy": dict (model tag -> ID val accuracy),
            "message": str
        }
    """
    try:
        config = load_config(config_path)
        spec = MatrixSpec(
            checkpoints=tuple(checkpoints),
            data_dir=data_dir or config.eval.data_dir,
            detectors=config.eval.detectors,
            eval_sets=config.eval.eval_sets,
            calibration_sets=config.eval.calibration_sets,
            temperatures=config.detect.temperatures,
            reduce=config.detect.reduce,
            out=out,
            scores_out=scores_out,
            config_hash=config.config_hash(),
        )
        table = run_matrix(spec)
    except (AnomalyError, OSError) as e:
        return failure(e, results=out)

    return success(
        f"Wrote {len(table.auroc_rows())} AUROC rows for {len(checkpoints)} model(s) to {out}",
        results=out,
        auroc_rows=len(table.auroc_rows()),
        accuracy={r.model: r.value for r in table.accuracy_rows()},
    )


def report_results(results_path: str) -> Dict[str, Any]:
    """
    Render a results file as a task x detector AUROC grid.

    Returns:
        Dictionary with results:
        {
            "success": bool,
            "exit_code": int,
            "report": str,
            "message": str
        }
    """
    try:
        text = render_report(results_path)
    except (AnomalyError, OSError) as e:
        return failure(e, report="")
    return success(f"Report for {results_path}", report=text)

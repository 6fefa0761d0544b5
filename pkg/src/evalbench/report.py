"""Render a results file as a task x detector grid."""

from pathlib import Path

import duckdb
import pandas as pd

from src.evalbench.results import read_results

AUROC_QUERY = """
    SELECT model, detector, task, family, value * 100.0 AS auroc, n_id, n_anom
    FROM results
    WHERE kind = 'auroc'
    ORDER BY row_number
"""

ACCURACY_QUERY = """
    SELECT
        model,
        value * 100.0 AS accuracy,
        (value - first_value(value) OVER (ORDER BY row_number)) * 100.0 AS delta,
        n_id AS n
    FROM results
    WHERE kind = 'accuracy'
    ORDER BY row_number
"""


def _query(path: str | Path, sql: str) -> pd.DataFrame:
    frame = read_results(path).to_frame()
    frame.insert(0, "row_number", range(len(frame)))
    conn = duckdb.connect()
    try:
        conn.register("results", frame)
        return conn.execute(sql).fetchdf()
    finally:
        conn.close()


def load_auroc_frame(path: str | Path) -> pd.DataFrame:
    """AUROC rows (in percent) of a results file, in file order."""
    return _query(path, AUROC_QUERY)


def load_accuracy_frame(path: str | Path) -> pd.DataFrame:
    """ID accuracy rows (in percent); delta is the change from the first model."""
    return _query(path, ACCURACY_QUERY)


def auroc_grid(path: str | Path) -> pd.DataFrame:
    """
    Pivot AUROC into rows (model, task, family) x columns detector.

    Row and column order follow the order of first appearance in the file.
    """
    frame = load_auroc_frame(path)
    grid = frame.pivot_table(
        index=["model", "task", "family"], columns="detector", values="auroc", sort=False
    )
    grid = grid.reindex(columns=list(dict.fromkeys(frame["detector"])))
    grid.columns.name = None
    return grid


def _accuracy_cell(accuracy: float, delta: float, first: bool) -> str:
    return f"{accuracy:.1f}" if first else f"{accuracy:.1f} ({delta:+.1f})"


def render_report(path: str | Path) -> str:
    grid = auroc_grid(path)
    accuracy = load_accuracy_frame(path)
    lines = ["AUROC (%)", grid.to_string(float_format=lambda v: f"{v:.1f}")]
    if not accuracy.empty:
        table = pd.DataFrame(
            {
                "model": accuracy["model"],
                "accuracy": [
                    _accuracy_cell(a, d, i == 0)
                    for i, (a, d) in enumerate(zip(accuracy["accuracy"], accuracy["delta"]))
                ],
                "n": accuracy["n"],
            }
        )
        lines += ["", "ID accuracy (%)", table.to_string(index=False)]
    return "\n".join(lines)

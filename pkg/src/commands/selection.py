"""Anomaly-source selection command - CLI compatible."""

from typing import Any, Dict

from src.commands.common import failure, success
from src.config import load_config
from src.errors import AnomalyError
from src.evalbench.study import (
    SELECTION_EVAL_SETS,
    SELECTION_MIXES,
    selection_study,
    write_selection,
)
from src.robusttrain.config import RA, TrainConfig
from src.synthgen.dataset import id_path, read_dataset, read_mix_sources, read_set
from src.vqamodel.checkpoint import load_checkpoint


def select_sources(config_path: str, data_dir: str, model_path: str, out: str) -> Dict[str, Any]:
    """
    RA-fine-tune a checkpoint once per source mix (image-only, question-only, both)
    and tabulate the MAP AUROC change on each evaluation set.

    Args:
        config_path: RunConfig JSON file (fine-tuning settings)
        data_dir: Suite directory written by generate_data()
        model_path: Base checkpoint
        out: Output CSV path

    Returns:
        Dictionary with results:
        {
            "success": bool,
            "exit_code": int,
            "output": str,
            "deltas": dict (mix -> eval set -> AUROC change),
            "message": str
        }
    """
    try:
        config = load_config(config_path)
        model, _ = load_checkpoint(model_path)
        id_train = read_dataset(id_path(data_dir, "train"))
        id_val = read_dataset(id_path(data_dir, "val"))
        keys = {key: 1.0 for mix in SELECTION_MIXES.values() for key in mix}
        sources = read_mix_sources(data_dir, keys)
        eval_sets = {name: read_set(data_dir, name) for name in SELECTION_EVAL_SETS}

        cfg = TrainConfig.for_finetune(config.finetune, config.train, config.seed, method=RA)
        frame = selection_study(model, id_train, id_val, sources, SELECTION_MIXES, eval_sets, cfg)
        write_selection(frame, out)
    except (AnomalyError, OSError) as e:
        return failure(e, output=out, deltas={})

    deltas: dict[str, dict[str, float]] = {}
    for row in frame.itertuples(index=False):
        deltas.setdefault(row.mix, {})[row.eval_set] = float(row.delta)
    return success(f"Wrote {len(frame)} selection rows to {out}", output=out, deltas=deltas)

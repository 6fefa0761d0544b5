"""Data generation command - CLI and flow compatible."""

from typing import Any, Dict

from src.commands.common import failure, success
from src.config import load_config
from src.errors import AnomalyError
from src.synthgen.dataset import generate_suite
from src.synthgen.world import world_from_config


def generate_data(config_path: str, out_dir: str, seed: int | None = None) -> Dict[str, Any]:
    """
    Generate the full data suite described by a run config.

    Args:
        config_path: RunConfig JSON file
        out_dir: Directory receiving the JSONL files and manifest.json
        seed: Optional override of the config seed

    Returns:
        Dictionary with results:
        {
            "success": bool,
            "exit_code": int,
            "out_dir": str,
            "files": dict (file name -> record count),
            "config_hash": str,
            "message": str
        }
    """
    try:
        config = load_config(config_path, seed)
        spec = world_from_config(config.world)
        manifest = generate_suite(
            spec,
            n_id=config.world.n_id,
            n_anomaly=config.world.n_anomaly,
            seed=config.seed,
            out_dir=out_dir,
            fractions=config.world.id_fractions,
            config_hash=config.config_hash(),
        )
    except (AnomalyError, OSError) as e:
        return failure(e, out_dir=out_dir, files={})

    total = sum(manifest["files"].values())
    return success(
        f"Generated {total} samples in {len(manifest['files'])} files under {out_dir}",
        out_dir=out_dir,
        files=manifest["files"],
        config_hash=manifest["config_hash"],
    )

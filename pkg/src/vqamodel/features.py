"""Joint-feature export for external embedding analysis."""

from pathlib import Path
from typing import Sequence

import pandas as pd

from src.synthgen.world import Sample
from src.vqamodel.model import Model, forward


def joint_feature_frame(model: Model, samples: Sequence[Sample]) -> pd.DataFrame:
    fused = forward(model, samples).fused
    frame = pd.DataFrame(fused, columns=[f"f{i}" for i in range(fused.shape[1])])
    frame.insert(0, "task", [s.task for s in samples])
    return frame


def export_joint_features(model: Model, samples: Sequence[Sample], path: str | Path) -> Path:
    """Write one row per sample: task label followed by the fused feature vector."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    joint_feature_frame(model, samples).to_csv(path, index=False)
    return path

"""
Results file: one versioned header line, then comma-separated rows.

    # vqa-anomaly results v1 config=<hash>
    kind,model,detector,temperature,task,family,value,n_id,n_anom
    accuracy,base,,,ID,val,0.9812,400,0
    auroc,base,MAP,1.0000,T1,EVAL,0.8731,400,400
"""

from dataclasses import asdict, dataclass, field
from pathlib import Path

import pandas as pd

from src.config import FORMAT_VERSION
from src.errors import ParseError, ResolutionError

COLUMNS = ["kind", "model", "detector", "temperature", "task", "family", "value", "n_id", "n_anom"]
HEADER_PREFIX = f"# vqa-anomaly results v{FORMAT_VERSION}"


@dataclass(frozen=True)
class ResultRow:
    kind: str  # "auroc" | "accuracy"
    model: str
    detector: str
    temperature: float | None
    task: str
    family: str
    value: float
    n_id: int
    n_anom: int


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)
    config_hash: str = ""

    def __len__(self):
        return len(self.rows)

    def auroc_rows(self) -> list[ResultRow]:
        return [r for r in self.rows if r.kind == "auroc"]

    def accuracy_rows(self) -> list[ResultRow]:
        return [r for r in self.rows if r.kind == "accuracy"]

    def lookup(self, model: str, detector: str, task: str, family: str) -> float:
        for r in self.rows:
            if (r.kind, r.model, r.detector, r.task, r.family) == ("auroc", model, detector, task, family):
                return r.value
        raise KeyError((model, detector, task, family))

    def accuracy(self, model: str) -> float:
        return next(r.value for r in self.accuracy_rows() if r.model == model)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.rows], columns=COLUMNS)

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame = self.to_frame()
        frame["value"] = frame["value"].map(lambda v: f"{v:.4f}")
        frame["temperature"] = frame["temperature"].map(lambda t: "" if pd.isna(t) else f"{t:.4f}")
        with open(path, "w", newline="") as f:
            f.write(f"{HEADER_PREFIX} config={self.config_hash}\n")
            frame.to_csv(f, index=False, lineterminator="\n")
        return path


def read_results(path: str | Path) -> ResultTable:
    path = Path(path)
    if not path.exists():
        raise ResolutionError(str(path), "results file")
    with open(path) as f:
        header = f.readline().rstrip("\n")
    if not header.startswith(HEADER_PREFIX):
        raise ParseError(f"not a results file (expected {HEADER_PREFIX!r})", 1)
    config_hash = header.partition("config=")[2]

    frame = pd.read_csv(path, skiprows=1, keep_default_na=False, dtype=str)
    if list(frame.columns) != COLUMNS:
        raise ParseError(f"columns {list(frame.columns)} != {COLUMNS}", 2)
    rows = [
        ResultRow(
            kind=r.kind,
            model=r.model,
            detector=r.detector,
            temperature=float(r.temperature) if r.temperature else None,
            task=r.task,
            family=r.family,
            value=float(r.value),
            n_id=int(r.n_id),
            n_anom=int(r.n_anom),
        )
        for r in frame.itertuples(index=False)
    ]
    return ResultTable(rows, config_hash)

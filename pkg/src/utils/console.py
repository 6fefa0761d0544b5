"""Progress logging to stderr, kept off stdout so tables and JSON stay clean."""

import os
import sys
from datetime import datetime

from dotenv import load_dotenv

_ = load_dotenv()


def log(message: str):
    """Print timestamped log message to stderr for visibility."""
    if os.getenv("VQA_ANOMALY_QUIET", "") not in ("", "0"):
        return
    timestamp = datetime.now().strftime("%H:%M:%S")
    print(f"[{timestamp}] {message}", file=sys.stderr, flush=True)

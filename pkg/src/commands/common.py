"""Helpers shared by the command functions."""

from typing import Any, Dict

from src.errors import AnomalyError


def failure(error: Exception, **fields: Any) -> Dict[str, Any]:
    """Result dictionary for a failed command; exit code comes from the error type."""
    exit_code = error.exit_code if isinstance(error, AnomalyError) else 1
    return {"success": False, "exit_code": exit_code, "message": f"Error: {error}", **fields}


def success(message: str, **fields: Any) -> Dict[str, Any]:
    return {"success": True, "exit_code": 0, "message": message, **fields}

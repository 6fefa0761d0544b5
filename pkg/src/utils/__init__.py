"""Shared helpers."""

from .console import log

__all__ = ["log"]

"""Sweep orchestration, CSV output and summaries."""

from .config import ConfigError, SimConfig, parse_config
from .report import summarize
from .sweep import run_sweep

__all__ = ["ConfigError", "SimConfig", "parse_config", "run_sweep", "summarize"]

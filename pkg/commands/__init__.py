"""
Subcommands of the qgan command-line tool.
"""
from .quantize import quantize_command
from .analyze import analyze_command
from .train import train_command
from .search import search_command
from .sweep import sweep_command
from .compare import compare_command
from .demo import demo_command

__all__ = [
    "quantize_command",
    "analyze_command",
    "train_command",
    "search_command",
    "sweep_command",
    "compare_command",
    "demo_command",
]

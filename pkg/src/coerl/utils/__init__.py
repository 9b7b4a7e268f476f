"""Utility functions and helpers"""

from .logger import setup_logger
from .storage import RunStorage, Checkpoint

__all__ = ['setup_logger', 'RunStorage', 'Checkpoint']

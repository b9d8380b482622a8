"""Random streams and result writers."""

from .output import write_results
from .rng import RngStream

__all__ = ["RngStream", "write_results"]

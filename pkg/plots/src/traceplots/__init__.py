"""Render static figures from apfguard trace CSV files.

This package talks to the simulator only through its published trace format:
the CSV schema (fixed per-vehicle columns followed by repeated per-obstacle
blocks) and the optional ``*.meta.json`` sidecar with scenario geometry.
"""

from .figures import KINDS, PlotSpec, render
from .reader import SchemaError, Trace, load_meta, load_trace

__all__ = [
    "KINDS",
    "PlotSpec",
    "render",
    "SchemaError",
    "Trace",
    "load_meta",
    "load_trace",
]

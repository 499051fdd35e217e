"""Figure rendering for rig sweep results."""

__version__ = "0.1.0"

from .render import FigureSpec, SchemaError, load_rows, render

"""Figure rendering for the tick-game solver's CSV exports."""

from .figures import FigureSpec, SchemaError, render

__all__ = ["FigureSpec", "SchemaError", "render"]

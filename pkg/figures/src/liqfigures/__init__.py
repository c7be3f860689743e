"""Figure rendering for liqsim sweep outputs."""

__version__ = "0.1.0"

from .pipeline import (
    FIGURE_IDS,
    FigureSpec,
    MissingSeriesError,
    SchemaError,
    discover_runs,
    render,
    specs_for_sweep,
)

__all__ = [
    "FIGURE_IDS",
    "FigureSpec",
    "MissingSeriesError",
    "SchemaError",
    "discover_runs",
    "render",
    "specs_for_sweep",
]

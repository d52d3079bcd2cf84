"""Figure rendering for antnet experiment CSV/JSON artifacts."""

from .render import PlotJob, SchemaError, render

__all__ = ["PlotJob", "SchemaError", "render"]

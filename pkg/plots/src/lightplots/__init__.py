from .render import KINDS, PlotError, load_results, render

__all__ = ["KINDS", "PlotError", "load_results", "render"]
__version__ = "0.1.0"

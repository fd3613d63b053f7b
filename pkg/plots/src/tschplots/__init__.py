"""Figure rendering for tschsim run directories."""

from .figures import FigureSpec, MalformedCsvError, render

__all__ = ["FigureSpec", "MalformedCsvError", "render"]

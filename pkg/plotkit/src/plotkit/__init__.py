"""Figure rendering for the trailer planner's text dump files."""

from .figures import FigureSpec, render
from .formats import ParseError

__all__ = ["FigureSpec", "ParseError", "render"]

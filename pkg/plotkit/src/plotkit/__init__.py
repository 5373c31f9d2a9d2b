"""Figure rendering for cohesive-fatigue trajectory CSV files."""

from .figures import FIGURE_KINDS, FigureSpec, load_trajectory, render, render_all

__version__ = "0.1.0"

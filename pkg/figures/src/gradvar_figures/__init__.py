"""Static figures from gradvar experiment outputs.

Reads the harness's trajectory CSVs, depth JSON reports, and constants key=value
blocks, and renders matplotlib figures to files.  Strictly read-only over the
inputs: no numerical computation beyond axis transforms.
"""

__version__ = "0.1.0"

from .render import FigureSpec, render

__all__ = ["FigureSpec", "render", "__version__"]

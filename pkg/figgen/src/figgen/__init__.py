"""Figure rendering for optokerr datasets.

Consumes only the documented CSV + JSON sidecar files written by
``optokerr figure <id>``; never imports the simulation package itself.
"""

from .io import EmptyDataset, MissingColumn, read_sidecar, read_table
from .render import FIGURE_IDS, render

__version__ = "0.1.0"

__all__ = [
    "EmptyDataset",
    "MissingColumn",
    "read_table",
    "read_sidecar",
    "render",
    "FIGURE_IDS",
    "__version__",
]

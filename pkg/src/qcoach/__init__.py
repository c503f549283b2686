"""Grid-world treasure hunt with tabular Q-learning and human-in-the-loop teaching."""

from .learn import Hyperparams, QTable, VisitCounts
from .maze import Action, GridPos, MazeConfig

__version__ = "0.1.0"

__all__ = [
    "Action",
    "GridPos",
    "Hyperparams",
    "MazeConfig",
    "QTable",
    "VisitCounts",
    "__version__",
]

"""Range-query cost fields in random point quadtrees and 2-d trees.

The package has three layers:

* discrete trees (`quadtree`, `kdtree`) with exact, instrumented cost counters
  and the ten-term decomposition of the range-query visit count;
* the limit random fields (`limitfield`) simulated pathwise through their
  recursive constructions on a shared family of uniform splits;
* the mean-profile machinery (`meansolver`): closed-form constants and the
  numerically solved integral fixed-point equation for the constrained mean.

`experiments` ties the layers together with seeded Monte Carlo studies, and
`cli` exposes everything as the ``rangefield`` command.
"""

__version__ = "0.1.0"

from .geometry import HalfOpenRect, QueryRect, UnitPoint
from .decomposition import CostBreakdown
from .quadtree import Quadtree
from .kdtree import KdTree

__all__ = [
    "__version__",
    "HalfOpenRect",
    "QueryRect",
    "UnitPoint",
    "CostBreakdown",
    "Quadtree",
    "KdTree",
]

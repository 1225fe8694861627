from .app import create_app
from .journal import AlignmentJournal, AlignmentRecord
from .raster import TopDownRaster, rasterize_topdown

__all__ = [
    "create_app",
    "AlignmentJournal",
    "AlignmentRecord",
    "TopDownRaster",
    "rasterize_topdown",
]

from heed.version import __version__

from .config import RunConfig

__all__ = ["RunConfig", "__version__"]

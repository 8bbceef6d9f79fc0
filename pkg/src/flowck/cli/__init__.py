from .config import ColorMode, OutputMode, RunConfig, load_io_alias
from .main import main, run

__all__ = ["ColorMode", "OutputMode", "RunConfig", "load_io_alias", "main", "run"]

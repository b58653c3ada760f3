from .cli import run
from .config import DEFAULTS, load_config

__all__ = ["run", "DEFAULTS", "load_config"]

"""Caption and embedding HTTP adapter with stub and real backends."""

from .service import create_app

__all__ = ["create_app"]
__version__ = "0.1.0"

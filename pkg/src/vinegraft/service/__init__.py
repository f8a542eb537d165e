"""HTTP service wrapping the batch pipeline."""

from .app import app

__all__ = ["app"]

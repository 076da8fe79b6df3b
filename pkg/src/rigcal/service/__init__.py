"""HTTP service wrapping the calibration library for multi-client use."""

from .app import app, create_app

__all__ = ["app", "create_app"]

"""HTTP service exposing simulations, bounds, pilot-tone runs, and checks."""

from .app import app, create_app

__all__ = ["app", "create_app"]

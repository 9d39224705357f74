"""HTTP control surface: status, live trace stream and event injection."""

from .app import create_app
from .control import RunController

__all__ = ["create_app", "RunController"]

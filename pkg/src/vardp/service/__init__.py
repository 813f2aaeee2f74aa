"""HTTP service wrapping the solver: pydantic schemas, handlers, FastAPI app."""

from .app import create_app
from .handlers import COMMANDS, run_command

__all__ = ["COMMANDS", "create_app", "run_command"]

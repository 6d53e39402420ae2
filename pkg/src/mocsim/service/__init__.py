"""Service package: FastAPI app and schemas."""

from .app import app, create_app

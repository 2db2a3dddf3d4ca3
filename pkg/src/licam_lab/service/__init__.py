"""HTTP service layer: FastAPI app and its pydantic schemas."""

from .app import app  # noqa: F401

"""Session-oriented web service exposing the diagnose/identify/validate/mitigate workflow."""

from .app import create_app
from .session import AnalysisSession, SessionError

__all__ = ["AnalysisSession", "SessionError", "create_app"]

"""Tutor layer: strategy demonstrations and a session-based HTTP service."""

from .demos import DemoStep, DemoTrace, get_demo, replay_demo  # noqa: F401
from .service import ServiceConfig, create_app, prepare_oracle  # noqa: F401

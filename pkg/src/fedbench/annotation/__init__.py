"""Human-annotation service: durable task store plus its HTTP facade."""

from .store import Outcome, TaskState, TaskStore
from .service import create_app

__all__ = ["Outcome", "TaskState", "TaskStore", "create_app"]

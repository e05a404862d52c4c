from .database import Base, create_store_engine, create_session_factory, init_db, session_scope
from .audit_constants import AuditConstant
from .experiment_runs import ExperimentRun

__all__ = [
    "Base",
    "create_store_engine",
    "create_session_factory",
    "init_db",
    "session_scope",
    "AuditConstant",
    "ExperimentRun",
]

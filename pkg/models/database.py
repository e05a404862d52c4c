from contextlib import contextmanager
import os
from typing import Iterator, Optional

from dotenv import load_dotenv
from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker
from sqlalchemy.pool import StaticPool

# Load environment variables
load_dotenv()

DEFAULT_DATABASE_URL = "sqlite:///besov_dh.db"

# Create base class for models
Base = declarative_base()


def database_url() -> str:
    """Constant-store URL from env DATABASE_URL"""
    return os.getenv("DATABASE_URL", DEFAULT_DATABASE_URL)


def create_store_engine(url: Optional[str] = None) -> Engine:
    """
    Create an engine for the constant store

    Args:
        url: SQLAlchemy URL, defaults to env DATABASE_URL

    Returns:
        Engine: SQLAlchemy engine
    """
    url = url or database_url()
    connect_args = {"check_same_thread": False} if url.startswith("sqlite") else {}
    # in-memory SQLite lives on a single connection
    pool = {"poolclass": StaticPool} if url in ("sqlite://", "sqlite:///:memory:") else {}
    return create_engine(
        url,
        connect_args=connect_args,
        **pool,
        echo=os.getenv("SQL_DEBUG", "False").lower() == "true",
    )


def create_session_factory(engine: Engine) -> sessionmaker:
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)


def init_db(engine: Engine) -> None:
    """
    Initialize database tables
    """
    # Import models so their tables are registered on Base
    from models import audit_constants, experiment_runs  # noqa: F401

    Base.metadata.create_all(bind=engine)


@contextmanager
def session_scope(factory: sessionmaker) -> Iterator[Session]:
    """Transactional session: commit on success, rollback on error"""
    session = factory()
    try:
        yield session
        session.commit()
    except Exception:
        session.rollback()
        raise
    finally:
        session.close()

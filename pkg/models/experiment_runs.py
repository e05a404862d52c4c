from sqlalchemy import Boolean, Column, DateTime, Index, Integer, String, Text
from sqlalchemy.sql import func

from .database import Base


class ExperimentRun(Base):
    """Ledger entry for one experiment verdict"""

    __tablename__ = "experiment_runs"

    id = Column(Integer, primary_key=True, autoincrement=True, index=True)
    kind = Column(String(32), nullable=False, index=True)
    seed = Column(Integer, nullable=False)
    fingerprint = Column(String(64), nullable=False)
    passed = Column(Boolean, nullable=False)
    verdict_json = Column(Text, nullable=False)
    wall_time = Column(Integer, nullable=True)  # milliseconds
    created_at = Column(DateTime, default=func.now())

    __table_args__ = (
        Index("idx_experiment_runs_kind_seed", "kind", "seed"),
    )

    def __repr__(self):
        return f"<ExperimentRun(kind='{self.kind}', seed={self.seed}, passed={self.passed})>"

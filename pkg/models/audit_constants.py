from sqlalchemy import Column, DateTime, Float, Index, Integer, String, Text, CheckConstraint
from sqlalchemy.sql import func

from .database import Base


class AuditConstant(Base):
    """Empirical constant measured by an audit on one grid and configuration"""

    __tablename__ = "audit_constants"

    id = Column(Integer, primary_key=True, autoincrement=True, index=True)
    kind = Column(String(32), nullable=False)  # C0, C1, C2, product_max, bernstein_max
    n = Column(Integer, nullable=False)
    points_per_dim = Column(Integer, nullable=False)
    box_length = Column(Float, nullable=False)
    fingerprint = Column(String(64), nullable=False)
    seed = Column(Integer, nullable=False)
    trials = Column(Integer, nullable=False)
    value = Column(Float, nullable=False)
    details = Column(Text, nullable=True)
    created_at = Column(DateTime, default=func.now())

    __table_args__ = (
        Index("idx_audit_constants_lookup", "kind", "n", "points_per_dim", "box_length", "fingerprint", "seed", "trials"),
        CheckConstraint("value >= 0", name="valid_constant_value"),
        CheckConstraint("trials >= 1", name="valid_constant_trials"),
    )

    def __repr__(self):
        return f"<AuditConstant(kind='{self.kind}', n={self.n}, M={self.points_per_dim}, value={self.value})>"

"""
Persisted empirical constants and the experiment-run ledger.
"""

import hashlib
import json
import logging
import time
from typing import Any, Callable, Dict, List, Optional

from sqlalchemy import select
from sqlalchemy.engine import Engine

from middleware.logging import operation_logger
from models.audit_constants import AuditConstant
from models.database import create_session_factory, create_store_engine, init_db, session_scope
from models.experiment_runs import ExperimentRun
from schemas.grid import Grid
from services.reporting import dumps, to_jsonable

logger = logging.getLogger("besov_dh")


def fingerprint(payload: Any) -> str:
    """Stable short hash of a JSON-able configuration."""
    canonical = json.dumps(to_jsonable(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:32]


class ConstantStore:
    """SQLAlchemy-backed cache of audit constants keyed by grid, configuration, seed and trials"""

    def __init__(self, url: Optional[str] = None, engine: Optional[Engine] = None):
        self.engine = engine or create_store_engine(url)
        init_db(self.engine)
        self.session_factory = create_session_factory(self.engine)

    def get_constant(self, kind: str, grid: Grid, config_fingerprint: str, seed: int, trials: int) -> Optional[float]:
        """
        Look up a stored constant

        Returns:
            Optional[float]: Most recent matching value, None if absent
        """
        start_time = time.time()
        with session_scope(self.session_factory) as session:
            row = session.execute(
                select(AuditConstant)
                .where(
                    AuditConstant.kind == kind,
                    AuditConstant.n == grid.n,
                    AuditConstant.points_per_dim == grid.points_per_dim,
                    AuditConstant.box_length == grid.box_length,
                    AuditConstant.fingerprint == config_fingerprint,
                    AuditConstant.seed == seed,
                    AuditConstant.trials == trials,
                )
                .order_by(AuditConstant.id.desc())
            ).scalars().first()
            value = row.value if row is not None else None
            record_id = row.id if row is not None else None
        operation_logger.log_store_operation(
            "read", "audit_constants", record_id=record_id, duration=time.time() - start_time,
        )
        return value

    def save_constant(self, kind: str, grid: Grid, config_fingerprint: str, seed: int, trials: int,
                      value: float, details: Optional[Dict[str, Any]] = None) -> int:
        start_time = time.time()
        with session_scope(self.session_factory) as session:
            row = AuditConstant(
                kind=kind,
                n=grid.n,
                points_per_dim=grid.points_per_dim,
                box_length=grid.box_length,
                fingerprint=config_fingerprint,
                seed=seed,
                trials=trials,
                value=float(value),
                details=dumps(details) if details is not None else None,
            )
            session.add(row)
            session.flush()
            record_id = row.id
        operation_logger.log_store_operation(
            "create", "audit_constants", record_id=record_id, duration=time.time() - start_time,
        )
        return record_id

    def get_or_measure(self, kind: str, grid: Grid, config: Any, seed: int, trials: int,
                       measure: Callable[[], float]) -> float:
        """Return a stored constant or measure, persist and return it."""
        key = fingerprint(config)
        stored = self.get_constant(kind, grid, key, seed, trials)
        if stored is not None:
            logger.info(f"Reusing stored constant {kind} = {stored:.6g}")
            return stored
        value = float(measure())
        self.save_constant(kind, grid, key, seed, trials, value, {"config": config})
        return value

    def record_run(self, kind: str, seed: int, spec: Any, verdict: Any, passed: bool,
                   wall_time: Optional[float] = None) -> int:
        start_time = time.time()
        with session_scope(self.session_factory) as session:
            row = ExperimentRun(
                kind=kind,
                seed=seed,
                fingerprint=fingerprint(spec),
                passed=bool(passed),
                verdict_json=dumps(verdict),
                wall_time=int(wall_time * 1000) if wall_time is not None else None,
            )
            session.add(row)
            session.flush()
            record_id = row.id
        operation_logger.log_store_operation(
            "create", "experiment_runs", record_id=record_id, duration=time.time() - start_time,
        )
        return record_id

    def list_runs(self, kind: Optional[str] = None) -> List[Dict[str, Any]]:
        with session_scope(self.session_factory) as session:
            query = select(ExperimentRun).order_by(ExperimentRun.id)
            if kind is not None:
                query = query.where(ExperimentRun.kind == kind)
            return [
                {"id": r.id, "kind": r.kind, "seed": r.seed, "passed": r.passed,
                 "fingerprint": r.fingerprint, "verdict": json.loads(r.verdict_json)}
                for r in session.execute(query).scalars()
            ]

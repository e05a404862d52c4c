"""
Shared state of one CLI invocation: resolved config, output directory,
optional constant store and report emission.
"""

import logging
import os
import sys
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO

import numpy as np

from middleware.error_handling import database_error_handler
from schemas.run_config import DataSource, RunConfig
from services.constant_store import ConstantStore
from services.dh_solver import StatePair, pair_besov_norm, random_state
from services.field_io import read_snapshot
from services.reporting import chart_from_csv, dumps, write_csv, write_json, write_meta

logger = logging.getLogger("besov_dh")

DEFAULT_OUTPUT_DIR = "reports"


def resolve_seed(flag: Optional[int], config: RunConfig) -> int:
    """--seed, then the config file, then BESOV_DH_SEED, then 0."""
    if flag is not None:
        return flag
    if config.seed is not None:
        return config.seed
    return int(os.getenv("BESOV_DH_SEED", "0"))


def resolve_output_dir(flag: Optional[str], config: RunConfig) -> Path:
    return Path(flag or config.output.directory or os.getenv("BESOV_DH_OUTPUT_DIR", DEFAULT_OUTPUT_DIR))


class RunContext:
    """Everything a subcommand needs besides its own arguments"""

    def __init__(self, command: str, config: RunConfig, output_dir: Path, stdout: TextIO = None):
        self.command = command
        self.config = config
        self.output_dir = Path(output_dir)
        self.stdout = stdout or sys.stdout
        self.started_at = datetime.now()
        self.start_time = time.time()
        self._store: Optional[ConstantStore] = None

    @property
    def seed(self) -> int:
        return self.config.seed if self.config.seed is not None else 0

    @property
    def store(self) -> Optional[ConstantStore]:
        """Constant store when enabled in [output]; None if the database is unusable."""
        if self.config.output.store and self._store is None:
            self._store = database_error_handler.safe_store_operation(ConstantStore)
        return self._store

    def report_path(self, default_name: str) -> Path:
        return self.output_dir / f"{self.config.output.name or default_name}.json"

    def load_data(self) -> StatePair:
        """Initial state from [data]: a scaled random neutral state or two snapshots."""
        data_cfg = self.config.data
        if data_cfg.source is DataSource.SNAPSHOT:
            state = StatePair(v=read_snapshot(data_cfg.v_path), w=read_snapshot(data_cfg.w_path))
            if state.grid != self.config.grid:
                logger.warning(f"Snapshot grid {state.grid.key} overrides configured grid {self.config.grid.key}")
            return state
        rng = np.random.default_rng(self.seed)
        state = random_state(self.config.grid, rng, data_cfg.max_index)
        norm = pair_besov_norm(state, self.config.solver)
        return state * (data_cfg.amplitude / norm) if norm > 0 else state

    def emit(
        self,
        default_name: str,
        payload: Any,
        csv_header: Optional[Sequence[str]] = None,
        csv_rows: Optional[Sequence[Sequence[Any]]] = None,
        chart_columns: Optional[Sequence[str]] = None,
        log_y: bool = False,
        **meta: Any,
    ) -> Path:
        """
        Write `<name>.json`, its `.meta.json` sidecar and optional CSV/SVG

        The JSON body is also printed to stdout. The first CSV column is
        the chart abscissa; chart_columns selects the plotted ones.
        """
        path = write_json(self.report_path(default_name), payload)
        if csv_header is not None:
            csv_path = write_csv(path.with_suffix(".csv"), csv_header, csv_rows or [])
            if self.config.output.plot and csv_rows:
                chart_from_csv(csv_path, csv_header[0], chart_columns or csv_header[1:2], log_y=log_y)
        write_meta(path, time.time() - self.start_time, self.started_at, command=self.command, seed=self.seed, **meta)
        print(dumps(payload), file=self.stdout)
        return path


def series_table(series: Dict[str, List[float]]) -> tuple:
    """CSV header and rows from equally long named columns."""
    header = list(series)
    lengths = {len(column) for column in series.values()}
    if len(lengths) > 1:
        raise ValueError(f"series columns differ in length: {sorted(lengths)}")
    return header, [list(row) for row in zip(*series.values())]

"""
DHF1 field snapshots and trajectory export.

Layout: magic b"DHF1", little-endian u32 n, u32 M, f64 L, then M^n f64
physical values in row-major order.
"""

import json
import logging
import struct
import time
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from middleware.logging import operation_logger
from schemas.besov import Measure
from schemas.grid import Grid
from services.chemin_lerner import COMPONENTS, Trajectory
from services.dh_solver import StatePair
from services.exceptions import SnapshotFormatError
from services.littlewood_paley import DyadicPartition
from services.reporting import write_json
from services.spectral_core import SpectralField, forward_transform

logger = logging.getLogger("besov_dh")

MAGIC = b"DHF1"
HEADER = struct.Struct("<4sIId")

PathLike = Union[str, Path]


def encode_snapshot(field: SpectralField) -> bytes:
    """Serialize the physical values of a field as DHF1 bytes."""
    grid = field.grid
    header = HEADER.pack(MAGIC, grid.n, grid.points_per_dim, grid.box_length)
    values = np.ascontiguousarray(field.values, dtype="<f8")
    return header + values.tobytes(order="C")


def validate_snapshot_bytes(data: bytes) -> Tuple[bool, List[str]]:
    """
    Check a DHF1 payload without building the field

    Returns:
        Tuple[bool, List[str]]: (is_valid, list_of_errors)
    """
    errors = []
    if len(data) < HEADER.size:
        return False, [f"Payload of {len(data)} bytes is shorter than the {HEADER.size}-byte header"]
    magic, n, points, length = HEADER.unpack_from(data)
    if magic != MAGIC:
        errors.append(f"Bad magic {magic!r}, expected {MAGIC!r}")
        return False, errors
    if points % 2 != 0:
        errors.append(f"Points per dimension must be even, got {points}")
    if n not in (2, 3):
        errors.append(f"Dimension must be 2 or 3, got {n}")
    if not (np.isfinite(length) and length > 0):
        errors.append(f"Box length must be positive, got {length}")
    if not errors:
        expected = HEADER.size + 8 * points**n
        if len(data) != expected:
            errors.append(f"Payload has {len(data)} bytes, expected {expected}")
    return len(errors) == 0, errors


def decode_snapshot(data: bytes) -> SpectralField:
    """
    Parse DHF1 bytes into a SpectralField

    Raises:
        SnapshotFormatError: On wrong magic, odd M or a truncated payload
    """
    is_valid, errors = validate_snapshot_bytes(data)
    if not is_valid:
        raise SnapshotFormatError("Invalid DHF1 snapshot: " + "; ".join(errors), {"errors": errors})
    _, n, points, length = HEADER.unpack_from(data)
    try:
        grid = Grid(n=n, points_per_dim=points, box_length=length)
    except ValidationError as e:
        raise SnapshotFormatError(f"Invalid DHF1 grid: {e}") from e
    values = np.frombuffer(data, dtype="<f8", offset=HEADER.size).reshape(grid.shape)
    return forward_transform(values.astype(np.float64), grid)


def write_snapshot(path: PathLike, field: SpectralField) -> Path:
    start_time = time.time()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_snapshot(field))
    operation_logger.log_io_operation("write_snapshot", str(path), duration=time.time() - start_time)
    return path


def read_snapshot(path: PathLike) -> SpectralField:
    start_time = time.time()
    path = Path(path)
    try:
        field = decode_snapshot(path.read_bytes())
    except SnapshotFormatError as e:
        operation_logger.log_io_operation("read_snapshot", str(path), success=False, error=str(e))
        raise
    operation_logger.log_io_operation("read_snapshot", str(path), duration=time.time() - start_time)
    return field


def export_trajectory(
    traj: Trajectory,
    directory: PathLike,
    p: float = 2.0,
    part: Optional[DyadicPartition] = None,
    measure: Measure = Measure.NORMALIZED,
) -> Path:
    """
    Write every snapshot as DHF1 plus an index.json

    The index lists times, snapshot files per field and the per-shell
    L^p norm cache of each field.

    Returns:
        Path: Path of index.json
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    snapshots = []
    for i, (t, state) in enumerate(zip(traj.times, traj.states)):
        entry = {"index": i, "time": float(t)}
        for component in COMPONENTS:
            name = f"snap_{i:05d}_{component}.dhf1"
            write_snapshot(directory / name, getattr(state, component))
            entry[component] = name
        snapshots.append(entry)

    shell_norms = {}
    for component in COMPONENTS:
        shells, table = traj.shell_norm_table(component, p, part, measure)
        shell_norms[component] = {
            "p": p,
            "measure": Measure(measure).value,
            "shells": [int(j) for j in shells],
            "table": table.tolist(),
        }
    index = {
        "format": "DHF1",
        "grid": traj.grid.model_dump(),
        "times": [float(t) for t in traj.times],
        "fields": list(COMPONENTS),
        "snapshots": snapshots,
        "shell_norms": shell_norms,
    }
    return write_json(directory / "index.json", index)


def load_trajectory(directory: PathLike) -> Trajectory:
    """Rebuild a Trajectory from an exported directory."""
    directory = Path(directory)
    try:
        index = json.loads((directory / "index.json").read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise SnapshotFormatError(f"Cannot read trajectory index: {e}") from e
    states = [
        StatePair(v=read_snapshot(directory / entry["v"]), w=read_snapshot(directory / entry["w"]))
        for entry in index["snapshots"]
    ]
    return Trajectory(times=index["times"], states=states)

"""
Run configuration: INI files with [grid] [solver] [data] [experiment]
[output] sections validated into pydantic models.
"""

import configparser
import re
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from schemas.experiments import ExperimentKind, ExperimentSpec
from schemas.grid import Grid
from schemas.solver import SolverConfig
from services.exceptions import ConfigError

SECTIONS = ("grid", "solver", "data", "experiment", "output")
LIST_KEYS = {"perturbations", "r_values", "horizons", "shells"}
_KEY_LINE = re.compile(r"^\s*([^#;\[=:\s][^=:]*?)\s*[=:]")
_SECTION_LINE = re.compile(r"^\s*\[([^\]]+)\]")


class DataSource(str, Enum):
    RANDOM = "random"
    SNAPSHOT = "snapshot"


class DataConfig(BaseModel):
    """Initial data: a seeded random neutral state or a pair of DHF1 snapshots"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    source: DataSource = DataSource.RANDOM
    amplitude: float = Field(1e-3, ge=0, description="Critical Besov norm of random data")
    max_index: Optional[int] = Field(None, ge=1, description="Lattice cutoff of random data")
    v_path: Optional[str] = None
    w_path: Optional[str] = None

    @model_validator(mode="after")
    def validate_paths(self) -> "DataConfig":
        if self.source is DataSource.SNAPSHOT and not (self.v_path and self.w_path):
            raise ValueError("snapshot data need both v_path and w_path")
        return self


class OutputConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    directory: Optional[str] = None
    name: Optional[str] = Field(None, min_length=1)
    plot: bool = False
    store: bool = Field(False, description="Reuse and persist constants in the constant store")


class RunConfig(BaseModel):
    """Parsed run configuration; CLI flags override it through with_overrides"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: Optional[int] = Field(None, ge=0, description="Unset defers to the CLI flag or BESOV_DH_SEED")
    grid: Grid = Field(default_factory=lambda: Grid(n=2, points_per_dim=64))
    solver: SolverConfig = Field(default_factory=SolverConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    experiment: Dict[str, Any] = Field(default_factory=dict)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @model_validator(mode="after")
    def validate_dimension(self) -> "RunConfig":
        if self.solver.dimension != self.grid.n:
            raise ValueError(f"solver dimension {self.solver.dimension} does not match grid n={self.grid.n}")
        return self

    def with_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None,
                       plot: Optional[bool] = None) -> "RunConfig":
        update: Dict[str, Any] = {}
        if seed is not None:
            update["seed"] = seed
        output_update = {}
        if output_dir is not None:
            output_update["directory"] = output_dir
        if plot:
            output_update["plot"] = True
        if output_update:
            update["output"] = self.output.model_copy(update=output_update)
        return self.model_copy(update=update)

    def experiment_spec(self, kind: Optional[Union[str, ExperimentKind]] = None) -> ExperimentSpec:
        """
        Build the ExperimentSpec for this run

        Grid, solver and seed come from their sections; [experiment] keys
        supply the kind-specific fields.

        Raises:
            ConfigError: If no kind is given on the command line or in the file
        """
        fields = dict(self.experiment)
        reserved = sorted(set(fields) & {"n", "points_per_dim", "box_length", "solver", "seed"})
        if reserved:
            raise ConfigError(f"[experiment] may not set {reserved[0]}; use the [grid], [solver] or [data] section",
                              key=reserved[0])
        if kind is not None:
            fields["kind"] = kind
        if "kind" not in fields:
            raise ConfigError("experiment kind missing; pass --kind or set [experiment] kind", key="kind")
        return ExperimentSpec(
            seed=self.seed if self.seed is not None else 0,
            n=self.grid.n,
            points_per_dim=self.grid.points_per_dim,
            box_length=self.grid.box_length,
            solver=self.solver,
            **fields,
        )


def _key_lines(text: str) -> Dict[Tuple[str, str], int]:
    """Line number of every (section, key) in an INI text."""
    lines: Dict[Tuple[str, str], int] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        header = _SECTION_LINE.match(line)
        if header:
            section = header.group(1).strip().lower()
            lines[(section, "")] = lineno
            continue
        key = _KEY_LINE.match(line)
        if key and section is not None:
            lines[(section, key.group(1).strip().lower())] = lineno
    return lines


def _split_list(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _parse_constants(value: str, lineno: Optional[int]) -> Dict[str, str]:
    constants = {}
    for item in _split_list(value):
        name, sep, number = item.partition("=")
        if not sep:
            raise ConfigError(f"constants entries must read NAME=VALUE, got '{item}'", lineno, "constants")
        constants[name.strip()] = number.strip()
    return constants


def _section_payload(section: str, items: Dict[str, str], lines: Dict[Tuple[str, str], int]) -> Dict[str, Any]:
    payload: Dict[str, Any] = {}
    for key, value in items.items():
        if key in LIST_KEYS:
            payload[key] = _split_list(value)
        elif key == "constants":
            payload[key] = _parse_constants(value, lines.get((section, key)))
        else:
            payload[key] = value
    return payload


def parse_run_config(text: str, source: str = "<string>") -> RunConfig:
    """
    Parse and validate an INI run configuration

    Args:
        text: INI text
        source: Name used in parse errors

    Returns:
        RunConfig: Validated configuration

    Raises:
        ConfigError: On syntax errors, unknown sections or keys and invalid
            values; the message carries the offending line number
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("key outside of any section", e.lineno)
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise ConfigError(e.message.split(": ", 1)[-1], e.lineno)
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else None
        raise ConfigError(f"malformed line in {source}", lineno)

    lines = _key_lines(text)
    payload: Dict[str, Any] = {}
    for section in parser.sections():
        name = section.strip().lower()
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", lines.get((name, "")), section)
        payload[name] = _section_payload(name, dict(parser.items(section)), lines)

    if "seed" in payload.get("data", {}):
        payload["seed"] = payload["data"].pop("seed")
    grid = payload.get("grid", {})
    grid.setdefault("n", 2)
    grid.setdefault("points_per_dim", 64)
    payload["grid"] = grid
    payload.setdefault("solver", {}).setdefault("dimension", grid["n"])

    try:
        config = RunConfig(**payload)
    except ValidationError as e:
        raise _config_error_from_validation(e, lines, None)
    if "kind" in config.experiment:
        try:
            config.experiment_spec()
        except ValidationError as e:
            raise _config_error_from_validation(e, lines, "experiment")
        except ConfigError as e:
            raise ConfigError(str(e), lines.get(("experiment", e.key or "")), e.key)
    return config


def _config_error_from_validation(error: ValidationError, lines: Dict[Tuple[str, str], int],
                                  section_hint: Optional[str]) -> ConfigError:
    first = error.errors()[0]
    loc = [str(part) for part in first["loc"]]
    if section_hint is not None:
        section = section_hint
        key = loc[0] if loc else ""
    else:
        section = loc[0] if loc else ""
        key = loc[1] if len(loc) > 1 else ""
    if section == "seed":
        section, key = "data", "seed"
    if section_hint is not None and key in {"n", "points_per_dim", "box_length"}:
        section = "grid"
    lineno = lines.get((section, key)) or lines.get((section, ""))
    label = f"[{section}] {key}".strip() if key else f"[{section}]"
    return ConfigError(f"{label}: {first['msg']}", lineno, key or None)


def load_run_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}")
    return parse_run_config(text, str(path))

"""
Report emission: deterministic JSON, metadata sidecars, CSV series and
SVG line charts.
"""

import csv
import json
import math
import xml.etree.ElementTree as ET
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel

PathLike = Union[str, Path]

CHART_WIDTH = 640
CHART_HEIGHT = 400
CHART_MARGIN = 60
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def to_jsonable(payload: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings inf, -inf, nan."""
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    if isinstance(payload, dict):
        return {str(k): to_jsonable(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [to_jsonable(v) for v in payload]
    if isinstance(payload, np.ndarray):
        return [to_jsonable(v) for v in payload.tolist()]
    if isinstance(payload, (np.bool_, bool)):
        return bool(payload)
    if isinstance(payload, np.integer):
        return int(payload)
    if isinstance(payload, (float, np.floating)):
        value = float(payload)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if hasattr(payload, "value") and isinstance(getattr(payload, "value"), (str, int)):
        return payload.value
    return payload


def dumps(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2) + "\n"


def write_json(path: PathLike, payload: Any) -> Path:
    """Write payload as sorted-key JSON; identical payloads give identical bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload))
    return path


def meta_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_meta(path: PathLike, wall_time: float, started_at: Optional[datetime] = None, **extra: Any) -> Path:
    """Sidecar `<name>.meta.json` holding everything that varies between identical runs."""
    meta = {
        "timestamp": (started_at or datetime.now()).isoformat(),
        "wall_time": wall_time,
    }
    meta.update(extra)
    return write_json(meta_path(path), meta)


def write_csv(path: PathLike, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(cell) for cell in row])
    return path


def _csv_cell(cell: Any) -> Any:
    if isinstance(cell, (float, np.floating)):
        return repr(float(cell))
    return cell


def read_csv_columns(path: PathLike) -> Dict[str, List[str]]:
    with Path(path).open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        columns: Dict[str, List[str]] = {name: [] for name in header}
        for row in reader:
            for name, cell in zip(header, row):
                columns[name].append(cell)
    return columns


def render_line_chart(
    series: Dict[str, Tuple[Sequence[float], Sequence[float]]],
    title: str,
    x_label: str,
    y_label: str,
    log_y: bool = False,
) -> str:
    """
    Minimal SVG line chart

    Args:
        series: Label -> (x values, y values)
        title: Chart title
        x_label: Horizontal axis label
        y_label: Vertical axis label
        log_y: Plot log10 of positive y values

    Returns:
        str: SVG document
    """
    cleaned = {}
    for label, (xs, ys) in series.items():
        points = [(float(x), float(y)) for x, y in zip(xs, ys)
                  if math.isfinite(float(x)) and math.isfinite(float(y)) and (not log_y or float(y) > 0)]
        if log_y:
            points = [(x, math.log10(y)) for x, y in points]
        if points:
            cleaned[label] = points

    all_points = [pt for pts in cleaned.values() for pt in pts] or [(0.0, 0.0), (1.0, 1.0)]
    x_min, x_max = min(p[0] for p in all_points), max(p[0] for p in all_points)
    y_min, y_max = min(p[1] for p in all_points), max(p[1] for p in all_points)
    if x_max == x_min:
        x_max = x_min + 1.0
    if y_max == y_min:
        y_max = y_min + 1.0
    plot_w = CHART_WIDTH - 2 * CHART_MARGIN
    plot_h = CHART_HEIGHT - 2 * CHART_MARGIN

    def sx(x: float) -> float:
        return CHART_MARGIN + (x - x_min) / (x_max - x_min) * plot_w

    def sy(y: float) -> float:
        return CHART_HEIGHT - CHART_MARGIN - (y - y_min) / (y_max - y_min) * plot_h

    root = ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg",
        "width": str(CHART_WIDTH),
        "height": str(CHART_HEIGHT),
        "viewBox": f"0 0 {CHART_WIDTH} {CHART_HEIGHT}",
    })
    ET.SubElement(root, "rect", {"width": "100%", "height": "100%", "fill": "white"})
    ET.SubElement(root, "text", {"x": str(CHART_WIDTH / 2), "y": "24", "text-anchor": "middle",
                                 "font-size": "16"}).text = title

    axes = ET.SubElement(root, "g", {"stroke": "black", "stroke-width": "1"})
    ET.SubElement(axes, "line", {"x1": str(CHART_MARGIN), "y1": str(CHART_HEIGHT - CHART_MARGIN),
                                 "x2": str(CHART_WIDTH - CHART_MARGIN), "y2": str(CHART_HEIGHT - CHART_MARGIN)})
    ET.SubElement(axes, "line", {"x1": str(CHART_MARGIN), "y1": str(CHART_MARGIN),
                                 "x2": str(CHART_MARGIN), "y2": str(CHART_HEIGHT - CHART_MARGIN)})

    labels = ET.SubElement(root, "g", {"font-size": "11"})
    ET.SubElement(labels, "text", {"x": str(CHART_WIDTH / 2), "y": str(CHART_HEIGHT - 15),
                                   "text-anchor": "middle"}).text = x_label
    ET.SubElement(labels, "text", {"x": "15", "y": str(CHART_HEIGHT / 2), "text-anchor": "middle",
                                   "transform": f"rotate(-90 15 {CHART_HEIGHT / 2})"}).text = (
        f"log10 {y_label}" if log_y else y_label)
    for value, anchor_x, anchor_y, anchor in (
        (x_min, sx(x_min), CHART_HEIGHT - CHART_MARGIN + 15, "middle"),
        (x_max, sx(x_max), CHART_HEIGHT - CHART_MARGIN + 15, "middle"),
        (y_min, CHART_MARGIN - 5, sy(y_min), "end"),
        (y_max, CHART_MARGIN - 5, sy(y_max), "end"),
    ):
        ET.SubElement(labels, "text", {"x": f"{anchor_x:.1f}", "y": f"{anchor_y:.1f}",
                                       "text-anchor": anchor}).text = f"{value:.3g}"

    for i, (label, points) in enumerate(sorted(cleaned.items())):
        color = PALETTE[i % len(PALETTE)]
        ET.SubElement(root, "polyline", {
            "fill": "none",
            "stroke": color,
            "stroke-width": "1.5",
            "points": " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in points),
        })
        ET.SubElement(root, "text", {"x": str(CHART_WIDTH - CHART_MARGIN + 5), "y": str(CHART_MARGIN + 14 * i),
                                     "fill": color, "font-size": "11"}).text = label

    return ET.tostring(root, encoding="unicode")


def write_svg(path: PathLike, svg: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg)
    return path


def _cell_float(cell: str) -> float:
    """Blank or non-numeric cells become nan and are dropped from the chart."""
    try:
        return float(cell)
    except ValueError:
        return math.nan


def chart_from_csv(csv_path: PathLike, x_column: str, y_columns: Sequence[str],
                   title: Optional[str] = None, log_y: bool = False) -> Path:
    """Render the given CSV columns as an SVG next to the CSV file."""
    csv_path = Path(csv_path)
    columns = read_csv_columns(csv_path)
    xs = [_cell_float(x) for x in columns[x_column]]
    series = {name: (xs, [_cell_float(y) for y in columns[name]]) for name in y_columns}
    svg = render_line_chart(series, title or csv_path.stem, x_column, ", ".join(y_columns), log_y)
    return write_svg(csv_path.with_suffix(".svg"), svg)

"""
Tests for JSON, CSV and SVG report emission.
"""

import math
import xml.etree.ElementTree as ET

import numpy as np

from schemas.besov import Measure
from services.reporting import (
    chart_from_csv,
    dumps,
    meta_path,
    read_csv_columns,
    render_line_chart,
    to_jsonable,
    write_csv,
    write_json,
    write_meta,
)


class TestJson:
    def test_non_finite_values(self):
        payload = to_jsonable({"a": math.inf, "b": -math.inf, "c": math.nan, "d": np.float64(1.5)})
        assert payload == {"a": "inf", "b": "-inf", "c": "nan", "d": 1.5}

    def test_numpy_and_enums(self):
        payload = to_jsonable({"arr": np.arange(3), "flag": np.bool_(True), "m": Measure.LEBESGUE})
        assert payload == {"arr": [0, 1, 2], "flag": True, "m": "lebesgue"}

    def test_deterministic_bytes(self, tmp_path):
        first = write_json(tmp_path / "a.json", {"b": 1.0, "a": [1, 2]})
        second = write_json(tmp_path / "b.json", {"a": [1, 2], "b": 1.0})
        assert first.read_bytes() == second.read_bytes()
        assert dumps({"x": 1}).endswith("\n")

    def test_meta_sidecar(self, tmp_path):
        report = tmp_path / "norm.json"
        path = write_meta(report, wall_time=0.5, command="norm")
        assert path == meta_path(report)
        assert path.name == "norm.meta.json"
        assert '"wall_time": 0.5' in path.read_text()


class TestCsvAndCharts:
    def test_csv_roundtrip(self, tmp_path):
        path = write_csv(tmp_path / "s.csv", ["t", "y"], [[0.0, 1.0], [0.1, 0.5]])
        columns = read_csv_columns(path)
        assert columns["t"] == ["0.0", "0.1"]
        assert columns["y"] == ["1.0", "0.5"]

    def test_chart_is_valid_svg(self):
        svg = render_line_chart({"norm": ([0, 1, 2], [1.0, 0.1, 0.01])}, "decay", "t", "norm", log_y=True)
        root = ET.fromstring(svg)
        assert root.tag.endswith("svg")
        assert len([el for el in root.iter() if el.tag.endswith("polyline")]) == 1

    def test_chart_skips_blank_cells(self, tmp_path):
        path = write_csv(tmp_path / "audit.csv", ["row", "ratio"], [[0, 1.0], [1, ""], [2, 3.0]])
        svg_path = chart_from_csv(path, "row", ["ratio"])
        assert svg_path.suffix == ".svg"
        polyline = [el for el in ET.parse(svg_path).iter() if el.tag.endswith("polyline")][0]
        assert len(polyline.get("points").split()) == 2

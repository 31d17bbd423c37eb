import csv
import io
import json
import math
import os

import jsonschema
import pytest

from sdosc.integrator import flow, positive_x_axis
from sdosc.model import PhasePoint, make_params
from sdosc.output import (CURVE_HEADER, TRAJECTORY_HEADER, csv_text, dump_config, fmt, json_text,
                          load_schema, parse_config, trajectory_rows, validate, write_atomic)


def test_fmt_round_trips_floats():
    for v in (0.1, 1 / 3, -26.08459999600954, 1e-300, 2.0 ** 60):
        assert float(fmt(v)) == v
    assert fmt(math.inf) == "inf" and fmt(-math.inf) == "-inf" and fmt(math.nan) == "nan"
    assert fmt(True) == "true" and fmt(None) == ""


def test_fixed_headers():
    assert TRAJECTORY_HEADER == ["t", "x", "y", "chart", "event"]
    assert CURVE_HEADER == ["kind", "a", "b", "delta", "residual", "valid"]


def test_trajectory_rows_include_events_in_order():
    p = make_params(4.0, -24.9, 0.1)
    tr = flow(PhasePoint(-1.0, 0.0), p, [positive_x_axis()])
    rows = trajectory_rows(tr, "SD")
    ts = [r[0] for r in rows]
    assert ts == sorted(ts)
    assert rows[-1][4] == "positive_x_axis"
    assert any(r[4] == "switch" for r in rows)
    parsed = list(csv.reader(io.StringIO(csv_text(TRAJECTORY_HEADER, rows))))
    assert parsed[0] == TRAJECTORY_HEADER and len(parsed) == len(rows) + 1


def test_backward_rows_use_negative_time():
    p = make_params(4.0, -25.7, 0.1)
    tr = flow(PhasePoint(1.0, -1.0), p, [], time_direction="backward")
    rows = trajectory_rows(tr)
    assert rows[-1][0] <= 0.0


def test_json_encodes_non_finite_as_strings():
    d = json.loads(json_text({"x": math.inf, "y": [math.nan, 1.5]}))
    assert d == {"x": "inf", "y": ["nan", 1.5]}


def test_schemas_ship_and_reject_bad_documents():
    for name in ("cycles", "melnikov", "classify", "verify", "slice"):
        jsonschema.Draft202012Validator.check_schema(load_schema(name))
    with pytest.raises(jsonschema.ValidationError):
        validate({"points": [{"a": 1.2, "b": -5, "delta": 0.1, "label": "VI"}]}, "classify")


def test_write_atomic(tmp_path):
    path = tmp_path / "sub" / "f.txt"
    write_atomic(str(path), "one\n")
    write_atomic(str(path), "two\n")
    assert path.read_text() == "two\n"
    assert os.listdir(path.parent) == ["f.txt"]


def test_config_round_trip():
    cfg = {"a": 1.2, "b": -5.93, "delta": 0.1, "chart": "SD", "points": True, "grid": [1.0, 2.5]}
    back = parse_config(dump_config(cfg))
    assert back == {"a": "1.2", "b": "-5.9299999999999997", "chart": "SD", "delta": "0.10000000000000001",
                    "grid": "1,2.5", "points": "true"}
    assert float(back["b"]) == cfg["b"]
    assert parse_config(dump_config({k: v for k, v in back.items()})) == back


def test_config_comments_and_errors():
    assert parse_config("# run\na = 2  # note\n\nt-max = 5\n") == {"a": "2", "t_max": "5"}
    with pytest.raises(ValueError):
        parse_config("just words\n")
    with pytest.raises(ValueError):
        parse_config("= 3\n")

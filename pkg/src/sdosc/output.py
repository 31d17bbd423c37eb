"""CSV / JSON writers, schema validation and the key=value run config."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from importlib import resources

import jsonschema

TRAJECTORY_HEADER = ["t", "x", "y", "chart", "event"]
CURVE_HEADER = ["kind", "a", "b", "delta", "residual", "valid"]


def fmt(v):
    """Numbers with 17 significant digits, so a float survives the round trip."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return "" if v is None else str(v)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def trajectory_rows(tr, chart="LIENARD"):
    """Samples and events of a Trajectory merged in integration order."""
    pts = tr.points(chart)
    sign = 1.0 if tr.direction == "forward" else -1.0
    rows = [(sign * t, x, y, chart, "", t) for t, (x, y) in zip(tr.t, pts)]
    p = tr.params
    for e in tr.events:
        x, y = e.point.x, e.point.y
        if chart == "SD":
            y = y + p.delta * (x ** 3 / 3.0 + p.b * x)
        rows.append((sign * e.t, x, y, chart, e.kind, e.t))
    rows.sort(key=lambda r: r[5])
    return [r[:5] for r in rows]


def curve_rows(samples):
    return [(s.kind, s.a, s.b, s.delta, s.residual, s.valid) for s in samples]


def _clean(obj):
    # JSON has no inf/nan; encode them as strings the way the CSVs do
    if isinstance(obj, float) and not math.isfinite(obj):
        return fmt(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def json_text(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def load_schema(name):
    text = resources.files("sdosc").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(obj, name):
    jsonschema.validate(_clean(obj), load_schema(name))


def write_atomic(path, text):
    """Write via a temporary file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- run config --------------------------------------------------------------

def parse_config(text):
    """key = value lines; '#' starts a comment.  Values stay strings."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {n}: expected key = value")
        k, v = line.split("=", 1)
        k = k.strip().replace("-", "_")
        if not k:
            raise ValueError(f"config line {n}: empty key")
        out[k] = v.strip()
    return out


def dump_config(cfg):
    lines = []
    for k in sorted(cfg):
        v = cfg[k]
        if v is None:
            continue
        if isinstance(v, (list, tuple)):
            v = ",".join(fmt(x) for x in v)
        elif isinstance(v, (float, int, bool)):
            v = fmt(v)
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"

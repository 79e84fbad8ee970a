"""CSV / JSON writers shared by the CLI commands.

Output is deterministic for a fixed config: no timestamps or timings are
written, and floats are emitted with ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

SCHEMA = "meanfix/1"

__all__ = ["SCHEMA", "to_jsonable", "dump_json", "dump_csv", "trace_rows", "emit"]


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not np.isfinite(v):
            return None
        return v
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def dump_json(payload: dict) -> str:
    body = {"schema": SCHEMA}
    body.update(payload)
    return json.dumps(to_jsonable(body), indent=2, allow_nan=False) + "\n"


def dump_csv(header: list, rows, config: dict | None = None) -> str:
    """CSV text; the config is echoed as a single leading ``#`` comment line."""
    buf = io.StringIO()
    if config is not None:
        buf.write("# " + json.dumps(to_jsonable({"schema": SCHEMA, "config": config}), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def trace_rows(trace, report=None, extra: dict | None = None):
    """Long-format ``(step, metric, value)`` rows for one iteration run."""
    for k, r in enumerate(trace.residuals):
        yield (k, "residual", float(r))
    last = trace.steps
    if report is not None:
        for name, v in report.entries().items():
            yield (last, name, float(v))
    for name, v in (extra or {}).items():
        yield (last, name, float(v))


def emit(text: str, out: str | None):
    """Write ``text`` to ``out`` (atomically, via a temp file) or to stdout."""
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".part")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    tmp.replace(path)

"""CSV and JSON persistence for process and LSP traces."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .dynamics import COLUMNS, Trace
from .lsp import LspTrace


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    return repr(v) if isinstance(v, float) else str(v)


def trace_csv(trace: Trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for rec in trace.records:
        w.writerow([_cell(getattr(rec, c)) for c in COLUMNS])
    return buf.getvalue()


def trace_json(trace: Trace, certificate: dict | None = None) -> str:
    doc = trace.to_dict()
    if certificate is not None:
        doc["certificate"] = certificate
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def read_trace_json(text: str) -> Trace:
    doc = json.loads(text)
    doc.pop("certificate", None)
    return Trace.from_dict(doc)


def lsp_csv(trace: LspTrace) -> str:
    dim = trace.iterates[0].size if trace.iterates else 0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", *(f"x{i}" for i in range(dim)), "value", "step", "slack", "residual", "ball_active"])
    for n, x in enumerate(trace.iterates):
        step = trace.steps[n - 1] if n else None
        slack = trace.slacks[n - 1] if n else None
        active = trace.ball_active[n - 1] if n else None
        w.writerow([n, *(_cell(float(v)) for v in x), _cell(trace.values[n]), _cell(step), _cell(slack),
                    _cell(trace.residuals[n]), _cell(active)])
    return buf.getvalue()


def emit_trace(trace, fmt: str, path, certificate: dict | None = None) -> Path:
    """Write ``trace`` as ``csv`` or ``json``; raises ``OSError`` when the path is unwritable."""
    path = Path(path)
    if isinstance(trace, LspTrace):
        if fmt != "csv":
            text = json.dumps({
                "iterates": [x.tolist() for x in trace.iterates],
                "values": trace.values,
                "steps": trace.steps,
                "slacks": trace.slacks,
                "residuals": trace.residuals,
                "ball_active": trace.ball_active,
                "converged": trace.converged,
                **({"certificate": certificate} if certificate else {}),
            }, indent=2, sort_keys=True) + "\n"
        else:
            text = lsp_csv(trace)
    elif fmt == "csv":
        text = trace_csv(trace)
    elif fmt == "json":
        text = trace_json(trace, certificate)
    else:
        raise ValueError(f"unknown trace format {fmt!r}")
    path.write_text(text)
    return path

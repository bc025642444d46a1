"""Entropy report records and deterministic CSV/JSON emission."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import List

COLUMNS = ["t", "tau", "W", "mu", "E_cum", "mass", "constraint",
           "vol", "Rmin", "Rmax"]

__all__ = ["EntropyReport", "emit_report", "COLUMNS"]


@dataclass
class EntropyReport:
    """Per-time rows plus verdict flags and the config that produced them."""

    rows: List[dict] = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def column(self, name):
        return [r.get(name) for r in self.rows]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float) and math.isnan(v):
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_report(report: EntropyReport, outdir) -> None:
    """Write report.csv + summary.json; byte-identical across reruns."""
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "report.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for row in report.rows:
            w.writerow([_fmt(row.get(c)) for c in COLUMNS])
    summary = _sanitize({
        "config": report.config,
        "verdicts": report.verdicts,
        "n_rows": len(report.rows),
    })
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def _sanitize(v):
    """Strict-JSON-safe copy: NaN/inf -> None, numpy scalars -> python."""
    if isinstance(v, dict):
        return {str(k): _sanitize(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_sanitize(x) for x in v]
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    try:
        f = float(v)
    except (TypeError, ValueError):
        return str(v)
    if math.isnan(f) or math.isinf(f):
        return None
    return f

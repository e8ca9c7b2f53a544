"""Machine-readable output: named tables as CSV or JSON.

Numbers are written to 6 significant digits in both formats, so a table
read back from either format holds identical values. Non-finite numbers
become empty cells / ``null``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Dict, List, Sequence, Tuple

import numpy as np

Table = Tuple[Sequence[str], List[dict]]

SIG_DIGITS = 6


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return None
        return float(f"{v:.{SIG_DIGITS}g}")
    return v


def _cell(v) -> str:
    v = _num(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.{SIG_DIGITS}g}"
    return str(v)


def emit(tables: Dict[str, Table], fmt: str = "csv") -> str:
    """Render ``{name: (columns, rows)}``.

    CSV with a single table is plain CSV; several tables are written as
    sections introduced by ``# name`` and separated by blank lines.
    """
    if fmt == "json":
        doc = {name: [{c: _num(row.get(c)) for c in cols} for row in rows]
               for name, (cols, rows) in tables.items()}
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    multi = len(tables) > 1
    for i, (name, (cols, rows)) in enumerate(tables.items()):
        if multi:
            if i:
                buf.write("\n")
            buf.write(f"# {name}\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in cols])
    return buf.getvalue()


def _parse_cell(text: str):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse(text: str, fmt: str = "csv") -> Dict[str, List[dict]]:
    """Inverse of :func:`emit` (a lone CSV table is returned under ``"table"``)."""
    if fmt == "json":
        return json.loads(text)
    sections: Dict[str, List[str]] = {}
    name, lines = "table", []
    for line in text.splitlines():
        if line.startswith("# "):
            if lines:
                sections[name] = lines
            name, lines = line[2:], []
        elif line.strip():
            lines.append(line)
    sections[name] = lines
    out = {}
    for name, lines in sections.items():
        rows = list(csv.reader(lines))
        if not rows:
            out[name] = []
            continue
        header = rows[0]
        out[name] = [{c: _parse_cell(v) for c, v in zip(header, r)} for r in rows[1:]]
    return out

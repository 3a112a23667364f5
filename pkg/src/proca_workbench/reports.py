"""Deterministic machine-readable outputs: CSV tables and JSON documents.

Every artifact written by the command-line runner goes through this module so
that identical inputs produce byte-identical files: floats are rendered with 17
significant digits (enough to round-trip IEEE doubles), keys are emitted in
sorted order, and nothing time- or host-dependent is embedded.
"""

from __future__ import annotations

import json
import os
from typing import Dict, Iterable, Mapping, Optional, Sequence

SCHEMA_VERSION = "1.0"


def format_float(x: float) -> str:
    """Render a float with 17 significant digits and a '.' decimal separator.

    The %-style 'g' conversion is locale-independent in Python, so the decimal
    separator is always '.'; 17 significant digits round-trip any IEEE-754
    double exactly.
    """
    return "%.17g" % float(x)


def format_cell(x) -> str:
    """Render one CSV cell: floats via format_float, everything else via str."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format_float(x)
    return str(x)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence],
              preamble: Optional[Mapping[str, object]] = None) -> None:
    """Write a comma-separated table with a header row.

    preamble entries become leading '# key = value' comment lines (sorted by
    key), carrying the resolved configuration echo without breaking consumers
    that skip comment lines.
    """
    lines = []
    if preamble:
        for key in sorted(preamble):
            lines.append("# %s = %s" % (key, format_cell(preamble[key])))
    lines.append(",".join(header))
    for row in rows:
        cells = [format_cell(v) for v in row]
        if len(cells) != len(header):
            raise ValueError("row width %d != header width %d"
                             % (len(cells), len(header)))
        lines.append(",".join(cells))
    _write_text(path, "\n".join(lines) + "\n")


def write_json(path: str, payload: Dict) -> None:
    """Write a JSON document with sorted keys and a trailing newline."""
    _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def jsonable(x):
    """Recursively convert tuples/arrays/numpy scalars to plain JSON types."""
    if x is None or isinstance(x, (bool, int, str)):
        return x
    if isinstance(x, float):
        return float(x)
    if isinstance(x, complex):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, Mapping):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if hasattr(x, "item") and not hasattr(x, "__len__"):  # numpy scalar
        return jsonable(x.item())
    if hasattr(x, "tolist"):  # numpy array
        return jsonable(x.tolist())
    raise TypeError("cannot serialize %r" % type(x))


def _write_text(path: str, text: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)

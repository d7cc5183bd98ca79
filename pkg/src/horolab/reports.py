"""Deterministic CSV and JSON report writers.

Every artifact records the rng seed and the arithmetic mode that produced it;
serialization is byte-stable across runs (sorted keys, repr floats, rational
numbers rendered as 'p/q' strings).
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence


def fmt_number(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence],
    meta: Mapping | None = None,
) -> Path:
    path = Path(path)
    lines = []
    if meta:
        pairs = " ".join(f"{k}={fmt_number(v)}" for k, v in sorted(meta.items()))
        lines.append(f"# {pairs}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt_number(x) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def format_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Aligned text table for human-facing report output."""
    cells = [[fmt_number(x) for x in row] for row in rows]
    widths = [
        max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
        for i, h in enumerate(header)
    ]
    def line(items):
        return "  ".join(s.ljust(w) for s, w in zip(items, widths)).rstrip()

    out = [line(header), line(["-" * w for w in widths])]
    out.extend(line(r) for r in cells)
    return "\n".join(out)


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")


def write_json(path: Path, obj, meta: Mapping | None = None) -> Path:
    path = Path(path)
    payload = dict(obj)
    if meta:
        payload["meta"] = dict(meta)
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n"
    )
    return path

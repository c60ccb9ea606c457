"""
Write result artifacts: CSV tables, JSON documents and conformer files.

Every file is written to a temporary sibling and renamed into place, so an
interrupted run never leaves a half-written artifact. Floats use ``.12g`` so
reruns produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

UNDEFINED = "NA"


def format_value(value: Any) -> str:
    if value is None:
        return UNDEFINED
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return target


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return atomic_write_text(path, buffer.getvalue())


def write_json(path: str | Path, data: BaseModel | Mapping[str, Any] | str) -> Path:
    if isinstance(data, BaseModel):
        text = data.model_dump_json(indent=2)
    elif isinstance(data, str):
        text = data
    else:
        text = json.dumps(data, indent=2, sort_keys=True)
    return atomic_write_text(path, text if text.endswith("\n") else text + "\n")


def term_stats_rows(stats: Mapping[str, Any]) -> list[tuple[str, Any, Any]]:
    """Flatten ``term_stats`` output into (section, key, value) rows."""
    rows: list[tuple[str, Any, Any]] = [
        ("summary", "num_terms", stats["num_terms"]),
        ("summary", "max_degree", stats["max_degree"]),
        ("summary", "constant", stats["constant"]),
    ]
    rows.extend(("degree", k, v) for k, v in stats["degree_histogram"].items())
    rows.extend(("decade", k, v) for k, v in stats["coefficient_histogram"].items())
    return rows


def write_term_stats(path: str | Path, stats: Mapping[str, Any]) -> Path:
    return write_csv(path, ["section", "key", "value"], term_stats_rows(stats))


def write_trace(path: str | Path, trace: Sequence[float]) -> Path:
    return write_csv(path, ["step", "best_volume"], ((i + 1, v) for i, v in enumerate(trace)))


def write_landscape(path: str | Path, axis: np.ndarray, values: np.ndarray) -> Path:
    rows = (
        (axis[gi], axis[bi], values[gi, bi])
        for gi in range(len(axis))
        for bi in range(len(axis))
    )
    return write_csv(path, ["gamma", "beta", "expectation"], rows)


def write_histogram(path: str | Path, histogram: Mapping[str, int]) -> Path:
    shots = sum(histogram.values())
    rows = ((bits, count / shots, count) for bits, count in sorted(histogram.items()))
    return write_csv(path, ["bitstring", "probability", "counts"], rows)

"""Observation files and result files with a metadata header.

Observation files are CSV with header ``respondent_role,reports`` and rows
like ``C1,0:1;1:1;2:0`` (dyad id, colon, 0/1, for the three dyads incident to
the respondent).

Result files start with ``# key: value`` lines (tool version, config hash,
seed and anything else the writer adds), followed by a CSV table. Floats are
written with ``repr`` so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .network import PartialObservation, Role

OBSERVATION_HEADER = ("respondent_role", "reports")


def format_reports(obs: PartialObservation) -> str:
    return ";".join(f"{j}:{v}" for j, v in obs.reports)


def parse_observation(role: str, reports: str) -> PartialObservation:
    try:
        r = Role[role.strip().upper()]
    except KeyError:
        raise ValueError(f"unknown respondent role {role!r}; use C1, C2, A1 or A2") from None
    values = {}
    for item in reports.split(";"):
        dyad, sep, value = item.partition(":")
        if not sep:
            raise ValueError(f"report {item!r} is not dyad:value")
        dyad, value = int(dyad), int(value)
        if dyad in values:
            raise ValueError(f"dyad {dyad} reported twice")
        values[dyad] = value
    return PartialObservation(r, values)


def write_observations(path, data: Iterable[PartialObservation], meta: dict | None = None) -> None:
    rows = ([obs.respondent.name, format_reports(obs)] for obs in data)
    write_result(path, meta or {}, OBSERVATION_HEADER, rows)


def read_observations(path) -> list[PartialObservation]:
    """Parse an observation file; errors name the offending line."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != OBSERVATION_HEADER:
        raise ValueError(f"{path}: expected header {','.join(OBSERVATION_HEADER)}")
    data = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ValueError(f"{path} line {line}: expected 2 fields, got {len(row)}")
        try:
            data.append(parse_observation(*row))
        except ValueError as exc:
            raise ValueError(f"{path} line {line}: {exc}") from None
    return data


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def render_result(meta: dict, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def write_result(path, meta: dict, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    Path(path).write_text(render_result(meta, columns, rows))


def read_result(path) -> tuple[dict, list[dict]]:
    """Metadata and rows (as dicts of strings) of a result file."""
    meta = {}
    body = []
    with open(path, newline="") as fh:
        for ln in fh:
            if ln.startswith("# ") and not body:
                key, _, value = ln[2:].rstrip("\n").partition(": ")
                meta[key] = value
            else:
                body.append(ln)
    return meta, list(csv.DictReader(body))

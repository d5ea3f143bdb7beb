"""File formats: ``time,event`` cohort CSVs, JSON artifacts, atomic writes."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .pgw import TteDataset

__all__ = ["DataFormatError", "read_dataset", "dataset_to_csv", "write_text", "write_json", "read_json"]


class DataFormatError(ValueError):
    """Malformed cohort file."""


def read_dataset(path, censor: float | None = None) -> TteDataset:
    """Read a ``time,event`` CSV (an ``id`` column, if present, is ignored).

    Without ``censor`` the censoring horizon is the largest censored time, or
    the largest time if every record is an event.
    """
    path = Path(path)
    times, events = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if "time" not in header or "event" not in header:
            raise DataFormatError(f"{path}:1: header must contain 'time' and 'event', got {header}")
        i_time, i_event = header.index("time"), header.index("event")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                t = float(row[i_time])
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: time {row[i_time]!r} is not a number") from None
            if not (t > 0 and np.isfinite(t)):
                raise DataFormatError(f"{path}:{lineno}: time must be positive, got {row[i_time]!r}")
            e = row[i_event].strip()
            if e not in ("0", "1"):
                raise DataFormatError(f"{path}:{lineno}: event must be 0 or 1, got {row[i_event]!r}")
            times.append(t)
            events.append(int(e))
    if not times:
        raise DataFormatError(f"{path}: no records")
    times = np.array(times)
    events = np.array(events, dtype=np.int8)
    if censor is None:
        censor = float(times[events == 0].max()) if (events == 0).any() else float(times.max())
    if (times > censor).any():
        raise DataFormatError(f"{path}: times exceed the censoring horizon {censor:g}")
    return TteDataset(times, events, censor)


def dataset_to_csv(data: TteDataset) -> str:
    buf = io.StringIO()
    buf.write("time,event\n")
    for t, e in zip(data.times, data.events):
        buf.write(f"{float(t)!r},{int(e)}\n")
    return buf.getvalue()


def write_text(path, text: str) -> None:
    """Write via a temporary file and rename, so readers never see partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)

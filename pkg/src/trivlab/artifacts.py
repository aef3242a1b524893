"""CSV/JSON writers and staged, atomically committed run directories."""

from __future__ import annotations

import contextlib
import csv
import enum
import json
import math
import os
import shutil
import tempfile
import time
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """RFC-4180 CSV: CRLF line ends, repr floats (shortest round-trip, dot decimal)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return (rows[0], rows[1:]) if rows else ([], [])


def jsonable(obj):
    """Plain JSON types; non-finite floats become their repr strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


class StagedRun:
    """Files are written into a hidden staging directory next to the final
    one and moved into place only by ``commit``; a failed run leaves no
    partial run directory behind."""

    def __init__(self, final_dir: Path):
        self.final_dir = Path(final_dir)
        self.final_dir.parent.mkdir(parents=True, exist_ok=True)
        self.stage = Path(tempfile.mkdtemp(prefix=f".{self.final_dir.name}.", dir=self.final_dir.parent))
        self.files: dict[str, str] = {}
        self.timings: dict[str, float] = {}

    def path(self, name: str) -> Path:
        self.files[Path(name).stem] = name
        return self.stage / name

    def csv(self, name: str, header, rows) -> None:
        write_csv(self.path(name), header, rows)

    def json(self, name: str, obj) -> None:
        write_json(self.path(name), obj)

    @contextlib.contextmanager
    def timed(self, op: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[op] = self.timings.get(op, 0.0) + time.perf_counter() - t0

    def commit(self) -> Path:
        if self.final_dir.exists():
            trash = Path(tempfile.mkdtemp(prefix=f".{self.final_dir.name}.old.", dir=self.final_dir.parent))
            os.replace(self.final_dir, trash / "run")
            os.replace(self.stage, self.final_dir)
            shutil.rmtree(trash, ignore_errors=True)
        else:
            os.replace(self.stage, self.final_dir)
        return self.final_dir

    def abort(self) -> None:
        shutil.rmtree(self.stage, ignore_errors=True)

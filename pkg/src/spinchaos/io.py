"""Result persistence: CSV (RFC 4180), NDJSON and a checksummed run manifest."""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__

MANIFEST_NAME = "manifest.json"


def _plain(x):
    """Convert numpy / enum values into JSON- and CSV-friendly Python scalars."""
    if isinstance(x, enum.Enum):
        return x.value
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, Path):
        return str(x)
    return x


def _cell(x) -> str:
    x = _plain(x)
    if isinstance(x, float):
        return repr(x)
    return "" if x is None else str(x)


def write_csv(path, rows: Iterable[Sequence]) -> Path:
    """First row is the header. Floats use repr so files round-trip exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def write_ndjson(path, records: Iterable[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(_plain(rec), sort_keys=True) + "\n")
    return path


def read_ndjson(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    outputs: dict[str, str] = field(default_factory=dict)  # relative name -> sha256
    duration_s: float = 0.0
    version: str = __version__
    status: str = "ok"
    extra: dict = field(default_factory=dict)

    def add(self, outdir, path) -> None:
        p = Path(path)
        self.outputs[str(p.relative_to(outdir))] = sha256(p)

    def to_dict(self) -> dict:
        return _plain({
            "command": self.command, "config": self.config, "seed": self.seed,
            "outputs": self.outputs, "duration_s": self.duration_s, "version": self.version,
            "status": self.status, "extra": self.extra,
        })

    def write(self, outdir) -> Path:
        path = Path(outdir) / MANIFEST_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def load_manifest(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    return json.loads(path.read_text(encoding="utf-8"))


def verify_manifest(path) -> list[str]:
    """Names of listed outputs that are missing or whose checksum differs."""
    path = Path(path)
    outdir = path if path.is_dir() else path.parent
    bad = []
    for name, digest in load_manifest(path)["outputs"].items():
        f = outdir / name
        if not f.exists() or sha256(f) != digest:
            bad.append(name)
    return bad


def default_output_dir() -> Path:
    return Path(os.environ.get("SPINCHAOS_OUTPUT_DIR", "spinchaos-out"))

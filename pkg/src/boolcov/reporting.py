"""CSV/JSON output with provenance headers and digest manifests."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__

__all__ = [
    "config_hash",
    "write_csv",
    "read_csv",
    "write_json",
    "file_digest",
    "RunManifest",
]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def config_hash(config: dict) -> str:
    """sha256 of the canonical JSON form of ``config`` (first 16 hex digits)."""
    text = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    # 17 significant digits round-trip every double
    return repr(float(v)) if np.isfinite(v) else "nan"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], config: dict) -> Path:
    """CSV with a leading ``# boolcov <version> config=<hash>`` comment line."""
    path = Path(path)
    buf = io.StringIO()
    buf.write(f"# boolcov {__version__} config={config_hash(config)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    _atomic_write(path, buf.getvalue())
    return path


def read_csv(path) -> tuple[list[str], np.ndarray, str]:
    """Returns ``(header, data, comment)``."""
    lines = Path(path).read_text().splitlines()
    comment = lines[0] if lines and lines[0].startswith("#") else ""
    body = lines[1:] if comment else lines
    rows = list(csv.reader(body))
    header = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    return header, data, comment


def write_json(path, obj) -> Path:
    path = Path(path)
    _atomic_write(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    master_seed: int | None = None
    version: str = __version__
    timestamp: str = field(default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat())
    outputs: dict = field(default_factory=dict)  # file name -> sha256

    def add(self, path) -> None:
        p = Path(path)
        self.outputs[p.name] = file_digest(p)

    def write(self, out_dir, name: str = "manifest.json") -> Path:
        """Written last and atomically, after every listed output exists."""
        return write_json(Path(out_dir) / name, asdict(self))

    @staticmethod
    def verify(out_dir, name: str = "manifest.json") -> bool:
        out_dir = Path(out_dir)
        obj = json.loads((out_dir / name).read_text())
        return all(file_digest(out_dir / name) == dig for name, dig in obj["outputs"].items())

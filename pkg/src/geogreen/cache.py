"""On-disk cache of small tables: atomic writes, checksummed CSV/JSON payloads."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path


class CacheCorruption(RuntimeError):
    pass


def default_cache_dir() -> Path:
    env = os.environ.get("GEOGREEN_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "geogreen"


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def write_csv(path: Path, header: list[str], rows) -> None:
    """CSV body plus a sidecar ``.sha256`` so torn or edited files are detected."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    text = buf.getvalue()
    atomic_write_text(Path(path), text)
    atomic_write_text(Path(str(path) + ".sha256"), _digest(text))


def read_csv(path: Path, header: list[str], verify: bool = True) -> list[list[str]]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    side = Path(str(path) + ".sha256")
    if verify and side.exists() and side.read_text().strip() != _digest(text):
        raise CacheCorruption(f"checksum mismatch for {path}")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != header:
        raise CacheCorruption(f"bad header in {path}")
    return rows[1:]


def write_json(path: Path, obj) -> None:
    atomic_write_text(Path(path), json.dumps(obj, sort_keys=True, indent=1))


def read_json(path: Path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CacheCorruption(str(exc)) from exc

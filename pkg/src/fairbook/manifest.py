"""Run manifest, checksums and atomic file writes.

Every CLI command records its deterministic identity (tool version, config
hash, dataset checksums, the design-decision switches in effect) into
``manifest.txt`` in the output directory, as sorted ``key = value`` lines.
Two runs with equal manifests produce byte-identical outputs; wall-clock
timings are therefore kept out of the manifest and written to the
non-normative ``timings.txt`` instead.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

MANIFEST_FILE = "manifest.txt"
TIMINGS_FILE = "timings.txt"


def fmt_float(x: float) -> str:
    """Format a float with 6 significant digits (the output-file convention)."""
    return f"{x:.6g}"


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file + rename so concurrent readers never see partials."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class Manifest:
    """Accumulating ``key = value`` store for one output directory."""

    def __init__(self, entries: dict[str, str] | None = None):
        self.entries: dict[str, str] = dict(entries or {})

    @classmethod
    def load(cls, outdir: str | Path) -> "Manifest":
        path = Path(outdir) / MANIFEST_FILE
        entries: dict[str, str] = {}
        if path.exists():
            for line in path.read_text(encoding="utf-8").splitlines():
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, value = line.partition("=")
                entries[key.strip()] = value.strip()
        return cls(entries)

    def save(self, outdir: str | Path) -> None:
        lines = [f"{key} = {self.entries[key]}" for key in sorted(self.entries)]
        atomic_write_text(Path(outdir) / MANIFEST_FILE, "\n".join(lines) + "\n")

    def set(self, key: str, value: object) -> None:
        self.entries[key] = str(value)

    def get(self, key: str, default: str | None = None) -> str | None:
        return self.entries.get(key, default)


def record_timing(outdir: str | Path, step: str, seconds: float) -> None:
    """Append a wall-clock timing to ``timings.txt`` (excluded from determinism)."""
    path = Path(outdir) / TIMINGS_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as handle:
        handle.write(f"{step} = {seconds:.3f} s\n")

"""Run manifests: the command, its parameters and hashes of everything it wrote."""
from __future__ import annotations

import hashlib
import json
import os
import platform
from datetime import datetime, timezone
from pathlib import Path

MANIFEST = "manifest.json"


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def version() -> str:
    from . import __version__
    return __version__


def write_manifest(out_dir, argv, command, model_ref, params, outputs):
    out_dir = Path(out_dir)
    files = sorted({Path(p).resolve() for p in outputs})
    manifest = {
        "command": command,
        "argv": list(argv),
        "cwd": os.getcwd(),
        "model": model_ref,
        "params": params,
        "version": version(),
        "threads": int(os.environ.get("VBL_THREADS", "1") or 1),
        "python": platform.python_version(),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "outputs": {p.relative_to(out_dir.resolve()).as_posix(): sha256(p) for p in files},
    }
    path = out_dir / MANIFEST
    path.write_text(json.dumps(manifest, indent=2, default=float) + "\n")
    return path


def read_manifest(path):
    return json.loads(Path(path).read_text())


def compare_outputs(manifest, out_dir, suffixes=(".csv",)):
    """Files whose hash differs from the manifest (only ``suffixes`` are compared)."""
    out_dir = Path(out_dir)
    bad = []
    for name, digest in manifest["outputs"].items():
        if not name.endswith(tuple(suffixes)):
            continue
        p = out_dir / name
        if not p.exists() or sha256(p) != digest:
            bad.append(name)
    return bad

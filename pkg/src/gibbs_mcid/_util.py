"""Small shared helpers: seed derivation, atomic CSV writing, float formatting."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary hashable parts.

    Used to give every replication / bootstrap / chain its own reproducible
    stream: derive_seed(master, scenario_name, n, rep_index, role).
    """
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def fmt(v) -> str:
    """Shortest round-trip decimal for floats; plain str otherwise."""
    if isinstance(v, float):
        return repr(float(v))
    try:
        import numpy as np

        if isinstance(v, np.floating):
            return repr(float(v))
        if isinstance(v, np.integer):
            return str(int(v))
    except ImportError:
        pass
    return str(v)


def config_header(command: str, config: dict) -> str:
    """Provenance comment block embedded at the top of every output file."""
    payload = json.dumps(config, sort_keys=True, default=str)
    return f"# gibbs-mcid {command}\n# config: {payload}\n"


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".gm-tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

"""Small shared helpers: deterministic RNG streams, atomic writes, formatting."""
from __future__ import annotations

import hashlib
import os
import re
import tempfile
from pathlib import Path

import numpy as np


def fmt_float(x: float) -> str:
    """Fixed CSV float rendering: 9 significant digits."""
    return format(float(x), ".9g")


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file + rename so partial runs never leave torn files."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def rng_for(seed: int, *labels) -> np.random.Generator:
    """Independent generator for (seed, labels), stable across runs and hosts."""
    digest = hashlib.blake2s(
        "|".join(str(label) for label in labels).encode(), digest_size=8
    ).digest()
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), int.from_bytes(digest, "big")])
    )


def natural_key(name: str):
    """Sort key treating digit runs numerically: x_2 before x_10."""
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", name)]

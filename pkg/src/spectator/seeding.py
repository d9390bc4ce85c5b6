"""Deterministic seed derivation; every random stream in the package starts here."""
from __future__ import annotations

import zlib

import numpy as np


def _word(label) -> int:
    if isinstance(label, str):
        return zlib.crc32(label.encode("utf-8"))
    label = int(label)
    if label < 0:
        raise ValueError("seed labels must be non-negative")
    return label


def subseed(*labels) -> int:
    """63-bit seed that depends only on the sequence of integer/string labels."""
    ss = np.random.SeedSequence([_word(label) for label in labels])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def rng(*labels) -> np.random.Generator:
    return np.random.default_rng(subseed(*labels))

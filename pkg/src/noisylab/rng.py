"""Labeled random-stream derivation from a single master seed.

Every stochastic component draws from its own generator, derived from the
run's master seed plus a list of string/int labels (module name, purpose,
epoch, net index, ...). Streams with different labels are decorrelated,
and any stream can be re-derived independently of draw order elsewhere.
"""

import hashlib

import numpy as np


def child_seed(master: int, *labels) -> int:
    """Hash (master seed, labels...) into a 64-bit child seed."""
    h = hashlib.sha256()
    h.update(str(int(master)).encode())
    for label in labels:
        h.update(b"/")
        h.update(str(label).encode())
    return int.from_bytes(h.digest()[:8], "big")


def derive_rng(master: int, *labels) -> np.random.Generator:
    """Return a fresh Generator for the stream named by `labels`."""
    return np.random.default_rng(child_seed(master, *labels))

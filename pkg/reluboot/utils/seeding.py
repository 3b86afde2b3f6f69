"""Deterministic seed streams.

Every random draw in ReluBoot comes from a numpy PCG64 generator whose seed
is derived from the run's master seed and a stream label:

    seed = little-endian uint64 of BLAKE2b(
        data=f"{master_seed}:{label}".encode("utf-8"),
        digest_size=8,
        person=b"reluboot-seed",
    )

Ports in other languages can reproduce the seeds exactly; numpy's PCG64
stream itself is documented by numpy. Labels are slash-separated paths such
as "trial/3/mean" or "replicate/17/noise".
"""

import hashlib

import numpy as np

from ..constants import ERROR_MESSAGES, SEED_HASH_PERSON
from .validation import ValidationError


def derive_seed(master_seed: int, stream_label: str) -> int:
    """Hash-split a master seed into an independent 64-bit stream seed."""
    if not stream_label:
        raise ValidationError(ERROR_MESSAGES["empty_seed_label"])
    digest = hashlib.blake2b(
        f"{int(master_seed)}:{stream_label}".encode("utf-8"),
        digest_size=8,
        person=SEED_HASH_PERSON,
    ).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a derived seed."""
    return np.random.Generator(np.random.PCG64(seed))

"""Deterministic RNG derivation shared by all stochastic components."""

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_rng(*parts: int) -> np.random.Generator:
    """Return a generator whose stream is a pure function of ``parts``.

    Components derive independent streams from (seed, index, ...) tuples so
    that any execution schedule (sequential or parallel) produces identical
    results.
    """
    return np.random.default_rng(np.random.SeedSequence([p & _MASK64 for p in parts]))


def derive_seed(*parts: int) -> int:
    """Collapse a tuple of integers into a single reproducible 32-bit seed."""
    seq = np.random.SeedSequence([p & _MASK64 for p in parts])
    return int(seq.generate_state(1)[0])

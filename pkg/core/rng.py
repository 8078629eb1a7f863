"""
Seeded random number generation.

All randomness flows through numpy's PCG64 bit generator so a seed reproduces
the same draws on every platform; generator state can be serialized into reports.
"""
import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Return a PCG64-backed generator for ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def rng_state(rng: np.random.Generator) -> dict:
    """JSON-serializable snapshot of the generator state."""
    state = rng.bit_generator.state
    return {
        'bit_generator': state['bit_generator'],
        'state': {key: int(value) for key, value in state['state'].items()},
        'has_uint32': int(state['has_uint32']),
        'uinteger': int(state['uinteger']),
    }


def derive_seeds(base_seed: int, *key: int, count: int = 2) -> list:
    """
    Derive ``count`` independent 32-bit seeds for the trial identified by ``key``.

    Uses SeedSequence spawning, so seeds depend only on (base_seed, key) and
    never on scheduling order.
    """
    sequence = np.random.SeedSequence(entropy=int(base_seed), spawn_key=tuple(int(k) for k in key))
    return [int(s) for s in sequence.generate_state(count)]

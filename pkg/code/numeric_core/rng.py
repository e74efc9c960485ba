import numpy as np

INIT_STD = 0.02


def seeded_rng(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 stream keyed by ``seed`` and optional sub-stream ids (epoch, step, ...)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *stream])))


def normal_init(rng: np.random.Generator, shape: tuple[int, ...], std: float = INIT_STD) -> np.ndarray:
    return rng.normal(0.0, std, size=shape)

import logging
import time
from contextlib import contextmanager
from typing import Iterator

import numpy as np

__all__ = [
    "InvalidParameterError",
    "FocalPointError",
    "SolverFailureError",
    "point_rng",
    "random_unit",
    "timed",
]

logger = logging.getLogger("fkmcone")


class InvalidParameterError(ValueError):
    """Raised for parameters outside the domain of an operation."""


class FocalPointError(ValueError):
    """Raised when a point lies on a focal level (vanishing gradient)."""


class SolverFailureError(RuntimeError):
    """Raised when the vanishing-angle integration does not converge."""


def point_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Return the random generator for sample ``index`` of a seeded run.

    Each sample owns an independent child stream of ``seed``, so a sample
    is reproducible regardless of how a batch is split among workers.

    Parameters
    ----------
    seed : int
        User-supplied 64-bit seed.
    index : int
        Counter of the sample within the run.

    Returns
    -------
    np.random.Generator
        Generator seeded by ``SeedSequence(seed, spawn_key=(index,))``.

    """
    if seed < 0 or index < 0:
        raise InvalidParameterError(f"seed and index must be >= 0, got {seed}, {index}")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def random_unit(rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw a uniformly distributed unit vector of length ``size``."""
    v = rng.standard_normal(size)
    return v / np.linalg.norm(v)


@contextmanager
def timed(label: str) -> Iterator[None]:
    """Log elapsed wall time for a named phase. Runs at INFO level (-v)."""
    t0 = time.perf_counter()
    yield
    logger.info("%s: %.2fs", label, time.perf_counter() - t0)

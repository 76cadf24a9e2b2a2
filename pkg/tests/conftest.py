import numpy as np
import pytest


def two_rings_and_disk(n: int = 30) -> np.ndarray:
    """30x30 binary picture: two hollow rings and one filled disk (1 = white)."""
    r, c = np.mgrid[0:n, 0:n]

    def ring(cy, cx, rad):
        d = np.hypot(r - cy, c - cx)
        return (d <= rad + 0.5) & (d >= rad - 0.7)

    mask = ring(8, 8, 5) | ring(8, 21, 5) | (np.hypot(r - 22, c - 15) <= 4.5)
    return mask.astype(np.float64)


@pytest.fixture
def fig2_field():
    return two_rings_and_disk()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import numpy as np
import pytest

from augsearch.rng import stream_rng


@pytest.fixture
def rng():
    return stream_rng(1234)


@pytest.fixture
def random_image(rng):
    return rng.integers(0, 256, (32, 32, 3)).astype(np.uint8)


def random_images(seed, count, size=32):
    r = stream_rng(seed)
    return [r.integers(0, 256, (size, size, 3)).astype(np.uint8) for _ in range(count)]

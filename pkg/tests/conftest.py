import numpy as np
import pytest

from torsionlab.curves import fourier_loop
from torsionlab.errors import DomainError


def random_fourier_loops(count, seed=0, harmonics=3):
    """Embedded essential Fourier loops with random small coefficients."""
    rng = np.random.default_rng(seed)
    loops = []
    while len(loops) < count:
        decay = 1.0 / np.arange(1, harmonics + 1) ** 2
        try:
            loops.append(fourier_loop(
                x_cos=0.04 * rng.normal(size=harmonics) * decay,
                x_sin=0.04 * rng.normal(size=harmonics) * decay,
                y_cos=np.concatenate(([rng.uniform(-1, 1)], 0.15 * rng.normal(size=harmonics) * decay)),
                y_sin=np.concatenate(([0.0], 0.15 * rng.normal(size=harmonics) * decay)),
                resolution=2048))
        except DomainError:
            continue
    return loops


@pytest.fixture(scope="session")
def fourier_loops():
    return random_fourier_loops(5, seed=11)

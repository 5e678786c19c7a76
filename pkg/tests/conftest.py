import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vexad.dataset import generate_synthetic


@pytest.fixture(scope="session")
def small_pixel_ds():
    """200-sample pixel-backed dataset, 20 positives."""
    return generate_synthetic(200, 16, 0.1, seed=11)


@pytest.fixture(scope="session")
def small_plain_ds():
    """120-sample feature-only dataset in 6 dimensions."""
    return generate_synthetic(120, 6, 0.1, seed=4)

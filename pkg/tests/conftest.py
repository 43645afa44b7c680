import numpy as np
import pytest
from hypothesis import settings

from topocloud.voxelizer import BinaryImage3D

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# filled by tests/test_acceptance.py, printed once at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_binary_image(rng, max_dim=6, p=0.5, ensure_active=True):
    dims = tuple(int(d) for d in rng.integers(1, max_dim + 1, size=3))
    vox = rng.random(dims) < p
    if ensure_active and not vox.any():
        vox[tuple(int(rng.integers(0, d)) for d in dims)] = True
    return BinaryImage3D(vox)


def random_gray_image(rng, max_dim=5, levels=8):
    dims = tuple(int(d) for d in rng.integers(1, max_dim + 1, size=3))
    return rng.integers(0, levels, size=dims).astype(np.float64)

"""Pytest fixtures for testing."""
import numpy as np
import pytest

from loopforge.config import settings
from loopforge.services.algebra import AlgebraTag, corrupted_algebra, get_algebra
from loopforge.services.bundle import random_bundle_fields
from loopforge.services.fields import TorusDomain
from loopforge.services.numerics import ScalarMode
from loopforge.services.pseudoauto import get_palgebra


@pytest.fixture
def rng():
    """Seeded generator; every test gets the same stream."""
    return np.random.default_rng(12345)


@pytest.fixture
def exact_octonions():
    return get_algebra(AlgebraTag.O, ScalarMode.EXACT)


@pytest.fixture
def float_octonions():
    return get_algebra(AlgebraTag.O, ScalarMode.FLOAT)


@pytest.fixture
def exact_quaternions():
    return get_algebra(AlgebraTag.H, ScalarMode.EXACT)


@pytest.fixture
def broken_octonions():
    """Octonions with the sign of e1 e2 flipped."""
    return corrupted_algebra(AlgebraTag.O, ScalarMode.EXACT)


@pytest.fixture(params=["C", "H", "O"])
def palg(request):
    """Pseudoautomorphism Lie algebra data for each composition algebra."""
    return get_palgebra(AlgebraTag(request.param))


@pytest.fixture
def palg_o():
    return get_palgebra(AlgebraTag.O)


@pytest.fixture
def palg_h():
    return get_palgebra(AlgebraTag.H)


@pytest.fixture
def palg_c():
    return get_palgebra(AlgebraTag.C)


@pytest.fixture
def torus():
    """Coarse T^3 keeping grid integrals fast."""
    return TorusDomain(dimension=3, grid=8)


@pytest.fixture
def octonion_fields(palg_o, torus):
    """Seeded random section and connection on T^3 for the octonions."""
    return random_bundle_fields(palg_o, np.random.default_rng(7), torus)


@pytest.fixture
def single_thread():
    """Force one worker, restoring the previous setting afterwards."""
    previous = settings.LOOPFORGE_THREADS
    settings.LOOPFORGE_THREADS = 1
    yield
    settings.LOOPFORGE_THREADS = previous


@pytest.fixture
def write_config(tmp_path):
    """Write an INI run configuration and return its path."""
    def _write(text: str, name: str = "run.ini"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write

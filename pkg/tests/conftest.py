import math

import numpy as np
import pytest
from hypothesis import settings

from brownmap.constructions import make_example
from brownmap.model import AtomicProfile

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def circular():
    return make_example("circular")[0]


@pytest.fixture(scope="session")
def x2_minus_y2():
    return make_example("x2_minus_y2")[0]


@pytest.fixture(scope="session")
def x2_plus_y2():
    return make_example("x2_plus_y2")[0]


@pytest.fixture(scope="session")
def x2_y3():
    return make_example("x2_y3")[0]


@pytest.fixture(scope="session")
def x2_y4():
    return make_example("x2_y4")[0]


@pytest.fixture(scope="session")
def x2_infinity():
    return make_example("x2_infinity")[0]


@pytest.fixture(scope="session")
def two_block():
    """Non-constant kernel with a primitive pattern."""
    return AtomicProfile([0.4, 0.6], [1.0 + 0.2j, -0.8],
                         [[1.0, 0.5], [0.3, 2.0]])


def kappa_ex31(zeta):
    """Hand-derived oracle for atoms +-1 with t = 1 on the real axis."""
    # 1 = <1/(u + |a - x|^2)> with a = +-1 reduces to a quadratic in u
    x = float(zeta.real) if isinstance(zeta, complex) else float(zeta)
    p, q = (1 - x) ** 2, (1 + x) ** 2
    # (u+p)(u+q) = u + (p+q)/2
    b, c = p + q - 1, p * q - (p + q) / 2
    u = (-b + math.sqrt(b * b - 4 * c)) / 2
    return math.sqrt(u) if u > 0 else 0.0

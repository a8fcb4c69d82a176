import numpy as np
import pytest

from hillspec.potential import Potential, load_potential, zero_potential
from hillspec.expansion import load_function


@pytest.fixture(scope="session")
def q_zero():
    return zero_potential()


@pytest.fixture(scope="session")
def q_mathieu():
    # 2 cos(2 pi x), the real even reference potential
    return load_potential({"fourier": [[1, 1.0, 0.0], [-1, 1.0, 0.0]]})


@pytest.fixture(scope="session")
def q_gasymov():
    # e^{2 pi i x}: all gaps closed, Jordan block at every (pi k)^2
    return load_potential({"fourier": [[1, 1.0, 0.0]]})


@pytest.fixture(scope="session")
def q_skew():
    # complex two-sided potential with no special symmetry
    return load_potential({"fourier": [[1, 0.35, 0.2], [-1, -0.15, 0.4],
                                       [2, 0.0, -0.3]]})


@pytest.fixture(scope="session")
def f_bump():
    return load_function({"kind": "bump", "center": 0.0, "half_width": 1.0})


@pytest.fixture(scope="session")
def f_hat():
    return load_function({"kind": "hat", "center": 0.0, "half_width": 1.0})


def random_trig_potential(rng, degree=3, size=0.4):
    coeffs = {}
    for k in range(1, degree + 1):
        re, im = rng.normal(size=2) * size
        coeffs[k] = complex(re, im)
        re, im = rng.normal(size=2) * size
        coeffs[-k] = complex(re, im)
    return Potential(coeffs=coeffs)

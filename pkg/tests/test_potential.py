import json
import math

import numpy as np
import pytest

from hillspec.errors import MalformedConfig, NonFiniteCoefficient
from hillspec.potential import Potential, load_potential, zero_potential


def test_zero_config_is_zero():
    p = load_potential({"fourier": []})
    assert p.is_zero
    x = np.linspace(-1.0, 2.0, 7)
    assert np.all(p(x) == 0)


def test_fourier_evaluation_matches_direct_sum():
    rng = np.random.default_rng(7)
    coeffs = {k: complex(*rng.normal(size=2)) for k in (-3, -1, 0, 2)}
    p = Potential(coeffs=coeffs)
    x = rng.uniform(-2, 2, size=11)
    direct = sum(c * np.exp(2j * math.pi * k * x) for k, c in coeffs.items())
    assert np.max(np.abs(p(x) - direct)) < 1e-14


def test_periodicity():
    p = load_potential({"fourier": [[1, 0.3, -0.2], [-2, 0.1, 0.5]]})
    x = np.linspace(0, 1, 17)
    assert np.max(np.abs(p(x + 1.0) - p(x))) < 1e-13


def test_fourier_coefficient_readout():
    p = load_potential({"fourier": [[1, 0.5, 0.0], [-2, 0.0, 1.25]]})
    assert p.fourier_coefficient(1) == 0.5
    assert p.fourier_coefficient(-2) == 1.25j
    assert p.fourier_coefficient(3) == 0
    assert p.max_frequency == 2


def test_bound_is_coefficient_sum():
    p = load_potential({"fourier": [[1, 3.0, 4.0], [-1, 1.0, 0.0]]})
    assert abs(p.bound() - 6.0) < 1e-14


def test_symmetry_flags(q_mathieu, q_gasymov, q_skew):
    assert q_mathieu.is_even() and not q_mathieu.is_one_sided()
    assert q_gasymov.is_one_sided() and not q_gasymov.is_even()
    assert not q_skew.is_even() and not q_skew.is_one_sided()


def test_normalize_mean_drops_constant():
    p = load_potential({"fourier": [[0, 2.5, 0.0], [1, 1.0, 0.0]],
                        "normalize_mean": True})
    assert p.fourier_coefficient(0) == 0
    assert p.fourier_coefficient(1) == 1.0


def test_samples_potential_recovers_fourier():
    x = np.linspace(0.0, 1.0, 65)[:-1]
    vals = 2.0 * np.cos(2 * math.pi * x)
    config = {"samples": [[float(xv), float(v), 0.0]
                          for xv, v in zip(x, vals)]}
    p = load_potential(config)
    # cubic interpolant through 64 samples: ~1e-7 coefficient accuracy
    assert abs(p.fourier_coefficient(1) - 1.0) < 1e-6
    assert abs(p.fourier_coefficient(-1) - 1.0) < 1e-6
    xx = np.linspace(0, 1, 31)
    assert np.max(np.abs(p(xx) - 2.0 * np.cos(2 * math.pi * xx))) < 1e-6


def test_load_potential_accepts_json_string_and_path(tmp_path):
    cfg = {"fourier": [[1, 1.0, 0.0]]}
    p1 = load_potential(json.dumps(cfg))
    path = tmp_path / "q.json"
    path.write_text(json.dumps(cfg))
    p2 = load_potential(path)
    assert p1.coeffs == p2.coeffs


@pytest.mark.parametrize("bad", [
    {"fourier": [[0.5, 1.0, 0.0]]},          # fractional frequency
    {"fourier": [[1, 1.0]]},                 # missing imaginary part
    {"neither": []},                         # unknown kind
    "not json at all {",
])
def test_malformed_configs_raise(bad):
    with pytest.raises(MalformedConfig):
        load_potential(bad)


def test_nonfinite_coefficient_raises():
    with pytest.raises((NonFiniteCoefficient, MalformedConfig)):
        load_potential({"fourier": [[1, float("nan"), 0.0]]})


def test_cache_key_distinguishes_potentials(q_mathieu, q_gasymov):
    assert q_mathieu.cache_key() != q_gasymov.cache_key()
    assert zero_potential().cache_key() == zero_potential().cache_key()

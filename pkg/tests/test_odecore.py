import math

import numpy as np
import pytest

from hillspec.odecore import (free_monodromy, free_phi, free_theta,
                              integrate_fundamental,
                              integrate_fundamental_batch, wronskian_defect)
from conftest import random_trig_potential


@pytest.mark.parametrize("lam", [4.0, -9.0, 0.0, 37.2 + 11.4j, 150.0 - 3.0j])
def test_free_potential_closed_forms(q_zero, lam):
    fs = integrate_fundamental(q_zero, lam, grid_size=257)
    x = fs.grid
    assert np.max(np.abs(fs.theta - free_theta(lam, x))) < 1e-11 * (1 + abs(lam))
    assert np.max(np.abs(fs.phi - free_phi(lam, x))) < 1e-11


def test_free_wronskian_exact(q_zero):
    # q=0, lam=4: the defect is an algebraic identity of cos/sin
    fs = integrate_fundamental(q_zero, 4.0)
    assert wronskian_defect(fs) <= 1e-10


def test_wronskian_random_battery():
    rng = np.random.default_rng(42)
    for _ in range(25):
        p = random_trig_potential(rng)
        lam = complex(rng.uniform(-10, 150), rng.uniform(-10, 10))
        fs = integrate_fundamental(p, lam)
        assert wronskian_defect(fs) <= 1e-9, f"lam={lam}"


def test_monodromy_identity_random_battery():
    # (phi' - theta)^2 + 4 - F^2 = -4 phi theta' at x = 1
    rng = np.random.default_rng(43)
    for _ in range(25):
        p = random_trig_potential(rng)
        lam = complex(rng.uniform(-10, 200), rng.uniform(-12, 12))
        M = integrate_fundamental(p, lam).monodromy
        F = M[0, 0] + M[1, 1]
        lhs = (M[1, 1] - M[0, 0]) ** 2 + 4.0 - F * F
        rhs = -4.0 * M[0, 1] * M[1, 0]
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs), abs(rhs))


def test_lambda_derivative_matches_finite_difference(q_mathieu):
    lam = 23.0 + 4.0j
    fs = integrate_fundamental(q_mathieu, lam, want_deriv=True)
    d = 1e-5
    Mp = integrate_fundamental(q_mathieu, lam + d, want_deriv=False).monodromy
    Mm = integrate_fundamental(q_mathieu, lam - d, want_deriv=False).monodromy
    fd = (Mp - Mm) / (2 * d)
    assert np.max(np.abs(fs.dmonodromy - fd)) < 1e-6


def test_batch_matches_single(q_skew):
    lams = np.array([3.0, 40.0 + 5.0j, -2.0 - 1.0j])
    batch = integrate_fundamental_batch(q_skew, lams, grid_size=129)
    for j, lam in enumerate(lams):
        one = integrate_fundamental(q_skew, lam, grid_size=129)
        assert np.max(np.abs(batch.theta[:, j] - one.theta)) < 1e-10
        assert np.max(np.abs(batch.monodromy[:, :, j] - one.monodromy)) < 1e-10


def test_free_monodromy_helper():
    lam = 11.0 + 2.0j
    th, ph, thx, phx = free_monodromy(lam)
    s = np.sqrt(complex(lam))
    assert abs(th - np.cos(s)) < 1e-14
    assert abs(phx - np.cos(s)) < 1e-14
    assert abs(ph - np.sin(s) / s) < 1e-14
    assert abs(thx + s * np.sin(s)) < 1e-14


def test_grid_is_uniform_and_closed(q_mathieu):
    fs = integrate_fundamental(q_mathieu, 5.0, grid_size=129)
    assert fs.grid[0] == 0.0 and fs.grid[-1] == 1.0
    assert np.max(np.abs(np.diff(fs.grid) - 1.0 / 128)) < 1e-15
    # the monodromy is the grid endpoint state
    assert abs(fs.theta[-1] - fs.monodromy[0, 0]) < 1e-14
    assert abs(fs.phi_dx[-1] - fs.monodromy[1, 1]) < 1e-14

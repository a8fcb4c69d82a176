import cmath
import math

import numpy as np
import pytest

from hillspec.discriminant import (characteristic_determinant,
                                   discriminant_batch,
                                   discriminant_derivative,
                                   hill_discriminant, mp_discriminant,
                                   p_branch)
from hillspec.errors import BranchAmbiguity


def test_free_discriminant_on_real_axis(q_zero):
    lams = np.linspace(0.0, 180.0, 61) + 0j
    F, _ = discriminant_batch(q_zero, lams, want_deriv=False)
    assert np.max(np.abs(F - 2.0 * np.cos(np.sqrt(lams)))) < 1e-12


def test_free_discriminant_negative_lambda(q_zero):
    # below the spectrum F = 2 cosh sqrt(-lam) grows; check a few points
    lams = np.array([-1.0, -9.0, -25.0], dtype=complex)
    F, _ = discriminant_batch(q_zero, lams, want_deriv=False)
    expect = 2.0 * np.cosh(np.sqrt(-lams))
    assert np.max(np.abs(F - expect) / np.abs(expect)) < 1e-12


def test_free_derivative_zero_at_band_edge(q_zero):
    # F'((2 pi)^2) = -sin(2 pi)/(2 pi) = 0
    _, Fp = discriminant_batch(q_zero, [complex((2 * math.pi) ** 2)])
    assert abs(Fp[0]) < 1e-10


def test_gasymov_discriminant_is_free(q_gasymov):
    # one-sided potentials leave F untouched
    lams = np.linspace(0.5, 200.0, 101) + 0j
    F, _ = discriminant_batch(q_gasymov, lams, want_deriv=False)
    assert np.max(np.abs(F - 2.0 * np.cos(np.sqrt(lams)))) < 1e-9


@pytest.mark.parametrize("F,t", [(2.0, 0.0), (-2.0, math.pi),
                                 (2.0 * math.cos(0.3), 0.3)])
def test_characteristic_determinant_roots(F, t):
    assert abs(characteristic_determinant(F, t)) < 1e-12


def test_characteristic_determinant_formula():
    F, t = 1.3 - 0.4j, 0.7 + 0.1j
    e = cmath.exp(1j * t)
    assert abs(characteristic_determinant(F, t) - (e * e - F * e + 1)) < 1e-14


def test_derivative_routes_agree(q_mathieu):
    lam = 38.0 + 0.5j   # near the first band edge region
    a = discriminant_derivative(q_mathieu, lam, method="variational")
    b = discriminant_derivative(q_mathieu, lam, method="integral")
    c = discriminant_derivative(q_mathieu, lam, method="fd")
    scale = max(abs(a), abs(b), abs(c))
    assert abs(a - b) / scale < 1e-8
    assert abs(a - c) / scale < 1e-6


def test_hill_discriminant_quality_metric(q_skew):
    val = hill_discriminant(q_skew, 17.0 + 2.0j)
    assert val.spread < 1e-7
    assert abs(val.F - (val.monodromy[0, 0] + val.monodromy[1, 1])) < 1e-13


def test_mp_probe_agrees_with_double_route(q_gasymov):
    lam = 12.5
    F, _ = discriminant_batch(q_gasymov, [complex(lam)], tol=1e-13,
                              want_deriv=False)
    Fmp = mp_discriminant(q_gasymov, complex(lam), tol=1e-20)
    assert abs(complex(F[0]) - complex(Fmp)) < 1e-12


def test_discriminant_is_entire(q_mathieu):
    # Cauchy integral of F over a circle vanishes for an entire function
    theta = np.linspace(0.0, 2 * math.pi, 65)[:-1]
    z0, r = 25.0 + 3.0j, 4.0
    zs = z0 + r * np.exp(1j * theta)
    F, _ = discriminant_batch(q_mathieu, zs, want_deriv=False)
    integral = np.sum(F * r * 1j * np.exp(1j * theta)) * (2 * math.pi / 64)
    assert abs(integral) < 1e-8


def test_p_branch_constant_free_path():
    F = np.zeros(11, dtype=complex)
    p = p_branch(F)
    assert np.max(np.abs(p - 2.0)) < 1e-14


def test_p_branch_follows_sine():
    t = np.linspace(0.1, 3.0, 200)
    p = p_branch(2.0 * np.cos(t), anchor=2.0 * math.sin(0.1))
    assert np.max(np.abs(p - 2.0 * np.sin(t))) < 1e-12


def test_p_branch_flips_sign_around_band_edge(q_mathieu):
    # loop around a simple edge of the open antiperiodic gap near pi^2:
    # p continues to -p
    from scipy.optimize import brentq
    Fr = lambda x: float(discriminant_batch(
        q_mathieu, [complex(x)], want_deriv=False)[0][0].real)
    grid = np.linspace(3.0, 25.0, 200)
    vals = np.array([Fr(x) for x in grid]) + 2.0
    sign_change = np.where(np.diff(np.sign(vals)))[0]
    assert sign_change.size, "no antiperiodic edge found below 25"
    edge_lam = brentq(lambda x: Fr(x) + 2.0, grid[sign_change[0]],
                      grid[sign_change[0] + 1], xtol=1e-12)
    theta = np.linspace(0.0, 2 * math.pi, 400)
    loop = edge_lam + 0.5 * np.exp(1j * theta)
    Floop, _ = discriminant_batch(q_mathieu, loop, want_deriv=False)
    p = p_branch(Floop)
    assert abs(p[-1] + p[0]) < 1e-6 * abs(p[0]), \
        "analytic continuation around a simple branch point must flip p"


def test_p_branch_rejects_coarse_path():
    # a jump in F bigger than the continuity budget must raise
    F = np.array([0.0, 1.99, -1.99], dtype=complex)
    with pytest.raises(BranchAmbiguity):
        p_branch(F)

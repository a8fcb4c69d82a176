import cmath
import math

import numpy as np
import pytest

from hillspec.eigenfunctions import (alpha_closed_form, canonical_phase,
                                     normalized_pair)
from hillspec.errors import DegenerateAtBoundary
from hillspec.quadrature import boole_weights, l2_inner


def test_free_pair_is_plane_wave(q_zero):
    pair = normalized_pair(q_zero, 2, 0.7)
    w = 4 * math.pi + 0.7
    ref = np.exp(1j * w * pair.grid)
    # normalized and phased: the profile IS e^{i(4 pi + t) x}
    assert np.max(np.abs(pair.psi - ref)) < 1e-8
    assert abs(pair.alpha - 1.0) < 1e-9
    assert pair.qp_defect < 1e-9


def test_free_alpha_battery(q_zero):
    for n in (-3, -1, 0, 1, 5):
        for t in (0.3, 1.7, 2.8):
            pair = normalized_pair(q_zero, n, t)
            assert abs(pair.alpha - 1.0) < 1e-9, (n, t)
            assert pair.formula_spread < 1e-8, (n, t)


def test_biorthogonal_normalization(q_skew):
    pair = normalized_pair(q_skew, 1, 1.1)
    weights = boole_weights(pair.grid.size)
    ip = l2_inner(pair.psi, pair.psi_star, weights)
    assert abs(ip - pair.alpha) < 1e-12
    # psi is L2-normalized on [0,1]
    nrm = l2_inner(pair.psi, pair.psi, weights)
    assert abs(nrm - 1.0) < 1e-9


def test_cross_band_biorthogonality(q_skew):
    t = 0.9
    p1 = normalized_pair(q_skew, 1, t)
    p2 = normalized_pair(q_skew, -2, t)
    weights = boole_weights(p1.grid.size)
    assert p1.grid.size == p2.grid.size
    cross = l2_inner(p1.psi, p2.psi_star, weights)
    assert abs(cross) < 1e-8


def test_formula_spread_battery(q_skew, q_mathieu):
    rng = np.random.default_rng(7)
    for q in (q_skew, q_mathieu):
        for _ in range(6):
            n = int(rng.integers(-3, 4))
            t = float(rng.uniform(0.2, math.pi - 0.2))
            pair = normalized_pair(q, n, t)
            assert pair.formula_spread < 1e-8, (q.coeffs, n, t)
            assert pair.qp_defect < 1e-8


def test_alpha_closed_form_variants_agree(q_mathieu):
    vals = [alpha_closed_form(q_mathieu, 2, 0.8, variant=v)
            for v in ("phi", "g", "pm")]
    assert abs(vals[0] - vals[1]) < 1e-9
    assert abs(vals[0] - vals[2]) < 1e-9
    direct = normalized_pair(q_mathieu, 2, 0.8).alpha
    assert abs(vals[0] - direct) < 1e-8


def test_alpha_closed_form_rejects_unknown_variant(q_zero):
    with pytest.raises(ValueError):
        alpha_closed_form(q_zero, 0, 0.5, variant="legendre")


def test_degenerate_boundary_raises(q_zero):
    # at t=0 the free monodromy is the identity: geometric multiplicity 2
    with pytest.raises(DegenerateAtBoundary):
        normalized_pair(q_zero, 1, 0.0)


def test_canonical_phase_idempotent(q_skew):
    pair = normalized_pair(q_skew, 0, 1.4)
    c = canonical_phase(pair.psi, pair.grid, 1.4)
    assert abs(c - 1.0) < 1e-10


def test_alpha_decays_linearly_at_double_point(q_gasymov):
    # approaching the singular point at lam=pi^2 (t -> pi) the pairing
    # degenerates like |t - pi|: quartering the offset quarters alpha
    a = [abs(normalized_pair(q_gasymov, -1, math.pi - d).alpha)
         for d in (0.08, 0.02, 0.005)]
    assert a[0] > a[1] > a[2]
    ratio = a[2] / a[1]
    assert 0.15 < ratio < 0.35, ratio

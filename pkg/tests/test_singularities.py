import math

import numpy as np
import pytest

from hillspec.singularities import (KLASS_ESS, KLASS_REGULAR,
                                    fit_alpha_exponent,
                                    find_singularities,
                                    geometric_multiplicity,
                                    singular_quasimomenta)

WINDOW = (1.0, 45.0, -2.0, 2.0)


@pytest.fixture(scope="module")
def gasymov_records(q_gasymov):
    return find_singularities(q_gasymov, WINDOW, h=0.02)


def test_gasymov_first_two_ess(gasymov_records):
    assert len(gasymov_records) == 2
    r1, r2 = gasymov_records
    assert abs(r1.mu - math.pi ** 2) < 1e-6
    assert abs(r1.t0 - math.pi) < 1e-9
    assert abs(r2.mu - (2 * math.pi) ** 2) < 1e-6
    assert abs(r2.t0 - 0.0) < 1e-9
    for r in (r1, r2):
        assert r.klass == KLASS_ESS
        assert r.m == 2
        assert r.geo_mult == 1
        assert abs(r.beta - 1.0) < 0.1
        assert not r.dirichlet_flag
        assert not r.neumann_flag
    assert r1.indices == (-1, 0)
    assert r2.indices == (-1, 1)


def test_mathieu_has_no_singular_points(q_mathieu):
    assert find_singularities(q_mathieu, WINDOW, h=0.02) == []


def test_free_double_points_are_regular(q_zero):
    recs = find_singularities(q_zero, WINDOW, h=0.02)
    assert len(recs) == 2
    for k, r in zip((1, 2), recs):
        assert abs(r.mu - (math.pi * k) ** 2) < 1e-7
        assert r.klass == KLASS_REGULAR
        assert r.geo_mult == 2


def test_geometric_multiplicity_direct(q_gasymov, q_zero):
    assert geometric_multiplicity(q_gasymov, math.pi ** 2, math.pi) == 1
    assert geometric_multiplicity(q_zero, (2 * math.pi) ** 2, 0.0) == 2


def test_fit_exponent_at_simple_point_is_flat(q_gasymov):
    # away from any multiple point alpha is bounded below: beta ~ 0
    rungs = [1.5 + 0.1 * 2.0 ** -j for j in range(6)]
    fit = fit_alpha_exponent(q_gasymov, -1, 1.5, rungs)
    assert abs(fit.beta) < 0.05


def test_fit_exponent_at_gasymov_ess(q_gasymov):
    rungs = [math.pi - 0.05 * 2.0 ** -j for j in range(8)]
    fit = fit_alpha_exponent(q_gasymov, -1, math.pi, rungs)
    assert abs(fit.beta - 1.0) < 0.1
    assert fit.residual < 0.1


def test_singular_quasimomenta_bundles(gasymov_records):
    bundles = singular_quasimomenta(gasymov_records, h=0.02)
    assert [b.value for b in bundles] == pytest.approx([math.pi, 2 * math.pi])
    b = bundles[0]
    (lo1, hi1), (lo2, hi2) = b.bundle
    assert (lo1, hi1) == pytest.approx((math.pi - 0.02, math.pi + 0.02))
    assert (lo2, hi2) == pytest.approx((-math.pi - 0.02, -math.pi + 0.02))
    assert abs(b.ess_lambda - math.pi ** 2) < 1e-6


def test_defect_is_tiny_for_true_doubles(gasymov_records):
    for r in gasymov_records:
        assert r.defect < 1e-8, r


def test_records_sorted_by_real_part(gasymov_records):
    mus = [r.mu.real for r in gasymov_records]
    assert mus == sorted(mus)

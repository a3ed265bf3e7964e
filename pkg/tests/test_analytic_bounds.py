import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from lpis.analytic_bounds import (
    BoundCurve,
    PepQuery,
    bound_curve,
    conditional_pep,
    conditional_pep_l1,
    conditional_pep_l1_batch,
    conditional_pep_l2,
    optimal_gallager_radius,
    pep_gaussian,
    pep_laplace,
    pep_quadrature,
    per_coordinate_laplace_transform,
    sphere_bound_awln,
    sphere_bound_split,
    union_bound,
    union_bound_awln,
    union_conditional_pep_l1,
    x_d0_pdf,
)
from lpis.codes import bundled_code
from lpis.ggd_channel import GgdParams, SnrPoint
from lpis.numerics import adaptive_quadrature

from oracles import conditional_pep_l1_reference, gaussian_pep, laplace_pep_mp

# exact rationals from the geometric oracle
EXACT_L1 = [
    (15, 5, 7, Fraction(14427072, 678223072849)),
    (7, 3, Fraction(11, 2), Fraction(128125, 3543122)),
    (1, 1, 3, Fraction(1, 2)),
    (2, 1, 3, Fraction(1, 3)),
]


@pytest.mark.parametrize("n,d,r,want", EXACT_L1)
def test_conditional_l1_exact_rationals(n, d, r, want):
    assert conditional_pep_l1_reference(n, d, r) == want
    for form in ("series", "beta"):
        assert conditional_pep_l1(n, d, float(r), form=form) == pytest.approx(float(want), rel=1e-12)


@pytest.mark.parametrize("n,d,r,want", [
    (31, 11, 20, 8.209580270575592e-06),
    (15, 15, 16, 4.139383589838839e-05),
    (31, 31, 40, 9.713827206988742e-06),
])
def test_conditional_l1_frozen_values(n, d, r, want):
    assert conditional_pep_l1(n, d, r) == pytest.approx(want, rel=1e-9)


def test_conditional_l1_edge_cases():
    assert conditional_pep_l1(15, 5, 5.0) == 0.0
    assert conditional_pep_l1(15, 5, 3.0) == 0.0
    a = conditional_pep_l1(15, 5, 9.3, d0_start=0)
    b = conditional_pep_l1(15, 5, 9.3, d0_start=1)
    assert a == pytest.approx(b, rel=1e-12)
    val, info = conditional_pep_l1(31, 11, 25.0, return_info=True)
    assert info["path"] in ("float", "mpmath") and 0 < val < 1
    with pytest.raises(ValueError):
        conditional_pep_l1(5, 6, 7.0)
    with pytest.raises(ValueError):
        conditional_pep_l1(5, 2, 7.0, form="other")
    with pytest.raises(ValueError):
        PepQuery(5, 2, -1.0)


def test_ladder_escalates_on_cancellation():
    # large n and r: the alternating series cancels heavily
    val, info = conditional_pep_l1(31, 11, 60.0, return_info=True)
    assert info["path"] == "mpmath"
    assert val == pytest.approx(float(conditional_pep_l1_reference(31, 11, 60)), rel=1e-9)


def test_batch_form_matches_series():
    r = np.linspace(5.01, 40, 37)
    batch = conditional_pep_l1_batch(15, 5, r)
    series = [conditional_pep_l1(15, 5, x) for x in r]
    assert np.allclose(batch, series, rtol=1e-10, atol=1e-15)


def test_x_d0_density_reassembles_conditional_pep():
    n, d, r = 9, 3, 7.5
    total = 0.0
    for d0 in range(1, d + 1):
        for d2 in range(d - d0 + 1):
            d1 = d - d0 - d2
            thr = d0 + d1 - d2
            top = r - 2 * d2
            if top <= max(thr, 0):
                continue
            pts = [float(x) for x in range(1, int(top) + 1) if max(thr, 0) < x < top]
            ways = math.comb(d, d0) * math.comb(d - d0, d2)
            total += ways * adaptive_quadrature(lambda x: x_d0_pdf(x, n, d, d0, d2, r),
                                                max(thr, 0), top, rel_tol=1e-12, breakpoints=pts)
    # the d0 = 0 patterns: all flipped coordinates off (0, 2)
    for d2 in range(d + 1):
        if 2 * d2 >= d and r > 2 * d2:
            h = 1.0 if 2 * d2 > d else 0.5
            total += math.comb(d, d2) * h * ((r - 2 * d2) / r) ** (n - 1) / 2 ** d
    assert total == pytest.approx(conditional_pep_l1(n, d, r), rel=1e-9)
    with pytest.raises(ValueError):
        x_d0_pdf(1.0, 5, 3, 0, 0, 4.0)


def test_conditional_l2_cap_areas():
    # n = 3: the height on a sphere is uniform (Archimedes)
    assert conditional_pep_l2(3, 1, 2.0) == pytest.approx(0.25, rel=1e-13)
    assert conditional_pep_l2(3, 2, 2.0) == pytest.approx((1 - math.sqrt(2) / 2) / 2, rel=1e-13)
    assert conditional_pep_l2(15, 5, 2.0) == 0.0
    assert conditional_pep_l2(1, 1, 3.0) == 0.5
    assert conditional_pep(PepQuery(3, 1, 2.0, 2.0)) == pytest.approx(0.25)
    with pytest.raises(NotImplementedError):
        conditional_pep(PepQuery(3, 1, 2.0, 1.6))


@pytest.mark.parametrize("d,sigma,want", [
    (3, 1.0, 0.03320325337074062),
    (5, 0.8, 0.002776880603234188),
    (9, 0.5, 9.8257318046566e-08),
])
def test_laplace_pep_frozen_and_oracle(d, sigma, want):
    assert pep_laplace(d, sigma) == pytest.approx(want, rel=1e-10)
    assert laplace_pep_mp(d, sigma) == pytest.approx(want, rel=1e-10)


def test_gaussian_pep():
    assert pep_gaussian(5, 1.0) == pytest.approx(gaussian_pep(5, 1.0), rel=1e-13)


def test_transform_at_zero_is_one():
    for p in (1.0, 1.6, 2.0):
        assert abs(per_coordinate_laplace_transform(np.array([0.0]), p, 0.9)[0] - 1) < 1e-10


@pytest.mark.parametrize("p,d,sigma", [(1.6, 3, 0.8), (2.8, 3, 0.8)])
def test_quadrature_pep_general_p_against_mc(p, d, sigma):
    alpha = GgdParams(p, sigma).alpha
    z = stats.gennorm(p, scale=alpha).rvs(size=(2_000_000, d), random_state=np.random.default_rng(1))
    mc = np.mean(np.sum(np.abs(z - 2) ** p - np.abs(z) ** p, axis=1) < 0)
    se = math.sqrt(mc * (1 - mc) / z.shape[0])
    assert abs(pep_quadrature(d, p, sigma) - mc) < 4 * se


def test_quadrature_pep_single_coordinate_fixed_nodes():
    # d = 1: the error event is z > 1; convergence in m is only algebraic here
    p, sigma = 1.6, 0.8
    want = stats.gennorm(p, scale=GgdParams(p, sigma).alpha).sf(1.0)
    assert pep_quadrature(1, p, sigma, m_nodes=1024) == pytest.approx(want, rel=1e-4)
    with pytest.raises(ValueError):
        pep_quadrature(1, p, sigma, m_nodes=7)


BCH15 = bundled_code("bch_15_7")
BCH31 = bundled_code("bch_31_11")


@pytest.mark.parametrize("db,union,sphere", [
    (-6, 7.727716884522611, 0.9736221996970886),
    (0, 0.5317305920141377, 0.34499963408195544),
    (4, 0.01974018304934481, 0.019271224463404457),
    (8, 9.418061204589244e-05, 9.417744673168245e-05),
])
def test_bch15_bounds_frozen(db, union, sphere):
    s = SnrPoint(db, BCH15.rate).sigma
    assert union_bound_awln(BCH15, s) == pytest.approx(union, rel=1e-8)
    assert sphere_bound_awln(BCH15, s) == pytest.approx(sphere, rel=1e-7)


def test_gallager_radius_is_where_union_reaches_one():
    for code, want in ((BCH15, 13.690905796675601), (BCH31, 30.08375519405657)):
        r = optimal_gallager_radius(code)
        assert r == pytest.approx(want, rel=1e-10)
        assert union_conditional_pep_l1(code.weight_distribution, code.n, r)[0] == pytest.approx(1.0, abs=1e-9)


def test_sphere_radius_is_optimal():
    s = SnrPoint(2.0, BCH15.rate).sigma
    best = sum(sphere_bound_split(BCH15, s))
    r = optimal_gallager_radius(BCH15)
    for other in (r - 1.0, r + 1.0, 9.0):
        assert sum(sphere_bound_split(BCH15, s, radius=other)) >= best - 1e-12


def test_union_general_matches_special_cases():
    s = SnrPoint(3.0, BCH15.rate).sigma
    assert union_bound(BCH15, 1.0, s) == union_bound_awln(BCH15, s)
    gauss = sum(a * gaussian_pep(d, s) for d, a in BCH15.weight_distribution.items())
    assert union_bound(BCH15, 2.0, s) == pytest.approx(gauss, rel=1e-12)


def test_bound_curve():
    curve = bound_curve(BCH15, [0.0, 4.0], "union_awln")
    assert curve.kind == "union_awln" and len(curve.values) == 2
    assert curve.values[1] < curve.values[0]
    with pytest.raises(ValueError):
        bound_curve(BCH15, [0.0], "nope")
    with pytest.raises(ValueError):
        BoundCurve([1], [], "union_awln")

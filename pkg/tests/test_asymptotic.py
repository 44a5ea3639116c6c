"""Limit-law kernels, Fredholm determinants, and the multi-time CDF."""

from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

from growthdist.asymptotic import (
    LimitSettings,
    airy_form_kernel,
    check_d_assignment,
    d_for_eps,
    det_settings,
    eval_basic_kernel,
    fredholm_det_F,
    multitime_cdf,
    single_time_cdf,
    tracy_widom,
    two_point_kernel,
)
from growthdist.errors import SchemaError
from growthdist.exact import det_theta
from growthdist.params import (
    KPZParams,
    LimitParams,
    compute_constants,
    discretize,
)

INST2 = LimitParams(t=(1.0, 2.0), x=(0.1, -0.2), xi=(0.3, 0.5))
INST3 = LimitParams(t=(1.0, 1.5, 2.0), x=(0.1, -0.2, 0.15), xi=(0.3, 0.5, 0.7))


# ---------------------------------------------------------------------------
# Tracy-Widom marginal
# ---------------------------------------------------------------------------

def test_tracy_widom_reference_values():
    # anchors from doubled-resolution quadrature of det(I - K_Ai)
    anchors = {
        -4.0: 0.003544553527565,
        -2.0: 0.413224142481711,
        0.0: 0.9693728283552477,
        1.0: 0.997505438149409,
        2.0: 0.999887553698308,
    }
    for s, want in anchors.items():
        assert tracy_widom(s) == pytest.approx(want, abs=1e-9)


def test_tracy_widom_grid_doubling():
    for s in (-4.0, -1.0, 0.0, 2.0):
        assert abs(tracy_widom(s, nodes=96) - tracy_widom(s, nodes=192)) < 1e-7


def test_tracy_widom_monotone_and_tails():
    grid = [-8.0, -5.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0]
    vals = [tracy_widom(s) for s in grid]
    assert vals == sorted(vals)
    assert vals[0] < 1e-6
    assert vals[-1] > 1 - 1e-6


def test_tracy_widom_domain():
    with pytest.raises(SchemaError):
        tracy_widom(-11.0)
    with pytest.raises(SchemaError):
        tracy_widom(7.0)


def test_single_time_cdf_independent_of_time():
    x, xi = 0.4, 0.1
    want = tracy_widom(xi + x * x)
    assert single_time_cdf(1.0, x, xi) == pytest.approx(want, abs=1e-6)
    assert single_time_cdf(2.5, x, xi) == pytest.approx(want, abs=1e-6)


def test_two_point_kernel_scalar_mode():
    val = two_point_kernel(1.0, 0.0, 0.1, 0.5, 0.7)
    assert isinstance(val, complex)
    mat = two_point_kernel(1.0, 0.0, 0.1, np.array([0.5]), np.array([0.7]))
    assert val == pytest.approx(complex(mat[0, 0]))


# ---------------------------------------------------------------------------
# growing-line ladders
# ---------------------------------------------------------------------------

def test_d_for_eps_reference_ladder():
    ladder = d_for_eps((2, 1), 0, 3)
    assert ladder[1] == pytest.approx(1.5)
    assert ladder[2] == pytest.approx(0.5)
    assert ladder[3] == pytest.approx(2.5)


def test_d_for_eps_orderings_follow_eps():
    for eps in [(1, 1, 2), (2, 2, 1), (1, 2, 1)]:
        ladder = d_for_eps(eps, 0, 4, lo=0.3, hi=2.2)
        for k in range(1, 4):
            assert (ladder[k] < ladder[k + 1]) == (eps[k - 1] == 1)
        vals = list(ladder.values())
        assert min(vals) == pytest.approx(0.3)
        assert max(vals) == pytest.approx(2.2)


def test_check_d_assignment_rejects_violations():
    with pytest.raises(ValueError):
        check_d_assignment({1: 1.0, 2: 2.0}, (2,), 0, 2)   # up step against eps=2
    with pytest.raises(ValueError):
        check_d_assignment({1: 1.0, 2: 1.0}, (1,), 0, 2)   # duplicate values
    with pytest.raises(ValueError):
        check_d_assignment({1: -1.0, 2: 2.0}, (1,), 0, 2)  # nonpositive
    check_d_assignment({1: 1.0, 2: 2.0}, (1,), 0, 2)       # valid: no raise


def test_limit_settings_validation():
    with pytest.raises(SchemaError):
        LimitSettings(d1=2.0, d2=1.0)
    with pytest.raises(SchemaError):
        LimitSettings(theta_radius=0.9)
    with pytest.raises(SchemaError):
        LimitSettings(ladder_lo=2.0, ladder_hi=1.0)
    with pytest.raises(SchemaError):
        LimitSettings(mu=-0.5)


# ---------------------------------------------------------------------------
# kernel families: contour form vs Airy-operator form
# ---------------------------------------------------------------------------

def test_indicator_zeros():
    u, v = -0.5, -0.3
    # no admissible inner index at p = 2 for the two-decaying-line family
    assert eval_basic_kernel(2, {"k": 1}, 2, u, 1, v, INST2) == 0.0
    # the single up/down pair only feeds the last block row
    assert eval_basic_kernel(1, {}, 1, u, 1, v, INST2) == 0.0


@pytest.mark.parametrize(
    "family,indices,r,s,inst",
    [
        (3, {"k": 1}, 2, 0, INST2),
        (7, {"k1": 0, "k2": 2, "k3": 1, "eps": (1,)}, 2, 0, INST2),
        (4, {"k1": 2, "k2": 1}, 3, 0, INST3),
    ],
)
def test_remaining_families_match_airy_forms(family, indices, r, s, inst):
    u = np.array([-0.8, -0.2, 0.5])
    v = np.array([-0.6, 0.1, 0.9])
    a = eval_basic_kernel(family, indices, r, u, s, v, inst, apply_indicator=False)
    b = airy_form_kernel(family, indices, r, u, s, v, inst, apply_indicator=False)
    assert np.max(np.abs(a - b)) < 1e-6


def test_kernel_invariant_under_contour_shifts():
    u = np.array([-0.7, 0.3])
    v = np.array([-0.4, 0.6])
    base = eval_basic_kernel(6, {"k1": 0, "k2": 2, "eps": (1,)}, 2, u, 1, v, INST2)
    moved = eval_basic_kernel(
        6,
        {"k1": 0, "k2": 2, "eps": (1,)},
        2,
        u,
        1,
        v,
        INST2,
        settings=LimitSettings(
            d1=1.1, d2=1.9, d3=0.6, d_single=1.3, ladder_lo=0.7, ladder_hi=2.1
        ),
    )
    assert np.max(np.abs(base - moved)) < 1e-7


# ---------------------------------------------------------------------------
# Fredholm determinant of the assembled kernel
# ---------------------------------------------------------------------------

def test_det_reduces_to_tracy_widom_at_one_time():
    inst = LimitParams(t=(1.0,), x=(0.0,), xi=(0.1,))
    got = fredholm_det_F((), inst)
    assert got.real == pytest.approx(tracy_widom(0.1), abs=1e-6)
    assert abs(got.imag) < 1e-8


def test_det_conjugate_symmetry():
    th = 2.0 * cmath.exp(0.6j)
    d = fredholm_det_F((th,), INST2)
    dbar = fredholm_det_F((np.conj(th),), INST2)
    assert abs(dbar - np.conj(d)) / abs(d) < 1e-10


def test_det_invariant_under_conjugation_rate():
    th = 2.0 * cmath.exp(-0.8j)
    base = fredholm_det_F((th,), INST2, settings=det_settings())
    import dataclasses

    shifted = fredholm_det_F(
        (th,), INST2, settings=dataclasses.replace(det_settings(), mu=2.0)
    )
    assert abs(base - shifted) / abs(base) < 1e-8


# ---------------------------------------------------------------------------
# the multi-time distribution
# ---------------------------------------------------------------------------

def test_multitime_single_time_route():
    inst = LimitParams(t=(1.0,), x=(0.3,), xi=(0.2,))
    res = multitime_cdf(inst)
    assert res.converged
    assert res.value == pytest.approx(tracy_widom(0.2 + 0.09, nodes=192), abs=1e-9)


def test_multitime_two_time_anchor():
    inst = LimitParams(t=(1.0, 2.0), x=(0.0, 0.0), xi=(0.2, 0.4))
    res = multitime_cdf(inst)
    assert res.converged
    assert abs(res.imag_part) < 1e-8
    assert -1e-4 <= res.value <= 1 + 1e-4
    # frozen two-time value from converged runs of this evaluator
    assert res.value == pytest.approx(0.9720743806856159, abs=5e-6)


def test_multitime_invariant_under_time_rescaling():
    a = multitime_cdf(LimitParams(t=(1.0, 2.0), x=(0.1, -0.2), xi=(0.3, 0.5)))
    b = multitime_cdf(LimitParams(t=(2.0, 4.0), x=(0.1, -0.2), xi=(0.3, 0.5)))
    assert a.converged and b.converged
    assert abs(a.value - b.value) < 1e-5


# ---------------------------------------------------------------------------
# finite-size determinant approaches the limit determinant (three times)
# ---------------------------------------------------------------------------

def test_three_time_determinant_convergence_pointwise():
    # the threshold rounding inside discretize jitters the effective xi by
    # O(T^(-1/3)), the same order as the convergence rate, so the limit is
    # evaluated at the effective thresholds implied by the rounded corners
    q = 0.25
    c = compute_constants(q)
    t, xi = (1.0, 1.5, 2.0), (0.3, 0.5, 0.7)
    theta = (2.0 * cmath.exp(0.7j), 2.0 * cmath.exp(-0.4j))
    diffs = []
    for big_t in (20.0, 40.0, 80.0):
        mp = discretize(KPZParams(q=q, T=big_t, t=t, x=(0.0, 0.0, 0.0), xi=xi))
        fin = det_theta(mp, theta)
        xihat = tuple(
            (mp.a[k] - c.c2 * t[k] * big_t) / (c.c3 * (t[k] * big_t) ** (1 / 3))
            for k in range(3)
        )
        lim = fredholm_det_F(theta, LimitParams(t=t, x=(0.0, 0.0, 0.0), xi=xihat))
        diffs.append(abs(fin - lim))
    assert diffs[1] < diffs[0]
    assert diffs[2] < diffs[1]
    assert diffs[2] < 6e-3

"""Finite-size multipoint probabilities via the theta-contour determinant."""

from __future__ import annotations

import numpy as np
import pytest

from growthdist.errors import BudgetError, ConvergenceError
from growthdist.exact import (
    _Assembler,
    _build_caches,
    _theta_integral,
    det_theta,
    multipoint_prob_exact,
    single_point_prob,
)
from growthdist.oracle import dp_exact_prob, truncated_sum_prob
from growthdist.params import ModelParams, big_theta, compute_constants

P2 = ModelParams(q=0.4, m=(1, 2), n=(1, 3), a=(2, 4))


def _nu(params):
    return compute_constants(params.q).c0 * params.n[-1] ** (1 / 3)


# ---------------------------------------------------------------------------
# single-point determinant
# ---------------------------------------------------------------------------

def test_single_point_single_cell_geometric():
    for q in (0.3, 0.7):
        for a in (1, 2, 4):
            res = single_point_prob(ModelParams(q=q, m=(1,), n=(1,), a=(a,)))
            assert res.value == pytest.approx(1 - q ** a, abs=1e-10)
            assert res.converged


def test_single_point_strip_negative_binomial():
    # min(m, n) = 1 reduces the passage time to a sum of m geometrics
    from growthdist.oracle import w_weight

    q, m, a = 0.35, 3, 5
    res = single_point_prob(ModelParams(q=q, m=(m,), n=(1,), a=(a,)))
    cdf = sum(w_weight(x, m, q) for x in range(0, a))
    assert res.value == pytest.approx(cdf, abs=1e-10)


def test_single_point_square_matches_transfer_matrix():
    mp = ModelParams(q=0.5, m=(3,), n=(3,), a=(5,))
    res = single_point_prob(mp)
    assert res.value == pytest.approx(dp_exact_prob(mp), abs=1e-8)


# ---------------------------------------------------------------------------
# determinant at a single theta point
# ---------------------------------------------------------------------------

def test_det_theta_conjugate_symmetry():
    th = (1.3 + 0.8j,)
    d = det_theta(P2, th)
    dbar = det_theta(P2, (np.conj(th[0]),))
    assert abs(dbar - np.conj(d)) < 1e-13


def test_det_theta_similarity_invariance():
    th = (1.7 - 0.4j,)
    base = det_theta(P2, th)
    shifted = det_theta(P2, th, mu=1.0)
    scaled = det_theta(P2, th, radius_scale=1.15)
    assert abs(shifted - base) / abs(base) < 1e-10
    assert abs(scaled - base) / abs(base) < 1e-10


def test_det_theta_validates_inputs():
    with pytest.raises(ValueError):
        det_theta(ModelParams(q=0.4, m=(1,), n=(1,), a=(1,)), (2.0,))
    with pytest.raises(ValueError):
        det_theta(P2, (2.0, 2.0))


# ---------------------------------------------------------------------------
# multipoint probability
# ---------------------------------------------------------------------------

def test_multipoint_matches_transfer_matrix_small():
    res = multipoint_prob_exact(P2)
    assert res.converged
    assert res.imag_part == pytest.approx(0.0, abs=1e-12)
    assert res.value == pytest.approx(dp_exact_prob(P2), abs=1e-9)


def test_multipoint_matches_truncated_sum():
    mp = ModelParams(q=0.5, m=(2, 3), n=(1, 2), a=(3, 5))
    res = multipoint_prob_exact(mp)
    assert res.value == pytest.approx(truncated_sum_prob(mp), abs=1e-9)


def test_multipoint_forced_zero_event():
    mp = ModelParams(q=0.5, m=(2,), n=(2,), a=(1,))
    assert multipoint_prob_exact(mp).value == pytest.approx(0.0625, abs=1e-8)


def test_multipoint_monotone_in_each_threshold():
    vals1 = [
        multipoint_prob_exact(ModelParams(q=0.4, m=(1, 2), n=(1, 3), a=(a1, 4))).value
        for a1 in (1, 2, 3)
    ]
    vals2 = [
        multipoint_prob_exact(ModelParams(q=0.4, m=(1, 2), n=(1, 3), a=(2, a2))).value
        for a2 in (3, 4, 5)
    ]
    assert vals1 == sorted(vals1)
    assert vals2 == sorted(vals2)
    for v in vals1 + vals2:
        assert -1e-6 <= v <= 1 + 1e-6


def test_multipoint_invariances():
    base = multipoint_prob_exact(P2).value
    assert multipoint_prob_exact(P2, mu=1.0).value == pytest.approx(base, abs=1e-9)
    assert multipoint_prob_exact(P2, theta_radius=1.6).value == pytest.approx(
        base, abs=1e-9
    )
    assert multipoint_prob_exact(P2, radius_scale=0.9).value == pytest.approx(
        base, abs=1e-9
    )


def test_multipoint_control_errors():
    with pytest.raises(ValueError):
        multipoint_prob_exact(P2, theta_radius=0.9)
    with pytest.raises(ConvergenceError):
        multipoint_prob_exact(P2, max_levels=0)
    with pytest.raises(BudgetError):
        multipoint_prob_exact(P2, deadline=0.0)


# ---------------------------------------------------------------------------
# structural properties of the assembled matrix
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "mp",
    [
        ModelParams(q=0.3, m=(1, 2, 4), n=(2, 3, 4), a=(3, 5, 6)),
        ModelParams(q=0.5, m=(1, 2, 3, 4), n=(1, 2, 3, 4), a=(2, 3, 5, 6)),
    ],
)
def test_boundary_blocks_are_nilpotent(mp):
    # the boundary pieces only occupy block column s < min(r, p-1), so the
    # (p-1)-th power vanishes identically
    p, n_last = mp.p, mp.n[-1]
    asm = _Assembler(mp, 0.0, _nu(mp), 1.0)
    bblocks = _build_caches(asm, 64)[2]
    th = tuple(1.2 + 0.4j * k for k in range(1, p))
    b = np.zeros((n_last, n_last), dtype=complex)
    for r, s, block in bblocks:
        b[asm.block_rows(r), asm.block_rows(s)] += (
            1.0 + big_theta(r, s, th, p)
        ) * block
    assert np.abs(b).max() > 0.0
    assert np.abs(np.linalg.matrix_power(b, p - 1)).max() < 1e-12


def test_theta_trapezoid_saturates_with_bandwidth():
    # the determinant is a Laurent polynomial in theta, so the trapezoid
    # rule is exact once the node count clears its bandwidth
    asm = _Assembler(P2, 0.0, _nu(P2), 1.0)
    caches = _build_caches(asm, 256)
    lo = _theta_integral(asm, caches, 2.0, 48)
    hi = _theta_integral(asm, caches, 2.0, 96)
    assert abs(lo - hi) < 1e-10
    assert lo.real == pytest.approx(dp_exact_prob(P2), abs=1e-9)

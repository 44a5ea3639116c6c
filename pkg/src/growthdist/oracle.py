"""Independent slow-but-sure evaluations of the multi-point probability.

Two routes are provided, both independent of any contour integration:

* ``dp_exact_prob`` — a transfer-matrix dynamic program over the Markov
  chain of last-passage columns ``(G(m,1), ..., G(m,N))``, with values
  capped at the final threshold (exact: by monotonicity any value reaching
  ``a_p`` already violates the final constraint, so the cap introduces no
  truncation error).

* ``truncated_sum_prob`` — the determinantal sum

      Pr = sum over x^1..x^{p-1} in W_N with x^r_{n_r} < a_r of
           det[D^(n_1-i) w_{m_1}(x^1_j)]
           * prod_{r=2}^{p-1} det[D^(dn_r) w_{dm_r}(x^r_j - x^{r-1}_i)]
           * det[D^(j-1-n_{p-1}) w_{dm_p}(a_p - x^{p-1}_i)],

  where ``D`` is the forward difference ``Df(x) = f(x+1) - f(x)`` (inverse:
  prefix sums), ``w_m(x) = binom(x+m-1, x)(1-q)^m q^x 1{x >= 0}`` the
  negative-binomial weight, ``dn_r = n_r - n_{r-1}``, ``dm_r = m_r - m_{r-1}``
  and ``W_N`` the set of nondecreasing integer N-vectors.  The support of
  the difference kernels bounds every summation variable on both sides, so
  the enumeration window below makes the sum exact.

The building blocks — the weight ``w_m``, integer powers of ``D`` and the
one-step transition determinant ``det[D^(j-i) w_steps(y_j - x_i)]`` — are
exported for direct testing, together with a numeric check of the
summation-by-parts identities that justify the determinantal sum.
"""

from __future__ import annotations

import math
from itertools import combinations_with_replacement
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import BudgetError
from .params import ModelParams

__all__ = [
    "w_weight",
    "nabla_w",
    "nabla_w_table",
    "nabla_pow",
    "schutz_determinant",
    "dp_exact_prob",
    "truncated_sum_prob",
    "verify_sbp",
]


# ---------------------------------------------------------------------------
# negative binomial weight and difference calculus
# ---------------------------------------------------------------------------

def w_weight(x: int, m: int, q: float) -> float:
    """Negative-binomial weight ``w_m(x) = binom(x+m-1, x)(1-q)^m q^x``, x >= 0."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if x < 0:
        return 0.0
    return math.comb(x + m - 1, x) * (1.0 - q) ** m * q ** x


def nabla_pow(f: Mapping[int, float], k: int) -> Callable[[int], float]:
    """Integer power of the forward difference on a finitely supported ``f``.

    Returns a callable evaluating ``D^k f`` anywhere.  For ``k < 0`` the
    iterated strict prefix sum is used, which requires (and here trivially
    has) a left support bound:

        D^(-r) f(x) = sum_{y < x} binom(x-y-1, r-1) f(y),

    the binomial counting the strict chains ``y < z_1 < ... < z_(r-1) < x``.
    """
    support = sorted(f)

    if k >= 0:
        coeff = [(-1) ** (k - i) * math.comb(k, i) for i in range(k + 1)]

        def fwd(x: int) -> float:
            return sum(c * f.get(x + i, 0.0) for i, c in enumerate(coeff))

        return fwd

    r = -k

    def inv(x: int) -> float:
        out = 0.0
        for y in support:
            if y < x:
                out += math.comb(x - y - 1, r - 1) * f[y]
        return out

    return inv


def nabla_w(k: int, m: int, q: float, x: int) -> float:
    """``D^k w_m`` evaluated at a single integer ``x``."""
    if k >= 0:
        return sum(
            (-1) ** (k - i) * math.comb(k, i) * w_weight(x + i, m, q)
            for i in range(k + 1)
        )
    r = -k
    return sum(
        math.comb(x - y - 1, r - 1) * w_weight(y, m, q)
        for y in range(0, x)
    )


def nabla_w_table(k: int, m: int, q: float, lo: int, hi: int) -> np.ndarray:
    """``D^k w_m`` on the window ``lo..hi`` (inclusive) as an array."""
    if k >= 0:
        base_lo = min(lo, 0)
        xs = np.arange(base_lo, hi + k + 1)
        vals = np.array([w_weight(int(x), m, q) for x in xs])
        for _ in range(k):
            vals = vals[1:] - vals[:-1]
        return vals[lo - base_lo:]
    return np.array([nabla_w(k, m, q, int(x)) for x in range(lo, hi + 1)])


def schutz_determinant(
    x: Sequence[int], y: Sequence[int], steps: int, q: float
) -> float:
    """One-step transition weight ``det[D^(j-i) w_steps(y_j - x_i)]``.

    ``x`` and ``y`` are nondecreasing integer vectors of equal length; the
    value is the probability that the column vector of last-passage values
    moves from ``x`` to ``y`` across ``steps`` grid columns.
    """
    N = len(x)
    if len(y) != N:
        raise ValueError("x and y must have equal length")
    mat = np.empty((N, N))
    for i in range(N):
        for j in range(N):
            mat[i, j] = nabla_w(j - i, steps, q, y[j] - x[i])
    return float(np.linalg.det(mat))


# ---------------------------------------------------------------------------
# exact dynamic program
# ---------------------------------------------------------------------------

def dp_exact_prob(params: ModelParams, state_budget: int = 10 ** 6) -> float:
    """Exact ``P(G(m_k, n_k) < a_k for all k)`` by transfer-matrix DP.

    The state is the nondecreasing vector ``(G(m,1), ..., G(m,N))`` with
    ``N = n_p``, evolved column by column; within a column the rows are
    swept in order, so intermediate states mix new and old entries.  Values
    are capped at ``a_p``: mass reaching the cap is dropped (it can never
    satisfy the final constraint).  The grid is transposed when that gives
    the smaller state vector.

    Raises ``BudgetError`` when ``C(a_p - 1 + N, N)`` exceeds the budget.
    """
    if any(ak <= 0 for ak in params.a):
        return 0.0
    if params.m[-1] < params.n[-1]:
        params = ModelParams(q=params.q, m=params.n, n=params.m, a=params.a)
    N = params.n[-1]
    cap = params.a[-1]
    if math.comb(cap - 1 + N, N) > state_budget:
        raise BudgetError(
            f"state space C({cap - 1 + N}, {N}) exceeds budget {state_budget}"
        )
    q = params.q
    checkpoints = {m: k for k, m in enumerate(params.m)}
    # geometric increment probabilities, plus tail mass q**j for >= j
    geo = [(1.0 - q) * q ** j for j in range(cap)]

    dist: dict[tuple[int, ...], float] = {tuple([0] * N): 1.0}
    for m in range(1, params.m[-1] + 1):
        for j in range(N):
            new: dict[tuple[int, ...], float] = {}
            for state, mass in dist.items():
                base = max(state[j], state[j - 1] if j > 0 else 0)
                head = state[:j]
                tail = state[j + 1:]
                for val in range(base, cap):
                    ns = head + (val,) + tail
                    w = mass * geo[val - base]
                    if ns in new:
                        new[ns] += w
                    else:
                        new[ns] = w
                # mass escaping to >= cap is dropped (event already failed)
            dist = new
        if m in checkpoints:
            k = checkpoints[m]
            nk, ak = params.n[k], params.a[k]
            dist = {s: w for s, w in dist.items() if s[nk - 1] < ak}
    return float(sum(dist.values()))


# ---------------------------------------------------------------------------
# determinantal sum
# ---------------------------------------------------------------------------

def _batched_det(mats: np.ndarray) -> np.ndarray:
    return np.linalg.det(mats)


def _enumerate_vectors(N: int, lo: int, hi: int, bound_pos: int, bound_val: int
                       ) -> np.ndarray:
    """Nondecreasing integer N-vectors in [lo, hi] with x[bound_pos] < bound_val."""
    out = [
        v for v in combinations_with_replacement(range(lo, hi + 1), N)
        if v[bound_pos] < bound_val
    ]
    return np.array(out, dtype=np.int64).reshape(len(out), N)


def truncated_sum_prob(
    params: ModelParams, margin: int = 0, budget: int = 5 * 10 ** 7
) -> float:
    """Evaluate the determinantal sum for ``P(G(m_k,n_k) < a_k for all k)``.

    The enumeration windows are derived from the supports of the difference
    kernels, which make the sum exact; ``margin`` widens them anyway (the
    result must not change — a useful self-test).  ``budget`` caps the
    number of determinant evaluations.
    """
    if any(ak <= 0 for ak in params.a):
        return 0.0
    p = params.p
    N = params.n[-1]
    q = params.q
    n, m, a = params.n, params.m, params.a

    if p == 1:
        mat = np.empty((N, N))
        for i in range(N):
            for j in range(N):
                mat[i, j] = nabla_w(j - i - 1, m[0], q, a[0])
        return float(np.linalg.det(mat))

    dn = [n[0]] + [n[r] - n[r - 1] for r in range(1, p)]
    dm = [m[0]] + [m[r] - m[r - 1] for r in range(1, p)]

    # support-derived windows: low side from D^k w vanishing below -max(k,0),
    # high side recursively from the final determinant's row support
    hi = [0] * p
    hi[p - 1] = a[p - 1] + dn[p - 1] - 1 + margin
    for r in range(p - 2, 0, -1):
        hi[r] = hi[r + 1] + dn[r] + margin
    lo_base = -sum(dn[:p]) - margin

    vec_sets = []
    for r in range(1, p):
        vs = _enumerate_vectors(N, lo_base, hi[r], n[r - 1] - 1, a[r - 1])
        if len(vs) == 0:
            return 0.0
        vec_sets.append(vs)
    if math.prod(len(v) for v in vec_sets) > budget:
        raise BudgetError("enumeration window exceeds determinant budget")

    # first factor: det[D^(n_1 - i) w_{m_1}(x^1_j)]
    X1 = vec_sets[0]
    lo_t, hi_t = lo_base - N, max(hi) + N + 1
    first_tabs = [
        nabla_w_table(n[0] - (i + 1), m[0], q, lo_t, hi_t) for i in range(N)
    ]
    mats = np.empty((len(X1), N, N))
    for i in range(N):
        mats[:, i, :] = first_tabs[i][X1 - lo_t]
    weight = _batched_det(mats)  # indexed by x^1

    # middle factors: det[D^(dn_r) w_{dm_r}(x^r_j - x^{r-1}_i)], r = 2..p-1
    for r in range(2, p):
        Xp, Xn = vec_sets[r - 2], vec_sets[r - 1]
        dlo, dhi = lo_base - hi[r - 1] - 1, hi[r] - lo_base + 1
        tab = nabla_w_table(dn[r - 1], dm[r - 1], q, dlo, dhi)
        new_weight = np.zeros(len(Xn))
        chunk = max(1, budget // (len(Xn) * N * N + 1))
        for start in range(0, len(Xp), chunk):
            sl = slice(start, min(start + chunk, len(Xp)))
            diffs = Xn[None, :, None, :] - Xp[sl, None, :, None]
            dets = _batched_det(tab[diffs - dlo])
            new_weight += weight[sl] @ dets
        weight = new_weight

    # last factor: det[D^(j-1-n_{p-1}) w_{dm_p}(a_p - x^{p-1}_i)]
    Xl = vec_sets[p - 2]
    last_tabs = [
        nabla_w_table(j - 1 - n[p - 2], dm[p - 1], q, lo_t, hi_t)
        for j in range(1, N + 1)
    ]
    mats = np.empty((len(Xl), N, N))
    for j in range(N):
        mats[:, :, j] = last_tabs[j][(a[p - 1] - Xl) - lo_t]
    return float(weight @ _batched_det(mats))


# ---------------------------------------------------------------------------
# summation-by-parts spot checks
# ---------------------------------------------------------------------------

def _det_from_entries(entry, N: int) -> float:
    mat = np.array([[entry(i + 1, j + 1) for j in range(N)] for i in range(N)])
    return float(np.linalg.det(mat))


def _enum_wn(N: int, lo: int, hi: int):
    return combinations_with_replacement(range(lo, hi + 1), N)


def verify_sbp(seed: int = 0, trials: int = 4) -> float:
    """Numerically check the two summation-by-parts identities.

    Random small instances (N <= 3, finitely supported ``f, g``) of

    (a)  sum_{x in W_N, x_k < A} det[D^(j-a_i) f(x_j-y_i)] det[D^(b_j-i) g(z_j-x_i)]
         = same with exponents (k-a_i) and (b_j-k), and

    (b)  sum_{z in W_N, z_N < A} det[D^(j-a_i) g(z_j-x_i)]
         = det[D^(j-1-a_i) g(A-x_i)]

    are evaluated on windows wide enough that all neglected terms vanish
    identically.  Returns the maximum absolute discrepancy found.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        N = int(rng.integers(2, 4))
        g = {int(s): float(v) for s, v in
             zip(range(0, 3), rng.uniform(0.2, 1.0, size=3))}
        f = {int(s): float(v) for s, v in
             zip(range(0, 3), rng.uniform(0.2, 1.0, size=3))}
        a_vec = [int(v) for v in rng.integers(-1, 3, size=N)]
        b_vec = [int(v) for v in rng.integers(-1, 3, size=N)]
        x_vec = sorted(int(v) for v in rng.integers(-2, 3, size=N))
        y_vec = sorted(int(v) for v in rng.integers(-2, 3, size=N))
        z_vec = sorted(int(v) for v in rng.integers(2, 7, size=N))
        A = int(rng.integers(2, 5))

        g_ops = {k: nabla_pow(g, k) for k in range(-6, N + 7)}
        f_ops = {k: nabla_pow(f, k) for k in range(-6, N + 7)}

        # identity (b)
        lo = min(x_vec) - 8
        lhs = 0.0
        for z in _enum_wn(N, lo, A - 1):
            lhs += _det_from_entries(
                lambda i, j: g_ops[j - a_vec[i - 1]](z[j - 1] - x_vec[i - 1]), N
            )
        rhs = _det_from_entries(
            lambda i, j: g_ops[j - 1 - a_vec[i - 1]](A - x_vec[i - 1]), N
        )
        worst = max(worst, abs(lhs - rhs))

        # identity (a)
        k = int(rng.integers(1, N + 1))
        lo_x = min(min(y_vec), min(x_vec)) - 8
        hi_x = max(z_vec) + 8

        def sbpa_side(expf, expg) -> float:
            total = 0.0
            for x in _enum_wn(N, lo_x, hi_x):
                if not x[k - 1] < A:
                    continue
                df = _det_from_entries(
                    lambda i, j: f_ops[expf(i, j)](x[j - 1] - y_vec[i - 1]), N
                )
                if df == 0.0:
                    continue
                dg = _det_from_entries(
                    lambda i, j: g_ops[expg(i, j)](z_vec[j - 1] - x[i - 1]), N
                )
                total += df * dg
            return total

        lhs = sbpa_side(lambda i, j: j - a_vec[i - 1], lambda i, j: b_vec[j - 1] - i)
        rhs = sbpa_side(lambda i, j: k - a_vec[i - 1], lambda i, j: b_vec[j - 1] - k)
        worst = max(worst, abs(lhs - rhs))
    return worst

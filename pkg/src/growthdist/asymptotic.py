"""Limiting multi-time law of the rescaled growth interface.

The joint law of the interface at ``p`` ordered times ``t_1 < ... < t_p``
(observation points ``x_k``, thresholds ``xi_k``) is a contour integral

    P = (1/(2 pi i))^(p-1) oint ... oint  dtheta_1 ... dtheta_(p-1)
        det(I + F(theta)) / prod_k (theta_k - 1)

over circles ``|theta_k| = r > 1``, where ``F(theta)`` is a block kernel
acting on ``L^2(-inf,0)^(p-1) (+) L^2(0,inf)``.  Every block is a linear
combination, with Laurent-polynomial coefficients in ``theta``, of seven
families of iterated line-contour integrals of the cubic-exponent weight

    G(w | Dt, Dx, Dxi) = exp(Dt w^3/3 + Dx Dt^(2/3) w^2 - Dxi Dt^(1/3) w),

evaluated on increment triples ``(Dt, Dx, Dxi)`` between two time indices
(index 0 denotes the zero base point).  Downward-decaying factors ``1/G``
live on vertical lines left of the origin (abscissas ``-d1, -d2, -d3``),
upward factors ``G`` on lines right of it (``D`` or a ladder ``D_k`` whose
up/down ordering is dictated by a sign vector ``eps``).  All kernels carry
the conjugation ``exp(mu (v - u))``, which leaves every determinant
invariant but makes each block decay fast enough to truncate.

Two independent evaluation paths are provided and cross-checked:

* ``eval_basic_kernel`` computes a family directly as a chain of node
  matrices over the line contours (rows: the ``u`` exponential and its
  line weight; couplings: Cauchy factors ``1/(a - b)`` between adjacent
  lines; columns: the ``v`` exponential).
* ``airy_form_kernel`` expands every Cauchy coupling ``1/(a-b)`` as
  ``sgn(Re(a-b)) * int_0^inf exp(-lambda sgn(Re(a-b)) (a-b)) dlambda`` and
  folds each line integral into a shifted Airy transform

      A(Dt,Dx,Dxi; w) = Dt^(-1/3) exp((2/3)Dx^3 + Dx(Dxi + w/Dt^(1/3)))
                        * Ai(Dxi + Dx^2 + w/Dt^(1/3)),

  leaving a chain of real lambda-integrals.  Couplings with negative real
  separation contribute a factor ``-1`` each; the sign bookkeeping is part
  of this module's contract and is exercised by the agreement tests.

``multitime_cdf`` integrates the Fredholm determinant over the theta
circles with the trapezoidal rule (exponentially accurate for Laurent
series) and doubles all resolutions until two successive levels agree.
The single-time marginal is the GUE Tracy-Widom law, exposed directly as
``tracy_widom`` together with the contour-form kernel ``two_point_kernel``
satisfying ``det(I - K) = F_GUE(xi + x^2)``.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import BudgetError, ConvergenceError, SchemaError
from .integrands import airy_ai, airy_kernel_matrix, circle, composite_gl, log_script_g
from .linalg import NystromGrid, block_grid, lu_det, nystrom_det
from .params import (
    LimitParams,
    admissible_eps,
    big_theta,
    delta_txxi,
    eps_sign_exponent,
    mu_bound,
    theta_profile,
)

__all__ = [
    "LimitSettings",
    "det_settings",
    "AsymptoticResult",
    "d_for_eps",
    "check_d_assignment",
    "eval_basic_kernel",
    "airy_form_kernel",
    "assemble_F",
    "fredholm_det_F",
    "multitime_cdf",
    "tracy_widom",
    "two_point_kernel",
    "single_time_cdf",
]


# ---------------------------------------------------------------------------
# settings
# ---------------------------------------------------------------------------

_QC_FLOOR = 0.15          # minimum Gaussian decay rate enforced on any line
_HW_SIGMA = 6.5           # line half-width in units of 1/sqrt(decay rate)
_NODES_PER_RADIAN = 3.4 / (2.0 * math.pi)
_MAX_LINE_NODES = 6000
_INTERIOR_VMAX = 2.0      # oscillation allowance for lines with no u/v factor
_AIRY_ARG_FLOOR = -58.0   # deepest Airy argument the evaluator certifies


@dataclass(frozen=True)
class LimitSettings:
    """Contour layout and resolution controls for the limit kernels.

    ``d1, d2, d3`` are the (positive) distances of the decaying lines left
    of the origin, ``d_single`` the abscissa of a lone growing line, and
    ``ladder_lo/ladder_hi`` the interval into which the eps-ordered ladder
    of growing lines is rescaled.  ``mu`` overrides the conjugation rate
    (default: the admissibility bound of the instance plus one).
    """

    d1: float = 0.8
    d2: float = 1.6
    d3: float = 0.8
    d_single: float = 1.0
    ladder_lo: float = 0.5
    ladder_hi: float = 2.5
    extent: float = 12.0
    block_nodes: int = 48
    theta_radius: float = 2.0
    theta_nodes: int | None = None
    mu: float | None = None
    tol: float = 2e-6
    max_levels: int = 3
    lam_max: float = 40.0
    lam_nodes: int = 160

    def __post_init__(self):
        if min(self.d1, self.d2, self.d3, self.d_single) <= 0:
            raise SchemaError("contour distances must be positive")
        if not (self.d1 < self.d2 and self.d3 < self.d2):
            raise SchemaError("need d1 < d2 and d3 < d2")
        if not (0 < self.ladder_lo < self.ladder_hi):
            raise SchemaError("need 0 < ladder_lo < ladder_hi")
        if self.extent <= 0 or self.block_nodes < 8:
            raise SchemaError("invalid grid controls")
        if self.theta_radius <= 1.0:
            raise SchemaError("theta_radius must exceed 1")
        if self.mu is not None and self.mu < 0:
            raise SchemaError("mu must be non-negative")


def det_settings() -> LimitSettings:
    """Contour layout tuned for determinants on wide Nystrom grids.

    Entries of a line-contour kernel at coordinate magnitude ``L`` carry
    roundoff amplified by ``exp(d L)`` relative to fully cancelled true
    values, so determinant assembly over ``|u| <= extent`` uses smaller
    abscissas than the pointwise defaults; analyticity makes the value
    itself independent of the choice.
    """
    return LimitSettings(
        d1=0.35, d2=0.70, d3=0.35, d_single=0.45, ladder_lo=0.25, ladder_hi=1.05
    )


def _resolve_mu(inst: LimitParams, settings: LimitSettings) -> float:
    if settings.mu is not None:
        return float(settings.mu)
    if inst.mu is not None:
        return float(inst.mu)
    return mu_bound(inst.t, inst.x) + 1.0


# ---------------------------------------------------------------------------
# eps-ordered ladder of growing-line abscissas
# ---------------------------------------------------------------------------

def check_d_assignment(
    assignment: dict[int, float], eps: Sequence[int], k1: int, k2: int
) -> None:
    """Validate a ladder ``{k: D_k for k in k1+1..k2}`` against ``eps``.

    Requires distinct positive values with ``D_k < D_{k+1}`` exactly when
    ``eps_k = 1``; raises ``ValueError`` otherwise.
    """
    vals = [assignment[k] for k in range(k1 + 1, k2 + 1)]
    if any(v <= 0 for v in vals):
        raise ValueError("ladder values must be positive")
    if len(set(vals)) != len(vals):
        raise ValueError("ladder values must be distinct")
    for k in range(k1 + 1, k2):
        up = assignment[k] < assignment[k + 1]
        if up != (eps[k - 1] == 1):
            raise ValueError(
                f"ladder ordering violates eps at link {k}: "
                f"D_{k}={assignment[k]:g}, D_{k + 1}={assignment[k + 1]:g}, "
                f"eps_{k}={eps[k - 1]}"
            )


def d_for_eps(
    eps: Sequence[int], k1: int, k2: int, lo: float = 0.5, hi: float = 2.5
) -> dict[int, float]:
    """Abscissas ``{k: D_k}`` for the growing lines ``k in k1+1..k2``.

    Walks the binary-offset rule ``D_1 = 2^p``, ``D_{k+1} = D_k + 2^k`` if
    ``eps_k = 1`` else ``- 2^k`` (which realizes every ordering exactly
    once with distinct values), then rescales the window affinely into
    ``[lo, hi]`` so that ``exp(t D^3/3)`` stays in floating-point range.
    The affine map preserves the orderings, which is all the integrals
    depend on.
    """
    eps = tuple(int(e) for e in eps)
    if any(e not in (1, 2) for e in eps):
        raise ValueError("eps entries must be 1 or 2")
    p = len(eps) + 1
    if not 0 <= k1 < k2 <= p:
        raise ValueError(f"need 0 <= k1 < k2 <= {p}, got ({k1}, {k2})")
    ladder = [2.0 ** p]
    for k in range(1, p):
        step = 2.0 ** k
        ladder.append(ladder[-1] + (step if eps[k - 1] == 1 else -step))
    window = ladder[k1:k2]  # raw D_{k1+1} .. D_{k2}
    lov, hiv = min(window), max(window)
    if hiv == lov:
        vals = [0.5 * (lo + hi)]
    else:
        vals = [lo + (hi - lo) * (d - lov) / (hiv - lov) for d in window]
    out = {k1 + 1 + i: v for i, v in enumerate(vals)}
    check_d_assignment(out, eps, k1, k2)
    return out


# ---------------------------------------------------------------------------
# line-contour kernel evaluation
# ---------------------------------------------------------------------------

def _vmax_bucket(arr: np.ndarray) -> float:
    if arr.size == 0:
        return 1.0
    return float(math.ceil(np.max(np.abs(arr)) + 1.0))


class _LimitKernels:
    """Evaluates the basic kernel families on coordinate arrays.

    Lines are truncated where the Gaussian decay of ``G^(+-1)`` reaches
    ``exp(-_HW_SIGMA^2)`` and sampled densely enough for the accumulated
    cubic phase plus the ``exp(i y u)`` rotation; built lines are cached
    per (anchor, triple, oscillation budget).  If an instance's tilt
    ``Dx`` would push some line's decay rate below ``_QC_FLOOR``, every
    abscissa is scaled up by a common factor, which preserves all the
    pairwise orderings the kernels depend on.
    """

    def __init__(self, inst: LimitParams, settings: LimitSettings):
        self.inst = inst
        self.p = inst.p
        self.mu = _resolve_mu(inst, settings)
        scale = self._anchor_scale(settings)
        if scale > 1.0:
            settings = replace(
                settings,
                d1=settings.d1 * scale,
                d2=settings.d2 * scale,
                d3=settings.d3 * scale,
                d_single=settings.d_single * scale,
                ladder_lo=settings.ladder_lo * scale,
                ladder_hi=settings.ladder_hi * scale,
            )
        self.s = settings
        self._lines: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}

    # -- geometry ---------------------------------------------------------

    def trip(self, k1: int, k2: int) -> tuple[float, float, float]:
        return delta_txxi(self.inst.t, self.inst.x, self.inst.xi, k1, k2)

    def _anchor_scale(self, s: LimitSettings) -> float:
        need = 1.0
        d_min = min(s.d1, s.d2, s.d3)
        big_d_min = min(s.d_single, s.ladder_lo)
        for k1 in range(0, self.p):
            for k2 in range(k1 + 1, self.p + 1):
                dt, dx, _ = self.trip(k1, k2)
                shift = dx * dt ** (2.0 / 3.0)
                need = max(
                    need,
                    (_QC_FLOOR + shift) / (dt * d_min),
                    (_QC_FLOOR - shift) / (dt * big_d_min),
                )
        return need

    def _line(
        self, anchor: float, trip: tuple[float, float, float], vmax: float, inverse: bool
    ) -> tuple[np.ndarray, np.ndarray]:
        key = (round(anchor, 12), trip, vmax, inverse)
        hit = self._lines.get(key)
        if hit is not None:
            return hit
        dt, dx, dxi = trip
        qc = dt * abs(anchor) + (dx * dt ** (2.0 / 3.0)) * (1.0 if anchor > 0 else -1.0)
        if qc <= 0.02:
            raise ConvergenceError(
                f"line at {anchor:g} has no Gaussian decay (rate {qc:g})"
            )
        hw = _HW_SIGMA / math.sqrt(qc)
        phase = (2.0 / 3.0) * dt * hw ** 3 + 2.0 * hw * (
            dt * anchor * anchor
            + 2.0 * abs(anchor * dx) * dt ** (2.0 / 3.0)
            + abs(dxi) * dt ** (1.0 / 3.0)
            + vmax
        )
        n = int(max(96, min(_MAX_LINE_NODES, _NODES_PER_RADIAN * phase + 24)))
        y, w = composite_gl(-hw, hw, n, panel_size=12)
        nodes = anchor + 1j * y
        lg = log_script_g(nodes, dt, dx, dxi)
        wf = (w / (2.0 * math.pi)) * np.exp(-lg if inverse else lg)
        self._lines[key] = (nodes, wf)
        return nodes, wf

    # -- chain pieces ------------------------------------------------------

    def _conj(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.exp(self.mu * (v[None, :] - u[:, None]))

    @staticmethod
    def _rows(u: np.ndarray, nodes: np.ndarray, wf: np.ndarray) -> np.ndarray:
        """``exp(-node * u)`` row factor with the line weight folded in."""
        return np.exp(-np.outer(u, nodes)) * wf[None, :]

    @staticmethod
    def _cols(nodes: np.ndarray, wf: np.ndarray, v: np.ndarray) -> np.ndarray:
        """``exp(node * v)`` column factor with the line weight folded in."""
        return np.exp(np.outer(nodes, v)) * wf[:, None]

    @staticmethod
    def _couple(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Cauchy coupling ``1/(a_i - b_j)`` between adjacent lines."""
        return 1.0 / (a[:, None] - b[None, :])

    def _ladder(
        self, k1: int, k2: int, epsw: tuple[int, ...]
    ) -> dict[int, float]:
        """Growing-line abscissas for the window ``k1+1..k2``.

        ``epsw`` holds the interior signs ``eps_{k1+1}..eps_{k2-1}``; the
        rescaled ladder depends on nothing else, so the remaining entries
        are padded with ones.
        """
        full = [1] * (self.p - 1)
        for j, e in enumerate(epsw):
            full[k1 + j] = e
        return d_for_eps(full, k1, k2, self.s.ladder_lo, self.s.ladder_hi)

    # -- families ----------------------------------------------------------

    def family1(self, sbot: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Single up/down pair: rows on the growing line, columns decaying."""
        zn, zw = self._line(
            self.s.d_single, self.trip(self.p - 1, self.p), _vmax_bucket(u), False
        )
        cn, cw = self._line(-self.s.d1, self.trip(sbot, self.p), _vmax_bucket(v), True)
        mat = self._rows(u, zn, zw) @ self._couple(zn, cn) @ self._cols(cn, cw, v)
        return mat * self._conj(u, v)

    def family2(
        self, k: int, rtop: int, sbot: int, u: np.ndarray, v: np.ndarray
    ) -> np.ndarray:
        """Two decaying lines coupled once."""
        an, aw = self._line(-self.s.d1, self.trip(k, rtop), _vmax_bucket(u), True)
        bn, bw = self._line(-self.s.d2, self.trip(sbot, k), _vmax_bucket(v), True)
        mat = self._rows(u, an, aw) @ self._couple(an, bn) @ self._cols(bn, bw, v)
        return mat * self._conj(u, v)

    def family3(self, k: int, sbot: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Growing line, then two decaying lines."""
        zn, zw = self._line(
            self.s.d_single, self.trip(self.p - 1, self.p), _vmax_bucket(u), False
        )
        mn, mw = self._line(-self.s.d2, self.trip(k, self.p), _INTERIOR_VMAX, True)
        cn, cw = self._line(-self.s.d3, self.trip(sbot, k), _vmax_bucket(v), True)
        chain = self._rows(u, zn, zw) @ (self._couple(zn, mn) * mw[None, :])
        mat = chain @ self._couple(mn, cn) @ self._cols(cn, cw, v)
        return mat * self._conj(u, v)

    def family4(
        self, k1: int, rtop: int, k2: int, sbot: int, u: np.ndarray, v: np.ndarray
    ) -> np.ndarray:
        """Three decaying lines coupled in sequence."""
        an, aw = self._line(-self.s.d1, self.trip(k1, rtop), _vmax_bucket(u), True)
        mn, mw = self._line(-self.s.d2, self.trip(k2, k1), _INTERIOR_VMAX, True)
        cn, cw = self._line(-self.s.d3, self.trip(sbot, k2), _vmax_bucket(v), True)
        chain = self._rows(u, an, aw) @ (self._couple(an, mn) * mw[None, :])
        mat = chain @ self._couple(mn, cn) @ self._cols(cn, cw, v)
        return mat * self._conj(u, v)

    def _ladder_chain(
        self, k1: int, k2: int, epsw: tuple[int, ...], rtop: int, u: np.ndarray,
        final_vmax: float,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Decaying row line plus the growing ladder up to (excl.) weights
        of the last rung; returns (chain, last nodes, last weights)."""
        an, aw = self._line(-self.s.d1, self.trip(k1, rtop), _vmax_bucket(u), True)
        ladder = self._ladder(k1, k2, epsw)
        chain = self._rows(u, an, aw)
        prev_nodes = an
        for k in range(k1 + 1, k2 + 1):
            vmax = final_vmax if k == k2 else _INTERIOR_VMAX
            zn, zw = self._line(ladder[k], self.trip(k - 1, k), vmax, False)
            coup = self._couple(zn, prev_nodes) if k == k1 + 1 else self._couple(
                prev_nodes, zn
            )
            if k == k1 + 1:
                # displayed coupling is 1/(z_{k1+1} - zeta_1)
                chain = chain @ coup.T
            else:
                chain = chain @ coup
            if k < k2:
                chain = chain * zw[None, :]
            prev_nodes = zn
            last_w = zw
        return chain, prev_nodes, last_w

    def family5(
        self, k1: int, k2: int, epsw: tuple[int, ...], rtop: int,
        u: np.ndarray, v: np.ndarray,
    ) -> np.ndarray:
        """Decaying line into the ladder; the last rung carries ``v``."""
        chain, zn, zw = self._ladder_chain(k1, k2, epsw, rtop, u, _vmax_bucket(v))
        mat = chain @ self._cols(zn, zw, v)
        return mat * self._conj(u, v)

    def family6(
        self, k1: int, k2: int, epsw: tuple[int, ...], rtop: int, sbot: int,
        u: np.ndarray, v: np.ndarray,
    ) -> np.ndarray:
        """Ladder closed by a final decaying line carrying ``v``."""
        chain, zn, zw = self._ladder_chain(k1, k2, epsw, rtop, u, _INTERIOR_VMAX)
        chain = chain * zw[None, :]
        cn, cw = self._line(-self.s.d2, self.trip(sbot, k2), _vmax_bucket(v), True)
        mat = chain @ self._couple(zn, cn) @ self._cols(cn, cw, v)
        return mat * self._conj(u, v)

    def family7(
        self, k1: int, k2: int, k3: int, epsw: tuple[int, ...], rtop: int, sbot: int,
        u: np.ndarray, v: np.ndarray,
    ) -> np.ndarray:
        """Ladder closed by two decaying lines."""
        chain, zn, zw = self._ladder_chain(k1, k2, epsw, rtop, u, _INTERIOR_VMAX)
        chain = chain * zw[None, :]
        mn, mw = self._line(-self.s.d2, self.trip(k3, k2), _INTERIOR_VMAX, True)
        cn, cw = self._line(-self.s.d3, self.trip(sbot, k3), _vmax_bucket(v), True)
        chain = chain @ (self._couple(zn, mn) * mw[None, :])
        mat = chain @ self._couple(mn, cn) @ self._cols(cn, cw, v)
        return mat * self._conj(u, v)

    def evaluate(self, family: int, kw: dict, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        builder = getattr(self, f"family{family}")
        return builder(u=u, v=v, **kw)


# ---------------------------------------------------------------------------
# index resolution shared by both evaluation paths
# ---------------------------------------------------------------------------

def _need(indices: dict, family: int, *names: str) -> list[int]:
    out = []
    for name in names:
        if name not in indices or indices[name] is None:
            raise ValueError(f"family {family} requires index '{name}'")
        out.append(indices[name])
    return out


def _eps_window(eps: Sequence[int], k1: int, k2: int, p: int) -> tuple[int, ...]:
    eps = tuple(int(e) for e in eps)
    if len(eps) != p - 1 or any(e not in (1, 2) for e in eps):
        raise ValueError(f"eps must have length {p - 1} with entries in {{1, 2}}")
    return tuple(eps[k - 1] for k in range(k1 + 1, k2))


def _resolve_family(
    family: int, indices: dict, r: int, s: int, p: int, apply_indicator: bool
) -> dict | None:
    """Map raw indices to builder keyword arguments.

    Returns ``None`` when the family's indicator vanishes (only in
    indicator mode); raises ``ValueError`` when the requested increment
    triples are not well-formed.
    """
    idx = dict(indices or {})
    if apply_indicator:
        if not (1 <= r <= p and 1 <= s <= p):
            raise ValueError(f"block indices must lie in 1..{p}")
        rtop, sbot = min(r, p - 1), min(s, p - 1)
    else:
        rtop, sbot = r, s
    if family == 1:
        if apply_indicator:
            if r != p:
                return None
        else:
            sbot = s
        if not 0 <= sbot < p:
            raise ValueError("family 1 needs 0 <= s < p")
        return {"sbot": sbot}
    if family == 2:
        (k,) = _need(idx, 2, "k")
        if apply_indicator and not (s < k < rtop):
            return None
        if not (0 <= sbot < k < rtop <= p):
            raise ValueError("family 2 needs s < k < r")
        return {"k": k, "rtop": rtop, "sbot": sbot}
    if family == 3:
        (k,) = _need(idx, 3, "k")
        if apply_indicator and not (r == p and s < k < p):
            return None
        if not (0 <= sbot < k < p):
            raise ValueError("family 3 needs s < k < p")
        return {"k": k, "sbot": sbot}
    if family == 4:
        k1, k2 = _need(idx, 4, "k1", "k2")
        if apply_indicator and not (k1 < rtop and s < k2 < k1):
            return None
        if not (0 <= sbot < k2 < k1 < rtop <= p):
            raise ValueError("family 4 needs s < k2 < k1 < r")
        return {"k1": k1, "rtop": rtop, "k2": k2, "sbot": sbot}
    if family in (5, 6, 7):
        k1, k2 = _need(idx, family, "k1", "k2")
        eps = idx.get("eps")
        if eps is None:
            raise ValueError(f"family {family} requires index 'eps'")
        if not (0 <= k1 < k2 <= p):
            raise ValueError("need 0 <= k1 < k2 <= p")
        epsw = _eps_window(eps, k1, k2, p)
        if family == 5:
            if apply_indicator and not (k1 < rtop and s == k2 < p):
                return None
            if not k1 < rtop <= p:
                raise ValueError("family 5 needs k1 < r")
            return {"k1": k1, "k2": k2, "epsw": epsw, "rtop": rtop}
        if family == 6:
            if apply_indicator and not (k1 < rtop and sbot < k2):
                return None
            if not (k1 < rtop <= p and 0 <= sbot < k2):
                raise ValueError("family 6 needs k1 < r and s < k2")
            return {"k1": k1, "k2": k2, "epsw": epsw, "rtop": rtop, "sbot": sbot}
        (k3,) = _need(idx, 7, "k3")
        if apply_indicator and not (k1 < rtop and s < k3 < k2):
            return None
        if not (k1 < rtop <= p and 0 <= sbot < k3 < k2):
            raise ValueError("family 7 needs k1 < r and s < k3 < k2")
        return {"k1": k1, "k2": k2, "k3": k3, "epsw": epsw, "rtop": rtop, "sbot": sbot}
    raise ValueError(f"family must lie in 1..7, got {family}")


def eval_basic_kernel(
    family: int,
    indices: dict | None,
    r: int,
    u,
    s: int,
    v,
    instance: LimitParams,
    *,
    settings: LimitSettings | None = None,
    apply_indicator: bool = True,
):
    """One basic kernel family evaluated by iterated line contours.

    ``indices`` supplies the family's inner indices (``k``, ``k1``, ``k2``,
    ``k3``, full ``eps``).  With ``apply_indicator=True`` (default), ``r``
    and ``s`` are block labels in ``1..p``: the family's indicator is
    applied (returning exact zero where it vanishes) and the extreme time
    indices are clamped to ``min(., p-1)`` as the families prescribe.
    With ``apply_indicator=False``, ``r`` and ``s`` are used verbatim as
    time indices, which exposes every family shape at any ``p`` for
    cross-checks.  ``u``/``v`` may be scalars or 1-d arrays; the block
    convention places ``u < 0`` for blocks below ``p`` and ``u > 0`` on
    block ``p``.
    """
    inst = instance
    settings = settings or LimitSettings()
    uarr = np.atleast_1d(np.asarray(u, dtype=float))
    varr = np.atleast_1d(np.asarray(v, dtype=float))
    kw = _resolve_family(family, indices or {}, r, s, inst.p, apply_indicator)
    if kw is None:
        mat = np.zeros((len(uarr), len(varr)), dtype=complex)
    else:
        kern = _LimitKernels(inst, settings)
        mat = kern.evaluate(family, kw, uarr, varr)
    if np.isscalar(u) and np.isscalar(v):
        return complex(mat[0, 0])
    return mat


# ---------------------------------------------------------------------------
# Airy-operator oracle forms
# ---------------------------------------------------------------------------

class _AiryFac(NamedTuple):
    trip: tuple[float, float, float]
    reflect: bool
    cl: float
    cr: float


def _airy_transform(
    trip: tuple[float, float, float], reflect: bool, w: np.ndarray
) -> np.ndarray:
    """Shifted Airy transform of the cubic weight along one line.

    ``A(trip; w) = t^(-1/3) exp((2/3)x^3 + x(xi + w t^(-1/3)))
    Ai(xi + x^2 + w t^(-1/3))``; ``reflect`` flips the sign of the tilt,
    which converts a decaying line into a growing one.
    """
    dt, dx, dxi = trip
    if reflect:
        dx = -dx
    t13 = dt ** (1.0 / 3.0)
    shift = w / t13
    arg = dxi + dx * dx + shift
    pref = np.exp((2.0 / 3.0) * dx ** 3 + dx * (dxi + shift)) / t13
    return pref * airy_ai(arg)


def _airy_factors(
    family: int, kw: dict, kern_trip: Callable[[int, int], tuple[float, float, float]],
    p: int,
) -> tuple[list[_AiryFac], float]:
    """Factor chain and overall sign for a family's Airy-operator form.

    Each factor links two adjacent chain variables (u, the lambda's, v)
    with coefficients ``(cl, cr)``: its value is ``A(trip; cl*a + cr*b)``.
    Couplings whose real separation is negative contribute ``-1`` to the
    sign; for the ladder those are exactly the interior links with
    ``eps_k = 1``, and the two-decaying-line couplings of the three-line
    families contribute one ``-1`` each.
    """
    if family == 1:
        return (
            [
                _AiryFac(kern_trip(p - 1, p), False, 1.0, 1.0),
                _AiryFac(kern_trip(kw["sbot"], p), True, 1.0, 1.0),
            ],
            1.0,
        )
    if family == 2:
        return (
            [
                _AiryFac(kern_trip(kw["k"], kw["rtop"]), True, -1.0, -1.0),
                _AiryFac(kern_trip(kw["sbot"], kw["k"]), True, 1.0, 1.0),
            ],
            1.0,
        )
    if family == 3:
        return (
            [
                _AiryFac(kern_trip(p - 1, p), False, 1.0, 1.0),
                _AiryFac(kern_trip(kw["k"], p), True, 1.0, 1.0),
                _AiryFac(kern_trip(kw["sbot"], kw["k"]), True, -1.0, 1.0),
            ],
            -1.0,
        )
    if family == 4:
        return (
            [
                _AiryFac(kern_trip(kw["k1"], kw["rtop"]), True, -1.0, -1.0),
                _AiryFac(kern_trip(kw["k2"], kw["k1"]), True, 1.0, 1.0),
                _AiryFac(kern_trip(kw["sbot"], kw["k2"]), True, -1.0, 1.0),
            ],
            -1.0,
        )
    # ladder families: couplings along the window carry tau_k = +1 for a
    # downward step (eps_k = 2) and -1 for an upward one (eps_k = 1)
    k1, k2 = kw["k1"], kw["k2"]
    epsw = kw["epsw"]
    tau = {k1: -1.0}
    for j, e in enumerate(epsw):
        tau[k1 + 1 + j] = 1.0 if e == 2 else -1.0
    sign = 1.0
    for k in range(k1 + 1, k2):
        sign *= tau[k]
    factors = [_AiryFac(kern_trip(k1, kw["rtop"]), True, -1.0, 1.0)]
    for k in range(k1 + 1, k2):
        factors.append(_AiryFac(kern_trip(k - 1, k), False, -tau[k - 1], tau[k]))
    if family == 5:
        factors.append(_AiryFac(kern_trip(k2 - 1, k2), False, -tau[k2 - 1], -1.0))
        return factors, sign
    factors.append(_AiryFac(kern_trip(k2 - 1, k2), False, -tau[k2 - 1], 1.0))
    if family == 6:
        factors.append(_AiryFac(kern_trip(kw["sbot"], k2), True, 1.0, 1.0))
        return factors, sign
    factors.append(_AiryFac(kern_trip(kw["k3"], k2), True, 1.0, 1.0))
    factors.append(_AiryFac(kern_trip(kw["sbot"], kw["k3"]), True, -1.0, 1.0))
    return factors, -sign


def _chain_lam_max(
    factors: list[_AiryFac], u: np.ndarray, v: np.ndarray, lam_max: float
) -> float:
    """Largest lambda cutoff keeping every Airy argument certified.

    The chain integrand decays superexponentially in each lambda through
    whichever factor grows with it, so shrinking the cutoff to protect the
    oscillatory factors costs only ``Ai(cutoff)``-sized truncation error.
    """
    m = len(factors) - 1
    for cap in (lam_max, 32.0, 26.0, 22.0, 18.0):
        ok = True
        for i, fac in enumerate(factors):
            left = (float(np.min(u)), float(np.max(u))) if i == 0 else (0.0, cap)
            right = (float(np.min(v)), float(np.max(v))) if i == m else (0.0, cap)
            wmin = min(fac.cl * left[0], fac.cl * left[1]) + min(
                fac.cr * right[0], fac.cr * right[1]
            )
            dt, dx, dxi = fac.trip
            if fac.reflect:
                dx = -dx
            arg = dxi + dx * dx + wmin / dt ** (1.0 / 3.0)
            if arg < _AIRY_ARG_FLOOR:
                ok = False
                break
        if ok:
            return cap
    raise ConvergenceError("Airy-form arguments exceed the evaluator's domain")


def airy_form_kernel(
    family: int,
    indices: dict | None,
    r: int,
    u,
    s: int,
    v,
    instance: LimitParams,
    *,
    settings: LimitSettings | None = None,
    apply_indicator: bool = True,
):
    """Airy-operator form of a basic kernel family (independent oracle).

    Expands every Cauchy coupling of the family as a real integral over a
    decay variable and evaluates the resulting chain of shifted Airy
    transforms by Gauss-Legendre quadrature on ``[0, lam_max]``.  Index
    handling (indicators, clamping, bare mode) matches
    :func:`eval_basic_kernel`; agreement between the two paths validates
    both the contour layout and the coupling signs.
    """
    inst = instance
    settings = settings or LimitSettings()
    uarr = np.atleast_1d(np.asarray(u, dtype=float))
    varr = np.atleast_1d(np.asarray(v, dtype=float))
    kw = _resolve_family(family, indices or {}, r, s, inst.p, apply_indicator)
    if kw is None:
        mat = np.zeros((len(uarr), len(varr)), dtype=complex)
    else:
        kern = _LimitKernels(inst, settings)
        factors, sign = _airy_factors(family, kw, kern.trip, inst.p)
        cap = _chain_lam_max(factors, uarr, varr, settings.lam_max)
        lam, lw = composite_gl(0.0, cap, settings.lam_nodes, panel_size=12)
        grids = [uarr] + [lam] * (len(factors) - 1) + [varr]
        mat = None
        for i, fac in enumerate(factors):
            a, b = grids[i], grids[i + 1]
            block = _airy_transform(fac.trip, fac.reflect, fac.cl * a[:, None] + fac.cr * b[None, :])
            if i < len(factors) - 1:
                block = block * lw[None, :]
            mat = block if mat is None else mat @ block
        mat = sign * mat * np.exp(kern.mu * (varr[None, :] - uarr[:, None]))
    if np.isscalar(u) and np.isscalar(v):
        return complex(mat[0, 0])
    return mat


# ---------------------------------------------------------------------------
# assembly of F(theta)
# ---------------------------------------------------------------------------

class _Term(NamedTuple):
    family: int
    kw: dict
    coef: Callable[[tuple[complex, ...]], complex]


def _block_terms(p: int, r: int, s: int) -> list[_Term]:
    """All weighted kernel terms contributing to block ``(r, s)``.

    Implements the five sums entering ``F = -F0 + F1 + F2 - F3 - F4``:
    the two-decaying-line family with merged coefficient
    ``Theta(r|k) - (1 + Theta(r|k)) (1 + Theta(k|s))`` (from ``-F0 + F1``),
    the three-decaying-line family with ``-Theta(r|k1)(1 + Theta(k2|s))``
    (from ``-F3``), and for every admissible ``(k1, k2, eps)`` the signed
    ``theta(r|eps)`` ladder terms of ``F2`` plus the bracketed corrections
    of ``-F4`` (a free ``k3``, with boundary replacements when ``k2 = p``
    or ``k3 = p``).
    """
    rtop, sbot = min(r, p - 1), min(s, p - 1)
    out: list[_Term] = []

    for k in range(0, p + 1):
        if s < k < rtop:
            def coef(th, r=r, s=s, k=k):
                tr = big_theta(r, k, th, p)
                ts = big_theta(k, s, th, p)
                return tr - (1.0 + tr) * (1.0 + ts)

            out.append(_Term(2, {"k": k, "rtop": rtop, "sbot": s}, coef))

    for k1 in range(0, p + 1):
        for k2 in range(0, p + 1):
            if k1 < rtop and s < k2 < k1:
                def coef(th, r=r, s=s, k1=k1, k2=k2):
                    return -big_theta(r, k1, th, p) * (
                        1.0 + big_theta(k2, s, th, p)
                    )

                out.append(
                    _Term(4, {"k1": k1, "rtop": rtop, "k2": k2, "sbot": s}, coef)
                )

    for k1 in range(0, p + 1):
        for k2 in range(k1 + 1, p + 1):
            for eps in admissible_eps(k1, k2, p):
                sgn = (-1.0) ** (
                    eps_sign_exponent(eps, k1, k2, p) + (1 if k2 == p else 0)
                )
                epsw = tuple(eps[k - 1] for k in range(k1 + 1, k2))

                def base(th, r=r, eps=eps, sgn=sgn):
                    return sgn * theta_profile(r, eps, th)

                if k1 < rtop and s == k2 < p:
                    out.append(
                        _Term(5, {"k1": k1, "k2": k2, "epsw": epsw, "rtop": rtop}, base)
                    )
                if k1 < rtop and sbot < k2:
                    out.append(
                        _Term(
                            6,
                            {"k1": k1, "k2": k2, "epsw": epsw, "rtop": rtop,
                             "sbot": sbot},
                            base,
                        )
                    )
                if k1 == p - 1 and k2 == p and r == p:
                    out.append(_Term(1, {"sbot": sbot}, base))

                for k3 in range(0, p + 1):
                    if k1 < rtop and s < k3 < k2:
                        def coef(th, s=s, k3=k3, base=base):
                            return -base(th) * (1.0 + big_theta(k3, s, th, p))

                        out.append(
                            _Term(
                                7,
                                {"k1": k1, "k2": k2, "k3": k3, "epsw": epsw,
                                 "rtop": rtop, "sbot": s},
                                coef,
                            )
                        )
                    if k2 == p and k3 == p - 1 and k1 < rtop and s < p - 1:
                        def coef(th, s=s, base=base):
                            return base(th) * (1.0 + big_theta(p, s, th, p))

                        out.append(
                            _Term(
                                7,
                                {"k1": k1, "k2": p, "k3": p - 1, "epsw": epsw,
                                 "rtop": rtop, "sbot": s},
                                coef,
                            )
                        )
                    if k2 < p and k3 == p and k1 < rtop and sbot < k2:
                        def coef(th, s=s, k2=k2, base=base):
                            return -base(th) * (1.0 + big_theta(k2, s, th, p))

                        out.append(
                            _Term(
                                6,
                                {"k1": k1, "k2": k2, "epsw": epsw, "rtop": rtop,
                                 "sbot": sbot},
                                coef,
                            )
                        )
                    if k1 == p - 1 and k2 == p and r == p and s < k3 < p:
                        def coef(th, s=s, k3=k3, base=base):
                            return -base(th) * (1.0 + big_theta(k3, s, th, p))

                        out.append(_Term(3, {"k": k3, "sbot": s}, coef))
                    if (
                        k1 == p - 1 and k2 == p and k3 == p - 1 and r == p
                        and s < p - 1
                    ):
                        def coef(th, s=s, base=base):
                            return base(th) * (1.0 + big_theta(p, s, th, p))

                        out.append(_Term(3, {"k": p - 1, "sbot": s}, coef))
    return out


def assemble_F(
    theta,
    r: int,
    u,
    s: int,
    v,
    instance: LimitParams,
    *,
    settings: LimitSettings | None = None,
):
    """Pointwise block ``F(theta)(r, u; s, v)`` of the assembled kernel."""
    inst = instance
    settings = settings or LimitSettings()
    th = tuple(complex(z) for z in np.atleast_1d(theta))
    if len(th) != inst.p - 1:
        raise SchemaError(f"theta must have length {inst.p - 1}")
    uarr = np.atleast_1d(np.asarray(u, dtype=float))
    varr = np.atleast_1d(np.asarray(v, dtype=float))
    kern = _LimitKernels(inst, settings)
    total = np.zeros((len(uarr), len(varr)), dtype=complex)
    for term in _block_terms(inst.p, r, s):
        c = term.coef(th)
        if abs(c) < 1e-300:
            continue
        total += c * kern.evaluate(term.family, term.kw, uarr, varr)
    if np.isscalar(u) and np.isscalar(v):
        return complex(total[0, 0])
    return total


class _LimitAssembler:
    """Caches the theta-independent kernel matrices on a Nystrom grid.

    Each block ``(r, s)`` is a theta-weighted sum of basic-family matrices;
    distinct terms frequently share the same matrix (same family, same
    resolved indices, same coordinate blocks), so bases are stored once
    and referenced by groups of coefficient functions.
    """

    def __init__(
        self, inst: LimitParams, settings: LimitSettings, grid: NystromGrid,
        deadline: float | None = None,
    ):
        self.kern = _LimitKernels(inst, settings)
        self.grid = grid
        self.p = inst.p
        self.bases: list[np.ndarray] = []
        self.groups: list[tuple[int, int, int, list]] = []
        cache: dict[tuple, int] = {}
        for r in range(1, self.p + 1):
            uarr = grid.block(r)
            for s in range(1, self.p + 1):
                varr = grid.block(s)
                bucket: dict[int, list] = {}
                for term in _block_terms(self.p, r, s):
                    key = (
                        term.family,
                        tuple(sorted(term.kw.items())),
                        r == self.p,
                        s == self.p,
                    )
                    if key not in cache:
                        if deadline is not None and time.monotonic() > deadline:
                            raise BudgetError("time budget exhausted during assembly")
                        cache[key] = len(self.bases)
                        self.bases.append(
                            self.kern.evaluate(term.family, term.kw, uarr, varr)
                        )
                    bucket.setdefault(cache[key], []).append(term.coef)
                for idx, coefs in bucket.items():
                    self.groups.append((r, s, idx, coefs))

    def matrix(self, th: tuple[complex, ...]) -> np.ndarray:
        n = len(self.grid)
        out = np.zeros((n, n), dtype=complex)
        for r, s, idx, coefs in self.groups:
            w = sum(c(th) for c in coefs)
            if abs(w) < 1e-300:
                continue
            out[self.grid.slices[r - 1], self.grid.slices[s - 1]] += w * self.bases[idx]
        return out

    def det(self, th: tuple[complex, ...]) -> complex:
        return nystrom_det(self.matrix(th), self.grid)


def fredholm_det_F(
    theta,
    instance: LimitParams,
    grid: NystromGrid | None = None,
    *,
    settings: LimitSettings | None = None,
) -> complex:
    """``det(I + F(theta))`` on the direct-sum space via Nystrom quadrature."""
    inst = instance
    settings = settings or det_settings()
    th = tuple(complex(z) for z in np.atleast_1d(theta))
    if len(th) != inst.p - 1:
        raise SchemaError(f"theta must have length {inst.p - 1}")
    if grid is None:
        grid = block_grid(inst.p, settings.extent, settings.block_nodes)
    return _LimitAssembler(inst, settings, grid).det(th)


# ---------------------------------------------------------------------------
# the theta integral
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticResult:
    """Value and diagnostics of a limit-law evaluation."""

    value: float
    imag_part: float
    theta_nodes: int
    grid_nodes: int
    levels: int
    converged: bool
    runtime_ms: float


def _theta_count(p: int, grid_size: int, override: int | None) -> int:
    """Trapezoid nodes resolving the Laurent bandwidth of the determinant.

    The determinant's Laurent degree per theta variable is bounded by the
    matrix size (each factor contributes degree <= 1 at p = 2, <= 2 above),
    and positive-degree aliases are amplified by ``radius^n``, so the node
    count must exceed the bandwidth with margin.
    """
    if override is not None:
        n = override
    else:
        n = (grid_size if p == 2 else 2 * grid_size) + 16
    return n + (n % 2)


def multitime_cdf(
    instance: LimitParams,
    settings: LimitSettings | None = None,
    *,
    deadline: float | None = None,
) -> AsymptoticResult:
    """Joint probability that the rescaled interface stays below ``xi``.

    Integrates ``det(I + F(theta)) / prod (theta_k - 1)`` over the product
    of theta circles, doubling the Nystrom resolution (and with it the
    theta bandwidth) until two successive levels agree within
    ``settings.tol``.  ``p = 1`` routes to the Tracy-Widom marginal
    ``F_GUE(xi_1 + x_1^2)``.
    """
    start = time.perf_counter()
    inst = instance
    settings = settings or det_settings()
    if inst.p == 1:
        s = inst.xi[0] + inst.x[0] ** 2
        lo = _fgue(s, nodes=96)
        hi = _fgue(s, nodes=192)
        return AsymptoticResult(
            value=hi,
            imag_part=0.0,
            theta_nodes=0,
            grid_nodes=192,
            levels=2,
            converged=abs(hi - lo) <= settings.tol,
            runtime_ms=1e3 * (time.perf_counter() - start),
        )
    prev = None
    value = complex(0.0)
    level = 0
    ntheta = 0
    grid_size = 0
    converged = False
    for level in range(1, settings.max_levels + 1):
        nodes = settings.block_nodes * (2 ** (level - 1))
        grid = block_grid(inst.p, settings.extent, nodes)
        grid_size = len(grid)
        ntheta = _theta_count(inst.p, grid_size, settings.theta_nodes)
        asm = _LimitAssembler(inst, settings, grid, deadline)
        ring = circle(0.0, settings.theta_radius, ntheta)
        total = complex(0.0)
        for combo in itertools.product(range(ntheta), repeat=inst.p - 1):
            if deadline is not None and time.monotonic() > deadline:
                raise BudgetError("time budget exhausted during theta integration")
            th = tuple(ring.nodes[j] for j in combo)
            w = complex(1.0)
            for j, tk in zip(combo, th):
                w *= ring.weights[j] / (tk - 1.0)
            total += w * asm.det(th)
        value = total
        if prev is not None and abs(value - prev) <= settings.tol:
            converged = True
            break
        prev = value
    return AsymptoticResult(
        value=float(value.real),
        imag_part=float(value.imag),
        theta_nodes=ntheta,
        grid_nodes=grid_size,
        levels=level,
        converged=converged,
        runtime_ms=1e3 * (time.perf_counter() - start),
    )


# ---------------------------------------------------------------------------
# single-time law
# ---------------------------------------------------------------------------

def _fgue(s: float, nodes: int = 96, span: float = 40.0, lam_max: float = 40.0) -> float:
    """``det(I - K_Ai)`` on ``(s, infinity)`` by Nystrom quadrature."""
    x, w = composite_gl(s, s + span, nodes, panel_size=12)
    kern = airy_kernel_matrix(x, x, n=nodes, lam_max=lam_max)
    sw = np.sqrt(w)
    mat = np.eye(len(x)) - sw[:, None] * kern * sw[None, :]
    return float(lu_det(mat).real)


def tracy_widom(s: float, *, nodes: int = 96) -> float:
    """GUE Tracy-Widom distribution function ``F_GUE(s)`` for s in [-10, 6]."""
    s = float(s)
    if not -10.0 <= s <= 6.0:
        raise SchemaError(f"tracy_widom argument must lie in [-10, 6], got {s}")
    return _fgue(s, nodes=nodes)


def two_point_kernel(
    t: float, x: float, xi: float, u, v, *, settings: LimitSettings | None = None
):
    """Contour-form single-time kernel whose determinant is the marginal law.

    ``K(u, v) = oint oint (G(z)/G(zeta)) e^(zeta v - z u) / (z - zeta)``
    over a decaying line left of the origin and a growing line right of
    it, with the triple ``(t, x, xi)``; ``det(I - K)`` on ``(0, inf)``
    equals ``F_GUE(xi + x^2)``.
    """
    inst = LimitParams(t=(float(t),), x=(float(x),), xi=(float(xi),), mu=0.0)
    return eval_basic_kernel(1, {}, 1, u, 1, v, inst, settings=settings)


def single_time_cdf(
    t: float,
    x: float,
    xi: float,
    *,
    extent: float = 12.0,
    nodes: int = 64,
    settings: LimitSettings | None = None,
) -> float:
    """``det(I - K)`` of the single-time kernel on ``(0, extent)``."""
    grid, w = composite_gl(0.0, extent, nodes, panel_size=12)
    kern = two_point_kernel(t, x, xi, grid, grid, settings=settings)
    sw = np.sqrt(w)
    mat = np.eye(len(grid), dtype=complex) - sw[:, None] * kern * sw[None, :]
    return float(lu_det(mat).real)

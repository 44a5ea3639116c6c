"""Contour quadrature and the scalar integrand factors.

All contour integrals in this package are written with the measure
``dz / (2 pi i)`` absorbed into the quadrature weights, so that a contour
integral is evaluated as ``sum(weights * f(nodes))``.

Two contour shapes are used:

* counterclockwise circles (trapezoidal rule — exponentially accurate for
  integrands analytic in an annulus around the circle), and
* upward vertical lines (composite Gauss-Legendre panels on a finite
  symmetric window chosen by the caller from the Gaussian decay of the
  integrand).

The scalar factors are evaluated in log space and exponentiated once per
kernel entry, which keeps intermediate magnitudes representable even when
individual factors would overflow:

    gstar(w | n, m, a) = w^n (1-w)^(a+m) (1 - w/(1-q))^(-m),
    g(w | n, m, a)     = gstar(w | n, m, a) / gstar(w_c | n, m, a),
    script_g(w | t, x, xi) = exp(t w^3/3 + x t^(2/3) w^2 - xi t^(1/3) w),

with ``w_c = 1 - sqrt(q)`` the double critical point of ``gstar``.  The
exponents are integers, so principal-branch logarithms exponentiate to the
exact single-valued product.

The module also provides the Airy function ``Ai`` (series for moderate
arguments, saddle-point contour quadrature outside) and the Airy kernel
``K_Ai(a, b) = int_0^inf Ai(a+s) Ai(b+s) ds``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Contour",
    "gauss_legendre",
    "composite_gl",
    "circle",
    "vline",
    "log_gstar",
    "gstar_at",
    "log_g",
    "log_script_g",
    "airy_ai",
    "airy_kernel_matrix",
]


# ---------------------------------------------------------------------------
# quadrature rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Contour:
    """Quadrature nodes and weights; weights absorb ``dz / (2 pi i)``."""

    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, values: np.ndarray) -> complex:
        """Contour integral of a function sampled at ``self.nodes``."""
        return complex(np.sum(self.weights * values))


@lru_cache(maxsize=64)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = _leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def composite_gl(
    a: float, b: float, n: int, panel_size: int = 12
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule with ~``n`` nodes split into panels."""
    panels = max(1, round(n / panel_size))
    edges = np.linspace(a, b, panels + 1)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(lo, hi, panel_size)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def circle(center: complex, radius: float, n: int) -> Contour:
    """Counterclockwise circle, trapezoidal rule, nodes offset off-axis."""
    theta = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    nodes = center + radius * np.exp(1j * theta)
    weights = radius * np.exp(1j * theta) / n
    return Contour(nodes=nodes, weights=weights)


def vline(anchor: float, halfwidth: float, n: int, panel_size: int = 8) -> Contour:
    """Upward vertical line through ``anchor`` truncated at ``+-i*halfwidth``."""
    y, w = composite_gl(-halfwidth, halfwidth, n, panel_size)
    return Contour(nodes=anchor + 1j * y, weights=w / (2.0 * np.pi))


# ---------------------------------------------------------------------------
# integrand factors (log space)
# ---------------------------------------------------------------------------

def log_gstar(w, n: int, m: int, a: int, q: float):
    """``log gstar(w | n, m, a)`` with principal branches (exponents are ints)."""
    w = np.asarray(w, dtype=complex)
    return (
        n * np.log(w)
        + (a + m) * np.log(1.0 - w)
        - m * np.log(1.0 - w / (1.0 - q))
    )


def gstar_at(w, n: int, m: int, a: int, q: float):
    """``gstar(w | n, m, a)`` (safe only when the log stays moderate)."""
    return np.exp(log_gstar(w, n, m, a, q))


def log_g(w, n: int, m: int, a: int, q: float):
    """Log of the critically normalized factor ``g = gstar(w)/gstar(w_c)``."""
    sq = math.sqrt(q)
    w_c = 1.0 - sq
    w = np.asarray(w, dtype=complex)
    return (
        n * (np.log(w) - math.log(w_c))
        + (a + m) * (np.log(1.0 - w) - math.log(sq))
        - m * (np.log(1.0 - w / (1.0 - q)) - math.log(sq / (1.0 + sq)))
    )


def log_script_g(w, t: float, x: float, xi: float):
    """Log of the scaled integrand ``exp(t w^3/3 + x t^(2/3) w^2 - xi t^(1/3) w)``."""
    w = np.asarray(w, dtype=complex)
    t13 = t ** (1.0 / 3.0)
    return t * w ** 3 / 3.0 + x * t13 ** 2 * w ** 2 - xi * t13 * w


# ---------------------------------------------------------------------------
# Airy function and Airy kernel
# ---------------------------------------------------------------------------

_AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
_AIP0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)


def _airy_series(s: np.ndarray) -> np.ndarray:
    """Maclaurin series of Ai, reliable for |s| <= 5."""
    f = np.ones_like(s)
    g = s.copy()
    tf = np.ones_like(s)
    tg = s.copy()
    s3 = s ** 3
    for k in range(40):
        n = 3 * k
        tf = tf * s3 / ((n + 3) * (n + 2))
        tg = tg * s3 / ((n + 4) * (n + 3))
        f += tf
        g += tg
    return _AI0 * f + _AIP0 * g


_AIRY_CHUNK = 1024


def _airy_right(s: np.ndarray) -> np.ndarray:
    """Vertical-line quadrature through the saddle ``sqrt(s)``, for s > 5.

    Elements are processed in chunks on a shared normalized grid (scaled
    per element), so large batches stay vectorized.
    """
    out = np.empty_like(s)
    for lo in range(0, len(s), _AIRY_CHUNK):
        sv = s[lo : lo + _AIRY_CHUNK]
        d = np.sqrt(sv)
        hw = 7.0 / sv ** 0.25
        osc = float(np.max(hw ** 3)) / 3.0
        n = int(max(80, 12 * osc))
        tau, w = composite_gl(0.0, 1.0, n, panel_size=10)
        z = d[:, None] + 1j * (hw[:, None] * tau[None, :])
        f = z ** 3 / 3.0 - sv[:, None] * z
        out[lo : lo + _AIRY_CHUNK] = hw * ((np.exp(f).real * w).sum(axis=1)) / math.pi
    return out


def _airy_left(s: np.ndarray) -> np.ndarray:
    """Saddle-point contour through ``+-i sqrt(|s|)``, for s < -5.

    Chunked like :func:`_airy_right`; node counts follow the largest
    oscillation in the chunk.
    """
    out = np.empty_like(s)
    for lo in range(0, len(s), _AIRY_CHUNK):
        sv = s[lo : lo + _AIRY_CHUNK]
        r = np.sqrt(-sv)
        # imaginary-axis segment between the saddles: phase -y^3/3 + |s| y
        osc_b = (2.0 / 3.0) * float(np.max(r)) ** 3
        nb = int(max(60, 10 * osc_b / math.pi))
        tau, wy = composite_gl(0.0, 1.0, nb, panel_size=10)
        y = r[:, None] * tau[None, :]
        seg_b = r * ((np.cos(-(y ** 3) / 3.0 - sv[:, None] * y) * wy).sum(axis=1))
        # descent ray from the upper saddle in direction exp(i pi/4)
        hw = 7.0 / np.sqrt(r)
        nc = int(max(80, 14 * float(np.max(r))))
        tau_c, wt = composite_gl(0.0, 1.0, nc, panel_size=10)
        z = 1j * r[:, None] + (hw[:, None] * tau_c[None, :]) * np.exp(1j * np.pi / 4.0)
        f = z ** 3 / 3.0 - sv[:, None] * z
        seg_c = np.exp(1j * np.pi / 4.0) * hw * ((np.exp(f) * wt).sum(axis=1))
        out[lo : lo + _AIRY_CHUNK] = (seg_b + seg_c.imag) / math.pi
    return out


def airy_ai(s) -> np.ndarray:
    """Airy function ``Ai(s)`` for real array input.

    Series for ``|s| <= 5``; saddle-point contour quadrature outside.
    Absolute accuracy ~1e-13 on ``[-60, inf)``; arguments below -60 raise.
    """
    arr = np.asarray(s, dtype=float)
    scalar = arr.ndim == 0
    flat = np.atleast_1d(arr).ravel().copy()
    if np.any(flat < -60.0):
        raise ValueError("airy_ai supports arguments >= -60")
    out = np.empty_like(flat)
    mid = np.abs(flat) <= 5.0
    right = flat > 5.0
    left = flat < -5.0
    if mid.any():
        out[mid] = _airy_series(flat[mid])
    if right.any():
        out[right] = _airy_right(flat[right])
    if left.any():
        out[left] = _airy_left(flat[left])
    res = out.reshape(np.atleast_1d(arr).shape)
    return float(res[0]) if scalar else res


def airy_kernel_matrix(
    a: np.ndarray, b: np.ndarray, n: int = 96, lam_max: float = 40.0
) -> np.ndarray:
    """Airy kernel ``K_Ai(a_i, b_j) = int_0^lam_max Ai(a_i+s) Ai(b_j+s) ds``.

    The truncation error is bounded by the super-exponential decay of
    ``Ai`` at ``+lam_max`` relative to the smallest grid point.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lam, w = composite_gl(0.0, lam_max, n, panel_size=12)
    fa = airy_ai(a[:, None] + lam[None, :])
    fb = airy_ai(b[:, None] + lam[None, :])
    return (fa * w) @ fb.T

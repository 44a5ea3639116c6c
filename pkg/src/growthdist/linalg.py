"""Deterministic determinants and Nystrom discretization.

Fredholm determinants ``det(I + K)`` on a direct sum of half-line L^2
spaces are evaluated by Nystrom's method: Gauss-Legendre nodes per block,
the symmetrized matrix ``I + W^(1/2) K W^(1/2)``, and a deterministic
pivoted LU factorization (largest-magnitude pivot, earliest index on ties)
so results are bit-reproducible across runs.

A second grid builder places one midpoint node per unit cell of width
``1/nu``; kernels that are piecewise constant on those cells (as arises
when a discrete matrix is embedded as an integral operator by step
interpolation with scale ``nu``) are then integrated exactly, making the
Nystrom determinant equal to the discrete ``det(I + M)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .integrands import composite_gl

__all__ = [
    "lu_det",
    "NystromGrid",
    "block_grid",
    "cell_grid",
    "nystrom_det",
    "embed_discrete",
]


def lu_det(matrix: np.ndarray) -> complex:
    """Determinant via in-place LU with deterministic partial pivoting."""
    a = np.array(matrix, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    det = 1.0 + 0.0j
    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            det = -det
        pivot = a[k, k]
        if pivot == 0.0:
            return 0.0 + 0.0j
        det *= pivot
        if k + 1 < n:
            factors = a[k + 1:, k] / pivot
            a[k + 1:, k + 1:] -= np.outer(factors, a[k, k + 1:])
    return complex(det)


@dataclass(frozen=True)
class NystromGrid:
    """Quadrature grid over ``(+)_{r<p} L^2(-inf,0) (+) L^2(0,inf)``.

    ``nodes``/``weights`` are the concatenated per-block rules and
    ``slices[r-1]`` selects block ``r`` (1-based; blocks ``1..p-1`` live on
    the negative axis, block ``p`` on the positive axis).
    """

    p: int
    nodes: np.ndarray
    weights: np.ndarray
    slices: tuple[slice, ...]

    def block(self, r: int) -> np.ndarray:
        return self.nodes[self.slices[r - 1]]

    def __len__(self) -> int:
        return len(self.nodes)


def block_grid(p: int, extent: float = 12.0, n: int = 48) -> NystromGrid:
    """Gauss-Legendre grid truncating each half-line at ``extent``."""
    nodes, weights, slices = [], [], []
    start = 0
    for r in range(1, p + 1):
        lo, hi = (0.0, extent) if r == p else (-extent, 0.0)
        x, w = composite_gl(lo, hi, n, panel_size=12)
        nodes.append(x)
        weights.append(w)
        slices.append(slice(start, start + len(x)))
        start += len(x)
    return NystromGrid(
        p=p,
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        slices=tuple(slices),
    )


def cell_grid(p: int, nu: float, counts: tuple[int, ...]) -> NystromGrid:
    """One midpoint node per unit cell of width ``1/nu``.

    Block ``r < p`` covers the cells ``(-(c)/nu, -(c-1)/nu]`` for
    ``c = 1..counts[r-1]`` on the negative axis; block ``p`` covers
    ``((c-1)/nu, c/nu]`` on the positive axis.  Step kernels constant on
    these cells are integrated exactly.
    """
    nodes, weights, slices = [], [], []
    start = 0
    for r in range(1, p + 1):
        c = np.arange(1, counts[r - 1] + 1)
        mids = (c - 0.5) / nu
        x = mids if r == p else -mids[::-1]
        nodes.append(x)
        weights.append(np.full(len(x), 1.0 / nu))
        slices.append(slice(start, start + len(x)))
        start += len(x)
    return NystromGrid(
        p=p,
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        slices=tuple(slices),
    )


def nystrom_det(
    kernel: np.ndarray | Callable[[int, np.ndarray, int, np.ndarray], np.ndarray],
    grid: NystromGrid,
) -> complex:
    """``det(I + W^(1/2) K W^(1/2))`` for a kernel on ``grid``.

    ``kernel`` is either the full matrix of kernel values at the grid
    nodes or a callable ``(r, u, s, v) -> matrix`` evaluated blockwise.
    """
    if callable(kernel):
        mat = np.zeros((len(grid), len(grid)), dtype=complex)
        for r in range(1, grid.p + 1):
            for s in range(1, grid.p + 1):
                mat[grid.slices[r - 1], grid.slices[s - 1]] = kernel(
                    r, grid.block(r), s, grid.block(s)
                )
        kernel = mat
    if not np.all(np.isfinite(kernel)):
        raise ValueError("kernel values must be finite")
    sw = np.sqrt(grid.weights)
    mat = np.eye(len(grid), dtype=complex) + sw[:, None] * kernel * sw[None, :]
    return lu_det(mat)


def embed_discrete(
    matrix: np.ndarray, counts: Sequence[int], nu: float
) -> Callable[[int, np.ndarray, int, np.ndarray], np.ndarray]:
    """Step-kernel embedding of a finite block matrix.

    Block ``r`` of ``matrix`` (sizes ``counts``) indexes ``counts[r-1]``
    consecutive integer sites; site ``j`` (1-based within the block,
    counted toward the block boundary) is smeared over a cell of width
    ``1/nu``, giving the kernel

        F(r, u; s, v) = nu * M[site_r(ceil(nu u)), site_s(ceil(nu v))],

    where blocks ``r < p`` place their cells left of the origin (offsets
    ``ceil(nu u)`` in ``-counts[r-1]+1 .. 0``) and block ``p`` right of it
    (offsets ``1 .. counts[p-1]``); the kernel vanishes off-range.  On
    ``cell_grid(p, nu, counts)`` the Nystrom determinant of the embedded
    kernel equals ``det(I + M)`` exactly, and it is independent of ``nu``.
    """
    counts = tuple(int(c) for c in counts)
    p = len(counts)
    mat = np.asarray(matrix, dtype=complex)
    offsets = np.concatenate(([0], np.cumsum(counts)))
    if mat.shape != (offsets[-1], offsets[-1]):
        raise ValueError(
            f"matrix of shape {mat.shape} does not match block sizes {counts}"
        )

    def positions(r: int, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cells = np.ceil(nu * np.asarray(u, dtype=float)).astype(int)
        pos = cells - 1 if r == p else counts[r - 1] + cells - 1
        ok = (pos >= 0) & (pos < counts[r - 1])
        return np.clip(pos, 0, counts[r - 1] - 1), ok

    def kernel(r: int, u, s: int, v) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        pu, oku = positions(r, u)
        pv, okv = positions(s, v)
        out = nu * mat[np.ix_(offsets[r - 1] + pu, offsets[s - 1] + pv)]
        out[~oku, :] = 0.0
        out[:, ~okv] = 0.0
        return out

    return kernel

"""Reference-triangle modal basis and quadrature rules.

The reference triangle is ``{(x, y): x >= 0, y >= 0, x + y <= 1}`` with
area 1/2.  The basis is the orthonormal Dubiner (Koornwinder) family,
ordered hierarchically by total degree so that the first
``(n+1)(n+2)/2`` functions span P_n for every n.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np
from scipy.special import eval_jacobi, roots_jacobi

MAX_RULE_DEGREE = 20
MAX_EDGE_POINTS = 20
_TOL_INSIDE = 1e-12


def n_modes(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


@lru_cache(maxsize=None)
def mode_indices(degree: int) -> tuple[tuple[int, int], ...]:
    """(i, j) index pairs in hierarchical order: total degree, then i."""
    return tuple((i, k - i) for k in range(degree + 1) for i in range(k, -1, -1))


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class ModalBasis:
    degree: int

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")

    @property
    def dim(self) -> int:
        return n_modes(self.degree)

    def eval(self, pts) -> np.ndarray:
        return basis_eval(self.degree, pts)

    def grad(self, pts) -> np.ndarray:
        return basis_grad(self.degree, pts)


def _as_points(pts) -> tuple[np.ndarray, bool]:
    p = np.asarray(pts, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    if p.shape[-1] != 2:
        raise ValueError("reference points must have 2 coordinates")
    x, y = p[:, 0], p[:, 1]
    outside = (x < -_TOL_INSIDE) | (y < -_TOL_INSIDE) | (x + y > 1 + _TOL_INSIDE)
    if np.any(outside):
        raise ValueError(f"point {p[np.argmax(outside)]} lies outside the reference triangle")
    return p, single


def _collapsed(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = 2.0 * p[:, 0] - 1.0
    s = 2.0 * p[:, 1] - 1.0
    denom = 1.0 - s
    top = denom < 1e-14
    a = np.where(top, -1.0, 2.0 * (1.0 + r) / np.where(top, 1.0, denom) - 1.0)
    return a, s


def _norm(i: int, j: int) -> float:
    # squared L2 norm of the unnormalised mode on the unit triangle
    return 1.0 / (2.0 * (2 * i + 1) * (i + j + 1))


def _jac(n, a, b, x):
    if n < 0:
        return np.zeros_like(x)
    return eval_jacobi(n, a, b, x)


def _djac(n, a, b, x):
    if n < 1:
        return np.zeros_like(x)
    return 0.5 * (n + a + b + 1) * eval_jacobi(n - 1, a + 1, b + 1, x)


def basis_eval(degree: int, pts) -> np.ndarray:
    """Values of the orthonormal modes at reference points.

    Returns an array of shape ``(npts, N)`` (or ``(N,)`` for one point).
    """
    p, single = _as_points(pts)
    a, b = _collapsed(p)
    half = 0.5 * (1.0 - b)
    out = np.empty((p.shape[0], n_modes(degree)))
    for m, (i, j) in enumerate(mode_indices(degree)):
        out[:, m] = (_jac(i, 0, 0, a) * half**i * _jac(j, 2 * i + 1, 0, b)
                     / np.sqrt(_norm(i, j)))
    return out[0] if single else out


def basis_grad(degree: int, pts) -> np.ndarray:
    """Reference gradients, shape ``(npts, N, 2)`` (or ``(N, 2)``)."""
    p, single = _as_points(pts)
    a, b = _collapsed(p)
    half = 0.5 * (1.0 - b)
    out = np.empty((p.shape[0], n_modes(degree), 2))
    for m, (i, j) in enumerate(mode_indices(degree)):
        fa = _jac(i, 0, 0, a)
        dfa = _djac(i, 0, 0, a)
        gb = _jac(j, 2 * i + 1, 0, b)
        dgb = _djac(j, 2 * i + 1, 0, b)
        half_im1 = half ** (i - 1) if i >= 1 else np.zeros_like(half)
        # d/dr and d/ds in the biunit triangle
        dr = dfa * half_im1 * gb if i >= 1 else np.zeros_like(a)
        ds = dfa * 0.5 * (1.0 + a) * half_im1 * gb if i >= 1 else np.zeros_like(a)
        dhalf_i = -0.5 * i * half_im1 if i >= 1 else np.zeros_like(a)
        ds = ds + fa * (dhalf_i * gb + half**i * dgb)
        scale = 1.0 / np.sqrt(_norm(i, j))
        # (x, y) = ((r+1)/2, (s+1)/2)
        out[:, m, 0] = 2.0 * dr * scale
        out[:, m, 1] = 2.0 * ds * scale
    return out[0] if single else out


def _check_degree(q: int):
    if not (1 <= q <= MAX_RULE_DEGREE):
        raise ValueError(f"triangle rule degree must be in [1, {MAX_RULE_DEGREE}], got {q}")


@lru_cache(maxsize=None)
def triangle_rule(q: int) -> QuadratureRule:
    """Fully symmetric rule exact to total degree ``q``.

    Built from the collapsed Gauss-Legendre x Gauss-Jacobi(1, 0) product
    rule, then averaged over the six permutations of barycentric
    coordinates.  Averaging keeps exactness (P_q is invariant under the
    triangle's affine symmetries) and keeps all weights positive.
    """
    _check_degree(q)
    m = (q + 2) // 2
    xg, wg = np.polynomial.legendre.leggauss(m)
    xj, wj = roots_jacobi(m, 1.0, 0.0)
    xi = 0.5 * (xg + 1.0)
    eta = 0.5 * (xj + 1.0)
    XI, ETA = np.meshgrid(xi, eta, indexing="ij")
    W = np.outer(0.5 * wg, 0.25 * wj)
    px = (XI * (1.0 - ETA)).ravel()
    py = ETA.ravel()
    w = W.ravel()
    bary = np.column_stack([1.0 - px - py, px, py])
    pts, wts = [], []
    for perm in permutations(range(3)):
        b = bary[:, perm]
        pts.append(b[:, 1:])
        wts.append(w / 6.0)
    points = np.vstack(pts)
    weights = np.concatenate(wts)
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points, weights, q)


@lru_cache(maxsize=None)
def edge_rule(count: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1] with ``count`` points."""
    if not (1 <= count <= MAX_EDGE_POINTS):
        raise ValueError(f"edge rule point count must be in [1, {MAX_EDGE_POINTS}], got {count}")
    x, w = np.polynomial.legendre.leggauss(count)
    points = 0.5 * (x + 1.0)
    weights = 0.5 * w
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points, weights, 2 * count - 1)


def default_volume_degree(n_max: int) -> int:
    return min(2 * n_max + 3, MAX_RULE_DEGREE)


def default_edge_points(n_max: int) -> int:
    return min(n_max + 2, MAX_EDGE_POINTS)

"""Strain-limiting constitutive law for anti-plane shear.

The diffusion coefficient is

    G(s) = 1 / (2 mu (1 + beta**alpha * s**alpha) ** (1/alpha)),

where ``s = |grad u|``.  Stress components are the rotated gradient of the
Airy-type potential ``u`` and the strain is ``G(|T|) T``, which stays below
``1 / (2 mu beta)`` in magnitude for every stress.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 1.0
    beta: float = 1.0
    mu: float = 0.5

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")

    @property
    def linear(self) -> bool:
        return self.beta == 0.0

    def with_beta(self, beta: float) -> "ModelParams":
        return ModelParams(self.alpha, beta, self.mu)


def _check_s(s):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("gradient magnitude must be non-negative")
    return s


def coeff_G(s, p: ModelParams):
    s = _check_s(s)
    if p.beta == 0.0:
        out = np.full_like(s, 1.0 / (2.0 * p.mu))
    else:
        out = 1.0 / (2.0 * p.mu * (1.0 + (p.beta * s) ** p.alpha) ** (1.0 / p.alpha))
    return out.item() if out.ndim == 0 else out


def coeff_G_prime(s, p: ModelParams):
    """dG/ds.  For ``alpha < 1`` the derivative is unbounded at ``s = 0``."""
    s = _check_s(s)
    if p.beta == 0.0:
        out = np.zeros_like(s)
    else:
        if p.alpha < 1 and np.any(s == 0):
            raise ValueError("dG/ds is singular at s = 0 for alpha < 1")
        ba = p.beta ** p.alpha
        out = (-ba * s ** (p.alpha - 1.0)
               * (1.0 + ba * s**p.alpha) ** (-1.0 / p.alpha - 1.0) / (2.0 * p.mu))
    return out.item() if out.ndim == 0 else out


def flux(grad, p: ModelParams) -> np.ndarray:
    """G(|g|) g for gradient vectors along the last axis."""
    g = np.asarray(grad, dtype=float)
    return np.asarray(coeff_G(np.linalg.norm(g, axis=-1), p))[..., None] * g


def stress_from_gradient(grad) -> np.ndarray:
    """(T13, T23) = (du/dy, -du/dx)."""
    g = np.asarray(grad, dtype=float)
    return np.stack([g[..., 1], -g[..., 0]], axis=-1)


def strain_from_stress(stress, p: ModelParams) -> np.ndarray:
    t = np.asarray(stress, dtype=float)
    return np.asarray(coeff_G(np.linalg.norm(t, axis=-1), p))[..., None] * t


# -- manufactured solution ---------------------------------------------
def _factor(t):
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    r = np.sqrt(t)
    f = t * t * r * (1.0 - t)
    d1 = 2.5 * t * r - 3.5 * t * t * r
    d2 = 3.75 * r - 8.75 * t * r
    return f, d1, d2


def exact_solution(pt):
    """u = x^(5/2) (1-x) y^(5/2) (1-y) with gradient and Hessian.

    ``pt`` has coordinates on the last axis; returns ``(u, grad, hess)``
    with shapes ``(...)``, ``(..., 2)`` and ``(..., 2, 2)``.
    """
    pt = np.asarray(pt, dtype=float)
    X, dX, ddX = _factor(pt[..., 0])
    Y, dY, ddY = _factor(pt[..., 1])
    u = X * Y
    grad = np.stack([dX * Y, X * dY], axis=-1)
    hess = np.stack([np.stack([ddX * Y, dX * dY], axis=-1),
                     np.stack([dX * dY, X * ddY], axis=-1)], axis=-2)
    return u, grad, hess


def exact_value(pt):
    return exact_solution(pt)[0]


def exact_value_grad(pt):
    u, g, _ = exact_solution(pt)
    return u, g


def source_f(pt, p: ModelParams):
    """f = -div(G(|grad u|) grad u) for the manufactured solution."""
    _, g, H = exact_solution(pt)
    s = np.linalg.norm(g, axis=-1)
    lap = H[..., 0, 0] + H[..., 1, 1]
    G = np.asarray(coeff_G(s, p))
    small = s < 1e-12
    s_safe = np.where(small, 1.0, s)
    gHg = np.einsum("...a,...ab,...b->...", g, H, g)
    dG = np.asarray(coeff_G_prime(s_safe, p)) if not p.linear else np.zeros_like(s)
    first = np.where(small, 0.0, dG * gHg / s_safe)
    out = -(first + G * lap)
    return out.item() if out.ndim == 0 else out

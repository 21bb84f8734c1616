"""Quadrature grids and small dense linear-algebra helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .model import BadRange, MaxIterations, NoSignChange

__all__ = [
    "RadialGrid",
    "build_log_gauss_grid",
    "lu_log_determinant",
    "brent_root",
    "largest_eigenvalue",
]

# Gauss-Legendre order of one log panel.
PANEL_ORDER = 16


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Quadrature on (k_min, k_max): ``sum(weights * g(nodes))`` ~ integral of g dk."""

    nodes: np.ndarray
    weights: np.ndarray
    k_min: float
    k_max: float

    @property
    def n_points(self) -> int:
        return len(self.nodes)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def radial_integral(self, values) -> float:
        """Integral of d^3k / (2 pi)^3 f(k) for an isotropic f sampled on the nodes."""
        return float(np.dot(self.weights * self.nodes**2, values)) / (2.0 * math.pi**2)


def build_log_gauss_grid(n_points: int, k_min: float, k_max: float) -> RadialGrid:
    """Composite Gauss-Legendre rule in u = ln k.

    The interval [ln k_min, ln k_max] is split into equal panels of about
    ``PANEL_ORDER`` nodes each; weights carry the Jacobian dk = k du.

    Parameters
    ----------
    n_points : int
        Total number of nodes (at least 8).
    k_min, k_max : float
        Integration range, 0 < k_min < k_max.
    """
    if not (math.isfinite(k_min) and math.isfinite(k_max)) or k_min <= 0 or k_min >= k_max:
        raise BadRange(f"need 0 < k_min < k_max, got ({k_min!r}, {k_max!r})")
    n_points = int(n_points)
    if n_points < 8:
        raise BadRange(f"n_points = {n_points} < 8")

    n_panels = max(1, round(n_points / PANEL_ORDER))
    orders = [n_points // n_panels] * n_panels
    for i in range(n_points - sum(orders)):
        orders[i] += 1

    edges = np.linspace(math.log(k_min), math.log(k_max), n_panels + 1)
    u_parts, w_parts = [], []
    for order, lo, hi in zip(orders, edges[:-1], edges[1:]):
        x, w = leggauss(order)
        u_parts.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        w_parts.append(0.5 * (hi - lo) * w)
    u = np.concatenate(u_parts)
    k = np.exp(u)
    return RadialGrid(k, np.concatenate(w_parts) * k, float(k_min), float(k_max))


def lu_log_determinant(m) -> tuple[int, float]:
    """Sign and log|det| of a square matrix by partially pivoted LU.

    A singular matrix gives ``(0, -inf)``.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    # LAPACK getrf underneath
    sign, logabs = np.linalg.slogdet(m)
    if sign == 0:
        return 0, -math.inf
    return int(sign), float(logabs)


def brent_root(f, bracket, tol: float = 1e-14, maxiter: int = 200) -> float:
    """Root of a continuous ``f`` inside a sign-changing bracket."""
    lo, hi = float(bracket[0]), float(bracket[1])
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise NoSignChange(f"f({lo!r}) and f({hi!r}) have the same sign")
    try:
        root, info = brentq(
            f, lo, hi, xtol=tol, rtol=max(4 * np.finfo(float).eps, min(tol, 1e-3)),
            maxiter=maxiter, full_output=True, disp=False,
        )
    except RuntimeError as exc:
        raise MaxIterations(str(exc)) from exc
    if not info.converged:
        raise MaxIterations(f"brent did not converge in {maxiter} iterations")
    return float(root)


def largest_eigenvalue(m, tol: float = 1e-10, maxiter: int = 10_000, v0=None):
    """Dominant eigenpair by power iteration with a Rayleigh-quotient estimate.

    Stops once ``|m v - lam v| <= tol |v|``. A spectrum without a single
    dominant real eigenvalue (e.g. a rotation) exhausts ``maxiter`` and raises
    :class:`MaxIterations`.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    v = np.ones(n) if v0 is None else np.asarray(v0, dtype=float).copy()
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(maxiter):
        w = m @ v
        lam = float(v @ w)
        if np.linalg.norm(w - lam * v) <= tol:
            return lam, v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            # v lies in the null space; its Rayleigh quotient is exact
            return 0.0, v
        v = w / norm
    raise MaxIterations(f"power iteration did not converge in {maxiter} steps")

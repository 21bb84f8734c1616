"""Two-body physics of the narrow resonance.

Closed forms follow from the low-energy amplitude
``f0(k) = -1 / (1/a + R* k**2 + i k)``; the regularized amplitude of the
two-channel model (Gaussian form factor of range epsilon) reduces to it as
epsilon -> 0. The dimer is the pole of f0 at k = i kappa.
"""

from __future__ import annotations

import math

import numpy as np

from .model import (
    DimerSolution,
    NoBoundState,
    PoleAtZero,
    ResonanceParams,
    RStarRequired,
    validate_params,
)
from .numerics import RadialGrid, build_log_gauss_grid

__all__ = [
    "two_channel_parameters",
    "cutoff_function",
    "f0",
    "inverse_f0",
    "f_eps",
    "loop_integral",
    "dimer_kappa",
    "dimer_observables",
    "dimer_nk",
    "dimer_grid",
    "energy_relation_residual_dimer",
]


def two_channel_parameters(p: ResonanceParams) -> tuple[float, float]:
    """Bare molecular energy and coupling amplitude matched to f0.

    Returns ``(e_mol, lam)`` with ``e_mol = (sqrt(2) / (eps sqrt(pi)) - 1/a) / R*``
    and ``lam = sqrt(2 pi / R*)``.
    """
    validate_params(p, "regularized")
    e_mol = (math.sqrt(2.0) / (p.epsilon * math.sqrt(math.pi)) - p.inv_a) / p.r_star
    lam = math.sqrt(2.0 * math.pi / p.r_star)
    return e_mol, lam


def cutoff_function(k, epsilon: float):
    """Gaussian form factor exp(-k**2 eps**2 / 4) of the interchannel coupling."""
    return np.exp(-np.square(k) * epsilon**2 / 4.0)


def f0(k: float, p: ResonanceParams) -> complex:
    """Zero-range amplitude -1 / (1/a + R* k**2 + i k); ``k`` may be complex."""
    validate_params(p)
    den = p.inv_a + p.r_star * k * k + 1j * k
    if den == 0:
        raise PoleAtZero("f0 diverges at k = 0 when 1/a = 0")
    return -1.0 / den


def inverse_f0(k, p: ResonanceParams) -> complex:
    """1 / f0(k) = -(1/a + R* k**2 + i k), finite everywhere; zero at a bound-state pole."""
    validate_params(p)
    return -(p.inv_a + p.r_star * k * k + 1j * k)


def loop_integral(k: float, epsilon: float, n_points: int = 400) -> complex:
    """Two-body loop  \\int d^3k'/(2 pi)^3 chi(k')**2 / (k**2 - k'**2 + i0).

    The imaginary part is analytic. The principal value is computed after
    subtracting the integrand at k' = k, which leaves a regular integrand on
    (0, inf); that is split at the Gaussian scale and integrated on a log grid
    plus a power-law tail.
    """
    g = lambda x: x * x * np.exp(-x * x * epsilon**2 / 2.0)
    imag = -k * math.exp(-k * k * epsilon**2 / 2.0) / (4.0 * math.pi)

    # \int_0^inf dk' / (k^2 - k'^2) vanishes as a principal value, so g(k) can
    # be subtracted freely.
    scale = 1.0 / epsilon
    upper = 40.0 * max(scale, k)
    gk = g(k)
    lower = 1e-8 * (min(scale, k) if k > 0 else scale)
    grid = build_log_gauss_grid(n_points, lower, upper)
    x = grid.nodes
    with np.errstate(invalid="ignore", divide="ignore"):
        integrand = np.where(
            np.abs(x - k) > 1e-6 * max(k, 1e-300),
            (g(x) - gk) / (k * k - x * x),
            # limit at x -> k: -g'(k) / (2k)
            -(2.0 * k - k**3 * epsilon**2) * math.exp(-k * k * epsilon**2 / 2.0) / (2.0 * k) if k > 0 else 0.0,
        )
    principal = grid.integrate(integrand)
    # [0, lower): integrand ~ -g(k)/k^2 (or -exp(...) for k = 0)
    principal += (-gk / (k * k) if k > 0 else -1.0) * lower
    # (upper, inf): g(x) is negligible there, the subtracted constant remains
    if k > 0:
        principal += gk / (2.0 * k) * math.log((upper + k) / (upper - k))
    return complex(principal / (2.0 * math.pi**2), imag)


def f_eps(k: float, p: ResonanceParams, n_points: int = 400) -> complex:
    """Scattering amplitude of the two-channel model with a Gaussian cutoff.

    Uses ``chi(k)**2 / (4 pi f_eps) = (E_mol - k**2) / (2 Lambda**2) + loop(k)``
    with E_mol, Lambda matched to (a, R*) at vanishing epsilon. The chi**2
    factor puts f_eps on the energy shell of the separable T-matrix, so the
    optical theorem Im f = k |f|**2 holds at every epsilon.
    """
    e_mol, lam = two_channel_parameters(p)
    rhs = (e_mol - k * k) / (2.0 * lam * lam) + loop_integral(k, p.epsilon, n_points)
    chi2 = math.exp(-k * k * p.epsilon**2 / 2.0)
    return chi2 / (4.0 * math.pi * rhs)


def dimer_kappa(p: ResonanceParams) -> float:
    """Binding wavenumber of the dimer, root of 1/a - kappa - R* kappa**2 = 0.

    Written as 2/a / (1 + sqrt(1 + 4 R*/a)) to stay accurate for small R*/a.
    """
    validate_params(p)
    if p.inv_a <= 0:
        raise NoBoundState(f"no dimer for 1/a = {p.inv_a!r} <= 0")
    return 2.0 * p.inv_a / (1.0 + math.sqrt(1.0 + 4.0 * p.r_star * p.inv_a))


def dimer_observables(p: ResonanceParams) -> DimerSolution:
    """Closed-channel fraction and momentum-tail coefficients of the dimer.

    Normalizing the open-channel wavefunction C / (k**2 + kappa**2) together
    with its molecular component gives ``n_mol = 2 kappa R* / (1 + 2 kappa R*)``;
    then ``n_k = c4 / (k**2 + kappa**2)**2`` with ``c4 = 8 pi n_mol / R*`` and
    ``c6 = -2 kappa**2 c4``.
    """
    kappa = dimer_kappa(p)
    if p.r_star == 0:
        raise RStarRequired("dimer observables need r_star > 0")
    x = 2.0 * kappa * p.r_star
    n_mol = x / (1.0 + x)
    c4 = 16.0 * math.pi * kappa / (1.0 + x)
    return DimerSolution(
        params=p,
        kappa=kappa,
        energy=-kappa * kappa,
        n_mol=n_mol,
        c4=c4,
        c6=-2.0 * kappa * kappa * c4,
    )


def dimer_nk(k, p: ResonanceParams):
    """Atomic momentum distribution c4 / (k**2 + kappa**2)**2 of the dimer at rest."""
    sol = dimer_observables(p)
    return sol.c4 / (np.square(k) + sol.kappa**2) ** 2


def dimer_grid(p: ResonanceParams, n_points: int = 400, decades: float = 4.0) -> RadialGrid:
    """Log grid spanning ``decades`` below and above every two-body scale."""
    kappa = dimer_kappa(p)
    scales = [kappa, p.inv_a]
    if p.r_star > 0:
        scales.append(1.0 / p.r_star)
    lo, hi = min(scales), max(scales)
    return build_log_gauss_grid(n_points, lo * 10.0**-decades, hi * 10.0**decades)


def energy_relation_residual_dimer(p: ResonanceParams, grid: RadialGrid | None = None) -> float:
    """Energy relation evaluated for the dimer at rest, minus the exact -kappa**2.

    The right-hand side is ``(1/2) \\int d^3k/(2 pi)^3 [k**2 n_k - a**2 c4 / (1 + k**2 a**2)]
    + R* c6 / (8 pi)``, trap-free with no molecular motion. The integrand
    falls off as c4 (1/a**2 - 2 kappa**2) / k**2 (radially), and that leading
    tail is added beyond the last node.
    """
    sol = dimer_observables(p)
    if grid is None:
        grid = dimer_grid(p)
    k = grid.nodes
    a2 = 1.0 / (p.inv_a * p.inv_a)
    nk = sol.c4 / (k * k + sol.kappa**2) ** 2
    radial = k**4 * nk - a2 * sol.c4 * k * k / (1.0 + k * k * a2)
    integral = grid.integrate(radial)
    integral += sol.c4 * (p.inv_a**2 - 2.0 * sol.kappa**2) / grid.k_max
    # [0, k_min): k^4 n_k ~ c4 k^4 / kappa^4 is negligible, the subtraction is not
    b = p.inv_a
    k0 = grid.k_min
    integral -= sol.c4 * (k0 - b * math.atan(k0 / b))
    rhs = integral / (4.0 * math.pi**2) + p.r_star * sol.c6 / (8.0 * math.pi)
    return rhs - sol.energy

"""Three identical bosons at a narrow resonance: the s-wave STM problem.

The pair amplitude D(k) of a trimer with binding wavenumber q solves

    d(k) D(k) = (2 / pi) \\int_0^inf dk' (k'/k) ln[(k^2 + k'^2 + k k' + q^2)
                                              / (k^2 + k'^2 - k k' + q^2)] D(k')

with ``d(k) = s + R* s**2 - 1/a`` and ``s = sqrt(3 k**2 / 4 + q**2)``, i.e.
1/f0 continued to the collisional energy of the pair. The integral term is
4 pi times the angular average of 2 D(k') / (k^2 + k'^2 + k.k' + q^2).
Discretized on a log Gauss grid, bound states are zeros of
det(I - d^-1 K)(q).

Normalization. With psi(k2, k3) = sqrt(8 pi) [D(k1) + D(k2) + D(k3)]
/ (q^2 + k2^2 + k3^2 + k2.k3) the three-atom component (CM frame, k1 = -k2 - k3)
and the atom + molecule component of weight 6 R* |D(p)|^2 (atom momentum p,
molecule momentum -p), the state is normalized by n_open + n_mol = 1. The
one-body distribution then integrates to 3 - 2 n_mol and has the tail
c4 / k^4 + c6 / k^6 with c4 = 8 pi n_mol / R*.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.linalg import lu_factor, lu_solve

from .model import (
    FewerLevelsFound,
    MomentumDistribution,
    NotConverged,
    ResonanceParams,
    StmSolution,
    ThresholdViolation,
    TrimerLevel,
    WindowTooNarrow,
    validate_params,
)
from .numerics import RadialGrid, brent_root, build_log_gauss_grid, largest_eigenvalue, lu_log_determinant
from .twobody import dimer_kappa

log = logging.getLogger(__name__)

__all__ = [
    "efimov_channel_function",
    "efimov_channel_root",
    "StmOperator",
    "assemble",
    "det_scan",
    "spectrum_grid",
    "solve_levels",
    "ground_level_eigen",
    "solve_amplitude",
    "AmplitudeInterpolant",
    "nk_at",
    "default_out_grid",
    "default_fit_window",
    "fit_tail",
    "reconstruct_nk",
    "c6_from_amplitude",
    "energy_relation_residual_trimer",
    "thomas_collapse_probe",
]

# sqrt(8 pi): maps the reported D(k) onto the source term of the open channel
_OPEN_SCALE = math.sqrt(8.0 * math.pi)


def efimov_channel_function(s):
    """8 sinh(pi s / 6) - sqrt(3) s cosh(pi s / 2); its root on (0, 2) is s0."""
    return 8.0 * np.sinh(np.pi * s / 6.0) - math.sqrt(3.0) * s * np.cosh(np.pi * s / 2.0)


def efimov_channel_root(tol: float = 1e-15) -> tuple[float, float]:
    """Efimov exponent s0 by bisection, with the energy ratio exp(2 pi / s0)."""
    lo, hi = 0.5, 2.0
    # positive at lo, negative at hi
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if efimov_channel_function(mid) > 0:
            lo = mid
        else:
            hi = mid
    s0 = 0.5 * (lo + hi)
    return s0, math.exp(2.0 * math.pi / s0)


def _diagonal(k, q: float, p: ResonanceParams):
    s2 = 0.75 * np.square(k) + q * q
    return np.sqrt(s2) + p.r_star * s2 - p.inv_a


def _log_ratio(k_out, k_in, q: float):
    """ln[(k^2 + k'^2 + k k' + q^2) / (k^2 + k'^2 - k k' + q^2)] on an outer grid."""
    a = np.square(k_out)[:, None] + np.square(k_in)[None, :] + q * q
    b = k_out[:, None] * k_in[None, :]
    return np.log1p(2.0 * b / (a - b))


@dataclass(frozen=True, eq=False)
class StmOperator:
    """Discretized STM operator at a trial q: diagonal d(k_i) and weighted kernel K_ij."""

    q: float
    grid: RadialGrid
    diagonal: np.ndarray
    kernel: np.ndarray

    def iteration_matrix(self) -> np.ndarray:
        """d^-1 K, whose unit eigenvalue marks a bound state."""
        return self.kernel / self.diagonal[:, None]

    def symmetric_matrix(self) -> np.ndarray:
        """Real symmetric matrix similar to d^-1 K.

        Conjugating with diag(k sqrt(d w)) gives
        (2/pi) L_ij sqrt(w_i w_j / (d_i d_j)), with L the symmetric log kernel.
        """
        k, w, d = self.grid.nodes, self.grid.weights, self.diagonal
        scale = k * np.sqrt(d * w)
        return self.kernel * np.outer(scale, 1.0 / scale) / d[:, None]

    def fredholm_determinant(self) -> tuple[int, float]:
        n = len(self.diagonal)
        return lu_log_determinant(np.eye(n) - self.symmetric_matrix())


def assemble(q: float, p: ResonanceParams, grid: RadialGrid, allow_zero_range: bool = False) -> StmOperator:
    """Build the discretized operator at binding wavenumber ``q``.

    For a > 0 the trial q must lie above the atom-dimer threshold, otherwise
    d(k) changes sign on the grid. ``allow_zero_range`` lifts the R* > 0
    requirement; only the collapse probe uses it.
    """
    validate_params(p, "twobody" if allow_zero_range else "threebody")
    if not q > 0:
        raise ValueError(f"q = {q!r} must be positive")
    if p.inv_a > 0:
        kappa = dimer_kappa(p)
        if q <= kappa:
            raise ThresholdViolation(f"q = {q!r} is not above the atom-dimer threshold kappa = {kappa!r}")
    k, w = grid.nodes, grid.weights
    diag = _diagonal(k, q, p)
    kernel = (2.0 / math.pi) * _log_ratio(k, k, q) * (k[None, :] * w[None, :] / k[:, None])
    return StmOperator(float(q), grid, diag, kernel)


def det_scan(p: ResonanceParams, grid: RadialGrid, q_list) -> list[tuple[float, int, float]]:
    """(q, sign, log|det(I - d^-1 K)|) for every q in ``q_list``."""
    out = []
    for q in q_list:
        sign, logabs = assemble(float(q), p, grid).fredholm_determinant()
        out.append((float(q), sign, logabs))
    return out


def _det_value(q: float, p: ResonanceParams, grid: RadialGrid, allow_zero_range=False) -> float:
    sign, logabs = assemble(q, p, grid, allow_zero_range).fredholm_determinant()
    # |det| stays O(1) near the roots; clip only to keep the bracket finite
    return sign * math.exp(min(logabs, 700.0))


def default_q_max(p: ResonanceParams) -> float:
    scales = [1.0 / p.r_star, abs(p.inv_a)]
    if p.inv_a > 0:
        scales.append(dimer_kappa(p))
    return 10.0 * max(scales)


def spectrum_grid(p: ResonanceParams, n_levels: int = 3, n_points: int | None = None) -> RadialGrid:
    """Log grid able to resolve the ``n_levels`` deepest trimers.

    Levels below the ground state are spaced by about exp(pi / s0) ~ 22.7 in q;
    the grid runs from 1e-3 of the shallowest expected q up to
    max(1000 / R*, 100 q_max) with about 35 nodes per decade (300 at least).
    The high end matters for the k^-6 moments (c6, K_mol), whose integrands
    fall off only as k^-2.
    """
    validate_params(p, "threebody")
    s0, _ = efimov_channel_root()
    q_low = 0.2 / p.r_star * math.exp(-math.pi / s0 * n_levels)
    if p.inv_a > 0:
        q_low = max(q_low, dimer_kappa(p))
    k_min = 1e-3 * q_low
    k_max = max(1000.0 / p.r_star, 100.0 * max(q_low, abs(p.inv_a)))
    if n_points is None:
        n_points = max(300, int(35 * math.log10(k_max / k_min)))
    return build_log_gauss_grid(n_points, k_min, k_max)


def _scan_ladder(q_max: float, q_min: float, ratio: float) -> np.ndarray:
    n = int(math.ceil(math.log(q_max / q_min) / math.log(ratio)))
    # the last rung lands exactly on q_min, never below it
    return np.maximum(q_max / ratio ** np.arange(n + 1), q_min)


def solve_levels(
    p: ResonanceParams,
    grid: RadialGrid | None = None,
    n_levels: int = 1,
    q_max: float | None = None,
    q_min: float | None = None,
    ratio: float = 1.2,
    tol: float = 1e-14,
    allow_zero_range: bool = False,
) -> list[TrimerLevel]:
    """The ``n_levels`` deepest trimers, ordered by decreasing q.

    The determinant is sampled on a geometric q-ladder from ``q_max`` down to
    ``q_min`` (default 1e3 k_min of the grid, and never below the atom-dimer
    threshold); each sign change is refined with Brent's method.

    Raises
    ------
    FewerLevelsFound
        When the ladder ends first; the roots found are on ``exc.levels``.
    """
    validate_params(p, "twobody" if allow_zero_range else "threebody")
    if grid is None:
        grid = spectrum_grid(p, n_levels)
    if q_max is None:
        q_max = grid.k_max if p.r_star == 0 else default_q_max(p)
    if q_min is None:
        q_min = 1e3 * grid.k_min
    if p.inv_a > 0:
        q_min = max(q_min, dimer_kappa(p) * (1.0 + 1e-9))
    if not q_max > q_min:
        raise ValueError(f"empty q range ({q_min!r}, {q_max!r})")

    f = lambda q: _det_value(q, p, grid, allow_zero_range)
    levels: list[TrimerLevel] = []
    qs = _scan_ladder(q_max, q_min, ratio)
    prev_q, prev_f = qs[0], f(qs[0])
    if prev_f < 0:
        log.warning("det(I - d^-1 K) < 0 at q_max = %g; deeper states may be missed", q_max)
    for q in qs[1:]:
        fq = f(q)
        if fq * prev_f < 0:
            root = brent_root(f, (q, prev_q), tol=tol * q)
            levels.append(TrimerLevel(len(levels), root, -root * root))
            if len(levels) == n_levels:
                return levels
        prev_q, prev_f = q, fq
    raise FewerLevelsFound(
        f"found {len(levels)} of {n_levels} levels with q in ({q_min:g}, {q_max:g})", levels
    )


def ground_level_eigen(p: ResonanceParams, grid: RadialGrid, bracket, tol: float = 1e-13) -> float:
    """Ground-state q from lambda_max(q) = 1 (power iteration), a second route to the deepest root."""

    def g(q):
        lam, _ = largest_eigenvalue(assemble(q, p, grid).symmetric_matrix(), tol=1e-13)
        return lam - 1.0

    return brent_root(g, bracket, tol=tol)


def _jacobi_norms(F, k, w, q: float, r_star: float):
    """Open-channel and molecular weights of an unnormalized source amplitude F.

    The open-channel norm of psi = sum_s F(k_s) / (q^2 + T) splits into three
    diagonal terms, each integrated analytically over the pair momentum, and
    six cross terms whose angular integral is also analytic.
    """
    kap = np.sqrt(q * q + 0.75 * k * k)
    radial = w * k * k
    diag = 3.0 * np.dot(radial, F * F / (8.0 * math.pi * kap)) / (2.0 * math.pi**2)
    kk = np.square(k)
    s = kk[:, None] + kk[None, :] + q * q
    angular = 2.0 / (s * s - np.outer(kk, kk))
    g = radial * F
    cross = 6.0 * 8.0 * math.pi**2 / (2.0 * math.pi) ** 6 * float(g @ angular @ g)
    f2 = np.dot(radial, F * F) / (2.0 * math.pi**2)
    n_mol = 3.0 * r_star / (4.0 * math.pi) * f2
    return diag + cross, n_mol


def solve_amplitude(
    level: TrimerLevel, p: ResonanceParams, grid: RadialGrid, residual_tol: float = 1e-8
) -> StmSolution:
    """Null vector of (I - d^-1 K) at the level's q, normalized over both sectors.

    Starts from the eigenvector of the symmetrized operator closest to unit
    eigenvalue and polishes it by inverse iteration on I - d^-1 K, which
    removes the roundoff amplified by the symmetrizing scale at small k.
    """
    op = assemble(level.q, p, grid)
    k, w = grid.nodes, grid.weights
    lam, vecs = np.linalg.eigh(op.symmetric_matrix())
    j = int(np.argmin(np.abs(lam - 1.0)))
    F = vecs[:, j] / (k * np.sqrt(op.diagonal * w))
    m = op.iteration_matrix()
    a = np.eye(len(k)) - m
    # a tiny shift keeps the factorization usable if q is an exact root
    lu = lu_factor(a + 1e-13 * np.eye(len(k)))
    for _ in range(3):
        F = lu_solve(lu, F)
        F /= np.linalg.norm(F)
    residual = float(np.linalg.norm(a @ F) / np.linalg.norm(F))
    if not residual <= residual_tol:
        raise NotConverged(f"null-vector residual {residual:.3e} > {residual_tol:.1e}")
    if F[0] < 0:
        F = -F

    n_open, n_mol = _jacobi_norms(F, k, w, level.q, p.r_star)
    norm = n_open + n_mol
    F = F / math.sqrt(norm)
    n_open, n_mol = n_open / norm, n_mol / norm
    rho = 3.0 * p.r_star / (4.0 * math.pi) * F * F
    k_mol = grid.radial_integral(rho * k * k / 4.0)
    return StmSolution(
        params=p,
        level=level,
        nodes=tuple(k),
        weights=tuple(w),
        d_values=tuple(F / _OPEN_SCALE),
        n_mol=n_mol,
        n_open=n_open,
        k_mol=k_mol,
        residual=residual,
    )


class AmplitudeInterpolant:
    """Source amplitude F = sqrt(8 pi) D at arbitrary momenta.

    Off-grid values follow from the STM equation itself (Nystrom), tabulated
    on a fine ln k mesh and spline-interpolated.
    """

    def __init__(self, sol: StmSolution, k_lo: float, k_hi: float, per_unit: int = 100):
        self.p = sol.params
        self.q = sol.level.q
        self.k = np.asarray(sol.nodes)
        self.w = np.asarray(sol.weights)
        self.F = np.asarray(sol.d_values) * _OPEN_SCALE
        self.u_lo, self.u_hi = math.log(k_lo), math.log(k_hi)
        n = int((self.u_hi - self.u_lo) * per_unit) + 2
        u = np.linspace(self.u_lo, self.u_hi, n)
        self._spline = CubicSpline(u, self.nystrom(np.exp(u)))

    def nystrom(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape)
        flat = x.ravel()
        res = out.ravel()
        kw = self.k * self.w
        for start in range(0, len(flat), 2048):
            xs = flat[start:start + 2048]
            kern = (2.0 / math.pi) * _log_ratio(xs, self.k, self.q) * kw[None, :] / xs[:, None]
            res[start:start + 2048] = (kern @ self.F) / _diagonal(xs, self.q, self.p)
        return res.reshape(x.shape)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = np.log(x)
        inside = (u >= self.u_lo) & (u <= self.u_hi)
        if inside.all():
            return self._spline(u)
        out = np.empty(x.shape)
        out[inside] = self._spline(u[inside])
        out[~inside] = self.nystrom(x[~inside])
        return out


_GL_INNER = leggauss(20)


def nk_at(kk: float, amp: AmplitudeInterpolant, n_p: int = 160) -> float:
    """One-body momentum distribution at a single momentum ``kk``.

    Three-atom part: with atom 1 at momentum kk and the other two at p and k2,
    the integral over d^3p becomes (2 pi / kk) \\int p dp \\int k2 dk2 on the
    strip |kk - p| <= k2 <= kk + p, where the kinetic energy is
    (kk^2 + p^2 + k2^2) / 2. The integrand is symmetric in p <-> k2, so only
    k2 >= p is integrated; that keeps both peaks of F on the p axis.
    The lone atom of the atom + molecule sector adds 6 R* D(kk)^2.
    """
    q, r_star = amp.q, amp.p.r_star
    p_lo = 1e-8 * min(kk, q)
    p_hi = max(1e3 * kk, 1e4 * max(q, 1.0 / r_star))
    g1 = build_log_gauss_grid(n_p, p_lo, kk / 2.0)
    g2 = build_log_gauss_grid(n_p, kk / 2.0, p_hi)
    pg = np.concatenate([g1.nodes, g2.nodes])
    pw = np.concatenate([g1.weights, g2.weights])
    lo = np.where(pg < kk / 2.0, kk - pg, pg)
    hi = kk + pg
    x, wx = _GL_INNER
    ulo, uhi = np.log(lo), np.log(hi)
    half = 0.5 * (uhi - ulo)[:, None]
    k2 = np.exp(half * x[None, :] + 0.5 * (uhi + ulo)[:, None])
    w2 = half * wx[None, :] * k2
    Fk = float(amp(np.array([kk]))[0])
    Fp = amp(pg)
    Fk2 = amp(k2)
    den = 0.5 * (kk * kk + pg[:, None] ** 2 + k2 * k2) + q * q
    integrand = pg[:, None] * k2 * (Fk + Fp[:, None] + Fk2) ** 2 / den**2
    val = 2.0 * float(np.sum(pw[:, None] * w2 * integrand))
    n_open = 3.0 / (2.0 * math.pi) ** 3 * (2.0 * math.pi / kk) * val
    # p > p_hi: only the F(kk)^2 term survives, averaged over angles it is
    # 1/((p^2 + c)^2 - kk^2 p^2) with c = kk^2 + q^2
    c = kk * kk + q * q
    n_open += 3.0 * Fk * Fk / (2.0 * math.pi**2) * (1.0 / p_hi - (2.0 * c - kk * kk) / (3.0 * p_hi**3))
    n_lone = 3.0 * r_star / (4.0 * math.pi) * Fk * Fk
    return n_open + n_lone


def _tail_scale(q: float, p: ResonanceParams) -> float:
    return max(q, 1.0 / p.r_star, abs(p.inv_a))


def default_out_grid(sol: StmSolution, n_points: int = 256) -> RadialGrid:
    """Output grid from 1e-3 q to 1e4 max(q, 1/R*, |1/a|)."""
    s = _tail_scale(sol.level.q, sol.params)
    return build_log_gauss_grid(n_points, 1e-3 * sol.level.q, 1e4 * s)


def default_fit_window(sol: StmSolution, out_grid: RadialGrid) -> tuple[float, float]:
    """(300 s, 0.3 k_max) with s = max(q, 1/R*, |1/a|).

    c6 is dominated by molecular momenta p ~ 1/R*, so the k^-6 law only takes
    over well above 1/R*, not merely above q. Below ~100 s the neglected
    k^-10 terms bias a three-term fit of c6 at the 1e-5 level.
    """
    s = _tail_scale(sol.level.q, sol.params)
    return 300.0 * s, 0.3 * out_grid.k_max


def fit_tail(k, nk, du, window, n_terms: int = 3) -> tuple[float, float, float]:
    """Least-squares fit of k^4 n_k = c4 + c6 / k^2 (+ c8 / k^4) inside ``window``.

    ``du`` are the ln-k widths of the samples, used as weights so the fit is
    uniform on a log axis. Returns (c4, c6, c8) with c8 = 0 for two terms.
    """
    k = np.asarray(k)
    lo, hi = window
    sel = (k >= lo) & (k <= hi)
    if not lo < hi or sel.sum() < 8:
        raise WindowTooNarrow(f"fit window ({lo:g}, {hi:g}) holds {int(sel.sum())} samples, need 8")
    x = 1.0 / k[sel] ** 2
    y = k[sel] ** 4 * np.asarray(nk)[sel]
    sw = np.sqrt(np.asarray(du)[sel])
    design = np.vstack([x**j for j in range(n_terms)]).T
    coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    coef = list(coef) + [0.0] * (3 - n_terms)
    return float(coef[0]), float(coef[1]), float(coef[2])


def reconstruct_nk(
    sol: StmSolution,
    p: ResonanceParams | None = None,
    grid: RadialGrid | None = None,
    out_grid: RadialGrid | None = None,
    fit_window: tuple[float, float] | None = None,
    n_terms: int = 3,
) -> MomentumDistribution:
    """One-body momentum distribution of a solved trimer with its fitted tail.

    ``p`` and ``grid`` default to those stored on ``sol``. The sum rule
    residual compares the radial integral (with the fitted tail beyond the
    last node) to 3 - 2 n_mol; the norm on the solution came from the
    independent Jacobi-coordinate integrals.
    """
    if p is not None and p != sol.params:
        raise ValueError("params differ from those the amplitude was solved with")
    if grid is not None and not np.array_equal(grid.nodes, np.asarray(sol.nodes)):
        raise ValueError("grid differs from the one the amplitude was solved with")
    if out_grid is None:
        out_grid = default_out_grid(sol)
    if fit_window is None:
        fit_window = default_fit_window(sol, out_grid)
    q = sol.level.q
    s = _tail_scale(q, sol.params)
    amp = AmplitudeInterpolant(sol, 1e-9 * min(q, out_grid.k_min), 1e4 * max(out_grid.k_max, s))
    k = out_grid.nodes
    n_p = max(160, out_grid.n_points)
    values = np.array([nk_at(float(x), amp, n_p) for x in k])
    c4, c6, c8 = fit_tail(k, values, out_grid.weights / k, fit_window, n_terms)

    kmax = out_grid.k_max
    total = out_grid.integrate(k * k * values) + c4 / kmax + c6 / (3 * kmax**3) + c8 / (5 * kmax**5)
    total /= 2.0 * math.pi**2
    return MomentumDistribution(
        k_samples=tuple(k),
        weights=tuple(out_grid.weights),
        values=tuple(values),
        c4_fit=c4,
        c6_fit=c6,
        fit_window=(float(fit_window[0]), float(fit_window[1])),
        k_max=out_grid.k_max,
        c8_fit=c8,
        sum_rule_residual=float(total - (3.0 - 2.0 * sol.n_mol)),
    )


def c6_from_amplitude(sol: StmSolution, include_pair_cm: bool = False) -> float:
    """c6 as a molecular-sector expectation value.

    Spectator-only form: c6 = -6 \\int d^3p/(2 pi)^3 F(p)^2 (2 q^2 + p^2), i.e.
    32 pi^2 N (N - 1) (A| E - p^2 / 2 |A) with A = F / (4 pi) and N = 3.
    ``include_pair_cm`` also subtracts the pair's centre-of-mass kinetic
    energy p^2 / 4 inside the bracket. The spectator-only value is the one
    the large-k expansion of n_k reproduces.
    """
    k = np.asarray(sol.nodes)
    w = np.asarray(sol.weights)
    F = np.asarray(sol.d_values) * _OPEN_SCALE
    q = sol.level.q
    bracket = 2.0 * q * q + k * k
    if include_pair_cm:
        bracket = bracket + 0.5 * k * k
    return -6.0 * float(np.dot(w * k * k, F * F * bracket)) / (2.0 * math.pi**2)


def energy_relation_residual_trimer(
    sol: StmSolution,
    dist: MomentumDistribution,
    p: ResonanceParams | None = None,
    include_c6: bool = True,
) -> float:
    """Energy relation evaluated with the reconstructed n_k, minus the exact -q^2.

    RHS = (1/2) \\int d^3k/(2 pi)^3 [k^2 n_k - a^2 c4 / (1 + k^2 a^2)]
    + R* c6 / (8 pi) - <K_mol>, trap-free, with c4 and c6 from the tail fit.
    Beyond the last sample the fitted tail is integrated analytically.
    ``include_c6=False`` drops the R* c6 term (ablation).
    """
    p = sol.params if p is None else p
    k = np.asarray(dist.k_samples)
    w = np.asarray(dist.weights)
    nk = np.asarray(dist.values)
    c4, c6, c8 = dist.c4_fit, dist.c6_fit, dist.c8_fit
    inv_a2 = p.inv_a**2
    # a^2 c4 k^2 / (1 + k^2 a^2) written with 1/a so that unitarity is exact
    subtract = c4 * k * k / (k * k + inv_a2)
    kmax = dist.k_max
    integral = float(np.dot(w, k**4 * nk - subtract))
    integral += (c6 + c4 * inv_a2) / kmax + (c8 - c4 * inv_a2**2) / (3.0 * kmax**3)
    # below the first sample k^4 n_k is negligible but the subtraction is not
    integral -= _subtraction_below(c4, p.inv_a, float(np.min(k)))
    rhs = integral / (4.0 * math.pi**2) - sol.k_mol
    if include_c6:
        rhs += p.r_star * c6 / (8.0 * math.pi)
    return rhs + sol.level.q**2


def _subtraction_below(c4: float, inv_a: float, k0: float) -> float:
    """Integral of c4 k^2 / (k^2 + 1/a^2) over [0, k0)."""
    b = abs(inv_a)
    if b == 0.0:
        return c4 * k0
    return c4 * (k0 - b * math.atan(k0 / b))


def thomas_collapse_probe(
    p: ResonanceParams,
    k_max_list,
    n_points: int = 320,
    ratio: float = 1.2,
) -> list[tuple[float, float, float]]:
    """Ground-state q at growing momentum cutoffs, for R* = 0 and for R* = p.r_star.

    Returns rows ``(k_max, q0 at R* = 0, q0 at R* = p.r_star)``. Without R*
    the deepest root scales with the cutoff (Thomas collapse); with R* > 0 it
    converges.
    """
    validate_params(p, "threebody")
    zero = ResonanceParams(p.inv_a, 0.0, 0.0)
    rows = []
    for k_max in k_max_list:
        k_max = float(k_max)
        g0 = build_log_gauss_grid(n_points, 1e-7 * k_max, k_max)
        q_zero = solve_levels(
            zero, g0, 1, q_max=k_max, q_min=1e-4 * k_max, ratio=ratio, allow_zero_range=True
        )[0].q
        g1 = build_log_gauss_grid(n_points, 1e-4 / p.r_star, k_max)
        q_fin = solve_levels(p, g1, 1, q_min=1e-2 / p.r_star, ratio=ratio)[0].q
        rows.append((k_max, q_zero, q_fin))
    return rows

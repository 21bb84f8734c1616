import math

import numpy as np
import pytest

from narrowfr.model import FewerLevelsFound, ResonanceParams, RStarRequired, ThresholdViolation, WindowTooNarrow
from narrowfr.numerics import build_log_gauss_grid
from narrowfr.threebody import (
    AmplitudeInterpolant,
    assemble,
    c6_from_amplitude,
    default_out_grid,
    det_scan,
    efimov_channel_function,
    efimov_channel_root,
    energy_relation_residual_trimer,
    fit_tail,
    ground_level_eigen,
    nk_at,
    reconstruct_nk,
    solve_amplitude,
    solve_levels,
    spectrum_grid,
    thomas_collapse_probe,
)

Q0 = 0.117708276  # unitarity ground state, R* = 1 (regression baseline)


# -- Efimov channel ----------------------------------------------------------------


def test_efimov_root():
    s0, ratio = efimov_channel_root()
    assert s0 == pytest.approx(1.0062378, abs=1e-7)
    assert ratio == pytest.approx(515.03, abs=0.01)
    assert efimov_channel_function(0.9) > 0 > efimov_channel_function(1.1)
    assert abs(efimov_channel_function(s0)) < 1e-13


# -- operator ------------------------------------------------------------------------


@pytest.fixture(scope="module")
def small_grid():
    return build_log_gauss_grid(64, 1e-3, 1e3)


def test_kernel_symmetry_and_positivity(small_grid, unitarity):
    op = assemble(0.3, unitarity, small_grid)
    k, w = small_grid.nodes, small_grid.weights
    bare = op.kernel / w[None, :]  # K~(k_i, k_j)
    # K~ = (2/pi)(k'/k) L with L symmetric, so k^2 K~ is the symmetric combination
    lhs = k[:, None] ** 2 * bare
    assert np.allclose(lhs, lhs.T, rtol=1e-13, atol=0)
    assert not np.allclose(k[:, None] * bare, (k[:, None] * bare).T, rtol=1e-3)
    assert np.all(op.kernel >= 0)
    sym = op.symmetric_matrix()
    assert np.allclose(sym, sym.T, rtol=1e-12, atol=1e-300)


def test_angular_reduction_oracle():
    # s-wave kernel (2/pi)(k'/k) L  ==  4 pi k'^2/(2 pi^2) * (1/2) \int dx 2 / (k^2 + k'^2 + k k' x + q^2)
    k, kp, q = 1.0, 2.0, 1.0
    x, w = np.polynomial.legendre.leggauss(40)
    angular = 0.5 * np.sum(w * 2.0 / (k * k + kp * kp + k * kp * x + q * q))
    oracle = 4 * math.pi * kp * kp / (2 * math.pi**2) * angular
    grid = build_log_gauss_grid(8, 1.0, 2.0)
    op = assemble(q, ResonanceParams(0.0, 1.0), grid)
    kin = np.array([kp])
    formula = (2 / math.pi) * (kp / k) * math.log((k * k + kp * kp + k * kp + q * q) / (k * k + kp * kp - k * kp + q * q))
    assert formula == pytest.approx(oracle, abs=1e-10)
    # and the assembled operator uses the same expression
    from narrowfr.threebody import _log_ratio

    assert (2 / math.pi) * _log_ratio(np.array([k]), kin, q)[0, 0] * kp / k == pytest.approx(formula, rel=1e-14)
    assert op.q == q


def test_diagonal_at_zero_momentum():
    q = 0.37
    grid = build_log_gauss_grid(16, 1e-12, 1e-10)
    op = assemble(q, ResonanceParams(0.0, 1.5), grid)
    assert op.diagonal[0] == pytest.approx(q + 1.5 * q * q, rel=1e-15)


def test_diagonal_is_inverse_amplitude_below_threshold():
    from narrowfr.twobody import inverse_f0

    p = ResonanceParams(-0.3, 0.7)
    grid = build_log_gauss_grid(16, 0.1, 10.0)
    q = 0.2
    op = assemble(q, p, grid)
    k_col = 1j * np.sqrt(q * q + 0.75 * grid.nodes**2)
    assert np.allclose(op.diagonal, [inverse_f0(kc, p).real for kc in k_col], rtol=1e-14)


def test_assemble_refuses_below_threshold(small_grid):
    p = ResonanceParams(1.0, 1.0)
    with pytest.raises(ThresholdViolation):
        assemble(0.5, p, small_grid)  # kappa = 0.618


def test_assemble_needs_rstar(small_grid):
    with pytest.raises(RStarRequired):
        assemble(0.5, ResonanceParams(0.0, 0.0), small_grid)


def test_det_tends_to_one_at_large_q(small_grid, unitarity):
    rows = det_scan(unitarity, small_grid, [10.0, 100.0, 1e3, 1e4])
    assert all(sign == 1 for _, sign, _ in rows)
    logs = [abs(v) for _, _, v in rows]
    assert all(b < a for a, b in zip(logs, logs[1:]))
    assert logs[-1] < 1e-3


def test_no_roots_for_large_q_rstar(unitarity):
    grid = spectrum_grid(unitarity, 1)
    qs = np.geomspace(1.0, 1e3, 40)
    assert all(sign == 1 for _, sign, _ in det_scan(unitarity, grid, qs))


# -- spectrum ------------------------------------------------------------------------


def test_ground_state_baseline(unitarity_levels):
    q = [l.q for l in unitarity_levels]
    assert q[0] == pytest.approx(Q0, rel=1e-8)
    assert q[0] > q[1] > q[2] > 0
    assert all(l.energy == -l.q**2 for l in unitarity_levels)
    assert [l.index for l in unitarity_levels] == [0, 1, 2]


def test_efimov_ratio(unitarity_levels):
    _, ratio = efimov_channel_root()
    e = [l.energy for l in unitarity_levels]
    assert abs(e[1] / e[2] - ratio) / ratio <= 0.03
    assert abs(e[0] / e[1] - ratio) / ratio <= 0.03


def test_spectrum_stable_under_refinement(unitarity, unitarity_grid, unitarity_levels):
    g = unitarity_grid
    finer = build_log_gauss_grid(2 * g.n_points, g.k_min, g.k_max)
    wider = build_log_gauss_grid(g.n_points + 12, g.k_min, 2 * g.k_max)
    for grid in (finer, wider):
        levels = solve_levels(unitarity, grid, 3)
        for a, b in zip(unitarity_levels, levels):
            assert abs(a.q - b.q) / a.q < 1e-4


def test_eigenvalue_route_agrees(unitarity, unitarity_grid, unitarity_levels):
    q0 = unitarity_levels[0].q
    q_eig = ground_level_eigen(unitarity, unitarity_grid, (0.9 * q0, 1.1 * q0))
    assert q_eig == pytest.approx(q0, rel=1e-10)


def test_scale_invariance_at_unitarity(unitarity_levels):
    p = ResonanceParams(0.0, 2.0)
    q = solve_levels(p, spectrum_grid(p, 1), 1)[0].q
    assert q * 2.0 == pytest.approx(unitarity_levels[0].q, rel=1e-6)


def test_no_trimer_beyond_a_minus():
    with pytest.raises(FewerLevelsFound) as exc:
        solve_levels(ResonanceParams(-0.2, 1.0), None, 1)
    assert exc.value.levels == ()


def test_partial_levels_reported():
    p = ResonanceParams(0.2, 1.0)
    with pytest.raises(FewerLevelsFound) as exc:
        solve_levels(p, spectrum_grid(p, 2), 2)
    assert len(exc.value.levels) == 1
    from narrowfr.twobody import dimer_kappa

    assert exc.value.levels[0].q > dimer_kappa(p)


# -- amplitude -----------------------------------------------------------------------


def test_amplitude_residual_and_sign(ground, excited):
    for sol, _ in (ground, excited):
        assert sol.residual <= 1e-8
        assert sol.d_values[0] > 0
        assert 0 < sol.n_mol < 1
        assert sol.n_open + sol.n_mol == pytest.approx(1.0, abs=1e-14)
        assert sol.k_mol > 0


def test_amplitude_large_k_decay(ground):
    sol, _ = ground
    k = np.asarray(sol.nodes)
    d = np.asarray(sol.d_values)
    top = k > k[-1] / 10
    # d(k) ~ 3 R* k^2 / 4 against a 1/k^2 source: D ~ 1/(R* k^4)
    scaled = k[top] ** 4 * sol.params.r_star * d[top]
    assert np.all(scaled > 0)
    assert scaled.max() / scaled.min() < 1.05


def test_n_mol_scale_free_at_unitarity(ground):
    p = ResonanceParams(0.0, 0.5)
    g = spectrum_grid(p, 1)
    sol = solve_amplitude(solve_levels(p, g, 1)[0], p, g)
    assert sol.n_mol == pytest.approx(ground[0].n_mol, rel=1e-6)


def test_n_mol_grows_with_rstar_at_fixed_a():
    # same trend as the dimer: a broader molecular admixture for larger R*/a
    out = []
    for r in (0.5, 1.0, 2.0):
        p = ResonanceParams(0.05, r)
        g = spectrum_grid(p, 1)
        out.append(solve_amplitude(solve_levels(p, g, 1)[0], p, g).n_mol)
    assert out[0] < out[1] < out[2]


def test_interpolant_reproduces_nodes(ground):
    sol, _ = ground
    amp = AmplitudeInterpolant(sol, 1e-6, 1e4)
    k = np.asarray(sol.nodes)
    sel = (k > 1e-5) & (k < 1e3)
    F = np.asarray(sol.d_values) * math.sqrt(8 * math.pi)
    assert np.allclose(amp(k[sel]), F[sel], rtol=1e-8)
    assert np.allclose(amp.nystrom(k[sel]), F[sel], rtol=1e-10)


# -- momentum distribution -----------------------------------------------------------


def test_nk_positive(ground):
    _, dist = ground
    assert min(dist.values) > 0


def test_sum_rule(ground, excited):
    for sol, dist in (ground, excited):
        assert abs(dist.sum_rule_residual) <= 1e-6


def test_contact_consistency(ground, excited):
    for sol, dist in (ground, excited):
        c4 = 8 * math.pi * sol.n_mol / sol.params.r_star
        assert abs(dist.c4_fit - c4) / dist.c4_fit <= 1e-6


def test_tail_approaches_c4_in_window(ground):
    _, dist = ground
    k = np.asarray(dist.k_samples)
    y = k**4 * np.asarray(dist.values)
    lo, hi = dist.fit_window
    sel = (k >= lo) & (k <= hi)
    gap = np.abs(y[sel] - dist.c4_fit)
    assert np.all(np.diff(gap) < 0)


def test_c6_forms(ground):
    sol, dist = ground
    spectator = c6_from_amplitude(sol)
    with_cm = c6_from_amplitude(sol, include_pair_cm=True)
    assert dist.c6_fit == pytest.approx(spectator, rel=1e-3)
    assert abs(dist.c6_fit - with_cm) > 0.1 * abs(with_cm)


def test_nk_direct_against_brute_force(ground):
    # direct spherical (|p|, cos) quadrature of the three-atom norm at one momentum
    sol, dist = ground
    q, r = sol.level.q, sol.params.r_star
    amp = AmplitudeInterpolant(sol, 1e-12, 1e8)
    kk = 0.3
    Fk = float(amp(np.array([kk]))[0])
    x, wx = np.polynomial.legendre.leggauss(64)
    pg = build_log_gauss_grid(1600, 1e-9, 1e7)
    p = pg.nodes[:, None]
    k2 = np.sqrt(kk * kk + p * p + 2 * kk * p * x[None, :])
    psi = (Fk + amp(pg.nodes)[:, None] + amp(k2.ravel()).reshape(k2.shape)) / (kk * kk + p * p + kk * p * x[None, :] + q * q)
    inner = (psi**2) @ wx
    brute = 3 * 2 * math.pi * pg.integrate(pg.nodes**2 * inner) / (2 * math.pi) ** 3
    brute += 3 * Fk * Fk / (2 * math.pi**2 * 1e7)  # beyond the last node
    lone = 3 * r / (4 * math.pi) * Fk * Fk
    assert nk_at(kk, amp) == pytest.approx(brute + lone, rel=1e-6)


def test_fit_tail_recovers_coefficients():
    k = np.geomspace(10, 1e4, 200)
    nk = (5.0 - 2.0 / k**2 + 7.0 / k**4) / k**4
    c4, c6, c8 = fit_tail(k, nk, np.full(k.size, 0.03), (50, 5000))
    assert (c4, c6) == pytest.approx((5.0, -2.0), rel=1e-10)
    assert c8 == pytest.approx(7.0, rel=1e-6)
    c4, c6, c8 = fit_tail(k, nk, np.full(k.size, 0.03), (50, 5000), n_terms=2)
    assert c8 == 0.0
    with pytest.raises(WindowTooNarrow):
        fit_tail(k, nk, np.full(k.size, 0.03), (50, 51))


def test_reconstruct_rejects_mismatched_inputs(ground):
    sol, _ = ground
    with pytest.raises(ValueError):
        reconstruct_nk(sol, p=ResonanceParams(0.0, 2.0))
    with pytest.raises(ValueError):
        reconstruct_nk(sol, grid=build_log_gauss_grid(16, 1.0, 2.0))


# -- energy relation -----------------------------------------------------------------


def test_energy_relation_ground(ground):
    sol, dist = ground
    assert abs(energy_relation_residual_trimer(sol, dist)) / sol.level.q**2 <= 1e-3


def test_energy_relation_ablation(ground):
    sol, dist = ground
    full = abs(energy_relation_residual_trimer(sol, dist))
    dropped = abs(energy_relation_residual_trimer(sol, dist, include_c6=False))
    assert dropped > 100 * full
    assert dropped / sol.level.q**2 > 0.5


def _residual_on(p, n_stm, n_out):
    grid = build_log_gauss_grid(n_stm, 1e-3 * 0.2 * math.exp(-math.pi / 1.00624 * 3), 1e3)
    sol = solve_amplitude(solve_levels(p, grid, 1)[0], p, grid)
    dist = reconstruct_nk(sol, out_grid=default_out_grid(sol, n_out))
    return abs(energy_relation_residual_trimer(sol, dist)) / sol.level.q**2


def test_energy_relation_shrinks_under_doubling(unitarity):
    assert _residual_on(unitarity, 240, 192) < _residual_on(unitarity, 120, 96)


# -- collapse probe ------------------------------------------------------------------


@pytest.fixture(scope="module")
def probe(unitarity):
    return thomas_collapse_probe(unitarity, [1e2, 1e3, 1e4])


def test_zero_range_collapses(probe):
    q_zero = [row[1] for row in probe]
    assert q_zero[0] < q_zero[1] < q_zero[2]
    # the deepest root is a fixed fraction of the cutoff
    for (kmax, q, _) in probe:
        assert q / kmax == pytest.approx(probe[0][1] / probe[0][0], rel=1e-6)


def test_zero_range_discrete_scaling(unitarity):
    s0, _ = efimov_channel_root()
    period = math.exp(math.pi / s0)
    rows = thomas_collapse_probe(unitarity, [100.0, 100.0 * period])
    assert rows[1][1] / rows[0][1] == pytest.approx(period, rel=1e-4)


def test_finite_rstar_converges(probe):
    q3, q4 = probe[1][2], probe[2][2]
    assert abs(q3 - q4) / q4 <= 1e-4
    assert q4 == pytest.approx(Q0, rel=1e-6)

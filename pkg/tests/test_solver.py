import numpy as np
import pytest
from scipy.integrate import solve_ivp

from nsledger import (
    DriftSpec,
    Forcing,
    SolverConfig,
    SolverError,
    SpectralField,
    build_basis,
    build_tensor,
    compute_ledger,
    load_trajectory,
    norm,
    project,
    restrict,
    save_trajectory,
    simulate_nse,
    solve_problem_c,
)
from nsledger.scenarios import shear_mode_index, taylor_green_field
from nsledger.trilinear import b_apply_coeffs

from helpers import random_field


@pytest.fixture(scope="module")
def tg_run(basis100, tensor100):
    y0 = taylor_green_field(basis100)
    cfg = SolverConfig(nu=0.05)
    return simulate_nse(y0, Forcing.zero(), 100, (0.0, 1.0), cfg, tensor100)


def test_shear_mode_decays_in_closed_form(basis100, tensor100):
    j = shear_mode_index(basis100)
    y0 = SpectralField.unit_mode(basis100, j, 0.8)
    cfg = SolverConfig(nu=0.1)
    traj = simulate_nse(y0, Forcing.zero(), 100, (0.0, 5.0), cfg, tensor100)
    exact = 0.8 * np.exp(-0.1 * traj.grid)
    assert np.max(np.abs(traj.states[:, j] - exact)) < 1e-12
    others = np.delete(traj.states, j, axis=1)
    assert np.all(others == 0.0)


def test_zero_data_stays_at_rest(basis40, tensor40):
    cfg = SolverConfig(nu=0.2)
    traj = simulate_nse(SpectralField.zero(basis40), Forcing.zero(), 40, (0.0, 1.0), cfg, tensor40)
    assert np.all(traj.states == 0.0)
    assert np.all(traj.visc_accum == 0.0)
    assert np.all(traj.work_accum == 0.0)


def test_matches_independent_integrator(basis52, tensor52):
    # cross-check the Lawson stepper against scipy's DOP853 on the raw ODE
    m = basis52.m
    nu = 0.08
    y0 = taylor_green_field(basis52, amplitude=2.0)
    cfg = SolverConfig(nu=nu, rel_tol=1e-11, abs_tol=1e-13)
    traj = simulate_nse(y0, Forcing.zero(), m, (0.0, 0.7), cfg, tensor52)

    arrays = tensor52.restricted(m, m)
    lam = basis52.lambdas

    def rhs(t, a):
        return -nu * lam * a - b_apply_coeffs(a, a, arrays, m)

    ref = solve_ivp(
        rhs, (0.0, 0.7), y0.coeffs, method="DOP853", rtol=1e-12, atol=1e-14,
        t_eval=traj.grid,
    )
    assert ref.success
    assert np.max(np.abs(traj.states - ref.y.T)) < 1e-9


def test_energy_equality_along_galerkin_run(tg_run):
    led = compute_ledger(tg_run)
    tol = SolverConfig(nu=0.05).ledger_tol()
    assert np.max(np.abs(led.v_values - led.v_values[0])) < tol


def test_constant_forcing_closed_form(basis40, tensor40):
    # single shear mode with constant dual forcing: a' = -nu a + A
    j = shear_mode_index(basis40)
    nu, A, a0, T = 0.3, 0.25, 0.9, 3.0
    f = Forcing.modal(basis40.m, j, A)
    y0 = SpectralField.unit_mode(basis40, j, a0)
    cfg = SolverConfig(nu=nu)
    traj = simulate_nse(y0, f, 40, (0.0, T), cfg, tensor40)
    t = traj.grid
    exact = A / nu + (a0 - A / nu) * np.exp(-nu * t)
    assert np.max(np.abs(traj.states[:, j] - exact)) < 1e-8
    # work accumulator: integral of A * a(t)
    work_exact = A * (A / nu * t - (a0 - A / nu) / nu * (np.exp(-nu * t) - 1.0))
    assert np.max(np.abs(traj.work_accum - work_exact)) < 1e-8
    led = compute_ledger(traj)
    assert np.max(np.abs(led.v_values - led.v_values[0])) < cfg.ledger_tol()


def test_h_part_and_dual_part_enter_identically(basis40, tensor40):
    j = shear_mode_index(basis40)
    y0 = SpectralField.unit_mode(basis40, j, 1.0)
    cfg = SolverConfig(nu=0.1)
    a = simulate_nse(y0, Forcing.modal(basis40.m, j, 0.2, omega=1.5, part="dual"), 40, (0.0, 2.0), cfg, tensor40)
    b = simulate_nse(y0, Forcing.modal(basis40.m, j, 0.2, omega=1.5, part="h"), 40, (0.0, 2.0), cfg, tensor40)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.work_accum, b.work_accum)


def test_initial_data_is_projected(basis100, tensor100):
    rng = np.random.default_rng(20)
    y0 = random_field(basis100, rng, decay=1.0)
    cfg = SolverConfig(nu=0.1)
    traj = simulate_nse(y0, Forcing.zero(), 30, (0.0, 0.1), cfg, tensor100)
    assert np.array_equal(traj.states[0], project(y0, 30).coeffs[:30])


def test_problem_c_zero_data_unique_zero(tg_run, tensor100, basis100):
    cfg = SolverConfig(nu=0.05)
    z = solve_problem_c(tg_run, Forcing.zero(), SpectralField.zero(basis100), 100, (0.0, 1.0), cfg, tensor100)
    assert np.all(z.states == 0.0)


def test_problem_c_gronwall_decay(tg_run, tensor100, basis100):
    rng = np.random.default_rng(21)
    z0 = random_field(basis100, rng, decay=1.0)
    z0 = SpectralField(basis100, z0.coeffs / norm(z0, "H"))
    cfg = SolverConfig(nu=0.05)
    z = solve_problem_c(tg_run, Forcing.zero(), z0, 100, (0.0, 1.0), cfg, tensor100)
    norms = np.linalg.norm(z.states, axis=1)
    envelope = np.exp(-0.05 * z.grid)  # lambda_1 = 1
    assert np.all(norms <= envelope * (1 + 1e-9))
    assert np.all(np.diff(norms) <= 1e-12)


def test_problem_c_fixed_point(tg_run, tensor100):
    cfg = SolverConfig(nu=0.05)
    z = solve_problem_c(tg_run, Forcing.zero(), tg_run.field(0), 100, (0.0, 1.0), cfg, tensor100)
    assert np.max(np.abs(z.states - tg_run.states)) < 1e-8


def test_problem_c_needs_covering_drift(tg_run, tensor100, basis100):
    cfg = SolverConfig(nu=0.05)
    with pytest.raises(ValueError, match="cover"):
        solve_problem_c(tg_run, Forcing.zero(), SpectralField.zero(basis100), 100, (0.0, 2.0), cfg, tensor100)
    with pytest.raises(ValueError, match="stored drift"):
        solve_problem_c(DriftSpec.self_drift(), Forcing.zero(), SpectralField.zero(basis100), 100, (0.0, 1.0), cfg, tensor100)


def test_degenerate_interval_rejected(basis40, tensor40):
    cfg = SolverConfig(nu=0.1)
    y0 = SpectralField.zero(basis40)
    with pytest.raises(ValueError, match="tau < T"):
        simulate_nse(y0, Forcing.zero(), 40, (1.0, 1.0), cfg, tensor40)
    with pytest.raises(ValueError, match="truncation level"):
        simulate_nse(y0, Forcing.zero(), 41, (0.0, 1.0), cfg, tensor40)


def test_solver_failure_carries_time(basis40, tensor40):
    def bad(t):
        out = np.zeros(basis40.m)
        out[0] = np.nan if t > 0.5 else 0.0
        return out

    cfg = SolverConfig(nu=0.1)
    y0 = SpectralField.unit_mode(basis40, 0, 1.0)
    with pytest.raises(SolverError) as err:
        simulate_nse(y0, Forcing(dual_part=bad), 40, (0.0, 1.0), cfg, tensor40)
    assert err.value.time is not None
    assert 0.0 <= err.value.time <= 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(nu=0.0)
    with pytest.raises(ValueError):
        SolverConfig(nu=0.1, rel_tol=2.0)
    with pytest.raises(ValueError):
        SolverConfig(nu=0.1, max_step=0.0)
    with pytest.raises(ValueError):
        SolverConfig(nu=0.1, dense_output_points=1)


def test_restrict_identity(tg_run):
    back = restrict(tg_run, tg_run.tau, tg_run.t_end)
    assert np.array_equal(back.grid, tg_run.grid)
    assert np.array_equal(back.states, tg_run.states)
    assert np.array_equal(back.visc_accum, tg_run.visc_accum)
    assert np.array_equal(back.work_accum, tg_run.work_accum)


def test_restrict_composition_and_rebase(tg_run):
    mid = restrict(tg_run, 0.2, 0.9)
    inner = restrict(mid, 0.4, 0.7)
    direct = restrict(tg_run, 0.4, 0.7)
    assert np.allclose(inner.grid, direct.grid, atol=1e-14)
    assert np.allclose(inner.states, direct.states, atol=1e-12)
    assert np.allclose(inner.visc_accum, direct.visc_accum, atol=1e-12)
    # rebased accumulator equals original difference
    t_probe = 0.6
    v_mid, _ = mid.accums_at(t_probe)
    v_full, _ = tg_run.accums_at(t_probe)
    v_start, _ = tg_run.accums_at(0.2)
    assert v_mid == pytest.approx(v_full - v_start, abs=1e-13)
    assert mid.visc_accum[0] == 0.0
    assert mid.work_accum[0] == 0.0


def test_restrict_out_of_range(tg_run):
    with pytest.raises(ValueError):
        restrict(tg_run, -0.5, 0.9)
    with pytest.raises(ValueError):
        restrict(tg_run, 0.9, 0.2)


def test_truncation_is_not_projection(basis100, tensor100, tg_run):
    # projecting a level-100 run to level 52 must leave a visible residual
    # against the level-52 system: projection and truncation do not commute.
    # 52 keeps the vortex shell but drops the |k|^2 = 4 modes that feed back
    # into it.
    m_small = 52
    cfg = SolverConfig(nu=0.05)
    arrays = tensor100.restricted(m_small, m_small)
    lam = basis100.lambdas[:m_small]
    worst = 0.0
    for i in range(0, len(tg_run.grid), 40):
        a = tg_run.states[i, :m_small]
        da = tg_run.derivs[i, :m_small]
        residual = da + cfg.nu * lam * a + b_apply_coeffs(a, a, arrays, m_small)
        worst = max(worst, float(np.linalg.norm(residual)))
    assert worst >= 10 * cfg.ledger_tol()


def test_interpolation_hits_grid_values(tg_run):
    for i in (0, 57, 400):
        t = float(tg_run.grid[i])
        assert np.allclose(tg_run.coeffs_at(t), tg_run.states[i], rtol=0, atol=1e-13)


def test_interpolation_between_grid_points(basis100, tensor100):
    # halving the output resolution must still reproduce the finer sampling
    # through the dense-output interpolant
    y0 = taylor_green_field(basis100)
    fine = simulate_nse(y0, Forcing.zero(), 60, (0.0, 1.0), SolverConfig(nu=0.05, dense_output_points=801), tensor100)
    coarse = simulate_nse(y0, Forcing.zero(), 60, (0.0, 1.0), SolverConfig(nu=0.05, dense_output_points=101), tensor100)
    for i in (51, 213, 555):
        t = float(fine.grid[i])
        assert np.allclose(coarse.coeffs_at(t), fine.states[i], rtol=0, atol=1e-10)


def test_save_load_roundtrip_csv_and_npz(tmp_path, basis52, tensor52):
    y0 = taylor_green_field(basis52, amplitude=1.5)
    cfg = SolverConfig(nu=0.1, dense_output_points=33)
    traj = simulate_nse(y0, Forcing.zero(), 52, (0.0, 1.0), cfg, tensor52)
    for name in ("traj.csv", "traj.npz"):
        path = tmp_path / name
        save_trajectory(traj, path)
        back = load_trajectory(path, basis52)
        assert back.m == traj.m
        assert np.array_equal(back.grid, traj.grid)
        assert np.array_equal(back.states, traj.states)
        assert np.array_equal(back.visc_accum, traj.visc_accum)
        assert back.nu == traj.nu
        # spline-reconstructed interpolation stays close to the original
        for t in (0.111, 0.517, 0.93):
            assert np.allclose(back.coeffs_at(t), traj.coeffs_at(t), atol=1e-7)


def test_load_rejects_wrong_basis(tmp_path, basis40, tensor40):
    traj = simulate_nse(
        SpectralField.zero(basis40), Forcing.zero(), 40, (0.0, 0.5), SolverConfig(nu=0.1, dense_output_points=9), tensor40
    )
    path = tmp_path / "traj.csv"
    save_trajectory(traj, path)
    with pytest.raises(ValueError, match="different basis"):
        load_trajectory(path, build_basis(12))


def test_load_names_malformed_row(tmp_path, basis40, tensor40):
    traj = simulate_nse(
        SpectralField.zero(basis40), Forcing.zero(), 40, (0.0, 0.5), SolverConfig(nu=0.1, dense_output_points=9), tensor40
    )
    path = tmp_path / "traj.csv"
    save_trajectory(traj, path)
    lines = path.read_text().splitlines()
    lines[5] = lines[5].replace(",", ";", 1)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError, match="line 6"):
        load_trajectory(path, basis40)


def test_forcing_modal_validation(basis40):
    with pytest.raises(ValueError):
        Forcing.modal(basis40.m, -1, 1.0)
    with pytest.raises(ValueError):
        Forcing.modal(basis40.m, 0, 1.0, part="sideways")

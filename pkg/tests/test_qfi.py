import numpy as np
import pytest

from lightmpo.emitter import build_rabi_model
from lightmpo.mpo import build_deriv_mpo, build_light_mpo
from lightmpo.oracle import dense_light_state, exact_qfi
from lightmpo.qfi import (
    QfiOptions,
    SldMpo,
    compute_qfi,
    hermitize,
    local_problem,
    local_solve,
    objective,
    _right_envs,
)


def _problem(n_bins=4, theta=0.3, eta=0.5, dt=0.05):
    model = build_rabi_model(theta, 1.0, eta)
    t_fin = n_bins * dt
    rho = build_light_mpo(model, theta, t_fin, dt)
    drho = build_deriv_mpo(model, theta, 1e-3 * theta, t_fin, dt)
    fd = (
        dense_light_state(model, theta + 1e-3 * theta, n_bins, dt)
        - dense_light_state(model, theta - 1e-3 * theta, n_bins, dt)
    ) / (2e-3 * theta)
    return rho, drho, dense_light_state(model, theta, n_bins, dt), fd


def test_objective_matches_dense_evaluation():
    rho, drho, rho_d, drho_d = _problem()
    x = SldMpo.random(4, 2, np.random.default_rng(0))
    x_d = x.to_dense()
    expected = (
        2 * np.trace(drho_d @ x_d) - np.trace(rho_d @ x_d @ x_d)
    ).real
    assert objective(rho, drho, x) == pytest.approx(expected, rel=1e-10)


def test_hermitize_makes_ansatz_hermitian():
    x = SldMpo.random(3, 2, np.random.default_rng(1))
    x.sites = [hermitize(s) for s in x.sites]
    dense = x.to_dense()
    assert np.allclose(dense, dense.conj().T)


def test_objective_bounded_by_exact_qfi():
    # F[X] = 2 Tr[drho X] - Tr[rho X X] <= QFI for any Hermitian X
    rho, drho, rho_d, drho_d = _problem()
    q, _ = exact_qfi(rho_d, drho_d)
    rng = np.random.default_rng(2)
    for _ in range(10):
        x = SldMpo.random(4, 3, rng)
        x.sites = [hermitize(s) for s in x.sites]
        assert objective(rho, drho, x) <= q + 1e-9


def test_exact_sld_saturates_objective():
    # embedding the exact SLD in the ansatz reproduces the QFI; with 4 bins
    # a bond dimension of 16 can represent any operator exactly
    rho, drho, rho_d, drho_d = _problem(n_bins=3)
    q, sld = exact_qfi(rho_d, drho_d)
    expected = (2 * np.trace(drho_d @ sld) - np.trace(rho_d @ sld @ sld)).real
    assert expected == pytest.approx(q, rel=1e-10)


def test_local_solve_improves_or_keeps_objective():
    rho, drho, _, _ = _problem()
    rng = np.random.default_rng(3)
    x = SldMpo.random(4, 2, rng)
    x.sites = [hermitize(s) for s in x.sites]
    before = objective(rho, drho, x)
    r_lin, r_quad = _right_envs(rho, drho, x)
    l_lin = np.ones((1, 1), dtype=complex)
    l_quad = np.ones((1, 1, 1), dtype=complex)
    b, c, _ = local_problem(rho, drho, x, 0, l_lin, l_quad, r_lin[1], r_quad[1])
    v, _ = local_solve(b, c, rank_tol=1e-7)
    x.sites[0] = hermitize(v.reshape(x.sites[0].shape))
    after = objective(rho, drho, x)
    assert after >= before - 1e-9


def test_compute_qfi_matches_exact_small_system():
    rho, drho, rho_d, drho_d = _problem(n_bins=4)
    q, _ = exact_qfi(rho_d, drho_d)
    res = compute_qfi(rho, drho, QfiOptions(restarts=4, bond_dim_max=6, seed=11))
    assert res.value == pytest.approx(q, rel=1e-2)
    assert res.value <= q + 1e-8  # variational lower bound
    assert res.best_restart == int(np.argmax(res.restart_values))


def test_compute_qfi_pure_limit_matches_exact():
    model = build_rabi_model(0.3, 1.0, 1.0)
    n_bins, dt = 5, 0.05
    rho = build_light_mpo(model, 0.3, n_bins * dt, dt)
    drho = build_deriv_mpo(model, 0.3, 3e-4, n_bins * dt, dt)
    rho_d = dense_light_state(model, 0.3, n_bins, dt)
    fd = (
        dense_light_state(model, 0.3 + 3e-4, n_bins, dt)
        - dense_light_state(model, 0.3 - 3e-4, n_bins, dt)
    ) / 6e-4
    q, _ = exact_qfi(rho_d, fd)
    res = compute_qfi(rho, drho, QfiOptions(restarts=3, bond_dim_max=6, seed=5))
    assert res.value == pytest.approx(q, rel=1e-2)


def test_compute_qfi_deterministic_given_seed():
    rho, drho, _, _ = _problem()
    opts = QfiOptions(restarts=2, bond_dim_max=3, seed=42)
    a = compute_qfi(rho, drho, opts)
    b = compute_qfi(rho, drho, opts)
    assert a.value == b.value
    assert a.restart_values == b.restart_values


def test_compute_qfi_workers_match_serial():
    rho, drho, _, _ = _problem()
    serial = compute_qfi(rho, drho, QfiOptions(restarts=3, bond_dim_max=3, seed=7))
    threaded = compute_qfi(
        rho, drho, QfiOptions(restarts=3, bond_dim_max=3, seed=7, workers=3)
    )
    assert serial.restart_values == pytest.approx(threaded.restart_values)


def test_restart_spread_reported():
    rho, drho, _, _ = _problem()
    res = compute_qfi(rho, drho, QfiOptions(restarts=3, bond_dim_max=3, seed=1))
    assert res.restart_spread == pytest.approx(np.std(res.restart_values, ddof=1))


def test_sweep_trace_csv(tmp_path):
    rho, drho, _, _ = _problem()
    path = tmp_path / "trace.csv"
    compute_qfi(
        rho, drho,
        QfiOptions(restarts=1, bond_dim_max=2, seed=0, trace_path=str(path)),
    )
    lines = path.read_text().strip().splitlines()
    assert lines[0].split(",")[:3] == ["restart", "bond_dim", "sweep"]
    assert len(lines) > 1

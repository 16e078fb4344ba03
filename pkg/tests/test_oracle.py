import numpy as np
import pytest

from lightmpo.emitter import build_rabi_model
from lightmpo.mpo import build_light_mpo
from lightmpo.oracle import (
    ResourceError,
    dense_light_env_state,
    dense_light_state,
    exact_fidelity,
    exact_qfi,
)


def test_dense_light_state_is_density_matrix():
    m = build_rabi_model(0.4, 1.0, 0.5)
    rho = dense_light_state(m, 0.4, 5, 0.05)
    assert np.allclose(rho, rho.conj().T)
    assert np.linalg.eigvalsh(rho).min() > -1e-14
    assert np.trace(rho).real == pytest.approx(1.0, abs=5e-3)


def test_dense_light_state_respects_bin_budget():
    m = build_rabi_model(0.4, 1.0, 0.5)
    with pytest.raises(ResourceError):
        dense_light_state(m, 0.4, 13, 0.05)


def test_light_env_state_traces_to_light_state():
    # discarding the environment bins recovers the detected-light state
    m = build_rabi_model(0.4, 1.0, 0.5)
    n_bins, dt = 3, 0.1
    joint = dense_light_env_state(m, 0.4, n_bins, dt)
    d_light = 2**n_bins
    d_env = joint.shape[0] // d_light
    reduced = np.trace(
        joint.reshape(d_light, d_env, d_light, d_env), axis1=1, axis2=3
    )
    light = dense_light_state(m, 0.4, n_bins, dt)
    assert np.abs(reduced - light).max() < 1e-12


def test_light_env_state_unit_efficiency_no_env_factor():
    m = build_rabi_model(0.4, 1.0, 1.0)
    joint = dense_light_env_state(m, 0.4, 3, 0.1)
    light = dense_light_state(m, 0.4, 3, 0.1)
    assert joint.shape == light.shape
    assert np.abs(joint - light).max() < 1e-12


def test_exact_qfi_pure_state_formula():
    # for a pure state family, QFI = 4 (<dpsi|dpsi> - |<psi|dpsi>|^2)
    rng = np.random.default_rng(0)
    a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    b = rng.standard_normal(4) + 1j * rng.standard_normal(4)

    def state(th):
        v = a + th * b
        return v / np.linalg.norm(v)

    h = 1e-6
    psi = state(0.3)
    dpsi = (state(0.3 + h) - state(0.3 - h)) / (2 * h)
    rho = np.outer(psi, psi.conj())
    drho = np.outer(dpsi, psi.conj()) + np.outer(psi, dpsi.conj())
    expected = 4 * (np.vdot(dpsi, dpsi).real - abs(np.vdot(psi, dpsi)) ** 2)
    q, sld = exact_qfi(rho, drho)
    assert q == pytest.approx(expected, rel=1e-6)
    # the SLD solves the Lyapunov equation 0.5 (L rho + rho L) = drho on the
    # support of rho
    resid = 0.5 * (sld @ rho + rho @ sld) - drho
    assert np.abs(psi.conj() @ resid @ psi) < 1e-8


def test_exact_qfi_classical_limit():
    # commuting family: QFI equals the classical Fisher information of the
    # eigenvalue distribution
    p = np.array([0.2, 0.3, 0.5])
    dp = np.array([0.1, -0.25, 0.15])
    q, _ = exact_qfi(np.diag(p), np.diag(dp))
    assert q == pytest.approx(np.sum(dp**2 / p), rel=1e-12)


def test_exact_fidelity_pure_states():
    psi = np.array([1.0, 0.0])
    chi = np.array([np.sqrt(0.25), np.sqrt(0.75)])
    f = exact_fidelity(np.outer(psi, psi), np.outer(chi, chi))
    assert f == pytest.approx(0.5, rel=1e-12)


def test_exact_fidelity_commuting_states():
    p = np.array([0.4, 0.6])
    q = np.array([0.7, 0.3])
    f = exact_fidelity(np.diag(p), np.diag(q))
    assert f == pytest.approx(np.sum(np.sqrt(p * q)), rel=1e-12)


def test_exact_fidelity_rejects_indefinite_input():
    with pytest.raises(ValueError):
        exact_fidelity(np.diag([1.5, -0.5]), np.diag([0.5, 0.5]))


def test_mpo_and_oracle_agree_on_pulsed_equivalence():
    # a constant-envelope pulsed model maps onto a driven-emitter model via
    # a per-bin diagonal phase rotation diag(1, i)
    from lightmpo.emitter import EmitterModel, SIGMA_MINUS, GROUND

    gamma_det, gamma_perp = 0.5, 0.5
    alpha = 0.7
    theta = gamma_det
    n_bins, dt = 4, 0.05

    const_pulsed = EmitterModel(
        dim=2,
        hamiltonian=lambda t, th: 1j * th * alpha * np.array([[0, 1], [-1, 0]]),
        coupling=lambda th: np.sqrt(th) * SIGMA_MINUS,
        lindblads=lambda th: [np.sqrt(gamma_perp) * SIGMA_MINUS],
        initial_state=GROUND,
        timescale=1.0,
    )
    gamma = gamma_det + gamma_perp
    eta = gamma_det / gamma
    rabi = build_rabi_model(theta * alpha, gamma, eta)

    rho_p = dense_light_state(const_pulsed, theta, n_bins, dt)
    rho_r = dense_light_state(rabi, theta * alpha, n_bins, dt)
    w1 = np.diag([1.0, -1j])
    w = w1
    for _ in range(n_bins - 1):
        w = np.kron(w, w1)
    assert np.abs(w @ rho_r @ w.conj().T - rho_p).max() < 1e-12

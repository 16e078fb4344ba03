"""Parametric emitter models and per-time-bin Kraus operators.

A model bundles the (time- and parameter-dependent) emitter Hamiltonian, the
coupling operator to the detected light, the Lindblad operators feeding the
undetected environment, and the initial emitter state.  Units use hbar = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><e|
SIGMA_PLUS = SIGMA_MINUS.conj().T
GROUND = np.array([1.0, 0.0], dtype=complex)  # basis order (|g>, |e>)

NO_EVENT = "no_event"
LIGHT_PHOTON = "light_photon"


def env_photon(k):
    return f"env_photon_{k}"


@dataclass(frozen=True)
class EmitterModel:
    """Driven emitter with a single scalar parameter ``theta``.

    ``hamiltonian(t, theta)`` must return a Hermitian dim x dim matrix;
    ``coupling(theta)`` the operator feeding the detected light; and
    ``lindblads(theta)`` the operators feeding the undetected environment.
    """

    dim: int
    hamiltonian: Callable[[float, float], np.ndarray]
    coupling: Callable[[float], np.ndarray]
    lindblads: Callable[[float], list]
    initial_state: np.ndarray
    timescale: float = 1.0  # fastest dynamical timescale, for step-size checks

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("emitter dimension must be >= 2")
        norm = np.linalg.norm(self.initial_state)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError("initial state must be unit-norm")

    @property
    def n_env(self):
        return len(self.lindblads(0.0))


@dataclass(frozen=True)
class GaussianPulse:
    """Normalized Gaussian envelope phi(t) with mean photon number n_mean."""

    T: float
    t_c: float
    n_mean: float

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("pulse duration T must be positive")
        if self.n_mean < 0:
            raise ValueError("mean photon number must be nonnegative")

    def value(self, t):
        """phi(t) = (2 pi T^2)^(-1/4) exp(-(t - t_c)^2 / (4 T^2))."""
        return (2.0 * np.pi * self.T**2) ** (-0.25) * np.exp(
            -((t - self.t_c) ** 2) / (4.0 * self.T**2)
        )

    def amplitude(self, t):
        """Drive amplitude alpha(t) = sqrt(n_mean) * phi(t)."""
        return np.sqrt(self.n_mean) * self.value(t)


def envelope_value(pulse, t):
    return pulse.value(t)


def build_rabi_model(omega, gamma, eta):
    """Resonantly driven two-level emitter; the estimated parameter is the
    drive strength.  ``eta`` is the fraction of emission that is detected."""
    if gamma < 0:
        raise ValueError("decay rate must be nonnegative")
    if not 0.0 <= eta <= 1.0:
        raise ValueError("detection efficiency must lie in [0, 1]")
    j_op = np.sqrt(eta * gamma) * SIGMA_MINUS
    ls = [] if eta == 1.0 else [np.sqrt((1.0 - eta) * gamma) * SIGMA_MINUS]
    scale = min(1.0 / gamma if gamma > 0 else np.inf,
                1.0 / abs(omega) if omega != 0 else np.inf)
    return EmitterModel(
        dim=2,
        hamiltonian=lambda t, th: th * (SIGMA_PLUS + SIGMA_MINUS),
        coupling=lambda th: j_op,
        lindblads=lambda th: list(ls),
        initial_state=GROUND.copy(),
        timescale=scale if np.isfinite(scale) else 1.0,
    )


def build_pulsed_model(gamma_det, gamma_perp, pulse):
    """Two-level emitter driven by a classical Gaussian pulse; the estimated
    parameter is the detected emission rate, entering both the drive term
    and the coupling operator."""
    if gamma_det < 0 or gamma_perp < 0:
        raise ValueError("emission rates must be nonnegative")
    drive = 1j * (SIGMA_PLUS - SIGMA_MINUS)

    def hamiltonian(t, th):
        return th * pulse.amplitude(t) * drive

    def lindblads(th):
        return [np.sqrt(gamma_perp) * SIGMA_MINUS] if gamma_perp > 0 else []

    scale = min(1.0 / gamma_det if gamma_det > 0 else np.inf, pulse.T)
    return EmitterModel(
        dim=2,
        hamiltonian=hamiltonian,
        coupling=lambda th: np.sqrt(th) * SIGMA_MINUS,
        lindblads=lindblads,
        initial_state=GROUND.copy(),
        timescale=scale if np.isfinite(scale) else pulse.T,
    )


@dataclass
class BinKrausSet:
    """Per-bin Kraus operators, truncated to first order in the bin width.

    ``ops`` maps outcome labels to dim x dim matrices: one no-event operator,
    one detected-photon operator, and one per environment channel.
    """

    bin_index: int
    dt: float
    ops: dict = field(default_factory=dict)

    @property
    def matrices(self):
        return list(self.ops.values())

    def completeness_defect(self):
        """Spectral norm of sum(A^dag A) - I; scales as O(dt^2)."""
        dim = next(iter(self.ops.values())).shape[0]
        total = sum(a.conj().T @ a for a in self.ops.values())
        return float(np.linalg.norm(total - np.eye(dim), 2))


def kraus_set(model, theta, t, dt, bin_index=0):
    """Kraus operators for the bin starting at ``t``; the Hamiltonian is
    sampled at the bin's left endpoint."""
    if dt <= 0:
        raise ValueError("bin width must be positive")
    h = np.asarray(model.hamiltonian(t, theta), dtype=complex)
    j = np.asarray(model.coupling(theta), dtype=complex)
    ls = [np.asarray(l, dtype=complex) for l in model.lindblads(theta)]
    decay = j.conj().T @ j
    for l in ls:
        decay = decay + l.conj().T @ l
    ops = {
        NO_EVENT: np.eye(model.dim) - 1j * h * dt - 0.5 * dt * decay,
        LIGHT_PHOTON: j * np.sqrt(dt),
    }
    for k, l in enumerate(ls, start=1):
        ops[env_photon(k)] = l * np.sqrt(dt)
    return BinKrausSet(bin_index=bin_index, dt=dt, ops=ops)

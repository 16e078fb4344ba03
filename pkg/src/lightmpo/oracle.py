"""Brute-force validation backend.

Materializes the 2^N-dimensional light state by direct Kraus-chain
evolution, and provides exact QFI (eigendecomposition), Uhlmann fidelity and
the joint light + environment state for cross-checks.  Correctness only; no
attempt at performance.
"""

from __future__ import annotations

import numpy as np

from .emitter import LIGHT_PHOTON, NO_EVENT, kraus_set


class ResourceError(MemoryError):
    """Requested dense object exceeds the configured size guard."""


def dense_light_state(model, theta, n_bins, dt, max_bins=12):
    """Explicit density matrix of the detected light over n_bins bins.

    Bin 1 occupies the most significant bit of the basis index, matching
    TimeBinMPO.to_dense().
    """
    if n_bins > max_bins:
        raise ResourceError(f"dense light state limited to {max_bins} bins")
    dim = model.dim
    # carrier[s, s', :, :] = emitter operator conditioned on the light record
    c = np.zeros((1, 1, dim, dim), dtype=complex)
    c[0, 0] = np.outer(model.initial_state, model.initial_state.conj())
    for k in range(n_bins):
        ks = kraus_set(model, theta, k * dt, dt)
        zero = [ks.ops[NO_EVENT]] + [
            m for lab, m in ks.ops.items() if lab not in (NO_EVENT, LIGHT_PHOTON)
        ]
        one = [ks.ops[LIGHT_PHOTON]]
        d = c.shape[0]
        new = np.zeros((d, 2, d, 2, dim, dim), dtype=complex)
        for s, ops_s in enumerate((zero, one)):
            for sp, ops_sp in enumerate((zero, one)):
                new[:, s, :, sp] = sum(
                    np.einsum("ab,xybc,dc->xyad", a, c, b.conj())
                    for a, b in _kraus_pairs(ops_s, ops_sp)
                )
        c = new.reshape(2 * d, 2 * d, dim, dim)
    return np.trace(c, axis1=2, axis2=3)


def _kraus_pairs(ops_s, ops_sp):
    """Pairs sharing the same environment outcome.

    Within the zero-photon light sector the operators are ordered (no-event,
    env-1, env-2, ...); across different light sectors only the all-zero
    environment outcome appears on both sides.
    """
    if len(ops_s) == len(ops_sp):
        return list(zip(ops_s, ops_sp))
    return [(ops_s[0], ops_sp[0])]


def dense_light_env_state(model, theta, n_bins, dt, max_bins=6):
    """Joint density matrix of detected light and environment (indices per
    bin: light bit then environment bits, bin 1 most significant)."""
    if n_bins > max_bins:
        raise ResourceError(f"dense light+env state limited to {max_bins} bins")
    dim = model.dim
    n_env = model.n_env
    psi = np.zeros((1, dim), dtype=complex)
    psi[0] = model.initial_state
    local = 2 ** (1 + n_env)
    for k in range(n_bins):
        ks = kraus_set(model, theta, k * dt, dt)
        ops = [None] * local
        ops[0] = ks.ops[NO_EVENT]
        ops[2**n_env] = ks.ops[LIGHT_PHOTON]  # light bit is most significant
        for j in range(1, n_env + 1):
            ops[2 ** (n_env - j)] = ks.ops[f"env_photon_{j}"]
        d = psi.shape[0]
        # record index is appended as the least significant block
        tmp = np.zeros((d, local, dim), dtype=complex)
        for x, op in enumerate(ops):
            if op is not None:
                tmp[:, x, :] = psi @ op.T
        psi = tmp.reshape(local * d, dim)
    # interleaved (light, env) bits per bin; trace out the emitter
    rho = psi @ psi.conj().T
    if n_env == 0:
        return rho
    # separate light and env bits to order all light bits first
    per_bin = [2, 2**n_env] * n_bins
    full = rho.reshape(per_bin + per_bin)
    light_axes = [2 * i for i in range(n_bins)]
    env_axes = [2 * i + 1 for i in range(n_bins)]
    perm = light_axes + env_axes
    nn = 2 * n_bins
    full = np.transpose(full, perm + [p + nn for p in perm])
    side = 2**n_bins * 2 ** (n_env * n_bins)
    return full.reshape(side, side)


def exact_qfi(rho, drho, tol=1e-12):
    """QFI of (rho, drho) by eigendecomposition; also returns the dense SLD.

    Q = sum over eigenpairs with lam_i + lam_j > tol of
    2 |<i| drho |j>|^2 / (lam_i + lam_j).
    """
    rho = np.asarray(rho)
    drho = np.asarray(drho)
    lam, vec = np.linalg.eigh(rho)
    d = vec.conj().T @ drho @ vec
    qfi = 0.0
    sld = np.zeros_like(d)
    for i in range(len(lam)):
        for j in range(len(lam)):
            s = lam[i] + lam[j]
            if s > tol:
                qfi += 2.0 * abs(d[i, j]) ** 2 / s
                sld[i, j] = 2.0 * d[i, j] / s
    return float(qfi), vec @ sld @ vec.conj().T


def exact_fidelity(rho1, rho2):
    """Uhlmann fidelity Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))."""
    lam, vec = np.linalg.eigh(np.asarray(rho1))
    lam = np.where(lam < 0.0, 0.0, lam)
    if np.min(np.linalg.eigvalsh(np.asarray(rho1))) < -1e-10:
        raise ValueError("rho1 is not positive semidefinite")
    sq1 = (vec * np.sqrt(lam)) @ vec.conj().T
    inner = sq1 @ rho2 @ sq1
    mu = np.linalg.eigvalsh(inner)
    mu = np.where(mu < 0.0, 0.0, mu)
    return float(np.sum(np.sqrt(mu)))

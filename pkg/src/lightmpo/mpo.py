"""Time-bin MPO of the detected light and its finite-difference derivative.

The state over N bins is stored as one superoperator tensor per bin with
indices (sigma, sigma', bond_out, bond_in), physical extents 2x2 (vacuum /
one photon) and bond extents D^2 on internal bonds.  The vectorized initial
emitter state is absorbed into the first site and the trace functional into
the last, so the boundary bonds have extent 1 and any full contraction is a
plain product of transfer matrices.
"""

from __future__ import annotations

import struct

import numpy as np

from .emitter import LIGHT_PHOTON, NO_EVENT, kraus_set


class ConfigurationError(ValueError):
    """Invalid grid / discretization parameters."""


class IntegrityError(RuntimeError):
    """A structural invariant of the MPO failed numerically."""


class TimeBinMPO:
    """Chain of per-bin superoperator tensors with absorbed boundaries.

    sites[n] has shape (2, 2, chi_out, chi_in); sites[0] has chi_in = 1 and
    sites[-1] has chi_out = 1.  Bin 1 is the earliest; in dense
    reconstructions its occupation index is the most significant bit.
    """

    def __init__(self, sites, dt):
        self.sites = [np.asarray(s, dtype=complex) for s in sites]
        self.dt = float(dt)
        for a, b in zip(self.sites[:-1], self.sites[1:]):
            if b.shape[3] != a.shape[2]:
                raise ValueError("bond extents of neighbouring sites differ")
        if self.sites[0].shape[3] != 1 or self.sites[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have extent 1")

    @property
    def n_bins(self):
        return len(self.sites)

    def bond_dims(self):
        return [s.shape[2] for s in self.sites[:-1]]

    def trace_value(self):
        """Full contraction with sigma = sigma' summed (complex)."""
        v = np.ones(1, dtype=complex)
        for site in self.sites:
            v = np.einsum("ssoi,i->o", site, v)
        return complex(v[0])

    def to_dense(self, max_bins=12):
        """Materialize the 2^N x 2^N density matrix (small N only)."""
        if self.n_bins > max_bins:
            raise MemoryError(f"dense reconstruction limited to {max_bins} bins")
        c = np.ones((1, 1, 1), dtype=complex)
        for site in self.sites:
            c = np.einsum("xyoi,abi->axbyo", site, c)
            d = c.shape[0] * c.shape[1]
            c = c.reshape(d, d, site.shape[2])
        return c[:, :, 0]

    def scaled(self, factor, site=0):
        sites = [s.copy() for s in self.sites]
        sites[site] = sites[site] * factor
        return TimeBinMPO(sites, self.dt)

    def dump(self, path):
        """Binary dump: per site a shape header (four uint32, little-endian)
        followed by the entries as little-endian complex doubles."""
        with open(path, "wb") as fh:
            fh.write(struct.pack("<I", self.n_bins))
            fh.write(struct.pack("<d", self.dt))
            for s in self.sites:
                fh.write(struct.pack("<4I", *s.shape))
                fh.write(s.astype("<c16").tobytes())

    @classmethod
    def load(cls, path):
        def read_exact(fh, n_bytes):
            data = fh.read(n_bytes)
            if len(data) != n_bytes:
                raise IntegrityError("truncated dump file")
            return data

        with open(path, "rb") as fh:
            (n,) = struct.unpack("<I", read_exact(fh, 4))
            (dt,) = struct.unpack("<d", read_exact(fh, 8))
            sites = []
            for _ in range(n):
                shape = struct.unpack("<4I", read_exact(fh, 16))
                count = int(np.prod(shape))
                data = np.frombuffer(read_exact(fh, 16 * count), dtype="<c16")
                sites.append(data.reshape(shape).astype(complex))
        return cls(sites, dt)


def _n_bins(t_fin, dt):
    n = t_fin / dt
    if abs(n - round(n)) > 1e-9 or round(n) < 1:
        raise ConfigurationError(
            f"t_fin = {t_fin} is not a positive integer multiple of dt = {dt}"
        )
    return int(round(n))


def _vec(m):
    return np.asarray(m, dtype=complex).reshape(-1)


def _bin_superoperators(model, theta, t, dt):
    """The four D^2 x D^2 superoperator blocks for one bin, indexed
    [sigma, sigma'], with the environment indices already summed."""
    ks = kraus_set(model, theta, t, dt)
    dim2 = model.dim**2
    out = np.zeros((2, 2, dim2, dim2), dtype=complex)
    # sigma_L = 0 pairs with all zero-photon environment outcomes
    zero = [ks.ops[NO_EVENT]] + [
        m for lab, m in ks.ops.items() if lab not in (NO_EVENT, LIGHT_PHOTON)
    ]
    for a in zero:
        out[0, 0] += np.kron(a, a.conj())
    a1 = ks.ops[LIGHT_PHOTON]
    a0 = ks.ops[NO_EVENT]
    out[1, 1] = np.kron(a1, a1.conj())
    out[1, 0] = np.kron(a1, a0.conj())
    out[0, 1] = np.kron(a0, a1.conj())
    return out


def build_light_mpo(model, theta, t_fin, dt):
    """Locally purified MPO of the detected light over t_fin / dt bins."""
    n = _n_bins(t_fin, dt)
    rho0 = _vec(np.outer(model.initial_state, model.initial_state.conj()))
    close = _vec(np.eye(model.dim))
    blocks = [_bin_superoperators(model, theta, k * dt, dt) for k in range(n)]
    return TimeBinMPO(_fold_boundaries(blocks, rho0, close), dt)


def _fold_boundaries(blocks, left_vec, right_vec):
    sites = []
    for k, blk in enumerate(blocks):
        if k == 0:
            blk = np.einsum("xyoi,i->xyo", blk, left_vec)[:, :, :, None]
        if k == len(blocks) - 1:
            blk = np.einsum("o,xyoi->xyi", right_vec, blk)[:, :, None, :]
        sites.append(blk)
    return sites


def mpo_trace(state):
    """Real trace of the MPO; raises if the imaginary part is not negligible."""
    val = state.trace_value()
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise IntegrityError(f"MPO trace has imaginary part {val.imag:g}")
    return val.real


def hs_inner(a, b):
    """Hilbert-Schmidt inner product Tr[rho_a rho_b] via the two-layer
    ladder contraction (conjugate layer for the second state)."""
    if a.n_bins != b.n_bins:
        raise ValueError("states have different bin counts")
    env = np.ones((1, 1), dtype=complex)
    for sa, sb in zip(a.sites, b.sites):
        env = np.einsum("xyoi,xypq,iq->op", sa, sb.conj(), env)
    val = complex(env[0, 0])
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise IntegrityError(f"HS inner product has imaginary part {val.imag:g}")
    return val.real


def build_deriv_mpo(model, theta, delta, t_fin, dt):
    """Symmetric finite-difference derivative of the light MPO, represented
    as a per-site direct sum of the two shifted states (bond extent 2 D^2).

    The per-site prefactor (2 delta)^(-1/N) is distributed uniformly; the
    relative sign of the two branches is carried by the closing boundary so
    the construction is exact for any bin count.
    """
    if delta <= 0:
        raise ValueError("finite-difference step must be positive")
    n = _n_bins(t_fin, dt)
    with np.errstate(over="raise"):
        try:
            pref = float((2.0 * delta) ** (-1.0 / n))
        except FloatingPointError:
            pref = np.inf
    if not np.isfinite(pref):
        raise ValueError(
            "finite-difference step too small: per-site prefactor overflows; "
            "increase delta or the bin count"
        )
    dim2 = model.dim**2
    rho0 = _vec(np.outer(model.initial_state, model.initial_state.conj()))
    close = _vec(np.eye(model.dim))
    left = np.concatenate([rho0, rho0])
    right = np.concatenate([close, -close])
    blocks = []
    for k in range(n):
        plus = _bin_superoperators(model, theta + delta, k * dt, dt)
        minus = _bin_superoperators(model, theta - delta, k * dt, dt)
        blk = np.zeros((2, 2, 2 * dim2, 2 * dim2), dtype=complex)
        blk[:, :, :dim2, :dim2] = pref * plus
        blk[:, :, dim2:, dim2:] = pref * minus
        blocks.append(blk)
    return TimeBinMPO(_fold_boundaries(blocks, left, right), dt)

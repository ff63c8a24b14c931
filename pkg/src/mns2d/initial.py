"""Deterministic spectral initial data.

The generator is SplitMix64, chosen because its update is three integer
operations with fixed constants, so identical seeds give bit-identical
streams on every platform.  Fields are built in row-major traversal of the
integer wavevector lattice, but each mode's phase is keyed by (stream,
wavevector) rather than drawn from a running stream: refining the grid then
extends the data with new high modes instead of redrawing everything, which
is what makes n -> 2n refinement studies of seeded runs meaningful.  Each
canonical mode pair (k, -k) carries one phase and the amplitude envelope
|k|^a exp(-|k|^2 / k0^2), so the L2 norm depends on the envelope only, never
on the draw.  Velocity and magnetic horizontal parts are laid down along the
solenoidal unit vector i(-k2, k1)/|k| per mode, which realizes the
divergence-free projection with the envelope amplitude intact.
"""

from __future__ import annotations

import numpy as np

from . import fields as F

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SeededGenerator:
    """SplitMix64 stream: state += gamma, then xor-shift-multiply mixing."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


def _mode_uniforms(seed: int, stream_id: int, m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Counter-style SplitMix64 draw, one uniform per integer wavevector.

    The key packs (stream, m1, m2) into disjoint bit fields; the state is the
    seed xor the gamma-spread key, advanced once.  Identical to feeding the
    scalar generator the same state, but vectorized over the lattice.
    """
    key = (
        (np.uint64(stream_id & 0xFFFF) << np.uint64(48))
        | ((m1.astype(np.int64).astype(np.uint64) & np.uint64(0xFFFFFF)) << np.uint64(24))
        | (m2.astype(np.int64).astype(np.uint64) & np.uint64(0xFFFFFF))
    )
    with np.errstate(over="ignore"):
        state = np.uint64(seed & _MASK64) ^ (key * np.uint64(_GAMMA))
        state = state + np.uint64(_GAMMA)
        z = state
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def envelope(grid: F.Grid, a: float = 1.0, k0: float | None = None) -> np.ndarray:
    """Spectral amplitude profile |k|^a exp(-|k|^2/k0^2), zero at k = 0."""
    if k0 is None:
        k0 = grid.n / 8.0 * grid.kmin
    amp = np.where(grid.kmag > 0, grid.kmag ** a * np.exp(-grid.ksq / k0 ** 2), 0.0)
    return amp * grid.dealias_mask


def envelope_norm_sq(grid: F.Grid, a: float = 1.0, k0: float | None = None) -> float:
    """Closed-form ||f||^2 of one scalar stream: phases drop out of the L2 norm.

    The envelope is carried as Fourier-series coefficients (each mode
    contributes amp * e^{i(k.x + theta)} to the physical field), so the
    squared norm is L^2 times the squared-amplitude sum.
    """
    amp = envelope(grid, a, k0)
    return float(grid.length ** 2 * np.sum(amp ** 2))


def _phase_stream(grid: F.Grid, seed: int, stream_id: int) -> np.ndarray:
    """Unit-modulus Hermitian-symmetric phases keyed by integer wavevector.

    The member of each conjugate pair with positive leading wavevector
    component is canonical and carries e^{i theta}; its partner carries the
    conjugate.  Self-conjugate modes (the zero mode and Nyquist lines) are
    zeroed; they sit outside the dealias band anyway.
    """
    n = grid.n
    idx = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)  # integer wavevectors
    m1 = idx[:, None] * np.ones((1, n), dtype=np.int64)
    m2 = np.ones((n, 1), dtype=np.int64) * idx[None, :]
    theta = 2.0 * np.pi * _mode_uniforms(seed, stream_id, m1, m2)
    canonical = (m1 > 0) | ((m1 == 0) & (m2 > 0))
    out = np.where(canonical, np.exp(1j * theta), 0.0)
    flip = (-np.arange(n)) % n
    out = out + np.conj(out[np.ix_(flip, flip)])
    return out


def _scalar_stream(grid: F.Grid, seed: int, stream_id: int, amp: np.ndarray) -> np.ndarray:
    return amp * _phase_stream(grid, seed, stream_id) * grid.n ** 2


def _solenoidal_stream(grid: F.Grid, seed: int, stream_id: int, amp: np.ndarray):
    """Horizontal pair along i (-k2, k1)/|k|: divergence-free, unit magnitude.

    The factor i keeps the multiplier conjugate-symmetric under k -> -k, so
    the components stay transforms of real fields.
    """
    coeff = _scalar_stream(grid, seed, stream_id, amp)
    kmag = np.where(grid.kmag > 0, grid.kmag, 1.0)
    return -1j * grid.k2 / kmag * coeff, 1j * grid.k1 / kmag * coeff


def generate_initial(grid: F.Grid, seed: int, a: float = 1.0,
                     k0: float | None = None, normalize: bool = False,
                     amplitude: float = 1.0):
    """Seeded (u0, E0, B0) in spectral representation.

    u and B carry a solenoidal horizontal pair plus a free third component;
    E carries three free components.  Stream ids are fixed: u-horizontal 0,
    u3 1, E1..E3 2..4, B-horizontal 5, B3 6.  With ``normalize`` the triple
    is scaled to unit total energy ||(u, E, B)|| = 1 before ``amplitude``.
    """
    amp = envelope(grid, a, k0)

    u1, u2 = _solenoidal_stream(grid, seed, 0, amp)
    u3 = _scalar_stream(grid, seed, 1, amp)
    e1 = _scalar_stream(grid, seed, 2, amp)
    e2 = _scalar_stream(grid, seed, 3, amp)
    e3 = _scalar_stream(grid, seed, 4, amp)
    b1, b2 = _solenoidal_stream(grid, seed, 5, amp)
    b3 = _scalar_stream(grid, seed, 6, amp)

    u = F.VectorField(grid, np.stack([u1, u2, u3]), F.SPECTRAL)
    e = F.VectorField(grid, np.stack([e1, e2, e3]), F.SPECTRAL)
    b = F.VectorField(grid, np.stack([b1, b2, b3]), F.SPECTRAL)

    scale = amplitude
    if normalize:
        total = np.sqrt(
            F.vec_l2_norm(u) ** 2 + F.vec_l2_norm(e) ** 2 + F.vec_l2_norm(b) ** 2
        )
        scale = amplitude / total
    return scale * u, scale * e, scale * b


def initial_state(grid: F.Grid, seed: int, **kwargs) -> F.State:
    u, e, b = generate_initial(grid, seed, **kwargs)
    return F.State(t=0.0, u=u, E=e, B=b)

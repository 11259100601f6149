"""Exact integration of trigonometric interpolants over intervals.

A smooth 2*pi-periodic function sampled at ``P`` equispaced points
``omega_k = 2 pi k / P`` is represented by its trigonometric interpolant
``sum_l c_l e^{i l omega}``, ``|l| <= P/2``.  Integrals over arbitrary
intervals, and cumulative integrals over a grid of upper limits, are then
evaluated in closed form.  For full-circle integrals this coincides with the
periodic trapezoid rule; the gain is that weights with jumps (indicators of
``[0, t]``) are handled without any loss of accuracy.

All routines operate on the last axis.
"""

from __future__ import annotations

import numpy as np

from .errors import QuadratureUnconverged

TWO_PI = 2.0 * np.pi


def periodic_grid(P: int) -> np.ndarray:
    return TWO_PI * np.arange(P) / P


def next_pow2(x: int) -> int:
    return 1 << max(0, int(np.ceil(np.log2(max(1, x)))))


def coefficients(samples: np.ndarray):
    """Interpolant coefficients along the last axis.

    Returns ``(c, l)`` with ``len(l) == P + 1``; the Nyquist term is split
    evenly between ``l = P/2`` and ``l = -P/2`` so that the interpolant is
    real for real samples.
    """
    P = samples.shape[-1]
    c = np.fft.fft(samples, axis=-1) / P
    l = np.fft.fftfreq(P, 1.0 / P).astype(np.int64)
    if P % 2 == 0:
        half = 0.5 * c[..., P // 2: P // 2 + 1]
        c = np.concatenate([c[..., : P // 2], half, half, c[..., P // 2 + 1:]], axis=-1)
        l = np.concatenate([l[: P // 2], [P // 2], [-(P // 2)], l[P // 2 + 1:]])
    return c, l


def interval_weights(l: np.ndarray, a: float, b: float) -> np.ndarray:
    """``int_a^b e^{i l omega} d omega`` for every entry of ``l``."""
    l = np.asarray(l)
    out = np.empty(l.shape, dtype=complex)
    nz = l != 0
    ln = l[nz]
    out[nz] = (np.exp(1j * ln * b) - np.exp(1j * ln * a)) / (1j * ln)
    out[~nz] = b - a
    return out


def integrate_interval(samples: np.ndarray, a: float = -np.pi, b: float = np.pi) -> np.ndarray:
    """``int_a^b`` of the interpolant of periodic ``samples`` (last axis)."""
    c, l = coefficients(samples)
    return c @ interval_weights(l, a, b)


def cumulative(c: np.ndarray, l: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``int_0^t sum_l c_l e^{i l w} dw`` for every ``t`` (direct evaluation)."""
    t = np.asarray(t, dtype=float)
    nz = l != 0
    lz = l[nz]
    b = c[..., nz] / (1j * lz)
    c0 = c[..., ~nz].sum(axis=-1)
    out = np.empty(c.shape[:-1] + t.shape, dtype=complex)
    step = max(1, 2_000_000 // max(1, lz.size))
    for s in range(0, t.size, step):
        ts = t[s:s + step]
        E = np.exp(1j * np.outer(lz, ts))
        out[..., s:s + step] = b @ E
    return out - b.sum(axis=-1)[..., None] + c0[..., None] * t


def cumulative_uniform(c: np.ndarray, l: np.ndarray, T: int) -> np.ndarray:
    """Same as :func:`cumulative` on ``t_j = pi j / T``, ``j = 0..T``, by one FFT.

    ``e^{i l pi j / T}`` is periodic in ``l`` with period ``2T``, so the
    coefficients are folded modulo ``2T`` before an inverse FFT.
    """
    Q = 2 * T
    nz = l != 0
    lz = l[nz]
    b = c[..., nz] / (1j * lz)
    c0 = c[..., ~nz].sum(axis=-1)
    lead = c.shape[:-1]
    b2 = b.reshape(-1, b.shape[-1])
    arr = np.zeros((b2.shape[0], Q), dtype=complex)
    idx = np.mod(lz, Q)
    if np.unique(idx).size == idx.size:
        arr[:, idx] = b2
    else:
        np.add.at(arr, (slice(None), idx), b2)
    S = np.fft.ifft(arr, axis=-1)[:, : T + 1] * Q
    S = S.reshape(lead + (T + 1,))
    tj = np.pi * np.arange(T + 1) / T
    return S - b.sum(axis=-1)[..., None] + c0[..., None] * tj


def uniform_t_grid(T: int) -> np.ndarray:
    return np.pi * np.arange(T + 1) / T


def is_uniform_pi_grid(t: np.ndarray):
    """Return ``T`` if ``t`` is ``pi * j / T`` for ``j = 0..T``, else ``None``."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size < 2:
        return None
    T = t.size - 1
    if np.allclose(t, uniform_t_grid(T), rtol=0, atol=1e-12):
        return T
    return None


def cumulative_on(c: np.ndarray, l: np.ndarray, t: np.ndarray) -> np.ndarray:
    T = is_uniform_pi_grid(t)
    if T is not None:
        return cumulative_uniform(c, l, T)
    return cumulative(c, l, t)


def bandwidth(samples: np.ndarray, rel_tol: float = 1e-15) -> int:
    """Largest ``|l|`` whose coefficient exceeds ``rel_tol`` times the largest one."""
    c, l = coefficients(samples)
    mag = np.abs(c).reshape(-1, c.shape[-1]).max(axis=0)
    top = mag.max()
    if top == 0:
        return 0
    keep = mag > rel_tol * top
    return int(np.abs(l[keep]).max())


def adaptive_samples(func, P0: int = 1024, max_P: int = 1 << 20, rel_tol: float = 1e-15):
    """Sample ``func`` on a periodic grid fine enough to resolve it.

    Doubles ``P`` until the estimated bandwidth is below ``P/4``.  Returns
    ``(samples, bandwidth)`` with frequency on the last axis.
    """
    P = P0
    while True:
        vals = np.moveaxis(np.asarray(func(periodic_grid(P))), 0, -1)
        L = bandwidth(vals, rel_tol)
        if L < P // 4:
            return vals, L
        if P >= max_P:
            raise QuadratureUnconverged(f"function not resolved with {P} points")
        P *= 2

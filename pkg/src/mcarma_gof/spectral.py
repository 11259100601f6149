"""Periodograms, Fourier coefficients of weights and the empirical spectral process.

Conventions
-----------
* ``I_n(w) = d(w) d(w)^H / (2 pi n)`` with ``d(w) = sum_j Y_j e^{-i j w}``.
* ``g_hat_h = (1/2pi) int g(w) e^{-i h w} dw``.
* ``tr E_n(g) = sqrt(n) int tr(g (I_n - f))``.

Integrals against weights with jumps are evaluated exactly through the
trigonometric interpolant of the smooth factor (see :mod:`.fourier`); a plain
cumulative trapezoid is available for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import fourier
from .errors import EmptyPath, LagOutOfRange, QuadratureUnconverged, TailNotNegligible
from .model import DiscretizedModel, autocovariances, hermitian_inverse, spectral_density
from .simulate import SamplePath
from .weights import (
    InverseDensity,
    WeightFunction,
    WeightTerm,
    _inverse_density_grid,
    fourier_kernel,
    whittle,
)

TWO_PI = 2.0 * np.pi
DEFAULT_QUAD = 8192
DEFAULT_T_INTERVALS = 4096
QUAD_TOL = 1e-8


def observations(Y) -> np.ndarray:
    """``(n, m)`` float array from a :class:`SamplePath` or array-like."""
    if isinstance(Y, SamplePath):
        Y = Y.observations
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] == 0:
        raise EmptyPath("sample path has no observations")
    return Y


# -- autocovariances and periodogram ------------------------------------------

def sample_autocovariance(Y, h: int) -> np.ndarray:
    """``(1/n) sum_{k=1}^{n-h} Y_{k+h} Y_k^T``; negative lags give the transpose."""
    Y = observations(Y)
    n = Y.shape[0]
    h = int(h)
    if abs(h) >= n:
        raise LagOutOfRange(f"|h| = {abs(h)} must be < n = {n}")
    if h < 0:
        return sample_autocovariance(Y, -h).T
    return Y[h:].T @ Y[: n - h] / n


def sample_autocovariances(Y, max_lag: Optional[int] = None) -> np.ndarray:
    """``Gamma_bar(h)`` for ``h = 0..max_lag`` by FFT, shape ``(max_lag+1, m, m)``."""
    Y = observations(Y)
    n, m = Y.shape
    if max_lag is None:
        max_lag = n - 1
    if max_lag >= n:
        raise LagOutOfRange(f"max_lag {max_lag} must be < n = {n}")
    P = fourier.next_pow2(2 * n)
    d = np.fft.fft(Y, P, axis=0)
    cross = np.einsum("ka,kb->kab", d, np.conj(d))
    g = np.fft.ifft(cross, axis=0)[: max_lag + 1].real / n
    return g


@dataclass(frozen=True, eq=False)
class PeriodogramGrid:
    """Periodogram values on ``omega_k = 2 pi k / P``, ``k = -P/2+1 .. P/2``."""

    omegas: np.ndarray
    values: np.ndarray  # (P, m, m) complex
    n: int

    @property
    def size(self) -> int:
        return self.omegas.size

    def natural_order(self) -> np.ndarray:
        """Values at ``2 pi k / P`` for ``k = 0..P-1``."""
        P = self.size
        k = np.rint(self.omegas * P / TWO_PI).astype(np.int64) % P
        out = np.empty_like(self.values)
        out[k] = self.values
        return out

    def integrate(self) -> np.ndarray:
        """Periodic trapezoid rule ``int_{-pi}^{pi} I_n``."""
        return self.values.sum(axis=0) * (TWO_PI / self.size)

    def to_csv(self, fh) -> None:
        write_matrix_series_csv(fh, "omega", self.omegas, self.values, {"n": self.n})


def _sorted_grid(P: int) -> np.ndarray:
    k = np.arange(-P // 2 + 1, P // 2 + 1)
    return TWO_PI * k / P


def dft(Y: np.ndarray, P: int) -> np.ndarray:
    """``sum_j Y_j e^{-i j w_k}`` at ``w_k = 2 pi k / P``, shape ``(..., P, m)``.

    The time index starts at 1; the phase factor cancels in every quadratic form.
    """
    return np.fft.fft(Y, P, axis=-2)


def periodogram(Y, grid_size: Optional[int] = None, method: str = "fft") -> PeriodogramGrid:
    """Matrix periodogram on an equispaced grid of ``(-pi, pi]``.

    ``method="fft"`` zero-pads to ``grid_size`` (a power of two, at least ``n``);
    ``"direct"`` evaluates the defining sums.
    """
    Y = observations(Y)
    n = Y.shape[0]
    if grid_size is None:
        grid_size = fourier.next_pow2(2 * n)
    grid_size = int(grid_size)
    omegas = _sorted_grid(grid_size)
    if method == "fft":
        if grid_size < n or grid_size & (grid_size - 1):
            raise ValueError("FFT periodogram needs a power-of-two grid_size >= n")
        d = dft(Y, grid_size)
        k = np.mod(np.arange(-grid_size // 2 + 1, grid_size // 2 + 1), grid_size)
        d = d[k]
        vals = np.einsum("ka,kb->kab", d, np.conj(d)) / (TWO_PI * n)
    elif method == "direct":
        vals = periodogram_at(Y, omegas)
    else:
        raise ValueError(f"unknown method {method!r}")
    return PeriodogramGrid(omegas, vals, n)


def periodogram_at(Y, omega) -> np.ndarray:
    """Direct evaluation of ``I_n`` at arbitrary frequencies, ``(len(omega), m, m)``."""
    Y = observations(Y)
    n = Y.shape[0]
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    j = np.arange(1, n + 1)
    E = np.exp(-1j * np.outer(omega, j))
    d = E @ Y
    return np.einsum("ka,kb->kab", d, np.conj(d)) / (TWO_PI * n)


def injected_periodogram(values, n: int) -> PeriodogramGrid:
    """Wrap externally supplied periodogram values given at ``2 pi k / P`` (natural order)."""
    values = np.asarray(values, dtype=complex)
    P = values.shape[0]
    k = np.mod(np.arange(-P // 2 + 1, P // 2 + 1), P)
    return PeriodogramGrid(_sorted_grid(P), values[k], int(n))


# -- Fourier coefficients of weights ------------------------------------------

@dataclass(frozen=True, eq=False)
class FourierCoeffSeq:
    """Coefficients ``g_hat_h`` for ``h = -H..H``; ``coeffs[h + H]``."""

    H: int
    coeffs: np.ndarray
    meta: dict = field(default_factory=dict)

    def __getitem__(self, h: int) -> np.ndarray:
        h = int(h)
        if abs(h) > self.H:
            raise LagOutOfRange(f"lag {h} outside [-{self.H}, {self.H}]")
        return self.coeffs[h + self.H]

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.H, self.H + 1)


def _smooth_coeffs(smooth, P: int):
    """Fourier coefficients ``(l, c[L, a, b])`` of a smooth factor."""
    if smooth.coeffs is not None:
        return smooth.coeffs
    vals = np.moveaxis(np.asarray(smooth.on_grid(P)), 0, -1)
    c, l = fourier.coefficients(vals)
    return l, np.moveaxis(c, -1, 0)


def _term_coeffs(term: WeightTerm, hs: np.ndarray, P: int) -> np.ndarray:
    l, c = _smooth_coeffs(term.smooth, P)
    shape = c.shape[1:]
    cf = c.reshape(c.shape[0], -1)
    out = np.zeros((hs.size, cf.shape[1]), dtype=complex)
    if term.interval is None:
        pos = {int(v): i for i, v in enumerate(l)}
        for k, h in enumerate(hs):
            i = pos.get(int(h))
            if i is not None:
                out[k] = cf[i]
        # the split Nyquist pair represents one cosine; on the full circle it
        # contributes to both +-P/2 entries
    else:
        a, b = term.interval
        chunk = max(1, 4_000_000 // max(1, l.size))
        for s in range(0, hs.size, chunk):
            hh = hs[s:s + chunk]
            W = fourier.interval_weights(l[None, :] - hh[:, None], a, b)
            out[s:s + chunk] = W @ cf / TWO_PI
    return term.coef * out.reshape((hs.size,) + shape)


def _all_analytic(g: WeightFunction) -> bool:
    return all(t.smooth.coeffs is not None for t in g.terms)


def _coeffs_at(g: WeightFunction, hs: np.ndarray, P: int) -> np.ndarray:
    out = np.zeros((hs.size,) + g.shape, dtype=complex)
    for term in g.terms:
        out += _term_coeffs(term, hs, P)
    return out


def weight_coeffs_at(g: WeightFunction, hs, quad_grid: int = DEFAULT_QUAD,
                     check: bool = True) -> np.ndarray:
    """``g_hat_h`` for the lags in ``hs``; quadrature converged to 1e-8 when checked."""
    hs = np.asarray(hs, dtype=np.int64).reshape(-1)
    out = _coeffs_at(g, hs, quad_grid)
    if check and not _all_analytic(g):
        fine = _coeffs_at(g, hs, 2 * quad_grid)
        err = np.max(np.abs(fine - out), initial=0.0)
        if err > QUAD_TOL:
            raise QuadratureUnconverged(
                f"doubling the grid from {quad_grid} changed a coefficient by {err:.3g}")
        out = fine
    return out


def fourier_coeffs(g: WeightFunction, H: int, quad_grid: int = DEFAULT_QUAD,
                   check: bool = True) -> FourierCoeffSeq:
    """``g_hat_h = (1/2pi) int g(w) e^{-i h w} dw`` for ``|h| <= H``.

    Indicator and Fourier-kernel families are exact.  Other smooth factors
    are expanded by an FFT on ``quad_grid`` points (the periodic trapezoid
    rule) and then integrated over the support exactly.
    """
    if H < 0:
        raise ValueError("H must be >= 0")
    hs = np.arange(-H, H + 1)
    return FourierCoeffSeq(int(H), weight_coeffs_at(g, hs, quad_grid, check),
                           {"family": g.family, "quad_grid": quad_grid})


def gphi_fourier_coeffs(g: WeightFunction, disc: DiscretizedModel, H: int,
                        method: str = "double_sum", quad_grid: int = DEFAULT_QUAD) -> FourierCoeffSeq:
    """Fourier coefficients of ``g^Phi = Phi(e^{iw})^T g Phi(e^{-iw})``.

    ``"double_sum"`` uses ``sum_{j1,j2} Phi_{j1}^T g_hat_{h-j1+j2} Phi_{j2}``;
    ``"quadrature"`` integrates the conjugated weight directly.
    """
    if method == "quadrature":
        return fourier_coeffs(g.conjugated(disc), H, quad_grid)
    if method != "double_sum":
        raise ValueError(f"unknown method {method!r}")
    J = disc.truncation_J
    phi = disc.phi  # (J+1, m, N)
    base = fourier_coeffs(g, H + J, quad_grid)
    j = np.arange(J + 1)
    diff = j[None, :] - j[:, None]  # j2 - j1
    out = np.empty((2 * H + 1, disc.N, disc.N), dtype=complex)
    for k, h in enumerate(range(-H, H + 1)):
        G = base.coeffs[h + diff + base.H]  # (J+1, J+1, m, m)
        out[k] = np.einsum("pma,pqmk,qkb->ab", phi, G, phi, optimize=True)
    return FourierCoeffSeq(int(H), out, {"family": g.family, "method": method})


# -- integrals of products of weights -----------------------------------------

def _intersect(i1, i2):
    a1, b1 = (-np.pi, np.pi) if i1 is None else i1
    a2, b2 = (-np.pi, np.pi) if i2 is None else i2
    a, b = max(a1, a2), min(b1, b2)
    return (a, b) if b > a else None


def integrate_term_pairs(g1: WeightFunction, g2: WeightFunction, combine, P: int = DEFAULT_QUAD) -> complex:
    """``int combine(g1(w), g2(w), w) dw`` over ``[-pi, pi]``.

    ``combine(S1, S2, omega)`` maps smooth factors sampled on a periodic grid
    (shape ``(P, a, b)``) to scalar samples of shape ``(P,)``; it must be
    bilinear in ``(conj(S1), S2)``.  Each pair of terms is integrated exactly
    over the intersection of the two supports.
    """
    omega = fourier.periodic_grid(P)
    total = 0.0 + 0.0j
    cache = {}
    for t1 in g1.terms:
        for t2 in g2.terms:
            iv = _intersect(t1.interval, t2.interval)
            if iv is None:
                continue
            key1, key2 = id(t1.smooth), id(t2.smooth)
            S1 = cache.setdefault(key1, t1.smooth.on_grid(P))
            S2 = cache.setdefault(key2, t2.smooth.on_grid(P))
            vals = combine(S1, S2, omega)
            total += np.conj(t1.coef) * t2.coef * complex(fourier.integrate_interval(vals, *iv))
    return total


def seminorm_l2(g: WeightFunction, quad_grid: int = DEFAULT_QUAD) -> float:
    """``||g||_2 = ((1/2pi) int ||g(w)||_F^2 dw)^{1/2}``."""
    val = integrate_term_pairs(g, g, lambda S1, S2, w: np.einsum("kab,kab->k", np.conj(S1), S2),
                               quad_grid)
    return float(np.sqrt(max(val.real, 0.0) / TWO_PI))


@dataclass(frozen=True)
class NormResult:
    value: float
    partial_sq: float
    tail_sq: float
    H: int


def norm_phi_s(g: WeightFunction, disc: DiscretizedModel, s: float = 0.0, H: int = 256,
               quad_grid: int = DEFAULT_QUAD, method: str = "quadrature",
               rel_tail: float = 1e-6) -> NormResult:
    """``||g||_{Phi,s} = (sum_h (1+|h|)^{2s} ||g^Phi_hat_h||^2)^{1/2}``.

    The sum is truncated at ``|h| <= H``; the tail is extrapolated from the
    decay of the last half of the computed terms (geometric or power law)
    and :class:`TailNotNegligible` is raised if it exceeds ``rel_tail`` of
    the partial sum.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    co = gphi_fourier_coeffs(g, disc, H, method=method, quad_grid=quad_grid)
    h = np.abs(co.lags)
    a = np.sum(np.abs(co.coeffs) ** 2, axis=(1, 2))
    weighted = (1.0 + h) ** (2 * s) * a
    partial = float(weighted.sum())
    tail = _tail_estimate(h, weighted, H)
    if partial > 0 and tail > rel_tail * partial:
        raise TailNotNegligible(f"estimated tail {tail:.3g} vs partial sum {partial:.3g}")
    return NormResult(float(np.sqrt(partial + tail)), partial, tail, int(H))


def _tail_estimate(h: np.ndarray, w: np.ndarray, H: int) -> float:
    if H < 4:
        return 0.0
    per = np.zeros(H + 1)
    np.add.at(per, h, w)
    top = per.max()
    lo = H // 2
    seg = per[lo:]
    if top == 0 or seg.max() <= 1e-300 or seg.max() < 1e-30 * top:
        return 0.0
    x = np.arange(lo, H + 1)
    pos = seg > 0
    if pos.sum() < 2:
        return 0.0
    y = np.log(seg[pos])
    xs = x[pos]
    # geometric fit in h and power-law fit in log h; keep the more conservative
    rate = np.polyfit(xs, y, 1)[0]
    expo = np.polyfit(np.log(xs), y, 1)[0]
    last = seg[pos][-1]
    geo = last * np.exp(rate) / (1 - np.exp(rate)) if rate < 0 else np.inf
    if expo < -1:
        power = last * H / (-expo - 1)
    else:
        power = np.inf
    return float(max(geo, power) if rate < -0.5 else power)


# -- empirical spectral process -----------------------------------------------

def _auto_grid(n: int, quad_grid: Optional[int], extra: int = 0) -> int:
    if quad_grid is not None:
        if quad_grid < 2 * n:
            raise ValueError(f"quad_grid={quad_grid} must be at least 2n = {2 * n}")
        return int(quad_grid)
    return max(DEFAULT_QUAD, fourier.next_pow2(2 * (n + extra) + 2))


def empirical_spectral_process(Y, disc: DiscretizedModel, g: WeightFunction,
                               quad_grid: Optional[int] = None, method: str = "frequency") -> complex:
    """``tr E_n(g) = sqrt(n) int tr(g(w) (I_n(w) - f(w))) dw``.

    ``method="frequency"`` integrates the FFT periodogram against ``g``;
    ``"lag"`` uses ``sum_h tr(g_hat_h (Gamma_bar(h) - Gamma(h)))``.
    """
    if method == "lag":
        return lag_domain_process(Y, disc, g, quad_grid)[0]
    if method != "frequency":
        raise ValueError(f"unknown method {method!r}")
    Y = observations(Y)
    n = Y.shape[0]
    if g.shape != (disc.m, disc.m):
        raise ValueError(f"weight shape {g.shape} does not match m={disc.m}")
    if g.is_zero:
        return 0.0 + 0.0j
    P = _auto_grid(n, quad_grid, disc.truncation_J)
    omega = fourier.periodic_grid(P)
    d = dft(Y, P)
    In = np.einsum("ka,kb->kab", d, np.conj(d)) / (TWO_PI * n)
    D = In - spectral_density(disc, omega)
    total = 0.0 + 0.0j
    for term in g.terms:
        S = term.smooth.on_grid(P)
        q = np.einsum("kab,kba->k", S, D)
        a, b = term.interval if term.interval is not None else (-np.pi, np.pi)
        total += term.coef * complex(fourier.integrate_interval(q, a, b))
    return np.sqrt(n) * total


def lag_domain_process(Y, disc: DiscretizedModel, g: WeightFunction,
                       quad_grid: Optional[int] = None):
    """Lag-domain ``tr E_n(g)`` and a bound on the neglected ``|h| > J`` tail."""
    Y = observations(Y)
    n = Y.shape[0]
    if g.is_zero:
        return 0.0 + 0.0j, 0.0
    J = disc.truncation_J
    Hmax = max(n - 1, J)
    P = quad_grid or DEFAULT_QUAD
    hs = np.arange(-Hmax, Hmax + 1)
    gh = weight_coeffs_at(g, hs, P)
    gam_bar = sample_autocovariances(Y, n - 1)
    gam = autocovariances(disc, Hmax)
    total = 0.0 + 0.0j
    for k, h in enumerate(hs):
        a = abs(h)
        G = gam[a] if a <= Hmax else 0.0
        if h < 0:
            G = G.T
        if a < n:
            Gb = gam_bar[a] if h >= 0 else gam_bar[a].T
            total += np.trace(gh[k] @ (Gb - G))
        else:
            total -= np.trace(gh[k] @ G)
    # tail beyond the MA truncation: ||Gamma(h)|| decays like rho^h
    rho = float(np.max(np.abs(np.linalg.eigvals(disc.eAD))))
    gmax = float(np.max(np.abs(gh)))
    tail = 2 * gmax * np.linalg.norm(gam[min(J, Hmax)]) * rho / max(1e-300, 1 - rho)
    return np.sqrt(n) * total, np.sqrt(n) * tail


# -- cumulative trajectories --------------------------------------------------

class TrajectoryEngine:
    """Cumulative trace trajectories for many paths of one length ``n``.

    Parameters
    ----------
    disc : DiscretizedModel
        Hypothesised model.
    n : int
        Path length.
    t_grid : array, optional
        Sorted upper limits in ``[0, pi]``; default ``pi j / 4096``.
    quad_grid : int, optional
        Frequency grid size; defaults to a power of two large enough for the
        integrand to be resolved exactly.

    Notes
    -----
    The plain integrand ``tr(I_n - f)`` and the self-normalized integrand
    ``tr(I_n f^{-1}) - m`` are sampled on the periodic grid, converted to
    Fourier coefficients and integrated to every ``t`` in closed form.
    """

    def __init__(self, disc: DiscretizedModel, n: int, t_grid=None,
                 quad_grid: Optional[int] = None, method: str = "fourier"):
        self.disc = disc
        self.n = int(n)
        self.t_grid = fourier.uniform_t_grid(DEFAULT_T_INTERVALS) if t_grid is None \
            else np.asarray(t_grid, dtype=float)
        if self.t_grid.ndim != 1 or np.any(np.diff(self.t_grid) < 0) or self.t_grid[0] < 0 \
                or self.t_grid[-1] > np.pi + 1e-12:
            raise ValueError("t_grid must be sorted inside [0, pi]")
        self.method = method
        self._sn = None
        self._extra = disc.truncation_J
        if method == "fourier":
            self.P = _auto_grid(self.n, quad_grid, self._extra)
        elif method == "trapezoid":
            T = fourier.is_uniform_pi_grid(self.t_grid)
            if T is None:
                raise ValueError("trapezoid method needs the uniform grid pi j / T")
            self.P = 2 * T
            if self.P < self.n:
                raise ValueError("trapezoid grid 2T must be at least n")
        else:
            raise ValueError(f"unknown method {method!r}")
        self._tr_f = None

    def _finv(self, P):
        return _inverse_density_grid(self.disc, P)

    def _trace_f(self, P):
        if self._tr_f is None or self._tr_f.size != P:
            f = spectral_density(self.disc, fourier.periodic_grid(P))
            self._tr_f = np.einsum("kaa->k", f).real
        return self._tr_f

    def integrand(self, Y: np.ndarray, family: str) -> np.ndarray:
        """Integrand samples on the periodic grid, ``(R, P)``."""
        d = dft(Y, self.P)  # (R, P, m)
        return self._integrand_from_d(d, family)

    def _integrand_from_d(self, d, family):
        n = self.n
        if family == "plain":
            return np.sum(np.abs(d) ** 2, axis=-1) / (TWO_PI * n) - self._trace_f(self.P)
        if family == "self_normalized":
            F = self._finv(self.P)
            q = np.einsum("rka,kab,rkb->rk", np.conj(d), F, d, optimize=True).real / (TWO_PI * n)
            return q - self.disc.m
        raise ValueError(f"unknown family {family!r}")

    def _scale(self, family):
        s = np.sqrt(self.n)
        return s / np.sqrt(self.disc.m) if family == "self_normalized" else s

    def cumulate(self, q: np.ndarray) -> np.ndarray:
        """``int_0^t`` of the periodic samples ``q`` (last axis) on the t-grid."""
        if self.method == "trapezoid":
            T = self.P // 2
            # omega_k = 2 pi k / P = pi k / T lines up with t_j
            seg = 0.5 * (q[..., :T] + q[..., 1:T + 1]) * (np.pi / T)
            out = np.zeros(q.shape[:-1] + (T + 1,))
            out[..., 1:] = np.cumsum(seg, axis=-1)
            return out
        c, l = fourier.coefficients(q)
        return fourier.cumulative_on(c, l, self.t_grid).real

    def trajectories(self, Y, family: str = "self_normalized", chunk: int = 64) -> np.ndarray:
        """Trajectories for a path ``(n, m)`` or a batch ``(R, n, m)``."""
        Y = np.asarray(Y.observations if isinstance(Y, SamplePath) else Y, dtype=float)
        single = Y.ndim == 2
        if single:
            Y = Y[None]
        if Y.shape[1] != self.n:
            raise ValueError(f"engine built for n={self.n}, got paths of length {Y.shape[1]}")
        out = np.empty((Y.shape[0], self.t_grid.size))
        for s in range(0, Y.shape[0], chunk):
            q = self.integrand(Y[s:s + chunk], family)
            out[s:s + chunk] = self.cumulate(q)
        out *= self._scale(family)
        return out[0] if single else out

    def from_periodogram(self, pg: PeriodogramGrid, family: str = "self_normalized") -> np.ndarray:
        """Trajectory computed from an externally supplied periodogram grid."""
        vals = pg.natural_order()
        P = vals.shape[0]
        omega = fourier.periodic_grid(P)
        if family == "plain":
            f = spectral_density(self.disc, omega)
            q = np.einsum("kaa->k", vals - f).real
        elif family == "self_normalized":
            q = np.einsum("kab,kba->k", vals, self._finv(P)).real - self.disc.m
        else:
            raise ValueError(f"unknown family {family!r}")
        c, l = fourier.coefficients(q)
        return fourier.cumulative_on(c, l, self.t_grid).real * self._scale(family)


def cumulative_trace_trajectory(Y, disc: DiscretizedModel, family: str = "plain", t_grid=None,
                                periodogram: Optional[PeriodogramGrid] = None,
                                quad_grid: Optional[int] = None, method: str = "fourier") -> np.ndarray:
    """``t -> sqrt(n) int_0^t tr(I_n - f)`` (plain) or
    ``t -> sqrt(n/m) (int_0^t tr(I_n f^{-1}) - t m)`` (self_normalized)."""
    if periodogram is not None:
        eng = TrajectoryEngine(disc, periodogram.n, t_grid, quad_grid=max(
            quad_grid or 0, 2 * periodogram.n, 2), method="fourier")
        return eng.from_periodogram(periodogram, family)
    Y = observations(Y)
    eng = TrajectoryEngine(disc, Y.shape[0], t_grid, quad_grid, method)
    return eng.trajectories(Y, family)


# -- Whittle objective ---------------------------------------------------------

def log_det_density(disc: DiscretizedModel):
    def logdet(omega):
        lam = np.linalg.eigvalsh(spectral_density(disc, omega))
        return np.sum(np.log(lam), axis=-1)
    return logdet


def whittle_objective(Y, candidate, candidate_log_det=None, quad_grid: Optional[int] = None,
                      periodogram: Optional[PeriodogramGrid] = None) -> float:
    """``(1/2pi) int [tr(f_c^{-1} I_n) + log det f_c] dw`` by the periodic trapezoid rule.

    ``candidate`` is a Whittle :class:`WeightFunction` (or a discretized model).
    """
    if isinstance(candidate, DiscretizedModel):
        candidate = whittle(candidate)
    if candidate_log_det is None:
        cand = candidate.params.get("candidate")
        if cand is None:
            raise ValueError("candidate_log_det is required for this weight")
        candidate_log_det = log_det_density(cand)
    if periodogram is None:
        Y = observations(Y)
        n = Y.shape[0]
        P = _auto_grid(n, quad_grid)
        d = dft(Y, P)
        In = np.einsum("ka,kb->kab", d, np.conj(d)) / (TWO_PI * n)
    else:
        In = periodogram.natural_order()
        P = In.shape[0]
    omega = fourier.periodic_grid(P)
    W = candidate(omega)
    q = np.einsum("kab,kba->k", W, In).real + np.asarray(candidate_log_det(omega), dtype=float)
    return float(q.mean())


# -- CSV ----------------------------------------------------------------------

def write_matrix_series_csv(fh, axis_name: str, axis, values, meta: Optional[dict] = None) -> None:
    """One row per grid point; real and imaginary parts flattened row-major."""
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[:, None, None]
    m1, m2 = values.shape[1], values.shape[2]
    for k, v in (meta or {}).items():
        fh.write(f"# {k}: {v}\n")
    cols = [axis_name]
    for a in range(m1):
        for b in range(m2):
            cols += [f"re_{a}{b}", f"im_{a}{b}"]
    fh.write(",".join(cols) + "\n")
    for x, M in zip(axis, values):
        row = [repr(float(x))]
        for a in range(m1):
            for b in range(m2):
                row += [repr(float(M[a, b].real)), repr(float(np.imag(M[a, b])))]
        fh.write(",".join(row) + "\n")


def write_trajectory_csv(fh, t_grid, traj, meta: Optional[dict] = None) -> None:
    for k, v in (meta or {}).items():
        fh.write(f"# {k}: {v}\n")
    fh.write("t,value\n")
    for t, v in zip(t_grid, traj):
        fh.write(f"{float(t)!r},{float(v)!r}\n")

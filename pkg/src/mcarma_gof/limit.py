"""Gaussian limit of the empirical spectral process and reference distributions.

The limit of ``tr E_n(w 1_[0,t])`` is sampled through the two-sided series

    tr(W0* K0(t)) / (2 pi) + sum_{|h| <= M} tr(W_h K_h(t)) / (2 sqrt(2) pi),

with ``K0(t) = int_0^t H``, ``K_h(t) = int_{-t}^{t} H(w) e^{-ihw} dw`` and
``H = Phi(e^{iw})^T w(w) Phi(e^{-iw})``; ``w = I_m`` (plain) or ``f^{-1}``
(self-normalized, additionally divided by ``sqrt(m)``).  ``vec(W_h)`` has
covariance ``Sigma_N (x) Sigma_N`` and ``vec(W0*)`` the fourth joint
cumulant matrix of the sampled innovation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.integrate
import scipy.optimize
import scipy.special

from . import fourier
from .errors import (
    AsymmetricZeroCoefficient,
    CholeskyFailed,
    EmptySample,
    NotPSD,
    NotPSDBeyondTolerance,
)
from .model import DiscretizedModel, FourthMomentMatrix, ma_transfer, psd_sqrt, spectral_density
from .simulate import derive_rng
from .spectral import DEFAULT_QUAD, DEFAULT_T_INTERVALS, gphi_fourier_coeffs, integrate_term_pairs
from .weights import WeightFunction, _inverse_density_grid

TWO_PI = 2.0 * np.pi
CLAMP_REL = 1e-8


@dataclass(frozen=True)
class LimitSamplerConfig:
    """Settings of the truncated-series limit sampler.

    Parameters
    ----------
    truncation_M : int
        Terms ``|h| <= M`` of the series.
    t_intervals : int
        The t-grid is ``pi j / t_intervals``; ignored when ``t_grid`` is set.
    replicates : int
    seed : int
    omega_quad : int, optional
        Initial frequency grid for the kernel expansion (refined adaptively).
    mode : {"series", "direct"}
        ``direct`` replaces the ``W_h`` series of the self-normalized limit by
        ``sqrt(2) pi B_{t/pi}`` built from Gaussian increments.
    chunk : int
        Replicates per random stream; fixes the reduction order.
    """

    truncation_M: int = 250
    t_intervals: int = DEFAULT_T_INTERVALS
    replicates: int = 20_000
    seed: int = 0
    omega_quad: Optional[int] = None
    mode: str = "series"
    chunk: int = 500
    t_grid: Optional[tuple] = None

    def __post_init__(self):
        if self.truncation_M < 0:
            raise ValueError("truncation_M must be >= 0")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.mode not in ("series", "direct"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def grid(self) -> np.ndarray:
        if self.t_grid is not None:
            return np.asarray(self.t_grid, dtype=float)
        return fourier.uniform_t_grid(self.t_intervals)

    def fingerprint(self) -> dict:
        return {"M": self.truncation_M, "t_intervals": self.t_intervals,
                "replicates": self.replicates, "seed": self.seed, "mode": self.mode,
                "chunk": self.chunk}


@dataclass(frozen=True, eq=False)
class LimitDraw:
    trajectory: np.ndarray
    statistic_gr: float
    statistic_cvm: float
    variant: str
    driver_degenerate_w0: bool


# -- random matrices -------------------------------------------------------------

def sample_W(sigma_N, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """``Sigma^{1/2} Z Sigma^{1/2}``; ``vec(W)`` has covariance ``Sigma (x) Sigma``."""
    try:
        S = psd_sqrt(sigma_N)
    except NotPSD as exc:
        raise CholeskyFailed(str(exc)) from exc
    n = S.shape[0]
    shape = (n, n) if size is None else (size, n, n)
    Z = rng.standard_normal(shape)
    return S @ Z @ S


@dataclass(frozen=True, eq=False)
class W0Factor:
    """Factor ``U diag(sqrt(lambda))`` of the ``vec(W0*)`` covariance."""

    factor: np.ndarray  # (N*N, r)
    N: int
    clamped: int
    tolerance: float

    @property
    def degenerate(self) -> bool:
        return self.factor.shape[1] == 0

    def draw(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        r = self.factor.shape[1]
        k = 1 if size is None else size
        z = rng.standard_normal((k, r))
        W = (z @ self.factor.T).reshape(k, self.N, self.N)
        return W[0] if size is None else W


def w0_factor(m4, sigma_N=None, clamp_rel: float = CLAMP_REL) -> W0Factor:
    """Eigen-factor of the ``W0*`` covariance with small negative eigenvalues clamped.

    ``m4`` is a :class:`FourthMomentMatrix` (its fourth-cumulant matrix is
    used) or an explicit covariance matrix.  Eigenvalues in
    ``[-tol, tol]`` are set to zero with ``tol = clamp_rel * scale`` plus the
    Monte Carlo noise floor of an estimated ``m4``; anything below ``-tol``
    raises :class:`NotPSDBeyondTolerance`.
    """
    if isinstance(m4, FourthMomentMatrix):
        cov = m4.cumulant
        sigma = m4.sigma if sigma_N is None else np.asarray(sigma_N, dtype=float)
        scale = float(np.linalg.norm(np.kron(sigma, sigma), 2))
        floor = m4.noise_floor
    else:
        cov = np.asarray(m4, dtype=float)
        cov = 0.5 * (cov + cov.T)
        scale = 0.0
        floor = 0.0
    NN = cov.shape[0]
    N = int(round(math.sqrt(NN)))
    lam, U = np.linalg.eigh(cov)
    top = max(abs(lam).max(initial=0.0), scale)
    tol = max(clamp_rel * top, floor)
    if lam.size and lam[0] < -tol:
        raise NotPSDBeyondTolerance(
            f"W0* covariance eigenvalue {lam[0]:.3g} below -{tol:.3g}; m4 estimate unusable")
    keep = lam > tol
    factor = U[:, keep] * np.sqrt(lam[keep])
    return W0Factor(factor, N, int((~keep).sum()), tol)


def sample_W0star(m4, sigma_N=None, rng: Optional[np.random.Generator] = None,
                  size: Optional[int] = None) -> np.ndarray:
    """Draw ``W0*`` (zero for Gaussian innovations)."""
    rng = np.random.default_rng() if rng is None else rng
    return w0_factor(m4, sigma_N).draw(rng, size)


# -- kernels ---------------------------------------------------------------------

def _H_samples(disc: DiscretizedModel, variant: str, P: int) -> np.ndarray:
    omega = fourier.periodic_grid(P)
    Pm = ma_transfer(disc, omega)  # Phi(e^{-iw})
    PH = np.conj(np.swapaxes(Pm, -1, -2))  # Phi(e^{iw})^T
    if variant == "plain":
        H = PH @ Pm
    elif variant == "self_normalized":
        H = PH @ _inverse_density_grid(disc, P) @ Pm
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return H


@dataclass(frozen=True, eq=False)
class LimitKernels:
    """``K0`` and ``K_h`` (h = 0..M) on a t-grid, real, shapes ``(N,N,T)`` and ``(M+1,N,N,T)``."""

    t_grid: np.ndarray
    K0: np.ndarray
    K: np.ndarray
    variant: str
    M: int
    P: int


def limit_kernels(disc: DiscretizedModel, variant: str, M: int, t_grid,
                  omega_quad: Optional[int] = None) -> LimitKernels:
    """Exact kernels from the Fourier expansion ``H(w) = sum_l c_l e^{ilw}``."""
    t_grid = np.asarray(t_grid, dtype=float)
    P = omega_quad or 1024
    while True:
        H = np.moveaxis(_H_samples(disc, variant, P), 0, -1)  # (N, N, P)
        L = fourier.bandwidth(H, 1e-15)
        if L < P // 4 or P >= 1 << 18:
            break
        P *= 2
    c, l = fourier.coefficients(H)
    K0 = fourier.cumulative_on(c, l, t_grid).real
    K = np.empty((M + 1,) + c.shape[:-1] + (t_grid.size,))
    for h in range(M + 1):
        # H(w) e^{-ihw} has coefficient c_l at frequency l - h
        K[h] = 2.0 * fourier.cumulative_on(c, l - h, t_grid).real
    return LimitKernels(t_grid, K0, K, variant, M, P)


# -- sampler ---------------------------------------------------------------------

class LimitSampler:
    """Batched draws of the limit trajectory for one model and variant.

    Parameters
    ----------
    disc : DiscretizedModel
    m4 : FourthMomentMatrix or None
        ``None`` (or a Gaussian source) means ``W0* = 0``.
    variant : {"plain", "self_normalized"}
    config : LimitSamplerConfig
    form : {"two_sided", "one_sided"}
        ``one_sided`` uses ``W0'`` with covariance ``Cov(vec(N N^T))`` and the
        terms ``h >= 1`` only; it has the same law and is kept for testing.
    """

    def __init__(self, disc: DiscretizedModel, m4: Optional[FourthMomentMatrix], variant: str,
                 config: LimitSamplerConfig = LimitSamplerConfig(), form: str = "two_sided",
                 kernels: Optional[LimitKernels] = None):
        self.disc = disc
        self.m4 = m4
        self.variant = variant
        self.config = config
        self.form = form
        if form not in ("two_sided", "one_sided"):
            raise ValueError(f"unknown form {form!r}")
        if config.mode == "direct" and variant != "self_normalized":
            raise ValueError("direct mode exists only for the self-normalized variant")
        self.t_grid = config.grid()
        M = config.truncation_M
        if kernels is None:
            kernels = limit_kernels(disc, variant, M, self.t_grid, config.omega_quad)
        self.kernels = kernels
        self.scale = 1.0 / math.sqrt(disc.m) if variant == "self_normalized" else 1.0
        S = psd_sqrt(disc.sigma_N)
        N = disc.N
        T = self.t_grid.size
        # tr(S Z S K) = sum_ab Z_ab (S K S)_ba, so a standard normal Z multiplies S K^T S
        KT = np.swapaxes(kernels.K, 1, 2)
        SKS = np.einsum("ab,hbcT,cd->hadT", S, KT, S, optimize=True)
        if form == "two_sided":
            # W_0 once; W_h + W_{-h}^T for h >= 1 has covariance 2 Sigma (x) Sigma
            w = np.full(M + 1, math.sqrt(2.0))
            w[0] = 1.0
            coef = w / (2.0 * math.sqrt(2.0) * math.pi)
            self._series = (SKS * coef[:, None, None, None]).reshape((M + 1) * N * N, T)
        else:
            coef = np.full(M, 1.0 / (2.0 * math.pi))
            self._series = (SKS[1:] * coef[:, None, None, None]).reshape(M * N * N, T)
        self._series *= self.scale

        self._w0 = None
        self._w0_kernel = None
        if form == "two_sided":
            if m4 is not None and m4.source != "gaussian_closed_form":
                self._w0 = w0_factor(m4, disc.sigma_N)
                if self._w0.degenerate:
                    self._w0 = None
        else:
            sigma = disc.sigma_N if m4 is None else m4.sigma
            m4mat = m4.m4 if m4 is not None else FourthMomentMatrix(
                _isserlis(disc.sigma_N), disc.sigma_N, "gaussian_closed_form").m4
            v = sigma.reshape(-1)
            self._w0 = w0_factor(m4mat - np.outer(v, v))
        if self._w0 is not None:
            K0T = np.swapaxes(kernels.K0, 0, 1).reshape(N * N, T)
            self._w0_kernel = (self._w0.factor.T @ K0T) * (self.scale / TWO_PI)

    @property
    def degenerate_w0(self) -> bool:
        return self._w0 is None

    def draw_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` trajectories on the t-grid, ``(size, T)``."""
        T = self.t_grid.size
        if self.config.mode == "direct":
            dt = np.diff(self.t_grid)
            inc = rng.standard_normal((size, dt.size)) * np.sqrt(TWO_PI * dt)
            traj = np.zeros((size, T))
            traj[:, 1:] = np.cumsum(inc, axis=1)
            if self.t_grid[0] > 0:
                traj += rng.standard_normal((size, 1)) * math.sqrt(TWO_PI * self.t_grid[0])
        else:
            Z = rng.standard_normal((size, self._series.shape[0]))
            traj = Z @ self._series
        if self._w0_kernel is not None:
            z0 = rng.standard_normal((size, self._w0_kernel.shape[0]))
            traj += z0 @ self._w0_kernel
        return traj

    def draw(self, rng: np.random.Generator) -> LimitDraw:
        traj = self.draw_batch(rng, 1)[0]
        gr, cvm = trajectory_statistics(traj[None], self.t_grid)
        return LimitDraw(traj, float(gr[0]), float(cvm[0]), self.variant, self.degenerate_w0)

    def statistics(self, replicates: Optional[int] = None, seed: Optional[int] = None,
                   keep_trajectories=None):
        """GR and CvM statistics of ``replicates`` draws.

        Chunk ``c`` always uses the stream derived from ``(seed, "limit", c)``,
        so results do not depend on how chunks are scheduled.
        """
        R = self.config.replicates if replicates is None else int(replicates)
        seed = self.config.seed if seed is None else seed
        ch = self.config.chunk
        gr = np.empty(R)
        cvm = np.empty(R)
        kept = []
        for c, s in enumerate(range(0, R, ch)):
            size = min(ch, R - s)
            traj = self.draw_batch(derive_rng(seed, "limit", c), size)
            g, v = trajectory_statistics(traj, self.t_grid)
            gr[s:s + size] = g
            cvm[s:s + size] = v
            if keep_trajectories is not None:
                kept.append(traj[:, keep_trajectories])
        if keep_trajectories is not None:
            return gr, cvm, np.concatenate(kept, axis=0)
        return gr, cvm


def _isserlis(sigma):
    from .model import isserlis_matrix
    return isserlis_matrix(sigma)


def trajectory_statistics(traj: np.ndarray, t_grid: np.ndarray):
    """Sup-abs and squared-integral (trapezoid) of trajectories ``(R, T)``."""
    gr = np.max(np.abs(traj), axis=-1)
    cvm = scipy.integrate.trapezoid(traj ** 2, t_grid, axis=-1)
    return gr, cvm


def limit_trajectory(disc: DiscretizedModel, m4: Optional[FourthMomentMatrix], variant: str,
                     config: LimitSamplerConfig, rng: np.random.Generator) -> LimitDraw:
    """One draw of the limit process; see :class:`LimitSampler` for batches."""
    return LimitSampler(disc, m4, variant, config).draw(rng)


# -- analytic covariance -----------------------------------------------------------

def analytic_limit_covariance(g1: WeightFunction, g2: WeightFunction, disc: DiscretizedModel,
                              m4: Optional[FourthMomentMatrix] = None,
                              quad_grid: int = DEFAULT_QUAD, check_symmetry: bool = True) -> float:
    """Covariance of ``tr E(g1)`` and ``tr E(g2)`` in the limit.

    ``pi int tr(f A1^H f A2) dw`` with ``A = g(w) + g(-w)^T``, plus
    ``vec(G1)^H kappa4 vec(G2)`` with ``G = g^Phi_hat_0`` and ``kappa4`` the
    fourth joint cumulant matrix of the sampled innovation.
    """
    if g1.is_zero or g2.is_zero:
        return 0.0
    f = spectral_density(disc, fourier.periodic_grid(quad_grid))

    def combine(S1, S2, w):
        return np.einsum("kab,kcb,kcd,kda->k", f, np.conj(S1), f, S2, optimize=True)

    main = math.pi * integrate_term_pairs(g1.symmetrized(), g2.symmetrized(), combine, quad_grid)
    total = main.real
    if m4 is not None and m4.source != "gaussian_closed_form":
        kappa = m4.cumulant
        if np.linalg.norm(kappa) > 0:
            G1 = gphi_fourier_coeffs(g1, disc, 0, method="quadrature", quad_grid=quad_grid)[0]
            G2 = gphi_fourier_coeffs(g2, disc, 0, method="quadrature", quad_grid=quad_grid)[0]
            if check_symmetry:
                for G in (G1, G2):
                    if np.max(np.abs(G - G.T)) > 1e-10 * (1 + np.max(np.abs(G))):
                        raise AsymmetricZeroCoefficient(
                            "zero-lag coefficient of g^Phi is not symmetric")
            total += float((np.conj(G1.reshape(-1)) @ kappa @ G2.reshape(-1)).real)
    return float(total)


# -- reference distributions -----------------------------------------------------------

def sup_abs_bm_cdf(x) -> np.ndarray:
    """CDF of ``sup_{[0,1]} |B_t|``.

    Uses the alternating normal series for ``x >= 1`` and its theta-function
    transform for small ``x``; terms are added until below 1e-15.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    flat = x.reshape(-1)
    res = out.reshape(-1)
    for i, v in enumerate(flat):
        if v <= 0:
            res[i] = 0.0
        elif v >= 1.0:
            s = scipy.special.ndtr(v) - scipy.special.ndtr(-v)
            k = 1
            while True:
                term = (scipy.special.ndtr((2 * k + 1) * v) - scipy.special.ndtr((2 * k - 1) * v))
                term += (scipy.special.ndtr((-2 * k + 1) * v) - scipy.special.ndtr((-2 * k - 1) * v))
                s += (-1) ** k * term
                if abs(term) < 1e-15:
                    break
                k += 1
            res[i] = s
        else:
            s = 0.0
            k = 0
            while True:
                term = math.exp(-((2 * k + 1) ** 2) * math.pi ** 2 / (8 * v * v)) / (2 * k + 1)
                s += (-1) ** k * term
                if term < 1e-17:
                    break
                k += 1
            res[i] = 4.0 / math.pi * s
    return float(out) if out.ndim == 0 else out


def sup_abs_bm_quantile(p: float, tol: float = 1e-12) -> float:
    """Inverse of :func:`sup_abs_bm_cdf` by bracketing root search."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    hi = 1.0
    while sup_abs_bm_cdf(hi) < p:
        hi *= 2
    return float(scipy.optimize.brentq(lambda x: sup_abs_bm_cdf(x) - p, 1e-6, hi, xtol=tol,
                                       rtol=4 * np.finfo(float).eps))


def integral_bm_squared_samples(n_terms: int = 200, mc_reps: int = 200_000, seed: int = 0,
                                chunk: int = 50_000) -> np.ndarray:
    """Draws of ``int_0^1 B_t^2 dt`` from the Karhunen-Loeve series.

    ``sum_{k <= K} Z_k^2 / ((k - 1/2)^2 pi^2)`` plus the mean of the omitted tail.
    """
    if n_terms < 100:
        raise ValueError("n_terms must be >= 100")
    lam = 1.0 / (((np.arange(1, n_terms + 1) - 0.5) * np.pi) ** 2)
    tail = 0.5 - lam.sum()
    out = np.empty(mc_reps)
    for c, s in enumerate(range(0, mc_reps, chunk)):
        size = min(chunk, mc_reps - s)
        Z = derive_rng(seed, "kl", c).standard_normal((size, n_terms))
        out[s:s + size] = (Z * Z) @ lam + tail
    return out


def integral_bm_squared_quantile(p, n_terms: int = 200, mc_reps: int = 200_000, seed: int = 0):
    """Monte Carlo quantile(s) of ``int_0^1 B_t^2 dt`` (verification oracle)."""
    samples = integral_bm_squared_samples(n_terms, mc_reps, seed)
    q = estimate_quantiles(samples, np.atleast_1d(p))
    return float(q[0]) if np.ndim(p) == 0 else q


def estimate_quantiles(samples, levels) -> np.ndarray:
    """Lower empirical quantile: smallest sample ``x`` with ``F_hat(x) >= level``."""
    s = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    if s.size == 0:
        raise EmptySample("no samples")
    levels = np.asarray(levels, dtype=float)
    if np.any((levels <= 0) | (levels >= 1)):
        raise ValueError("levels must lie in (0, 1)")
    idx = np.ceil(levels * s.size - 1e-9).astype(np.int64) - 1
    return s[np.clip(idx, 0, s.size - 1)]


def analytic_sn_gr_quantile(level: float) -> float:
    """Quantile of ``sup_t |sqrt(2) pi B_{t/pi}|``."""
    return math.sqrt(2.0) * math.pi * sup_abs_bm_quantile(level)


def write_limit_csv(fh, gr, cvm, meta: dict) -> None:
    for k, v in meta.items():
        fh.write(f"# {k}: {v}\n")
    fh.write("replicate,statistic_gr,statistic_cvm\n")
    for i, (a, b) in enumerate(zip(gr, cvm)):
        fh.write(f"{i},{float(a)!r},{float(b)!r}\n")

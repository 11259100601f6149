"""Continuous-time state-space models and their exact sampled quantities.

The model is

    dX_t = A X_t dt + B dL_t,    Y_t = C X_t,

observed at times k * delta.  Sampling gives the exact VAR(1) recursion
``X_k = e^{A delta} X_{k-1} + N_k`` with i.i.d. innovations ``N_k`` of
covariance ``Sigma_N = int_0^delta e^{Au} B Sigma_L B^T e^{A^T u} du`` and the
MA(infinity) representation ``Y_k = sum_j Phi_j N_{k-j}``, ``Phi_j = C e^{A delta j}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    InsufficientSamples,
    LyapunovSolveFailed,
    MatrixExponentialOverflow,
    NearSingularSpectrum,
    NotPSD,
    ObservationNotOrthonormal,
    TruncationCapExceeded,
    UnstableDrift,
)

ORTHONORMAL_TOL = 1e-10
PSD_TOL = 1e-12
DEFAULT_TRUNC_TOL = 1e-12
J_MAX = 10_000
SINGULAR_COND = 1e12


def _as_matrix(x, name: str) -> np.ndarray:
    a = np.atleast_2d(np.asarray(x, dtype=float))
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionMismatch(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Continuous-time linear state-space model ``(A, B, C, sigma_L)``.

    Use :func:`validate_model` to construct checked instances; direct
    construction skips the stability and orthonormality checks (useful for
    deliberately degenerate test models).
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    sigma_L: np.ndarray
    max_real_eig: float = float("nan")
    validated: bool = False

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.B.shape[1]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.N, self.d, self.m

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "sigma_L": self.sigma_L.tolist(),
        }


def validate_model(A, B, C, sigma_L) -> StateSpaceModel:
    """Check dimensions, stability of ``A``, ``C C^T = I`` and PSD ``sigma_L``."""
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    C = _as_matrix(C, "C")
    sigma_L = _as_matrix(sigma_L, "sigma_L")
    N = A.shape[0]
    if A.shape != (N, N):
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    if B.shape[0] != N:
        # a 1-d input like [-1, 0] arrives as a row; accept it as a column
        if B.shape == (1, N):
            B = B.T
        else:
            raise DimensionMismatch(f"B must have {N} rows, got {B.shape}")
    d = B.shape[1]
    if C.shape[1] != N:
        raise DimensionMismatch(f"C must have {N} columns, got {C.shape}")
    if sigma_L.shape != (d, d):
        raise DimensionMismatch(f"sigma_L must be {d}x{d}, got {sigma_L.shape}")

    eig = np.linalg.eigvals(A)
    max_re = float(np.max(eig.real))
    if max_re >= 0:
        raise UnstableDrift(f"A has an eigenvalue with real part {max_re:.3g} >= 0")
    m = C.shape[0]
    dev = np.linalg.norm(C @ C.T - np.eye(m))
    if dev > ORTHONORMAL_TOL:
        raise ObservationNotOrthonormal(f"||C C^T - I|| = {dev:.3g}")
    if np.max(np.abs(sigma_L - sigma_L.T)) > PSD_TOL:
        raise NotPSD("sigma_L is not symmetric")
    lam = np.linalg.eigvalsh(sigma_L)
    if lam.min() < -PSD_TOL * max(1.0, lam.max()):
        raise NotPSD(f"sigma_L has eigenvalue {lam.min():.3g}")
    return StateSpaceModel(A, B, C, sigma_L, max_real_eig=max_re, validated=True)


def psd_sqrt(S: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Symmetric square root of a PSD matrix; tiny negative eigenvalues are zeroed."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    lam, U = np.linalg.eigh(0.5 * (S + S.T))
    if lam.size and lam[0] < -tol * max(1.0, abs(lam[-1])):
        raise NotPSD(f"matrix has eigenvalue {lam[0]:.3g}")
    return (U * np.sqrt(np.clip(lam, 0.0, None))) @ U.T


def matrix_exponential(M) -> np.ndarray:
    """``e^M`` by scaling and squaring with a Pade approximant (scipy's expm)."""
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise MatrixExponentialOverflow("input has non-finite entries")
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(M)
    if not np.all(np.isfinite(E)):
        raise MatrixExponentialOverflow("matrix exponential overflowed")
    return E


@dataclass(frozen=True, eq=False)
class DiscretizedModel:
    model: StateSpaceModel
    delta: float
    eAD: np.ndarray
    sigma_N: np.ndarray
    phi: np.ndarray  # (J+1, m, N)
    truncation_J: int
    stationary_cov: np.ndarray
    trunc_tol: float = DEFAULT_TRUNC_TOL

    @property
    def m(self) -> int:
        return self.model.m

    @property
    def N(self) -> int:
        return self.model.N


def van_loan_integral(A: np.ndarray, Q: np.ndarray, delta: float) -> np.ndarray:
    """``int_0^delta e^{Au} Q e^{A^T u} du`` from one block exponential."""
    N = A.shape[0]
    blk = np.zeros((2 * N, 2 * N))
    blk[:N, :N] = -A
    blk[:N, N:] = Q
    blk[N:, N:] = A.T
    F = matrix_exponential(blk * delta)
    S = F[N:, N:].T @ F[:N, N:]
    return 0.5 * (S + S.T)


def discretize(model: StateSpaceModel, delta: float,
               trunc_tol: float = DEFAULT_TRUNC_TOL, j_max: int = J_MAX) -> DiscretizedModel:
    if not delta > 0:
        raise ValueError("delta must be positive")
    A, B, C = model.A, model.B, model.C
    eAD = matrix_exponential(A * delta)
    Q = B @ model.sigma_L @ B.T
    sigma_N = van_loan_integral(A, Q, delta)

    phis = []
    P = np.eye(model.N)
    for j in range(j_max + 1):
        phi_j = C @ P
        phis.append(phi_j)
        if np.linalg.norm(phi_j) <= trunc_tol:
            break
        P = P @ eAD
    else:
        raise TruncationCapExceeded(
            f"||Phi_j|| still above {trunc_tol:g} after {j_max} terms; A is close to unstable")
    J = len(phis) - 1

    try:
        stat = scipy.linalg.solve_continuous_lyapunov(A, -Q)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise LyapunovSolveFailed(str(exc)) from exc
    if not np.all(np.isfinite(stat)):
        raise LyapunovSolveFailed("non-finite stationary covariance")
    stat = 0.5 * (stat + stat.T)
    return DiscretizedModel(model, float(delta), eAD, sigma_N, np.array(phis), J, stat, trunc_tol)


def ma_transfer(disc: DiscretizedModel, omega) -> np.ndarray:
    """``Phi(e^{-i omega}) = sum_j Phi_j e^{-ij omega}``, shape ``(..., m, N)``."""
    omega = np.asarray(omega, dtype=float)
    flat = omega.reshape(-1)
    J1 = disc.phi.shape[0]
    out = np.empty((flat.size,) + disc.phi.shape[1:], dtype=complex)
    j = np.arange(J1)
    step = max(1, 4_000_000 // J1)
    for s in range(0, flat.size, step):
        E = np.exp(-1j * np.outer(flat[s:s + step], j))
        out[s:s + step] = np.einsum("kj,jmn->kmn", E, disc.phi)
    return out.reshape(omega.shape + disc.phi.shape[1:])


def spectral_density(disc: DiscretizedModel, omega) -> np.ndarray:
    """``f(omega) = Phi(e^{-i w}) Sigma_N Phi(e^{i w})^T / 2 pi``."""
    P = ma_transfer(disc, omega)
    f = P @ disc.sigma_N @ np.conj(np.swapaxes(P, -1, -2)) / (2 * np.pi)
    return 0.5 * (f + np.conj(np.swapaxes(f, -1, -2)))


def hermitian_inverse(f: np.ndarray, max_cond: float = SINGULAR_COND) -> np.ndarray:
    """Inverse of a stack of Hermitian PD matrices through their eigendecomposition."""
    lam, U = np.linalg.eigh(f)
    lo, hi = lam[..., 0], lam[..., -1]
    if np.any(lo <= 0) or np.any(hi > max_cond * lo):
        worst = np.max(np.where(lo > 0, hi / np.where(lo > 0, lo, 1.0), np.inf))
        raise NearSingularSpectrum(f"spectral density condition number {worst:.3g}")
    inv = (U / lam[..., None, :]) @ np.conj(np.swapaxes(U, -1, -2))
    return 0.5 * (inv + np.conj(np.swapaxes(inv, -1, -2)))


def spectral_density_inverse(disc: DiscretizedModel, omega) -> np.ndarray:
    return hermitian_inverse(spectral_density(disc, omega))


def autocovariance_true(disc: DiscretizedModel, h: int, method: str = "ma") -> np.ndarray:
    """Model autocovariance ``Gamma_Y(h) = Cov(Y_{k+h}, Y_k)``.

    ``method="ma"`` sums the truncated MA representation; ``"lyapunov"`` uses
    ``C e^{A delta h} X C^T`` with ``X`` the discrete Lyapunov solution.
    """
    h = int(h)
    if h < 0:
        return autocovariance_true(disc, -h, method).T
    if method == "ma":
        phi = disc.phi
        if h > disc.truncation_J:
            return np.zeros((disc.m, disc.m))
        return np.einsum("jab,bc,jdc->ad", phi[h:], disc.sigma_N, phi[: phi.shape[0] - h])
    if method == "lyapunov":
        X = state_autocov_lyapunov(disc)
        C = disc.model.C
        return C @ np.linalg.matrix_power(disc.eAD, h) @ X @ C.T
    raise ValueError(f"unknown method {method!r}")


def state_autocov_lyapunov(disc: DiscretizedModel) -> np.ndarray:
    X = scipy.linalg.solve_discrete_lyapunov(disc.eAD, disc.sigma_N)
    if not np.all(np.isfinite(X)):
        raise LyapunovSolveFailed("discrete Lyapunov solve failed")
    return 0.5 * (X + X.T)


def autocovariances(disc: DiscretizedModel, max_lag: int) -> np.ndarray:
    """``Gamma_Y(h)`` for ``h = 0..max_lag`` stacked as ``(max_lag+1, m, m)``."""
    out = np.zeros((max_lag + 1, disc.m, disc.m))
    for h in range(min(max_lag, disc.truncation_J) + 1):
        out[h] = autocovariance_true(disc, h)
    return out


# -- fourth moments of the sampled innovations ------------------------------

def isserlis_matrix(sigma: np.ndarray) -> np.ndarray:
    """``E[NN^T (x) NN^T]`` for ``N ~ N(0, sigma)``, indexed ``[(a,b),(c,d)]``."""
    s = np.asarray(sigma, dtype=float)
    n = s.shape[0]
    T = (np.einsum("ab,cd->abcd", s, s) + np.einsum("ac,bd->abcd", s, s)
         + np.einsum("ad,bc->abcd", s, s))
    return T.reshape(n * n, n * n)


@dataclass(frozen=True, eq=False)
class FourthMomentMatrix:
    """``E[N_1 N_1^T (x) N_1 N_1^T]`` together with the second moment it goes with.

    Row/column index ``a*N + b`` pairs with the product ``N_a N_b``; the matrix
    is invariant under every permutation of ``(a, b, c, d)``, so the
    column-stacking and row-stacking conventions coincide.
    """

    m4: np.ndarray
    sigma: np.ndarray
    source: str
    sample_count: Optional[int] = None
    seed: Optional[int] = None
    standard_error: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)

    @property
    def cumulant(self) -> np.ndarray:
        """Fourth joint cumulant matrix ``cum(N_a, N_b, N_c, N_d)``.

        This is the covariance of ``vec(W_0*)``; it vanishes for Gaussian
        innovations in every dimension and equals ``m4 - 3 sigma^2`` when N = 1.
        """
        k = self.m4 - isserlis_matrix(self.sigma)
        return 0.5 * (k + k.T)

    @property
    def kron_excess(self) -> np.ndarray:
        """Literal ``m4 - 3 (sigma (x) sigma)``."""
        return self.m4 - 3.0 * np.kron(self.sigma, self.sigma)

    @property
    def w0_prime_cov(self) -> np.ndarray:
        """Covariance of ``vec(N N^T)``: ``m4 - vec(sigma) vec(sigma)^T``."""
        v = self.sigma.reshape(-1)
        return self.m4 - np.outer(v, v)

    @property
    def noise_floor(self) -> float:
        """Spectral-norm bound on the Monte Carlo noise in :attr:`cumulant`."""
        if self.standard_error is None:
            return 0.0
        return 3.0 * float(np.linalg.norm(self.standard_error, 2))


def _driver_kind(driver) -> str:
    if isinstance(driver, str):
        return driver
    return driver.kind


def fourth_moment_matrix(disc: DiscretizedModel, driver="gaussian", *,
                         provider: str = "monte_carlo", sample_count: int = 1_000_000,
                         seed: int = 0, step: float = 0.01, tolerance: Optional[float] = None,
                         chunk: int = 20_000) -> FourthMomentMatrix:
    """Fourth-moment matrix of the sampled innovation ``N_1``.

    Gaussian (``"gaussian"``/``"brownian"``) drivers use Isserlis' theorem.
    For a NIG :class:`~mcarma_gof.simulate.LevyDriver`, ``provider`` selects
    ``"monte_carlo"`` (Riemann-Ito sums over a grid of width ``step``) or
    ``"analytic"`` (NIG fourth cumulant integrated by Gauss-Legendre).
    """
    kind = _driver_kind(driver)
    if kind in ("gaussian", "brownian"):
        return FourthMomentMatrix(isserlis_matrix(disc.sigma_N), disc.sigma_N.copy(),
                                  "gaussian_closed_form")
    if kind != "nig":
        raise ValueError(f"unknown driver kind {kind!r}")
    if provider == "analytic":
        return _nig_fourth_moment_analytic(disc, driver)
    if provider != "monte_carlo":
        raise ValueError(f"unknown provider {provider!r}")
    return _nig_fourth_moment_mc(disc, driver, sample_count, seed, step, tolerance, chunk)


def _nig_fourth_moment_analytic(disc: DiscretizedModel, driver, nodes: int = 96) -> FourthMomentMatrix:
    from .simulate import nig_standardized_cumulant4

    model = disc.model
    c4 = nig_standardized_cumulant4(driver.nig_params)
    S = psd_sqrt(model.sigma_L)
    x, w = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * disc.delta * (x + 1)
    w = 0.5 * disc.delta * w
    V = np.array([matrix_exponential(model.A * ui) @ model.B @ S for ui in u])  # (q, N, d)
    kappa = c4 * np.einsum("q,qak,qbk,qck,qdk->abcd", w, V, V, V, V)
    n = model.N
    m4 = kappa.reshape(n * n, n * n) + isserlis_matrix(disc.sigma_N)
    return FourthMomentMatrix(m4, disc.sigma_N.copy(), "nig_analytic",
                              params=driver.describe())


def _nig_fourth_moment_mc(disc, driver, sample_count, seed, step, tolerance, chunk):
    from .simulate import levy_increments

    model = disc.model
    K = int(round(disc.delta / step))
    if K < 1 or abs(K * step - disc.delta) > 1e-9 * disc.delta:
        raise ValueError("step must divide delta")
    t = np.arange(K) * step
    G = np.array([matrix_exponential(model.A * (disc.delta - tk)) @ model.B for tk in t])  # (K,N,d)
    n = model.N
    s1 = np.zeros((n * n, n * n))
    s2 = np.zeros((n * n, n * n))
    second = np.zeros((n, n))
    streams = np.random.SeedSequence(seed).spawn((sample_count + chunk - 1) // chunk)
    done = 0
    for ss in streams:
        c = min(chunk, sample_count - done)
        rng = np.random.default_rng(ss)
        dL = levy_increments(driver, step, c * K, rng, sigma_L=model.sigma_L).reshape(c, K, model.d)
        Nv = np.einsum("ckd,knd->cn", dL, G)
        v = (Nv[:, :, None] * Nv[:, None, :]).reshape(c, n * n)
        outer = v[:, :, None] * v[:, None, :]
        s1 += outer.sum(axis=0)
        s2 += (outer ** 2).sum(axis=0)
        second += Nv.T @ Nv
        done += c
    m4 = s1 / sample_count
    var = np.maximum(s2 / sample_count - m4 ** 2, 0.0)
    se = np.sqrt(var / sample_count)
    if tolerance is not None and se.max() > tolerance:
        raise InsufficientSamples(f"max standard error {se.max():.3g} exceeds {tolerance:g}")
    sigma = second / sample_count
    return FourthMomentMatrix(0.5 * (m4 + m4.T), 0.5 * (sigma + sigma.T), "monte_carlo",
                              sample_count=sample_count, seed=seed, standard_error=se,
                              params={**driver.describe(), "step": step})

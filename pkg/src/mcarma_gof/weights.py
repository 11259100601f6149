"""Matrix-valued weight functions on ``[-pi, pi]``.

A weight is a finite sum of terms ``coef * S(omega) * 1_I(omega)`` where ``S``
is a smooth periodic matrix function and ``I`` an interval (or the whole
circle).  This covers indicators ``I_m 1_[0,t]``, self-normalized weights
``f^{-1} 1_[0,t]``, Fourier kernels ``e^{i h omega} I_m``, Whittle weights and
tabulated functions, and it is closed under sums, scalar multiples,
reflection ``g(-omega)^T`` and conjugation by the MA transfer function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, NearSingularSpectrum
from .model import DiscretizedModel, hermitian_inverse, ma_transfer, spectral_density

TWO_PI = 2.0 * np.pi


class Smooth:
    """Smooth periodic matrix function ``omega -> (m_out, m_in)``.

    Subclasses with a finite Fourier expansion expose ``coeffs = (l, c)``
    so that ``S(omega) = sum_l c_l e^{i l omega}`` is used exactly.
    """

    coeffs = None
    shape: tuple

    def __call__(self, omega) -> np.ndarray:
        raise NotImplementedError

    def on_grid(self, P: int) -> np.ndarray:
        """Values at ``2 pi k / P``, shape ``(P, a, b)``."""
        return self(TWO_PI * np.arange(P) / P)


class TrigPolynomial(Smooth):
    def __init__(self, lags, mats, name="trig"):
        self.lags = np.asarray(lags, dtype=np.int64)
        self.mats = np.asarray(mats, dtype=complex)
        self.coeffs = (self.lags, self.mats)
        self.shape = self.mats.shape[1:]
        self.name = name

    def __call__(self, omega):
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        E = np.exp(1j * np.outer(omega, self.lags))
        return np.einsum("kl,lab->kab", E, self.mats)


def identity_smooth(m: int) -> TrigPolynomial:
    return TrigPolynomial([0], np.eye(m)[None], "identity")


def exp_smooth(m: int, h: int) -> TrigPolynomial:
    return TrigPolynomial([h], np.eye(m)[None], f"exp({h})")


class FunctionSmooth(Smooth):
    def __init__(self, func: Callable, shape, name="function"):
        self.func = func
        self.shape = tuple(shape)
        self.name = name

    def __call__(self, omega):
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        return np.asarray(self.func(omega), dtype=complex)


class Reflected(Smooth):
    """``S(-omega)^T``."""

    def __init__(self, base: Smooth):
        self.base = base
        self.shape = base.shape[::-1]
        if base.coeffs is not None:
            l, c = base.coeffs
            self.coeffs = (-l, np.swapaxes(c, -1, -2))
        self.name = f"reflect({getattr(base, 'name', '?')})"

    def __call__(self, omega):
        return np.swapaxes(self.base(-np.atleast_1d(np.asarray(omega, dtype=float))), -1, -2)


class PhiConjugated(Smooth):
    """``Phi(e^{i w})^T S(w) Phi(e^{-i w})``, an ``N x N`` function."""

    def __init__(self, base: Smooth, disc: DiscretizedModel):
        self.base = base
        self.disc = disc
        self.shape = (disc.N, disc.N)
        self.name = f"phi({getattr(base, 'name', '?')})"

    def __call__(self, omega):
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        P = ma_transfer(self.disc, omega)
        return np.conj(np.swapaxes(P, -1, -2)) @ self.base(omega) @ P


@lru_cache(maxsize=64)
def _inverse_density_grid(disc: DiscretizedModel, P: int) -> np.ndarray:
    out = hermitian_inverse(spectral_density(disc, TWO_PI * np.arange(P) / P))
    out.setflags(write=False)
    return out


class InverseDensity(Smooth):
    """``f(omega)^{-1}`` of a sampled model (cached on periodic grids)."""

    def __init__(self, disc: DiscretizedModel):
        self.disc = disc
        self.shape = (disc.m, disc.m)
        self.name = "inverse_density"

    def __call__(self, omega):
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        return hermitian_inverse(spectral_density(self.disc, omega))

    def on_grid(self, P):
        return _inverse_density_grid(self.disc, P)


@dataclass(frozen=True, eq=False)
class WeightTerm:
    smooth: Smooth
    interval: Optional[tuple] = None  # None means the full circle
    coef: complex = 1.0

    def reflected(self) -> "WeightTerm":
        iv = None if self.interval is None else (-self.interval[1], -self.interval[0])
        return WeightTerm(Reflected(self.smooth), iv, self.coef)

    def mask(self, omega) -> np.ndarray:
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        if self.interval is None:
            return np.ones(omega.shape)
        a, b = self.interval
        return ((omega >= a) & (omega <= b)).astype(float)


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """Weight ``g: [-pi, pi] -> C^{m x m}`` as a sum of :class:`WeightTerm`.

    Parameters
    ----------
    family : str
        ``indicator_identity``, ``self_normalized``, ``fourier_kernel``,
        ``whittle``, ``tabulated``, ``zero`` or ``combination``.
    m : int
        Matrix dimension.
    terms : tuple of WeightTerm
    params : dict
        Family parameters (``t``, ``h`` ...), kept for reporting.
    """

    family: str
    m: int
    terms: tuple = ()
    params: dict = field(default_factory=dict)

    def __call__(self, omega) -> np.ndarray:
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        # evaluate on the principal branch [-pi, pi]
        w = np.mod(omega + np.pi, TWO_PI) - np.pi
        out = np.zeros(w.shape + self.shape, dtype=complex)
        for term in self.terms:
            mask = term.mask(w)
            if np.any(mask):
                out += term.coef * mask[:, None, None] * term.smooth(w)
        return out

    @property
    def shape(self) -> tuple:
        if self.terms:
            return tuple(self.terms[0].smooth.shape)
        return (self.m, self.m)

    @property
    def is_zero(self) -> bool:
        return all(t.coef == 0 for t in self.terms)

    def __add__(self, other: "WeightFunction") -> "WeightFunction":
        if not isinstance(other, WeightFunction):
            return NotImplemented
        if other.shape != self.shape:
            raise DimensionMismatch(f"cannot add weights of shape {self.shape} and {other.shape}")
        return WeightFunction("combination", self.m, self.terms + other.terms,
                              {"parts": [self.family, other.family]})

    def __mul__(self, a) -> "WeightFunction":
        a = complex(a)
        terms = tuple(WeightTerm(t.smooth, t.interval, a * t.coef) for t in self.terms)
        return WeightFunction(self.family, self.m, terms, dict(self.params, scale=a))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def reflected(self) -> "WeightFunction":
        """``omega -> g(-omega)^T``."""
        return WeightFunction(self.family + "_reflected", self.m,
                              tuple(t.reflected() for t in self.terms), dict(self.params))

    def symmetrized(self) -> "WeightFunction":
        """``g(omega) + g(-omega)^T``."""
        return self + self.reflected()

    def conjugated(self, disc: DiscretizedModel) -> "WeightFunction":
        """``g^Phi(omega) = Phi(e^{i w})^T g(w) Phi(e^{-i w})``."""
        if self.shape != (disc.m, disc.m):
            raise DimensionMismatch(f"weight is {self.shape}, model has m={disc.m}")
        terms = tuple(WeightTerm(PhiConjugated(t.smooth, disc), t.interval, t.coef)
                      for t in self.terms)
        return WeightFunction(self.family + "_phi", disc.N, terms, dict(self.params))


def _check_t(t: float) -> float:
    t = float(t)
    if not (0.0 <= t <= np.pi + 1e-12):
        raise ValueError(f"t must lie in [0, pi], got {t}")
    return min(t, np.pi)


def indicator_identity(t: float, m: int = 1) -> WeightFunction:
    """``I_m 1_[0,t](omega)``."""
    t = _check_t(t)
    return WeightFunction("indicator_identity", m, (WeightTerm(identity_smooth(m), (0.0, t)),),
                          {"t": t})


def self_normalized(t: float, disc: DiscretizedModel) -> WeightFunction:
    """``f(omega)^{-1} 1_[0,t](omega)``."""
    t = _check_t(t)
    return WeightFunction("self_normalized", disc.m,
                          (WeightTerm(InverseDensity(disc), (0.0, t)),), {"t": t})


def fourier_kernel(h: int, m: int = 1) -> WeightFunction:
    """``e^{i h omega} I_m``; it picks out the lag-``h`` autocovariance."""
    return WeightFunction("fourier_kernel", m, (WeightTerm(exp_smooth(m, int(h))),), {"h": int(h)})


def whittle(candidate: DiscretizedModel) -> WeightFunction:
    """Inverse spectral density of a candidate model on the whole circle."""
    return WeightFunction("whittle", candidate.m, (WeightTerm(InverseDensity(candidate)),),
                          {"candidate": candidate})


def zero_weight(m: int = 1) -> WeightFunction:
    return WeightFunction("zero", m, (), {})


def tabulated(values, omegas=None) -> WeightFunction:
    """Weight given by values on an equispaced periodic grid.

    ``values`` has shape ``(K, m, m)`` at ``omegas = 2 pi k / K`` (any shift of
    that grid by a constant is accepted).  Between nodes the weight is the
    trigonometric interpolant.
    """
    values = np.asarray(values, dtype=complex)
    if values.ndim == 1:
        values = values[:, None, None]
    if values.ndim != 3 or values.shape[1] != values.shape[2]:
        raise DimensionMismatch(f"tabulated values must be (K, m, m), got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("tabulated weight has non-finite values")
    K, m = values.shape[0], values.shape[1]
    shift = 0.0
    if omegas is not None:
        omegas = np.asarray(omegas, dtype=float)
        if omegas.shape != (K,):
            raise DimensionMismatch("omegas and values disagree in length")
        spacing = np.diff(omegas)
        if K > 1 and not np.allclose(spacing, TWO_PI / K, atol=1e-10):
            raise ValueError("tabulated weights need an equispaced periodic grid")
        shift = float(omegas[0])
    c = np.fft.fft(values, axis=0) / K
    l = np.fft.fftfreq(K, 1.0 / K).astype(np.int64)
    c = c * np.exp(-1j * l * shift)[:, None, None]
    if K % 2 == 0:
        ny = K // 2
        half = 0.5 * c[ny]
        c = np.concatenate([c, half[None]], axis=0)
        c[ny] = half
        l = np.concatenate([l, [ny]])
    return WeightFunction("tabulated", m, (WeightTerm(TrigPolynomial(l, c, "tabulated")),),
                          {"grid": K})


def linear_combination(coefs: Sequence[complex], weights: Sequence[WeightFunction]) -> WeightFunction:
    out = None
    for a, g in zip(coefs, weights):
        out = a * g if out is None else out + a * g
    if out is None:
        raise ValueError("empty combination")
    return out

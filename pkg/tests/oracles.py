"""Independent reference computations used by the tests.

Nothing here shares code with the package beyond numpy/scipy/mpmath.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.optimize


def van_loan_by_quadrature(A, Q, delta):
    """``int_0^delta e^{Au} Q e^{A^T u} du`` by adaptive vector quadrature."""
    A = np.asarray(A, float)
    Q = np.asarray(Q, float)

    def integrand(u):
        E = scipy.linalg.expm(A * u)
        return E @ Q @ E.T

    val, _ = scipy.integrate.quad_vec(integrand, 0.0, delta, epsabs=1e-14, epsrel=1e-13)
    return val


def sup_abs_bm_cdf_mp(x, dps=40):
    """``P(sup_[0,1] |B| <= x)`` from the eigenfunction series, in high precision."""
    mpmath.mp.dps = dps
    x = mpmath.mpf(x)
    s = mpmath.nsum(lambda k: (-1) ** int(k) / (2 * k + 1)
                    * mpmath.exp(-((2 * k + 1) ** 2) * mpmath.pi ** 2 / (8 * x * x)), [0, mpmath.inf])
    return float(4 / mpmath.pi * s)


def sup_abs_bm_cdf_reflection_mp(x, dps=40):
    """Same CDF from the reflection-principle series (the other classical form)."""
    mpmath.mp.dps = dps
    x = mpmath.mpf(x)
    s = mpmath.nsum(lambda k: (-1) ** int(abs(k))
                    * (mpmath.ncdf((2 * k + 1) * x) - mpmath.ncdf((2 * k - 1) * x)),
                    [-mpmath.inf, mpmath.inf])
    return float(s)


def sup_abs_bm_quantile_mp(p):
    return float(mpmath.findroot(lambda x: sup_abs_bm_cdf_mp(x) - p, 2.0))


def int_bm2_cdf(x, U=12000.0, nodes=400_000):
    """Gil-Pelaez inversion for ``int_0^1 B_t^2 dt``.

    The characteristic function is ``cos(sqrt(2 i u))^{-1/2}``; the branch of
    the square root is fixed by unwrapping the phase of the cosine from
    ``u = 0`` (where it equals 1).  ``|phi(u)|`` decays like
    ``exp(-sqrt(u)/2)``, so truncating at ``U`` is harmless.
    """
    # u = s^2 clusters nodes near 0 where the integrand varies fastest
    s = np.linspace(0.0, math.sqrt(U), nodes + 1)
    u = s * s
    lc = np.log(np.cos(np.sqrt(2j * u)))
    phase = np.unwrap(lc.imag)
    log_phi = -0.5 * (lc.real + 1j * phase)
    vals = np.empty_like(u)
    vals[1:] = (np.exp(log_phi[1:] - 1j * u[1:] * x)).imag / u[1:] * 2 * s[1:]
    vals[0] = 0.0  # the integrand is O(s) at s = 0
    integral = scipy.integrate.simpson(vals, x=s)
    return 0.5 - integral / math.pi


def int_bm2_quantile(p):
    return float(scipy.optimize.brentq(lambda x: int_bm2_cdf(x) - p, 0.05, 5.0, xtol=1e-10))


def naive_periodogram(Y, omegas):
    """Double loop over time indices; no FFT."""
    Y = np.asarray(Y, float)
    n, m = Y.shape
    out = np.zeros((len(omegas), m, m), complex)
    for k, w in enumerate(omegas):
        d = np.zeros(m, complex)
        for j in range(n):
            d += Y[j] * np.exp(-1j * (j + 1) * w)
        out[k] = np.outer(d, d.conj()) / (2 * np.pi * n)
    return out


def sample_acov_loop(Y, h):
    Y = np.asarray(Y, float)
    n = Y.shape[0]
    return sum(np.outer(Y[j + h], Y[j]) for j in range(n - h)) / n


def phi_by_powers(model, delta, J):
    E = scipy.linalg.expm(model.A * delta)
    out, P = [], np.eye(model.N)
    for _ in range(J + 1):
        out.append(model.C @ P)
        P = P @ E
    return np.array(out)


def density_by_sum(model, delta, sigma_N, omega, J):
    """``(1/2pi) Phi(e^{-iw}) Sigma_N Phi(e^{iw})^T`` by explicit summation."""
    phis = phi_by_powers(model, delta, J)
    out = []
    for w in np.atleast_1d(omega):
        Pm = sum(phis[j] * np.exp(-1j * j * w) for j in range(J + 1))
        out.append(Pm @ sigma_N @ Pm.conj().T / (2 * np.pi))
    return np.array(out)

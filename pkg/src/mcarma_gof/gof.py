"""Grenander-Rosenblatt and Cramer-von Mises goodness-of-fit tests.

Four statistics are built from the cumulative trace trajectory:

* ``gr``     sup_t |sqrt(n) int_0^t tr(I_n - f)|
* ``cvm``    int_0^pi (sqrt(n) int_0^t tr(I_n - f))^2 dt
* ``sn_gr``  sup_t |sqrt(n/m) (int_0^t tr(I_n f^{-1}) - t m)|
* ``sn_cvm`` int_0^pi (sqrt(n/m) (int_0^t tr(I_n f^{-1}) - t m))^2 dt

The squared statistics carry the factor ``n`` (``n/m``) so that they converge
to the squared-integral of the same Gaussian limit as the sup statistics.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, Optional, Sequence

import numpy as np
import scipy.integrate

from .errors import MissingCriticalValue
from .limit import (
    LimitSampler,
    LimitSamplerConfig,
    analytic_sn_gr_quantile,
    estimate_quantiles,
    integral_bm_squared_samples,
    sup_abs_bm_cdf,
)
from .model import DiscretizedModel, FourthMomentMatrix
from .fourier import uniform_t_grid
from .spectral import DEFAULT_T_INTERVALS, TrajectoryEngine, cumulative_trace_trajectory, observations

VARIANTS = ("gr", "cvm", "sn_gr", "sn_cvm")
FAMILY = {"gr": "plain", "cvm": "plain", "sn_gr": "self_normalized", "sn_cvm": "self_normalized"}
CSV_SCHEMA = "testresult-v1"
KL_TERMS = 200
KL_REPS = 400_000
KL_SEED = 20240101


def _check_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    return variant


def statistic_from_trajectory(traj: np.ndarray, t_grid: np.ndarray, variant: str) -> np.ndarray:
    """Sup-abs (``*gr``) or squared integral (``*cvm``) along the last axis."""
    _check_variant(variant)
    if variant.endswith("gr"):
        return np.max(np.abs(traj), axis=-1)
    return scipy.integrate.trapezoid(traj ** 2, t_grid, axis=-1)


def statistics_batch(engine: TrajectoryEngine, Ys: np.ndarray,
                     variants: Iterable[str] = VARIANTS) -> Dict[str, np.ndarray]:
    """All requested statistics for a batch of paths ``(R, n, m)``."""
    variants = [_check_variant(v) for v in variants]
    out = {}
    for family in ("plain", "self_normalized"):
        wanted = [v for v in variants if FAMILY[v] == family]
        if not wanted:
            continue
        traj = engine.trajectories(Ys, family)
        for v in wanted:
            out[v] = statistic_from_trajectory(traj, engine.t_grid, v)
    return out


def _stat(Y, disc, t_grid, variant, periodogram=None):
    traj = cumulative_trace_trajectory(Y, disc, FAMILY[variant], t_grid, periodogram=periodogram)
    grid = uniform_t_grid(DEFAULT_T_INTERVALS) if t_grid is None else np.asarray(t_grid, dtype=float)
    return float(statistic_from_trajectory(traj, grid, variant))


def gr_statistic(Y, disc: DiscretizedModel, t_grid=None, periodogram=None) -> float:
    return _stat(Y, disc, t_grid, "gr", periodogram)


def cvm_statistic(Y, disc: DiscretizedModel, t_grid=None, periodogram=None) -> float:
    return _stat(Y, disc, t_grid, "cvm", periodogram)


def sn_gr_statistic(Y, disc: DiscretizedModel, t_grid=None, periodogram=None) -> float:
    return _stat(Y, disc, t_grid, "sn_gr", periodogram)


def sn_cvm_statistic(Y, disc: DiscretizedModel, t_grid=None, periodogram=None) -> float:
    return _stat(Y, disc, t_grid, "sn_cvm", periodogram)


# -- critical values ---------------------------------------------------------------

def fingerprint(obj) -> str:
    """Short stable hash of a JSON-serialisable description."""
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


@dataclass(frozen=True, eq=False)
class NullDistribution:
    """Reference sample (or closed form) of a statistic under the null."""

    variant: str
    source: str  # analytic_brownian | mc_limit | mc_finite_n
    samples: Optional[np.ndarray] = None
    config: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        if self.source == "analytic_brownian":
            return "analytic_brownian"
        return f"{self.source}({fingerprint(self.config)})"

    def quantile(self, p: float) -> float:
        if self.source == "analytic_brownian" and self.variant == "sn_gr":
            return analytic_sn_gr_quantile(p)
        return float(estimate_quantiles(self.samples, [p])[0])

    def critical_value(self, level: float) -> float:
        """Upper ``level`` critical value; ``level = 1`` gives 0 (always reject)."""
        if not 0 < level <= 1:
            raise ValueError("level must lie in (0, 1]")
        if level >= 1:
            return 0.0
        return self.quantile(1.0 - level)

    def p_value(self, stat: float):
        """Tail probability and a 95% Wilson interval (degenerate for closed forms)."""
        if self.source == "analytic_brownian" and self.variant == "sn_gr":
            p = 1.0 - float(sup_abs_bm_cdf(stat / (math.sqrt(2.0) * math.pi)))
            return p, (p, p)
        s = self.samples
        k = int(np.sum(s >= stat))
        return k / s.size, wilson_interval(k, s.size)


def wilson_interval(k: int, n: int, z: float = 1.959963984540054):
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return (max(0.0, centre - half), min(1.0, centre + half))


def analytic_null(variant: str) -> NullDistribution:
    """Model-free null of the self-normalized statistics under a Brownian driver."""
    if variant == "sn_gr":
        return NullDistribution("sn_gr", "analytic_brownian", None, {})
    if variant == "sn_cvm":
        s = 2.0 * math.pi ** 3 * integral_bm_squared_samples(KL_TERMS, KL_REPS, KL_SEED)
        return NullDistribution("sn_cvm", "analytic_brownian", s,
                                {"kl_terms": KL_TERMS, "kl_reps": KL_REPS, "kl_seed": KL_SEED})
    raise MissingCriticalValue(f"no closed-form null for {variant}")


def limit_nulls(disc: DiscretizedModel, m4: Optional[FourthMomentMatrix],
                variants: Iterable[str], config: LimitSamplerConfig) -> Dict[str, NullDistribution]:
    """Monte Carlo limit distributions for the requested statistics."""
    variants = [_check_variant(v) for v in variants]
    out = {}
    for family in ("plain", "self_normalized"):
        wanted = [v for v in variants if FAMILY[v] == family]
        if not wanted:
            continue
        sampler = LimitSampler(disc, m4, family, config)
        gr, cvm = sampler.statistics()
        cfg = dict(config.fingerprint(), family=family,
                   m4=None if m4 is None else m4.source, m4_params=None if m4 is None else m4.params)
        for v in wanted:
            out[v] = NullDistribution(v, "mc_limit", gr if v.endswith("gr") else cvm, cfg)
    return out


def _is_brownian(driver) -> bool:
    if driver is None:
        return True
    kind = driver if isinstance(driver, str) else driver.kind
    return kind in ("brownian", "gaussian")


def resolve_null(variant: str, disc: DiscretizedModel, critical_source: str = "auto", *,
                 driver=None, m4: Optional[FourthMomentMatrix] = None,
                 limit_config: Optional[LimitSamplerConfig] = None,
                 null_samples=None) -> NullDistribution:
    """Choose the reference distribution for ``variant``.

    ``auto`` takes the closed form for self-normalized statistics under a
    Brownian driver and the Monte Carlo limit otherwise.
    """
    _check_variant(variant)
    if critical_source == "auto":
        critical_source = "analytic_brownian" if (variant.startswith("sn") and _is_brownian(driver)) \
            else "mc_limit"
    if critical_source == "analytic_brownian":
        if not _is_brownian(driver):
            raise MissingCriticalValue("closed-form critical values need a Brownian driver")
        return analytic_null(variant)
    if critical_source == "mc_limit":
        if not _is_brownian(driver) and m4 is None:
            raise MissingCriticalValue("a fourth-moment matrix is needed for a non-Gaussian limit")
        return limit_nulls(disc, m4, [variant], limit_config or LimitSamplerConfig())[variant]
    if critical_source == "mc_finite_n":
        if null_samples is None:
            raise MissingCriticalValue("mc_finite_n needs simulated null statistics")
        return NullDistribution(variant, "mc_finite_n", np.asarray(null_samples, dtype=float),
                                {"replicates": int(np.size(null_samples))})
    raise MissingCriticalValue(f"unknown critical source {critical_source!r}")


# -- tests ---------------------------------------------------------------------

@dataclass(frozen=True)
class TestResult:
    statistic: float
    variant: str
    level: float
    critical_value: float
    critical_source: str
    reject: bool
    n: int
    p_value: Optional[float] = None
    p_low: Optional[float] = None
    p_high: Optional[float] = None

    __test__ = False  # not a pytest class

    FIELDS = ("variant", "n", "statistic", "level", "critical_value", "critical_source",
              "reject", "p_value", "p_low", "p_high")

    @classmethod
    def csv_header(cls) -> str:
        return f"# schema: {CSV_SCHEMA}\n" + ",".join(cls.FIELDS) + "\n"

    def csv_row(self) -> str:
        d = asdict(self)
        vals = []
        for k in self.FIELDS:
            v = d[k]
            vals.append("" if v is None else (repr(float(v)) if isinstance(v, float) else str(v)))
        return ",".join(vals) + "\n"


def decide(statistic: float, variant: str, level: float, null: NullDistribution, n: int) -> TestResult:
    crit = null.critical_value(level)
    p, (lo, hi) = null.p_value(statistic)
    return TestResult(float(statistic), variant, float(level), float(crit), null.label,
                      bool(statistic > crit), int(n), p, lo, hi)


def run_test(Y, disc: DiscretizedModel, variant: str = "sn_gr", level: float = 0.05,
             critical_source: str = "auto", *, driver=None, m4=None,
             limit_config: Optional[LimitSamplerConfig] = None, null_samples=None,
             null: Optional[NullDistribution] = None, t_grid=None) -> TestResult:
    """Test the fully specified model ``disc`` against the path ``Y`` at size ``level``.

    Parameters
    ----------
    critical_source : {"auto", "analytic_brownian", "mc_limit", "mc_finite_n"}
    driver : LevyDriver or str, optional
        Driver assumed under the null (Brownian if omitted).
    m4 : FourthMomentMatrix, optional
        Needed for the limit of non-Gaussian drivers.
    null : NullDistribution, optional
        Precomputed reference distribution; overrides ``critical_source``.
    """
    Y = observations(Y)
    stat = _stat(Y, disc, t_grid, variant)
    if null is None:
        null = resolve_null(variant, disc, critical_source, driver=driver, m4=m4,
                            limit_config=limit_config, null_samples=null_samples)
    return decide(stat, variant, level, null, Y.shape[0])

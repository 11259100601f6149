"""Sample paths of Levy-driven state-space models.

Two schemes are available: the Euler-Maruyama recursion on a fine grid (works
for any driver) and the exact sampled VAR(1) recursion, which is exact only for
a Brownian driver.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    CholeskyFailed,
    InvalidNigParams,
    NotPSD,
    NumericalBlowup,
    StepNotDividingDelta,
)
from .model import DiscretizedModel, StateSpaceModel, psd_sqrt

BLOWUP = 1e12


@dataclass(frozen=True)
class NigParams:
    alpha: float = 1.0
    beta: float = 0.0
    delta_scale: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        if not (self.alpha > 0 and abs(self.beta) < self.alpha and self.delta_scale > 0):
            raise InvalidNigParams(
                f"need alpha > 0, |beta| < alpha, delta > 0; got {self}")

    @property
    def gamma(self) -> float:
        return math.sqrt(self.alpha ** 2 - self.beta ** 2)

    @property
    def mean_rate(self) -> float:
        return self.mu + self.delta_scale * self.beta / self.gamma

    @property
    def var_rate(self) -> float:
        return self.delta_scale * self.alpha ** 2 / self.gamma ** 3


def nig_standardized_cumulant4(params: NigParams) -> float:
    """Fourth cumulant per unit time of the NIG process scaled to unit variance."""
    a, b, dl = params.alpha, params.beta, params.delta_scale
    return 3.0 * (a * a + 4 * b * b) / (dl * a * a * params.gamma)


@dataclass(frozen=True)
class LevyDriver:
    """Brownian motion or NIG Levy process with per-unit-time covariance ``target_cov``.

    NIG coordinates are drawn independently, centred and scaled to unit
    variance per unit time, then mixed by the symmetric square root of
    ``target_cov``.
    """

    kind: str = "brownian"
    nig_params: Optional[NigParams] = None
    target_cov: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("brownian", "nig"):
            raise ValueError(f"unknown driver kind {self.kind!r}")
        if self.kind == "nig" and self.nig_params is None:
            object.__setattr__(self, "nig_params", NigParams())
        if self.kind == "brownian" and self.nig_params is not None:
            raise ValueError("nig_params given for a brownian driver")

    @classmethod
    def brownian(cls, target_cov=None) -> "LevyDriver":
        return cls("brownian", None, target_cov)

    @classmethod
    def nig(cls, alpha=1.0, beta=0.0, delta_scale=1.0, mu=0.0, target_cov=None) -> "LevyDriver":
        return cls("nig", NigParams(alpha, beta, delta_scale, mu), target_cov)

    def describe(self) -> dict:
        out = {"driver": self.kind}
        if self.nig_params is not None:
            p = self.nig_params
            out.update(nig_alpha=p.alpha, nig_beta=p.beta, nig_delta=p.delta_scale, nig_mu=p.mu)
        return out


def levy_increments(driver: LevyDriver, dt: float, count: int, rng: np.random.Generator,
                    sigma_L=None) -> np.ndarray:
    """``count`` i.i.d. increments over intervals of length ``dt``, shape ``(count, d)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    cov = sigma_L if sigma_L is not None else driver.target_cov
    cov = np.eye(1) if cov is None else np.atleast_2d(np.asarray(cov, dtype=float))
    d = cov.shape[0]
    if count == 0:
        return np.zeros((0, d))
    S = psd_sqrt(cov)
    if driver.kind == "brownian":
        z = rng.standard_normal((count, d)) * math.sqrt(dt)
    else:
        p = driver.nig_params
        dl = p.delta_scale * dt
        v = rng.wald(dl / p.gamma, dl * dl, size=(count, d))
        x = p.mu * dt + p.beta * v + np.sqrt(v) * rng.standard_normal((count, d))
        z = (x - p.mean_rate * dt) / math.sqrt(p.var_rate)
    return z @ S.T


def derive_rng(master_seed: int, *keys) -> np.random.Generator:
    """Independent generator for ``(master_seed, *keys)``; strings are hashed."""
    spawn = tuple(k if isinstance(k, int) else zlib.crc32(str(k).encode()) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=spawn))


@dataclass(frozen=True, eq=False)
class SamplePath:
    observations: np.ndarray  # (n, m)
    delta: float
    origin: str
    seed: Optional[int] = None
    step: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.observations.shape[0]

    @property
    def m(self) -> int:
        return self.observations.shape[1]

    def to_csv(self, fh) -> None:
        write_path_csv(self, fh)


def write_path_csv(path: SamplePath, fh) -> None:
    fh.write(f"# origin: {path.origin}\n")
    fh.write(f"# delta: {path.delta!r}\n")
    if path.step is not None:
        fh.write(f"# step: {path.step!r}\n")
    fh.write(f"# seed: {path.seed}\n")
    for k, v in path.meta.items():
        fh.write(f"# {k}: {v}\n")
    fh.write(",".join(f"y{i}" for i in range(path.m)) + "\n")
    for row in path.observations:
        fh.write(",".join(repr(float(x)) for x in row) + "\n")


def read_path_csv(fh) -> SamplePath:
    meta, rows = {}, []
    header = None
    for line in fh:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        elif header is None:
            header = line.split(",")
        else:
            rows.append([float(x) for x in line.split(",")])
    obs = np.array(rows, dtype=float).reshape(len(rows), len(header or []))
    delta = float(meta.pop("delta", 1.0))
    origin = meta.pop("origin", "external")
    seed = meta.pop("seed", None)
    step = meta.pop("step", None)
    return SamplePath(obs, delta, origin,
                      None if seed in (None, "None") else int(seed),
                      None if step is None else float(step), meta)


def _n_steps(delta: float, step: float) -> int:
    if not step > 0:
        raise ValueError("step must be positive")
    K = int(round(delta / step))
    if K < 1 or abs(K * step - delta) > 1e-9 * max(delta, 1.0):
        raise StepNotDividingDelta(f"delta={delta} is not an integer multiple of step={step}")
    return K


def euler_batch(model: StateSpaceModel, driver: LevyDriver, step: float, n_obs: int,
                delta: float, burn_in: float, rngs: Sequence[np.random.Generator],
                method: str = "blocked") -> np.ndarray:
    """Euler-Maruyama observations for several independent replicates, ``(R, n, m)``.

    Each replicate draws all of its increments from its own generator, so the
    result for one replicate does not depend on how replicates are batched.
    ``method="blocked"`` aggregates the linear Euler recursion over each
    observation interval; ``"loop"`` iterates step by step.  Both produce the
    same iterates up to rounding.
    """
    K = _n_steps(delta, step)
    burn = int(math.ceil(burn_in / step - 1e-9)) if burn_in > 0 else 0
    A, B, C = model.A, model.B, model.C
    N, d = model.N, model.d
    total = burn + n_obs * K
    R = len(rngs)
    dL = np.empty((R, total, d))
    for r, rng in enumerate(rngs):
        dL[r] = levy_increments(driver, step, total, rng, sigma_L=model.sigma_L)

    F = np.eye(N) + A * step
    if method == "loop":
        X = np.zeros((R, N))
        out = np.empty((R, n_obs, N))
        BT = B.T
        for s in range(total):
            X = X + X @ (A.T * step) + dL[:, s] @ BT
            if s >= burn and (s - burn + 1) % K == 0:
                out[:, (s - burn + 1) // K - 1] = X
        Xs = out
    elif method == "blocked":
        X = np.zeros((R, N))
        if burn:
            Gb = _euler_kernel(F, B, burn)
            X = np.einsum("rjd,jnd->rn", dL[:, :burn], Gb)
        G = _euler_kernel(F, B, K)
        U = np.einsum("rkjd,jnd->rkn", dL[:, burn:].reshape(R, n_obs, K, d), G)
        FK = np.linalg.matrix_power(F, K)
        Xs = np.empty((R, n_obs, N))
        FKT = FK.T
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(n_obs):
                X = X @ FKT + U[:, k]
                Xs[:, k] = X
    else:
        raise ValueError(f"unknown method {method!r}")

    if not np.all(np.isfinite(Xs)) or np.abs(Xs).max(initial=0.0) > BLOWUP:
        raise NumericalBlowup("Euler iterates exceed 1e12; step too large for A")
    return Xs @ C.T


def _euler_kernel(F: np.ndarray, B: np.ndarray, K: int) -> np.ndarray:
    """``[F^{K-1} B, F^{K-2} B, ..., B]`` stacked as ``(K, N, d)``."""
    G = np.empty((K,) + B.shape)
    G[K - 1] = B
    for j in range(K - 2, -1, -1):
        G[j] = F @ G[j + 1]
    return G


def euler_maruyama(model: StateSpaceModel, driver: LevyDriver, step: float, n_obs: int,
                   delta: float = 1.0, burn_in: float = 0.0, seed: int = 0,
                   method: str = "blocked") -> SamplePath:
    """Euler-Maruyama path started at ``X(0) = 0``, observed every ``delta``."""
    rng = np.random.default_rng(seed)
    Y = euler_batch(model, driver, step, n_obs, delta, burn_in, [rng], method)[0]
    return SamplePath(Y, float(delta), "euler", seed, float(step),
                      {**driver.describe(), "burn_in": burn_in})


def default_burn_in_steps(disc: DiscretizedModel) -> int:
    rate = -disc.model.max_real_eig
    if not np.isfinite(rate) or rate <= 0:
        rate = -float(np.max(np.linalg.eigvals(disc.model.A).real))
    return int(math.ceil(10.0 / (rate * disc.delta)))


def innovation_factor(sigma_N: np.ndarray) -> np.ndarray:
    try:
        return psd_sqrt(sigma_N)
    except NotPSD as exc:
        raise CholeskyFailed(str(exc)) from exc


def exact_batch(disc: DiscretizedModel, n_obs: int, burn_in_steps: int,
                rngs: Sequence[np.random.Generator]) -> np.ndarray:
    """Exact Gaussian recursion for several replicates, ``(R, n, m)``."""
    L = innovation_factor(disc.sigma_N)
    N = disc.N
    total = burn_in_steps + n_obs
    R = len(rngs)
    Z = np.empty((R, total, N))
    for r, rng in enumerate(rngs):
        Z[r] = rng.standard_normal((total, N))
    noise = Z @ L.T
    FT = disc.eAD.T
    X = np.zeros((R, N))
    Xs = np.empty((R, n_obs, N))
    for k in range(total):
        X = X @ FT + noise[:, k]
        if k >= burn_in_steps:
            Xs[:, k - burn_in_steps] = X
    return Xs @ disc.model.C.T


def exact_gaussian_sample(disc: DiscretizedModel, n_obs: int,
                          burn_in_steps: Optional[int] = None, seed: int = 0) -> SamplePath:
    """Sample ``Y_k = C X_k`` from the exact recursion with Gaussian innovations."""
    if burn_in_steps is None:
        burn_in_steps = default_burn_in_steps(disc)
    rng = np.random.default_rng(seed)
    Y = exact_batch(disc, n_obs, burn_in_steps, [rng])[0]
    return SamplePath(Y, disc.delta, "exact_gaussian", seed, None,
                      {"driver": "brownian", "burn_in_steps": burn_in_steps})

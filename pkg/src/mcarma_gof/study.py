"""Simulation studies: null quantiles and rejection rates of the GOF statistics.

Replicates are processed in fixed-size chunks.  Replicate ``i`` of sample size
``n`` always draws from the stream derived from
``(master_seed, study_id, n, i)``, and chunk results are stored and reduced in
chunk order, so outputs do not depend on the number of workers.  Finished
chunks are written to ``<out>/chunks`` and listed in ``<out>/manifest.json``;
a rerun with the same configuration resumes from there.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import catalog
from .errors import ConfigError
from .gof import VARIANTS, NullDistribution, resolve_null, statistics_batch
from .io import config_fingerprint, ensure_dir, header_lines, load_model
from .limit import LimitSamplerConfig, estimate_quantiles
from .model import DiscretizedModel, discretize, fourth_moment_matrix
from .simulate import LevyDriver, default_burn_in_steps, derive_rng, euler_batch, exact_batch
from .spectral import TrajectoryEngine

log = logging.getLogger(__name__)

QUANTILE_LEVELS = (0.9, 0.95, 0.975, 0.99)


@dataclass(frozen=True)
class DriverSpec:
    kind: str = "brownian"
    alpha: float = 1.0
    beta: float = 0.0
    delta_scale: float = 1.0
    mu: float = 0.0

    def build(self, sigma_L=None) -> LevyDriver:
        if self.kind == "brownian":
            return LevyDriver.brownian(sigma_L)
        if self.kind == "nig":
            return LevyDriver.nig(self.alpha, self.beta, self.delta_scale, self.mu, sigma_L)
        raise ConfigError(f"unknown driver kind {self.kind!r}")


@dataclass(frozen=True)
class StudyConfig:
    """Configuration of a quantile or power study.

    ``model_id`` is a catalog key (``"carma21/T"``) or a path to a TOML model
    file.  ``alternatives`` (power studies) are catalog keys or paths of the
    data-generating models.  ``levels`` are quantile levels for quantile
    studies and test sizes for power studies.
    """

    model_id: str = "carma21/T"
    driver: DriverSpec = DriverSpec()
    n_values: tuple = (1000,)
    replicates: int = 2000
    levels: tuple = QUANTILE_LEVELS
    variants: tuple = ("sn_gr", "sn_cvm")
    limit: LimitSamplerConfig = LimitSamplerConfig()
    master_seed: int = 0
    output_dir: str = "results"
    workers: int = 1
    study_id: str = "study"
    step: float = 0.01
    burn_in: float = 0.0
    exact_gaussian: bool = True
    m4_provider: str = "analytic"
    limit_row: bool = True
    alternatives: tuple = ()
    chunk: int = 100
    t_intervals: int = 4096

    def __post_init__(self):
        if not self.n_values:
            raise ConfigError("n_values must be non-empty")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}")
        resolve_model(self.model_id)
        for a in self.alternatives:
            resolve_model(a)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("output_dir")
        d.pop("workers")
        return d

    @property
    def fingerprint(self) -> str:
        return config_fingerprint(self.to_dict())


def resolve_model(ref: str):
    """``(model, delta)`` for a catalog key or a TOML path."""
    if "/" in ref and not os.path.exists(ref) and not ref.endswith(".toml"):
        return catalog.get(ref).model, 1.0
    if not os.path.exists(ref):
        raise ConfigError(f"model {ref!r} is neither a catalog key nor a file")
    return load_model(ref)


def config_from_dict(d: dict) -> StudyConfig:
    d = dict(d)
    if "driver" in d and isinstance(d["driver"], dict):
        d["driver"] = DriverSpec(**d["driver"])
    elif "driver" in d and isinstance(d["driver"], str):
        d["driver"] = DriverSpec(kind=d["driver"])
    if "limit" in d and isinstance(d["limit"], dict):
        d["limit"] = LimitSamplerConfig(**d["limit"])
    for k in ("n_values", "levels", "variants", "alternatives"):
        if k in d:
            d[k] = tuple(d[k])
    try:
        return StudyConfig(**d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# -- per-chunk work -----------------------------------------------------------------

_CACHE: Dict[tuple, object] = {}


def _disc(ref: str) -> DiscretizedModel:
    key = ("disc", ref)
    if key not in _CACHE:
        model, delta = resolve_model(ref)
        _CACHE[key] = discretize(model, delta)
    return _CACHE[key]


def _engine(ref: str, n: int, T: int) -> TrajectoryEngine:
    key = ("engine", ref, n, T)
    if key not in _CACHE:
        from .fourier import uniform_t_grid
        _CACHE[key] = TrajectoryEngine(_disc(ref), n, uniform_t_grid(T))
    return _CACHE[key]


def simulate_paths(cfg: StudyConfig, data_ref: str, n: int, indices: Sequence[int],
                   stream: str) -> np.ndarray:
    """Paths ``(len(indices), n, m)`` under ``data_ref`` with per-replicate streams."""
    disc = _disc(data_ref)
    rngs = [derive_rng(cfg.master_seed, cfg.study_id, stream, n, int(i)) for i in indices]
    if cfg.driver.kind == "brownian" and cfg.exact_gaussian:
        return exact_batch(disc, n, default_burn_in_steps(disc), rngs)
    driver = cfg.driver.build(disc.model.sigma_L)
    return euler_batch(disc.model, driver, cfg.step, n, disc.delta, cfg.burn_in, rngs)


def _chunk_task(args):
    cfg_dict, data_ref, stream, n, start, stop = args
    cfg = config_from_dict(cfg_dict)
    Ys = simulate_paths(cfg, data_ref, n, range(start, stop), stream)
    eng = _engine(cfg.model_id, n, cfg.t_intervals)
    stats = statistics_batch(eng, Ys, cfg.variants)
    return {v: stats[v] for v in cfg.variants}


class StudyInterrupted(RuntimeError):
    """Raised when a run stops before all chunks are done (see ``max_chunks``)."""


class ChunkStore:
    """Finished chunks on disk plus a manifest for resuming."""

    def __init__(self, out: Path, cfg: StudyConfig):
        self.dir = ensure_dir(out / "chunks")
        self.manifest_path = out / "manifest.json"
        self.fp = cfg.fingerprint
        self.done = set()
        if self.manifest_path.exists():
            m = json.loads(self.manifest_path.read_text())
            if m.get("fingerprint") == self.fp:
                self.done = set(m.get("done", []))
            else:
                log.warning("manifest belongs to a different configuration; starting over")

    def key(self, stream, n, start) -> str:
        safe = "".join(c if c.isalnum() or c in "-." else "-" for c in stream)
        return f"{safe}_n{n}_{start:08d}"

    def has(self, k) -> bool:
        return k in self.done and (self.dir / f"{k}.npz").exists()

    def load(self, k) -> dict:
        with np.load(self.dir / f"{k}.npz") as z:
            return {name: z[name] for name in z.files}

    def save(self, k, stats: dict) -> None:
        np.savez(self.dir / f"{k}.npz", **stats)
        self.done.add(k)
        tmp = self.manifest_path.with_suffix(".tmp")
        tmp.write_text(json.dumps({"fingerprint": self.fp, "done": sorted(self.done)}, indent=1))
        os.replace(tmp, self.manifest_path)


def collect_statistics(cfg: StudyConfig, data_ref: str, stream: str, n: int,
                       store: Optional[ChunkStore] = None,
                       max_chunks: Optional[int] = None) -> Dict[str, np.ndarray]:
    """Statistics of ``cfg.replicates`` paths, reduced in chunk order.

    ``max_chunks`` stops after that many new chunks (used to test resuming).
    """
    bounds = [(s, min(s + cfg.chunk, cfg.replicates)) for s in range(0, cfg.replicates, cfg.chunk)]
    cfg_dict = cfg.to_dict()
    pending = []
    for s, e in bounds:
        k = store.key(stream, n, s) if store else None
        if store is None or not store.has(k):
            pending.append((cfg_dict, data_ref, stream, n, s, e))
    if max_chunks is not None:
        pending = pending[:max_chunks]
    results = {}

    def keep(task, res):
        results[task[4]] = res
        if store:
            store.save(store.key(stream, n, task[4]), res)

    if cfg.workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            for task, res in zip(pending, ex.map(_chunk_task, pending)):
                keep(task, res)
    else:
        for task in pending:
            keep(task, _chunk_task(task))
    missing = [s for s, _ in bounds if s not in results and not (store and store.has(store.key(stream, n, s)))]
    if missing:
        raise StudyInterrupted(f"{len(missing)} chunks outstanding for n={n}")
    out = {v: [] for v in cfg.variants}
    for s, _ in bounds:
        res = results.get(s)
        if res is None:
            res = store.load(store.key(stream, n, s))
        for v in cfg.variants:
            out[v].append(res[v])
    return {v: np.concatenate(out[v]) for v in cfg.variants}


def null_distributions(cfg: StudyConfig, source: str = "auto") -> Dict[str, NullDistribution]:
    """Limit null distributions of the hypothesis model for every variant."""
    disc = _disc(cfg.model_id)
    m4 = None
    if cfg.driver.kind != "brownian":
        m4 = fourth_moment_matrix(disc, cfg.driver.build(disc.model.sigma_L), provider=cfg.m4_provider)
    limit = replace(cfg.limit, t_intervals=cfg.t_intervals)
    driver = cfg.driver.build(disc.model.sigma_L)
    out = {}
    for v in cfg.variants:
        out[v] = resolve_null(v, disc, source, driver=driver, m4=m4, limit_config=limit)
    return out


# -- tables ---------------------------------------------------------------------

@dataclass
class Table:
    kind: str  # quantiles | power
    columns: List[str]
    rows: List[list]
    meta: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(header_lines(self.meta))
            fh.write(",".join(self.columns) + "\n")
            for r in self.rows:
                fh.write(",".join(_fmt(x) for x in r) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Table":
        meta, cols, rows = {}, None, []
        with open(path) as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line.startswith("#"):
                    k, _, v = line[1:].partition(":")
                    meta[k.strip()] = v.strip()
                elif cols is None:
                    cols = line.split(",")
                elif line:
                    rows.append([_parse(x) for x in line.split(",")])
        kind = meta.get("table", "quantiles")
        return cls(kind, cols or [], rows, meta)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(round(float(x), 10))
    return str(x)


def _parse(x: str):
    for conv in (int, float):
        try:
            return conv(x)
        except ValueError:
            pass
    return x


def _meta(cfg: StudyConfig, table: str) -> dict:
    return {"table": table, "study_id": cfg.study_id, "model": cfg.model_id,
            "driver": json.dumps(asdict(cfg.driver), sort_keys=True),
            "replicates": cfg.replicates, "master_seed": cfg.master_seed,
            "limit": json.dumps(cfg.limit.fingerprint(), sort_keys=True),
            "config_fingerprint": cfg.fingerprint}


def run_quantile_study(cfg: StudyConfig, resume: bool = True,
                       max_chunks: Optional[int] = None) -> Table:
    """Empirical null quantiles per ``n`` plus a limit row; written to ``quantiles.csv``."""
    out = ensure_dir(cfg.output_dir)
    store = ChunkStore(out, cfg) if resume else None
    cols = ["variant", "driver", "n"] + [f"q{lvl:g}" for lvl in cfg.levels]
    rows = []
    per_n = {}
    for n in cfg.n_values:
        per_n[n] = collect_statistics(cfg, cfg.model_id, "null", n, store, max_chunks)
    nulls = null_distributions(cfg) if cfg.limit_row else {}
    for v in cfg.variants:
        for n in cfg.n_values:
            q = estimate_quantiles(per_n[n][v], cfg.levels)
            rows.append([v, cfg.driver.kind, n] + [float(x) for x in q])
        if cfg.limit_row:
            null = nulls[v]
            rows.append([v, cfg.driver.kind, "limit"] + [null.quantile(lvl) for lvl in cfg.levels])
    table = Table("quantiles", cols, rows, _meta(cfg, "quantiles"))
    table.to_csv(out / "quantiles.csv")
    return table


def run_power_study(cfg: StudyConfig, alternatives: Optional[Sequence[str]] = None,
                    resume: bool = True, max_chunks: Optional[int] = None) -> Table:
    """Rejection percentages of the hypothesis ``cfg.model_id`` for data from each alternative.

    ``cfg.levels`` are test sizes; the hypothesis itself may appear among the
    alternatives to estimate the size.
    """
    alts = list(alternatives if alternatives is not None else cfg.alternatives) or [cfg.model_id]
    out = ensure_dir(cfg.output_dir)
    store = ChunkStore(out, cfg) if resume else None
    nulls = null_distributions(cfg)
    crit = {(v, lvl): nulls[v].critical_value(lvl) for v in cfg.variants for lvl in cfg.levels}
    cols = ["variant", "level", "n"] + alts
    rows = []
    rates = {}
    for alt in alts:
        for n in cfg.n_values:
            stats = collect_statistics(cfg, alt, f"data:{alt}", n, store, max_chunks)
            for v in cfg.variants:
                for lvl in cfg.levels:
                    rates[(v, lvl, n, alt)] = 100.0 * float(np.mean(stats[v] > crit[(v, lvl)]))
    for v in cfg.variants:
        for lvl in cfg.levels:
            for n in cfg.n_values:
                rows.append([v, lvl, n] + [rates[(v, lvl, n, a)] for a in alts])
    meta = _meta(cfg, "power")
    meta["critical_sources"] = json.dumps({v: nulls[v].label for v in cfg.variants}, sort_keys=True)
    table = Table("power", cols, rows, meta)
    table.to_csv(out / "power.csv")
    return table

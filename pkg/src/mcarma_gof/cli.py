"""Command line interface.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 1 anything else.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .errors import MCARMAError
from .gof import VARIANTS, TestResult, decide, resolve_null, _stat
from .io import ensure_dir, header_lines
from .limit import LimitSampler, LimitSamplerConfig, estimate_quantiles, write_limit_csv
from .model import discretize, fourth_moment_matrix
from .simulate import (SamplePath, default_burn_in_steps, euler_maruyama, exact_gaussian_sample,
                       read_path_csv, write_path_csv)
from .spectral import periodogram
from .study import (DriverSpec, StudyConfig, config_from_dict, resolve_model, run_power_study,
                    run_quantile_study)

log = logging.getLogger("mcarma_gof")

FULL_SCALE = {"replicates": 5000, "limit_replicates": 50_000}


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _floats(text: str):
    return tuple(float(x) for x in text.split(",") if x)


def _ints(text: str):
    return tuple(int(x) for x in text.split(",") if x)


def _words(text: str):
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _driver_spec(args) -> DriverSpec:
    return DriverSpec(args.driver, args.nig_alpha, args.nig_beta, args.nig_delta, args.nig_mu)


def _add_driver(p):
    p.add_argument("--driver", choices=("brownian", "nig"), default="brownian")
    p.add_argument("--nig-alpha", type=float, default=1.0)
    p.add_argument("--nig-beta", type=float, default=0.0)
    p.add_argument("--nig-delta", type=float, default=1.0)
    p.add_argument("--nig-mu", type=float, default=0.0)


def _m4(disc, spec: DriverSpec, provider: str, seed: int):
    if spec.kind == "brownian":
        return None
    return fourth_moment_matrix(disc, spec.build(disc.model.sigma_L), provider=provider, seed=seed)


# -- subcommands ----------------------------------------------------------------

def cmd_validate(args) -> int:
    model, delta = resolve_model(args.model)
    disc = discretize(model, delta)
    info = {
        "N": model.N, "d": model.d, "m": model.m, "delta": delta,
        "drift_eigenvalues": [complex(z).__repr__() for z in np.linalg.eigvals(model.A)],
        "truncation_J": disc.truncation_J,
        "sigma_N": disc.sigma_N.tolist(),
    }
    with _output(args.out) as fh:
        fh.write(json.dumps(info, indent=2) + "\n")
    return 0


def cmd_simulate(args) -> int:
    model, delta = resolve_model(args.model)
    delta = args.delta or delta
    spec = _driver_spec(args)
    if spec.kind == "brownian" and not args.euler:
        disc = discretize(model, delta)
        burn = default_burn_in_steps(disc) if args.burn_in is None else int(round(args.burn_in / delta))
        path = exact_gaussian_sample(disc, args.n, burn, seed=args.seed)
    else:
        path = euler_maruyama(model, spec.build(model.sigma_L), args.step, args.n, delta,
                              args.burn_in or 0.0, seed=args.seed)
    path = replace(path, meta={**path.meta, "library_version": __version__, "model": args.model})
    with _output(args.out) as fh:
        write_path_csv(path, fh)
    return 0


def _read_path(src) -> SamplePath:
    with open(src) as fh:
        return read_path_csv(fh)


def cmd_periodogram(args) -> int:
    path = _read_path(args.path)
    pg = periodogram(path.observations, args.grid)
    with _output(args.out) as fh:
        fh.write(header_lines({"source": args.path, "n": pg.n}))
        pg.to_csv(fh)
    return 0


def _limit_config(args, replicates) -> LimitSamplerConfig:
    return LimitSamplerConfig(truncation_M=args.truncation, t_intervals=args.t_intervals,
                              replicates=replicates, seed=args.seed, mode=args.mode)


def cmd_limit_quantiles(args) -> int:
    model, delta = resolve_model(args.model)
    disc = discretize(model, delta)
    spec = _driver_spec(args)
    cfg = _limit_config(args, args.replicates)
    sampler = LimitSampler(disc, _m4(disc, spec, args.m4_provider, args.seed), args.family, cfg)
    gr, cvm = sampler.statistics()
    levels = list(args.levels)
    meta = {"model": args.model, "driver": spec.kind, "family": args.family, **cfg.fingerprint()}
    with _output(args.out) as fh:
        fh.write(header_lines(meta))
        fh.write("statistic," + ",".join(f"q{p:g}" for p in levels) + "\n")
        for name, s in (("gr", gr), ("cvm", cvm)):
            q = estimate_quantiles(s, levels)
            fh.write(name + "," + ",".join(repr(float(x)) for x in q) + "\n")
    if args.samples:
        with open(args.samples, "w") as fh:
            write_limit_csv(fh, gr, cvm, {"library_version": __version__, **meta})
    return 0


def cmd_gof_test(args) -> int:
    model, delta = resolve_model(args.model)
    disc = discretize(model, delta)
    spec = _driver_spec(args)
    Y = _read_path(args.path).observations
    m4 = _m4(disc, spec, args.m4_provider, args.seed)
    cfg = _limit_config(args, args.limit_replicates)
    with _output(args.out) as fh:
        fh.write(TestResult.csv_header())
        for variant in args.variants:
            null = resolve_null(variant, disc, args.critical_source, driver=spec.kind, m4=m4,
                                limit_config=cfg)
            res = decide(_stat(Y, disc, None, variant), variant, args.level, null, Y.shape[0])
            fh.write(res.csv_row())
    return 0


def _study_config(args) -> StudyConfig:
    base = {}
    if args.config:
        from .io import tomllib
        with open(args.config, "rb") as fh:
            base = tomllib.load(fh).get("study", {})
    over = {"model_id": args.model, "n_values": args.n, "replicates": args.replicates,
            "levels": args.levels, "variants": args.variants, "alternatives": args.alternatives,
            "study_id": args.study_id}
    base.update({k: v for k, v in over.items() if v is not None})
    if args.driver is not None:
        base["driver"] = {"kind": args.driver, "alpha": args.nig_alpha, "beta": args.nig_beta,
                          "delta_scale": args.nig_delta, "mu": args.nig_mu}
    limit = dict(base.get("limit", {}))
    if args.full_scale:
        base["replicates"] = FULL_SCALE["replicates"]
        limit["replicates"] = FULL_SCALE["limit_replicates"]
    if args.limit_replicates is not None:
        limit["replicates"] = args.limit_replicates
    limit.setdefault("seed", args.seed)
    base["limit"] = limit
    if args.kind == "power" and "levels" not in base:
        base["levels"] = (0.05,)
    base.update(master_seed=args.seed, workers=args.workers, output_dir=args.out or "results")
    return config_from_dict(base)


def cmd_study(args) -> int:
    cfg = _study_config(args)
    if args.kind == "quantiles":
        table = run_quantile_study(cfg, resume=not args.fresh)
        name = "quantiles.csv"
    else:
        table = run_power_study(cfg, resume=not args.fresh)
        name = "power.csv"
    print(f"wrote {cfg.output_dir}/{name} ({len(table.rows)} rows)")
    if args.plots:
        from .plots import emit_plots
        for p in emit_plots(table, ensure_dir(cfg.output_dir) / "plots"):
            print(f"wrote {p}")
    return 0


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out", default=None, help="output file (directory for study)")

    p = argparse.ArgumentParser(prog="mcarma-gof", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check a model file")
    s.add_argument("model", help="TOML file or catalog key")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("simulate", parents=[common], help="simulate a sample path")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--step", type=float, default=0.01)
    s.add_argument("--burn-in", type=float, default=None, help="burn-in time")
    s.add_argument("--euler", action="store_true", help="Euler scheme even for Brownian")
    _add_driver(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("periodogram", parents=[common], help="periodogram of a path CSV")
    s.add_argument("path")
    s.add_argument("--grid", type=int, default=None)
    s.set_defaults(func=cmd_periodogram)

    def limit_opts(q, replicates_flag, dest):
        q.add_argument("--truncation", type=int, default=250)
        q.add_argument("--t-intervals", type=int, default=4096)
        q.add_argument("--mode", choices=("series", "direct"), default="series")
        q.add_argument("--m4-provider", choices=("analytic", "monte_carlo"), default="analytic")
        q.add_argument(replicates_flag, type=int, default=20_000, dest=dest)

    s = sub.add_parser("limit-quantiles", parents=[common], help="Monte Carlo limit quantiles")
    s.add_argument("--model", required=True)
    s.add_argument("--family", choices=("plain", "self_normalized"), default="self_normalized")
    s.add_argument("--levels", type=_floats, default=(0.9, 0.95, 0.975, 0.99))
    s.add_argument("--samples", default=None, help="also write all draws here")
    limit_opts(s, "--replicates", "replicates")
    _add_driver(s)
    s.set_defaults(func=cmd_limit_quantiles)

    s = sub.add_parser("gof-test", parents=[common], help="test a model against a path CSV")
    s.add_argument("--model", required=True)
    s.add_argument("--path", required=True)
    s.add_argument("--variants", type=_words, default=("sn_gr",))
    s.add_argument("--level", type=float, default=0.05)
    s.add_argument("--critical-source", default="auto",
                   choices=("auto", "analytic_brownian", "mc_limit"))
    limit_opts(s, "--limit-replicates", "limit_replicates")
    _add_driver(s)
    s.set_defaults(func=cmd_gof_test)

    s = sub.add_parser("study", parents=[common], help="quantile or power study")
    s.add_argument("kind", choices=("quantiles", "power"))
    s.add_argument("--config", default=None, help="TOML with a [study] table")
    s.add_argument("--model", default=None)
    s.add_argument("--n", type=_ints, default=None)
    s.add_argument("--replicates", type=int, default=None)
    s.add_argument("--limit-replicates", type=int, default=None)
    s.add_argument("--levels", type=_floats, default=None)
    s.add_argument("--variants", type=_words, default=None)
    s.add_argument("--alternatives", type=_words, default=None)
    s.add_argument("--study-id", default=None)
    s.add_argument("--full-scale", action="store_true", help="5000 finite-n, 50000 limit draws")
    s.add_argument("--fresh", action="store_true", help="ignore finished chunks")
    s.add_argument("--plots", action="store_true")
    s.add_argument("--driver", choices=("brownian", "nig"), default=None)
    s.add_argument("--nig-alpha", type=float, default=1.0)
    s.add_argument("--nig-beta", type=float, default=0.0)
    s.add_argument("--nig-delta", type=float, default=1.0)
    s.add_argument("--nig-mu", type=float, default=0.0)
    s.set_defaults(func=cmd_study)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MCARMAError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, TypeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

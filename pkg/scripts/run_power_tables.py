"""Empirical size and power against each catalogued alternative.

Example::

    python scripts/run_power_tables.py --family carma21 --n 1000 --replicates 1000
"""

import argparse
import logging
from pathlib import Path

from mcarma_gof import catalog
from mcarma_gof.limit import LimitSamplerConfig
from mcarma_gof.plots import emit_plots
from mcarma_gof.study import DriverSpec, StudyConfig, run_power_study


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", choices=sorted(catalog.FAMILIES), default="carma21")
    ap.add_argument("--out", default="results/power")
    ap.add_argument("--n", type=int, nargs="+", default=[1000])
    ap.add_argument("--replicates", type=int, default=1000)
    ap.add_argument("--limit-replicates", type=int, default=20000)
    ap.add_argument("--driver", default="brownian")
    ap.add_argument("--levels", type=float, nargs="+", default=[0.05])
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--plots", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    null = f"{args.family}/T"
    alts = [null] + [f"{args.family}/{a}" for a in catalog.alternatives(args.family)]
    out = Path(args.out) / args.family / args.driver
    cfg = StudyConfig(model_id=null, driver=DriverSpec(args.driver), n_values=tuple(args.n),
                      replicates=args.replicates, levels=tuple(args.levels),
                      variants=("gr", "cvm", "sn_gr", "sn_cvm"), alternatives=tuple(alts),
                      limit=LimitSamplerConfig(replicates=args.limit_replicates, seed=args.seed),
                      master_seed=args.seed, output_dir=str(out), workers=args.workers,
                      study_id="power")
    table = run_power_study(cfg)
    logging.info("rejection %% (columns: %s)", ", ".join(table.columns[3:]))
    for row in table.rows:
        logging.info("  %-7s %-5g %-5s " + " ".join("%6.1f" for _ in row[3:]), *row)
    if args.plots:
        emit_plots(table, out)


if __name__ == "__main__":
    main()

"""SVG figures of study tables: quantile convergence in ``n`` and power curves."""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import IoError  # noqa: E402
from .io import ensure_dir  # noqa: E402
from .study import Table  # noqa: E402

log = logging.getLogger(__name__)


def _slug(*parts) -> str:
    return "_".join(re.sub(r"[^A-Za-z0-9.]+", "-", str(p)) for p in parts)


def _save(fig, path: Path) -> Path:
    try:
        fig.savefig(path, format="svg")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path


def quantile_plots(table: Table, out_dir) -> List[Path]:
    """One figure per (variant, driver): quantile against n, limit values dashed."""
    out = ensure_dir(out_dir)
    level_cols = [c for c in table.columns if c.startswith("q")]
    groups = {}
    for row in table.rows:
        rec = dict(zip(table.columns, row))
        groups.setdefault((rec["variant"], rec["driver"]), []).append(rec)
    paths = []
    for (variant, driver), recs in groups.items():
        finite = sorted((r for r in recs if r["n"] != "limit"), key=lambda r: r["n"])
        limit = [r for r in recs if r["n"] == "limit"]
        fig, ax = plt.subplots(figsize=(6, 4))
        for i, col in enumerate(level_cols):
            colour = f"C{i}"
            if finite:
                ax.plot([r["n"] for r in finite], [r[col] for r in finite], "o-",
                        color=colour, label=col)
            if limit:
                ax.axhline(limit[0][col], color=colour, ls="--", lw=0.8)
        ax.set_xscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel("quantile")
        ax.set_title(f"{variant}, {driver} (dashed: limit)")
        ax.legend(fontsize=8)
        fig.tight_layout()
        paths.append(_save(fig, out / f"quantiles_{_slug(variant, driver)}.svg"))
    return paths


def power_plots(table: Table, out_dir) -> List[Path]:
    """One figure per variant with a rejection curve per alternative (and level)."""
    out = ensure_dir(out_dir)
    alts = table.columns[3:]
    by_variant = {}
    for row in table.rows:
        by_variant.setdefault(row[0], []).append(row)
    paths = []
    for variant, rows in by_variant.items():
        levels = sorted({r[1] for r in rows})
        fig, ax = plt.subplots(figsize=(6, 4))
        for j, alt in enumerate(alts):
            for k, lvl in enumerate(levels):
                pts = sorted((r[2], r[3 + j]) for r in rows if r[1] == lvl)
                label = alt if len(levels) == 1 else f"{alt} @ {lvl:g}"
                ax.plot(*zip(*pts), marker="o", color=f"C{j}", ls=["-", "--", ":", "-."][k % 4],
                        label=label)
        ax.set_xscale("log")
        ax.set_ylim(-2, 102)
        ax.set_xlabel("n")
        ax.set_ylabel("rejections (%)")
        ax.set_title(variant)
        ax.legend(fontsize=7)
        fig.tight_layout()
        paths.append(_save(fig, out / f"power_{_slug(variant)}.svg"))
    return paths


def emit_plots(table, out_dir) -> List[Path]:
    """Write the figures for a table (or a table CSV path); empty tables write nothing."""
    if not isinstance(table, Table):
        try:
            table = Table.from_csv(table)
        except OSError as exc:
            raise IoError(f"cannot read {table}: {exc}") from exc
    if not table.rows:
        log.warning("table is empty; no plots written")
        return []
    if table.kind == "power":
        return power_plots(table, out_dir)
    return quantile_plots(table, out_dir)

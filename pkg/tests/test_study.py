import logging
from dataclasses import replace

import numpy as np
import pytest

from mcarma_gof.errors import ConfigError
from mcarma_gof.limit import LimitSamplerConfig
from mcarma_gof.plots import emit_plots
from mcarma_gof.study import (StudyConfig, StudyInterrupted, Table, collect_statistics,
                              run_power_study, run_quantile_study)

LIMIT = LimitSamplerConfig(truncation_M=30, t_intervals=256, replicates=1000, seed=0, chunk=250)


def small(tmp_path, **kw):
    base = dict(n_values=(64, 128), replicates=90, chunk=25, t_intervals=256, limit=LIMIT,
                output_dir=str(tmp_path), study_id="t")
    base.update(kw)
    return StudyConfig(**base)


def test_config_invariants():
    with pytest.raises(ConfigError):
        StudyConfig(n_values=())
    with pytest.raises(ConfigError):
        StudyConfig(replicates=0)
    with pytest.raises(ConfigError):
        StudyConfig(model_id="carma21/Z9")
    with pytest.raises(ConfigError):
        StudyConfig(variants=("ks",))


def test_outputs_identical_across_worker_counts(tmp_path):
    a = run_quantile_study(small(tmp_path / "a", workers=1), resume=False)
    b = run_quantile_study(small(tmp_path / "b", workers=3), resume=False)
    assert a.rows == b.rows
    assert (tmp_path / "a" / "quantiles.csv").read_bytes() == (tmp_path / "b" / "quantiles.csv").read_bytes()


def test_resume_matches_uninterrupted(tmp_path):
    cfg = small(tmp_path / "r")
    with pytest.raises(StudyInterrupted):
        run_quantile_study(cfg, max_chunks=2)
    resumed = run_quantile_study(cfg)
    straight = run_quantile_study(small(tmp_path / "s"), resume=False)
    assert (tmp_path / "r" / "quantiles.csv").read_bytes() == (tmp_path / "s" / "quantiles.csv").read_bytes()
    assert resumed.rows == straight.rows


def test_replicates_are_prefix_stable(tmp_path):
    # replicate i depends only on (seed, study, n, i)
    a = collect_statistics(small(tmp_path, replicates=50), "carma21/T", "null", 64)
    b = collect_statistics(small(tmp_path, replicates=75), "carma21/T", "null", 64)
    assert np.allclose(a["sn_gr"], b["sn_gr"][:50], rtol=1e-12)


def test_single_replicate_gives_flat_quantiles(tmp_path):
    t = run_quantile_study(small(tmp_path, replicates=1, limit_row=False), resume=False)
    for row in t.rows:
        assert len(set(row[3:])) == 1


def test_output_header_has_fingerprint_and_version(tmp_path):
    cfg = small(tmp_path)
    run_quantile_study(cfg, resume=False)
    text = (tmp_path / "quantiles.csv").read_text()
    assert "# library_version: 0.1.0" in text
    assert f"# config_fingerprint: {cfg.fingerprint}" in text
    t = Table.from_csv(tmp_path / "quantiles.csv")
    assert t.kind == "quantiles" and t.rows[2][2] == "limit"


def test_power_level_one_rejects_everything(tmp_path):
    cfg = small(tmp_path, n_values=(64,), levels=(1.0,), alternatives=("carma21/T", "carma21/C2"))
    t = run_power_study(cfg, resume=False)
    for row in t.rows:
        assert row[3:] == [100.0, 100.0]


def test_plots_file_counts(tmp_path):
    q = run_quantile_study(small(tmp_path / "q"), resume=False)
    files = emit_plots(q, tmp_path / "plots_q")
    assert len(files) == 2 and all(p.suffix == ".svg" for p in files)
    assert files[0].read_text().lstrip().startswith("<?xml")
    p = run_power_study(small(tmp_path / "p", n_values=(64,), levels=(0.05,),
                              alternatives=("carma21/T", "carma21/C3")), resume=False)
    files = emit_plots(tmp_path / "p" / "power.csv", tmp_path / "plots_p")
    assert sorted(f.name for f in files) == ["power_sn-cvm.svg", "power_sn-gr.svg"]


def test_empty_table_writes_nothing(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        out = emit_plots(Table("quantiles", ["variant", "driver", "n"], []), tmp_path / "e")
    assert out == [] and "empty" in caplog.text
    assert not any((tmp_path / "e").glob("*")) if (tmp_path / "e").exists() else True


def test_nig_study_uses_euler(tmp_path):
    from mcarma_gof.study import DriverSpec
    cfg = small(tmp_path, driver=DriverSpec("nig"), n_values=(32,), replicates=10, limit_row=False)
    t = run_quantile_study(cfg, resume=False)
    assert t.rows[0][1] == "nig"

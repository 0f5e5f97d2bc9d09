import numpy as np
import pandas as pd
import pytest

from zakotfs.sim import cli
from zakotfs.sim import sweep as sweep_mod
from zakotfs.sim.config import ConfigError, SimConfig, parse_config
from zakotfs.sim.report import aggregate, load_results, summarize
from zakotfs.sim.sweep import COLUMNS, CSV_SCHEMA, cells, run_sweep

SMALL = dict(M=11, N=13, frames=5, realizations=2, pilot_period=3, plots=False)


# --- configuration -------------------------------------------------------------

def test_minimal_config_defaults():
    cfg = parse_config("M = 31\nN = 37\nsnr_db = 0, 10, 20\n")
    assert (cfg.M, cfg.N, cfg.nu_p) == (31, 37, 30e3)
    assert (cfg.beta_tau, cfg.beta_nu) == (0.6, 0.6)
    assert cfg.qam == 4 and cfg.pilot_period == 30
    assert cfg.snr_db == (0.0, 10.0, 20.0)
    assert cfg.schemes == ("do", "sp", "separate", "perfect")


def test_config_accepts_section_and_comments():
    cfg = parse_config("[sim]\n# comment\nsnr_db = 5  # inline\nschemes = DO, sp\nplots = no\n")
    assert cfg.schemes == ("do", "sp") and cfg.plots is False


@pytest.mark.parametrize("text,match", [
    ("snr_db = 5\nalpha = 1.3\n", "alpha"),
    ("snr_db = 5\nM = 4\nM = 5\n", "line 3: duplicate"),
    ("snr_db = 5\n\nbogus = 1\n", "line 3: unknown key 'bogus'"),
    ("snr_db = 5\nframes = many\n", "line 2: bad value"),
    ("M = 11\n", "snr_db"),
    ("snr_db = 5\nschemes = do, turbo\n", "turbo"),
    ("snr_db = 5\nqam = 8\n", "QAM"),
    ("snr_db = 5\nnu_max = 20000\n", "nu_max"),
    ("snr_db = 5\nprofile = /nonexistent/pdp.txt\n", "line 2"),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_profile_override(tmp_path):
    pdp = tmp_path / "pdp.txt"
    pdp.write_text("0 0\n0.5 -6\n")
    cfg = parse_config(f"snr_db = 5\nprofile = {pdp}\n")
    assert cfg.channel.profile == ((0.0, 0.0), (0.5, -6.0))
    assert cfg.channel.max_delay == pytest.approx(0.5e-6)


def test_cells_enumeration():
    cfg = SimConfig(snr_db=(0.0, 10.0), realizations=3)
    cs = cells(cfg)
    # do, separate, perfect once each; sp once per alpha
    assert len(cs) == (3 + 3) * 2 * 3
    assert cs[0].scheme == "do" and cs[-1].scheme == "perfect"


# --- sweep ------------------------------------------------------------------------

def test_sweep_csv_is_deterministic(tmp_path):
    cfg = SimConfig(snr_db=(5.0,), seed=11, **SMALL)
    a = run_sweep(cfg, tmp_path / "a").read_bytes()
    b = run_sweep(cfg, tmp_path / "b").read_bytes()
    assert a == b
    lines = a.decode().splitlines()
    assert lines[0] == f"# {CSV_SCHEMA}"
    assert lines[1] == ",".join(COLUMNS)
    other = run_sweep(cfg.with_overrides(seed=12), tmp_path / "c").read_bytes()
    assert other != a


def test_sweep_contents(tmp_path):
    cfg = SimConfig(snr_db=(10.0,), **SMALL)
    df = load_results(run_sweep(cfg, tmp_path))
    assert len(df) == len(cells(cfg)) * cfg.frames
    assert (df.loc[df.scheme == "perfect", "nmse"] == 0).all()
    pilots = df[df.kind == "pilot"]
    assert pilots.ber.isna().all() and not pilots.empty
    assert df.loc[df.kind == "data", "ber"].between(0, 1).all()
    # common random numbers: one seed per (snr, realization) for every scheme
    assert df.groupby("realization").seed.nunique().eq(1).all()


def test_failed_cell_is_recorded_and_skipped(tmp_path, monkeypatch, caplog):
    real = sweep_mod.run_cell

    def flaky(config, cell):
        if cell.scheme == "separate":
            raise RuntimeError("boom")
        return real(config, cell)

    monkeypatch.setattr(sweep_mod, "run_cell", flaky)
    cfg = SimConfig(snr_db=(5.0,), schemes=("do", "separate"), **SMALL)
    df = load_results(run_sweep(cfg, tmp_path))
    assert set(df.scheme) == {"do"}
    assert "boom" in caplog.text


# --- summaries -----------------------------------------------------------------------

def test_summarize_empty_csv(tmp_path):
    p = tmp_path / "results.csv"
    p.write_text(f"# {CSV_SCHEMA}\n" + ",".join(COLUMNS) + "\n")
    table = summarize(p)
    assert table.empty
    assert not list(tmp_path.glob("*.svg"))
    p.write_text("")
    assert summarize(p).empty


def test_summarize_single_row(tmp_path):
    p = tmp_path / "results.csv"
    p.write_text(f"# {CSV_SCHEMA}\n" + ",".join(COLUMNS)
                 + "\ndo,,31,37,4,15,0,123,1,data,0.25,0.0625\n")
    row = summarize(p, plots=False).iloc[0]
    assert row.scheme == "do" and row.snr_db == 15
    assert row.nmse == 0.25 and row.ber == 0.0625 and row.frames == 1
    assert (tmp_path / "summary.csv").exists() and (tmp_path / "nmse_trace.csv").exists()


def test_malformed_csv_is_rejected(tmp_path):
    p = tmp_path / "results.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="malformed"):
        load_results(p)


def test_trace_dips_at_pilot_frames(tmp_path):
    cfg = SimConfig(snr_db=(0.0,), schemes=("do",), M=11, N=13, frames=13,
                    realizations=4, pilot_period=4, plots=True)
    summarize(run_sweep(cfg, tmp_path))
    tr = pd.read_csv(tmp_path / "nmse_trace.csv")
    nm = tr.set_index("frame").nmse
    for f in (4, 8, 12):
        assert tr.loc[tr.frame == f, "kind"].item() == "pilot"
        assert nm[f] < nm[f - 1]
    for name in ("nmse_vs_snr.svg", "ber_vs_snr.svg", "nmse_trace.svg"):
        assert (tmp_path / name).read_text().startswith("<?xml")


def test_plots_are_a_pure_function_of_the_csv(tmp_path):
    cfg = SimConfig(snr_db=(5.0, 10.0), schemes=("do", "perfect"), **SMALL)
    path = run_sweep(cfg, tmp_path)
    summarize(path, tmp_path / "one")
    summarize(path, tmp_path / "two")
    for name in ("nmse_vs_snr.svg", "ber_vs_snr.svg", "nmse_trace.svg"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_aggregate_means():
    df = pd.DataFrame({
        "scheme": ["do"] * 3, "alpha": [np.nan] * 3, "M": 11, "N": 13, "qam": 4,
        "snr_db": 5.0, "realization": [0, 0, 1], "seed": 1, "frame": [0, 1, 1],
        "kind": ["pilot", "data", "data"], "nmse": [0.1, 0.2, 0.3], "ber": [np.nan, 0.1, 0.3],
    })
    row = aggregate(df).iloc[0]
    assert row.nmse == pytest.approx(0.2) and row.ber == pytest.approx(0.2)
    assert (row.frames, row.data_frames) == (3, 2)


# --- command line ----------------------------------------------------------------------

def test_cli_end_to_end(tmp_path, capsys):
    out = tmp_path / "run"
    code = cli.main(["--M", "11", "--N", "13", "--snr", "5,15", "--frames", "4",
                     "--realizations", "1", "--pilot-period", "2", "--scheme", "do,sp",
                     "--alpha", "0.5", "--out", str(out)])
    assert code == 0
    for name in ("results.csv", "summary.csv", "nmse_trace.csv", "nmse_vs_snr.svg"):
        assert (out / name).exists()
    assert "cells" in capsys.readouterr().out


def test_cli_config_file_and_overrides(tmp_path):
    conf = tmp_path / "sweep.conf"
    conf.write_text("M = 11\nN = 13\nsnr_db = 10\nschemes = perfect\nframes = 2\n"
                    "realizations = 1\n")
    out = tmp_path / "run"
    assert cli.main(["--config", str(conf), "--out", str(out), "--frames", "3", "--no-plots"]) == 0
    df = load_results(out / "results.csv")
    assert len(df) == 3 and not list(out.glob("*.svg"))


@pytest.mark.parametrize("argv", [
    ["--snr", "5", "--alpha", "1.3"],
    ["--M", "11"],
    ["--snr", "5", "--jobs", "0"],
    ["--config", "/nonexistent/file.conf"],
])
def test_cli_errors_exit_nonzero(argv, tmp_path, capsys):
    assert cli.main(argv + ["--out", str(tmp_path)]) != 0
    assert "error" in capsys.readouterr().err


def test_summarize_cli(tmp_path):
    cfg = SimConfig(snr_db=(5.0,), schemes=("perfect",), **SMALL)
    path = run_sweep(cfg, tmp_path)
    assert cli.summarize_main([str(path), "--no-plots", "--out", str(tmp_path / "s")]) == 0
    assert cli.summarize_main([str(tmp_path / "missing.csv")]) == 1

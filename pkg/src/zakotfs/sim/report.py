"""Aggregate ``results.csv`` into tables and optional SVG line plots."""

from __future__ import annotations

from pathlib import Path

import pandas as pd

from .sweep import COLUMNS

GROUP = ["scheme", "alpha", "M", "N", "qam", "snr_db"]


def load_results(path) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, comment="#")
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=list(COLUMNS))
    missing = [c for c in COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"{path}: malformed results file, missing columns {missing}")
    return df


def aggregate(df: pd.DataFrame) -> pd.DataFrame:
    """Mean NMSE (all frames) and mean BER (data frames) per scheme and SNR."""
    cols = GROUP + ["nmse", "ber", "frames", "data_frames"]
    if df.empty:
        return pd.DataFrame(columns=cols)
    g = df.groupby(GROUP, dropna=False, sort=True)
    out = pd.DataFrame({
        "nmse": g["nmse"].mean(),
        "ber": g["ber"].mean(),
        "frames": g["frame"].size(),
        "data_frames": g["ber"].count(),
    }).reset_index()
    return out[cols]


def nmse_traces(df: pd.DataFrame) -> pd.DataFrame:
    """Per-frame NMSE averaged over realizations (instantaneous NMSE vs frame)."""
    if df.empty:
        return pd.DataFrame(columns=GROUP + ["frame", "kind", "nmse"])
    g = df.groupby(GROUP + ["frame"], dropna=False, sort=True)
    out = g.agg(nmse=("nmse", "mean"), kind=("kind", "first")).reset_index()
    return out[GROUP + ["frame", "kind", "nmse"]]


def summarize(csv_path, out_dir=None, plots: bool = True) -> pd.DataFrame:
    """Write ``summary.csv`` and ``nmse_trace.csv`` (and SVGs) next to the results."""
    df = load_results(csv_path)
    table = aggregate(df)
    out_dir = Path(out_dir) if out_dir else Path(csv_path).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_dir / "summary.csv", index=False, float_format="%.10g")
    traces = nmse_traces(df)
    traces.to_csv(out_dir / "nmse_trace.csv", index=False, float_format="%.10g")
    if plots and not table.empty:
        plot_vs_snr(table, "nmse", out_dir / "nmse_vs_snr.svg")
        if table["ber"].notna().any():
            plot_vs_snr(table, "ber", out_dir / "ber_vs_snr.svg")
        plot_traces(traces, out_dir / "nmse_trace.svg")
    return table


def _series(table: pd.DataFrame):
    for (scheme, alpha, M, N, q), part in table.groupby(
            ["scheme", "alpha", "M", "N", "qam"], dropna=False, sort=True):
        yield scheme, alpha, part


def plot_vs_snr(table: pd.DataFrame, metric: str, path) -> None:
    from .plotting import MARKERS, label, new_axes, save_figure

    fig, ax = new_axes()
    for scheme, alpha, part in _series(table):
        part = part.dropna(subset=[metric])
        if metric == "nmse" and scheme == "perfect":
            continue
        y = part[metric].clip(lower=1e-7)
        ax.semilogy(part["snr_db"], y, marker=MARKERS.get(scheme, "x"),
                    label=label(scheme, alpha))
    ax.set_xlabel("data SNR (dB)")
    ax.set_ylabel(metric.upper())
    ax.legend()
    save_figure(fig, path)


def plot_traces(traces: pd.DataFrame, path) -> None:
    from .plotting import label, new_axes, save_figure

    fig, ax = new_axes()
    for (scheme, alpha, snr), part in traces.groupby(
            ["scheme", "alpha", "snr_db"], dropna=False, sort=True):
        if scheme == "perfect":
            continue
        ax.semilogy(part["frame"], part["nmse"].clip(lower=1e-7),
                    label=f"{label(scheme, alpha)}, {snr:g} dB")
    ax.set_xlabel("frame")
    ax.set_ylabel("instantaneous NMSE")
    ax.legend()
    save_figure(fig, path)

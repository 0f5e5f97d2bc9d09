"""Monte-Carlo sweep over schemes, SNRs and channel realizations.

Seeding
-------
All randomness derives from the master seed through
:class:`numpy.random.SeedSequence` spawn keys:

* channel realization ``r``: ``SeedSequence(seed, spawn_key=(0, r))``.  The
  same physical channel is therefore shared by every scheme and SNR, which
  pairs the comparisons.
* cell ``(scheme, alpha, snr, r)``: ``SeedSequence(seed, spawn_key=(1,
  snr_index, r))`` drives data bits and noise, and frame ``f`` draws from
  spawn key ``(1, snr_index, r, f)``.  Every scheme and alpha at the same SNR
  and realization sees the same data bits and noise in frames with the same
  index (common random numbers), so scheme differences are paired.

The ``seed`` column of the CSV holds ``generate_state(1)[0]`` of the cell
sequence.  Results never depend on the number of workers.
"""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..channel import ChannelRealization
from ..frames import SpreadPilot, energy_split, qam
from ..receiver import (
    SessionConfig,
    run_differential_session,
    run_perfect_csi_session,
    run_separate_session,
    run_sp_session,
)
from .config import SimConfig

log = logging.getLogger(__name__)

CSV_SCHEMA = "zakotfs-results/1"
COLUMNS = ("scheme", "alpha", "M", "N", "qam", "snr_db", "realization", "seed",
           "frame", "kind", "nmse", "ber")


@dataclass(frozen=True)
class Cell:
    scheme: str
    alpha_index: int
    alpha: float | None
    snr_index: int
    snr_db: float
    realization: int


def cells(config: SimConfig) -> list[Cell]:
    out = []
    for scheme in config.schemes:
        alphas = list(enumerate(config.alpha)) if scheme == "sp" else [(0, None)]
        for ai, alpha in alphas:
            for si, snr in enumerate(config.snr_db):
                for r in range(config.realizations):
                    out.append(Cell(scheme, ai, alpha, si, snr, r))
    return out


def channel_seed(master: int, realization: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(0, realization))


def cell_seed(master: int, cell: Cell) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        master,
        spawn_key=(1, cell.snr_index, cell.realization),
    )


def run_cell(config: SimConfig, cell: Cell):
    """Run one session; returns a list of CSV rows (tuples)."""
    grid = config.grid
    realization = ChannelRealization.draw(
        grid, config.channel, config.filter,
        np.random.default_rng(channel_seed(config.seed, cell.realization)),
    )
    seq = cell_seed(config.seed, cell)
    seed = int(seq.generate_state(1)[0])
    const = qam(config.qam)
    session = SessionConfig(frames=config.frames, pilot_period=config.pilot_period)
    if cell.scheme == "do":
        records = run_differential_session(
            realization, session, energy_split(cell.snr_db), const, seq)
    elif cell.scheme == "sp":
        scheme = SpreadPilot(cell.alpha)
        records = run_sp_session(realization, session, energy_split(cell.snr_db, scheme),
                                 const, seq, scheme)
    elif cell.scheme == "separate":
        records = run_separate_session(
            realization, session, energy_split(cell.snr_db), const, seq)
    else:
        records = run_perfect_csi_session(
            realization, session, energy_split(cell.snr_db), const, seq)
    return [
        (cell.scheme, _fmt(cell.alpha), grid.M, grid.N, config.qam, _fmt(cell.snr_db),
         cell.realization, seed, rec.frame, rec.kind, _fmt(rec.nmse), _fmt(rec.ber))
        for rec in records
    ]


def _fmt(value) -> str:
    if value is None:
        return ""
    return format(float(value), ".12g")


def _run_cell_safe(args):
    config, cell = args
    try:
        return run_cell(config, cell), None
    except Exception as exc:  # recorded and skipped; the sweep carries on
        return [], f"{cell}: {type(exc).__name__}: {exc}"


def run_sweep(config: SimConfig, out_dir=None, jobs: int = 1) -> Path:
    """Run every cell and write ``results.csv``; returns its path."""
    out_dir = Path(out_dir or config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    todo = [(config, c) for c in cells(config)]
    start = time.perf_counter()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell_safe, todo))
    else:
        results = [_run_cell_safe(t) for t in todo]
    path = out_dir / "results.csv"
    errors = []
    with open(path, "w", newline="") as fh:
        fh.write(f"# {CSV_SCHEMA}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for rows, err in results:
            writer.writerows(rows)
            if err:
                errors.append(err)
    for err in errors:
        log.error("cell failed: %s", err)
    elapsed = time.perf_counter() - start
    print(f"{len(todo)} cells ({len(errors)} failed) in {elapsed:.1f} s -> {path}")
    return path

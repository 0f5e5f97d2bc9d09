"""Channel estimation, detection and the frame-by-frame session loops."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .channel import ChannelRealization, EffectiveChannel, awgn, build_channel_matrix
from .ddcore import DDGrid, apply_operator, compose, cross_ambiguity, zak
from .frames import (
    Constellation,
    EnergyBudget,
    SeparatePilot,
    SpreadPilot,
    ambiguity_purity_check,
    build_chirp_pilot,
    build_do_frame,
    build_pp_frame,
    find_chirp_root,
    qam_hard_demod,
    qam_modulate,
    random_bits,
    scaled_pilot,
    sp_data_component,
)


# Above this many DD bins the dense LMMSE solve is skipped.
DENSE_DETECTION_LIMIT = 4000


@dataclass
class ChannelEstimate:
    channel: EffectiveChannel
    source: str  # "pilot", "data" or "oracle"
    frame: int = -1


@dataclass(frozen=True)
class SessionConfig:
    frames: int = 60
    pilot_period: int = 30
    regularization_floor: float = 1e-12
    estimation_only: bool | None = None

    def __post_init__(self):
        if self.pilot_period < 1:
            raise ValueError("pilot_period must be at least 1")
        if self.frames < 1:
            raise ValueError("frames must be at least 1")

    def skip_detection(self, grid: DDGrid) -> bool:
        if self.estimation_only is None:
            return grid.MN > DENSE_DETECTION_LIMIT
        return self.estimation_only


@dataclass
class MetricsRecord:
    frame: int
    kind: str  # "pilot" or "data"
    nmse: float
    ber: float | None
    snr_db: float
    scheme: str
    alpha: float | None = None
    seed: int | None = None


def nmse(h_hat, h) -> float:
    """Normalized squared error of a channel estimate."""
    h_hat = getattr(h_hat, "values", h_hat)
    h = getattr(h, "values", h)
    h_hat = np.asarray(h_hat)
    h = np.asarray(h)
    if h_hat.shape != h.shape:
        raise ValueError(f"shape mismatch: {h_hat.shape} vs {h.shape}")
    ref = np.sum(np.abs(h) ** 2)
    if ref == 0:
        raise ValueError("NMSE undefined for an all-zero true channel")
    return float(np.sum(np.abs(h_hat - h) ** 2) / ref)


def ber(tx_bits, rx_bits) -> float:
    tx_bits = np.asarray(tx_bits).ravel()
    rx_bits = np.asarray(rx_bits).ravel()
    if tx_bits.shape != rx_bits.shape:
        raise ValueError(f"bit count mismatch: {tx_bits.size} vs {rx_bits.size}")
    if tx_bits.size == 0:
        return 0.0
    return float(np.count_nonzero(tx_bits != rx_bits) / tx_bits.size)


def estimate_h_eff(y, x_ref, grid: DDGrid, k_max: int, l_max: int, e: float,
                   source: str = "pilot", frame: int = -1) -> ChannelEstimate:
    """Cross-ambiguity estimate of the effective channel, divided by the reference energy ``e``."""
    if not e > 0:
        raise ValueError("reference energy must be positive")
    delays = np.arange(k_max + 1)
    dopplers = np.arange(-l_max, l_max + 1)
    A = cross_ambiguity(y, x_ref, delays, dopplers)
    return ChannelEstimate(
        EffectiveChannel(grid, A.values / e, k_max, l_max), source, frame
    )


def remove_pilot(y, h_hat: EffectiveChannel, pilot, e_p: float) -> np.ndarray:
    """Subtract the estimated channel's response to the pilot at energy ``e_p``."""
    y = np.asarray(y, dtype=complex)
    if e_p == 0:
        return y.copy()
    return y - h_hat.apply(scaled_pilot(pilot, e_p))


def lmmse_detect(y, h_hat: EffectiveChannel, noise_var: float, e: float,
                 const: Constellation, floor: float = 1e-12):
    """LMMSE equalization in the DD domain followed by hard slicing.

    Solves ``(H^H H + (noise_var/e) I) z = H^H vec(Y)`` where ``Y`` is the Zak
    transform of ``y`` and ``H`` the DD channel matrix built from ``h_hat``.
    The Gram matrix is assembled from the twisted self-convolution of the
    taps rather than a dense product.  Returns ``(symbols, bits)``.
    """
    grid = h_hat.grid
    taps = h_hat.taps()
    adj = taps.adjoint(grid.MN)
    gram = build_channel_matrix(compose(adj, taps, grid.MN), grid)
    gram[np.diag_indices_from(gram)] += noise_var / e + floor
    rhs = zak(apply_operator(adj, y), grid).dd.ravel()
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise ValueError(f"LMMSE system is numerically singular: {exc}") from None
    z = scipy.linalg.cho_solve(factor, rhs, check_finite=False) / np.sqrt(e)
    bits = qam_hard_demod(z, const)
    return qam_modulate(bits, const), bits


@dataclass(frozen=True)
class LinkContext:
    """Everything about the link the receiver is allowed to know."""

    grid: DDGrid
    const: Constellation
    k_max: int
    l_max: int
    noise_var: float = 1.0
    floor: float = 1e-12


def differential_step(y, prior: ChannelEstimate, e: float, ctx: LinkContext,
                      frame: int = -1):
    """Detect a data-only frame with the previous estimate, then re-estimate from the decisions.

    Returns ``(bits, new_estimate)``.
    """
    symbols, bits = lmmse_detect(y, prior.channel, ctx.noise_var, e, ctx.const, ctx.floor)
    x_hat = build_do_frame(symbols, e, ctx.grid)
    est = estimate_h_eff(y, x_hat, ctx.grid, ctx.k_max, ctx.l_max, e, "data", frame)
    return bits, est


def _context(realization: ChannelRealization, const, budget, config: SessionConfig):
    return LinkContext(realization.grid, const, realization.k_max, realization.l_max,
                       budget.noise_var, config.regularization_floor)


def frame_streams(seed):
    """Per-frame generators: frame ``f`` draws from spawn key ``(..., f)`` of ``seed``.

    Sessions sharing a seed therefore see identical data bits and noise in
    frames with the same index, whatever their scheme.
    """
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)

    def stream(f: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(seq.entropy, spawn_key=(*seq.spawn_key, f))
        )

    return stream, int(seq.generate_state(1)[0])


def _data_frame(ctx: LinkContext, rng):
    bits = random_bits(ctx.grid.MN * ctx.const.bits_per_symbol, rng)
    return bits, qam_modulate(bits, ctx.const)


def _chirp(ctx: LinkContext):
    u = find_chirp_root(ctx.grid, ctx.k_max, ctx.l_max)
    return build_chirp_pilot(ctx.grid, u)


def run_differential_session(realization: ChannelRealization, config: SessionConfig,
                             budget: EnergyBudget, const: Constellation,
                             seed=0):
    """Pilot frame every ``pilot_period`` frames; data-only frames in between.

    Each data frame is detected with the estimate from the previous frame and
    then itself becomes the reference for the next estimate.
    """
    ctx = _context(realization, const, budget, config)
    skip = config.skip_detection(ctx.grid)
    stream, seed = frame_streams(seed)
    pilot = _chirp(ctx)
    e = budget.e_do
    records = []
    prior = None
    for f in range(config.frames):
        h = realization.at_frame(f)
        rng = stream(f)
        if f % config.pilot_period == 0:
            x = scaled_pilot(pilot, e)
            y = awgn(h.apply(x), budget.noise_var, rng)
            est = estimate_h_eff(y, x, ctx.grid, ctx.k_max, ctx.l_max, e, "pilot", f)
            records.append(MetricsRecord(f, "pilot", nmse(est.channel, h), None,
                                         budget.snr_db, "do", None, seed))
        else:
            bits, symbols = _data_frame(ctx, rng)
            x = build_do_frame(symbols, e, ctx.grid)
            y = awgn(h.apply(x), budget.noise_var, rng)
            if skip:
                est = estimate_h_eff(y, x, ctx.grid, ctx.k_max, ctx.l_max, e, "data", f)
                err = None
            else:
                rx_bits, est = differential_step(y, prior, e, ctx, f)
                err = ber(bits, rx_bits)
            records.append(MetricsRecord(f, "data", nmse(est.channel, h), err,
                                         budget.snr_db, "do", None, seed))
        prior = est
    return records


def run_sp_session(realization: ChannelRealization, config: SessionConfig,
                   budget: EnergyBudget, const: Constellation,
                   seed=0, scheme: SpreadPilot | None = None):
    """Every frame carries data plus a superimposed chirp pilot."""
    ctx = _context(realization, const, budget, config)
    skip = config.skip_detection(ctx.grid)
    stream, seed = frame_streams(seed)
    if scheme is not None and scheme.root is not None:
        pilot = build_chirp_pilot(ctx.grid, scheme.root)
    else:
        pilot = _chirp(ctx)
    purity = ambiguity_purity_check(pilot, ctx.k_max, ctx.l_max)
    if not purity:
        raise ValueError(f"spread pilot fails the purity check at {purity.worst_shift}")
    x_p = scaled_pilot(pilot, budget.e_p)
    records = []
    for f in range(config.frames):
        h = realization.at_frame(f)
        rng = stream(f)
        bits, symbols = _data_frame(ctx, rng)
        x = sp_data_component(symbols, budget, ctx.grid) + x_p
        y = awgn(h.apply(x), budget.noise_var, rng)
        est = estimate_h_eff(y, x_p, ctx.grid, ctx.k_max, ctx.l_max, budget.e_p, "pilot", f)
        err = None
        if not skip:
            y_clean = remove_pilot(y, est.channel, pilot, budget.e_p)
            _, rx_bits = lmmse_detect(y_clean, est.channel, budget.noise_var,
                                      budget.e_d, const, ctx.floor)
            err = ber(bits, rx_bits)
        records.append(MetricsRecord(f, "data", nmse(est.channel, h), err,
                                     budget.snr_db, "sp", budget.alpha, seed))
    return records


def run_separate_session(realization: ChannelRealization, config: SessionConfig,
                         budget: EnergyBudget, const: Constellation,
                         seed=0, scheme: SeparatePilot | None = None):
    """Point-pilot frames alternate with data-only frames (half the data rate).

    A data frame is detected with the estimate from the pilot frame before
    it; its NMSE entry scores that carried estimate against the current
    channel.
    """
    scheme = scheme or SeparatePilot()
    ctx = _context(realization, const, budget, config)
    skip = config.skip_detection(ctx.grid)
    stream, seed = frame_streams(seed)
    e = budget.e_do
    x_p = build_pp_frame(ctx.grid, scheme.k_p, scheme.l_p, e)
    records = []
    est = None
    for f in range(config.frames):
        h = realization.at_frame(f)
        rng = stream(f)
        if f % 2 == 0:
            y = awgn(h.apply(x_p), budget.noise_var, rng)
            est = estimate_h_eff(y, x_p, ctx.grid, ctx.k_max, ctx.l_max, e, "pilot", f)
            records.append(MetricsRecord(f, "pilot", nmse(est.channel, h), None,
                                         budget.snr_db, "separate", None, seed))
            continue
        bits, symbols = _data_frame(ctx, rng)
        y = awgn(h.apply(build_do_frame(symbols, e, ctx.grid)), budget.noise_var, rng)
        err = None
        if not skip:
            _, rx_bits = lmmse_detect(y, est.channel, budget.noise_var, e, const, ctx.floor)
            err = ber(bits, rx_bits)
        records.append(MetricsRecord(f, "data", nmse(est.channel, h), err,
                                     budget.snr_db, "separate", None, seed))
    return records


def run_perfect_csi_session(realization: ChannelRealization, config: SessionConfig,
                            budget: EnergyBudget, const: Constellation,
                            seed=0):
    """Data-only frames detected with the true effective channel."""
    ctx = _context(realization, const, budget, config)
    skip = config.skip_detection(ctx.grid)
    stream, seed = frame_streams(seed)
    e = budget.e_do
    records = []
    for f in range(config.frames):
        h = realization.at_frame(f)
        rng = stream(f)
        bits, symbols = _data_frame(ctx, rng)
        y = awgn(h.apply(build_do_frame(symbols, e, ctx.grid)), budget.noise_var, rng)
        err = None
        if not skip:
            _, rx_bits = lmmse_detect(y, h, budget.noise_var, e, const, ctx.floor)
            err = ber(bits, rx_bits)
        records.append(MetricsRecord(f, "data", 0.0, err, budget.snr_db,
                                     "perfect", None, seed))
    return records

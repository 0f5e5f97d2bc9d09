"""Zak-OTFS link-level simulation with decision-directed (differential) channel estimation."""

from .channel import (
    ChannelConfig,
    ChannelRealization,
    EffectiveChannel,
    FilterConfig,
    PhysicalPath,
    awgn,
    build_channel_matrix,
    evolve_gains,
    rrc,
    sample_effective_channel,
    support_box,
    veha_paths,
)
from .ddcore import (
    AmbiguitySurface,
    DDGrid,
    DDTaps,
    QPSignal,
    cross_ambiguity,
    inverse_zak,
    point_pulsone,
    self_ambiguity_dd,
    twisted_convolution,
    zak,
)
from .frames import (
    DataOnly,
    EnergyBudget,
    PerfectCSI,
    SeparatePilot,
    SpreadPilot,
    ambiguity_purity_check,
    build_chirp_pilot,
    build_do_frame,
    build_pp_frame,
    build_sp_frame,
    energy_split,
    qam,
    qam_hard_demod,
    qam_modulate,
)
from .receiver import (
    ChannelEstimate,
    MetricsRecord,
    SessionConfig,
    ber,
    differential_step,
    estimate_h_eff,
    lmmse_detect,
    nmse,
    remove_pilot,
    run_differential_session,
    run_perfect_csi_session,
    run_separate_session,
    run_sp_session,
)

__version__ = "0.1.0"

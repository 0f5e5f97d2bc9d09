"""Constellations, frame construction and energy accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ddcore import DDGrid, QPSignal, cross_ambiguity, inverse_zak, point_pulsone


# ---------------------------------------------------------------------------
# QAM with per-axis reflected Gray labelling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constellation:
    """Square QAM with unit average energy.

    A symbol label is the integer formed by its bits (MSB first).  The upper
    half of the bits selects the in-phase level and the lower half the
    quadrature level; along each axis the level index ``p`` (``0`` is the most
    positive amplitude) carries the Gray code ``p ^ (p >> 1)``.
    """

    order: int
    points: np.ndarray
    bits_per_symbol: int
    levels: int
    scale: float

    def __hash__(self):
        return hash(self.order)

    def __eq__(self, other):
        return isinstance(other, Constellation) and other.order == self.order


def _gray_to_binary(g: np.ndarray) -> np.ndarray:
    p = g.copy()
    shift = g >> 1
    while np.any(shift):
        p ^= shift
        shift >>= 1
    return p


@lru_cache(maxsize=None)
def qam(order: int) -> Constellation:
    bps = int(round(math.log2(order))) if order > 1 else 0
    if order < 4 or 2**bps != order or bps % 2:
        raise ValueError(f"unsupported QAM order {order}; use 4, 16, 64, 256, ...")
    L = 2 ** (bps // 2)
    scale = math.sqrt(2.0 * (L * L - 1) / 3.0)
    labels = np.arange(order)
    gi = labels >> (bps // 2)
    gq = labels & (L - 1)
    amp = lambda g: (L - 1) - 2 * _gray_to_binary(g)  # noqa: E731
    points = (amp(gi) + 1j * amp(gq)) / scale
    points.setflags(write=False)
    return Constellation(order, points, bps, L, scale)


def qam_modulate(bits, const: Constellation) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % const.bits_per_symbol:
        raise ValueError(
            f"{bits.size} bits is not a multiple of {const.bits_per_symbol}"
        )
    weights = 1 << np.arange(const.bits_per_symbol - 1, -1, -1)
    labels = bits.reshape(-1, const.bits_per_symbol) @ weights
    return const.points[labels]


def qam_hard_demod(symbols, const: Constellation) -> np.ndarray:
    """Nearest-point slicing back to bits."""
    s = np.asarray(symbols, dtype=complex).ravel() * const.scale
    L = const.levels

    def axis_gray(a):
        p = np.clip(np.rint(((L - 1) - a) / 2.0), 0, L - 1).astype(np.int64)
        return p ^ (p >> 1)

    half = const.bits_per_symbol // 2
    labels = (axis_gray(s.real) << half) | axis_gray(s.imag)
    shifts = np.arange(const.bits_per_symbol - 1, -1, -1)
    return ((labels[:, None] >> shifts) & 1).astype(np.int8).ravel()


def random_bits(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.int8)


# ---------------------------------------------------------------------------
# Energy budgets and schemes
# ---------------------------------------------------------------------------

PILOT_OFFSET_DB = 5.0


@dataclass(frozen=True)
class EnergyBudget:
    snr_db: float
    e_d: float
    e_p: float
    e_do: float
    noise_var: float = 1.0
    alpha: float | None = None


@dataclass(frozen=True)
class DataOnly:
    name = "do"


@dataclass(frozen=True)
class SpreadPilot:
    alpha: float
    root: int | None = None
    name = "sp"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"SP split alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class SeparatePilot:
    k_p: int = 0
    l_p: int = 0
    name = "separate"


@dataclass(frozen=True)
class PerfectCSI:
    name = "perfect"


def energy_split(snr_db: float, scheme=None) -> EnergyBudget:
    """Per-symbol energies for a data SNR, noise variance fixed at one.

    The reference pilot sits 5 dB below the data, and a data-only frame
    carries both (``e_do = e_d + e_p``).  A spread-pilot scheme splits
    ``e_do`` as ``alpha`` to data and ``1 - alpha`` to the pilot.
    """
    e_d = 10.0 ** (snr_db / 10.0)
    e_p = 10.0 ** ((snr_db - PILOT_OFFSET_DB) / 10.0)
    e_do = e_d + e_p
    if isinstance(scheme, SpreadPilot):
        a = scheme.alpha
        if not 0.0 < a < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {a}")
        return EnergyBudget(snr_db, a * e_do, (1.0 - a) * e_do, e_do, 1.0, a)
    return EnergyBudget(snr_db, e_d, e_p, e_do)


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------


def symbols_to_dd(symbols, grid: DDGrid) -> QPSignal:
    symbols = np.asarray(symbols, dtype=complex)
    if symbols.size != grid.MN:
        raise ValueError(f"expected {grid.MN} symbols, got {symbols.size}")
    return QPSignal(grid, symbols.reshape(grid.M, grid.N))


def build_do_frame(symbols, e_do: float, grid: DDGrid) -> np.ndarray:
    """Data-only frame: every DD bin carries a symbol scaled by ``sqrt(e_do)``."""
    X = symbols_to_dd(symbols, grid)
    return inverse_zak(QPSignal(grid, np.sqrt(e_do) * X.dd))


def build_pp_frame(grid: DDGrid, k_p: int, l_p: int, e: float) -> np.ndarray:
    """Point-pilot frame: all ``MN * e`` energy on the pulsone at ``(k_p, l_p)``."""
    return np.sqrt(grid.MN * e) * inverse_zak(point_pulsone(grid, k_p, l_p))


def build_chirp_pilot(grid: DDGrid, u: int) -> np.ndarray:
    """Discrete chirp of unit total energy with root ``u`` (coprime to ``MN``).

    Its self-ambiguity is supported on the line ``l = u*k (mod MN)``.
    """
    MN = grid.MN
    if math.gcd(int(u), MN) != 1:
        raise ValueError(f"chirp root {u} shares a factor with MN={MN}")
    n = np.arange(MN)
    # n(n+1) (odd MN) or n^2 (even MN), reduced mod 2MN to keep the phase exact
    q = n * (n + 1) if MN % 2 else n * n
    return np.exp(1j * np.pi * u * np.mod(q, 2 * MN) / MN) / np.sqrt(MN)


@dataclass(frozen=True)
class PurityResult:
    passed: bool
    worst_shift: tuple[int, int]
    worst_ratio: float

    def __bool__(self):
        return self.passed


PURITY_TOL = 1e-6


def ambiguity_purity_check(pilot, k_max: int, l_max: int, tol: float = PURITY_TOL) -> PurityResult:
    """Is the pilot's self-ambiguity a delta over all differences of the support box?

    The box spans delays ``0..k_max`` and Dopplers ``-l_max..l_max``, so the
    scanned shifts are ``|k| <= k_max`` and ``|l| <= 2*l_max``.
    """
    pilot = np.asarray(pilot, dtype=complex)
    dk = np.arange(-k_max, k_max + 1)
    dl = np.arange(-2 * l_max, 2 * l_max + 1)
    A = np.abs(cross_ambiguity(pilot, pilot, dk, dl).values)
    origin = A[k_max, 2 * l_max]
    A[k_max, 2 * l_max] = 0.0
    i, j = np.unravel_index(np.argmax(A), A.shape)
    ratio = float(A[i, j] / origin) if origin > 0 else math.inf
    return PurityResult(ratio <= tol, (int(dk[i]), int(dl[j])), ratio)


def find_chirp_root(grid: DDGrid, k_max: int, l_max: int) -> int:
    """Smallest chirp root whose ambiguity line misses the box differences."""
    MN = grid.MN
    k = np.arange(1, k_max + 1)
    for u in range(1, MN):
        if math.gcd(u, MN) != 1:
            continue
        line = np.mod(u * k, MN)
        signed = np.where(line > MN // 2, line - MN, line)
        if np.all(np.abs(signed) > 2 * l_max):
            return u
    raise ValueError(
        f"no chirp root on a {grid.M}x{grid.N} grid clears a "
        f"{k_max}x{l_max} support box"
    )


def build_sp_frame(symbols, budget: EnergyBudget, pilot, grid: DDGrid,
                   k_max: int, l_max: int) -> np.ndarray:
    """Spread-pilot frame: data at energy ``e_d`` plus chirp pilot at ``e_p``.

    The data component is normalized to exactly ``MN * e_d`` and the pilot to
    ``MN * e_p``, so the component energies sum to ``MN * e_do``.
    """
    purity = ambiguity_purity_check(pilot, k_max, l_max)
    if not purity:
        raise ValueError(
            f"pilot ambiguity is not a delta on the support box "
            f"(worst shift {purity.worst_shift}, ratio {purity.worst_ratio:.3g})"
        )
    return sp_data_component(symbols, budget, grid) + sp_pilot_component(pilot, budget)


def sp_data_component(symbols, budget: EnergyBudget, grid: DDGrid) -> np.ndarray:
    x = inverse_zak(symbols_to_dd(symbols, grid))
    rms = np.sqrt(np.mean(np.abs(x) ** 2))
    if rms == 0:
        return x
    return np.sqrt(budget.e_d) * x / rms


def sp_pilot_component(pilot, budget: EnergyBudget) -> np.ndarray:
    pilot = np.asarray(pilot, dtype=complex)
    return scaled_pilot(pilot, budget.e_p)


def scaled_pilot(pilot, e: float) -> np.ndarray:
    """Pilot rescaled to mean per-sample energy ``e``."""
    pilot = np.asarray(pilot, dtype=complex)
    return np.sqrt(e * pilot.size / np.sum(np.abs(pilot) ** 2)) * pilot

"""Time-varying multipath channel, effective DD taps and channel matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ddcore import DDGrid, DDTaps, apply_operator

# ITU Vehicular-A power delay profile
VEHA_DELAYS_US = (0.0, 0.31, 0.71, 1.09, 1.73, 2.51)
VEHA_POWERS_DB = (0.0, -1.0, -9.0, -10.0, -15.0, -20.0)
VEHA_PROFILE = tuple(zip(VEHA_DELAYS_US, VEHA_POWERS_DB))

SPEED_OF_LIGHT = 3e8


@dataclass(frozen=True)
class PhysicalPath:
    delay: float
    doppler: float
    gain: float
    phase: float


@dataclass(frozen=True)
class ChannelConfig:
    """Physical channel parameters.

    ``profile`` is a sequence of ``(delay_us, power_db)`` pairs.  With
    ``doppler_phase`` set, each path gain also rotates as ``exp(2j*pi*nu*t)``
    between frames.
    """

    fc: float = 4e9
    c: float = SPEED_OF_LIGHT
    d_ref: float = 1000.0
    nu_max: float = 815.0
    profile: tuple = VEHA_PROFILE
    doppler_phase: bool = False

    def __post_init__(self):
        if not self.fc > 0:
            raise ValueError("carrier frequency must be positive")
        if not self.d_ref > 0:
            raise ValueError("reference distance must be positive")
        if self.nu_max < 0:
            raise ValueError("maximum Doppler must be non-negative")

    @property
    def max_delay(self) -> float:
        return max(d for d, _ in self.profile) * 1e-6 if self.profile else 0.0


@dataclass(frozen=True)
class FilterConfig:
    """RRC roll-offs and truncation half-widths (in taps) for delay and Doppler."""

    beta_tau: float = 0.6
    beta_nu: float = 0.6
    half_width_tau: int = 1
    half_width_nu: int = 1

    def __post_init__(self):
        for name in ("beta_tau", "beta_nu"):
            b = getattr(self, name)
            if not 0.0 <= b <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {b}")
        if self.half_width_tau < 0 or self.half_width_nu < 0:
            raise ValueError("half-widths must be non-negative")


def read_profile(path) -> tuple:
    """Read a power delay profile: one ``delay_us power_db`` pair per line."""
    taps = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'delay_us power_db'")
        try:
            delay, power = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        if delay < 0:
            raise ValueError(f"{path}:{lineno}: negative delay")
        taps.append((delay, power))
    if not taps:
        raise ValueError(f"{path}: empty channel profile")
    return tuple(taps)


def veha_paths(config: ChannelConfig, rng: np.random.Generator) -> list[PhysicalPath]:
    """Draw one path per profile tap with random static phase and Doppler."""
    if not config.profile:
        raise ValueError("channel profile is empty")
    delays = np.array([d for d, _ in config.profile]) * 1e-6
    alpha = 10.0 ** (np.array([p for _, p in config.profile]) / 20.0)
    alpha /= np.sqrt(np.sum(alpha**2))
    theta = rng.uniform(-2 * np.pi, 2 * np.pi, size=delays.size)
    nu = config.nu_max * np.cos(2 * np.pi * rng.uniform(0.0, 1.0, size=delays.size))
    return [
        PhysicalPath(float(t), float(v), float(a), float(p))
        for t, v, a, p in zip(delays, nu, alpha, theta)
    ]


def path_distances(paths, config: ChannelConfig, t: float) -> np.ndarray:
    tau = np.array([p.delay for p in paths])
    nu = np.array([p.doppler for p in paths])
    return config.d_ref + tau * config.c + nu * config.c / config.fc * t


def evolve_gains(paths, config: ChannelConfig, t: float) -> np.ndarray:
    """Complex path gains at time ``t`` under the distance/path-loss model."""
    if t < 0:
        raise ValueError("time must be non-negative")
    d = path_distances(paths, config, t)
    if np.any(d <= 0):
        raise ValueError(
            f"path distance became non-positive at t={t} s; "
            "the path-loss model has broken down"
        )
    alpha = np.array([p.gain for p in paths])
    theta = np.array([p.phase for p in paths])
    h = alpha * np.exp(1j * theta) / d
    if config.doppler_phase:
        nu = np.array([p.doppler for p in paths])
        h = h * np.exp(2j * np.pi * nu * t)
    return h


def rrc(beta: float, s) -> np.ndarray:
    """Unit-energy root-raised-cosine pulse at normalized time ``s``."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    if beta == 0:
        return np.sinc(s)
    at_zero = np.isclose(s, 0.0, atol=1e-12)
    at_sing = np.isclose(np.abs(s), 1.0 / (4 * beta), atol=1e-12)
    rest = ~(at_zero | at_sing)
    out[at_zero] = 1.0 - beta + 4 * beta / np.pi
    out[at_sing] = (beta / np.sqrt(2)) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * beta))
        + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta))
    )
    r = s[rest]
    out[rest] = (
        np.sin(np.pi * r * (1 - beta)) + 4 * beta * r * np.cos(np.pi * r * (1 + beta))
    ) / (np.pi * r * (1 - (4 * beta * r) ** 2))
    return out


def support_box(grid: DDGrid, config: ChannelConfig, filt: FilterConfig) -> tuple[int, int]:
    """``(k_max, l_max)``: delay taps ``0..k_max``, Doppler taps ``-l_max..l_max``."""
    k_max = math.ceil(grid.bandwidth * config.max_delay - 1e-9) + 4 * filt.half_width_tau
    l_max = math.ceil(grid.duration * config.nu_max - 1e-9) + 4 * filt.half_width_nu
    return k_max, l_max


@dataclass
class EffectiveChannel:
    """Complex DD taps on the box ``[0, k_max] x [-l_max, l_max]``.

    ``values[k, l + l_max]`` holds the tap at delay ``k``, Doppler ``l``.
    """

    grid: DDGrid
    values: np.ndarray
    k_max: int
    l_max: int
    _matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.k_max + 1, 2 * self.l_max + 1):
            raise ValueError("tap array does not match the support box")

    @classmethod
    def zeros(cls, grid: DDGrid, k_max: int, l_max: int) -> "EffectiveChannel":
        return cls(grid, np.zeros((k_max + 1, 2 * l_max + 1), dtype=complex), k_max, l_max)

    @property
    def delays(self) -> np.ndarray:
        return np.arange(self.k_max + 1)

    @property
    def dopplers(self) -> np.ndarray:
        return np.arange(-self.l_max, self.l_max + 1)

    def taps(self) -> DDTaps:
        kk, ll = np.meshgrid(self.delays, self.dopplers, indexing="ij")
        return DDTaps(kk.ravel(), ll.ravel(), self.values.ravel()).pruned()

    def with_values(self, values) -> "EffectiveChannel":
        return EffectiveChannel(self.grid, values, self.k_max, self.l_max)

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = build_channel_matrix(self.taps(), self.grid)
        return self._matrix

    def apply(self, x) -> np.ndarray:
        """Pass a time-domain frame through the channel (noiseless)."""
        return apply_operator(self.taps(), x)


def sample_effective_channel(paths, gains, grid: DDGrid, filt: FilterConfig,
                             k_max: int, l_max: int) -> EffectiveChannel:
    """Sample the pulse-shaped physical channel on the DD support box."""
    k = np.arange(k_max + 1)[:, None]
    l = np.arange(-l_max, l_max + 1)[None, :]
    h = np.zeros((k_max + 1, 2 * l_max + 1), dtype=complex)
    for path, g in zip(paths, gains):
        if not (0 <= path.delay < grid.tau_p and abs(path.doppler) < grid.nu_p / 2):
            raise ValueError(
                f"path (tau={path.delay}, nu={path.doppler}) lies outside the "
                "unambiguous delay-Doppler region of the grid"
            )
        w = g * np.exp(-2j * np.pi * path.doppler * path.delay)
        h += (
            w
            * rrc(filt.beta_tau, k - grid.bandwidth * path.delay)
            * rrc(filt.beta_nu, l - grid.duration * path.doppler)
        )
    return EffectiveChannel(grid, h, k_max, l_max)


def build_channel_matrix(taps: DDTaps, grid: DDGrid) -> np.ndarray:
    """Dense ``MN x MN`` matrix with ``H @ X.ravel() == (taps *s X).ravel()``.

    DD arrays are vectorized in C order, index ``k*N + l``.
    """
    M, N, MN = grid.M, grid.N, grid.MN
    keep = taps.values != 0
    kk = taps.delays[keep][:, None]
    ll = taps.dopplers[keep][:, None]
    k = np.repeat(np.arange(M), N)[None, :]
    l = np.tile(np.arange(N), M)[None, :]
    n, k0 = np.divmod(k - kk, M)
    l0 = np.mod(l - ll, N)
    # twist exp(2j*pi*ll*(k-kk)/MN) times quasi-periodic exp(2j*pi*n*l0/N),
    # as a single integer exponent of the MN-th root of unity
    expo = np.mod(ll * (k - kk) + M * n * l0, MN)
    roots = np.exp(2j * np.pi * np.arange(MN) / MN)
    vals = (taps.values[keep][:, None] * roots[expo]).ravel()
    # distinct taps may alias onto the same entry, so accumulate
    flat = (np.arange(MN)[None, :] * MN + k0 * N + l0).ravel()
    H = np.bincount(flat, vals.real, MN * MN) + 1j * np.bincount(flat, vals.imag, MN * MN)
    return H.reshape(MN, MN)


def awgn(x, noise_var: float, rng: np.random.Generator) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise of variance ``noise_var``."""
    if noise_var < 0:
        raise ValueError("noise variance must be non-negative")
    x = np.asarray(x, dtype=complex)
    noise = rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)
    return x + np.sqrt(noise_var / 2) * noise


@dataclass
class ChannelRealization:
    """One random draw of the physical channel, evaluated at frame start times.

    Gains are scaled by a constant so that the total path power is one at
    ``t = 0``; the relative evolution follows :func:`evolve_gains`.
    """

    paths: list
    config: ChannelConfig
    grid: DDGrid
    filt: FilterConfig
    k_max: int
    l_max: int
    scale: float

    @classmethod
    def draw(cls, grid: DDGrid, config: ChannelConfig, filt: FilterConfig,
             rng: np.random.Generator) -> "ChannelRealization":
        paths = veha_paths(config, rng)
        g0 = evolve_gains(paths, config, 0.0)
        scale = 1.0 / np.sqrt(np.sum(np.abs(g0) ** 2))
        k_max, l_max = support_box(grid, config, filt)
        return cls(paths, config, grid, filt, k_max, l_max, float(scale))

    def gains(self, t: float) -> np.ndarray:
        return self.scale * evolve_gains(self.paths, self.config, t)

    def effective(self, t: float) -> EffectiveChannel:
        return sample_effective_channel(
            self.paths, self.gains(t), self.grid, self.filt, self.k_max, self.l_max
        )

    def at_frame(self, f: int) -> EffectiveChannel:
        return self.effective(f * self.grid.duration)

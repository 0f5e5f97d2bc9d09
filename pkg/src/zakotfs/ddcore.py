"""Delay-Doppler algebra on a discrete Zak-OTFS grid.

Conventions used throughout the package:

* A time-domain frame ``x`` has length ``MN`` and is indexed cyclically.
* The DD array ``X[k, l]`` (``k`` delay, ``l`` Doppler) is related to ``x`` by
  the unitary discrete Zak transform
  ``X[k, l] = N**-0.5 * sum_m x[k + m*M] * exp(-2j*pi*l*m/N)``.
* Outside the fundamental domain ``X`` extends quasi-periodically:
  ``X[k + n*M, l + m*N] = exp(2j*pi*n*l/N) * X[k mod M, l mod N]``.
* The elementary channel operator with delay ``k`` and Doppler ``l`` acts as
  ``x[n] -> x[(n - k) mod MN] * exp(2j*pi*l*(n - k)/MN)``.  Composition of such
  operators is the twisted convolution implemented below.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DDGrid:
    """Frame geometry: ``M`` delay bins, ``N`` Doppler bins, Doppler period ``nu_p`` in Hz."""

    M: int
    N: int
    nu_p: float = 30e3

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not self.nu_p > 0:
            raise ValueError(f"nu_p must be positive, got {self.nu_p!r}")

    @property
    def MN(self) -> int:
        return self.M * self.N

    @property
    def tau_p(self) -> float:
        """Delay period in seconds."""
        return 1.0 / self.nu_p

    @property
    def bandwidth(self) -> float:
        return self.M * self.nu_p

    @property
    def duration(self) -> float:
        return self.N * self.tau_p

    @property
    def delay_resolution(self) -> float:
        return self.tau_p / self.M

    @property
    def doppler_resolution(self) -> float:
        return self.nu_p / self.N


def quasi_periodic_index(grid: DDGrid, k, l):
    """Map integer DD indices to the fundamental domain.

    Returns ``(k0, l0, phase)`` with ``X[k, l] = phase * X[k0, l0]``.
    """
    k = np.asarray(k, dtype=np.int64)
    l = np.asarray(l, dtype=np.int64)
    n, k0 = np.divmod(k, grid.M)
    l0 = np.mod(l, grid.N)
    # n*l is taken mod N first so the phase stays exact for large indices
    phase = np.exp(2j * np.pi * np.mod(n * l0, grid.N) / grid.N)
    return k0, l0, phase


@dataclass
class QPSignal:
    """An ``M x N`` complex DD array with quasi-periodic extension."""

    grid: DDGrid
    dd: np.ndarray

    def __post_init__(self):
        self.dd = np.asarray(self.dd, dtype=complex)
        if self.dd.shape != (self.grid.M, self.grid.N):
            raise ValueError(
                f"DD array shape {self.dd.shape} does not match grid "
                f"({self.grid.M}, {self.grid.N})"
            )

    def at(self, k, l) -> np.ndarray:
        """Value at arbitrary integer ``(k, l)`` via the quasi-periodic rule."""
        k0, l0, phase = quasi_periodic_index(self.grid, k, l)
        return phase * self.dd[k0, l0]

    def time(self) -> np.ndarray:
        return inverse_zak(self)

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.dd) ** 2))


def inverse_zak(X: QPSignal) -> np.ndarray:
    """Time-domain frame of length ``MN`` carried by the DD array ``X``."""
    M, N = X.grid.M, X.grid.N
    # x[k + m*M] = sqrt(N) * ifft_l(X[k, :])[m]
    x_km = np.fft.ifft(X.dd, axis=1) * np.sqrt(N)
    return x_km.T.reshape(M * N)


def zak(x, grid: DDGrid) -> QPSignal:
    """Discrete Zak transform of a length-``MN`` frame (unitary)."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (grid.MN,):
        raise ValueError(
            f"malformed frame: expected {grid.MN} samples, got shape {x.shape}"
        )
    x_km = x.reshape(grid.N, grid.M).T
    return QPSignal(grid, np.fft.fft(x_km, axis=1) / np.sqrt(grid.N))


def point_pulsone(grid: DDGrid, k0: int, l0: int) -> QPSignal:
    """DD point pulsone: the indicator of ``(k0, l0)`` on the fundamental domain."""
    if not (0 <= k0 < grid.M and 0 <= l0 < grid.N):
        raise ValueError(
            f"pulsone index ({k0}, {l0}) outside [0, {grid.M}) x [0, {grid.N})"
        )
    dd = np.zeros((grid.M, grid.N), dtype=complex)
    dd[k0, l0] = 1.0
    return QPSignal(grid, dd)


@dataclass
class AmbiguitySurface:
    """Ambiguity values on a rectangular set of integer delay/Doppler shifts.

    ``values[i, j]`` is the value at ``(delays[i], dopplers[j])``.  The surface
    is periodic with period ``MN`` in both shifts, and :meth:`at` uses that
    periodicity to look up arbitrary integer shifts.
    """

    values: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray
    MN: int
    normalization: float = field(default=0.0)

    def __post_init__(self):
        self.delays = np.asarray(self.delays, dtype=np.int64)
        self.dopplers = np.asarray(self.dopplers, dtype=np.int64)
        if self.values.shape != (self.delays.size, self.dopplers.size):
            raise ValueError("values shape does not match the shift grid")
        if not self.normalization:
            self.normalization = 1.0 / self.MN
        self._krow = _lookup_table(self.delays, self.MN)
        self._lcol = _lookup_table(self.dopplers, self.MN)

    def at(self, k, l) -> np.ndarray:
        rows = self._krow[np.mod(np.asarray(k, dtype=np.int64), self.MN)]
        cols = self._lcol[np.mod(np.asarray(l, dtype=np.int64), self.MN)]
        if np.any(rows < 0) or np.any(cols < 0):
            raise KeyError("requested shift is not covered by the surface")
        return self.values[rows, cols]


def _lookup_table(shifts: np.ndarray, period: int) -> np.ndarray:
    table = np.full(period, -1, dtype=np.int64)
    table[np.mod(shifts, period)] = np.arange(shifts.size)
    return table


def cross_ambiguity(y, x, delays, dopplers) -> AmbiguitySurface:
    """Time-domain cross-ambiguity of ``y`` against ``x`` on a shift grid.

    ``A[k, l] = (1/MN) * sum_n y[n] * conj(x[(n-k) mod MN]) * exp(-2j*pi*l*(n-k)/MN)``

    The cost is ``O(MN)`` per requested shift (one dense product), i.e.
    ``O(M**2 N**2)`` for a region the size of the DD fundamental domain.
    """
    y = np.asarray(y, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if y.ndim != 1 or y.shape != x.shape:
        raise ValueError(f"length mismatch: y {y.shape} vs x {x.shape}")
    MN = y.size
    delays = np.atleast_1d(np.asarray(delays, dtype=np.int64))
    dopplers = np.atleast_1d(np.asarray(dopplers, dtype=np.int64))
    n = np.arange(MN)
    # rows: y[n] * conj(x[n-k]) for each delay k
    idx = np.mod(n[None, :] - delays[:, None], MN)
    prod = y[None, :] * np.conj(x[idx])
    # exp(-2j*pi*l*(n-k)/MN) = exp(-2j*pi*l*n/MN) * exp(2j*pi*l*k/MN), both
    # read from a table of MN-th roots of unity
    roots = np.exp(2j * np.pi * np.arange(MN) / MN)
    carrier = roots[np.mod(-np.outer(n, dopplers), MN)]
    values = prod @ carrier
    values *= roots[np.mod(np.outer(delays, dopplers), MN)]
    values /= MN
    return AmbiguitySurface(values, delays, dopplers, MN)


def dd_cross_ambiguity(Y: QPSignal, X: QPSignal, delays, dopplers) -> AmbiguitySurface:
    """DD-domain cross-ambiguity with the ``1/MN`` normalization.

    ``A[k, l] = (1/MN) * sum_{k', l'} Y[k', l'] * conj(X[k'-k, l'-l]) * exp(-2j*pi*l*(k'-k)/MN)``
    with the sum over the fundamental domain and ``X`` extended
    quasi-periodically.  Agrees with :func:`cross_ambiguity` applied to the
    time-domain frames.
    """
    grid = Y.grid
    M, N, MN = grid.M, grid.N, grid.MN
    delays = np.atleast_1d(np.asarray(delays, dtype=np.int64))
    dopplers = np.atleast_1d(np.asarray(dopplers, dtype=np.int64))
    kp = np.arange(M)
    out = np.empty((delays.size, dopplers.size), dtype=complex)
    for i, k in enumerate(delays):
        # S[k', l'] = X[k'-k, l'] (quasi-periodic in delay only)
        k0, l0, phase = quasi_periodic_index(grid, (kp - k)[:, None], np.arange(N)[None, :])
        S = phase * X.dd[k0, l0]
        # circular correlation along Doppler: C[k', d] = sum_l' Y[k', l'] conj(S[k', l'-d])
        C = np.fft.ifft(np.fft.fft(Y.dd, axis=1) * np.conj(np.fft.fft(S, axis=1)), axis=1)
        Cl = C[:, np.mod(dopplers, N)]
        twist = np.exp(-2j * np.pi * np.mod(np.outer(kp - k, dopplers), MN) / MN)
        out[i] = np.sum(Cl * twist, axis=0)
    return AmbiguitySurface(out / MN, delays, dopplers, MN)


def self_ambiguity_dd(X: QPSignal, delays, dopplers) -> AmbiguitySurface:
    """The data-dependent term ``B`` multiplying the channel in the noiseless identity.

    ``B[k, l] = (1/MN) * sum_{k0, l0} X[k0, l0] * conj(X[k0-k, l0-l]) * exp(-2j*pi*l*(k0-k)/MN)``,
    computed purely in the DD domain from the symbol array.  For i.i.d.
    unit-energy symbols ``B`` tends to ``e * delta[k] delta[l]``.
    """
    return dd_cross_ambiguity(X, X, delays, dopplers)


@dataclass
class DDTaps:
    """A finitely supported DD function given as parallel tap arrays.

    Doppler indices may be negative.  Outside the listed taps the function
    is zero.
    """

    delays: np.ndarray
    dopplers: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.delays = np.atleast_1d(np.asarray(self.delays, dtype=np.int64))
        self.dopplers = np.atleast_1d(np.asarray(self.dopplers, dtype=np.int64))
        self.values = np.atleast_1d(np.asarray(self.values, dtype=complex))
        if not (self.delays.shape == self.dopplers.shape == self.values.shape):
            raise ValueError("tap arrays must have matching shapes")

    @classmethod
    def delta(cls, k: int = 0, l: int = 0, value: complex = 1.0) -> "DDTaps":
        return cls([k], [l], [value])

    def __len__(self):
        return self.values.size

    def at(self, k, l) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        l = np.asarray(l, dtype=np.int64)
        out = np.zeros(np.broadcast(k, l).shape, dtype=complex)
        for kk, ll, v in zip(self.delays, self.dopplers, self.values):
            out += np.where((k == kk) & (l == ll), v, 0)
        return out

    def pruned(self, tol: float = 0.0) -> "DDTaps":
        keep = np.abs(self.values) > tol
        return DDTaps(self.delays[keep], self.dopplers[keep], self.values[keep])

    def adjoint(self, MN: int) -> "DDTaps":
        """Coefficients of the adjoint operator."""
        phase = np.exp(2j * np.pi * np.mod(self.delays * self.dopplers, MN) / MN)
        return DDTaps(-self.delays, -self.dopplers, np.conj(self.values) * phase)


def twisted_convolution(a: DDTaps, b, delays, dopplers, MN: int) -> np.ndarray:
    """Twisted convolution of a finitely supported ``a`` with ``b`` on a shift grid.

    ``(a *s b)[k, l] = sum_{(k', l') in supp a} a[k', l'] * b[k-k', l-l'] * exp(2j*pi*l'*(k-k')/MN)``

    ``b`` is anything with a vectorized ``at(k, l)`` method: a
    :class:`QPSignal` (quasi-periodic extension), an
    :class:`AmbiguitySurface` (cyclic extension) or another :class:`DDTaps`
    (zero extension).  Returns an array of shape ``(len(delays), len(dopplers))``.
    """
    delays = np.atleast_1d(np.asarray(delays, dtype=np.int64))[:, None]
    dopplers = np.atleast_1d(np.asarray(dopplers, dtype=np.int64))[None, :]
    out = np.zeros((delays.size, dopplers.size), dtype=complex)
    for kk, ll, v in zip(a.delays, a.dopplers, a.values):
        if v == 0:
            continue
        dk = delays - kk
        twist = np.exp(2j * np.pi * np.mod(ll * dk, MN) / MN)
        out += v * twist * b.at(dk, dopplers - ll)
    return out


def compose(a: DDTaps, b: DDTaps, MN: int) -> DDTaps:
    """Sparse twisted convolution ``a *s b``: the operator ``b`` followed by ``a``."""
    if len(a) == 0 or len(b) == 0:
        return DDTaps([], [], [])
    k =(a.delays[:, None] + b.delays[None, :]).ravel()
    l = (a.dopplers[:, None] + b.dopplers[None, :]).ravel()
    twist = np.exp(2j * np.pi * np.mod(np.outer(a.dopplers, b.delays), MN) / MN)
    vals = (a.values[:, None] * b.values[None, :] * twist).ravel()
    k0, l0 = k.min(), l.min()
    width = l.max() - l0 + 1
    keys, inverse = np.unique((k - k0) * width + (l - l0), return_inverse=True)
    summed = np.bincount(inverse, vals.real) + 1j * np.bincount(inverse, vals.imag)
    return DDTaps(keys // width + k0, keys % width + l0, summed)


def apply_operator(taps: DDTaps, x) -> np.ndarray:
    """Apply ``sum h[k, l] * (delay k, Doppler l)`` to a time-domain frame."""
    x = np.asarray(x, dtype=complex)
    MN = x.size
    n = np.arange(MN)
    y = np.zeros(MN, dtype=complex)
    for kk, ll, v in zip(taps.delays, taps.dopplers, taps.values):
        if v == 0:
            continue
        shifted = np.roll(x, kk)  # x[(n - kk) mod MN]
        y += v * shifted * np.exp(2j * np.pi * np.mod(ll * (n - kk), MN) / MN)
    return y

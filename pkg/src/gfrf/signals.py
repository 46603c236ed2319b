"""Excitation design, DFT helpers, and excited-frequency bookkeeping.

Transform convention used everywhere in this package: the forward transform is

    X(k) = sum_t x(t) * exp(-2j*pi*k*t/N),   k = 0..N-1,

with no 1/N factor; the inverse carries the 1/N so that ``idft(dft(x)) == x``.
Signed frequency indices refer to DFT bins modulo N (index -k means bin N-k).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, SpecError

__all__ = [
    "MultisineSpec",
    "TimeSignal",
    "Spectrum",
    "FrequencyGrid",
    "generate_multisine",
    "dft",
    "idft",
    "excited_output_indices",
    "frequency_grid",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MultisineSpec:
    """Random-phase multisine design.

    The generated signal is ``u(t) = sum_k A_k cos(2 pi k t / N + phi_k)`` over
    the excited bins, with phases drawn uniformly on [0, 2 pi) from a seeded
    generator.  ``amplitude`` is either one shared tone amplitude or a
    per-tone sequence aligned with ``excited_indices``.
    """

    n_points: int
    excited_indices: tuple[int, ...]
    amplitude: float | tuple[float, ...] = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(
            self, "excited_indices", tuple(int(k) for k in self.excited_indices)
        )
        if self.n_points < 2:
            raise SpecError(f"n_points must be >= 2, got {self.n_points}")
        ks = self.excited_indices
        if any(k < 1 or k >= self.n_points for k in ks):
            raise SpecError(f"excited indices must lie in [1, n_points): {ks}")
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise SpecError(f"excited indices must be strictly increasing: {ks}")
        if isinstance(self.amplitude, (tuple, list, np.ndarray)):
            amps = tuple(float(a) for a in self.amplitude)
            if len(amps) != len(ks):
                raise DimensionError(
                    f"{len(amps)} amplitudes for {len(ks)} excited indices"
                )
            object.__setattr__(self, "amplitude", amps)
        else:
            object.__setattr__(self, "amplitude", float(self.amplitude))
            amps = (float(self.amplitude),) * len(ks)
        if any(a < 0 for a in amps):
            raise SpecError("tone amplitudes must be nonnegative")

    def tone_amplitudes(self) -> np.ndarray:
        if isinstance(self.amplitude, tuple):
            return np.array(self.amplitude, dtype=float)
        return np.full(len(self.excited_indices), self.amplitude, dtype=float)


@dataclass(frozen=True)
class TimeSignal:
    """A real sampled signal, optionally carrying pre-history.

    ``samples`` holds ``n_pre`` samples for t = -n_pre..-1 followed by the
    measured window t = 0, 1, ....  Plain windowed signals use ``n_pre = 0``.
    """

    samples: np.ndarray
    n_pre: int = 0

    def __post_init__(self):
        a = np.array(self.samples, dtype=float)
        if a.ndim != 1:
            raise DimensionError(f"samples must be 1-D, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise SpecError("samples must be finite")
        n_pre = int(self.n_pre)
        if n_pre < 0:
            raise SpecError(f"n_pre must be >= 0, got {n_pre}")
        if a.size - n_pre < 1:
            raise DimensionError("signal window is empty")
        object.__setattr__(self, "samples", _readonly(a))
        object.__setattr__(self, "n_pre", n_pre)

    @property
    def n_window(self) -> int:
        return self.samples.size - self.n_pre

    @property
    def window(self) -> np.ndarray:
        return self.samples[self.n_pre :]

    @property
    def pre_history(self) -> np.ndarray:
        return self.samples[: self.n_pre]

    def value_at(self, t: int) -> float:
        """Sample at integer time t; zero before the recorded pre-history."""
        i = t + self.n_pre
        if i < 0:
            return 0.0
        if i >= self.samples.size:
            raise SpecError(f"time {t} is beyond the recorded window")
        return float(self.samples[i])


@dataclass(frozen=True)
class Spectrum:
    """Complex DFT bins X(0..N-1) under the package-wide forward convention."""

    bins: np.ndarray

    def __post_init__(self):
        b = np.array(self.bins, dtype=complex)
        if b.ndim != 1 or b.size < 1:
            raise DimensionError(f"bins must be a nonempty vector, got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise SpecError("spectrum bins must be finite")
        object.__setattr__(self, "bins", _readonly(b))

    @property
    def n_points(self) -> int:
        return self.bins.size

    def value_at(self, k: int) -> complex:
        """Bin lookup by signed index (negative k wraps to bin N+k)."""
        return complex(self.bins[k % self.n_points])

    def conjugate_symmetry_deviation(self) -> float:
        """Max |X(N-k) - conj X(k)| over k, relative to the largest bin."""
        b = self.bins
        flipped = np.conj(b[(-np.arange(b.size)) % b.size])
        scale = max(float(np.max(np.abs(b))), 1e-300)
        return float(np.max(np.abs(b - flipped))) / scale


def generate_multisine(spec: MultisineSpec, phases=None) -> TimeSignal:
    """Generate one period of the multisine described by ``spec``.

    Periodic extension is exact by construction: longer records should be
    produced by tiling/indexing the returned period, never by re-evaluating
    the cosines at shifted times.

    Parameters
    ----------
    spec : MultisineSpec
    phases : optional sequence of per-tone phases overriding the seeded draw.
    """
    ks = spec.excited_indices
    if not ks:
        raise SpecError("cannot generate a multisine with no excited indices")
    amps = spec.tone_amplitudes()
    if phases is None:
        rng = np.random.default_rng(spec.seed)
        phi = rng.uniform(0.0, 2.0 * np.pi, len(ks))
    else:
        phi = np.asarray(phases, dtype=float)
        if phi.shape != (len(ks),):
            raise DimensionError(f"need {len(ks)} phases, got shape {phi.shape}")
    t = np.arange(spec.n_points)
    u = np.zeros(spec.n_points)
    for k, a, p in zip(ks, amps, phi):
        u += a * np.cos(2.0 * np.pi * k * t / spec.n_points + p)
    return TimeSignal(u)


def dft(signal: TimeSignal, n_points: int | None = None) -> Spectrum:
    """Forward DFT of the signal window (pre-history is never transformed)."""
    w = signal.window
    n = w.size if n_points is None else int(n_points)
    if n < 1 or n > w.size:
        raise DimensionError(f"window has {w.size} samples, cannot transform {n}")
    return Spectrum(np.fft.fft(w[:n]))


def idft(spectrum: Spectrum) -> TimeSignal:
    """Inverse DFT (carries the 1/N).  The bins must describe a real signal."""
    c = np.fft.ifft(spectrum.bins)
    scale = max(float(np.max(np.abs(c))), 1.0)
    if float(np.max(np.abs(c.imag))) > 1e-8 * scale:
        raise SpecError(
            "spectrum is not conjugate-symmetric: inverse transform is not real"
        )
    return TimeSignal(c.real)


def excited_output_indices(
    excited_indices, max_order: int, n_points: int
) -> tuple[int, ...]:
    """Positive output bins reachable as sums of at most ``max_order`` signed tones.

    The signed tone set is {-k, +k} over the excited indices.  Returned bins
    exclude DC and the Nyquist bin.  Requires every excited index to satisfy
    k < n_points / (2 * max_order), which guarantees no sum aliases modulo N;
    violations raise SpecError.
    """
    ks = tuple(int(k) for k in excited_indices)
    max_order = int(max_order)
    n_points = int(n_points)
    if max_order < 1:
        raise SpecError(f"max_order must be >= 1, got {max_order}")
    if not ks:
        return ()
    bound = n_points / (2.0 * max_order)
    bad = [k for k in ks if not (1 <= k < bound)]
    if bad:
        raise SpecError(
            f"excited indices {bad} violate 1 <= k < n_points/(2*max_order) = {bound:g}"
        )
    omega = [-k for k in ks] + list(ks)
    reachable: set[int] = set()
    for m in range(1, max_order + 1):
        for combo in itertools.product(omega, repeat=m):
            s = sum(combo)
            if 0 < s < n_points / 2.0:
                reachable.add(s)
    return tuple(sorted(reachable))


@dataclass(frozen=True)
class FrequencyGrid:
    """Excited input/output index bookkeeping for one experiment.

    ``omega_set`` is the signed tone set sorted ascending (negatives first),
    ``excited_output`` the positive non-DC, non-Nyquist bins reachable as sums
    of at most ``max_order`` elements of ``omega_set``.
    """

    n_points: int
    max_order: int
    excited_input: tuple[int, ...]
    excited_output: tuple[int, ...]
    omega_set: tuple[int, ...]

    def __post_init__(self):
        if 0 in self.omega_set:
            raise SpecError("signed tone set must not contain DC")
        half = self.n_points / 2.0
        if any(not (1 <= k < half) for k in self.excited_output):
            raise SpecError("output bins must be positive, below Nyquist")

    @property
    def n_output_bins(self) -> int:
        return len(self.excited_output)


def frequency_grid(
    n_points: int, excited_indices, max_order: int
) -> FrequencyGrid:
    """Assemble the FrequencyGrid for an excitation and a maximum order."""
    ks = tuple(int(k) for k in excited_indices)
    if not ks:
        raise SpecError("estimation requires at least one excited index")
    k_y = excited_output_indices(ks, max_order, n_points)
    omega = tuple(sorted([-k for k in ks] + list(ks)))
    return FrequencyGrid(
        n_points=int(n_points),
        max_order=int(max_order),
        excited_input=ks,
        excited_output=k_y,
        omega_set=omega,
    )

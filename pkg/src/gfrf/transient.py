"""Exact decomposition of windowed output spectra into steady state + transients.

For a periodic excitation measured over one window of N samples, the mismatch
between the recorded pre-history and the periodic extension is captured by
the difference signal

    f(t) = u(t) - u(t + N),   t = -n_pre .. -1,

which vanishes identically when the pre-history is one period of the input.
The windowed DFT of a second-order response then splits exactly into a
steady-state part and three transient terms,

    Y(k) = SS(k) + T1(k) + T2(k) + T3(k),

where each term is the hyperplane collapse (1/N) sum_{k1} of a 2-D transform:
SS collapses the kernel transfer tensor weighted by input bins, and T1/T2/T3
collapse three finite-support surfaces built from the kernel, the window, and
the difference signal.  T1 keeps one input factor inside the window, T2 is
its mirror image, and T3 involves the difference signal on both axes, so for
a permutation-symmetric kernel T1 equals T2 identically.

Convention note: the package-wide forward DFT carries no 1/N, so the
hyperplane collapses above each carry one explicit 1/N factor; that is what
makes the displayed identity hold against ``dft(simulate_with_history(...))``
bit-for-bit up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SpecError
from .mdft import apply_mdft
from .signals import Spectrum, TimeSignal
from .volterra import VolterraKernel

__all__ = [
    "TransientDecomposition",
    "T1T2Report",
    "HammersteinTerms",
    "difference_signal",
    "linear_transient",
    "steady_state_spectrum",
    "transient_terms",
    "verify_t1_equals_t2",
    "hammerstein_terms",
]


def difference_signal(u: TimeSignal) -> np.ndarray:
    """f(t) = u(t) - u(t + N) for t = -n_pre .. -1 (empty for no pre-history)."""
    n = u.n_window
    if u.n_pre == 0:
        return np.zeros(0)
    t = np.arange(-u.n_pre, 0)
    return u.samples[t + u.n_pre] - u.samples[t + n + u.n_pre]


def _check_second_order(kernel: VolterraKernel):
    if kernel.order != 2:
        raise SpecError(
            f"transient decomposition handles order-2 kernels, got order {kernel.order}"
        )


def _check_pre_history(u: TimeSignal, memory: int):
    if u.n_pre < memory - 1:
        raise SpecError(
            f"pre-history of {u.n_pre} samples cannot feed a kernel with "
            f"memory {memory}; need at least {memory - 1}"
        )


def linear_transient(impulse_response, u: TimeSignal) -> np.ndarray:
    """Windowed-DFT transient of a linear FIR system.

    Returns T with DFT(y)[k] = H(k) U(k) + T(k), where
    T(k) = sum_t h*(t) exp(-2j pi k t / N) and
    h*(t) = sum_{n > t} h(n) f(t - n).  A memoryless response has no
    transient.  This case is exact as written: no synthesis step is involved,
    so no 1/N appears.
    """
    h = np.asarray(impulse_response, dtype=float)
    if h.ndim != 1 or h.size < 1:
        raise DimensionError("impulse response must be a nonempty vector")
    memory = h.size
    _check_pre_history(u, memory)
    n = u.n_window
    f = difference_signal(u)
    h_star = np.zeros(max(memory - 1, 1))
    for t in range(memory - 1):
        taps = np.arange(t + 1, memory)
        h_star[t] = h[taps] @ f[t - taps + u.n_pre]
    t_axis = np.arange(h_star.size)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, t_axis) / n) @ h_star


def _collapse(freq_matrix: np.ndarray) -> np.ndarray:
    """out[k] = sum_{k1} M[k1, (k - k1) mod N] for an N x N frequency matrix."""
    n = freq_matrix.shape[0]
    k1 = np.arange(n)
    out = np.empty(n, dtype=complex)
    for k in range(n):
        out[k] = freq_matrix[k1, (k - k1) % n].sum()
    return out


def steady_state_spectrum(kernel: VolterraKernel, input_spectrum: Spectrum) -> np.ndarray:
    """Windowed DFT of the periodic second-order response.

    SS(k) = (1/N) sum_{k1} H(k1, k-k1) U(k1) U(k-k1), indices modulo N, with
    H the zero-padded transfer tensor of the kernel.  Matches
    ``dft(simulate_steady_state(...))`` exactly up to rounding.
    """
    _check_second_order(kernel)
    n = input_spectrum.n_points
    h = apply_mdft(kernel, n)
    u = input_spectrum.bins
    return _collapse(h * np.outer(u, u)) / n


def _fold_mod(surface: np.ndarray, n: int) -> np.ndarray:
    """Wrap a (rows, cols) surface into an N x N grid modulo N on both axes."""
    out = np.zeros((n, n))
    rows, cols = surface.shape
    tp = np.repeat(np.arange(rows) % n, cols)
    tpp = np.tile(np.arange(cols) % n, rows)
    np.add.at(out, (tp, tpp), surface.ravel())
    return out


@dataclass(frozen=True)
class TransientDecomposition:
    """SS plus the three transient terms of one second-order response."""

    kernel: VolterraKernel
    n_points: int
    ss: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    t3: np.ndarray
    h_star_1: np.ndarray
    h_star_2: np.ndarray
    h_star_3: np.ndarray

    @property
    def transient_total(self) -> np.ndarray:
        return self.t1 + self.t2 + self.t3

    @property
    def total(self) -> np.ndarray:
        return self.ss + self.transient_total


def transient_terms(kernel: VolterraKernel, u: TimeSignal) -> TransientDecomposition:
    """Compute SS, T1, T2, T3 and the three finite-support surfaces.

    The surfaces have provably bounded support.  With kernel memory n:

    * h*_1(t', t'') needs a kernel lag tau_1 in [t'+1-N, t'] (window factor)
      and tau_2 > t'' (difference factor), so it vanishes outside
      t' < N + n - 1, t'' < n - 1;
    * h*_2 is the mirror image (t' < n - 1, t'' < N + n - 1);
    * h*_3 uses the difference signal on both axes, so both t', t'' < n - 1.

    All lag sums truncate at the kernel memory, making every term finite and
    the decomposition identity exact for FIR kernels.
    """
    _check_second_order(kernel)
    n_mem = kernel.memory
    _check_pre_history(u, n_mem)
    n = u.n_window
    w = u.window
    f = difference_signal(u)
    h2 = kernel.values
    width = max(n_mem - 1, 0)

    def f_at(times: np.ndarray) -> np.ndarray:
        return f[times + u.n_pre]

    # h*_1: window factor on axis 1, difference factor on axis 2
    h1 = np.zeros((n + width, width))
    for tp in range(n + width):
        lo = max(0, tp + 1 - n)
        hi = min(tp, n_mem - 1)
        tau1 = np.arange(lo, hi + 1)
        u_vec = w[tp - tau1]
        for tpp in range(width):
            tau2 = np.arange(tpp + 1, n_mem)
            h1[tp, tpp] = u_vec @ h2[lo : hi + 1, tpp + 1 : n_mem] @ f_at(tpp - tau2)

    # h*_2: difference factor on axis 1, window factor on axis 2
    h2s = np.zeros((width, n + width))
    for tpp in range(n + width):
        lo = max(0, tpp + 1 - n)
        hi = min(tpp, n_mem - 1)
        tau2 = np.arange(lo, hi + 1)
        u_vec = w[tpp - tau2]
        for tp in range(width):
            tau1 = np.arange(tp + 1, n_mem)
            h2s[tp, tpp] = f_at(tp - tau1) @ h2[tp + 1 : n_mem, lo : hi + 1] @ u_vec

    # h*_3: difference factor on both axes
    h3 = np.zeros((width, width))
    for tp in range(width):
        tau1 = np.arange(tp + 1, n_mem)
        fv1 = f_at(tp - tau1)
        for tpp in range(width):
            tau2 = np.arange(tpp + 1, n_mem)
            h3[tp, tpp] = fv1 @ h2[tp + 1 : n_mem, tpp + 1 : n_mem] @ f_at(tpp - tau2)

    def collapse_surface(surface: np.ndarray) -> np.ndarray:
        if surface.size == 0:
            return np.zeros(n, dtype=complex)
        return _collapse(np.fft.fft2(_fold_mod(surface, n))) / n

    u_bins = np.fft.fft(w)
    h_full = apply_mdft(kernel, n)
    ss = _collapse(h_full * np.outer(u_bins, u_bins)) / n
    return TransientDecomposition(
        kernel=kernel,
        n_points=n,
        ss=ss,
        t1=collapse_surface(h1),
        t2=collapse_surface(h2s),
        t3=collapse_surface(h3),
        h_star_1=h1,
        h_star_2=h2s,
        h_star_3=h3,
    )


@dataclass(frozen=True)
class T1T2Report:
    max_deviation: float
    tolerance: float
    passed: bool


def verify_t1_equals_t2(decomposition: TransientDecomposition, tolerance: float = 1e-9) -> T1T2Report:
    """Check the T1 == T2 identity for a symmetric kernel.

    Deviation is measured as max |T1 - T2| over bins, relative to the larger
    of the two term magnitudes (0 when both vanish, e.g. periodic
    pre-history).  Asymmetric kernels are rejected: the identity only holds
    for kernels invariant under index permutation.
    """
    if not decomposition.kernel.is_symmetric():
        raise SpecError("T1 == T2 requires a permutation-symmetric kernel")
    t1, t2 = decomposition.t1, decomposition.t2
    scale = max(float(np.max(np.abs(t1))), float(np.max(np.abs(t2))))
    dev = float(np.max(np.abs(t1 - t2)))
    rel = 0.0 if scale == 0.0 else dev / scale
    return T1T2Report(max_deviation=rel, tolerance=tolerance, passed=rel < tolerance)


@dataclass(frozen=True)
class HammersteinTerms:
    """Extra split available when the kernel is diagonal (square-then-filter).

    ``r_term`` collects the pre-history cross terms; it vanishes identically
    under zero initial conditions.  ``q_term`` is the window cross term and is
    analytically zero for any input: each (t', t'') pair it sums over has
    0 < |t' - t''| < N, so the inner geometric sum over bins cancels exactly.
    Together they give T1 = -T3 + q_term + r_term, hence the diagonal-kernel
    identity Y = SS - T3 + 2 r_term.
    """

    r_term: np.ndarray
    q_term: np.ndarray


def hammerstein_terms(kernel: VolterraKernel, u: TimeSignal) -> HammersteinTerms:
    """Compute the diagonal-kernel cross terms R and Q.

    R(k) = (1/N) sum_{k1} sum_tau d(tau) e^{-j w_k tau}
           [sum_{t'=-tau}^{-1} u(t') e^{-j w_{k1} t'}]
           [sum_{t''=-tau}^{-1} f(t'') e^{-j w_{k-k1} t''}]

    Q(k) is identical with the first bracket replaced by the window partial
    sum over t' = 0 .. N-tau-1.  Requires a strictly diagonal kernel.
    """
    _check_second_order(kernel)
    d = np.diag(kernel.values).copy()
    if float(np.max(np.abs(kernel.values - np.diag(d)))) != 0.0:
        raise SpecError("cross terms require a strictly diagonal kernel")
    n_mem = kernel.memory
    _check_pre_history(u, n_mem)
    n = u.n_window
    w = u.window
    f = difference_signal(u)
    k = np.arange(n)
    r = np.zeros(n, dtype=complex)
    q = np.zeros(n, dtype=complex)
    for tau in range(n_mem):
        if d[tau] == 0.0:
            continue
        ts_pre = np.arange(-tau, 0)
        phases_pre = np.exp(-2j * np.pi * np.outer(k, ts_pre) / n)
        u_hat = phases_pre @ u.samples[ts_pre + u.n_pre] if tau else np.zeros(n, complex)
        f_hat = phases_pre @ f[ts_pre + u.n_pre] if tau else np.zeros(n, complex)
        ts_win = np.arange(0, n - tau)
        w_hat = np.exp(-2j * np.pi * np.outer(k, ts_win) / n) @ w[ts_win]
        shift = d[tau] * np.exp(-2j * np.pi * k * tau / n)
        r += shift * _collapse(np.outer(u_hat, f_hat))
        q += shift * _collapse(np.outer(w_hat, f_hat))
    return HammersteinTerms(r_term=r / n, q_term=q / n)

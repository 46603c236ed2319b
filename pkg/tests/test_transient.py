import numpy as np
import pytest

from gfrf.errors import SpecError
from gfrf.signals import Spectrum, TimeSignal, dft
from gfrf.transient import (
    difference_signal,
    hammerstein_terms,
    linear_transient,
    steady_state_spectrum,
    transient_terms,
    verify_t1_equals_t2,
)
from gfrf.verify import decomposition_case
from gfrf.volterra import (
    VolterraKernel,
    simulate_steady_state,
    simulate_with_history,
    symmetrize,
)


def _periodic_signal(window, n_pre):
    n = window.size
    pre = np.array([window[(i - n_pre) % n] for i in range(n_pre)])
    return TimeSignal(np.concatenate([pre, window]), n_pre=n_pre)


# ---------------------------------------------------------------------------
# difference signal


def test_difference_signal_zero_for_periodic_history():
    rng = np.random.default_rng(0)
    u = _periodic_signal(rng.normal(size=9), 5)
    assert np.array_equal(difference_signal(u), np.zeros(5))


def test_difference_signal_formula():
    window = np.array([1.0, 2.0, 3.0, 4.0])
    pre = np.array([10.0, 20.0])
    u = TimeSignal(np.concatenate([pre, window]), n_pre=2)
    # f(t) = u(t) - u(t + 4) for t = -2, -1
    assert np.array_equal(difference_signal(u), [10.0 - 3.0, 20.0 - 4.0])
    assert difference_signal(TimeSignal(window)).size == 0


# ---------------------------------------------------------------------------
# linear transient


def test_linear_transient_closes_the_windowed_dft():
    rng = np.random.default_rng(1)
    h = rng.normal(size=5)
    n = 16
    u = TimeSignal(rng.normal(size=n + 4), n_pre=4)
    y = np.array(
        [sum(h[tau] * u.value_at(t - tau) for tau in range(5)) for t in range(n)]
    )
    y_bins = np.fft.fft(y)
    h_freq = np.fft.fft(h, n)
    u_bins = dft(u).bins
    t_bins = linear_transient(h, u)
    assert np.max(np.abs(y_bins - (h_freq * u_bins + t_bins))) <= 1e-9 * np.max(
        np.abs(y_bins)
    )


def test_linear_transient_vanishes_without_memory_or_mismatch():
    u = TimeSignal(np.arange(1.0, 9.0))
    assert np.array_equal(linear_transient([2.5], u), np.zeros(8, dtype=complex))
    rng = np.random.default_rng(2)
    per = _periodic_signal(rng.normal(size=8), 3)
    assert np.max(np.abs(linear_transient(rng.normal(size=4), per))) == 0.0


def test_linear_transient_needs_history():
    with pytest.raises(SpecError):
        linear_transient(np.ones(3), TimeSignal(np.ones(8), n_pre=1))


# ---------------------------------------------------------------------------
# steady-state spectrum


def test_steady_state_matches_periodic_simulation():
    for i in range(5):
        kernel, u = decomposition_case(i, seed=3)
        w = TimeSignal(u.window)
        expected = dft(simulate_steady_state([kernel], w)).bins
        got = steady_state_spectrum(kernel, dft(w))
        assert np.max(np.abs(got - expected)) <= 1e-9 * max(
            1.0, float(np.max(np.abs(expected)))
        )


def test_steady_state_requires_second_order():
    with pytest.raises(SpecError):
        steady_state_spectrum(
            VolterraKernel(1, 2, np.ones(2)), Spectrum(np.ones(8, dtype=complex))
        )


# ---------------------------------------------------------------------------
# full decomposition


def test_decomposition_identity_on_mixed_cases():
    for i in range(8):
        kernel, u = decomposition_case(i, seed=11)
        dec = transient_terms(kernel, u)
        y = dft(simulate_with_history([kernel], u)).bins
        assert np.max(np.abs(dec.total - y)) <= 1e-9 * float(np.max(np.abs(y)))


def test_decomposition_surface_supports():
    rng = np.random.default_rng(5)
    kernel = symmetrize(VolterraKernel(2, 3, rng.normal(size=(3, 3))))
    u = TimeSignal(rng.normal(size=8 + 2), n_pre=2)
    dec = transient_terms(kernel, u)
    assert dec.h_star_1.shape == (10, 2)
    assert dec.h_star_2.shape == (2, 10)
    assert dec.h_star_3.shape == (2, 2)


def test_decomposition_transient_zero_for_periodic_history():
    rng = np.random.default_rng(6)
    kernel = symmetrize(VolterraKernel(2, 4, rng.normal(size=(4, 4))))
    u = _periodic_signal(rng.normal(size=12), 3)
    dec = transient_terms(kernel, u)
    assert np.max(np.abs(dec.transient_total)) == 0.0
    assert np.max(np.abs(dec.t1)) == 0.0
    assert np.max(np.abs(dec.t2)) == 0.0
    assert np.max(np.abs(dec.t3)) == 0.0


def test_decomposition_requirements():
    kernel = VolterraKernel(2, 4, np.zeros((4, 4)))
    with pytest.raises(SpecError):
        transient_terms(kernel, TimeSignal(np.ones(10), n_pre=2))
    with pytest.raises(SpecError):
        transient_terms(VolterraKernel(1, 2, np.ones(2)), TimeSignal(np.ones(8), n_pre=1))


def test_memoryless_square_has_no_transient():
    rng = np.random.default_rng(7)
    kernel = VolterraKernel(2, 1, np.array([[1.5]]))
    u = TimeSignal(rng.normal(size=8))
    dec = transient_terms(kernel, u)
    assert np.max(np.abs(dec.transient_total)) == 0.0
    y = dft(simulate_with_history([kernel], u)).bins
    assert np.max(np.abs(dec.ss - y)) <= 1e-9 * float(np.max(np.abs(y)))


def test_t1_equals_t2_needs_symmetric_kernel():
    values = np.array([[0.0, 1.0], [0.0, 0.0]])
    kernel = VolterraKernel(2, 2, values)
    u = TimeSignal(np.arange(1.0, 10.0), n_pre=1)
    dec = transient_terms(kernel, u)
    with pytest.raises(SpecError):
        verify_t1_equals_t2(dec)
    report = verify_t1_equals_t2(transient_terms(symmetrize(kernel), u))
    assert report.passed


# ---------------------------------------------------------------------------
# diagonal-kernel identities


def _diagonal_case(seed, zero_history):
    rng = np.random.default_rng(seed)
    mem = 4
    kernel = VolterraKernel(2, mem, np.diag(rng.normal(size=mem)))
    window = rng.normal(size=11)
    pre = np.zeros(mem - 1) if zero_history else rng.normal(size=mem - 1)
    return kernel, TimeSignal(np.concatenate([pre, window]), n_pre=mem - 1)


def test_diagonal_identities_zero_history():
    kernel, u = _diagonal_case(8, zero_history=True)
    terms = hammerstein_terms(kernel, u)
    dec = transient_terms(kernel, u)
    y = dft(simulate_with_history([kernel], u)).bins
    assert np.max(np.abs(terms.r_term)) == 0.0
    scale = float(np.max(np.abs(y)))
    assert np.max(np.abs(dec.ss - dec.t3 - y)) <= 1e-9 * scale
    t1_scale = max(float(np.max(np.abs(dec.t1))), 1e-300)
    assert np.max(np.abs(dec.t1 + dec.t3)) <= 1e-9 * t1_scale


def test_diagonal_identities_general_history():
    kernel, u = _diagonal_case(9, zero_history=False)
    terms = hammerstein_terms(kernel, u)
    dec = transient_terms(kernel, u)
    y = dft(simulate_with_history([kernel], u)).bins
    predicted = dec.ss - dec.t3 + 2.0 * terms.r_term
    assert np.max(np.abs(predicted - y)) <= 1e-9 * float(np.max(np.abs(y)))
    ss_scale = float(np.max(np.abs(dec.ss)))
    assert np.max(np.abs(terms.q_term)) <= 1e-9 * ss_scale


def test_diagonal_terms_reject_off_diagonal_kernels():
    kernel = VolterraKernel(2, 2, np.ones((2, 2)))
    with pytest.raises(SpecError):
        hammerstein_terms(kernel, TimeSignal(np.ones(9), n_pre=1))


def test_diagonal_transient_equals_linear_transient_of_square():
    # squaring first turns the diagonal kernel into a linear FIR on u**2
    kernel, u = _diagonal_case(10, zero_history=False)
    d = np.diag(kernel.values)
    v = TimeSignal(u.samples**2, n_pre=u.n_pre)
    dec = transient_terms(kernel, u)
    t_linear = linear_transient(d, v)
    scale = max(float(np.max(np.abs(t_linear))), 1e-300)
    assert np.max(np.abs(dec.transient_total - t_linear)) <= 1e-9 * scale

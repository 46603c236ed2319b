"""Seeded self-checks for the analytic identities the package relies on.

Each check draws randomized cases from a fixed seed, measures the worst
deviation of an identity that should hold exactly (up to rounding), and
reports it against a tolerance.  The CLI ``verify`` subcommand and the
acceptance tests both run these, so the numbers printed in either place are
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import (
    DcHyperparameters,
    OrderHyper,
    build_time_prior,
    hermitian_deviation,
    min_eigenvalue_ratio,
    to_frequency_domain,
)
from .estimator import (
    build_problem,
    map_estimate,
    output_covariance,
    sigma_tot,
)
from .signals import (
    MultisineSpec,
    TimeSignal,
    dft,
    frequency_grid,
    generate_multisine,
)
from .transient import hammerstein_terms, transient_terms, verify_t1_equals_t2
from .volterra import VolterraKernel, simulate_steady_state, simulate_with_history, symmetrize

__all__ = [
    "CheckResult",
    "decomposition_case",
    "check_decomposition",
    "check_t1_t2",
    "check_hammerstein",
    "check_covariances",
    "check_model_consistency",
    "check_map_closure",
    "run_all",
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    n_cases: int
    max_deviation: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.name}: max deviation {self.max_deviation:.3e} "
            f"(tolerance {self.tolerance:.1e}, {self.n_cases} cases)"
        )


def _result(name, n_cases, deviation, tolerance) -> CheckResult:
    deviation = float(deviation)
    return CheckResult(name, n_cases, deviation, tolerance, deviation <= tolerance)


def _rel_inf(a: np.ndarray, b: np.ndarray) -> float:
    """max |a - b| relative to max |b| (absolute when b vanishes)."""
    dev = float(np.max(np.abs(a - b)))
    scale = float(np.max(np.abs(b)))
    return dev / scale if scale > 0 else dev


def decomposition_case(index: int, seed: int = 0):
    """Randomized second-order setup: symmetric kernel plus windowed input.

    Even-numbered cases use all-zero pre-history, odd-numbered ones a random
    pre-history, so both transient regimes are exercised.
    """
    rng = np.random.default_rng(100003 * seed + index)
    n = int(rng.integers(8, 33))
    memory = int(rng.integers(2, 9))
    kernel = symmetrize(VolterraKernel(2, memory, rng.normal(size=(memory, memory))))
    window = rng.normal(size=n)
    if index % 2 == 0:
        pre = np.zeros(memory - 1)
    else:
        pre = rng.normal(size=memory - 1)
    u = TimeSignal(np.concatenate([pre, window]), n_pre=memory - 1)
    return kernel, u


def check_decomposition(n_cases: int = 50, seed: int = 0) -> CheckResult:
    """Windowed DFT of the simulated output equals SS + T1 + T2 + T3."""
    worst = 0.0
    for i in range(n_cases):
        kernel, u = decomposition_case(i, seed)
        y = dft(simulate_with_history([kernel], u)).bins
        dec = transient_terms(kernel, u)
        worst = max(worst, _rel_inf(dec.total, y))
    return _result("output spectrum equals SS + T1 + T2 + T3", n_cases, worst, 1e-9)


def check_t1_t2(n_cases: int = 50, seed: int = 0) -> CheckResult:
    """T1 equals T2 on the symmetric-kernel decomposition cases."""
    worst = 0.0
    for i in range(n_cases):
        kernel, u = decomposition_case(i, seed)
        report = verify_t1_equals_t2(transient_terms(kernel, u))
        worst = max(worst, report.max_deviation)
    return _result("symmetric kernels give T1 == T2", n_cases, worst, 1e-9)


def _hammerstein_case(index: int, seed: int, zero_history: bool):
    rng = np.random.default_rng(500009 * seed + index)
    n = int(rng.integers(8, 33))
    memory = int(rng.integers(2, 9))
    kernel = VolterraKernel(2, memory, np.diag(rng.normal(size=memory)))
    window = rng.normal(size=n)
    pre = np.zeros(memory - 1) if zero_history else rng.normal(size=memory - 1)
    u = TimeSignal(np.concatenate([pre, window]), n_pre=memory - 1)
    return kernel, u


def check_hammerstein(n_cases: int = 20, seed: int = 0) -> list[CheckResult]:
    """Diagonal-kernel cross-term identities, in both pre-history regimes.

    Checks, in order: the window cross term Q vanishes for any input; zero
    pre-history forces the cross term R to exact (bitwise) zero and the
    output identity Y = SS - T3, equivalently T1 = -T3; with arbitrary
    pre-history the identity becomes Y = SS - T3 + 2R.
    """
    q_worst = 0.0
    r_exact = 0.0
    zero_identity = 0.0
    t1_vs_t3 = 0.0
    general_identity = 0.0
    for i in range(n_cases):
        for zero_history in (True, False):
            kernel, u = _hammerstein_case(i, seed, zero_history)
            terms = hammerstein_terms(kernel, u)
            dec = transient_terms(kernel, u)
            y = dft(simulate_with_history([kernel], u)).bins
            ss_scale = max(float(np.max(np.abs(dec.ss))), 1e-300)
            q_worst = max(q_worst, float(np.max(np.abs(terms.q_term))) / ss_scale)
            if zero_history:
                r_exact = max(r_exact, float(np.max(np.abs(terms.r_term))))
                zero_identity = max(zero_identity, _rel_inf(dec.ss - dec.t3, y))
                t1_vs_t3 = max(t1_vs_t3, _rel_inf(dec.t1, -dec.t3))
            else:
                predicted = dec.ss - dec.t3 + 2.0 * terms.r_term
                general_identity = max(general_identity, _rel_inf(predicted, y))
    return [
        _result("diagonal kernels: window cross term Q vanishes", 2 * n_cases, q_worst, 1e-9),
        _result("zero pre-history: cross term R is exactly zero", n_cases, r_exact, 0.0),
        _result("zero pre-history: Y equals SS - T3", n_cases, zero_identity, 1e-9),
        _result("zero pre-history: T1 equals -T3", n_cases, t1_vs_t3, 1e-9),
        _result("general pre-history: Y equals SS - T3 + 2R", n_cases, general_identity, 1e-9),
    ]


def _toy_scenario(seed: int, n_points: int = 16, tones=(1, 2, 3), noise: float = 1e-4):
    """Small two-order estimation problem driven by a simulated system."""
    rng = np.random.default_rng(900007 * (seed + 1))
    grid = frequency_grid(n_points, tones, 2)
    memories = {1: 4, 2: 3}
    h1 = VolterraKernel(1, memories[1], rng.normal(size=memories[1]))
    h2 = symmetrize(
        VolterraKernel(2, memories[2], rng.normal(size=(memories[2], memories[2])))
    )
    u = generate_multisine(MultisineSpec(n_points, tuple(tones), 1.0, seed=seed))
    y = simulate_steady_state([h1, h2], u)
    problem = build_problem(grid, dft(y), dft(u), memories, noise_variance=noise)
    return problem, (h1, h2), u


def _hyper_cases(seed: int) -> list[DcHyperparameters]:
    rng = np.random.default_rng(3 * seed + 7)
    cases = [DcHyperparameters.default([1, 2])]
    for _ in range(4):
        orders = {}
        for m in (1, 2):
            scale = float(np.exp(rng.normal(0.0, 1.0)))
            decay = tuple(float(rng.uniform(0.05, 1.0)) for _ in range(m))
            corr = tuple(float(rng.uniform(-0.999, 0.999)) for _ in range(m))
            orders[m] = OrderHyper(scale, decay, corr)
        cases.append(DcHyperparameters(orders, float(rng.uniform(0.0, 0.1))))
    return cases


def check_covariances(seed: int = 0) -> list[CheckResult]:
    """Every constructed covariance is (conjugate-)symmetric and PSD.

    Sweeps time-domain priors, their frequency-domain augmented blocks, the
    block-diagonal total prior, and the output covariance across randomized
    hyperparameters.  Symmetry is checked to 1e-12 relative, eigenvalues to
    a -1e-10 relative floor.
    """
    problem, _, _ = _toy_scenario(seed)
    herm_worst = 0.0
    eig_worst = 0.0
    n_matrices = 0

    def record(matrix):
        nonlocal herm_worst, eig_worst, n_matrices
        herm_worst = max(herm_worst, hermitian_deviation(matrix))
        eig_worst = max(eig_worst, -min(min_eigenvalue_ratio(matrix), 0.0))
        n_matrices += 1

    for hyper in _hyper_cases(seed):
        for basis in problem.bases:
            prior = build_time_prior(basis.order, basis.memory, hyper.orders[basis.order])
            record(prior.matrix)
            block = to_frequency_domain(prior, basis.transform)
            record(block.hermitian)
            record(block.augmented())
        record(sigma_tot(problem, hyper))
        record(output_covariance(problem, hyper))
    return [
        _result("covariances are conjugate-symmetric", n_matrices, herm_worst, 1e-12),
        _result("covariances are positive semidefinite", n_matrices, eig_worst, 1e-10),
    ]


def _unique_lag_values(kernel: VolterraKernel, basis) -> np.ndarray:
    reps = basis.lag_reduction.representatives
    return np.array([kernel.values[rep] for rep in reps], dtype=float)


def predicted_bins(problem, kernels_by_order: dict[int, VolterraKernel]) -> np.ndarray:
    """Model-side output bins A [theta; conj theta] for known kernels."""
    theta_aug = []
    for basis in problem.bases:
        theta = basis.transform @ _unique_lag_values(kernels_by_order[basis.order], basis)
        theta_aug.extend([theta, theta.conj()])
    stacked = np.concatenate(theta_aug)
    full = problem.regressor.augmented() @ stacked
    return full[: problem.grid.n_output_bins]


def check_model_consistency(n_cases: int = 8, seed: int = 0) -> CheckResult:
    """Frequency-domain model matches time-domain simulation bin for bin.

    For random kernels and multisines, the regressor applied to the exact
    reduced coefficients must reproduce the measured excited bins: the tone
    bound on the excitation keeps every order-sum inside (-N/2, N/2), so no
    aliasing correction is needed.
    """
    worst = 0.0
    for i in range(n_cases):
        n_points = int(np.random.default_rng(7 * seed + i).integers(14, 25))
        problem, (h1, h2), _ = _toy_scenario(seed + i, n_points=n_points)
        pred = predicted_bins(problem, {1: h1, 2: h2})
        worst = max(worst, _rel_inf(pred, problem.output_bins))
    return _result("regressor model matches simulation", n_cases, worst, 1e-8)


def check_map_closure(seed: int = 0) -> CheckResult:
    """The posterior mean respects conjugate pairing of coefficients.

    The eliminated half of each coefficient vector must come out as the
    conjugate of the kept half, and the expanded tensor must map negated
    index tuples to conjugate values.
    """
    problem, _, _ = _toy_scenario(seed)
    hyper = DcHyperparameters.default(problem.orders, noise_variance=1e-4)
    estimate = map_estimate(problem, hyper)
    worst = float(estimate.diagnostics["conjugate_deviation"])
    for basis in problem.bases:
        tensor = estimate.expanded(basis)
        grid = list(basis.frequency_reduction.grid)
        pos = {v: i for i, v in enumerate(grid)}
        neg = np.array([pos[-v] for v in grid])
        flipped = tensor[np.ix_(*([neg] * basis.order))].conj()
        scale = max(float(np.max(np.abs(tensor))), 1e-300)
        worst = max(worst, float(np.max(np.abs(tensor - flipped))) / scale)
    return _result("posterior mean closes under conjugation", 1, worst, 1e-8)


def run_all(seed: int = 0, fast: bool = False) -> list[CheckResult]:
    """Run every check suite; ``fast`` shrinks case counts for smoke tests."""
    n_dec = 10 if fast else 50
    n_ham = 6 if fast else 20
    n_mod = 3 if fast else 8
    results = [
        check_decomposition(n_dec, seed),
        check_t1_t2(n_dec, seed),
        *check_hammerstein(n_ham, seed),
        *check_covariances(seed),
        check_model_consistency(n_mod, seed),
        check_map_closure(seed),
    ]
    return results

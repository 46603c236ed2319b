"""Regularized frequency-domain estimation of Volterra transfer coefficients.

The measured output bins on the excited grid are modeled per order m as a
hyperplane sum of transfer coefficients weighted by input-bin products.  With
the coefficient vector stacked on top of its conjugate (so that widely-linear
statistics stay exact), the data covariance is

    Sigma_Y = A Sigma_tot A^H + sigma_v^2 I,

with A the augmented regressor and Sigma_tot the block-diagonal stack of
per-order augmented priors.  The posterior-mean estimate is

    estimate = Sigma_tot A^H Sigma_Y^{-1} y_aug,

computed through one PSD Cholesky factorization per call; explicit inverses
are never formed.

Convention note: with the package's unnormalized forward DFT, an order-m
hyperplane sum acquires a factor N**(1-m) when expressed against measured
output bins, and that factor is folded into the order-m regressor columns.
This keeps ``A @ coefficients`` directly comparable to ``dft(simulated
output)`` on the excited bins.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.special

from .covariance import (
    NOISE_FLOOR_FACTOR,
    AugmentedCovariance,
    DcHyperparameters,
    assemble_sigma_tot,
    build_time_prior,
    psd_cholesky,
    to_frequency_domain,
)
from .errors import DimensionError, NumericalError, SpecError
from .mdft import (
    SymmetryReduction,
    apply_mdft,
    build_symmetry_reduction,
    expand_unique,
    reduced_fourier,
)
from .signals import FrequencyGrid, Spectrum
from .volterra import VolterraKernel

__all__ = [
    "OrderBasis",
    "Regressor",
    "EstimationProblem",
    "GfrfEstimate",
    "TuningResult",
    "build_order_basis",
    "build_regressor",
    "build_problem",
    "sigma_tot",
    "output_covariance",
    "map_estimate",
    "map_estimate_time_domain",
    "negative_log_marginal_likelihood",
    "tune_hyperparameters",
    "kernel_gfrf_on_grid",
    "relative_gfrf_error",
]

_PENALTY = 1e30


@dataclass(frozen=True)
class OrderBasis:
    """Per-order index machinery: reductions plus the reduced Fourier map.

    ``transform`` has one row per kept frequency representative and one
    column per unique lag entry, so it carries time-domain priors onto the
    estimated coefficient vector.
    """

    order: int
    memory: int
    frequency_reduction: SymmetryReduction
    lag_reduction: SymmetryReduction
    transform: np.ndarray

    @property
    def n_parameters(self) -> int:
        return self.frequency_reduction.n_parameters


def build_order_basis(order: int, memory: int, grid: FrequencyGrid) -> OrderBasis:
    freq = build_symmetry_reduction(order, grid.omega_set)
    lag = build_symmetry_reduction(order, range(int(memory)))
    transform = reduced_fourier(grid.n_points, freq, lag, kept_rows_only=True)
    return OrderBasis(int(order), int(memory), freq, lag, transform)


@dataclass(frozen=True)
class Regressor:
    """Per-order hyperplane-sum coefficient matrices on the excited output bins."""

    grid: FrequencyGrid
    orders: tuple[int, ...]
    blocks: dict[int, np.ndarray]

    @property
    def n_rows(self) -> int:
        return self.grid.n_output_bins

    def total_parameters(self) -> int:
        return sum(b.shape[1] for b in self.blocks.values())

    def concatenated(self) -> np.ndarray:
        return np.hstack([self.blocks[m] for m in self.orders])

    def augmented(self) -> np.ndarray:
        """Block regressor for the coefficient-plus-conjugate stacking.

        Column layout per order m: first the kept coefficients, then their
        conjugates; row layout: measured bins, then their conjugates.
        """
        r = self.n_rows
        cols = 2 * self.total_parameters()
        a = np.zeros((2 * r, cols), dtype=complex)
        off = 0
        for m in self.orders:
            phi = self.blocks[m]
            p = phi.shape[1]
            a[:r, off : off + p] = phi
            a[r:, off + p : off + 2 * p] = phi.conj()
            off += 2 * p
        return a


def build_regressor(
    input_spectrum: Spectrum, grid: FrequencyGrid, bases
) -> Regressor:
    """Assemble the per-order regressor blocks from the measured input bins.

    Entry (row k, kept representative R) accumulates prod_i U(k_i) over every
    ordered signed tuple that sorts to R and sums to k, then picks up the
    N**(1-m) convention factor.  The accumulation over orderings realizes the
    permutation multiplicity.  The input must be supported on the signed tone
    set only (other bins below 1e-8 of the peak).
    """
    n = grid.n_points
    if input_spectrum.n_points != n:
        raise DimensionError(
            f"spectrum has {input_spectrum.n_points} bins, grid expects {n}"
        )
    bins = input_spectrum.bins
    allowed = {s % n for s in grid.omega_set} | {0}
    peak = float(np.max(np.abs(bins)))
    for b in range(n):
        if b not in allowed and abs(bins[b]) > 1e-8 * max(peak, 1.0):
            raise SpecError(
                f"input energy at bin {b} which is outside the excited tone set"
            )
    row_of = {k: i for i, k in enumerate(grid.excited_output)}
    u_of = {s: input_spectrum.value_at(s) for s in grid.omega_set}
    blocks: dict[int, np.ndarray] = {}
    orders = tuple(sorted(b.order for b in bases))
    by_order = {b.order: b for b in bases}
    if len(by_order) != len(list(bases)):
        raise SpecError("duplicate order in bases")
    for m in orders:
        red = by_order[m].frequency_reduction
        pos = {v: i for i, v in enumerate(red.grid)}
        col = red.parameter_column()
        phi = np.zeros((grid.n_output_bins, red.n_parameters), dtype=complex)
        for combo in itertools.product(grid.omega_set, repeat=m):
            k = sum(combo)
            row = row_of.get(k)
            if row is None:
                continue
            flat = 0
            for d, v in enumerate(combo):
                flat += pos[v] * red.grid_size**d
            rep = int(red.full_to_representative[flat])
            coeff = 1.0 + 0.0j
            for v in combo:
                coeff *= u_of[v]
            phi[row, col[rep]] += coeff
        phi *= float(n) ** (1 - m)
        blocks[m] = phi
    return Regressor(grid, orders, blocks)


@dataclass
class EstimationProblem:
    """Everything fixed during hyperparameter tuning: data, regressor, bases."""

    grid: FrequencyGrid
    bases: tuple[OrderBasis, ...]
    regressor: Regressor
    output_bins: np.ndarray
    noise_variance: float = 0.0

    def __post_init__(self):
        self.output_bins = np.asarray(self.output_bins, dtype=complex)
        if self.output_bins.shape != (self.grid.n_output_bins,):
            raise DimensionError(
                f"need {self.grid.n_output_bins} measured bins, "
                f"got {self.output_bins.shape}"
            )
        if not self.noise_variance >= 0:
            raise SpecError("noise variance must be >= 0")
        if tuple(sorted(b.order for b in self.bases)) != self.regressor.orders:
            raise DimensionError("bases and regressor disagree on the orders")

    @property
    def orders(self) -> tuple[int, ...]:
        return self.regressor.orders

    def y_augmented(self) -> np.ndarray:
        return np.concatenate([self.output_bins, self.output_bins.conj()])


def build_problem(
    grid: FrequencyGrid,
    output_spectrum: Spectrum,
    input_spectrum: Spectrum,
    memories: dict[int, int],
    noise_variance: float = 0.0,
) -> EstimationProblem:
    """Convenience assembly from measured spectra and per-order memory sizes."""
    bases = tuple(
        build_order_basis(m, memories[m], grid) for m in sorted(memories)
    )
    regressor = build_regressor(input_spectrum, grid, bases)
    y = np.array([output_spectrum.value_at(k) for k in grid.excited_output])
    return EstimationProblem(grid, bases, regressor, y, noise_variance)


def _priors(problem: EstimationProblem, hyper: DcHyperparameters):
    missing = [m for m in problem.orders if m not in hyper.orders]
    if missing:
        raise SpecError(f"hyperparameters missing for orders {missing}")
    out = []
    for basis in problem.bases:
        prior = build_time_prior(basis.order, basis.memory, hyper.orders[basis.order])
        out.append((basis, prior))
    return out


def sigma_tot(problem: EstimationProblem, hyper: DcHyperparameters) -> np.ndarray:
    """Block-diagonal augmented prior covariance of all estimated coefficients."""
    blocks = [
        to_frequency_domain(prior, basis.transform)
        for basis, prior in _priors(problem, hyper)
    ]
    return assemble_sigma_tot(blocks)


def _noise_level(problem: EstimationProblem, signal_cov: np.ndarray, hyper) -> float:
    """Noise variance floored against the mean modeled signal power."""
    floor = NOISE_FLOOR_FACTOR * float(np.mean(np.diag(signal_cov).real))
    return max(float(hyper.noise_variance), floor)


def _sigma_y(problem: EstimationProblem, hyper: DcHyperparameters):
    a = problem.regressor.augmented()
    s_tot = sigma_tot(problem, hyper)
    signal = a @ s_tot @ a.conj().T
    signal = 0.5 * (signal + signal.conj().T)
    noise = _noise_level(problem, signal, hyper)
    return signal + noise * np.eye(signal.shape[0]), noise, a, s_tot


def output_covariance(
    problem: EstimationProblem, hyper: DcHyperparameters
) -> np.ndarray:
    """Covariance of the measured bins stacked with their conjugates."""
    sig, _, _, _ = _sigma_y(problem, hyper)
    return sig


@dataclass
class GfrfEstimate:
    """Posterior-mean coefficients per order plus solve diagnostics."""

    orders: tuple[int, ...]
    values: dict[int, np.ndarray]
    diagnostics: dict

    def expanded(self, basis: OrderBasis) -> np.ndarray:
        """Full tensor over the signed tone grid for one order."""
        return expand_unique(basis.frequency_reduction, self.values[basis.order])


def map_estimate(
    problem: EstimationProblem, hyper: DcHyperparameters
) -> GfrfEstimate:
    """Posterior mean Sigma_tot A^H Sigma_Y^{-1} y_aug via one factorization."""
    sig_y, noise, a, s_tot = _sigma_y(problem, hyper)
    y = problem.y_augmented()
    chol, jitter = psd_cholesky(sig_y)
    z = scipy.linalg.cho_solve((chol, True), y)
    full = s_tot @ (a.conj().T @ z)
    values: dict[int, np.ndarray] = {}
    conj_dev = 0.0
    off = 0
    for m in problem.orders:
        p = problem.regressor.blocks[m].shape[1]
        head = full[off : off + p]
        tail = full[off + p : off + 2 * p]
        scale = max(float(np.max(np.abs(head))), 1e-300)
        conj_dev = max(conj_dev, float(np.max(np.abs(tail - head.conj()))) / scale)
        values[m] = head
        off += 2 * p
    alpha = scipy.linalg.solve_triangular(chol, y, lower=True)
    objective = float(np.vdot(alpha, alpha).real) + 2.0 * float(
        np.sum(np.log(np.diag(chol).real))
    )
    residual = float(np.linalg.norm(y - a @ full))
    diagnostics = {
        "objective": objective,
        "residual_norm": residual,
        "jitter": jitter,
        "noise_level": noise,
        "conjugate_deviation": conj_dev,
        "n_parameters": problem.regressor.total_parameters(),
        "n_output_bins": problem.grid.n_output_bins,
    }
    return GfrfEstimate(problem.orders, values, diagnostics)


def map_estimate_time_domain(
    problem: EstimationProblem, hyper: DcHyperparameters
) -> dict[int, np.ndarray]:
    """Posterior-mean unique kernel entries per order (real vectors).

    Equivalent to the frequency-domain estimate: pushing the result through
    each basis transform reproduces :func:`map_estimate` exactly.
    """
    sig_y, _, a, _ = _sigma_y(problem, hyper)
    y = problem.y_augmented()
    chol, _ = psd_cholesky(sig_y)
    z = scipy.linalg.cho_solve((chol, True), y)
    r = problem.grid.n_output_bins
    out: dict[int, np.ndarray] = {}
    off = 0
    for basis, prior in _priors(problem, hyper):
        m = basis.order
        phi = problem.regressor.blocks[m]
        p = phi.shape[1]
        f = basis.transform
        # regressor columns act on F h and conj(F) h; collapse onto h
        phi_h = np.zeros((2 * r, f.shape[1]), dtype=complex)
        phi_h[:r] = phi @ f
        phi_h[r:] = phi.conj() @ f.conj()
        h = prior.matrix @ (phi_h.conj().T @ z)
        scale = max(float(np.max(np.abs(h))), 1e-300)
        if float(np.max(np.abs(h.imag))) > 1e-6 * scale:
            raise NumericalError("time-domain posterior mean came out complex")
        out[m] = h.real
        off += 2 * p
    return out


def negative_log_marginal_likelihood(
    problem: EstimationProblem, hyper: DcHyperparameters
) -> float:
    """y_aug^H Sigma_Y^{-1} y_aug + log det Sigma_Y from one factorization."""
    sig_y, _, _, _ = _sigma_y(problem, hyper)
    y = problem.y_augmented()
    chol, _ = psd_cholesky(sig_y)
    alpha = scipy.linalg.solve_triangular(chol, y, lower=True)
    return float(np.vdot(alpha, alpha).real) + 2.0 * float(
        np.sum(np.log(np.diag(chol).real))
    )


class _BudgetExhausted(Exception):
    pass


def _parameter_names(hyper: DcHyperparameters, free) -> list[str]:
    names = []
    for m, oh in hyper.orders.items():
        names.append(f"scale_{m}")
        for d in range(len(oh.decay)):
            names.append(f"decay_{m}_{d}")
        for d in range(len(oh.correlation)):
            names.append(f"corr_{m}_{d}")
    names.append("noise")
    if free is None:
        free_names = [n for n in names if n != "noise"]
        if hyper.noise_variance > 0:
            free_names.append("noise")
        return free_names
    free = list(free)
    unknown = sorted(set(free) - set(names))
    if unknown:
        raise SpecError(f"unknown tunable parameters {unknown}; known: {names}")
    if not free:
        raise SpecError("free parameter set must not be empty")
    return [n for n in names if n in free]


def _pack(hyper: DcHyperparameters, names) -> np.ndarray:
    z = []
    for name in names:
        if name == "noise":
            z.append(np.log(max(hyper.noise_variance, 1e-300)))
            continue
        kind, m, d = (name.split("_") + ["0"])[:3]
        oh = hyper.orders[int(m)]
        if kind == "scale":
            z.append(np.log(oh.scale))
        elif kind == "decay":
            lam = min(max(oh.decay[int(d)], 1e-12), 1.0 - 1e-12)
            z.append(np.log(lam / (1.0 - lam)))
        else:
            rho = np.clip(oh.correlation[int(d)], -1.0 + 1e-12, 1.0 - 1e-12)
            z.append(np.arctanh(rho))
    return np.array(z)


def _unpack(z, template: DcHyperparameters, names) -> DcHyperparameters:
    from .covariance import OrderHyper

    scale = {m: oh.scale for m, oh in template.orders.items()}
    decay = {m: list(oh.decay) for m, oh in template.orders.items()}
    corr = {m: list(oh.correlation) for m, oh in template.orders.items()}
    noise = template.noise_variance
    for name, v in zip(names, z):
        if name == "noise":
            noise = float(np.exp(v))
            continue
        kind, m, d = (name.split("_") + ["0"])[:3]
        m, d = int(m), int(d)
        if kind == "scale":
            scale[m] = float(np.exp(v))
        elif kind == "decay":
            decay[m][d] = float(scipy.special.expit(v))
        else:
            corr[m][d] = float(np.tanh(v))
    return DcHyperparameters(
        {
            m: OrderHyper(scale[m], tuple(decay[m]), tuple(corr[m]))
            for m in template.orders
        },
        noise,
    )


@dataclass
class TuningResult:
    hyper: DcHyperparameters
    objective: float
    n_evaluations: int
    trace: list
    start_objectives: list
    free_names: list


def tune_hyperparameters(
    problem: EstimationProblem,
    initial: DcHyperparameters,
    budget: int = 200,
    n_starts: int = 5,
    seed: int = 0,
    free=None,
    step: float = 0.7,
) -> TuningResult:
    """Multi-start simplex search over transformed hyperparameters.

    Coordinates are log scale, logit decay, atanh correlation, and log noise
    variance; the noise coordinate is only tuned when the initial value is
    positive (or when requested through ``free``).  Start 0 is the initial
    point itself, later starts are seeded Gaussian perturbations, and the
    total number of objective evaluations never exceeds ``budget``.  The
    returned objective is the minimum over every point actually evaluated,
    so it can never exceed the objective at ``initial``; ties go to the
    earliest evaluation.
    """
    budget = int(budget)
    n_starts = int(n_starts)
    if budget < 1:
        raise SpecError(f"budget must be >= 1, got {budget}")
    if n_starts < 1:
        raise SpecError(f"n_starts must be >= 1, got {n_starts}")
    names = _parameter_names(initial, free)
    z0 = _pack(initial, names)
    rng = np.random.default_rng(seed)
    state = {"evals": 0}
    trace: list[float] = []
    candidates: list[tuple[float, int, DcHyperparameters]] = []

    def objective(z):
        if state["evals"] >= budget:
            raise _BudgetExhausted
        state["evals"] += 1
        try:
            hyper = _unpack(z, initial, names)
            value = negative_log_marginal_likelihood(problem, hyper)
            if not np.isfinite(value):
                value = _PENALTY
        except (SpecError, NumericalError, FloatingPointError):
            value = _PENALTY
            hyper = None
        trace.append(float(value))
        if hyper is not None:
            candidates.append((float(value), state["evals"] - 1, hyper))
        return value

    per_start = max(1, budget // n_starts)
    start_objectives = []
    for s in range(n_starts):
        if state["evals"] >= budget:
            break
        z_start = z0 if s == 0 else z0 + rng.normal(0.0, step, z0.size)
        before = len(candidates)
        try:
            scipy.optimize.minimize(
                objective,
                z_start,
                method="Nelder-Mead",
                options={
                    "maxiter": per_start,
                    "maxfev": per_start,
                    "xatol": 1e-4,
                    "fatol": 1e-9,
                    "adaptive": True,
                },
            )
        except _BudgetExhausted:
            pass
        new = candidates[before:]
        start_objectives.append(min((c[0] for c in new), default=float("nan")))
    if not candidates:
        raise NumericalError("every hyperparameter evaluation failed")
    best = min(candidates, key=lambda c: (c[0], c[1]))
    if best[0] >= _PENALTY:
        raise NumericalError("no feasible hyperparameter point was found")
    return TuningResult(
        hyper=best[2],
        objective=best[0],
        n_evaluations=state["evals"],
        trace=trace,
        start_objectives=start_objectives,
        free_names=names,
    )


def kernel_gfrf_on_grid(kernel: VolterraKernel, grid: FrequencyGrid) -> np.ndarray:
    """Exact transfer coefficients of a kernel on the signed tone grid.

    Returns the order-m tensor indexed by ``grid.omega_set`` positions,
    sampled from the full zero-padded multidimensional transform.
    """
    h = apply_mdft(kernel, grid.n_points)
    bins = [s % grid.n_points for s in grid.omega_set]
    return h[np.ix_(*([bins] * kernel.order))]


def relative_gfrf_error(
    estimate: GfrfEstimate,
    basis: OrderBasis,
    true_kernel: VolterraKernel,
    grid: FrequencyGrid,
) -> float:
    """Frobenius-relative error of one order's estimate on the signed tone grid.

    Both the estimate and the exact coefficients are expanded to the full
    tensor over the signed tone set (conjugate-paired entries included), so
    the metric weighs every excited coefficient once.
    """
    if true_kernel.order != basis.order:
        raise DimensionError("kernel order does not match the basis")
    est = estimate.expanded(basis)
    ref = kernel_gfrf_on_grid(true_kernel, grid)
    denom = float(np.linalg.norm(ref))
    if denom == 0.0:
        raise SpecError("reference coefficients are identically zero")
    return float(np.linalg.norm(est - ref)) / denom

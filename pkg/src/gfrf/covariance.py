"""Smoothness priors for kernels and their frequency-domain images.

The per-axis prior on FIR coefficients is the diagonal-correlated family

    P(i, j) = c * lam**((i + j) / 2) * rho**|i - j|,

with scale c > 0, decay lam in (0, 1], and adjacent-lag correlation
rho in [-1, 1].  Multidimensional kernels take a Kronecker product of unit-
scale per-axis factors (overall scale applied once), projected onto the
permutation-symmetric subspace and restricted to the unique representatives.

Pushing a time-domain prior P through a reduced Fourier transform F gives the
widely-linear second-order description of the complex coefficients:
K = F P F^H (Hermitian covariance) and C = F P F^T (pseudo-covariance),
assembled as the augmented matrix [[K, C], [C^H, conj K]].
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce as _reduce

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError, ResourceError, SpecError
from .mdft import SymmetryReduction, build_symmetry_reduction, flat_index

__all__ = [
    "OrderHyper",
    "DcHyperparameters",
    "TimePrior",
    "AugmentedCovariance",
    "dc_matrix",
    "build_time_prior",
    "to_frequency_domain",
    "assemble_sigma_tot",
    "psd_cholesky",
    "hermitian_deviation",
    "min_eigenvalue_ratio",
]

HERMITIAN_TOL = 1e-12
PSD_EIG_TOL = 1e-10
JITTER_START = 1e-10
JITTER_LIMIT = 1e-6
NOISE_FLOOR_FACTOR = 1e-8


def dc_matrix(scale: float, decay: float, correlation: float, size: int) -> np.ndarray:
    """Dense 1-D prior matrix P(i, j) = scale * decay**((i+j)/2) * correlation**|i-j|."""
    size = int(size)
    if size < 1:
        raise SpecError(f"size must be >= 1, got {size}")
    if not scale > 0:
        raise SpecError(f"scale must be positive, got {scale}")
    if not 0 < decay <= 1:
        raise SpecError(f"decay must be in (0, 1], got {decay}")
    if not -1 <= correlation <= 1:
        raise SpecError(f"correlation must be in [-1, 1], got {correlation}")
    i = np.arange(size)
    lam = decay ** ((i[:, None] + i[None, :]) / 2.0)
    rho = float(correlation) ** np.abs(i[:, None] - i[None, :])
    return scale * lam * rho


@dataclass(frozen=True)
class OrderHyper:
    """Hyperparameters of one kernel order: scale plus per-axis decay/correlation.

    ``decay`` and ``correlation`` hold either one shared value or one value
    per axis of the kernel.
    """

    scale: float
    decay: tuple[float, ...]
    correlation: tuple[float, ...]

    def __post_init__(self):
        dec = self.decay if isinstance(self.decay, (tuple, list)) else (self.decay,)
        cor = (
            self.correlation
            if isinstance(self.correlation, (tuple, list))
            else (self.correlation,)
        )
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "decay", tuple(float(x) for x in dec))
        object.__setattr__(self, "correlation", tuple(float(x) for x in cor))
        if not self.scale > 0:
            raise SpecError(f"scale must be positive, got {self.scale}")
        if len(self.decay) != len(self.correlation):
            raise DimensionError("decay and correlation must have equal lengths")
        for lam in self.decay:
            if not 0 < lam <= 1:
                raise SpecError(f"decay must be in (0, 1], got {lam}")
        for rho in self.correlation:
            if not -1 <= rho <= 1:
                raise SpecError(f"correlation must be in [-1, 1], got {rho}")

    def axis_values(self, order: int) -> tuple[tuple[float, float], ...]:
        """(decay, correlation) per axis, broadcasting a shared value."""
        if len(self.decay) == 1:
            return tuple((self.decay[0], self.correlation[0]) for _ in range(order))
        if len(self.decay) != order:
            raise DimensionError(
                f"{len(self.decay)} per-axis values for an order-{order} kernel"
            )
        return tuple(zip(self.decay, self.correlation))


@dataclass
class DcHyperparameters:
    """Hyperparameter set for a multi-order model plus one global noise variance."""

    orders: dict[int, OrderHyper]
    noise_variance: float = 0.0

    def __post_init__(self):
        self.orders = {int(m): h for m, h in sorted(self.orders.items())}
        self.noise_variance = float(self.noise_variance)
        if not self.orders:
            raise SpecError("at least one kernel order is required")
        if any(m < 1 for m in self.orders):
            raise SpecError("kernel orders must be >= 1")
        if not self.noise_variance >= 0:
            raise SpecError(
                f"noise variance must be >= 0, got {self.noise_variance}"
            )

    @staticmethod
    def default(orders, noise_variance: float = 0.0) -> "DcHyperparameters":
        return DcHyperparameters(
            {m: OrderHyper(1.0, (0.7,), (0.9,)) for m in orders},
            noise_variance,
        )

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "orders": {
                str(m): {
                    "scale": h.scale,
                    "decay": list(h.decay),
                    "correlation": list(h.correlation),
                }
                for m, h in self.orders.items()
            },
            "noise_variance": self.noise_variance,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "DcHyperparameters":
        if d.get("schema_version") != 1:
            raise SpecError(f"unsupported hyperparameter schema: {d.get('schema_version')!r}")
        extra = set(d) - {"schema_version", "orders", "noise_variance"}
        if extra:
            raise SpecError(f"unknown hyperparameter fields: {sorted(extra)}")
        orders = {}
        for m, h in d["orders"].items():
            extra = set(h) - {"scale", "decay", "correlation"}
            if extra:
                raise SpecError(f"unknown per-order fields: {sorted(extra)}")
            orders[int(m)] = OrderHyper(h["scale"], tuple(h["decay"]), tuple(h["correlation"]))
        return DcHyperparameters(orders, d.get("noise_variance", 0.0))


@dataclass(frozen=True)
class TimePrior:
    """Covariance over the unique entries of one symmetric kernel order."""

    order: int
    memory: int
    matrix: np.ndarray
    reduction: SymmetryReduction

    def __post_init__(self):
        q = self.reduction.n_representatives
        if self.matrix.shape != (q, q):
            raise DimensionError(
                f"prior must be {q}x{q} for {q} unique entries, got {self.matrix.shape}"
            )
        dev = float(np.max(np.abs(self.matrix - self.matrix.T)))
        scale = max(float(np.max(np.abs(self.matrix))), 1.0)
        if dev > HERMITIAN_TOL * scale:
            raise NumericalError(f"time prior is not symmetric (deviation {dev:.3e})")
        ratio = min_eigenvalue_ratio(self.matrix)
        if ratio < -PSD_EIG_TOL:
            raise NumericalError(
                f"time prior lost positive semidefiniteness (eig ratio {ratio:.3e})"
            )


def _symmetrizer(order: int, size: int) -> np.ndarray:
    """Dense projector averaging a vectorized tensor over index permutations."""
    total = size**order
    perms = list(itertools.permutations(range(order)))
    s = np.zeros((total, total))
    w = 1.0 / len(perms)
    for flat in range(total):
        idx = []
        f = flat
        for _ in range(order):
            f, r = divmod(f, size)
            idx.append(r)
        for p in perms:
            s[flat, flat_index([idx[p[d]] for d in range(order)], size)] += w
    return s


def build_time_prior(order: int, memory: int, hyper: OrderHyper) -> TimePrior:
    """Kronecker product of per-axis factors, symmetrized and deduplicated.

    The overall scale multiplies the first axis factor only, so it enters the
    product exactly once.  The full-grid prior is projected onto the
    permutation-symmetric subspace (congruence with the averaging projector,
    which keeps it positive semidefinite) and then restricted to the unique
    representative entries.
    """
    order, memory = int(order), int(memory)
    if memory < 1:
        raise SpecError(f"memory must be >= 1, got {memory}")
    if memory**order > 4096:
        raise ResourceError(
            f"dense prior of size {memory}**{order} exceeds the desk-scale limit"
        )
    axes = hyper.axis_values(order)
    factors = [
        dc_matrix(hyper.scale if d == 0 else 1.0, lam, rho, memory)
        for d, (lam, rho) in enumerate(axes)
    ]
    full = _reduce(np.kron, reversed(factors))  # first axis fastest
    reduction = build_symmetry_reduction(order, range(memory))
    if order == 1:
        p = full
    else:
        s = _symmetrizer(order, memory)
        sym = s @ full @ s.T
        rows = [flat_index(rep, memory) for rep in reduction.representatives]
        p = sym[np.ix_(rows, rows)]
        p = 0.5 * (p + p.T)
    return TimePrior(order, memory, p, reduction)


def hermitian_deviation(a: np.ndarray) -> float:
    """Max |A - A^H| relative to max(1, max |A|)."""
    dev = float(np.max(np.abs(a - a.conj().T)))
    return dev / max(float(np.max(np.abs(a))), 1.0)


def min_eigenvalue_ratio(a: np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian matrix scaled by the largest one."""
    eig = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    top = max(float(eig[-1]), 1e-300)
    return float(eig[0]) / top


@dataclass(frozen=True)
class AugmentedCovariance:
    """Widely-linear second-order description of one complex coefficient block.

    ``hermitian`` is K = F P F^H, ``pseudo`` is C = F P F^T; ``augmented()``
    assembles [[K, C], [C^H, conj K]], the covariance of the coefficient
    vector stacked with its conjugate.
    """

    order: int
    hermitian: np.ndarray
    pseudo: np.ndarray

    def __post_init__(self):
        k, c = self.hermitian, self.pseudo
        if k.shape != c.shape or k.shape[0] != k.shape[1]:
            raise DimensionError(f"blocks must be square and equal: {k.shape}, {c.shape}")
        if hermitian_deviation(k) > HERMITIAN_TOL:
            raise NumericalError("coefficient covariance is not Hermitian")
        dev = float(np.max(np.abs(c - c.T)))
        if dev > HERMITIAN_TOL * max(float(np.max(np.abs(c))), 1.0):
            raise NumericalError("pseudo-covariance is not symmetric")

    @property
    def n_coefficients(self) -> int:
        return self.hermitian.shape[0]

    def augmented(self) -> np.ndarray:
        k, c = self.hermitian, self.pseudo
        return np.block([[k, c], [c.conj().T, k.conj()]])

    def validate_psd(self, tol: float = PSD_EIG_TOL) -> float:
        ratio = min_eigenvalue_ratio(self.augmented())
        if ratio < -tol:
            raise NumericalError(
                f"augmented covariance not PSD (eig ratio {ratio:.3e})"
            )
        return ratio


def to_frequency_domain(prior: TimePrior, transform: np.ndarray) -> AugmentedCovariance:
    """Push a time-domain prior through a reduced Fourier transform."""
    q = prior.reduction.n_representatives
    if transform.ndim != 2 or transform.shape[1] != q:
        raise DimensionError(
            f"transform must have {q} columns, got {transform.shape}"
        )
    fp = transform @ prior.matrix
    k = fp @ transform.conj().T
    c = fp @ transform.T
    k = 0.5 * (k + k.conj().T)
    c = 0.5 * (c + c.T)
    return AugmentedCovariance(prior.order, k, c)


def assemble_sigma_tot(blocks) -> np.ndarray:
    """Block-diagonal stack of per-order augmented covariances."""
    blocks = list(blocks)
    if not blocks:
        raise SpecError("need at least one covariance block")
    mats = [b.augmented() for b in blocks]
    return scipy.linalg.block_diag(*mats)


def psd_cholesky(a: np.ndarray, max_jitter: float = JITTER_LIMIT):
    """Lower Cholesky factor with escalating diagonal jitter.

    Starts at JITTER_START * mean-diagonal and escalates tenfold up to
    ``max_jitter`` * mean-diagonal before giving up with NumericalError.
    Returns (L, jitter_added) where jitter_added is the absolute diagonal
    shift that succeeded (0.0 for a clean factorization).
    """
    a = np.asarray(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError(f"matrix must be square, got {a.shape}")
    a = 0.5 * (a + a.conj().T)
    base = float(np.trace(a).real) / n
    if base <= 0:
        base = 1.0
    jitter = 0.0
    factor = JITTER_START
    attempts = []
    while True:
        try:
            return np.linalg.cholesky(a + jitter * np.eye(n)), jitter
        except np.linalg.LinAlgError:
            attempts.append(jitter)
            if factor > max_jitter:
                raise NumericalError(
                    f"Cholesky failed for a {n}x{n} matrix after jitter "
                    f"attempts {attempts} (mean diagonal {base:.3e})"
                ) from None
            jitter = factor * base
            factor *= 10.0

"""Multidimensional DFT machinery and symmetry bookkeeping for kernel tensors.

Vectorization convention: an order-m tensor indexed (i_1, ..., i_m) is
flattened with i_1 incrementing fastest, i.e. flat = sum_d i_d * N**(d-1).
That matches ``reshape(..., order="F")``.

The dense m-dimensional Fourier matrix is built by the block recursion
F_m = [F_{m-1}(i, j) * F_1] (a Kronecker product), so its entry at row
(k_1..k_m), column (tau_1..tau_m) is prod_d exp(-2j*pi*k_d*tau_d/N).
Dense matrices are only materialized while N**m <= 4096; everything larger
goes through the summation forms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ResourceError, SpecError
from .volterra import VolterraKernel

__all__ = [
    "DENSE_LIMIT",
    "FourierMatrix",
    "SymmetryReduction",
    "flat_index",
    "vec",
    "unvec",
    "fourier_matrix",
    "apply_mdft",
    "build_symmetry_reduction",
    "reduce_transform",
    "reduced_fourier",
    "expand_unique",
]

DENSE_LIMIT = 4096


def flat_index(multi, extent: int) -> int:
    """Flat position of a multi-index, first component fastest."""
    p = 0
    for d, i in enumerate(multi):
        if not 0 <= i < extent:
            raise DimensionError(f"index {i} out of range [0, {extent})")
        p += int(i) * extent**d
    return p


def _decode(flat: int, extent: int, order: int) -> tuple[int, ...]:
    out = []
    for _ in range(order):
        flat, r = divmod(flat, extent)
        out.append(r)
    return tuple(out)


def vec(tensor: np.ndarray) -> np.ndarray:
    """Flatten a tensor with the first index fastest."""
    return tensor.reshape(-1, order="F")


def unvec(v: np.ndarray, order: int, extent: int) -> np.ndarray:
    """Inverse of :func:`vec` for a known order and extent."""
    if v.size != extent**order:
        raise DimensionError(f"vector of {v.size} entries is not {extent}**{order}")
    return v.reshape((extent,) * order, order="F")


@dataclass(frozen=True)
class FourierMatrix:
    """Dense m-dimensional DFT matrix of size N**m x N**m."""

    order: int
    extent: int
    matrix: np.ndarray


def fourier_matrix(order: int, extent: int) -> FourierMatrix:
    """Build F_m through the block recursion F_m = kron(F_{m-1}, F_1)."""
    order, extent = int(order), int(extent)
    if order < 1:
        raise SpecError(f"order must be >= 1, got {order}")
    if extent < 2:
        raise SpecError(f"extent must be >= 2, got {extent}")
    if extent**order > DENSE_LIMIT:
        raise ResourceError(
            f"{extent}**{order} exceeds the dense limit of {DENSE_LIMIT}"
        )
    k = np.arange(extent)
    f1 = np.exp(-2j * np.pi * np.outer(k, k) / extent)
    f = f1
    for _ in range(order - 1):
        f = np.kron(f, f1)
    return FourierMatrix(order, extent, f)


def apply_mdft(kernel: VolterraKernel, n_points: int) -> np.ndarray:
    """Full m-dimensional DFT of a kernel, zero-padded to (N,)*m.

    Returns the complex tensor H with H[k_1, ..., k_m] =
    sum_tau h(tau) prod_d exp(-2j*pi*k_d*tau_d/N).  Uses the summation form
    (FFT per axis); no dense matrix is materialized.
    """
    n_points = int(n_points)
    if kernel.memory > n_points:
        raise DimensionError(
            f"kernel memory {kernel.memory} exceeds n_points {n_points}"
        )
    padded = np.zeros((n_points,) * kernel.order)
    padded[tuple(slice(0, kernel.memory) for _ in range(kernel.order))] = kernel.values
    return np.fft.fftn(padded)


@dataclass(frozen=True)
class SymmetryReduction:
    """Permutation-symmetry bookkeeping for multi-indices over a 1-D grid.

    Representatives are the non-decreasing multi-indices over the grid (grid
    values sorted ascending, so negative frequencies come first).  Every full
    multi-index maps to the representative obtained by sorting, with
    ``multiplicity`` counting its orbit size.  On sign-symmetric frequency
    grids each representative is paired with the representative of its
    negated tuple; one member of each pair (the one whose index sum is
    positive, or the self-paired zero-sum one) is marked ``kept`` and counted
    as a free parameter.  On lag grids pairing is the identity and every
    representative is kept.
    """

    order: int
    grid: tuple[int, ...]
    representatives: tuple[tuple[int, ...], ...]
    multiplicity: np.ndarray
    full_to_representative: np.ndarray
    conjugate_partner: np.ndarray
    kept: np.ndarray

    @property
    def n_representatives(self) -> int:
        return len(self.representatives)

    @property
    def n_parameters(self) -> int:
        return int(self.kept.sum())

    @property
    def grid_size(self) -> int:
        return len(self.grid)

    def kept_indices(self) -> np.ndarray:
        return np.flatnonzero(self.kept)

    def parameter_column(self) -> dict[int, int]:
        """Representative index -> column position among kept representatives."""
        return {int(r): c for c, r in enumerate(self.kept_indices())}

    def representative_of(self, multi) -> int:
        pos = [self.grid.index(v) for v in multi]
        return int(self.full_to_representative[flat_index(pos, self.grid_size)])


def build_symmetry_reduction(order: int, grid) -> SymmetryReduction:
    """Enumerate representatives, multiplicities, and conjugate pairing.

    ``grid`` lists the admissible per-axis values: signed frequency indices
    (must then be closed under negation and exclude 0) or nonnegative lags.
    """
    order = int(order)
    if order < 1:
        raise SpecError(f"order must be >= 1, got {order}")
    g = tuple(int(v) for v in grid)
    if not g:
        raise SpecError("grid must be nonempty")
    if len(set(g)) != len(g):
        raise SpecError("grid values must be distinct")
    g = tuple(sorted(g))
    size = len(g)
    signed = any(v < 0 for v in g)
    if signed:
        if 0 in g:
            raise SpecError("signed frequency grids must exclude DC")
        if set(g) != {-v for v in g}:
            raise SpecError("signed frequency grids must be closed under negation")

    position = {v: i for i, v in enumerate(g)}
    rep_positions = list(itertools.combinations_with_replacement(range(size), order))
    rep_index = {p: i for i, p in enumerate(rep_positions)}
    representatives = tuple(tuple(g[p] for p in pos) for pos in rep_positions)

    fact = math.factorial(order)
    multiplicity = np.empty(len(rep_positions), dtype=int)
    for i, pos in enumerate(rep_positions):
        denom = 1
        for _, c in itertools.groupby(pos):
            denom *= math.factorial(len(list(c)))
        multiplicity[i] = fact // denom

    full_to_rep = np.empty(size**order, dtype=int)
    for flat in range(size**order):
        full_to_rep[flat] = rep_index[tuple(sorted(_decode(flat, size, order)))]

    if signed:
        partner = np.empty(len(rep_positions), dtype=int)
        for i, values in enumerate(representatives):
            neg = tuple(sorted(position[-v] for v in values))
            partner[i] = rep_index[neg]
        sums = np.array([sum(v) for v in representatives])
        # Self-paired representatives must sit on the zero-sum hyperplane
        # (they carry real values and never reach a nonzero output bin).
        self_paired = partner == np.arange(len(rep_positions))
        if np.any(sums[self_paired] != 0):
            raise SpecError(
                "self-paired representative with nonzero index sum; "
                "the signed grid is inconsistent"
            )
        kept = (sums > 0) | (
            (sums == 0) & (np.arange(len(rep_positions)) <= partner)
        )
    else:
        partner = np.arange(len(rep_positions))
        kept = np.ones(len(rep_positions), dtype=bool)

    multiplicity.setflags(write=False)
    full_to_rep.setflags(write=False)
    partner.setflags(write=False)
    kept.setflags(write=False)
    return SymmetryReduction(
        order=order,
        grid=g,
        representatives=representatives,
        multiplicity=multiplicity,
        full_to_representative=full_to_rep,
        conjugate_partner=partner,
        kept=kept,
    )


def _phase_row(s: int, lag_values: np.ndarray, n_points: int, cache: dict) -> np.ndarray:
    if s in cache:
        return cache[s]
    if s >= 0:
        row = np.exp(-2j * np.pi * s * lag_values / n_points)
    else:
        # conjugate by construction so paired rows match bit for bit
        row = np.conj(_phase_row(-s, lag_values, n_points, cache))
    cache[s] = row
    return row


def reduced_fourier(
    n_points: int,
    row_reduction: SymmetryReduction,
    col_reduction: SymmetryReduction,
    kept_rows_only: bool = False,
) -> np.ndarray:
    """Reduced Fourier transform mapping unique lag entries to unique bins.

    Entry (R, r) sums prod_d exp(-2j*pi*k_d*tau_d/N) over the distinct
    permutations tau of lag representative r, at frequency representative
    R = (k_1..k_m).  Multiplicity therefore lives in the columns: applying
    the result to the unique entries of a symmetric kernel reproduces the
    full transform evaluated at the representative bins.  Computed by direct
    summation, so no dense-size guard applies.
    """
    if row_reduction.order != col_reduction.order:
        raise DimensionError("row and column reductions must share the order")
    order = row_reduction.order
    rows = (
        [row_reduction.representatives[i] for i in row_reduction.kept_indices()]
        if kept_rows_only
        else list(row_reduction.representatives)
    )
    lag_values = np.array(col_reduction.grid, dtype=float)
    if np.any(lag_values < 0):
        raise SpecError("column reduction must live on a nonnegative lag grid")
    cache: dict[int, np.ndarray] = {}
    # per-axis phase matrix: rows are frequency representatives, columns lag values
    axis = [
        np.vstack([_phase_row(rep[d], lag_values, n_points, cache) for rep in rows])
        for d in range(order)
    ]
    value_pos = {v: i for i, v in enumerate(col_reduction.grid)}
    out = np.zeros((len(rows), col_reduction.n_representatives), dtype=complex)
    for j, lag_rep in enumerate(col_reduction.representatives):
        for perm in set(itertools.permutations(lag_rep)):
            contrib = axis[0][:, value_pos[perm[0]]].copy()
            for d in range(1, order):
                contrib = contrib * axis[d][:, value_pos[perm[d]]]
            out[:, j] += contrib
    return out


def reduce_transform(
    fourier: FourierMatrix,
    row_reduction: SymmetryReduction,
    col_reduction: SymmetryReduction | None = None,
) -> np.ndarray:
    """Slice-and-fold a dense Fourier matrix down to unique entries.

    Rows are selected at the representative frequency multi-indices (signed
    values wrap modulo N); columns are summed over each lag orbit, folding the
    multiplicities in.  Satisfies the commuting square: selecting the
    representative entries of ``F_m @ vec(h)`` for symmetric h equals applying
    the reduced matrix to the unique entries of h.
    """
    if col_reduction is None:
        col_reduction = row_reduction
    if row_reduction.order != fourier.order or col_reduction.order != fourier.order:
        raise DimensionError("reductions must match the Fourier matrix order")
    n = fourier.extent
    row_pos = [
        flat_index([v % n for v in rep], n) for rep in row_reduction.representatives
    ]
    out = np.zeros(
        (len(row_pos), col_reduction.n_representatives), dtype=complex
    )
    sliced = fourier.matrix[row_pos, :]
    for j, lag_rep in enumerate(col_reduction.representatives):
        for perm in set(itertools.permutations(lag_rep)):
            out[:, j] += sliced[:, flat_index([v % n for v in perm], n)]
    return out


def expand_unique(reduction: SymmetryReduction, values) -> np.ndarray:
    """Rebuild the full grid^m tensor from unique values.

    Accepts either one value per representative, or one value per kept
    representative (eliminated representatives are then filled with the
    conjugate of their partner's value).
    """
    values = np.asarray(values)
    if values.shape == (reduction.n_representatives,):
        per_rep = values
    elif values.shape == (reduction.n_parameters,):
        col = reduction.parameter_column()
        per_rep = np.empty(reduction.n_representatives, dtype=complex)
        for r in range(reduction.n_representatives):
            if reduction.kept[r]:
                per_rep[r] = values[col[r]]
            else:
                per_rep[r] = np.conj(values[col[int(reduction.conjugate_partner[r])]])
    else:
        raise DimensionError(
            f"got {values.shape}, expected ({reduction.n_representatives},) or "
            f"({reduction.n_parameters},)"
        )
    size = reduction.grid_size
    flat = per_rep[reduction.full_to_representative]
    return flat.reshape((size,) * reduction.order, order="F")

"""Dense Volterra kernels, block-structured systems, and time-domain simulation.

Kernels are stored as dense order-m tensors at desk scale (memory <= 32,
order <= 3).  Two simulators are provided: a periodic steady-state one that
wraps lags modulo the period, and a literal one that consumes recorded
pre-history and treats anything earlier as zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ResourceError, SpecError
from .signals import TimeSignal

__all__ = [
    "MAX_ORDER",
    "MAX_MEMORY",
    "VolterraKernel",
    "BlockSystem",
    "symmetrize",
    "kernel_from_blocks",
    "simulate_steady_state",
    "simulate_with_history",
]

MAX_ORDER = 3
MAX_MEMORY = 32


@dataclass(frozen=True)
class VolterraKernel:
    """One homogeneous term: order m, memory n, dense values of shape (n,)*m."""

    order: int
    memory: int
    values: np.ndarray

    def __post_init__(self):
        m = int(self.order)
        n = int(self.memory)
        if m < 1 or m > MAX_ORDER:
            raise ResourceError(f"kernel order must be 1..{MAX_ORDER}, got {m}")
        if n < 1 or n > MAX_MEMORY:
            raise ResourceError(f"kernel memory must be 1..{MAX_MEMORY}, got {n}")
        v = np.array(self.values, dtype=float)
        if v.shape != (n,) * m:
            raise DimensionError(
                f"kernel values must have shape {(n,) * m}, got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise SpecError("kernel values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "order", m)
        object.__setattr__(self, "memory", n)
        object.__setattr__(self, "values", v)

    def is_symmetric(self) -> bool:
        v = self.values
        return all(
            np.array_equal(v, np.transpose(v, p))
            for p in itertools.permutations(range(self.order))
        )


def symmetrize(kernel: VolterraKernel) -> VolterraKernel:
    """Average a kernel over all index permutations.

    Exactly idempotent: positions whose permutation orbit already holds one
    common value are copied through unchanged rather than re-averaged.
    """
    m, n, v = kernel.order, kernel.memory, kernel.values
    if m == 1:
        return kernel
    out = np.empty_like(v)
    for rep in itertools.combinations_with_replacement(range(n), m):
        orbit = set(itertools.permutations(rep))
        vals = np.array([v[idx] for idx in orbit])
        common = vals[0] if np.all(vals == vals[0]) else vals.mean()
        for idx in orbit:
            out[idx] = common
    return VolterraKernel(m, n, out)


@dataclass(frozen=True)
class BlockSystem:
    """Static-square block model: the nonlinearity is fixed to x -> x**2.

    ``wiener``             : FIR front_filter, then square.
    ``hammerstein``        : square, then FIR front_filter.
    ``wiener_hammerstein`` : front_filter, square, back_filter.
    """

    structure: str
    front_filter: tuple[float, ...]
    back_filter: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if self.structure not in ("wiener", "hammerstein", "wiener_hammerstein"):
            raise SpecError(f"unknown block structure {self.structure!r}")
        g = tuple(float(x) for x in self.front_filter)
        q = tuple(float(x) for x in self.back_filter)
        if not g or not q:
            raise SpecError("block filters must be nonempty")
        if not all(math.isfinite(x) for x in g + q):
            raise SpecError("block filters must be finite")
        if self.structure != "wiener_hammerstein" and q != (1.0,):
            raise SpecError("back_filter is only meaningful for wiener_hammerstein")
        object.__setattr__(self, "front_filter", g)
        object.__setattr__(self, "back_filter", q)


def kernel_from_blocks(system: BlockSystem) -> VolterraKernel:
    """Exact second-order kernel of a block-structured square system.

    wiener:             h(a, b) = g(a) g(b)
    hammerstein:        h(a, b) = g(a) on the diagonal, zero elsewhere
    wiener_hammerstein: h(a, b) = sum_s q(s) g(a - s) g(b - s)
    """
    g = np.array(system.front_filter)
    if system.structure == "wiener":
        return VolterraKernel(2, g.size, np.outer(g, g))
    if system.structure == "hammerstein":
        return VolterraKernel(2, g.size, np.diag(g))
    q = np.array(system.back_filter)
    n = g.size + q.size - 1
    h = np.zeros((n, n))
    gg = np.outer(g, g)
    for s, qs in enumerate(q):
        h[s : s + g.size, s : s + g.size] += qs * gg
    return VolterraKernel(2, n, h)


_EINSUM = {
    1: "a,at->t",
    2: "ab,at,bt->t",
    3: "abc,at,bt,ct->t",
}


def _contract(kernel: VolterraKernel, lag_matrix: np.ndarray) -> np.ndarray:
    ops = [kernel.values] + [lag_matrix] * kernel.order
    return np.einsum(_EINSUM[kernel.order], *ops)


def simulate_steady_state(kernels, u: TimeSignal) -> TimeSignal:
    """Periodic response: lags index the input window modulo its length.

    The input window is treated as one full period; memory longer than the
    period simply wraps multiple times.
    """
    kernels = list(kernels)
    if not kernels:
        raise SpecError("need at least one kernel")
    w = u.window
    n_points = w.size
    t = np.arange(n_points)
    y = np.zeros(n_points)
    for kernel in kernels:
        lags = np.arange(kernel.memory)
        lag_matrix = w[(t[None, :] - lags[:, None]) % n_points]
        y += _contract(kernel, lag_matrix)
    return TimeSignal(y)


def simulate_with_history(kernels, u: TimeSignal) -> TimeSignal:
    """Literal response over the window, consuming recorded pre-history.

    Requires ``u.n_pre >= memory - 1`` for every kernel so that no lag
    silently reads an unrecorded sample.
    """
    kernels = list(kernels)
    if not kernels:
        raise SpecError("need at least one kernel")
    max_memory = max(k.memory for k in kernels)
    if u.n_pre < max_memory - 1:
        raise SpecError(
            f"pre-history of {u.n_pre} samples is too short for memory "
            f"{max_memory}; need at least {max_memory - 1}"
        )
    ext = u.samples
    n_points = u.n_window
    t = np.arange(n_points)
    y = np.zeros(n_points)
    for kernel in kernels:
        lags = np.arange(kernel.memory)
        lag_matrix = ext[u.n_pre + t[None, :] - lags[:, None]]
        y += _contract(kernel, lag_matrix)
    return TimeSignal(y)

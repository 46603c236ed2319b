"""Deterministic CSV/JSON writers shared by the CLI and experiment drivers.

Everything here is byte-reproducible: floats are rendered with the "%.17g"
round-trip format, newlines are always LF, encoding is UTF-8, and JSON is
emitted with sorted keys.  No timestamps or absolute paths ever land in an
output file, so re-running a configuration with the same seed rewrites
identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import DimensionError

__all__ = [
    "format_float",
    "write_csv",
    "write_signal_csv",
    "write_spectrum_csv",
    "write_kernel_csv",
    "write_reduction_csv",
    "write_complex_vector_csv",
    "write_matrix_csv",
    "write_surface_csv",
    "write_json",
    "sha256_file",
]


def format_float(x) -> str:
    """Round-trip decimal rendering of one float."""
    return "%.17g" % float(x)


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path, header, rows) -> Path:
    """Write one CSV file: header row, then one line per entry of ``rows``."""
    path = Path(path)
    header = list(header)
    lines = [",".join(header)]
    for row in rows:
        row = list(row)
        if len(row) != len(header):
            raise DimensionError(
                f"row width {len(row)} does not match header width {len(header)}"
            )
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def write_signal_csv(path, signal) -> Path:
    """Columns t,value covering pre-history (negative t) and the window."""
    n_pre = signal.n_pre
    rows = (
        (t - n_pre, signal.samples[t])
        for t in range(signal.samples.size)
    )
    return write_csv(path, ("t", "value"), rows)


def write_spectrum_csv(path, bins) -> Path:
    bins = np.asarray(bins)
    rows = ((k, bins[k].real, bins[k].imag) for k in range(bins.size))
    return write_csv(path, ("k", "re", "im"), rows)


def write_kernel_csv(path, kernel) -> Path:
    """One row per kernel entry: lag coordinates then the value."""
    header = tuple(f"tau{i + 1}" for i in range(kernel.order)) + ("value",)
    rows = (
        tuple(idx) + (kernel.values[idx],)
        for idx in np.ndindex(kernel.values.shape)
    )
    return write_csv(path, header, rows)


def write_reduction_csv(path, reduction) -> Path:
    """Full symmetry-reduction table, one row per point of the full grid."""
    rows = (
        (
            flat,
            reduction.full_to_representative[flat],
            reduction.multiplicity[reduction.full_to_representative[flat]],
            reduction.conjugate_partner[reduction.full_to_representative[flat]],
            int(reduction.kept[reduction.full_to_representative[flat]]),
        )
        for flat in range(reduction.grid_size ** reduction.order)
    )
    header = (
        "flat_index",
        "representative_index",
        "multiplicity",
        "conjugate_partner",
        "kept",
    )
    return write_csv(path, header, rows)


def write_complex_vector_csv(path, labels, values) -> Path:
    """Indexed complex values: one label tuple + re/im/abs per row."""
    values = np.asarray(values)
    labels = list(labels)
    if len(labels) != values.size:
        raise DimensionError("label count does not match value count")
    width = len(labels[0]) if labels else 1
    header = tuple(f"k{i + 1}" for i in range(width)) + ("re", "im", "abs")
    rows = (
        tuple(lab) + (values[i].real, values[i].imag, abs(values[i]))
        for i, lab in enumerate(labels)
    )
    return write_csv(path, header, rows)


def write_matrix_csv(path, matrix) -> Path:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise DimensionError("expected a 2-D matrix")
    rows = (
        (i, j, matrix[i, j].real, complex(matrix[i, j]).imag)
        for i in range(matrix.shape[0])
        for j in range(matrix.shape[1])
    )
    return write_csv(path, ("i", "j", "re", "im"), rows)


def write_surface_csv(path, surface) -> Path:
    """Real 2-D surface indexed by the two time axes."""
    surface = np.asarray(surface)
    if surface.ndim != 2:
        raise DimensionError("expected a 2-D surface")
    rows = (
        (i, j, surface[i, j])
        for i in range(surface.shape[0])
        for j in range(surface.shape[1])
    )
    return write_csv(path, ("tp", "tpp", "value"), rows)


def write_json(path, payload) -> Path:
    path = Path(path)
    text = json.dumps(payload, sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")
    return path


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()

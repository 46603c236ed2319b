"""Config-driven experiment drivers with byte-reproducible outputs.

A JSON config fully determines an experiment: the block-structured test
system, the periodic excitation, and either an estimation run (regularized
coefficient recovery plus optional hyperparameter tuning) or a transient
run (exact decomposition of one windowed response).  Outputs land in a
directory as CSV/JSON files plus a ``manifest.json`` mapping each file to
its SHA-256 digest; re-running the same config writes identical bytes.

Config validation is strict: unknown fields anywhere are rejected so typos
cannot silently fall back to defaults.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .covariance import DcHyperparameters, OrderHyper, build_time_prior, to_frequency_domain
from .errors import NumericalError, SpecError
from .estimator import (
    build_problem,
    kernel_gfrf_on_grid,
    map_estimate,
    relative_gfrf_error,
    sigma_tot,
    tune_hyperparameters,
)
from .io import (
    sha256_file,
    write_json,
    write_kernel_csv,
    write_complex_vector_csv,
    write_matrix_csv,
    write_reduction_csv,
    write_signal_csv,
    write_spectrum_csv,
    write_surface_csv,
)
from .signals import MultisineSpec, TimeSignal, dft, frequency_grid, generate_multisine
from .transient import hammerstein_terms, transient_terms, verify_t1_equals_t2
from .verify import run_all
from .volterra import BlockSystem, kernel_from_blocks, simulate_steady_state, simulate_with_history

__all__ = [
    "load_config",
    "validate_config",
    "run_estimation_experiment",
    "run_transient_experiment",
    "run_verify",
    "export_priors",
]

SCHEMA_VERSION = 1

_IDENTITY_TOL = 1e-9


# ---------------------------------------------------------------------------
# config validation


def _require_keys(section: dict, path: str, required, optional=()):
    if not isinstance(section, dict):
        raise SpecError(f"{path} must be an object")
    unknown = sorted(set(section) - set(required) - set(optional))
    if unknown:
        raise SpecError(f"unknown fields in {path}: {', '.join(unknown)}")
    missing = sorted(set(required) - set(section))
    if missing:
        raise SpecError(f"missing fields in {path}: {', '.join(missing)}")


def _as_int(value, path: str, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecError(f"{path} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise SpecError(f"{path} must be >= {minimum}, got {value}")
    return int(value)


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"{path} must be a number, got {value!r}")
    if not np.isfinite(value):
        raise SpecError(f"{path} must be finite, got {value!r}")
    return float(value)


def _as_float_list(value, path: str):
    if not isinstance(value, list) or not value:
        raise SpecError(f"{path} must be a nonempty list of numbers")
    return [_as_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _validate_system(section) -> dict:
    _require_keys(section, "system", ("structure", "front_filter"), ("back_filter",))
    structure = section["structure"]
    if structure not in ("wiener", "hammerstein", "wiener_hammerstein"):
        raise SpecError(f"system.structure must be one of wiener, hammerstein, "
                        f"wiener_hammerstein; got {structure!r}")
    out = {
        "structure": structure,
        "front_filter": _as_float_list(section["front_filter"], "system.front_filter"),
    }
    if structure == "wiener_hammerstein":
        if "back_filter" not in section:
            raise SpecError("system.back_filter is required for wiener_hammerstein")
        out["back_filter"] = _as_float_list(section["back_filter"], "system.back_filter")
    elif "back_filter" in section:
        raise SpecError("system.back_filter is only valid for wiener_hammerstein")
    return out


def _validate_signal(section) -> dict:
    _require_keys(section, "signal", ("n_points", "excited_indices"), ("amplitude", "seed"))
    n = _as_int(section["n_points"], "signal.n_points", minimum=2)
    idx = section["excited_indices"]
    if not isinstance(idx, list) or not idx:
        raise SpecError("signal.excited_indices must be a nonempty list")
    indices = [_as_int(v, f"signal.excited_indices[{i}]", minimum=1) for i, v in enumerate(idx)]
    amplitude = section.get("amplitude", 1.0)
    if isinstance(amplitude, list):
        amplitude = tuple(_as_number(v, "signal.amplitude") for v in amplitude)
    else:
        amplitude = _as_number(amplitude, "signal.amplitude")
    return {
        "n_points": n,
        "excited_indices": indices,
        "amplitude": amplitude,
        "seed": _as_int(section.get("seed", 0), "signal.seed", minimum=0),
    }


def _validate_hyper(section) -> dict:
    _require_keys(
        section,
        "estimation.initial_hyperparameters",
        ("scale", "decay", "correlation"),
    )
    out = {"scale": _as_number(section["scale"], "scale")}
    for key in ("decay", "correlation"):
        value = section[key]
        if isinstance(value, list):
            out[key] = _as_float_list(value, f"initial_hyperparameters.{key}")
        else:
            out[key] = _as_number(value, f"initial_hyperparameters.{key}")
    return out


def _validate_estimation(section) -> dict:
    _require_keys(
        section,
        "estimation",
        ("orders", "memories"),
        (
            "noise_variance",
            "tune",
            "tuner_budget",
            "tuner_starts",
            "tuner_seed",
            "initial_hyperparameters",
        ),
    )
    orders = section["orders"]
    if not isinstance(orders, list) or not orders:
        raise SpecError("estimation.orders must be a nonempty list")
    orders = sorted(_as_int(m, "estimation.orders[]", minimum=1) for m in orders)
    if len(set(orders)) != len(orders):
        raise SpecError("estimation.orders contains duplicates")
    memories_raw = section["memories"]
    if not isinstance(memories_raw, dict):
        raise SpecError("estimation.memories must map order -> memory")
    memories = {}
    for key, value in memories_raw.items():
        try:
            m = int(key)
        except (TypeError, ValueError):
            raise SpecError(f"estimation.memories key {key!r} is not an order")
        memories[m] = _as_int(value, f"estimation.memories[{key}]", minimum=1)
    if sorted(memories) != orders:
        raise SpecError("estimation.memories must cover exactly the listed orders")
    tune = section.get("tune", False)
    if not isinstance(tune, bool):
        raise SpecError("estimation.tune must be a boolean")
    noise = _as_number(section.get("noise_variance", 0.0), "estimation.noise_variance")
    if noise < 0:
        raise SpecError("estimation.noise_variance must be >= 0")
    hyper = section.get(
        "initial_hyperparameters", {"scale": 1.0, "decay": 0.7, "correlation": 0.9}
    )
    return {
        "orders": orders,
        "memories": memories,
        "noise_variance": noise,
        "tune": tune,
        "tuner_budget": _as_int(section.get("tuner_budget", 60), "estimation.tuner_budget", 1),
        "tuner_starts": _as_int(section.get("tuner_starts", 3), "estimation.tuner_starts", 1),
        "tuner_seed": _as_int(section.get("tuner_seed", 0), "estimation.tuner_seed", 0),
        "initial_hyperparameters": _validate_hyper(hyper),
    }


def _validate_transient(section) -> dict:
    _require_keys(section, "transient", ("pre_history", "n_pre"), ("samples",))
    mode = section["pre_history"]
    if mode not in ("zero", "periodic", "custom"):
        raise SpecError(
            f"transient.pre_history must be zero, periodic, or custom; got {mode!r}"
        )
    n_pre = _as_int(section["n_pre"], "transient.n_pre", minimum=0)
    out = {"pre_history": mode, "n_pre": n_pre}
    if mode == "custom":
        if "samples" not in section:
            raise SpecError("transient.samples is required for custom pre-history")
        samples = [
            _as_number(v, f"transient.samples[{i}]")
            for i, v in enumerate(section["samples"])
        ] if isinstance(section["samples"], list) else None
        if samples is None or len(samples) != n_pre:
            raise SpecError("transient.samples must be a list of n_pre numbers")
        out["samples"] = samples
    elif "samples" in section:
        raise SpecError("transient.samples is only valid for custom pre-history")
    return out


def validate_config(cfg: dict) -> dict:
    """Normalize and strictly validate one experiment config."""
    _require_keys(
        cfg,
        "config",
        ("schema_version", "name", "kind", "system", "signal"),
        ("estimation", "transient"),
    )
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise SpecError(
            f"unsupported schema_version {cfg['schema_version']!r}; "
            f"this build reads version {SCHEMA_VERSION}"
        )
    name = cfg["name"]
    if not isinstance(name, str) or not name or not all(
        c.isalnum() or c in "_-" for c in name
    ):
        raise SpecError("name must be a nonempty string of [A-Za-z0-9_-]")
    kind = cfg["kind"]
    if kind not in ("estimation", "transient"):
        raise SpecError(f"kind must be estimation or transient, got {kind!r}")
    out = {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "kind": kind,
        "system": _validate_system(cfg["system"]),
        "signal": _validate_signal(cfg["signal"]),
    }
    if kind == "estimation":
        if "estimation" not in cfg:
            raise SpecError("estimation config requires an estimation section")
        if "transient" in cfg:
            raise SpecError("estimation config must not carry a transient section")
        out["estimation"] = _validate_estimation(cfg["estimation"])
    else:
        if "transient" not in cfg:
            raise SpecError("transient config requires a transient section")
        if "estimation" in cfg:
            raise SpecError("transient config must not carry an estimation section")
        out["transient"] = _validate_transient(cfg["transient"])
    return out


def load_config(path) -> dict:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SpecError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"config {path} is not valid JSON: {exc}") from exc
    return validate_config(raw)


# ---------------------------------------------------------------------------
# shared assembly helpers


def _system_from_config(cfg) -> BlockSystem:
    sys_cfg = cfg["system"]
    return BlockSystem(
        structure=sys_cfg["structure"],
        front_filter=tuple(sys_cfg["front_filter"]),
        back_filter=tuple(sys_cfg.get("back_filter", (1.0,))),
    )


def _multisine_from_config(cfg) -> MultisineSpec:
    sig = cfg["signal"]
    return MultisineSpec(
        n_points=sig["n_points"],
        excited_indices=tuple(sig["excited_indices"]),
        amplitude=sig["amplitude"],
        seed=sig["seed"],
    )


def _hyper_from_config(est_cfg) -> DcHyperparameters:
    h = est_cfg["initial_hyperparameters"]
    decay = tuple(h["decay"]) if isinstance(h["decay"], list) else (h["decay"],)
    corr = (
        tuple(h["correlation"])
        if isinstance(h["correlation"], list)
        else (h["correlation"],)
    )
    orders = {m: OrderHyper(h["scale"], decay, corr) for m in est_cfg["orders"]}
    return DcHyperparameters(orders, est_cfg["noise_variance"])


def _finalize(out_dir: Path, cfg: dict, written: list[Path]) -> Path:
    outputs = {p.name: sha256_file(p) for p in sorted(written, key=lambda p: p.name)}
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "outputs": outputs,
    }
    from . import __version__

    manifest["package_version"] = __version__
    return write_json(out_dir / "manifest.json", manifest)


def _kept_labels(reduction):
    """Kept representatives as tuples of grid values (signed tone indices)."""
    grid = reduction.grid
    return [
        tuple(grid[p] for p in reduction.representatives[r])
        for r in reduction.kept_indices()
    ]


def _kept_true_values(kernel, basis, grid):
    tensor = kernel_gfrf_on_grid(kernel, grid)
    reps = basis.frequency_reduction.representatives
    return np.array(
        [tensor[reps[r]] for r in basis.frequency_reduction.kept_indices()],
        dtype=complex,
    )


# ---------------------------------------------------------------------------
# estimation experiments


def run_estimation_experiment(cfg: dict, out_dir) -> dict:
    """Simulate the configured system, estimate its coefficients, write outputs.

    Returns the metrics dictionary; all artifacts (spectra, estimates,
    hyperparameters, metrics, manifest) are written under ``out_dir``.
    """
    cfg = validate_config(cfg)
    if cfg["kind"] != "estimation":
        raise SpecError("run_estimation_experiment needs an estimation config")
    est = cfg["estimation"]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    system = _system_from_config(cfg)
    kernel = kernel_from_blocks(system)
    spec = _multisine_from_config(cfg)
    u = generate_multisine(spec)
    y = simulate_steady_state([kernel], u)
    if est["noise_variance"] > 0:
        # time-domain white noise scaled so each DFT bin has the configured
        # variance; seeded independently of the multisine phases
        rng = np.random.default_rng(1_000_003 * spec.seed + 17)
        noise = rng.normal(0.0, np.sqrt(est["noise_variance"] / spec.n_points), spec.n_points)
        y = TimeSignal(y.samples + noise)

    grid = frequency_grid(spec.n_points, spec.excited_indices, max(est["orders"]))
    problem = build_problem(
        grid, dft(y), dft(u), est["memories"], noise_variance=est["noise_variance"]
    )
    initial = _hyper_from_config(est)
    tuning = None
    hyper = initial
    if est["tune"]:
        tuning = tune_hyperparameters(
            problem,
            initial,
            budget=est["tuner_budget"],
            n_starts=est["tuner_starts"],
            seed=est["tuner_seed"],
        )
        hyper = tuning.hyper
    estimate = map_estimate(problem, hyper)

    written = []
    written.append(write_signal_csv(out_dir / "input_signal.csv", u))
    written.append(write_signal_csv(out_dir / "output_signal.csv", y))
    written.append(write_spectrum_csv(out_dir / "input_spectrum.csv", dft(u).bins))
    written.append(write_spectrum_csv(out_dir / "output_spectrum.csv", dft(y).bins))
    written.append(write_kernel_csv(out_dir / "true_kernel.csv", kernel))

    errors = {}
    for basis in problem.bases:
        m = basis.order
        labels = _kept_labels(basis.frequency_reduction)
        written.append(
            write_complex_vector_csv(
                out_dir / f"gfrf_estimate_m{m}.csv", labels, estimate.values[m]
            )
        )
        written.append(
            write_reduction_csv(
                out_dir / f"frequency_reduction_m{m}.csv", basis.frequency_reduction
            )
        )
        if m == kernel.order:
            written.append(
                write_complex_vector_csv(
                    out_dir / f"gfrf_true_m{m}.csv",
                    labels,
                    _kept_true_values(kernel, basis, grid),
                )
            )
            errors[str(m)] = relative_gfrf_error(estimate, basis, kernel, grid)

    written.append(
        write_json(out_dir / "hyperparameters_initial.json", initial.to_json_dict())
    )
    written.append(
        write_json(out_dir / "hyperparameters_tuned.json", hyper.to_json_dict())
    )

    metrics = {
        "schema_version": SCHEMA_VERSION,
        "name": cfg["name"],
        "relative_error": errors,
        "n_output_bins": problem.grid.n_output_bins,
        "n_parameters": problem.regressor.total_parameters(),
        "rank_deficient": problem.regressor.total_parameters()
        > problem.grid.n_output_bins,
        "diagnostics": {
            k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
            for k, v in estimate.diagnostics.items()
        },
    }
    if tuning is not None:
        metrics["tuning"] = {
            "objective": tuning.objective,
            "n_evaluations": tuning.n_evaluations,
            "trace": [
                None if not np.isfinite(v) else float(v) for v in tuning.trace
            ],
            "start_objectives": [
                None if not np.isfinite(v) else float(v)
                for v in tuning.start_objectives
            ],
            "free_names": list(tuning.free_names),
        }
    written.append(write_json(out_dir / "metrics.json", metrics))
    _finalize(out_dir, cfg, written)
    return metrics


# ---------------------------------------------------------------------------
# transient experiments


def _pre_history_samples(t_cfg, window: np.ndarray) -> np.ndarray:
    n_pre = t_cfg["n_pre"]
    mode = t_cfg["pre_history"]
    if mode == "zero":
        return np.zeros(n_pre)
    if mode == "periodic":
        n = window.size
        return np.array([window[(i - n_pre) % n] for i in range(n_pre)])
    return np.asarray(t_cfg["samples"], dtype=float)


def run_transient_experiment(cfg: dict, out_dir) -> dict:
    """Decompose one windowed response of the configured system exactly.

    Verifies the decomposition identity against simulation before writing
    anything, and additionally checks the diagonal-kernel identities when the
    system is a static nonlinearity followed by a filter.  Identity failures
    raise ``NumericalError`` rather than writing misleading output.
    """
    cfg = validate_config(cfg)
    if cfg["kind"] != "transient":
        raise SpecError("run_transient_experiment needs a transient config")
    t_cfg = cfg["transient"]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    system = _system_from_config(cfg)
    kernel = kernel_from_blocks(system)
    spec = _multisine_from_config(cfg)
    window = generate_multisine(spec).window
    pre = _pre_history_samples(t_cfg, window)
    u = TimeSignal(np.concatenate([pre, window]), n_pre=t_cfg["n_pre"])

    y = simulate_with_history([kernel], u)
    y_bins = dft(y).bins
    dec = transient_terms(kernel, u)
    scale = max(float(np.max(np.abs(y_bins))), 1e-300)
    identity_residual = float(np.max(np.abs(dec.total - y_bins))) / scale
    if identity_residual > _IDENTITY_TOL:
        raise NumericalError(
            f"decomposition identity violated: residual {identity_residual:.3e}"
        )
    t_report = verify_t1_equals_t2(dec)

    report = {
        "schema_version": SCHEMA_VERSION,
        "name": cfg["name"],
        "n_points": spec.n_points,
        "kernel_memory": kernel.memory,
        "pre_history": t_cfg["pre_history"],
        "n_pre": t_cfg["n_pre"],
        "identity_residual": identity_residual,
        "t1_t2_relative_deviation": t_report.max_deviation,
        "max_abs": {
            "ss": float(np.max(np.abs(dec.ss))),
            "t1": float(np.max(np.abs(dec.t1))),
            "t2": float(np.max(np.abs(dec.t2))),
            "t3": float(np.max(np.abs(dec.t3))),
            "transient_total": float(np.max(np.abs(dec.transient_total))),
        },
    }
    if t_cfg["pre_history"] == "periodic":
        # periodic pre-history nulls the difference signal, hence every term
        report["transient_exactly_zero"] = bool(
            report["max_abs"]["transient_total"] == 0.0
        )

    written = []
    written.append(write_signal_csv(out_dir / "input_signal.csv", u))
    written.append(write_signal_csv(out_dir / "output_signal.csv", y))
    written.append(write_spectrum_csv(out_dir / "output_spectrum.csv", y_bins))
    written.append(write_spectrum_csv(out_dir / "ss.csv", dec.ss))
    written.append(write_spectrum_csv(out_dir / "t1.csv", dec.t1))
    written.append(write_spectrum_csv(out_dir / "t2.csv", dec.t2))
    written.append(write_spectrum_csv(out_dir / "t3.csv", dec.t3))
    written.append(
        write_spectrum_csv(out_dir / "transient_total.csv", dec.transient_total)
    )
    written.append(write_surface_csv(out_dir / "h_star_1.csv", dec.h_star_1))
    written.append(write_surface_csv(out_dir / "h_star_2.csv", dec.h_star_2))
    written.append(write_surface_csv(out_dir / "h_star_3.csv", dec.h_star_3))
    written.append(write_kernel_csv(out_dir / "kernel.csv", kernel))

    if cfg["system"]["structure"] == "hammerstein":
        terms = hammerstein_terms(kernel, u)
        predicted = dec.ss - dec.t3 + 2.0 * terms.r_term
        ham_residual = float(np.max(np.abs(predicted - y_bins))) / scale
        ss_scale = max(float(np.max(np.abs(dec.ss))), 1e-300)
        report["hammerstein"] = {
            "identity_residual": ham_residual,
            "q_relative_max": float(np.max(np.abs(terms.q_term))) / ss_scale,
            "r_max_abs": float(np.max(np.abs(terms.r_term))),
        }
        if ham_residual > _IDENTITY_TOL:
            raise NumericalError(
                f"diagonal-kernel identity violated: residual {ham_residual:.3e}"
            )
        if t_cfg["pre_history"] == "zero":
            t1_t3 = float(np.max(np.abs(dec.t1 + dec.t3)))
            t1_scale = max(float(np.max(np.abs(dec.t1))), 1e-300)
            report["hammerstein"]["t1_plus_t3_relative"] = t1_t3 / t1_scale
            if float(np.max(np.abs(terms.r_term))) != 0.0:
                raise NumericalError("cross term R must vanish for zero pre-history")
            if t1_t3 / t1_scale > _IDENTITY_TOL:
                raise NumericalError(
                    "T1 = -T3 violated under zero initial conditions"
                )
        written.append(write_spectrum_csv(out_dir / "r_term.csv", terms.r_term))
        written.append(write_spectrum_csv(out_dir / "q_term.csv", terms.q_term))

    written.append(write_json(out_dir / "report.json", report))
    _finalize(out_dir, cfg, written)
    return report


# ---------------------------------------------------------------------------
# verification and prior export


def run_verify(out_dir=None, seed: int = 0, fast: bool = False):
    """Run the analytic self-checks; optionally write a JSON report."""
    results = run_all(seed=seed, fast=fast)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "schema_version": SCHEMA_VERSION,
            "seed": seed,
            "fast": fast,
            "checks": [
                {
                    "name": r.name,
                    "n_cases": r.n_cases,
                    "max_deviation": r.max_deviation,
                    "tolerance": r.tolerance,
                    "passed": r.passed,
                }
                for r in results
            ],
            "all_passed": all(r.passed for r in results),
        }
        write_json(out_dir / "verify_report.json", payload)
    return results


def export_priors(cfg: dict, out_dir) -> list[Path]:
    """Write the prior pieces implied by an estimation config.

    For each order: the unique-lag time-domain prior, the frequency-domain
    covariance and pseudo-covariance blocks, and the lag reduction table;
    plus the assembled block-diagonal augmented prior over all orders.
    """
    cfg = validate_config(cfg)
    if cfg["kind"] != "estimation":
        raise SpecError("export_priors needs an estimation config")
    est = cfg["estimation"]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = _multisine_from_config(cfg)
    grid = frequency_grid(spec.n_points, spec.excited_indices, max(est["orders"]))
    u = generate_multisine(spec)
    y = simulate_steady_state([kernel_from_blocks(_system_from_config(cfg))], u)
    problem = build_problem(
        grid, dft(y), dft(u), est["memories"], noise_variance=est["noise_variance"]
    )
    hyper = _hyper_from_config(est)
    written = []
    for basis in problem.bases:
        m = basis.order
        prior = build_time_prior(m, basis.memory, hyper.orders[m])
        block = to_frequency_domain(prior, basis.transform)
        written.append(write_matrix_csv(out_dir / f"prior_time_m{m}.csv", prior.matrix))
        written.append(
            write_matrix_csv(out_dir / f"prior_freq_hermitian_m{m}.csv", block.hermitian)
        )
        written.append(
            write_matrix_csv(out_dir / f"prior_freq_pseudo_m{m}.csv", block.pseudo)
        )
        written.append(
            write_reduction_csv(out_dir / f"lag_reduction_m{m}.csv", basis.lag_reduction)
        )
    written.append(
        write_matrix_csv(out_dir / "prior_augmented_total.csv", sigma_tot(problem, hyper))
    )
    written.append(
        write_json(out_dir / "hyperparameters.json", hyper.to_json_dict())
    )
    _finalize(out_dir, cfg, written)
    return written

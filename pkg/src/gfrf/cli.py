"""Command-line front end.

Subcommands::

    gfrf estimate      --config cfg.json --out DIR    run one estimation experiment
    gfrf transient     --config cfg.json --out DIR    run one transient decomposition
    gfrf verify        [--out DIR] [--seed S] [--fast] run the analytic self-checks
    gfrf export-priors --config cfg.json --out DIR    write the implied prior matrices

Exit codes: 0 success, 2 bad input or config, 3 numerical or resource failure
(including failed self-checks).
"""

from __future__ import annotations

import argparse
import sys

from .errors import DimensionError, NumericalError, ResourceError, SpecError
from .experiments import (
    export_priors,
    load_config,
    run_estimation_experiment,
    run_transient_experiment,
    run_verify,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gfrf",
        description="Regularized frequency-domain estimation of Volterra models "
        "and exact transient decomposition of periodic responses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_out(p):
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument(
            "--seed",
            type=int,
            default=None,
            help="override the config's input-signal seed",
        )
        p.add_argument("--quiet", action="store_true", help="suppress the summary line")

    p_est = sub.add_parser("estimate", help="simulate, estimate, and write results")
    add_config_out(p_est)

    p_tr = sub.add_parser("transient", help="decompose one windowed response")
    add_config_out(p_tr)

    p_ver = sub.add_parser("verify", help="run seeded self-checks of the identities")
    p_ver.add_argument("--out", default=None, help="optional directory for the JSON report")
    p_ver.add_argument("--seed", type=int, default=0, help="base seed for the case draws")
    p_ver.add_argument("--fast", action="store_true", help="smaller case counts")
    p_ver.add_argument("--quiet", action="store_true", help="suppress per-check lines")

    p_pr = sub.add_parser("export-priors", help="write prior matrices for a config")
    add_config_out(p_pr)
    return parser


def _load_with_seed(args) -> dict:
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise SpecError("--seed must be >= 0")
        cfg["signal"]["seed"] = args.seed
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "estimate":
            metrics = run_estimation_experiment(_load_with_seed(args), args.out)
            if not args.quiet:
                err = ", ".join(
                    f"order {m}: {e:.3%}" for m, e in metrics["relative_error"].items()
                )
                print(f"estimation '{metrics['name']}' done ({err or 'no reference'})")
        elif args.command == "transient":
            report = run_transient_experiment(_load_with_seed(args), args.out)
            if not args.quiet:
                print(
                    f"transient '{report['name']}' done "
                    f"(identity residual {report['identity_residual']:.3e})"
                )
        elif args.command == "verify":
            results = run_verify(out_dir=args.out, seed=args.seed, fast=args.fast)
            if not args.quiet:
                for r in results:
                    print(r.line())
            if not all(r.passed for r in results):
                print("verification FAILED", file=sys.stderr)
                return 3
            if not args.quiet:
                print(f"all {len(results)} checks passed")
        elif args.command == "export-priors":
            written = export_priors(_load_with_seed(args), args.out)
            if not args.quiet:
                print(f"wrote {len(written) + 1} prior files to {args.out}")
    except (SpecError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ResourceError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``vdilution <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .acceptance import DEFAULT_SEED, TOLERANCES, run_verify
from .channels import DecayModel
from .harness import (
    ConfigError,
    ExperimentConfig,
    delay_sweep_config,
    run_delay_sweep,
    run_hellinger,
    run_mse_sweep,
    run_special_case,
    run_tables,
)


def _common(p: argparse.ArgumentParser, samples_help: str = "samples per grid point") -> None:
    p.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--samples", type=int, help=samples_help)
    p.add_argument("--out", type=Path, default=Path("results"), help="output path or directory")
    p.add_argument("--threads", type=int, default=None, help="worker threads")
    p.add_argument("--extended", action="store_true", help="allow loss runs above four qubits")


def _load_config(args, **defaults) -> ExperimentConfig:
    data = dict(defaults)
    if args.config is not None:
        with open(args.config) as fh:
            data.update(json.load(fh))
    overrides = {"master_seed": args.seed, "samples": args.samples, "threads": args.threads}
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.extended:
        data["extended"] = True
    return ExperimentConfig.from_dict(data)


def _result_path(args, config: ExperimentConfig, name: str) -> Path:
    if config.output_path and args.out == Path("results"):
        return Path(config.output_path)
    return args.out / name if args.out.suffix == "" else args.out


def cmd_mse_sweep(args) -> int:
    config = _load_config(args)
    res = run_mse_sweep(config)
    csv_path, _ = res.write(_result_path(args, config, "mse_sweep"), gnuplot=args.gnuplot)
    print(f"wrote {csv_path}")
    return 0


def cmd_delay_sweep(args) -> int:
    defaults = {}
    if args.config is None:
        defaults = delay_sweep_config(DecayModel("loss", 0.2), (0.0, 1.0, 2.0, 4.0)).to_dict()
    config = _load_config(args, **defaults)
    res = run_delay_sweep(config)
    csv_path, _ = res.write(_result_path(args, config, "delay_sweep"), gnuplot=args.gnuplot)
    print(f"wrote {csv_path}")
    return 0


def cmd_tables(args) -> int:
    seed = DEFAULT_SEED if args.seed is None else args.seed
    run_tables(args.out, samples=args.samples or 10_000, seed=seed, threads=args.threads or 1)
    print(f"wrote tables to {args.out}")
    return 0


def cmd_hellinger(args) -> int:
    config = _load_config(args)
    res = run_hellinger(config)
    csv_path, _ = res.write(_result_path(args, config, "hellinger"), gnuplot=args.gnuplot)
    print(f"wrote {csv_path}")
    return 0


def cmd_special_case(args) -> int:
    seed = DEFAULT_SEED if args.seed is None else args.seed
    out = args.out / "special_case.csv" if args.out.suffix == "" else args.out
    rows = run_special_case(out, eps0=args.eps0, samples=args.samples or 100, seed=seed)
    for r in rows:
        print(" ".join(str(v) for v in r))
    print(f"wrote {out}")
    return 0


def _parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        key, _, value = item.partition("=")
        if key not in TOLERANCES or not value:
            raise ConfigError(f"bad tolerance override {item!r}; expected e.g. C5=1e-12")
        out[key] = float(value)
    return out


def cmd_verify(args) -> int:
    seed = DEFAULT_SEED if args.seed is None else args.seed
    only = set(args.only.split(",")) if args.only else None
    report = run_verify(args.out, seed=seed, only=only, tolerance_overrides=_parse_overrides(args.override_tol),
                        check_determinism=not args.no_determinism,
                        on_result=lambda r: print(f"{r.line()}  [{r.runtime_s:.1f}s]", flush=True))
    print(f"{'all criteria passed' if report['all_passed'] else 'failed: ' + ', '.join(report['failed'])}")
    print(f"report: {Path(args.out) / 'verify_report.json'}")
    return 0 if report["all_passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vdilution", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mse-sweep", help="MSE versus total error rate")
    _common(p)
    p.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")
    p.set_defaults(func=cmd_mse_sweep)

    p = sub.add_parser("delay-sweep", help="MSE versus total delay time (four-qubit ansatz)")
    _common(p)
    p.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")
    p.set_defaults(func=cmd_delay_sweep)

    p = sub.add_parser("tables", help="regenerate the Haar-average and spectrum tables")
    _common(p, "samples per table entry (default 10000)")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("hellinger", help="Hellinger distance of the error-component spectrum")
    _common(p)
    p.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")
    p.set_defaults(func=cmd_hellinger)

    p = sub.add_parser("special-case", help="optimality of the uniform error spectrum")
    _common(p, "random spectra per (d, M) (default 100)")
    p.add_argument("--eps0", type=float, default=0.1)
    p.set_defaults(func=cmd_special_case)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    _common(p)
    p.add_argument("--only", help="comma-separated criterion ids, e.g. C5,C9")
    p.add_argument("--override-tol", action="append", metavar="ID=VALUE",
                   help="replace a criterion tolerance (repeatable)")
    p.add_argument("--no-determinism", action="store_true", help="skip the second run that checks determinism")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

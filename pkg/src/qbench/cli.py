"""
Command-line entry point.

    qbench run        width sweeps of a benchmark family
    qbench qrl-train  the full Q-learning loop on FrozenLake
    qbench report     re-emit tables and figures from a finished run
    qbench verify     quick invariant checks

Options may come from a TOML file (``--config``); flags given on the
command line override it.  Exit status: 0 success, 1 benchmark failure,
2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    pass


def _bool(p, name, help):
    p.add_argument(f"--{name}", action=argparse.BooleanOptionalAction, default=None, help=help)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbench", description="Application-oriented quantum benchmarks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a width sweep")
    run.add_argument("--config", type=Path, help="TOML file with sweep options")
    run.add_argument("--benchmark", choices=["qft1", "qft2", "qpe", "qrl-ansatz"])
    run.add_argument("--min_qubits", type=int, help="minimum number of qubits")
    run.add_argument("--max_qubits", type=int, help="maximum number of qubits")
    run.add_argument("--skip_qubits", type=int, help="step size for qubit sweep")
    run.add_argument("--max_circuits", type=int, help="circuits per qubit size (0: min(2^n, 10))")
    run.add_argument("--num_shots", type=int, help="shots per circuit execution")
    run.add_argument("--num_layers", type=int, help="number of ansatz layers")
    run.add_argument("--init_state", type=int, help="initial state to encode")
    run.add_argument("--n_measurements", type=int, help="number of measured qubits")
    _bool(run, "data_reupload", "enable/disable data re-uploading")
    _bool(run, "nonoise", "run with the noiseless simulator")
    _bool(run, "dynamic", "use mid-circuit measurement variants")
    _bool(run, "crosstalk", "add ZZ crosstalk to the noise model")
    _bool(run, "get_circuits", "also write every circuit as JSON")
    run.add_argument("--sigma_h", type=float, help="std-dev of coherent error rates")
    run.add_argument("--s_max", type=float, help="upper bound of stochastic error rates")
    run.add_argument("--h_zz", type=float, help="ZZ crosstalk strength")
    run.add_argument("--grid", help="device grid as ROWSxCOLS, e.g. 12x12")
    run.add_argument("--engine", choices=["serial", "partitioned"])
    run.add_argument("--workers", type=int, help="partitioned engine worker count (power of two)")
    run.add_argument("--transport", choices=["inprocess", "socket"])
    run.add_argument("--seed", type=int)
    run.add_argument("--noise_seed", type=int)
    run.add_argument("--jobs", type=int, help="circuits executed concurrently")
    run.add_argument("--label", help="series label used in charts")
    run.add_argument("--output_dir", type=str)

    qrl = sub.add_parser("qrl-train", help="train the Q-learning agent")
    qrl.add_argument("--config", type=Path, help="TOML file with training options")
    qrl.add_argument("--preset", choices=["cost", "learn"], help="start from a named preset")
    qrl.add_argument("--num_layers", type=int, help="number of ansatz layers")
    qrl.add_argument("--n_measurements", type=int, help="number of measured qubits")
    qrl.add_argument("--num_shots", type=int, help="shots per circuit execution (0: exact)")
    _bool(qrl, "data_reupload", "enable/disable data re-uploading")
    qrl.add_argument("--total_steps", type=int, help="maximum total environment steps")
    qrl.add_argument("--learning_start", type=int, help="steps before updates begin")
    qrl.add_argument("--params_update", type=int, help="interval between parameter updates")
    qrl.add_argument("--target_update", type=int, help="interval between target updates")
    qrl.add_argument("--batch_size", type=int, help="replay buffer batch size")
    qrl.add_argument("--exploration_fraction", type=float, help="fraction of steps used for exploration")
    qrl.add_argument("--tau", type=float, help="soft update factor")
    _bool(qrl, "nonoise", "run with the noiseless simulator")
    qrl.add_argument("--optimizer", choices=["ADAM", "SPSA", "adam", "spsa"])
    qrl.add_argument("--gamma", type=float, help="discount factor")
    qrl.add_argument("--lr", type=float, help="ADAM learning rate")
    qrl.add_argument("--eps_fixed", type=float, help="constant exploration probability")
    qrl.add_argument("--map_name", choices=["4x4", "8x8"])
    qrl.add_argument("--seed", type=int)
    qrl.add_argument("--output_dir", type=str, default=None)

    rep = sub.add_parser("report", help="re-emit reports from finished runs")
    rep.add_argument("runs", nargs="+", type=Path, help="run directories or manifest files")
    rep.add_argument("--compare", type=Path, help="write an overlay chart of all runs to this path")
    rep.add_argument("--no-figures", action="store_true")

    ver = sub.add_parser("verify", help="run invariant checks")
    ver.add_argument("checks", nargs="*", help="subset of checks (default: all)")
    return parser


def _merge(args: argparse.Namespace, skip: set[str]) -> dict:
    opts = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "rb") as fh:
                opts.update(tomllib.load(fh))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    for k, v in vars(args).items():
        if k in skip or v is None:
            continue
        opts[k] = v
    return opts


def cmd_run(args) -> int:
    from .report import verify_manifest
    from .sweep import SweepConfig, run_sweep

    opts = _merge(args, {"command", "config", "verbose"})
    if isinstance(opts.get("grid"), str):
        try:
            opts["grid"] = tuple(int(x) for x in opts["grid"].lower().split("x"))
        except ValueError as exc:
            raise ConfigError(f"bad grid {opts['grid']!r}") from exc
    if opts.get("max_circuits") == 0:
        opts["max_circuits"] = None
    try:
        cfg = SweepConfig.from_dict(opts)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    manifest = run_sweep(cfg)
    out = Path(cfg.output_dir)
    print((out / "sweep.csv").read_text(), end="")
    print(f"results in {out}/ ({len(manifest.files)} files)")
    if manifest.failed_widths or verify_manifest(manifest):
        for w in manifest.widths:
            if w["status"] != "ok":
                print(f"width {w['width']} failed: {w['error']}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_qrl(args) -> int:
    from . import plotting
    from .qrl import PRESETS, TrainConfig, train

    opts = _merge(args, {"command", "config", "verbose", "preset", "output_dir"})
    preset = args.preset or opts.pop("preset", None)
    output_dir = args.output_dir or opts.pop("output_dir", None)
    try:
        cfg = TrainConfig.from_dict({**PRESETS.get(preset, {}), **opts})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    stats = train(cfg)
    print(stats.console_summary())
    if output_dir:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        stats.write_jsonl(out / "qrl_steps.jsonl")
        stats.write_summary(out / "qrl_summary.json")
        plotting.qrl_steps([asdict(s) for s in stats.steps], out / "qrl_steps", title=f"optimizer {cfg.optimizer}")
        print(f"logs in {out}/")
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import compare_manifests, emit_reports, write_manifest
    from .sweep import RunManifest

    manifests = []
    for run in args.runs:
        try:
            m = RunManifest.load(run)
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise ConfigError(f"cannot load manifest from {run}: {exc}") from exc
        emit_reports(m, figures=not args.no_figures)
        write_manifest(m)
        manifests.append(m)
        print(f"reports refreshed in {m.directory}")
    if args.compare:
        for p in compare_manifests(manifests, args.compare):
            print(f"wrote {p}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import CHECKS, run_checks

    unknown = set(args.checks) - set(CHECKS)
    if unknown:
        raise ConfigError(f"unknown checks {sorted(unknown)}; choose from {sorted(CHECKS)}")
    results = run_checks(args.checks or None)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<22} {r.detail}  ({r.seconds:.2f} s)")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


COMMANDS = {"run": cmd_run, "qrl-train": cmd_qrl, "report": cmd_report, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as benchmark failure
        logging.getLogger("qbench").exception("run failed")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

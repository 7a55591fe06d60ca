"""Command-line interface: ``sparsephase {synth,run,sweep-sparsity,sweep-s,selftest}``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from sparsephase import experiments as ex
from sparsephase import io as fio
from sparsephase.selftest import format_report, run_selftest
from sparsephase.simulate import simulate_instance
from sparsephase.solver import NonFiniteIterateError

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

logger = logging.getLogger("sparsephase")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    default = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, default=default, help="experiment config (JSON)")
    p.add_argument("--output-dir", type=Path, default=default, help="override output_dir")
    p.add_argument("--seed", type=int, default=default, help="override the config seed")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS if suppress else 1,
                   help="parallel runs in sweeps")
    p.add_argument("--algorithm", choices=ex.ALGORITHMS, default=default,
                   help="restrict to one algorithm")
    p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS if suppress else 0)
    return p


def build_parser() -> argparse.ArgumentParser:
    sub_parent = _global_flags(suppress=True)
    parser = _Parser(prog="sparsephase", description=__doc__.splitlines()[0], parents=[_global_flags(False)])
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    subs.add_parser("synth", parents=[sub_parent], help="write a synthetic instance")
    p_run = subs.add_parser("run", parents=[sub_parent], help="solve one instance")
    p_run.add_argument("--instance-dir", type=Path, help="instance written by 'synth'")
    p_run.add_argument("--init", choices=("zero", "truth"), help="initial phase")
    p_run.add_argument("--s", type=int, dest="s_parameter", help="sparsity parameter")
    subs.add_parser("sweep-sparsity", parents=[sub_parent], help="sweep the true sparsity level")
    subs.add_parser("sweep-s", parents=[sub_parent], help="sweep the sparsity parameter")
    subs.add_parser("selftest", parents=[sub_parent], help="run built-in property checks")
    return parser


def _load(args) -> ex.ExperimentConfig:
    cfg = ex.load_config(args.config) if args.config else ex.ExperimentConfig()
    overrides = {}
    if args.output_dir is not None:
        overrides["output_dir"] = str(args.output_dir)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.algorithm is not None:
        overrides["algorithms"] = [args.algorithm]
    if getattr(args, "instance_dir", None) is not None:
        overrides["instance_dir"] = str(args.instance_dir)
    if getattr(args, "init", None) is not None:
        overrides["initial_phase"] = args.init
    if getattr(args, "s_parameter", None) is not None:
        overrides["s_parameter"] = args.s_parameter
    return replace(cfg, **overrides) if overrides else cfg


def cmd_synth(cfg: ex.ExperimentConfig) -> int:
    sim = simulate_instance(cfg.simulation_spec())
    out = ex.write_instance(sim, cfg.output_dir)
    print(f"wrote instance to {out} ({len(sim.support)} aperture pixels, "
          f"sparsity {sim.spec.sparsity_level})")
    return EXIT_OK


def cmd_run(cfg: ex.ExperimentConfig) -> int:
    if cfg.instance_dir is not None:
        try:
            sim = ex.read_instance(cfg.instance_dir)
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: cannot load instance: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
    else:
        sim = simulate_instance(cfg.simulation_spec())
    if cfg.initial_phase == "truth" and sim.truth is None:
        print("error: init 'truth' needs a ground-truth phase", file=sys.stderr)
        return EXIT_USAGE
    s = cfg.s_parameter if cfg.s_parameter is not None else ex.default_s(sim.spec.sparsity_level)
    out = Path(cfg.output_dir)
    status = EXIT_OK
    for alg in cfg.algorithms:
        run_id = f"{alg}-seed{sim.spec.seed}-k{sim.spec.sparsity_level}-s{s}-{cfg.initial_phase}"
        try:
            record, result = ex.execute_run(sim, alg, s, cfg.solver_config(alg), run_id, cfg.initial_phase)
        except NonFiniteIterateError as exc:
            ex.save_run_outputs(out, run_id, exc.trace)
            print(f"error: {run_id}: {exc}", file=sys.stderr)
            status = EXIT_RUNTIME
            continue
        except ValueError as exc:
            print(f"error: {run_id}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        ex.save_run_outputs(out, run_id, result.trace, result.estimate)
        fio.append_run_record(out / "results.csv", record)
        rms = "n/a" if record.final_rms_support is None else f"{record.final_rms_support:.3e}"
        print(f"{run_id}: {record.iterations_used} iterations ({record.termination_reason}), "
              f"final change {record.final_change:.3e}, rms {rms} rad")
    return status


def _sweep(cfg, tasks, threads) -> int:
    summary = ex.run_sweep(cfg, tasks, threads=threads)
    print(f"completed {summary['completed']}, skipped {summary['skipped']}, failed {summary['failed']}"
          f" -> {Path(cfg.output_dir, 'results.csv')}")
    return EXIT_RUNTIME if summary["failed"] else EXIT_OK


def cmd_sweep_sparsity(cfg, threads=1) -> int:
    return _sweep(cfg, ex.sparsity_sweep_tasks(cfg), threads)


def cmd_sweep_s(cfg, threads=1) -> int:
    return _sweep(cfg, ex.s_sweep_tasks(cfg), threads)


def cmd_selftest(seed=None) -> int:
    results = run_selftest(seed=0 if seed is None else seed)
    print(format_report(results))
    return EXIT_OK if all(r.ok for r in results) else EXIT_USAGE


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "selftest":
        return cmd_selftest(args.seed)
    try:
        cfg = _load(args)
        if args.command == "synth":
            return cmd_synth(cfg)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "sweep-sparsity":
            return cmd_sweep_sparsity(cfg, args.threads)
        if args.command == "sweep-s":
            return cmd_sweep_s(cfg, args.threads)
    except ex.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    parser.error(f"unknown command {args.command}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""``ccmlab`` command line: optimize, bound, ber, pdf."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bound import write_bound_csv
from .ccm import ConvergenceError
from .experiment import (
    ConfigError,
    ExperimentConfig,
    emit_pdf_histogram,
    histogram_csv,
    resolve_conj,
    run_ber,
    run_bound,
    run_optimize,
)
from .optimizer import OptimizationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_COMPONENT = 4

log = logging.getLogger("ccmlab")


def _grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad Eb/N0 list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ccmlab", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("optimize", "design h by minimizing the union bound"),
        ("bound", "tabulate the union bound over the Eb/N0 grid"),
        ("ber", "Monte Carlo bit error rate over the Eb/N0 grid"),
        ("pdf", "histogram of the transmitted samples"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="flat key=value file")
        sp.add_argument("--ebn0", type=_grid, help="comma separated Eb/N0 values in dB")
        sp.add_argument("--ibo-db", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out", required=True, help="output path")
        if name == "pdf":
            sp.add_argument("--samples", type=int)
        if name == "optimize":
            sp.add_argument("--trace", help="trace CSV path (default: <out stem>.trace.csv)")
    return p


def load_config(args) -> ExperimentConfig:
    over = {"ibo_db": args.ibo_db, "master_seed": args.seed, "workers": args.workers}
    if args.ebn0 is not None:
        if args.command == "optimize":
            if len(args.ebn0) != 1:
                raise ConfigError("optimize takes a single --ebn0 value")
            over["ebn0_db"] = args.ebn0[0]
        else:
            over["ebn0_grid"] = args.ebn0
    return ExperimentConfig.load(args.config, **over)


def _echo(cfg: ExperimentConfig) -> str:
    return "".join(f"# {line}\n" for line in cfg.to_lines())


def cmd_optimize(cfg: ExperimentConfig, args) -> int:
    trace = run_optimize(cfg)
    out = Path(args.out)
    trace.final.save(out)
    trace_path = Path(args.trace) if args.trace else out.with_suffix(".trace.csv")
    trace.write_csv(trace_path, cfg.to_lines())
    print(f"objective {trace.seed_objective:.6e} -> {trace.final_objective:.6e} ({trace.message})")
    if not trace.converged:
        log.error("optimizer hit the iteration cap; best iterate written to %s", out)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_bound(cfg: ExperimentConfig, args) -> int:
    results = run_bound(cfg, resolve_conj(cfg))
    write_bound_csv(args.out, results, cfg.to_lines())
    for r in results:
        print(f"{r.ebn0_db:g} dB: {r.value:.6e}")
    return EXIT_OK


def cmd_ber(cfg: ExperimentConfig, args) -> int:
    conj = None if cfg.scheme == "baseline" else resolve_conj(cfg)
    curve = run_ber(cfg, conj)
    curve.write_csv(args.out)
    for pt in curve.points:
        print(f"{pt.ebn0_db:g} dB: {pt.bit_errors}/{pt.bits_sent} = {pt.ber:.3e}{' (capped)' if pt.capped else ''}")
    return EXIT_OK


def cmd_pdf(cfg: ExperimentConfig, args) -> int:
    if cfg.scheme == "baseline":
        raise ConfigError("pdf needs a CCM scheme")
    samples = cfg.pdf_samples if args.samples is None else args.samples
    conj = resolve_conj(cfg) if samples else None
    edges, counts = emit_pdf_histogram(cfg, samples, conj)
    Path(args.out).write_text(histogram_csv(cfg, edges, counts))
    return EXIT_OK


COMMANDS = {"optimize": cmd_optimize, "bound": cmd_bound, "ber": cmd_ber, "pdf": cmd_pdf}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OptimizationError, ConvergenceError, ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPONENT


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import (ConfigError, RunSpec, config_document, dump_config, load_config,
                     read_signal_csv, with_overrides, write_manifest,
                     write_trace_csv)
from .design import DesignConstraints, DesignError, assign_sequences, crosstalk_score, validate
from .domains import DomainError
from .enumerator import EnumerationError, enumerate_network
from .fitting import FitError, FitProblem, fit, residual_diagnostics, write_report
from .kinetics import SimulationError, integrate, raw_signal
from .motifs import (MotifParams, build_or_case_schedule, build_renewal_schedule, case_windows,
                     motif_catalog, name_table, species_catalog)
from .plot import emit_plot

DEFAULT_CONFIG = {"motif": "motif_3cycles", "orgate": "orgate_4cases"}


def _add_overrides(p):
    p.add_argument("--kt", type=float, help="seesaw/extraction rate constant (/M/s)")
    p.add_argument("--krep", type=float, help="reporting rate constant (/M/s)")
    p.add_argument("--kleak", type=float, help="leak rate constant (/M/s)")
    p.add_argument("--seed", type=int)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float, help="absolute tolerance (M)")
    p.add_argument("--normalization", help="none | minmax | fixed:<nM>")


def _run_config(args, default=None) -> RunSpec:
    rs = load_config(args.config or default)
    return with_overrides(rs, k_t=args.kt, k_rep=args.krep, k_leak=args.kleak,
                          seed=args.seed, rtol=args.rtol, atol=args.atol,
                          normalization=args.normalization)


def _simulate(rs: RunSpec):
    return integrate(rs.network(), rs.schedule, None, rs.output_dt_s, rs.rtol,
                     rs.atol, rs.normalization)


def _run_params(rs: RunSpec) -> dict:
    doc = config_document(rs)
    return {k: doc[k] for k in ("model", "params", "rtol", "atol", "output_dt_s",
                                "normalization", "seed", "per_cycle_efficiency")}


def cmd_simulate(args) -> int:
    rs = _run_config(args, DEFAULT_CONFIG["motif"])
    trace = _simulate(rs)
    write_trace_csv(trace, args.out)
    write_manifest(args.out, "simulate", args.argv, {"config": rs.source},
                   _run_params(rs), rs.seed)
    if args.plot:
        emit_plot(trace, args.plot, rs.schedule.marks, title=Path(rs.source).stem)
        write_manifest(args.plot, "simulate", args.argv, {"config": rs.source},
                       _run_params(rs), rs.seed)
    print(f"wrote {args.out} ({len(trace)} rows)")
    return 0


def cmd_orgate(args) -> int:
    if args.cases:
        cases = [tuple(int(ch) for ch in c) for c in args.cases.split(",")]
        if any(len(c) != 2 or set(c) - {0, 1} for c in cases):
            raise ConfigError("--cases takes comma-separated bit pairs such as 00,01,10,11")
        rs = with_overrides(load_config(DEFAULT_CONFIG["orgate"]),
                              schedule=build_or_case_schedule(cases, args.phase))
        rs = with_overrides(rs, k_t=args.kt, k_rep=args.krep, k_leak=args.kleak,
                              seed=args.seed, rtol=args.rtol, atol=args.atol,
                              normalization=args.normalization)
        source = f"cases={args.cases}"
    else:
        rs = _run_config(args, DEFAULT_CONFIG["orgate"])
        source = rs.source
    if rs.model != "orgate":
        raise ConfigError("orgate needs a config with model: orgate")
    trace = _simulate(rs)
    write_trace_csv(trace, args.out)
    write_manifest(args.out, "orgate", args.argv, {"config": source}, _run_params(rs),
                   rs.seed)
    reporter = rs.schedule.initial.get("R", 150.0)
    raw = raw_signal(trace)
    for label, t0, t1 in case_windows(rs.schedule):
        sig = float(np.interp(t1, trace.times, raw))
        print(f"{label}\tsignal={sig / reporter:.3f}\t(t={t1:g} s)")
    if args.plot:
        emit_plot(trace, args.plot, rs.schedule.marks, title="OR gate")
    return 0


def cmd_fit(args) -> int:
    rs = _run_config(args, DEFAULT_CONFIG[args.model])
    if rs.model != args.model:
        raise ConfigError(f"config model {rs.model!r} does not match --model {args.model}")
    t, y = read_signal_csv(args.data)
    problem = FitProblem(t, y, rs.schedule, args.model, rs.params,
                         (args.kmin, args.kmax), not args.no_affine, rs.normalization,
                         args.grid, rtol=rs.rtol, atol=rs.atol)
    result = fit(problem, fit_efficiency=args.fit_efficiency)
    diag = residual_diagnostics(result, problem)
    write_report(result, diag, args.out, {"model": args.model, "data": str(args.data),
                                          "bounds": [args.kmin, args.kmax]})
    write_manifest(args.out, "fit", args.argv, {"config": rs.source, "data": str(args.data)},
                   {**_run_params(rs), "bounds": [args.kmin, args.kmax],
                    "fit_affine": not args.no_affine, "grid_points": args.grid}, rs.seed)
    flag = " (boundary)" if result.boundary else ""
    print(f"k_hat = {result.k_hat:.6g} /M/s{flag}; rms = {result.rms:.4g}; "
          f"evaluations = {result.evaluations}")
    return 0


def _tags(model):
    return ("",) if model == "motif" else ("1", "2")


def cmd_enumerate(args) -> int:
    tags = _tags(args.model)
    params = MotifParams(k_t=args.kt or MotifParams.k_t, k_rep=args.krep or MotifParams.k_rep,
                         k_leak=args.kleak or 0.0, collapse_reclosure=not args.expanded)
    catalog = species_catalog(tags)
    seeds = ["R"] + [f"{x}{t}{s}" for t in tags for x, s in
                     (("G", ""), ("I", ""), ("F", ""), ("I", "ex"), ("F", "ex"))]
    net = enumerate_network([catalog[s] for s in seeds], args.max_species, params,
                            name_table(tags))
    Path(args.out).write_text(net.dump())
    write_manifest(args.out, "enumerate", args.argv, {"seeds": seeds},
                   {"model": args.model, "params": asdict(params),
                    "max_species": args.max_species}, None)
    print(f"wrote {len(net)} reactions over {len(net.species)} species to {args.out}")
    return 0


def cmd_design(args) -> int:
    cons = DesignConstraints(max_homopolymer=args.max_homopolymer,
                             max_unintended_run=args.max_run)
    seed = 0 if args.seed is None else args.seed
    a = assign_sequences(motif_catalog(_tags(args.model)), cons, seed)
    report = validate(a, cons)
    a.write(args.out)
    score = crosstalk_score(a)
    write_manifest(args.out, "design", args.argv, {}, {"model": args.model,
                                                        "constraints": asdict(cons)}, seed,
                   {"crosstalk_score": score, "valid": report.ok})
    print(report.summary())
    print(f"crosstalk score: {score}")
    return 0 if report.ok else 1


def cmd_schedule(args) -> int:
    if args.kind == "renewal":
        sched = build_renewal_schedule(args.cycles, args.phase, not args.no_doubling,
                                       args.rule)
        model = "motif"
    else:
        if not args.cases:
            raise ConfigError("--cases is required for OR-case schedules")
        cases = [tuple(int(ch) for ch in c) for c in args.cases.split(",")]
        sched = build_or_case_schedule(cases, args.phase)
        model = "orgate"
    rs = RunSpec(model, sched, output_dt_s=args.output_dt)
    dump_config(rs, args.out)
    write_manifest(args.out, "schedule", args.argv, {},
                   {"kind": args.kind, "cycles": args.cycles, "phase_s": args.phase,
                    "cases": args.cases}, None)
    print(f"wrote {args.out} ({len(sched.events)} injections)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hairpin-seesaw",
                                 description="Hairpin-seesaw gate simulation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a config and write a trace CSV")
    p.add_argument("--config", help="config path or shipped config name")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", help="optional SVG output")
    _add_overrides(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("orgate", help="simulate OR-gate cases and print the truth table")
    p.add_argument("--config")
    p.add_argument("--cases", help="e.g. 00,01,10,11 (overrides --config)")
    p.add_argument("--phase", type=float, default=3600.0)
    p.add_argument("--out", required=True)
    p.add_argument("--plot")
    _add_overrides(p)
    p.set_defaults(func=cmd_orgate)

    p = sub.add_parser("fit", help="maximum-likelihood fit of k_t to a trace")
    p.add_argument("--model", choices=["motif", "orgate"], default="motif")
    p.add_argument("--data", required=True, help="CSV with time_s and signal columns")
    p.add_argument("--config", help="schedule the data were recorded under")
    p.add_argument("--kmin", type=float, default=1e5)
    p.add_argument("--kmax", type=float, default=1e7)
    p.add_argument("--grid", type=int, default=25)
    p.add_argument("--no-affine", action="store_true", help="do not fit amplitude/offset")
    p.add_argument("--fit-efficiency", action="store_true",
                   help="also fit one efficiency multiplier per cycle")
    p.add_argument("--out", default="fit_report.yaml")
    _add_overrides(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("enumerate", help="enumerate the reaction network from structures")
    p.add_argument("--model", choices=["motif", "orgate"], default="motif")
    p.add_argument("--max-species", type=int, default=100)
    p.add_argument("--expanded", action="store_true", help="explicit hairpin reclosure")
    p.add_argument("--out", required=True)
    _add_overrides(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("design", help="assign domain sequences")
    p.add_argument("--model", choices=["motif", "orgate"], default="motif")
    p.add_argument("--max-homopolymer", type=int, default=4)
    p.add_argument("--max-run", type=int, default=5,
                   help="longest allowed unintended complementary run")
    p.add_argument("--out", required=True)
    _add_overrides(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("schedule", help="write an injection-schedule config")
    p.add_argument("--kind", choices=["renewal", "orcases"], default="renewal")
    p.add_argument("--cycles", type=int, default=3)
    p.add_argument("--phase", type=float, default=3600.0)
    p.add_argument("--rule", choices=["equalize", "ratio"], default="equalize")
    p.add_argument("--no-doubling", action="store_true")
    p.add_argument("--cases")
    p.add_argument("--output-dt", type=float, default=10.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_schedule)
    return ap


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1
    args.argv = argv
    try:
        return args.func(args)
    except (SimulationError, FitError, FloatingPointError) as e:
        print(f"error: numerical failure: {e}", file=sys.stderr)
        return 2
    except (ConfigError, DomainError, DesignError, EnumerationError, ValueError,
            KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())

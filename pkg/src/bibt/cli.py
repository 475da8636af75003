"""Command-line entry point: ``bibt {fit,simulate,decompose,report}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical abort.
Failures print a single ``bibt: error: <kind>: <reason>`` line to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import data_io
from .complex import build_operators, hodge_project
from .measures import DEFAULT_LEVELS, QUANTITIES, summarize
from .sampler import ChainAbort, Hyperparams, PosteriorDraws, run_baseline_chain, run_chain
from .simulation import SimConfig, config_dict, run_sweep, sweep_rows

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fail(kind: str, message: str, code: int) -> int:
    print(f"bibt: error: {kind}: {' '.join(str(message).split())}", file=sys.stderr)
    return code


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return value


def _fraction(text):
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {text}")
    return value


def _levels(text):
    try:
        levels = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}") from None
    if not levels or any(not 0 < p < 1 for p in levels):
        raise argparse.ArgumentTypeError("levels must be comma-separated values in (0, 1)")
    return levels


def _add_mcmc_flags(p):
    p.add_argument("--seed", type=int, default=None,
                   help="random seed (falls back to $BIBT_SEED, then 0)")
    p.add_argument("--iters", type=_positive_int, default=10_000, help="MCMC iterations")
    p.add_argument("--burnin", type=_nonneg_int, default=2_000, help="burn-in iterations")
    p.add_argument("--thin", type=_positive_int, default=1, help="keep every n-th draw")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="bibt", description=__doc__.splitlines()[0], formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="fit a model to comparison data", formatter_class=fmt)
    fit.add_argument("--data", required=True, help="input CSV")
    fit.add_argument("--format", choices=data_io.FORMATS, default="game-log",
                     help="input layout")
    fit.add_argument("--model", choices=("bibt", "baseline"), default="bibt",
                     help="intransitive model or the gradient-only baseline")
    fit.add_argument("--levels", type=_levels, default=list(DEFAULT_LEVELS),
                     help="comma-separated quantile levels")
    fit.add_argument("--out", required=True, help="output path prefix")
    _add_mcmc_flags(fit)

    sim = sub.add_parser("simulate", help="run a synthetic replication study", formatter_class=fmt)
    sim.add_argument("--n-entities", type=int, default=10, help="number of entities N")
    trials = sim.add_mutually_exclusive_group()
    trials.add_argument("--trials", type=_nonneg_int, default=None,
                        help="comparisons per pair; 100 when neither trials flag is given")
    trials.add_argument("--trials-range", type=_positive_int, nargs=2, metavar=("LO", "HI"),
                        default=None, help="draw comparisons per pair uniformly from LO..HI")
    sim.add_argument("--sparsity", type=_fraction, nargs="+", default=[0.5],
                     help="one value, or several for a sweep")
    sim.add_argument("--replications", type=_positive_int, default=100,
                     help="replications per sparsity level")
    sim.add_argument("--score-scale", type=float, default=1.0, help="sd of the true scores")
    sim.add_argument("--curl-scale", type=float, default=1.0,
                     help="sd of the nonzero true curl weights")
    sim.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1,
                     help="worker processes over replications")
    sim.add_argument("--out", required=True, help="output path prefix")
    _add_mcmc_flags(sim)

    dec = sub.add_parser("decompose", help="Hodge-decompose an edge flow", formatter_class=fmt)
    dec.add_argument("--flow-csv", default=None, help="CSV with columns i,j,value (1-based)")
    dec.add_argument("--n-entities", type=int, default=None,
                     help="graph size for --dump-operators without a flow")
    dec.add_argument("--dump-operators", action="store_true",
                     help="also write G, C and H as CSV")
    dec.add_argument("--out", default=None, help="output path prefix")

    rep = sub.add_parser("report", help="recompute summaries from stored draws",
                         formatter_class=fmt)
    rep.add_argument("--draws", required=True, help="a *_draws.csv file from `fit`")
    rep.add_argument("--levels", type=_levels, default=list(DEFAULT_LEVELS),
                     help="comma-separated quantile levels")
    rep.add_argument("--labels", default=None, help="comma-separated entity labels")
    rep.add_argument("--model", choices=("bibt", "baseline"), default="bibt",
                     help="model tag recorded in the outputs")
    rep.add_argument("--out", required=True, help="output path prefix")
    return parser


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("BIBT_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"BIBT_SEED must be an integer, got {env!r}") from None
    return 0


def _hyperparams(args) -> Hyperparams:
    try:
        return Hyperparams(n_iterations=args.iters, burn_in=args.burnin, thin=args.thin,
                           seed=_seed(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_fit(args) -> int:
    hp = _hyperparams(args)
    data = data_io.load_games(args.data, args.format)
    ops = build_operators(data.n_entities)
    fit = run_chain if args.model == "bibt" else run_baseline_chain
    draws = fit(data, hp, ops)
    summaries = {q: summarize(draws, q, args.levels, ops.index) for q in QUANTITIES}
    paths = data_io.write_summaries(draws, summaries, args.out)
    gm = summaries["global_measure"]
    print(f"global intransitivity: mean {gm.mean[0]:.3f} sd {gm.sd[0]:.3f}")
    vort = summaries["vorticity"]
    print(f"triads with 95% CI excluding 0: {vort.extra['ci_excludes_zero_count']} "
          f"of {len(vort.mean)}")
    for p in paths:
        print(p)
    return EXIT_OK


def _fmt_cell(v):
    return "   -  " if v is None else f"{v:6.3f}"


def _print_cp_table(report):
    print(f"{'model':10s} {'M90':>6s} {'M95':>6s} {'grad90':>6s} {'grad95':>6s} "
          f"{'curl90':>6s} {'curl95':>6s} {'sec':>7s}")
    keys = ("cp90_M", "cp95_M", "cp90_grad", "cp95_grad", "cp90_curl", "cp95_curl")
    for model in ("baseline", "bibt"):
        avg = report.averages(model)
        if not avg:
            continue
        cells = [avg.get(k) for k in keys]
        if model == "baseline":
            cells[4] = cells[5] = None
        print(f"{model:10s} " + " ".join(_fmt_cell(c) for c in cells)
              + f" {avg['seconds']:7.2f}")
    ref = report.reference()
    if ref:
        for name, row in ref.items():
            print(f"{name + '*':10s} " + " ".join(_fmt_cell(c) for c in row[:6])
                  + f" {row[6]:7.2f}")
        print("* published reference values")


def _study_payload(report):
    payload = {
        "format_version": data_io.FORMAT_VERSION,
        "config": config_dict(report.config),
        "averages": {m: report.averages(m) for m in ("bibt", "baseline")},
        "failures": [{"replication": r.replication, "model": r.model, "error": r.error}
                     for r in report.replications if r.error],
    }
    ref = report.reference()
    if ref:
        payload["reference"] = {k: list(v) for k, v in ref.items()}
    return payload


def cmd_simulate(args) -> int:
    hp = _hyperparams(args)
    if args.n_entities < 3:
        raise UsageError("--n-entities must be at least 3")
    trials = tuple(args.trials_range) if args.trials_range else (
        100 if args.trials is None else args.trials)
    try:
        cfg = SimConfig(n_entities=args.n_entities, trials=trials, sparsity=args.sparsity[0],
                        score_scale=args.score_scale, curl_scale=args.curl_scale,
                        replications=args.replications, master_seed=hp.seed, mcmc=hp)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    reports = run_sweep(cfg, args.sparsity, jobs=args.jobs)
    long_header = ["sparsity", "replication", "model", "metric", "component", "level", "value"]
    long_rows = [
        [sp, rep, model, metric, comp, level if level == "" else float(level),
         None if value is None else float(value)]
        for sp, report in reports.items() for rep, model, metric, comp, level, value
        in report.long_rows()
    ]
    out = args.out
    data_io.write_csv(f"{out}_study.csv", long_header,
                      ([r[0]] + r[1:6] + ["" if r[6] is None else r[6]] for r in long_rows))
    data_io.write_json(f"{out}_study.json",
                       {repr(sp): _study_payload(rep) for sp, rep in reports.items()})
    data_io.write_csv(f"{out}_sweep.csv", ["sparsity", "model", "metric", "value"],
                      ([sp, model, metric, "" if v is None else float(v)]
                       for sp, model, metric, v in sweep_rows(reports)))
    for sp, report in reports.items():
        print(f"sparsity {sp}: {cfg.replications} replications, N={cfg.n_entities}, "
              f"trials={cfg.trials_label}")
        _print_cp_table(report)
    return EXIT_OK


def cmd_decompose(args) -> int:
    if args.flow_csv is None and not (args.dump_operators and args.n_entities):
        raise UsageError("give --flow-csv, or --dump-operators with --n-entities")
    if args.dump_operators and not args.out:
        raise UsageError("--dump-operators needs --out")
    if args.flow_csv is not None:
        n, m = data_io.read_edge_flow(args.flow_csv)
    else:
        n, m = args.n_entities, None
        if n < 3:
            raise UsageError("--n-entities must be at least 3")
    ops = build_operators(n)
    if args.dump_operators:
        for name, mat in (("G", ops.G), ("C", ops.C), ("H", ops.H)):
            data_io.write_matrix(f"{args.out}_{name}.csv", mat)
    if m is None:
        return EXIT_OK
    parts = hodge_project(m, ops)
    total = float(m @ m)
    share = 0.0 if total == 0 else float(parts.m_curl @ parts.m_curl) / total
    print(f"residual {parts.residual:.3e}")
    print(f"curl norm {np.linalg.norm(parts.m_curl):.6e}  grad norm "
          f"{np.linalg.norm(parts.m_grad):.6e}  curl share {share:.6f}")
    print("i,j,value,grad,curl")
    for e, (i, j) in enumerate(ops.index.edges):
        print(f"{i + 1},{j + 1},{data_io.fmt(m[e])},{data_io.fmt(parts.m_grad[e])},"
              f"{data_io.fmt(parts.m_curl[e])}")
    if args.out:
        data_io.write_csv(
            f"{args.out}_decomposition.csv", ["i", "j", "value", "grad", "curl"],
            ([int(i) + 1, int(j) + 1, float(m[e]), float(parts.m_grad[e]),
              float(parts.m_curl[e])] for e, (i, j) in enumerate(ops.index.edges)))
        data_io.write_csv(f"{args.out}_potential.csv", ["entity", "score"],
                          ([i + 1, float(v)] for i, v in enumerate(parts.s_hat)))
    return EXIT_OK


def cmd_report(args) -> int:
    s, w = data_io.read_draws(args.draws)
    N = s.shape[1]
    if N < 3:
        raise data_io.DataError("draws file has fewer than 3 score columns")
    ops = build_operators(N)
    if w.shape[1] not in (0, ops.K):
        raise data_io.DataError(f"expected {ops.K} curl weights for N={N}, found {w.shape[1]}")
    if w.shape[1] == 0:
        w = np.zeros((s.shape[0], ops.K))
    labels = [lab.strip() for lab in args.labels.split(",")] if args.labels else []
    if labels and len(labels) != N:
        raise UsageError(f"--labels needs {N} entries")
    draws = PosteriorDraws.from_parameters(s, w, ops, model=args.model,
                                           entity_labels=labels)
    summaries = {q: summarize(draws, q, args.levels, ops.index) for q in QUANTITIES}
    for p in data_io.write_summaries(draws, summaries, args.out):
        print(p)
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "simulate": cmd_simulate, "decompose": cmd_decompose,
            "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except data_io.DataError as exc:
        return _fail("data", exc, EXIT_DATA)
    except ChainAbort as exc:
        return _fail("numerical", exc, EXIT_NUMERIC)
    except OSError as exc:
        return _fail("data", exc, EXIT_DATA)


if __name__ == "__main__":
    sys.exit(main())

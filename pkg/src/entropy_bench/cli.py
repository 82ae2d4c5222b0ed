"""Command-line entry point: ``entropy-bench <subcommand> [flags]``.

Exit codes: 0 success, 1 usage or I/O error, 2 analytic failure
(verification failed, planting budget exhausted, fit underdetermined).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from ._util import DEFAULT_SEED, mix_seed
from .asymptotics import (ALPHA_GW, P_STAR, RegimeWarning, choose_tail_k, gw_sweep, gw_sweep_csv,
                          poisson_limit_check)
from .continuous import G_BOX, OPTIMIZERS, Box, PolynomialObjective, Simplex, g_objective
from .exact import (CapacityError, DensityOfStates, branch_and_bound_maxkcut, brute_force_maxcut,
                    density_of_states_exact, dos_monte_carlo)
from .graph import Graph, GraphError, gen_gnm, gen_gnp, load_graph, save_graph
from .heuristics import ConfigurationError, TrialSummary, run_trials
from .lp import LpSyntaxError, UnsupportedConstruct, load_lp, qp_bounds, qp_to_polynomial
from .planting import (PRESETS, PlantedGraphSpec, PlantingError, plant_graph, planted_witnesses,
                       verify_planted)
from .thermo import CutHistogram, InsufficientDataError, fit_beta, gibbs_sample, gibbs_sample_chains

log = logging.getLogger("entropy_bench")

EXIT_OK, EXIT_USAGE, EXIT_ANALYTIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- output helpers ---------------------------------------------------------------


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, newline="\n")
        log.info("wrote %s", path)


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}") from exc
    return a, b


def _points(text: str) -> list[tuple[float, ...]]:
    try:
        return [tuple(float(x) for x in p.split(",")) for p in text.split(";") if p.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'x,y;x,y', got {text!r}") from exc


def _spec_from_args(args, g: Graph | None = None) -> PlantedGraphSpec:
    if args.preset:
        return PRESETS[args.preset]
    if args.target_cut is None:
        raise UsageError("give --preset or --target-cut")
    n = g.n if g is not None else args.n
    m = g.m if g is not None else args.m
    if n is None or m is None:
        raise UsageError("--n and --m are required without --preset")
    return PlantedGraphSpec(n, m, args.target_cut, args.min3, args.min4,
                            tuple(args.sides) if args.sides else None)


# -- subcommands ------------------------------------------------------------------


def cmd_gen(args) -> int:
    if (args.m is None) == (args.p is None):
        raise UsageError("give exactly one of --m or --p")
    g = gen_gnm(args.n, args.m, args.seed) if args.m is not None else gen_gnp(args.n, args.p, args.seed)
    _emit(g.to_json(), args.output)
    if args.dimacs:
        Path(args.dimacs).write_text(g.to_dimacs(), newline="\n")
    return EXIT_OK


def cmd_plant(args) -> int:
    spec = _spec_from_args(args)
    log.info("planting n=%d m=%d target=%d (seed %d)", spec.n, spec.m, spec.target_cut, args.seed)
    try:
        g = plant_graph(spec, args.seed, max_attempts=args.max_attempts, workers=args.workers)
    except PlantingError as exc:
        log.error("%s", exc)
        if exc.best is not None and args.output not in (None, "-"):
            save_graph(exc.best, args.output)
        return EXIT_ANALYTIC
    _emit(g.to_json(), args.output)
    if args.dimacs:
        Path(args.dimacs).write_text(g.to_dimacs(), newline="\n")
    if args.report:
        report = verify_planted(g, spec, seed=args.seed, workers=args.workers)
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=2) + "\n", newline="\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    g = load_graph(args.graph)
    spec = _spec_from_args(args, g)
    log.info("verifying %s against max-cut %d", args.graph, spec.target_cut)
    report = verify_planted(g, spec, seed=args.seed, workers=args.workers)
    _emit(json.dumps(report.to_dict(), indent=2) + "\n", args.output)
    return EXIT_OK if report.passed else EXIT_ANALYTIC


def _heuristic_params(args) -> dict:
    if args.alg == "sa":
        keys = {"t_initial": args.t_initial, "t_final": args.t_final, "cooling": args.cooling,
                "moves_per_temperature": args.moves}
    else:
        keys = {"tenure": args.tenure, "max_iterations": args.max_iter}
    return {k: v for k, v in keys.items() if v is not None}


SOLVE_HEADER = TrialSummary.CSV_HEADER + ",proven_optimal"


def _reference(g: Graph, k: int, given: int | None, workers) -> int | None:
    if given is not None:
        return given
    if k == 2 and g.n <= 32:
        log.info("computing exact reference optimum")
        return brute_force_maxcut(g, workers=workers).best_value
    return None


def cmd_solve(args) -> int:
    g = load_graph(args.graph)
    if args.alg in ("exact", "bb"):
        if args.alg == "exact":
            if args.k != 2:
                raise UsageError("--alg exact enumerates 2-cuts; use --alg bb for k > 2")
            sol = brute_force_maxcut(g, workers=args.workers)
        else:
            sol = branch_and_bound_maxkcut(g, args.k, time_budget=args.budget)
        row = TrialSummary(args.alg, 1, sol.best_value, float(sol.best_value), 1.0 if sol.proven_optimal else 0.0,
                           sol.wall_time, sol.best_value)
        _emit(f"{SOLVE_HEADER}\n{row.csv_row(args.k)},{str(sol.proven_optimal).lower()}\n", args.output)
        if args.witness:
            Path(args.witness).write_text(json.dumps({"k": args.k, "value": sol.best_value,
                                                      "labels": list(sol.witness.labels)}) + "\n")
        return EXIT_OK
    ref = _reference(g, args.k, args.reference, args.workers)
    summary = run_trials(args.alg, g, args.k, args.trials, ref if ref is not None else g.m + 1,
                         master_seed=args.seed, params=_heuristic_params(args), workers=args.workers)
    if ref is None:
        # no known optimum: score against the best value any trial reached
        ref = summary.best
        summary.reference_optimum = ref
        summary.success_rate = sum(v >= ref for v in summary.values) / summary.trials
    _emit(f"{SOLVE_HEADER}\n{summary.csv_row(args.k)},\n", args.output)
    if args.per_trial:
        rows = ["trial,seed,value,time_s"] + [
            f"{i},{mix_seed(args.seed, i)},{v},{t:.6f}"
            for i, (v, t) in enumerate(zip(summary.values, summary.times))
        ]
        Path(args.per_trial).write_text("\n".join(rows) + "\n", newline="\n")
    return EXIT_OK


def cmd_dos(args) -> int:
    g = load_graph(args.graph)
    if args.samples is None:
        if args.k != 2:
            raise UsageError("exact DOS is only defined for k = 2; pass --samples for Monte Carlo")
        log.info("enumerating 2^%d bipartitions", g.n - 1)
        dos = density_of_states_exact(g, workers=args.workers)
    else:
        planted = None
        if args.inject_planted and g.planted is not None:
            planted = planted_witnesses(g).get(args.k)
        dos = dos_monte_carlo(g, args.k, args.samples, args.seed, inject=planted, workers=args.workers)
    if args.output in (None, "-"):
        sys.stdout.write(dos.to_csv())
    else:
        dos.save(args.output)
    return EXIT_OK


def cmd_gibbs(args) -> int:
    g = load_graph(args.graph)
    kwargs = {"burn_in": args.burn_in, "thinning": args.thinning}
    if args.chains > 1:
        hist = gibbs_sample_chains(g, args.beta, args.samples, args.chains, seed=args.seed,
                                   workers=args.workers, **kwargs)
    else:
        hist = gibbs_sample(g, args.beta, args.samples, seed=args.seed, **kwargs)
    _emit(hist.to_csv(), args.output)
    return EXIT_OK


def cmd_fit(args) -> int:
    dos = DensityOfStates.load(args.dos)
    hist = CutHistogram.load(args.histogram)
    try:
        fit = fit_beta(dos, hist, (args.beta_min, args.beta_max))
    except InsufficientDataError as exc:
        log.error("fit underdetermined: %s", exc)
        return EXIT_ANALYTIC
    if args.output not in (None, "-"):
        _emit(fit.to_json(), args.output)
    else:
        sys.stdout.write(fit.to_json())
    print(f"beta={fit.beta:.6f} chi2_red={fit.chi2_reduced:.6f}")
    return EXIT_OK


def cmd_poisson(args) -> int:
    k = args.k if args.k is not None else choose_tail_k(args.n, args.lambda_target)
    log.info("sampling %d graphs G(%d, 1/2), tail k=%d", args.graphs, args.n, k)
    with warnings.catch_warnings():
        warnings.simplefilter("always", RegimeWarning)
        report = poisson_limit_check(args.n, k, args.graphs, args.seed, workers=args.workers)
    d = report.to_dict()
    d["dispersion"] = report.dispersion if math.isfinite(report.dispersion) else None
    _emit(json.dumps(d, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_gw(args) -> int:
    _emit(gw_sweep_csv(gw_sweep(args.n, args.beta, args.alpha, args.p_star)), args.output)
    return EXIT_OK


def cmd_poly(args) -> int:
    fn, params_cls = OPTIMIZERS[args.alg]
    params = params_cls(seed=args.seed)
    if args.population is not None:
        params.population = args.population
    if args.iterations is not None:
        params.iterations = args.iterations
    extra = {}
    if args.lp:
        inst = load_lp(args.lp)
        obj = qp_to_polynomial(inst, args.penalty)
        region = qp_bounds(inst, infinite_bound=args.free_bound)
        objective = obj
        extra = {"variables": inst.variables, "sense": inst.sense}
    elif args.poly:
        obj = PolynomialObjective.load(args.poly)
        objective = obj
        if obj.R is not None:
            region = Simplex(obj.dimension, obj.R)
        else:
            lo, hi = args.box
            region = Box.cube(lo, hi, obj.dimension)
    else:
        objective = g_objective
        region = G_BOX if args.box is None else Box.cube(*args.box, 2)
        if args.simplex is not None:
            region = Simplex(2, args.simplex)
    init = None
    if args.init_near:
        rng = np.random.default_rng(mix_seed(args.seed, 1))
        centers = args.init_near
        init = np.array([np.asarray(centers[j % len(centers)]) + rng.uniform(-args.init_radius, args.init_radius,
                                                                             len(centers[0]))
                         for j in range(params.population)])
    result = fn(objective, region, params, init=init)
    d = result.to_dict()
    d.update(algorithm=args.alg, seed=args.seed, **extra)
    _emit(json.dumps(d, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.graph:
        g = load_graph(args.graph)
        spec = PRESETS[args.preset] if args.preset else None
    else:
        spec = PRESETS[args.preset or "paper30"]
        log.info("phase 1: planting %s", args.preset or "paper30")
        try:
            g = plant_graph(spec, args.seed, workers=args.workers)
        except PlantingError as exc:
            log.error("%s", exc)
            return EXIT_ANALYTIC
        if args.save_graph:
            save_graph(g, args.save_graph)
    log.info("phase 2: exact Max-Cut")
    sol = brute_force_maxcut(g, workers=args.workers)
    lines = [SOLVE_HEADER, TrialSummary("exact", 1, sol.best_value, float(sol.best_value), 1.0, sol.wall_time,
                                        sol.best_value).csv_row(2) + ",true"]
    refs = {2: sol.best_value}
    if spec is not None:
        refs.update({3: spec.min_3cut, 4: spec.min_4cut})
    summaries = []
    for k in (2, 3, 4):
        for alg in ("sa", "tabu"):
            log.info("phase 3: %s k=%d, %d trials", alg, k, args.trials)
            ref = refs.get(k)
            s = run_trials(alg, g, k, args.trials, ref if ref is not None else g.m + 1,
                           master_seed=mix_seed(args.seed, k), workers=args.workers)
            if ref is None:
                s.reference_optimum = s.best
                s.success_rate = sum(v >= s.best for v in s.values) / s.trials
            summaries.append((k, s))
            lines.append(s.csv_row(k) + ",")
    _emit("\n".join(lines) + "\n", args.output)
    text = [f"graph: n={g.n} m={g.m}, exact max 2-cut {sol.best_value} ({sol.wall_time:.2f} s)"]
    for k, s in summaries:
        text.append(f"k={k} {s.algorithm:<4} best {s.best:>4} mean {s.mean:8.2f} "
                    f"success {100 * s.success_rate:5.1f}% (>= {s.reference_optimum}) "
                    f"time {1e3 * s.mean_time:7.3f} ms/trial")
    summary = "\n".join(text) + "\n"
    if args.summary:
        Path(args.summary).write_text(summary, newline="\n")
    sys.stderr.write(summary)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"master seed (default {DEFAULT_SEED})")
    common.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: ENTROPY_BENCH_WORKERS or all cores)")
    common.add_argument("-o", "--output", default=None, help="output file (default: standard output)")
    common.add_argument("-q", "--quiet", action="store_true", help="suppress progress lines")

    p = _Parser(prog="entropy-bench", description="Classical Max-Cut and continuous optimization baselines.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def planting_flags(sp, with_size: bool):
        sp.add_argument("--preset", choices=sorted(PRESETS), help="named planting target")
        if with_size:
            sp.add_argument("--n", type=int, help="vertex count")
            sp.add_argument("--m", type=int, help="edge count")
        sp.add_argument("--target-cut", type=int, help="required exact Max-2-Cut")
        sp.add_argument("--min3", type=int, default=0, help="required heuristic 3-cut")
        sp.add_argument("--min4", type=int, default=0, help="required heuristic 4-cut")
        sp.add_argument("--sides", type=_int_list, help="planted side sizes 'a,b'")

    sp = sub.add_parser("gen", parents=[common], help="random graph G(n,m) or G(n,p)")
    sp.add_argument("--n", type=int, required=True, help="vertex count")
    sp.add_argument("--m", type=int, help="exact edge count")
    sp.add_argument("--p", type=float, help="edge probability")
    sp.add_argument("--dimacs", help="also write DIMACS text here")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("plant", parents=[common], help="graph with a planted exact Max-Cut")
    planting_flags(sp, True)
    sp.add_argument("--max-attempts", type=int, default=1000, help="exhaustive checks allowed (default 1000)")
    sp.add_argument("--dimacs", help="also write DIMACS text here")
    sp.add_argument("--report", help="write a verification report JSON here")
    sp.set_defaults(func=cmd_plant)

    sp = sub.add_parser("verify", parents=[common], help="check a graph against planting targets")
    sp.add_argument("graph", help="graph JSON or DIMACS file")
    planting_flags(sp, False)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("solve", parents=[common], help="Max-k-Cut by heuristic trials or exact search")
    sp.add_argument("graph", help="graph JSON or DIMACS file")
    sp.add_argument("--alg", choices=["sa", "tabu", "exact", "bb"], required=True, help="solver")
    sp.add_argument("--k", type=int, default=2, help="number of parts (default 2)")
    sp.add_argument("--trials", type=int, default=100, help="heuristic trials (default 100)")
    sp.add_argument("--budget", type=float, default=60.0, help="branch-and-bound seconds (default 60)")
    sp.add_argument("--reference", type=int, help="optimum used for success rate (default: exact for k=2)")
    sp.add_argument("--per-trial", help="write per-trial CSV here")
    sp.add_argument("--witness", help="write the exact/bb witness labels JSON here")
    sp.add_argument("--t-initial", type=float, help="SA initial temperature (default 10)")
    sp.add_argument("--t-final", type=float, help="SA final temperature (default 0.01)")
    sp.add_argument("--cooling", type=float, help="SA cooling ratio (default 0.95)")
    sp.add_argument("--moves", type=int, help="SA moves per temperature (default 10 n)")
    sp.add_argument("--tenure", type=int, help="tabu tenure (default 7)")
    sp.add_argument("--max-iter", type=int, help="tabu iterations (default 500)")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("dos", parents=[common], help="density of states CSV")
    sp.add_argument("graph", help="graph JSON or DIMACS file")
    sp.add_argument("--k", type=int, default=2, help="number of parts (default 2)")
    sp.add_argument("--samples", type=int, help="Monte-Carlo sample count (default: exact enumeration)")
    sp.add_argument("--inject-planted", action="store_true", help="record planted witnesses in metadata")
    sp.set_defaults(func=cmd_dos)

    sp = sub.add_parser("gibbs", parents=[common], help="Metropolis cut-value histogram")
    sp.add_argument("graph", help="graph JSON or DIMACS file")
    sp.add_argument("--beta", type=float, required=True, help="inverse temperature")
    sp.add_argument("--samples", type=int, default=10000, help="recorded samples (default 10000)")
    sp.add_argument("--burn-in", type=int, help="burn-in steps (default 100 n)")
    sp.add_argument("--thinning", type=int, help="steps between samples (default n)")
    sp.add_argument("--chains", type=int, default=1, help="independent chains (default 1)")
    sp.set_defaults(func=cmd_gibbs)

    sp = sub.add_parser("fit", parents=[common], help="fit beta to a histogram given a DOS")
    sp.add_argument("dos", help="DOS CSV (k,count)")
    sp.add_argument("histogram", help="histogram CSV (k,frequency)")
    sp.add_argument("--beta-min", type=float, default=0.0, help="search lower end (default 0)")
    sp.add_argument("--beta-max", type=float, default=20.0, help="search upper end (default 20)")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("poisson", parents=[common], help="tail-count moments over G(n, 1/2)")
    sp.add_argument("--n", type=int, default=10, help="vertex count (default 10)")
    sp.add_argument("--k", type=int, help="cut value (default: chosen from --lambda-target)")
    sp.add_argument("--lambda-target", type=float, default=1.0, help="target expected count (default 1)")
    sp.add_argument("--graphs", type=int, default=2000, help="sampled graphs (default 2000)")
    sp.set_defaults(func=cmd_poisson)

    sp = sub.add_parser("gw", parents=[common], help="Goemans-Williamson threshold sweep CSV")
    sp.add_argument("--n", type=_int_list, default=[30, 60, 120, 240], help="comma-separated sizes")
    sp.add_argument("--beta", type=float, default=1.0, help="inverse temperature (default 1)")
    sp.add_argument("--alpha", type=float, default=ALPHA_GW, help=f"approximation ratio (default {ALPHA_GW})")
    sp.add_argument("--p-star", type=float, default=P_STAR, help=f"ground-state constant (default {P_STAR})")
    sp.set_defaults(func=cmd_gw)

    sp = sub.add_parser("poly", parents=[common], help="continuous minimization with PSO or ECA")
    sp.add_argument("--alg", choices=sorted(OPTIMIZERS), default="pso", help="optimizer (default pso)")
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--poly", help="polynomial objective JSON (default: the 2-D benchmark g)")
    src.add_argument("--lp", help="LP-format quadratic program")
    sp.add_argument("--box", type=_float_pair, help="box 'lo,hi' per coordinate (default -1,5 for g)")
    sp.add_argument("--simplex", type=float, help="restrict g to x + y = R, x, y >= 0")
    sp.add_argument("--penalty", type=float, default=100.0, help="LP constraint penalty weight (default 100)")
    sp.add_argument("--free-bound", type=float, default=1e3, help="replaces infinite LP bounds (default 1e3)")
    sp.add_argument("--population", type=int, help="population size (default 14)")
    sp.add_argument("--iterations", type=int, help="iterations (default 200)")
    sp.add_argument("--init-near", type=_points, help="start the population around points 'x,y;x,y'")
    sp.add_argument("--init-radius", type=float, default=0.5, help="half-width of the start cube (default 0.5)")
    sp.set_defaults(func=cmd_poly)

    sp = sub.add_parser("bench", parents=[common], help="planted-instance solver comparison table")
    sp.add_argument("--preset", choices=sorted(PRESETS), help="planting target (default paper30)")
    sp.add_argument("--graph", help="use this graph instead of planting one")
    sp.add_argument("--trials", type=int, default=100, help="trials per solver (default 100)")
    sp.add_argument("--save-graph", help="write the planted graph here")
    sp.add_argument("--summary", help="write the human-readable summary here")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except (UsageError, ConfigurationError, GraphError, CapacityError, LpSyntaxError,
            UnsupportedConstruct, ValueError, OSError) as exc:
        log.error("error: %s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

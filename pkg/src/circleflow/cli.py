"""Command-line experiment harness.

Subcommands:
  solve       one power-flow solve, JSON report + optional CSV trace
  sweep       status/rounds/time per (lambda, solver), CSV
  robustness  converged-trial counts under random initialization, CSV
  bench       median wall-clock per (case, solver), CSV

Exit codes: 0 success/converged, 1 non-convergence, 2 parse or validation
failure.  ``--plot`` renders a matplotlib figure next to each CSV.
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
import time

from . import baselines, caseio, fpsolver
from .fpsolver import FlatStart, Status, UniformRandomStart
from .netmodel import NetworkError

SOLVER_NAMES = ("fp", "nr", "gs", "dnr")

_BASELINES = {
    "nr": baselines.solve_newton,
    "gs": baselines.solve_gauss_seidel,
    "dnr": baselines.solve_damped_newton,
}


def _parse_init(text: str):
    if text == "flat":
        return FlatStart()
    if text.startswith("random:"):
        try:
            alpha = float(text.split(":", 1)[1])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad init spec {text!r}") from None
        if not 0.0 <= alpha < 1.0:
            raise argparse.ArgumentTypeError("init alpha must be in [0, 1)")
        return UniformRandomStart(alpha=alpha)
    raise argparse.ArgumentTypeError(
        f"bad init spec {text!r} (expected 'flat' or 'random:ALPHA')")


def _with_seed(init, seed: int):
    if isinstance(init, UniformRandomStart):
        return UniformRandomStart(alpha=init.alpha, seed=seed)
    return init


def _run_solver(solver: str, case, *, tol, max_rounds, init) -> fpsolver.SolveReport:
    if solver == "fp":
        cfg = fpsolver.SolverConfig(tol=tol, max_rounds=max_rounds, init=init)
        return fpsolver.solve(case, cfg)
    cfg = baselines.BaselineConfig(tol=tol, max_iters=max_rounds, init=init)
    return _BASELINES[solver](case, cfg)


def _load(args) -> caseio.NetworkCase:
    case = caseio.load_case(args.case)
    if args.lam != 1.0:
        case = caseio.scale_loading(case, args.lam)
    return case


def _maybe_plot_trace(path: str, trace, title: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(range(len(trace)), [max(v, 1e-16) for v in trace])
    ax.set_xlabel("round")
    ax.set_ylabel("max mismatch (p.u.)")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cmd_solve(args) -> int:
    case = _load(args)
    init = _with_seed(args.init, args.seed)
    report = _run_solver(args.solver, case, tol=args.tol,
                         max_rounds=args.max_rounds, init=init)
    payload = caseio.report_to_dict(case, report, args.solver, args.lam)
    if args.out:
        caseio.write_report_json(args.out, payload)
    else:
        import json
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    if args.trace:
        caseio.write_trace_csv(args.trace, report.mismatch_trace)
        if args.plot:
            _maybe_plot_trace(
                args.trace.rsplit(".", 1)[0] + ".png", report.mismatch_trace,
                f"{case.name} / {args.solver} / lambda={args.lam:g}")
    return 0 if report.status is Status.CONVERGED else 1


def cmd_sweep(args) -> int:
    base = caseio.load_case(args.case)
    init = _with_seed(args.init, args.seed)
    rows = []
    for lam in args.lambdas:
        case = caseio.scale_loading(base, lam) if lam != 1.0 else base
        for solver in args.solvers:
            t0 = time.perf_counter()
            report = _run_solver(solver, case, tol=args.tol,
                                 max_rounds=args.max_rounds, init=init)
            dt = time.perf_counter() - t0
            rows.append([f"{lam:g}", solver, report.status.value,
                         report.rounds, f"{dt:.6f}"])
    header = ["lambda", "solver", "status", "rounds", "seconds"]
    _write_csv(args.out, header, rows)
    if args.plot and args.out:
        _plot_sweep(args.out.rsplit(".", 1)[0] + ".png", rows, base.name)
    return 0


def _plot_sweep(path: str, rows, case_name: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    solvers = sorted({r[1] for r in rows})
    for solver in solvers:
        pts = [(float(r[0]), r[4], r[2]) for r in rows if r[1] == solver]
        lams = [p[0] for p in pts]
        rounds = [float(p[1]) for p in pts]
        ax.plot(lams, rounds, marker="o", label=solver)
        for lam, sec, status in pts:
            if status != "converged":
                ax.annotate("x", (lam, float(sec)), color="red")
    ax.set_xlabel("load scaling")
    ax.set_ylabel("seconds")
    ax.set_title(f"{case_name} lambda sweep")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def run_robustness_trials(case, solver: str, alpha: float, trials: int,
                          seed: int, tol: float, max_rounds: int) -> int:
    """Count converged trials with per-trial seeds seed+i (reproducible
    individually)."""
    converged = 0
    for i in range(trials):
        init = UniformRandomStart(alpha=alpha, seed=seed + i)
        report = _run_solver(solver, case, tol=tol, max_rounds=max_rounds,
                             init=init)
        if report.status is Status.CONVERGED:
            converged += 1
    return converged


def cmd_robustness(args) -> int:
    case = _load(args)
    rows = []
    for alpha in args.alphas:
        row = [f"{alpha:g}"]
        for solver in args.solvers:
            row.append(run_robustness_trials(
                case, solver, alpha, args.trials, args.seed,
                args.tol, args.max_rounds))
        rows.append(row)
    header = ["alpha"] + [f"{s}_converged" for s in args.solvers]
    _write_csv(args.out, header, rows)
    if args.plot and args.out:
        _plot_robustness(args.out.rsplit(".", 1)[0] + ".png",
                         header, rows, case.name, args.trials)
    return 0


def _plot_robustness(path: str, header, rows, case_name: str, trials: int) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    alphas = [float(r[0]) for r in rows]
    for j, name in enumerate(header[1:], start=1):
        ax.plot(alphas, [int(r[j]) for r in rows], marker="o",
                label=name.replace("_converged", ""))
    ax.set_xlabel("initialization spread alpha")
    ax.set_ylabel(f"converged / {trials}")
    ax.set_title(f"{case_name} random-start robustness")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cmd_bench(args) -> int:
    init = _with_seed(args.init, args.seed)
    rows = []
    for name in args.cases:
        case = caseio.load_case(name)
        if args.lam != 1.0:
            case = caseio.scale_loading(case, args.lam)
        for solver in args.solvers:
            times = []
            status = None
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                report = _run_solver(solver, case, tol=args.tol,
                                     max_rounds=args.max_rounds, init=init)
                times.append(time.perf_counter() - t0)
                status = report.status.value
            rows.append([case.name, solver, status,
                         f"{statistics.median(times):.6f}"])
    _write_csv(args.out, ["case", "solver", "status", "median_seconds"], rows)
    return 0


def _write_csv(path, header, rows) -> None:
    if path:
        fh = open(path, "w", newline="")
    else:
        fh = sys.stdout
    writer = csv.writer(fh)
    writer.writerow(header)
    writer.writerows(rows)
    if path:
        fh.close()


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-rounds", type=int, default=5000)
    p.add_argument("--init", type=_parse_init, default=FlatStart(),
                   help="flat | random:ALPHA")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plot", action="store_true",
                   help="also render a figure next to the CSV output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="circleflow",
        description="Power-flow solvers based on circle intersection, "
                    "with NR/GS/damped-NR baselines.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one solve")
    p.add_argument("--case", required=True)
    p.add_argument("--solver", choices=SOLVER_NAMES, default="fp")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--trace", help="CSV mismatch-trace path")
    p.add_argument("--out", help="JSON report path (default: stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="lambda sweep over solvers")
    p.add_argument("--case", required=True)
    p.add_argument("--lambdas", type=float, nargs="+", required=True)
    p.add_argument("--solvers", choices=SOLVER_NAMES, nargs="+",
                   default=["fp", "nr"])
    p.add_argument("--out", help="CSV path (default: stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("robustness", help="random-start convergence counts")
    p.add_argument("--case", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--alphas", type=float, nargs="+",
                   default=[0.05, 0.1, 0.2, 0.3, 0.4, 0.6, 0.9])
    p.add_argument("--solvers", choices=SOLVER_NAMES, nargs="+",
                   default=["fp", "nr"])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--out", help="CSV path (default: stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("bench", help="median wall-clock per case/solver")
    p.add_argument("--cases", nargs="+", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--solvers", choices=SOLVER_NAMES, nargs="+",
                   default=list(SOLVER_NAMES))
    p.add_argument("--repeats", type=int, default=9)
    p.add_argument("--out", help="CSV path (default: stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if hasattr(args, "trials") and args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return 2
    if hasattr(args, "lam") and args.lam <= 0:
        print("error: --lambda must be > 0", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (caseio.ParseError, NetworkError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

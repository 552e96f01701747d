"""Batch command-line front end.

Subcommands write CSV data plus a JSON manifest; nothing but progress goes to
stdout. Settings resolve as command-line flags > ``--config`` file > built-in
defaults. Exit codes: 0 success, 2 usage or validation error, 3 numerical
failure, 4 capacity exceeded.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import CapacityError, HybridSearchError, NumericalError
from .io import write_csv, write_manifest, write_matrix_csv

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_CAPACITY = 0, 2, 3, 4

TOLERANCES = {
    "closed_norm": 1e-9,
    "open_trace": 1e-8,
    "min_gap_s": 1e-12,
    "transition_width_s": 1e-12,
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def parse_grid(text: str) -> np.ndarray:
    """``a:b:k`` (k points from a to b inclusive), a comma list, or one number."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            lo, hi, k = float(parts[0]), float(parts[1]), int(parts[2])
            if k < 1:
                raise ValueError
            return np.linspace(lo, hi, k)
        return np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use lo:hi:count or a comma list") from None


def parse_int_range(text: str) -> list[int]:
    """``lo:hi`` inclusive or a comma list of integers."""
    text = str(text).strip()
    try:
        if ":" in text:
            lo, hi = (int(x) for x in text.split(":"))
            return list(range(lo, hi + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer range {text!r}") from None


def parse_float_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in str(text).split(":"))
        return lo, hi
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; use lo:hi") from None


def _positive_int(text) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in {"1", "true", "yes", "on"}:
        return True
    if t in {"0", "false", "no", "off"}:
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` and ``;`` start comments."""
    text = Path(path).read_text(encoding="utf-8")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string("[config]\n" + text)
    return {k.strip().replace("-", "_"): v.strip() for k, v in cp["config"].items()}


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.stem + ".manifest.json")


def _schedule_for(n: int, kind: str, t_f: float | None = None):
    from .schedules import analytic_schedule, linear_schedule, numeric_schedule

    if kind == "analytic":
        return analytic_schedule(n, t_f=t_f or 1.0)
    if kind == "numeric":
        return numeric_schedule(n, t_f=t_f or 1.0, strict=True)
    if kind == "linear":
        return linear_schedule(t_f or 1.0)
    raise UsageError(f"unknown schedule kind {kind!r}")


def _workers(args) -> int:
    return args.workers or os.cpu_count() or 1


def _map(fn, tasks, workers: int):
    """Ordered map, in a process pool when more than one worker is requested."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        futures = [pool.submit(fn, *t) for t in tasks]
        return [f.result() for f in futures]


def _plot(paths) -> list[str]:
    from .plotting import render_csv

    return [str(render_csv(p)) for p in paths]


# ---------------------------------------------------------------------------
# schedule


def cmd_schedule(args) -> dict:
    from .schedules import ac_schedule, analytic_schedule, linear_schedule, numeric_schedule

    if (args.epsilon is None) == (args.tf is None):
        raise UsageError("give exactly one of --epsilon and --tf")
    out = Path(args.out)
    kind = args.kind
    if kind == "ac":
        if args.g_min is None:
            raise UsageError("--kind ac needs --g-min")
        sched = ac_schedule(args.g_min, epsilon=args.epsilon, t_f=args.tf, samples=args.samples)
    else:
        if args.n is None:
            raise UsageError(f"--kind {kind} needs --n")
        if kind == "analytic":
            sched = analytic_schedule(args.n, epsilon=args.epsilon, t_f=args.tf, samples=args.samples)
        elif kind == "numeric":
            sched = numeric_schedule(args.n, epsilon=args.epsilon, t_f=args.tf, mesh=args.mesh,
                                     tol=args.tol, max_iter=args.max_iter, strict=True)
            if args.samples != sched.tau.size:
                tau = np.linspace(0.0, 1.0, args.samples)
                sched = type(sched)(sched.kind, sched.epsilon, sched.t_f, tau, sched(tau), n=sched.n,
                                    converged=sched.converged, residuals=sched.residuals, sampled=True)
        else:
            t_f = args.tf if args.tf is not None else 1.0
            sched = linear_schedule(t_f, samples=args.samples, epsilon=args.epsilon)
    write_csv(out, ["tau", "s"], zip(sched.tau, sched.s))
    outputs = [str(out)]
    if args.plot:
        outputs += _plot([out])
    return {
        "outputs": outputs,
        "results": {"epsilon": sched.epsilon, "t_f": sched.t_f, "epsilon_t_f": sched.epsilon_tf,
                    "converged": sched.converged, "iterations": len(sched.residuals)},
        "manifest": _manifest_path(out),
    }


# ---------------------------------------------------------------------------
# evolve


def cmd_evolve(args) -> dict:
    from .dynamics import EvolutionConfig, evolve_closed, evolve_open
    from .model import ACModel, SearchSystem
    from .schedules import HybridSpec, ac_schedule, beta_from_gamma, optimal_beta

    if args.gamma is not None and args.beta is not None:
        raise UsageError("--gamma and --beta are mutually exclusive")
    if not 0 <= args.alpha <= 1:
        raise UsageError("--alpha must lie in [0, 1]")
    if args.tf is None:
        raise UsageError("--tf is required")
    out = Path(args.out)
    kappa = args.kappa or 0.0
    if args.g_min is not None:
        if kappa > 0:
            raise UsageError("dephasing is only defined for hypercube systems")
        system = ACModel(args.g_min, args.q)
        beta = 0.5
        if args.gamma is not None:
            beta = beta_from_gamma(args.gamma)
        elif args.beta is not None:
            beta = args.beta
        sched = None
        if args.alpha > 0:
            # only the shape in tau matters; the runtime comes from --tf
            sched = (_schedule_for(1, "linear") if args.schedule == "linear"
                     else ac_schedule(args.g_min, t_f=args.tf or 1.0))
    else:
        if args.n is None:
            raise UsageError("give --n (hypercube) or --g-min (avoided-crossing model)")
        rep = args.representation or ("full" if kappa > 0 else "line")
        if kappa > 0 and rep != "full":
            raise UsageError("kappa > 0 requires --representation full")
        system = (SearchSystem.line(args.n) if rep == "line"
                  else SearchSystem.full(args.n, args.marked))
        if args.gamma is not None:
            beta = beta_from_gamma(args.gamma)
        elif args.beta is not None:
            beta = args.beta
        else:
            beta = optimal_beta(args.n)
        sched = _schedule_for(args.n, args.schedule, args.tf or 1.0) if args.alpha > 0 else None
    spec = HybridSpec(args.alpha, beta, sched)
    config = EvolutionConfig(args.tf, steps=args.steps, record_stride=args.stride,
                             allow_long=args.allow_long)
    if kappa > 0:
        res = evolve_open(system, spec, config, kappa)
    else:
        res = evolve_closed(system, spec, config)
    if args.tf == 0:
        rows = [(0.0, res.success[0])]
    else:
        rows = zip(res.times, res.success)
    write_csv(out, ["t", "P"], rows)
    outputs = [str(out)]
    if args.plot:
        outputs += _plot([out])
    return {
        "outputs": outputs,
        "results": {"final_P": res.final_success, "steps": res.steps, "beta": beta,
                    "final_norm_error": res.final_norm_error},
        "manifest": _manifest_path(out),
    }


# ---------------------------------------------------------------------------
# sweep


def _closed_row(n, alpha, beta, schedule, t_fs, steps):
    from .dynamics import line_success_surface

    return line_success_surface(n, [alpha], beta, schedule, t_fs, steps)[0]


def _open_row(n, alpha, beta, schedule, t_fs, kappas, steps):
    from .dynamics import open_success_surface
    from .model import SearchSystem

    return open_success_surface(SearchSystem.full(n), [alpha], beta, schedule, t_fs, kappas, steps)[0]


def _ac_row(g_min, alpha, t_fs, misspec, steps):
    from .dynamics import ac_success_surface
    from .model import ACModel
    from .strategy import gap_misspec_surface, misspec_position

    if misspec is None or misspec.delta == 0:
        return ac_success_surface(g_min, [alpha], t_fs, 0.0, steps=steps)[0, :, 0]
    if misspec.kind.value == "gap":
        return gap_misspec_surface(g_min, [alpha], t_fs, misspec.delta,
                                   misspec.quadrature_nodes, steps)[0]
    return misspec_position(ACModel(g_min), [alpha], t_fs, misspec.delta,
                            misspec.quadrature_nodes, steps)[0]


def _write_maps(out_dir: Path, smap, row_name: str, col_name: str, tag: str = "") -> list[Path]:
    paths = []
    for name, values in (("alpha_map", smap.alpha_o), ("r_map", smap.r_o),
                         ("tf_map", smap.t_f_o), ("total_time_map", smap.total_time)):
        p = out_dir / f"{name}{tag}.csv"
        write_matrix_csv(p, row_name, col_name, smap.row_axis, smap.col_axis, values)
        paths.append(p)
    return paths


def cmd_sweep(args) -> dict:
    from .dynamics import default_steps, runtime_cap
    from .model import ACModel, OPEN_SYSTEM_MAX_N, SearchSystem
    from .schedules import optimal_beta
    from .strategy import MisspecConfig, strategy_map

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    mode = args.mode
    alphas = np.round(args.alpha_grid if args.alpha_grid is not None else np.linspace(0, 1, 11), 12)
    targets = args.target if args.target is not None else np.array([0.95])
    t_inits = args.tinit if args.tinit is not None else np.array([0.0])
    if np.any((targets <= 0) | (targets >= 1)):
        raise UsageError("targets must lie in (0, 1)")
    if np.any(alphas < 0) or np.any(alphas > 1):
        raise UsageError("alpha grid must lie in [0, 1]")
    misspec = MisspecConfig.parse(args.misspec, args.nodes) if args.misspec else None
    if misspec is not None and mode != "ac":
        raise UsageError("--misspec is only supported in ac mode")
    workers = _workers(args)
    failures = []
    outputs = []
    params = {}

    if mode == "ac":
        g = args.g_min if args.g_min is not None else 0.01
        t_fs = args.tf_grid if args.tf_grid is not None else np.linspace(0.0, 5 * np.pi / g, 201)
        steps = args.steps or 2000
        tasks = [(g, float(a), t_fs, misspec, steps) for a in alphas]
        rows = _map(_ac_row, tasks, workers)
        params.update(g_min=g, steps=steps)
    else:
        if args.n is None:
            raise UsageError(f"--mode {mode} needs --n")
        n = args.n
        beta = args.beta if args.beta is not None else optimal_beta(n)
        if mode == "closed":
            cap = runtime_cap(SearchSystem.line(n))
            t_fs = args.tf_grid if args.tf_grid is not None else np.linspace(0.0, cap, 201)
            steps = args.steps or default_steps(float(np.max(t_fs)))
            sched = _schedule_for(n, args.schedule)
            tasks = [(n, float(a), beta, sched, t_fs, steps) for a in alphas]
            rows = _map(_closed_row, tasks, workers)
        elif mode == "open":
            if n > OPEN_SYSTEM_MAX_N:
                raise CapacityError(f"open-system sweeps limited to n <= {OPEN_SYSTEM_MAX_N}")
            kappas = args.kappa_grid if args.kappa_grid is not None else np.array([0.0])
            t_fs = args.tf_grid if args.tf_grid is not None else np.linspace(0.0, 200.0, 41)
            steps = args.steps
            sched = _schedule_for(n, args.schedule)
            tasks = [(n, float(a), beta, sched, t_fs, kappas, steps) for a in alphas]
            rows = _map(_open_row, tasks, workers)
            params["kappa_grid"] = kappas
        else:
            raise UsageError(f"unknown mode {mode!r}")
        params.update(n=n, beta=beta, steps=steps)

    surface = np.array(rows, float)
    if not np.all(np.isfinite(surface)):
        failures.append("non-finite surface values")
    if mode == "open":
        for k, kappa in enumerate(params["kappa_grid"]):
            p = out_dir / f"surface_kappa={float(kappa)!r}.csv"
            write_matrix_csv(p, "alpha", "t_f", alphas, t_fs, surface[:, :, k])
            outputs.append(p)
        smaps = [strategy_map(surface[:, :, k], alphas, t_fs, targets, t_inits, args.r_max)
                 for k in range(surface.shape[2])]
        kappas = params["kappa_grid"]
        if targets.size == 1:
            col_name, cols, pick = "t_init", t_inits, lambda m: m[:, 0]
        elif t_inits.size == 1:
            col_name, cols, pick = "target", targets, lambda m: m[0, :]
        else:
            raise UsageError("open mode maps need a single target or a single t_init")
        from .strategy import StrategyMap

        combined = StrategyMap(kappas, cols,
                               np.array([pick(m.alpha_o) for m in smaps]),
                               np.array([pick(m.r_o) for m in smaps]),
                               np.array([pick(m.t_f_o) for m in smaps]),
                               np.array([pick(m.total_time) for m in smaps]))
        outputs += _write_maps(out_dir, combined, "kappa", col_name)
        trace = []
        for k, m in enumerate(smaps):
            for i, ti in enumerate(t_inits):
                for j, tg in enumerate(targets):
                    trace.append((kappas[k], ti, tg, m.alpha_o[i, j], m.t_f_o[i, j], m.r_o[i, j],
                                  m.total_time[i, j]))
        header = ["kappa", "t_init", "target", "alpha_o", "t_f_o", "r_o", "total_time"]
    else:
        p = out_dir / "surface.csv"
        write_matrix_csv(p, "alpha", "t_f", alphas, t_fs, surface)
        outputs.append(p)
        smap = strategy_map(surface, alphas, t_fs, targets, t_inits, args.r_max)
        outputs += _write_maps(out_dir, smap, "t_init", "target")
        trace = [(ti, tg, smap.alpha_o[i, j], smap.t_f_o[i, j], smap.r_o[i, j], smap.total_time[i, j])
                 for i, ti in enumerate(t_inits) for j, tg in enumerate(targets)]
        header = ["t_init", "target", "alpha_o", "t_f_o", "r_o", "total_time"]
    p = out_dir / "protocol.csv"
    write_csv(p, header, trace)
    outputs.append(p)
    if args.plot:
        outputs += [Path(x) for x in _plot([q for q in outputs if q.suffix == ".csv"])]
    params.update(alpha_grid=alphas, tf_grid=t_fs, targets=targets, t_inits=t_inits)
    return {
        "outputs": [str(q) for q in outputs],
        "results": {"failures": failures, "resolved": params},
        "manifest": out_dir / "manifest.json",
        "exit": EXIT_NUMERICAL if failures else EXIT_OK,
    }


# ---------------------------------------------------------------------------
# gapscan and fit


GAPSCAN_HEADER = ["n", "s_m", "g_min", "gap02_min", "overlap_init_E0", "overlap_init_E1",
                  "overlap_m_E0", "overlap_m_E1", "p_max_qw", "p_max_deficit", "init_deficit",
                  "marked_deficit", "gamma_o", "width"]


def gapscan_row(n: int, p: float, profile_points: int) -> list:
    from .exceptions import ConvergenceError
    from .spectral import gap_profile, ground_overlaps, min_gap, transition_width
    from .schedules import optimal_gamma

    mg = min_gap(n)
    # E2 - E0 is smallest near the crossing; scan a window around s_m
    half = min(0.5, max(50 * mg.g_min, 0.05))
    lo, hi = max(0.0, mg.s_m - half), min(1.0, mg.s_m + half)
    prof = gap_profile(n, np.unique(np.append(np.linspace(lo, hi, profile_points), mg.s_m)))
    ov = ground_overlaps(n)
    try:
        width = transition_width(n, p)[2]
    except ConvergenceError:
        width = float("nan")
    return [n, mg.s_m, mg.g_min, float(np.min(prof.gap02)), ov.overlap_init_E0, ov.overlap_init_E1,
            ov.overlap_m_E0, ov.overlap_m_E1, ov.p_max_qw, ov.p_max_deficit, ov.deficit_init,
            ov.deficit_m, optimal_gamma(n), width]


def cmd_gapscan(args) -> dict:
    ns = args.n_range
    if ns is None:
        raise UsageError("--n-range is required")
    if not ns or min(ns) < 2:
        raise UsageError("--n-range must contain sizes >= 2")
    from .model import LINE_MAX_N

    if max(ns) > LINE_MAX_N:
        raise CapacityError(f"line representation limited to n <= {LINE_MAX_N}")
    rows = _map(gapscan_row, [(n, args.p, args.profile_points) for n in ns], _workers(args))
    out = Path(args.out)
    write_csv(out, GAPSCAN_HEADER, rows)
    outputs = [str(out)]
    if args.plot:
        outputs += _plot([out])
    return {"outputs": outputs, "results": {"sizes": ns}, "manifest": _manifest_path(out)}


def cmd_fit(args) -> dict:
    from .io import read_csv
    from .strategy import scaling_fit

    if args.input is None:
        raise UsageError("--in is required")
    header, data = read_csv(args.input)
    if args.x not in header:
        raise UsageError(f"column {args.x!r} not in {args.input}")
    xs = data[:, header.index(args.x)]
    ys_names = args.y or [h for h in header if h != args.x]
    rows = []
    for name in ys_names:
        if name not in header:
            raise UsageError(f"column {name!r} not in {args.input}")
        y = data[:, header.index(name)]
        fr = scaling_fit(np.column_stack([xs, y]), args.model, args.range)
        lo, hi = args.range if args.range else (float(xs.min()), float(xs.max()))
        rows.append([name, fr.model.value, fr.prefactor, fr.exponent, fr.r_squared, lo, hi])
    out = Path(args.out)
    write_csv(out, ["column", "model", "prefactor", "exponent", "r_squared", "x_lo", "x_hi"], rows)
    return {"outputs": [str(out)], "results": {"fits": rows}, "manifest": _manifest_path(out)}


def cmd_report(args) -> dict:
    paths = []
    for p in map(Path, args.paths):
        if p.is_dir():
            paths += sorted(p.glob("*.csv"))
        elif p.suffix == ".csv":
            paths.append(p)
        else:
            raise UsageError(f"{p} is neither a CSV file nor a directory")
    if not paths:
        raise UsageError("no CSV files to render")
    from .plotting import render_csv

    rendered = []
    for p in paths:
        try:
            rendered.append(str(render_csv(p)))
            print(rendered[-1])
        except ValueError as exc:
            print(f"skipped: {exc}")
    return {"outputs": rendered, "results": {}, "manifest": None}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridsearch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file supplying defaults")
    common.add_argument("--workers", type=_positive_int, help="worker processes (default: all cores)")
    common.add_argument("--plot", type=_bool, nargs="?", const=True, default=False,
                        help="also render PNG figures next to the CSV output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", parents=[common], help="sample an annealing schedule")
    p.add_argument("--n", type=int)
    p.add_argument("--g-min", type=float)
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--epsilon", type=float)
    grp.add_argument("--tf", type=float)
    p.add_argument("--kind", choices=["analytic", "numeric", "linear", "ac"], default="analytic")
    p.add_argument("--samples", type=_positive_int, default=1001)
    p.add_argument("--mesh", type=_positive_int, default=4097)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=_positive_int, default=100)
    p.add_argument("--out", default="schedule.csv")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("evolve", parents=[common], help="time-evolve one search")
    p.add_argument("--n", type=int)
    p.add_argument("--g-min", type=float, help="use the avoided-crossing model")
    p.add_argument("--q", type=float, default=0.0, help="crossing shift for the avoided-crossing model")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--tf", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--steps", type=_positive_int)
    p.add_argument("--stride", type=_positive_int, default=1)
    p.add_argument("--representation", choices=["line", "full"])
    p.add_argument("--marked", help="marked vertex bitstring (full representation)")
    p.add_argument("--schedule", choices=["analytic", "numeric", "linear"], default="numeric")
    p.add_argument("--allow-long", type=_bool, nargs="?", const=True, default=False)
    p.add_argument("--out", default="evolution.csv")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("sweep", parents=[common], help="success surfaces and strategy maps")
    p.add_argument("--mode", choices=["closed", "open", "ac"], default="closed")
    p.add_argument("--n", type=int)
    p.add_argument("--g-min", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--alpha-grid", type=parse_grid)
    p.add_argument("--tf-grid", type=parse_grid)
    p.add_argument("--target", type=parse_grid)
    p.add_argument("--tinit", type=parse_grid)
    p.add_argument("--kappa-grid", type=parse_grid)
    p.add_argument("--misspec", help="gap:DELTA or position:DELTA (ac mode)")
    p.add_argument("--nodes", type=_positive_int, default=129, help="Gauss-Hermite nodes")
    p.add_argument("--steps", type=_positive_int)
    p.add_argument("--schedule", choices=["analytic", "numeric", "linear"], default="numeric")
    p.add_argument("--r-max", type=_positive_int, default=1000)
    p.add_argument("--out-dir", default="sweep")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gapscan", parents=[common], help="spectral quantities versus n")
    p.add_argument("--n-range", type=parse_int_range)
    p.add_argument("--p", type=float, default=0.95, help="transition-width threshold")
    p.add_argument("--profile-points", type=_positive_int, default=2001)
    p.add_argument("--out", default="gapscan.csv")
    p.set_defaults(func=cmd_gapscan)

    p = sub.add_parser("fit", parents=[common], help="power-law or exponential fits")
    p.add_argument("--in", dest="input")
    p.add_argument("--x", default="n")
    p.add_argument("--y", action="append", help="column to fit (repeatable; default all)")
    p.add_argument("--model", choices=["power", "exponential"], default="power")
    p.add_argument("--range", type=parse_float_range)
    p.add_argument("--out", default="fit.csv")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", parents=[common], help="render PNG figures for CSV outputs")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_report)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config or not known.command:
        return
    try:
        cfg = read_config(known.config)
    except (OSError, configparser.Error) as exc:
        parser.error(f"cannot read config file {known.config}: {exc}")
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = subparsers.choices.get(known.command)
    if sp is None:
        return
    # keys may name either the destination or the long option ("in" for --in)
    names = {}
    for a in sp._actions:
        names[a.dest] = a.dest
        for opt in a.option_strings:
            names[opt.lstrip("-").replace("-", "_")] = a.dest
    names.pop("help", None)
    names.pop("config", None)
    unknown = sorted(set(cfg) - set(names))
    if unknown:
        parser.error(f"unknown config keys for {known.command}: {', '.join(unknown)}")
    sp.set_defaults(**{names[k]: v for k, v in cfg.items()})


def _resolved_params(args) -> dict:
    skip = {"func", "config"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        info = args.func(args)
    except (UsageError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ImportError as exc:
        print(f"error: {exc}; plotting needs the optional 'plot' extra (matplotlib)", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, HybridSearchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if info.get("manifest") is not None:
        manifest = {
            "command": args.command,
            "parameters": _resolved_params(args),
            "version": __version__,
            "tolerances": TOLERANCES,
            "outputs": info["outputs"],
            "results": info.get("results", {}),
            "wall_clock_seconds": round(time.perf_counter() - start, 3),
        }
        write_manifest(info["manifest"], manifest)
    print(f"{args.command}: wrote {len(info['outputs'])} file(s)")
    return info.get("exit", EXIT_OK)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``mfg-route {solve,simulate,verify,scenario,converge}``.

Exit codes: 0 on success, 1 on a domain or validation error (a JSON
document ``{"error": code, "detail": text}`` is printed on stdout), 2 on a
usage error. ``MFG_ROUTE_THREADS`` caps worker threads; outputs do not
depend on it.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .equilibrium import epsilon_gap, equilibrium, indifference_check
from .exceptions import GameError
from .gridworld import (
    GridScenario,
    build_grid_game,
    grid_from_dict,
    grid_to_dict,
    run_figure_experiment,
    shannon_entropy,
)
from .heatmap import render_heatmap
from .population import convergence_curve, limit_tax, sample_population
from .solver import value_at

THREADS_ENV = "MFG_ROUTE_THREADS"
DEFAULT_MIN_FLOW = 0.05


class UsageError(Exception):
    pass


def max_workers():
    raw = os.environ.get(THREADS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        return os.cpu_count() or 1
    return max(n, 1)


def _map(fn, items):
    items = list(items)
    workers = min(max_workers(), max(len(items), 1))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _int_list(text):
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _edge(text):
    try:
        t, i, j = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an edge as t,i,j, got {text!r}")
    return t, i, j


def _load(cfg):
    spec = io.load_spec(cfg.spec)
    if cfg.alpha is not None:
        spec = spec.with_alpha(cfg.alpha)
    return spec


def _out(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _flow_edges(spec, Q, P, min_flow):
    g = spec.graph
    flow = P[:-1, g.src] * Q
    return [(int(t), int(g.src[e]), int(g.dst[e])) for t, e in zip(*np.nonzero(flow >= min_flow))]


def _convergence_rows(spec, Q, P, edges, N_list):
    def one(edge):
        t, i, j = edge
        e = spec.graph.edge_index(i, j)
        limit = float(limit_tax(spec.alpha, Q[t, e], spec.reference_policy[t, e]))
        return [(t, i, j, n, pi, limit, gap)
                for n, pi, gap in convergence_curve(spec, Q, P, edge, N_list)]

    return [row for rows in _map(one, edges) for row in rows]


def cmd_solve(cfg):
    spec = _load(cfg)
    out = _out(cfg)
    logphi, Q, P = equilibrium(spec)
    io.write_policy_csv(out / "policy.csv", Q, spec.graph)
    io.write_logphi_csv(out / "logphi.csv", logphi)
    io.write_distribution_csv(out / "trajectory.csv", P)
    io.write_json(out / "value.json", {
        "alpha": spec.alpha,
        "horizon": spec.horizon,
        "value": value_at(logphi, 0, spec.initial_dist, spec.alpha),
    })


def cmd_simulate(cfg):
    if cfg.agents is None:
        raise UsageError("simulate requires --agents")
    spec = _load(cfg)
    out = _out(cfg)
    _, Q, P = equilibrium(spec)
    sample = sample_population(spec, Q, cfg.agents, cfg.seed)
    io.write_sample(out, sample, spec, P_star=P, trajectories=cfg.trajectories)


def cmd_verify(cfg):
    if not cfg.n_list:
        raise UsageError("verify requires a non-empty --n-list")
    spec = _load(cfg)
    out = _out(cfg)
    _, Q, P = equilibrium(spec)
    reports = _map(lambda n: epsilon_gap(spec, n), cfg.n_list)
    io.write_csv(out / "epsilon.csv", ["N", "epsilon"], ((r.N, r.epsilon_gap) for r in reports))
    ind = indifference_check(spec, cfg.policies, cfg.seed)
    io.write_json(out / "indifference.json", {
        "spread": ind.spread,
        "relative_spread": ind.spread / max(1.0, abs(ind.equilibrium_value)),
        "evaluated": ind.evaluated,
        "skipped": ind.skipped,
        "equilibrium_value": ind.equilibrium_value,
    })
    edges = _flow_edges(spec, Q, P, cfg.min_flow)
    io.write_csv(out / "convergence.csv", ["t", "i", "j", "N", "Pi_N", "limit", "gap"],
                 _convergence_rows(spec, Q, P, edges, cfg.n_list))


def cmd_converge(cfg):
    if not cfg.n_list:
        raise UsageError("converge requires a non-empty --n-list")
    spec = _load(cfg)
    out = _out(cfg)
    _, Q, P = equilibrium(spec)
    edges = cfg.edge or _flow_edges(spec, Q, P, cfg.min_flow)
    io.write_csv(out / "convergence.csv", ["t", "i", "j", "N", "Pi_N", "limit", "gap"],
                 _convergence_rows(spec, Q, P, edges, cfg.n_list))


def cmd_scenario(cfg):
    if cfg.spec:
        with open(cfg.spec, encoding="utf-8") as fh:
            doc = json.load(fh)
        if "grid" not in doc:
            raise UsageError("scenario --spec must contain a \"grid\" block")
        sc = grid_from_dict(doc["grid"])
    else:
        sc = GridScenario()
    out = _out(cfg)
    alphas = cfg.alpha_list or [0.1, 1.0]
    times = cfg.snapshots if cfg.snapshots is not None else [20, 35, 50]
    snaps = dict(zip(alphas, _map(lambda a: run_figure_experiment(sc, times, [a]), alphas)))
    rows, summary = [], {"scenario": grid_to_dict(sc)["grid"], "snapshots": []}
    blocked = sc.obstacle_mask()
    for a in alphas:
        for t in times:
            P = snaps[a][(float(a), int(t))]
            name = f"heatmap_alpha{a:g}_t{t}.ppm"
            render_heatmap(P, sc, out / name, scale=cfg.scale)
            rows.extend((a, t, i, P[i]) for i in range(sc.num_cells))
            summary["snapshots"].append({
                "alpha": a, "t": t, "file": name, "entropy": shannon_entropy(P),
                "obstacle_mass": float(P[blocked].sum()),
            })
    io.write_csv(out / "snapshots.csv", ["alpha", "t", "i", "probability"], rows)
    io.write_json(out / "scenario_summary.json", summary)
    if cfg.emit_spec:
        io.save_spec(build_grid_game(sc), out / "game.json")


COMMANDS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "scenario": cmd_scenario,
    "converge": cmd_converge,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="mfg-route", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, spec_required=True):
        p.add_argument("--spec", required=spec_required, help="game document (JSON)")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("solve", help="equilibrium policy, log-desirability, trajectory, value")
    common(p)
    p.add_argument("--alpha", type=float)

    p = sub.add_parser("simulate", help="sample a finite population playing the equilibrium")
    common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--agents", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trajectories", action="store_true", help="also write per-agent paths")

    p = sub.add_parser("verify", help="epsilon-Nash gaps, indifference and tax convergence")
    common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n-list", type=_int_list, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policies", type=int, default=100, help="random policies for indifference")
    p.add_argument("--min-flow", type=float, default=DEFAULT_MIN_FLOW,
                   help="edges with equilibrium flow below this are left out of convergence.csv")

    p = sub.add_parser("converge", help="expected tax versus population size")
    common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n-list", type=_int_list, default=None)
    p.add_argument("--edge", type=_edge, action="append", help="t,i,j (repeatable)")
    p.add_argument("--min-flow", type=float, default=DEFAULT_MIN_FLOW)

    p = sub.add_parser("scenario", help="grid-world snapshots and PPM heatmaps")
    common(p, spec_required=False)
    p.add_argument("--alpha", dest="alpha_list", type=_float_list, default=None)
    p.add_argument("--snapshots", type=_int_list, default=None)
    p.add_argument("--scale", type=int, default=1, help="pixels per cell edge")
    p.add_argument("--emit-spec", action="store_true", help="also write the expanded game.json")
    return parser


def _fail(code, detail, status):
    print(json.dumps({"error": code, "detail": detail}))
    return status


def main(argv=None):
    parser = build_parser()
    cfg = parser.parse_args(argv)
    try:
        COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail("UsageError", str(exc), 2)
    except GameError as exc:
        return _fail(exc.code, str(exc), 1)
    except json.JSONDecodeError as exc:
        return _fail("InvalidJson", str(exc), 1)
    except OSError as exc:
        return _fail("IoError", str(exc), 1)
    except ValueError as exc:
        return _fail("BadValue", str(exc), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the lines are also
collected into an "acceptance criteria" section of the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from mfg_route import (
    GameSpec,
    GridScenario,
    backward_phi,
    build_grid_game,
    convergence_curve,
    epsilon_gap,
    equilibrium,
    expected_tax_poisson_binomial,
    expected_tax_symmetric,
    indifference_check,
    kl_objective,
    optimal_policy,
    run_figure_experiment,
    sample_population,
    value_at,
)
from mfg_route.cli import main
from mfg_route.equilibrium import random_policy
from mfg_route.gridworld import grid_to_dict, shannon_entropy
from mfg_route.io import write_json
from mfg_route.propagation import trajectory

import conftest
from conftest import random_game
from oracles import grid_simplex_min, kl_cost_direct


def _report(number, label, ok, detail, elapsed, limit=None):
    timing = f"{elapsed:.2f}s" + (f" / {limit:g}s" if limit is not None else "")
    line = f"[{'PASS' if ok else 'FAIL'}] {number}. {label}: {detail} ({timing})"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _two_node():
    return GameSpec.build([[0, 1], [1]], 1, {(0, 1): 1.0}, [0.0, 0.0], [1.0, 0.0], 1.0)


def test_1_optimality_on_small_games():
    start = time.perf_counter()
    worst_bellman = worst_oracle = 0.0
    beaten = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        spec = random_game(rng, V_range=(1, 6), T_range=(1, 5), cost_high=10.0)
        g = spec.graph
        logphi = backward_phi(spec)
        Q = optimal_policy(spec, logphi)
        P = trajectory(spec, Q)
        for t in range(spec.horizon):
            for Pt in (P[t], rng.dirichlet(np.ones(g.num_nodes))):
                flow = Pt[g.src] * Q[t]
                stage = np.sum(flow * (spec.action_cost[t]
                                       + spec.alpha * np.log(Q[t] / spec.reference_policy[t])))
                nxt = np.bincount(g.dst, weights=flow, minlength=g.num_nodes)
                lhs = value_at(logphi, t, Pt, spec.alpha)
                rhs = stage + value_at(logphi, t + 1, nxt, spec.alpha)
                worst_bellman = max(worst_bellman, abs(lhs - rhs) / max(1.0, abs(lhs)))
        best = kl_objective(spec, Q)
        value = value_at(logphi, 0, spec.initial_dist, spec.alpha)
        worst_oracle = max(worst_oracle, abs(kl_cost_direct(spec, Q) - value) / max(1.0, abs(value)))
        for k in range(200):
            other = random_policy(g, spec.horizon, rng, sparsity=0.5 if k % 2 else 0.0)
            beaten += kl_objective(spec, other) < best
    elapsed = time.perf_counter() - start
    ok = worst_bellman <= 1e-9 and worst_oracle <= 1e-9 and beaten == 0 and elapsed < 10
    _report(1, "optimality on 50 small games", ok,
            f"max Bellman residual {worst_bellman:.1e}, objective vs direct {worst_oracle:.1e}, "
            f"{beaten}/10000 random policies cheaper", elapsed, 10)


def test_2_one_step_closed_form():
    start = time.perf_counter()
    worst_q = worst_v = 0.0
    worst_case = None
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        d = int(rng.integers(1, 6))
        costs = rng.uniform(0, 10, d)
        CT = rng.uniform(0, 10, d)
        R = rng.dirichlet(np.ones(d))
        alpha = float(rng.choice([0.5, 1.0, 2.0]))
        # node 0 chooses among d absorbing successors
        spec = GameSpec.build([list(range(1, d + 1))] + [[k] for k in range(1, d + 1)], 1,
                              np.concatenate([costs, np.zeros(d)]), np.concatenate([[0], CT]),
                              np.eye(d + 1)[0], alpha,
                              reference_policy=np.concatenate([R, np.ones(d)]))
        logphi = backward_phi(spec)
        Q = optimal_policy(spec, logphi)
        v_grid, q_grid = grid_simplex_min(costs + CT, R, alpha)
        worst_q = max(worst_q, float(np.max(np.abs(q_grid - Q[0, :d]))))
        gap = abs(v_grid - value_at(logphi, 0, spec.initial_dist, alpha))
        if gap > worst_v:
            worst_v, worst_case = gap, (seed, alpha, float(Q[0, :d].min()))
    elapsed = time.perf_counter() - start
    ok = worst_q <= 1e-3 and worst_v <= 1e-5 and elapsed < 30
    # the grid cannot represent probabilities below its step; rounding such an
    # entry costs roughly alpha * min(Q*), which dominates the value gap
    seed, alpha, q_min = worst_case
    _report(2, "one-step closed form vs simplex grid (step 1e-3)", ok,
            f"policy sup-norm {worst_q:.1e}, value {worst_v:.1e} "
            f"(worst: instance {seed}, alpha {alpha:g}, min Q* {q_min:.1e})", elapsed, 30)


def test_3_indifference_under_limit_taxes():
    start = time.perf_counter()
    worst_spread = worst_value = 0.0
    evaluated = 0
    for seed in range(10):
        spec = random_game(np.random.default_rng(2000 + seed))
        _, Q, _ = equilibrium(spec)
        assert np.all(Q > 0)
        res = indifference_check(spec, 100, seed=seed)
        evaluated += res.evaluated
        scale = max(1.0, abs(res.equilibrium_value))
        worst_spread = max(worst_spread, res.spread / scale)
        logphi = backward_phi(spec)
        direct = -spec.alpha * float(np.dot(spec.initial_dist, logphi[0]))
        worst_value = max(worst_value, abs(direct - res.equilibrium_value) / scale)
    elapsed = time.perf_counter() - start
    ok = worst_spread <= 1e-9 and worst_value <= 1e-9 and evaluated == 1010 and elapsed < 5
    _report(3, "indifference under limit taxes", ok,
            f"max relative spread {worst_spread:.1e} over {evaluated} policies, "
            f"value mismatch {worst_value:.1e}", elapsed, 5)


def test_4_tax_convergence_two_node():
    start = time.perf_counter()
    spec = _two_node()
    _, Q, P = equilibrium(spec)
    g = spec.graph
    rows = []
    for e in range(g.num_edges):
        if P[0, g.src[e]] * Q[0, e] >= 0.05:
            curve = convergence_curve(spec, Q, P, (0, int(g.src[e]), int(g.dst[e])), [100, 10**5])
            rows.append((int(g.src[e]), int(g.dst[e]), curve[0][2], curve[1][2]))
    elapsed = time.perf_counter() - start
    ok = (len(rows) == 2 and all(b < a and b <= 1e-2 for _, _, a, b in rows) and elapsed < 5)
    detail = ", ".join(f"{i}->{j}: gap {a:.1e} -> {b:.1e}" for i, j, a, b in rows)
    _report(4, "expected tax converges to its limit (N=1e2 -> 1e5)", ok, detail, elapsed, 5)


def test_5_poisson_binomial_against_binomial_and_monte_carlo():
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    for N in (1, 2, 3, 10, 57, 100, 400, 1000):
        for _ in range(3):
            p_loc, q, r = rng.uniform(0.01, 1), rng.uniform(0, 1), rng.uniform(0.05, 1)
            alpha = float(rng.choice([0.5, 1.0, 2.0]))
            sym = expected_tax_symmetric(N, alpha, p_loc, q, r)
            het = expected_tax_poisson_binomial(np.full(N - 1, p_loc * q), np.full(N - 1, p_loc),
                                                alpha, r)
            worst = max(worst, abs(sym - het))

    m, draws, chunk = 25, 10**6, 10**5
    loc = rng.uniform(0.1, 1.0, m)
    joint = loc * rng.uniform(0.0, 1.0, m)
    alpha, r = 1.5, 0.3
    exact = expected_tax_poisson_binomial(joint, loc, alpha, r)
    total = total_sq = 0.0
    for _ in range(draws // chunk):
        u = rng.random((chunk, m))
        at_node = u < loc
        on_edge = u < joint  # joint <= loc, so taking the edge implies being at the node
        tax = alpha * (np.log1p(on_edge.sum(1)) - np.log1p(at_node.sum(1))) - alpha * math.log(r)
        total += tax.sum()
        total_sq += np.dot(tax, tax)
    mean = total / draws
    se = math.sqrt((total_sq / draws - mean ** 2) / (draws - 1))
    z = (mean - exact) / se
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and abs(z) <= 3 and elapsed < 60
    _report(5, "heterogeneous expected tax", ok,
            f"identical-probability max diff {worst:.1e} (N <= 1000); "
            f"1e6-draw Monte Carlo z = {z:+.2f}", elapsed, 60)


def test_6_epsilon_trend():
    start = time.perf_counter()
    N_list = (1, 2, 5, 10, 100, 1000, 10**4)
    lowest, worst_limit, decreasing = np.inf, 0.0, 0
    for seed in range(5):
        spec = random_game(np.random.default_rng(3000 + seed), V_range=(2, 5), T_range=(1, 4),
                           min_degree=2)
        eps = {N: epsilon_gap(spec, N).epsilon_gap for N in N_list}
        lowest = min(lowest, min(eps.values()))
        decreasing += eps[10**4] < eps[10]
        worst_limit = max(worst_limit, abs(epsilon_gap(spec, None, limit=True).epsilon_gap))
    elapsed = time.perf_counter() - start
    ok = lowest >= -1e-9 and decreasing == 5 and worst_limit <= 1e-9 and elapsed < 60
    _report(6, "epsilon-Nash gap trend", ok,
            f"min gap {lowest:.1e}, eps(1e4) < eps(10) on {decreasing}/5 games, "
            f"limit-tax gap {worst_limit:.1e}", elapsed, 60)


def test_7_grid_world_reproduction(tmp_path):
    start = time.perf_counter()
    sc = GridScenario()
    spec = build_grid_game(sc)
    blocked = sc.obstacle_mask()
    near = np.array([sc.manhattan(i, sc.destination) <= 2 for i in range(sc.num_cells)])
    checks, solve_times = {}, []
    trajectories = {}
    for a in (0.1, 1.0):
        t0 = time.perf_counter()
        s = spec.with_alpha(a)
        trajectories[a] = trajectory(s, optimal_policy(s, backward_phi(s)))
        solve_times.append(time.perf_counter() - t0)
    checks["a"] = max(float(P[:, blocked].sum(axis=1).max()) for P in trajectories.values())
    checks["b"] = all(shannon_entropy(trajectories[1.0][t]) >= shannon_entropy(trajectories[0.1][t])
                      for t in (20, 35, 50))
    checks["c"] = all(P[70, near].sum() > P[35, near].sum() for P in trajectories.values())
    checks["d"] = max(solve_times)
    snaps = run_figure_experiment(sc)
    same = all(np.array_equal(snaps[(a, t)], trajectories[a][t]) for a, t in snaps)
    outputs = []
    for run in ("first", "second"):
        assert main(["scenario", "--out", str(tmp_path / run)]) == 0
        outputs.append({p.name: p.read_bytes() for p in (tmp_path / run).glob("*.ppm")})
    checks["e"] = len(outputs[0]) == 6 and outputs[0] == outputs[1]
    elapsed = time.perf_counter() - start
    ok = (checks["a"] <= 1e-8 and checks["b"] and checks["c"] and checks["d"] < 1.0
          and checks["e"] and same)
    _report(7, "grid world snapshots", ok,
            f"obstacle mass {checks['a']:.1e}, entropy ordering {checks['b']}, "
            f"terminal pull {checks['c']}, slowest solve {checks['d'] * 1e3:.0f} ms, "
            f"six identical PPMs {checks['e']}", elapsed)


def test_8_monte_carlo_consistency():
    start = time.perf_counter()
    spec = build_grid_game(GridScenario())
    g = spec.graph
    _, Q, P = equilibrium(spec)
    t, N = 35, 10**4
    busy = np.flatnonzero(P[t, g.src] * Q[t] >= 0.02)
    Pi = np.array([expected_tax_symmetric(N, spec.alpha, P[t, g.src[e]], Q[t, e],
                                          spec.reference_policy[t, e]) for e in busy])
    deviations, residuals, weights = [], [], []
    for seed in range(5):
        s = sample_population(spec, Q, N, seed)
        deviations.append(float(np.abs(s.node_counts[t] / N - P[t]).max()))
        residuals.append(s.realized_tax[t, busy] - Pi)
        weights.append(s.edge_counts[t, busy])
    r = np.concatenate(residuals)
    w = np.concatenate(weights).astype(float)
    # agent-weighted mean residual and its sandwich standard error
    mean = np.dot(w, r) / w.sum()
    se = math.sqrt(np.dot(w ** 2, (r - mean) ** 2)) / w.sum()
    elapsed = time.perf_counter() - start
    ok = max(deviations) <= 0.02 and abs(mean) <= 3 * se and elapsed < 60
    _report(8, "Monte Carlo frequencies and realized taxes on the grid", ok,
            f"max frequency deviation {max(deviations):.4f}, "
            f"tax residual {mean:+.1e} = {mean / se:+.2f} SE over {len(busy)} edges x 5 seeds",
            elapsed, 60)


def test_9_thread_count_determinism(tmp_path, monkeypatch):
    start = time.perf_counter()
    spec_path = tmp_path / "grid.json"
    write_json(spec_path, grid_to_dict(GridScenario()))
    commands = {
        "solve": [],
        "simulate": ["--agents", "10000", "--seed", "42"],
        "verify": ["--n-list", "10,100,1000", "--seed", "42"],
    }
    outputs = {}
    for threads in ("1", "8"):
        monkeypatch.setenv("MFG_ROUTE_THREADS", threads)
        for name, extra in commands.items():
            out = tmp_path / threads / name
            assert main([name, "--spec", str(spec_path), "--out", str(out), *extra]) == 0
            for p in sorted(out.iterdir()):
                outputs.setdefault((name, p.name), []).append(p.read_bytes())
        out = tmp_path / threads / "scenario"
        assert main(["scenario", "--out", str(out)]) == 0
        for p in sorted(out.iterdir()):
            outputs.setdefault(("scenario", p.name), []).append(p.read_bytes())
    differing = [k for k, v in outputs.items() if len(v) != 2 or v[0] != v[1]]
    elapsed = time.perf_counter() - start
    ok = not differing and len(outputs) >= 12
    _report(9, "byte-identical outputs with 1 and 8 threads", ok,
            f"{len(outputs)} files compared, {len(differing)} differ", elapsed)

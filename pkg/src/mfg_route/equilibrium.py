"""Equilibrium checks: deviation costs, best responses and the epsilon-Nash gap.

For fixed expected taxes ``Pi`` a single driver's cost is linear in the driver's
policy, so the best response is a deterministic policy obtained by plain
backward dynamic programming.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_policy, check_positive_int
from .exceptions import UndefinedTax
from .population import expected_log_shares, limit_tax
from .propagation import trajectory
from .solver import backward_phi, optimal_policy, value_at


@dataclass(frozen=True, eq=False)
class DeviationReport:
    N: int
    J_equilibrium: float
    J_best_response: float
    epsilon_gap: float
    best_response_policy: np.ndarray

    def to_dict(self):
        return {"N": self.N, "J_eq": self.J_equilibrium, "J_br": self.J_best_response,
                "epsilon": self.epsilon_gap}


@dataclass(frozen=True)
class IndifferenceResult:
    spread: float
    evaluated: int
    skipped: int
    equilibrium_value: float


def equilibrium(spec):
    """``(logphi, Q*, P*)`` for ``spec``."""
    logphi = backward_phi(spec)
    Q = optimal_policy(spec, logphi)
    return logphi, Q, trajectory(spec, Q)


def limit_tax_table(spec, Q_star):
    """Large-population taxes ``alpha log(Q*/R)``; ``+inf`` where ``Q*`` vanished."""
    taxes = limit_tax(spec.alpha, Q_star, spec.reference_policy)
    return np.where(Q_star > 0, taxes, np.inf)


def finite_tax_table(spec, N, Q_star, P_star):
    """Exact expected taxes with ``N`` drivers, all others playing ``Q_star``."""
    g = spec.graph
    loc = np.minimum(P_star[:-1, g.src], 1.0)
    joint = loc * np.minimum(Q_star, 1.0)
    # each distinct probability is expanded only once
    ps, inverse = np.unique(np.concatenate([joint.ravel(), loc.ravel()]), return_inverse=True)
    shares = expected_log_shares(N, ps)[inverse.ravel()].reshape(2, *loc.shape)
    return spec.alpha * (shares[0] - shares[1]) - spec.alpha * np.log(spec.reference_policy)


def deviation_cost(spec, Q_dev, Pi):
    """Cost of a single driver playing ``Q_dev`` when expected taxes are ``Pi``.

    Raises UndefinedTax if the driver puts positive probability on an edge
    whose tax is not finite.
    """
    Q_dev = check_policy(Q_dev, spec.graph, spec.horizon)
    Pi = np.asarray(Pi, dtype=float)
    P = trajectory(spec, Q_dev)
    flow = P[:-1, spec.graph.src] * Q_dev
    used = flow > 0
    if not np.all(np.isfinite(Pi[used])):
        t, e = np.argwhere(used & ~np.isfinite(Pi))[0]
        raise UndefinedTax(
            f"policy reaches edge {spec.graph.src[e]}->{spec.graph.dst[e]} at t={t} "
            "where the tax is undefined")
    stage = np.where(used, flow * (spec.action_cost + np.where(used, Pi, 0.0)), 0.0)
    return float(stage.sum() + np.dot(P[-1], spec.terminal_cost))


def best_response(spec, Pi):
    """Deterministic cost-minimizing policy against fixed taxes ``Pi``.

    Backward recursion ``W_T = C_T``,
    ``W_t[i] = min_j (C[t, i, j] + Pi[t, i, j] + W_{t+1}[j])``; ties go to
    the smallest successor id.

    Returns
    -------
    policy : ndarray (T, E) of zeros and ones
    cost : float
        ``sum_i P0[i] W_0[i]``.
    """
    g = spec.graph
    T = spec.horizon
    Pi = np.asarray(Pi, dtype=float)
    W = np.asarray(spec.terminal_cost, dtype=float).copy()
    policy = np.zeros((T, g.num_edges))
    starts = g.indptr[:-1]
    for t in range(T - 1, -1, -1):
        q = spec.action_cost[t] + np.where(np.isnan(Pi[t]), np.inf, Pi[t]) + W[g.dst]
        best = np.minimum.reduceat(q, starts)
        hit = np.flatnonzero(q == best[g.src])
        # hit is sorted, so the first hit of each row is its smallest successor
        _, first = np.unique(g.src[hit], return_index=True)
        policy[t, hit[first]] = 1.0
        W = best
    P0 = spec.initial_dist
    reach = P0 > 0
    if not np.all(np.isfinite(W[reach])):
        raise UndefinedTax("every route from some initial node meets an undefined tax")
    return policy, float(np.dot(P0[reach], W[reach]))


def epsilon_gap(spec, N, limit=False):
    """How much a lone driver gains by deviating from the equilibrium with ``N`` drivers.

    With ``limit=True`` the expected taxes are replaced by their
    large-population limits, where the gap is zero.
    """
    _, Q, P = equilibrium(spec)
    if limit:
        Pi = limit_tax_table(spec, Q)
    else:
        N = check_positive_int(N, "N")
        Pi = finite_tax_table(spec, N, Q, P)
    J_eq = deviation_cost(spec, Q, Pi)
    policy, J_br = best_response(spec, Pi)
    return DeviationReport(N, J_eq, J_br, J_eq - J_br, policy)


def random_policy(graph, horizon, rng, sparsity=0.0):
    """Random element of the strategy space.

    Rows are Dirichlet(1) draws; with ``sparsity > 0`` each entry is zeroed
    independently with that probability (keeping at least one per row).
    """
    x = rng.exponential(size=(horizon, graph.num_edges))
    if sparsity > 0:
        keep = rng.random(x.shape) >= sparsity
        # always keep a random entry of each row
        offs = (rng.random((horizon, graph.num_nodes)) * graph.degree).astype(np.intp)
        keep[np.arange(horizon)[:, None], graph.indptr[:-1][None, :] + offs] = True
        x = np.where(keep, x, 0.0)
    sums = np.add.reduceat(x, graph.indptr[:-1], axis=1) if horizon else x
    return x / sums[:, graph.src] if horizon else x


def indifference_check(spec, num_random_policies, seed, sparsity=0.0):
    """Spread of the limit-tax cost over random policies and ``Q*``.

    Policies that route probability onto an edge where ``Q*`` vanished are
    skipped and counted.
    """
    logphi, Q, _ = equilibrium(spec)
    Pi = limit_tax_table(spec, Q)
    rng = np.random.default_rng(seed)
    costs = [deviation_cost(spec, Q, Pi)]
    skipped = 0
    for _ in range(num_random_policies):
        try:
            costs.append(deviation_cost(spec, random_policy(spec.graph, spec.horizon, rng,
                                                            sparsity), Pi))
        except UndefinedTax:
            skipped += 1
    value = value_at(logphi, 0, spec.initial_dist, spec.alpha)
    return IndifferenceResult(float(max(costs) - min(costs)), len(costs), skipped, value)

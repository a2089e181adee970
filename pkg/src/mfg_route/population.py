"""Finite populations: exact expected taxes and Monte Carlo samples.

With ``N`` drivers, the tax charged on edge ``i -> j`` is
``alpha * (log(K_ij / K_i) - log R_ij)`` where ``K_i`` counts drivers at
``i`` and ``K_ij`` those of them taking ``j``. Conditioned on a probing
driver being on the edge, ``K_ij - 1`` and ``K_i - 1`` are sums of the other
``N - 1`` drivers' Bernoulli indicators.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from ._validation import check_positive_int, check_probability
from .exceptions import BadProbability, ShapeMismatch, TooManyAgents, ZeroProbabilityEdge

#: Largest number of other agents handled by the O(N^2) Poisson-binomial DP.
POISSON_BINOMIAL_MAX = 5000


_LN_SQRT_2PI = 0.5 * np.log(2 * np.pi)


def _stirlerr(n):
    # log(n!) - [(n + 1/2) log n - n + log sqrt(2 pi)], n >= 1
    n = np.asarray(n, dtype=float)
    out = np.empty_like(n)
    small = n <= 15
    ns = n[small]
    out[small] = gammaln(ns + 1) - (ns + 0.5) * np.log(ns) + ns - _LN_SQRT_2PI
    nl = n[~small]
    nn = nl * nl
    out[~small] = (1 / 12 - (1 / 360 - (1 / 1260 - (1 / 1680 - 1 / (1188 * nn)) / nn) / nn) / nn) / nl
    return out


def _bd0(x, m):
    # x log(x / m) + m - x without cancellation when x is close to m
    x, m = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(m, dtype=float))
    out = np.empty(x.shape)
    close = np.abs(x - m) < 0.1 * (x + m)
    xc, mc = x[close], m[close]
    v = (xc - mc) / (xc + mc)
    s = (xc - mc) * v
    term = 2 * xc * v
    vv = v * v
    for j in range(1, 1000):
        term = term * vv
        s_next = s + term / (2 * j + 1)
        if np.array_equal(s_next, s):
            break
        s = s_next
    out[close] = s
    xf, mf = x[~close], m[~close]
    out[~close] = xf * np.log(xf / mf) + mf - xf
    return out


@lru_cache(maxsize=64)
def _log_coefficients(n):
    # p-independent part of the interior log-masses, k = 1..n-1
    k = np.arange(1, n, dtype=float)
    base = _stirlerr(np.array([n]))[0] - _stirlerr(k) - _stirlerr(n - k)
    scale = np.sqrt(n / (2 * np.pi * k * (n - k)))
    base.flags.writeable = False
    scale.flags.writeable = False
    return k, base, scale


def _binomial_rows(n, ps):
    # masses of Binomial(n, p) for each p in ps (all strictly inside (0, 1))
    ps = np.asarray(ps, dtype=float)[:, None]
    out = np.empty((ps.shape[0], n + 1))
    k, base, scale = _log_coefficients(n)
    logpmf = base - _bd0(k, n * ps) - _bd0(n - k, n * (1.0 - ps))
    out[:, 1:n] = np.exp(logpmf) * scale
    out[:, 0] = np.exp(n * np.log1p(-ps[:, 0]))
    out[:, n] = np.exp(n * np.log(ps[:, 0]))
    return out


def binomial_pmf(n, p):
    """Probability masses of Binomial(n, p) at k = 0..n.

    The log-binomial coefficient is assembled from Stirling remainders of
    log-gamma (saddle-point form); the plain ``gammaln`` difference loses
    about 1e-9 of absolute accuracy once ``n`` reaches 1e6.
    """
    if p == 0.0 or p == 1.0 or n == 0:
        out = np.zeros(n + 1)
        out[0 if p < 1.0 else n] = 1.0
        return out
    return _binomial_rows(n, [p])[0]


# cap on the size of one batched (probabilities x support) block
_BLOCK = 1 << 21


def expected_log_shares(N, ps):
    """``E[log((K + 1) / N)]`` for ``K ~ Binomial(N - 1, p)``, for every ``p`` in ``ps``.

    Each expectation is the full sum over ``k = 0..N-1``.
    """
    N = check_positive_int(N, "N")
    ps = np.asarray(ps, dtype=float)
    out = np.empty(ps.shape)
    flat = ps.ravel()
    res = out.reshape(-1)
    log_share = np.log(np.arange(1, N + 1) / N)
    res[flat == 0.0] = log_share[0]
    res[flat == 1.0] = log_share[-1]
    inner = np.flatnonzero((flat > 0.0) & (flat < 1.0))
    if N == 1:
        res[inner] = 0.0
        return out
    step = max(1, _BLOCK // N)
    for lo in range(0, len(inner), step):
        idx = inner[lo:lo + step]
        res[idx] = _binomial_rows(N - 1, flat[idx]) @ log_share
    return out


def _expected_log_share(N, p):
    return float(expected_log_shares(N, np.array([p]))[0])


def expected_tax_symmetric(N, alpha, p_loc, p_act, r):
    """Expected tax on an edge when the other ``N - 1`` drivers share one strategy.

    Parameters
    ----------
    N : int
        Population size including the probing driver.
    alpha : float
    p_loc : float
        Probability that another driver is at the edge's tail node.
    p_act : float
        Probability that a driver at the tail node takes the edge.
    r : float
        Reference probability of the edge.

    Notes
    -----
    The full sum over ``k = 0..N-1`` is evaluated; there is no tail
    truncation.
    """
    N = check_positive_int(N, "N")
    p_loc = check_probability(p_loc, "p_loc")
    p_act = check_probability(p_act, "p_act")
    r = check_probability(r, "r")
    if r == 0:
        raise BadProbability("reference probability must be positive")
    joint = p_loc * p_act
    return alpha * (_expected_log_share(N, joint) - _expected_log_share(N, p_loc)) - alpha * np.log(r)


def poisson_binomial_pmf(probs):
    """Masses of the number of successes among independent Bernoulli(``probs``) trials."""
    probs = np.asarray(probs, dtype=float)
    dp = np.zeros(len(probs) + 1)
    dp[0] = 1.0
    for m, p in enumerate(probs, start=1):
        dp[1:m + 1] = dp[1:m + 1] * (1.0 - p) + dp[:m] * p
        dp[0] *= 1.0 - p
    return dp


def expected_tax_poisson_binomial(per_agent_joint, per_agent_loc, alpha, r):
    """Expected tax on an edge for heterogeneous opponents.

    ``per_agent_joint[m]`` is opponent ``m``'s probability of taking the
    edge, ``per_agent_loc[m]`` its probability of being at the tail node.
    The probing driver's own strategy plays no role.
    """
    joint = np.asarray(per_agent_joint, dtype=float)
    loc = np.asarray(per_agent_loc, dtype=float)
    if joint.ndim != 1 or joint.shape != loc.shape:
        raise ShapeMismatch("per-agent probability lists must be 1-D and of equal length")
    if len(joint) > POISSON_BINOMIAL_MAX:
        raise TooManyAgents(
            f"{len(joint)} opponents exceeds the exact DP limit of {POISSON_BINOMIAL_MAX}")
    for arr in (joint, loc):
        if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
            raise BadProbability("per-agent probabilities must lie in [0, 1]")
    r = check_probability(r, "r")
    if r == 0:
        raise BadProbability("reference probability must be positive")
    N = len(joint) + 1
    log_share = np.log(np.arange(1, N + 1) / N)
    return (alpha * np.dot(log_share, poisson_binomial_pmf(joint))
            - alpha * np.dot(log_share, poisson_binomial_pmf(loc))
            - alpha * np.log(r))


def limit_tax(alpha, q, r):
    """Large-population limit ``alpha * log(q / r)`` of the expected tax."""
    with np.errstate(divide="ignore"):
        return alpha * (np.log(q) - np.log(r))


def convergence_curve(spec, Q_star, P_star, edge, N_list):
    """Exact expected tax at one edge for each population size.

    Returns a list of ``(N, Pi_N, |Pi_N - alpha log(Q*/R)|)``. Raises
    ZeroProbabilityEdge when the edge carries no equilibrium flow, since the
    limit is then not covered.
    """
    t, i, j = edge
    e = spec.graph.edge_index(i, j)
    p_loc = float(P_star[t, i])
    q = float(Q_star[t, e])
    r = float(spec.reference_policy[t, e])
    if p_loc * q <= 0:
        raise ZeroProbabilityEdge(f"edge (t={t}, {i}->{j}) has zero equilibrium flow")
    limit = float(limit_tax(spec.alpha, q, r))
    out = []
    for N in N_list:
        pi = expected_tax_symmetric(N, spec.alpha, min(p_loc, 1.0), min(q, 1.0), r)
        out.append((int(N), pi, abs(pi - limit)))
    return out


@dataclass(frozen=True, eq=False)
class PopulationSample:
    """One seeded realization of ``N`` drivers.

    Attributes
    ----------
    locations : int array (T + 1, N)
    node_counts : int array (T + 1, V)
    edge_counts : int array (T, E)
    realized_tax : float array (T, E)
        NaN where no driver took the edge (the tax is undefined there).
    """

    N: int
    seed: int
    locations: np.ndarray
    node_counts: np.ndarray
    edge_counts: np.ndarray
    realized_tax: np.ndarray


def _choose(rows, u):
    # rows: (n, d) padded probabilities; returns column of the first cdf value > u
    cum = np.cumsum(rows, axis=1)
    d = rows.shape[1]
    last_pos = d - 1 - np.argmax((rows > 0)[:, ::-1], axis=1)
    cum[np.arange(d)[None, :] >= last_pos[:, None]] = 1.0
    return np.minimum((cum <= u[:, None]).sum(axis=1), last_pos)


def sample_population(spec, Q, N, seed):
    """Simulate ``N`` drivers following ``Q``.

    ``Q`` is either one ``(T, E)`` policy shared by all drivers or a list of
    ``N`` such policies. Randomness comes from a Philox counter-based stream
    keyed by ``seed``: driver ``n`` consumes the uniforms at counters
    ``n * (T + 1) .. n * (T + 1) + T``, so its draws do not depend on how
    the others are processed.
    """
    N = check_positive_int(N, "N")
    g = spec.graph
    T, V, E = spec.horizon, g.num_nodes, g.num_edges

    if isinstance(Q, (list, tuple)):
        if len(Q) != N:
            raise ShapeMismatch(f"expected {N} per-agent policies, got {len(Q)}")
        unique, owner = {}, np.empty(N, dtype=np.intp)
        for n, q in enumerate(Q):
            owner[n] = unique.setdefault(id(q), len(unique))
        policies = [None] * len(unique)
        for q in Q:
            policies[unique[id(q)]] = np.asarray(q, dtype=float)
    else:
        policies, owner = [np.asarray(Q, dtype=float)], np.zeros(N, dtype=np.intp)
    for q in policies:
        if q.shape != (T, E):
            raise ShapeMismatch(f"policy must have shape ({T}, {E}), got {q.shape}")

    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random((N, T + 1))

    # padded edge table: row_edges[i, k] = k-th out-edge of node i, or -1
    deg = g.degree
    dmax = int(deg.max())
    row_edges = np.full((V, dmax), -1, dtype=np.intp)
    for i in range(V):
        row_edges[i, :deg[i]] = np.arange(g.indptr[i], g.indptr[i + 1])
    valid = row_edges >= 0

    cdf0 = np.cumsum(spec.initial_dist)
    cdf0[np.flatnonzero(spec.initial_dist)[-1]:] = 1.0
    locations = np.empty((T + 1, N), dtype=np.intp)
    locations[0] = np.searchsorted(cdf0, u[:, 0], side="right")
    edges_taken = np.empty((T, N), dtype=np.intp)
    for t in range(T):
        here = locations[t]
        choice = np.empty(N, dtype=np.intp)
        for k, q in enumerate(policies):
            who = np.flatnonzero(owner == k)
            rows = np.where(valid[here[who]], q[t][row_edges[here[who]]], 0.0)
            choice[who] = _choose(rows, u[who, t + 1])
        edges_taken[t] = row_edges[here, choice]
        locations[t + 1] = g.dst[edges_taken[t]]

    node_counts = np.stack([np.bincount(locations[t], minlength=V) for t in range(T + 1)])
    edge_counts = (np.stack([np.bincount(edges_taken[t], minlength=E) for t in range(T)])
                   if T else np.zeros((0, E), dtype=np.intp))
    with np.errstate(divide="ignore", invalid="ignore"):
        share = edge_counts / node_counts[:T][:, g.src]
        tax = spec.alpha * (np.log(share) - np.log(spec.reference_policy))
    tax = np.where(edge_counts >= 1, tax, np.nan)
    return PopulationSample(N, int(seed), locations, node_counts, edge_counts, tax)

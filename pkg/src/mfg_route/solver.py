"""Linearly solvable KL-control problem behind the equilibrium.

The desirability ``phi`` obeys a linear backward recursion; everything is
computed on ``log phi`` so that prohibitive costs (e.g. 1e5 at alpha = 0.1)
do not underflow.
"""

import numpy as np
from scipy.special import xlogy

from ._validation import STOCHASTIC_ATOL, check_distribution, check_policy, row_sums
from .propagation import trajectory


def segment_logsumexp(x, indptr):
    """Log-sum-exp of ``x`` over each segment ``indptr[k]:indptr[k + 1]``.

    Uses the max-shifted form; segments must be non-empty.
    """
    starts = indptr[:-1]
    seg = np.repeat(np.arange(len(starts)), np.diff(indptr))
    m = np.maximum.reduceat(x, starts)
    with np.errstate(invalid="ignore"):
        shifted = np.exp(x - m[seg])
    shifted[np.isneginf(x)] = 0.0
    s = np.add.reduceat(shifted, starts)
    with np.errstate(divide="ignore"):
        return np.where(np.isneginf(m), -np.inf, m + np.log(s))


def backward_phi(spec):
    """Log-desirability table of shape ``(T + 1, V)``.

    ``logphi[T] = -C_T / alpha`` and, going backward,
    ``logphi[t, i] = logsumexp_j(log R[t, i, j] - C[t, i, j] / alpha + logphi[t + 1, j])``.
    """
    g = spec.graph
    T, alpha = spec.horizon, spec.alpha
    logR = np.log(spec.reference_policy)
    logphi = np.empty((T + 1, g.num_nodes))
    logphi[T] = -spec.terminal_cost / alpha
    for t in range(T - 1, -1, -1):
        x = logR[t] - spec.action_cost[t] / alpha + logphi[t + 1][g.dst]
        logphi[t] = segment_logsumexp(x, g.indptr)
    return logphi


def optimal_policy(spec, logphi, return_residual=False):
    """Equilibrium routing ``Q*[t, i, j] = phi[t+1, j] R exp(-C / alpha) / phi[t, i]``.

    Each row is renormalized to sum to one. The pre-normalization row sums
    must already be within 1e-9 of one; a larger residual means ``logphi``
    was not produced from ``spec``.
    """
    g = spec.graph
    logQ = (logphi[1:, g.dst] - logphi[:-1, g.src]
            + np.log(spec.reference_policy) - spec.action_cost / spec.alpha)
    Q = np.exp(logQ)
    sums = row_sums(Q, g.indptr) if spec.horizon else np.zeros((0, g.num_nodes))
    residual = float(np.max(np.abs(sums - 1.0), initial=0.0))
    if residual > STOCHASTIC_ATOL:
        raise ValueError(f"log-desirability inconsistent with game: row residual {residual:.3e}")
    Q = Q / sums[:, g.src] if spec.horizon else Q
    if return_residual:
        return Q, residual
    return Q


def value_at(logphi, t, P, alpha):
    """Optimal cost-to-go ``-alpha * sum_i P[i] log phi[t, i]`` from distribution ``P``."""
    logphi = np.asarray(logphi, dtype=float)
    P = check_distribution(P, logphi.shape[1])
    mask = P > 0
    return float(-alpha * np.dot(P[mask], logphi[t][mask])) + 0.0


def stage_costs(spec, Q, P):
    """Per-step KL-control cost ``sum_ij P_t[i] Q[i,j] (C + alpha log(Q / R))``, shape ``(T,)``.

    ``0 log 0`` is taken as 0, so deterministic policies are allowed.
    """
    g = spec.graph
    flow = P[:-1, g.src] * Q
    kl = spec.alpha * (xlogy(Q, Q) - xlogy(Q, spec.reference_policy))
    terms = np.where(flow > 0, P[:-1, g.src] * (Q * spec.action_cost + kl), 0.0)
    return terms.sum(axis=1)


def kl_objective(spec, Q):
    """Full KL-control objective of policy ``Q`` started from ``spec.initial_dist``.

    Raises InvalidPolicy if ``Q`` is not a sequence of stochastic rows.
    """
    Q = check_policy(Q, spec.graph, spec.horizon)
    P = trajectory(spec, Q)
    return float(stage_costs(spec, Q, P).sum() + np.dot(P[-1], spec.terminal_cost))


def value_profile(spec, logphi, Q=None):
    """Value ``V_t(P_t)`` along the trajectory generated by ``Q`` (default ``Q*``), shape ``(T + 1,)``."""
    if Q is None:
        Q = optimal_policy(spec, logphi)
    P = trajectory(spec, Q)
    return np.array([value_at(logphi, t, P[t], spec.alpha) for t in range(spec.horizon + 1)])

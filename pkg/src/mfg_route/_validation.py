"""Input validation helpers shared by the solver, simulator and estimator."""

import numbers

import numpy as np

from .exceptions import BadDistribution, BadProbability, InvalidPolicy, ShapeMismatch

#: Absolute tolerance on row sums of stochastic rows and distributions.
STOCHASTIC_ATOL = 1e-9


def row_sums(values, indptr):
    """Sum ``values`` (last axis, edge-indexed) over each node's out-edges."""
    values = np.asarray(values, dtype=float)
    return np.add.reduceat(values, indptr[:-1], axis=-1)


def check_distribution(P, num_nodes, name="distribution", atol=STOCHASTIC_ATOL):
    P = np.asarray(P, dtype=float)
    if P.shape != (num_nodes,):
        raise BadDistribution(f"{name} must have shape ({num_nodes},), got {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P < 0):
        raise BadDistribution(f"{name} must be finite and nonnegative")
    total = P.sum()
    if abs(total - 1.0) > atol:
        raise BadDistribution(f"{name} sums to {total!r}, not 1")
    return P


def check_probability(p, name="p"):
    if not isinstance(p, numbers.Real) or not np.isfinite(p) or p < 0 or p > 1:
        raise BadProbability(f"{name} must be a probability in [0, 1], got {p!r}")
    return float(p)


def check_positive_int(n, name):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral) or n < 1:
        raise ValueError(f"{name} must be a positive integer, got {n!r}")
    return int(n)


def check_policy_shape(Q, graph, horizon):
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (horizon, graph.num_edges):
        raise ShapeMismatch(
            f"policy must have shape (T, E) = ({horizon}, {graph.num_edges}), got {Q.shape}")
    return Q


def is_stochastic(Q, indptr, atol=STOCHASTIC_ATOL):
    Q = np.asarray(Q, dtype=float)
    if not np.all(np.isfinite(Q)) or np.any(Q < 0):
        return False
    return bool(np.all(np.abs(row_sums(Q, indptr) - 1.0) <= atol))


def check_policy(Q, graph, horizon):
    """Return ``Q`` as a float array, raising InvalidPolicy if it is not in the strategy space."""
    Q = check_policy_shape(Q, graph, horizon)
    if not is_stochastic(Q, graph.indptr):
        raise InvalidPolicy("every policy row must be nonnegative and sum to 1")
    return Q

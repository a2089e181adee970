"""Forward propagation of the population distribution under a routing policy."""

import numpy as np

from .exceptions import ShapeMismatch


def push_forward(P, Q_t, graph):
    """One step of ``P'[j] = sum_i P[i] Q[i, j]``.

    Parameters
    ----------
    P : array of shape (V,)
    Q_t : array of shape (E,)
        One time slice of a policy sequence.
    graph : TrafficGraph

    Returns
    -------
    ndarray of shape (V,)
    """
    P = np.asarray(P, dtype=float)
    Q_t = np.asarray(Q_t, dtype=float)
    if P.shape != (graph.num_nodes,) or Q_t.shape != (graph.num_edges,):
        raise ShapeMismatch(
            f"expected P of shape ({graph.num_nodes},) and Q of shape ({graph.num_edges},)")
    # bincount accumulates in edge order, so the result is reproducible bit for bit.
    return np.bincount(graph.dst, weights=P[graph.src] * Q_t, minlength=graph.num_nodes)


def propagate(P0, Q, graph):
    """Distribution sequence of shape ``(T + 1, V)`` starting from ``P0``."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2:
        raise ShapeMismatch(f"policy must be 2-D (T, E), got shape {Q.shape}")
    T = Q.shape[0]
    out = np.empty((T + 1, graph.num_nodes))
    out[0] = P0
    for t in range(T):
        out[t + 1] = push_forward(out[t], Q[t], graph)
    return out


def trajectory(spec, Q):
    """Distribution sequence of a single agent following ``Q`` from ``spec.initial_dist``."""
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (spec.horizon, spec.num_edges):
        raise ShapeMismatch(
            f"policy must have shape ({spec.horizon}, {spec.num_edges}), got {Q.shape}")
    return propagate(spec.initial_dist, Q, spec.graph)

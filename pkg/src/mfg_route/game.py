"""Game instances: traffic graph, costs, reference routing and initial spread.

Edge-indexed quantities (action costs, reference policy, routing policies,
taxes) are stored as ``(T, E)`` arrays. Edges are laid out row by row:
all out-edges of node 0 in ascending successor order, then node 1, and so
on. ``graph.indptr[i]:graph.indptr[i + 1]`` slices node ``i``'s edges.
"""

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from ._validation import STOCHASTIC_ATOL, check_policy_shape, is_stochastic, row_sums
from .exceptions import (
    BadAlpha,
    BadCost,
    BadDistribution,
    InvalidGraph,
    MissingOutNeighbor,
    NonStochasticRow,
    ShapeMismatch,
    ZeroReference,
)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TrafficGraph:
    """Directed graph given by per-node successor lists.

    Successor lists are stored sorted; self-loops are allowed.
    """

    num_nodes: int
    out_neighbors: tuple

    src: np.ndarray = field(init=False, repr=False)
    dst: np.ndarray = field(init=False, repr=False)
    indptr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        V = self.num_nodes
        if isinstance(V, bool) or not isinstance(V, (int, np.integer)) or V < 1:
            raise InvalidGraph(f"num_nodes must be a positive integer, got {V!r}")
        V = int(V)
        if len(self.out_neighbors) != V:
            raise InvalidGraph(f"expected {V} successor lists, got {len(self.out_neighbors)}")
        rows = []
        for i, nbrs in enumerate(self.out_neighbors):
            nbrs = [int(j) for j in nbrs]
            if not nbrs:
                raise MissingOutNeighbor(f"node {i} has no out-neighbor")
            if len(set(nbrs)) != len(nbrs):
                raise InvalidGraph(f"node {i} lists a successor twice")
            if min(nbrs) < 0 or max(nbrs) >= V:
                raise InvalidGraph(f"node {i} has a successor outside [0, {V})")
            rows.append(tuple(sorted(nbrs)))
        degree = np.array([len(r) for r in rows])
        indptr = np.concatenate([[0], np.cumsum(degree)])
        src = np.repeat(np.arange(V), degree)
        dst = np.array([j for r in rows for j in r], dtype=np.intp)
        for name, arr in (("indptr", indptr), ("src", src), ("dst", dst)):
            arr = arr.astype(np.intp)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "num_nodes", V)
        object.__setattr__(self, "out_neighbors", tuple(rows))

    @property
    def num_edges(self):
        return int(self.indptr[-1])

    @property
    def degree(self):
        return np.diff(self.indptr)

    def edge_index(self, i, j):
        """Position of edge ``i -> j`` in the edge layout."""
        row = self.out_neighbors[i]
        try:
            return int(self.indptr[i]) + row.index(j)
        except ValueError:
            raise ShapeMismatch(f"{i} -> {j} is not an edge") from None

    def edges(self):
        return list(zip(self.src.tolist(), self.dst.tolist()))

    def __eq__(self, other):
        if not isinstance(other, TrafficGraph):
            return NotImplemented
        return self.num_nodes == other.num_nodes and self.out_neighbors == other.out_neighbors

    def __hash__(self):
        return hash((self.num_nodes, self.out_neighbors))


@dataclass(frozen=True, eq=False)
class GameSpec:
    """A validated game instance.

    Parameters
    ----------
    graph : TrafficGraph
    horizon : int
        Number of decision steps ``T``.
    action_cost : array of shape (E,) or (T, E)
        Cost of taking each edge; a time-invariant ``(E,)`` table is
        expanded over the horizon.
    terminal_cost : array of shape (V,)
    reference_policy : array of shape (E,) or (T, E)
        Strictly positive, row-stochastic routing designated by the operator.
        Rows within 1e-9 of stochastic are renormalized.
    initial_dist : array of shape (V,)
    alpha : float
        Tax scale, strictly positive.
    """

    graph: TrafficGraph
    horizon: int
    action_cost: np.ndarray
    terminal_cost: np.ndarray
    reference_policy: np.ndarray
    initial_dist: np.ndarray
    alpha: float

    def __post_init__(self):
        g = self.graph
        if not isinstance(g, TrafficGraph):
            raise InvalidGraph("graph must be a TrafficGraph")
        T = self.horizon
        if isinstance(T, bool) or not isinstance(T, (int, np.integer)) or T < 0:
            raise ShapeMismatch(f"horizon must be a nonnegative integer, got {T!r}")
        T = int(T)
        E, V = g.num_edges, g.num_nodes

        C = _time_table(self.action_cost, T, E, "action_cost")
        if not np.all(np.isfinite(C)):
            raise BadCost("action costs must be finite")
        CT = np.asarray(self.terminal_cost, dtype=float)
        if CT.shape != (V,):
            raise ShapeMismatch(f"terminal_cost must have shape ({V},), got {CT.shape}")
        if not np.all(np.isfinite(CT)):
            raise BadCost("terminal costs must be finite")

        R = _time_table(self.reference_policy, T, E, "reference_policy")
        if not np.all(np.isfinite(R)) or np.any(R <= 0):
            raise ZeroReference("reference policy entries must be strictly positive")
        sums = row_sums(R, g.indptr)
        bad = np.abs(sums - 1.0) > STOCHASTIC_ATOL
        if np.any(bad):
            t, i = np.argwhere(bad)[0]
            raise NonStochasticRow(
                f"reference row (t={t}, i={i}) sums to {sums[t, i]!r}")
        # Renormalize only rows visibly off 1 so that re-validation is a no-op.
        off = np.abs(sums - 1.0) > 8 * np.finfo(float).eps * g.degree
        if np.any(off):
            R = np.where(off[:, g.src], R / sums[:, g.src], R)

        P0 = np.asarray(self.initial_dist, dtype=float)
        if P0.shape != (V,):
            raise BadDistribution(f"initial_dist must have shape ({V},), got {P0.shape}")
        if not np.all(np.isfinite(P0)) or np.any(P0 < 0) or abs(P0.sum() - 1.0) > STOCHASTIC_ATOL:
            raise BadDistribution("initial_dist must be nonnegative and sum to 1")

        try:
            alpha = float(self.alpha)
        except (TypeError, ValueError):
            raise BadAlpha(f"alpha must be a real number, got {self.alpha!r}") from None
        if not np.isfinite(alpha) or alpha <= 0:
            raise BadAlpha(f"alpha must be positive, got {alpha!r}")

        object.__setattr__(self, "horizon", T)
        object.__setattr__(self, "action_cost", _frozen(C))
        object.__setattr__(self, "terminal_cost", _frozen(CT))
        object.__setattr__(self, "reference_policy", _frozen(R))
        object.__setattr__(self, "initial_dist", _frozen(P0))
        object.__setattr__(self, "alpha", alpha)

    @property
    def num_nodes(self):
        return self.graph.num_nodes

    @property
    def num_edges(self):
        return self.graph.num_edges

    def with_alpha(self, alpha):
        return GameSpec(self.graph, self.horizon, self.action_cost, self.terminal_cost,
                        self.reference_policy, self.initial_dist, alpha)

    def __eq__(self, other):
        if not isinstance(other, GameSpec):
            return NotImplemented
        return (self.graph == other.graph and self.horizon == other.horizon
                and self.alpha == other.alpha
                and np.array_equal(self.action_cost, other.action_cost)
                and np.array_equal(self.terminal_cost, other.terminal_cost)
                and np.array_equal(self.reference_policy, other.reference_policy)
                and np.array_equal(self.initial_dist, other.initial_dist))

    __hash__ = None

    @classmethod
    def build(cls, out_neighbors, horizon, action_cost, terminal_cost, initial_dist, alpha,
              reference_policy="uniform"):
        """Convenience constructor.

        ``action_cost`` and ``reference_policy`` may be edge-indexed arrays or
        mappings ``{(i, j): value}``; ``reference_policy`` may also be
        ``"uniform"``. Missing edges in an ``action_cost`` mapping cost 0.
        """
        graph = TrafficGraph(len(out_neighbors), tuple(tuple(n) for n in out_neighbors))
        if isinstance(action_cost, Mapping):
            action_cost = _edge_vector(graph, action_cost, default=0.0)
        if isinstance(reference_policy, str):
            reference_policy = _named_reference(graph, reference_policy)
        elif isinstance(reference_policy, Mapping):
            reference_policy = _edge_vector(graph, reference_policy, default=None)
        return cls(graph, horizon, action_cost, terminal_cost, reference_policy,
                   initial_dist, alpha)


def _time_table(values, T, E, name):
    a = np.asarray(values, dtype=float)
    if a.shape == (E,):
        return np.broadcast_to(a, (T, E)).copy()
    if a.shape != (T, E):
        raise ShapeMismatch(f"{name} must have shape ({E},) or ({T}, {E}), got {a.shape}")
    return a.copy()


def _edge_vector(graph, mapping, default):
    out = np.empty(graph.num_edges)
    for e, (i, j) in enumerate(graph.edges()):
        if (i, j) in mapping:
            out[e] = mapping[(i, j)]
        elif default is None:
            raise ShapeMismatch(f"no value given for edge {i} -> {j}")
        else:
            out[e] = default
    for key in mapping:
        graph.edge_index(*key)
    return out


def _named_reference(graph, name):
    if name != "uniform":
        raise ShapeMismatch(f"unknown reference policy {name!r}")
    return 1.0 / graph.degree[graph.src]


def validate_game(raw):
    """Validate structured input and return a :class:`GameSpec`.

    ``raw`` is either a GameSpec (re-validated; idempotent) or a mapping in
    the JSON document layout::

        {"nodes": V, "edges": [{"from": i, "to": j}, ...], "horizon": T,
         "alpha": a,
         "action_cost": {"default": [per-edge], "overrides": [{"t", "from", "to", "cost"}]},
         "terminal_cost": [per-node],
         "reference_policy": "uniform" | [per-edge] | [[per-edge] per t],
         "initial_dist": [per-node]}

    Per-edge lists follow the order of ``"edges"``. A mapping with a
    ``"grid"`` block is expanded by :func:`mfg_route.gridworld.grid_from_dict`.
    """
    if isinstance(raw, GameSpec):
        return GameSpec(raw.graph, raw.horizon, raw.action_cost, raw.terminal_cost,
                        raw.reference_policy, raw.initial_dist, raw.alpha)
    if not isinstance(raw, Mapping):
        raise ShapeMismatch(f"cannot build a game from {type(raw).__name__}")
    if "grid" in raw:
        from .gridworld import build_grid_game, grid_from_dict
        return build_grid_game(grid_from_dict(raw["grid"]))
    try:
        return _from_document(raw)
    except KeyError as exc:
        raise ShapeMismatch(f"missing field {exc.args[0]!r}") from None
    except (TypeError, IndexError) as exc:
        raise ShapeMismatch(f"malformed game document: {exc}") from None


def _from_document(doc):
    V = doc["nodes"]
    if isinstance(V, bool) or not isinstance(V, int) or V < 1:
        raise InvalidGraph(f"nodes must be a positive integer, got {V!r}")
    pairs = [(int(e["from"]), int(e["to"])) for e in doc["edges"]]
    nbrs = [[] for _ in range(V)]
    for i, j in pairs:
        if not 0 <= i < V:
            raise InvalidGraph(f"edge source {i} outside [0, {V})")
        nbrs[i].append(j)
    graph = TrafficGraph(V, tuple(tuple(n) for n in nbrs))
    T = doc["horizon"]
    if isinstance(T, bool) or not isinstance(T, int):
        raise ShapeMismatch(f"horizon must be an integer, got {T!r}")
    # document edge k -> internal edge perm[k]
    perm = np.array([graph.edge_index(i, j) for i, j in pairs], dtype=np.intp)

    def per_edge(values, name):
        values = np.asarray(values, dtype=float)
        if values.shape[-1:] != (len(pairs),):
            raise ShapeMismatch(f"{name} needs one value per edge ({len(pairs)})")
        out = np.empty(values.shape)
        out[..., perm] = values
        return out

    cost_doc = doc["action_cost"]
    if isinstance(cost_doc, Mapping):
        C = np.broadcast_to(per_edge(cost_doc["default"], "action_cost.default"),
                            (T, graph.num_edges)).copy()
        for ov in cost_doc.get("overrides", []):
            t = int(ov["t"])
            if not 0 <= t < T:
                raise ShapeMismatch(f"override time {t} outside [0, {T})")
            C[t, graph.edge_index(int(ov["from"]), int(ov["to"]))] = float(ov["cost"])
    else:
        C = per_edge(cost_doc, "action_cost")

    ref = doc.get("reference_policy", "uniform")
    R = _named_reference(graph, ref) if isinstance(ref, str) else per_edge(ref, "reference_policy")

    return GameSpec(graph, T, C, doc["terminal_cost"], R, doc["initial_dist"], doc["alpha"])


def game_to_dict(spec):
    """Inverse of :func:`validate_game` for the JSON document layout."""
    g = spec.graph
    C = spec.action_cost
    default = C[0] if spec.horizon else np.zeros(g.num_edges)
    overrides = [
        {"t": int(t), "from": int(g.src[e]), "to": int(g.dst[e]), "cost": float(C[t, e])}
        for t, e in zip(*np.nonzero(C != default))
    ]
    R = spec.reference_policy
    if not spec.horizon:
        ref = "uniform"
    elif np.all(R == R[0]):
        ref = R[0].tolist()
    else:
        ref = R.tolist()
    return {
        "nodes": g.num_nodes,
        "edges": [{"from": i, "to": j} for i, j in g.edges()],
        "horizon": spec.horizon,
        "alpha": spec.alpha,
        "action_cost": {"default": default.tolist(), "overrides": overrides},
        "terminal_cost": spec.terminal_cost.tolist(),
        "reference_policy": ref,
        "initial_dist": spec.initial_dist.tolist(),
    }


def policy_rows_check(Q, graph, T):
    """True iff ``Q`` (shape ``(T, E)``) is a sequence of routing strategies.

    Raises ShapeMismatch when ``Q`` is not index-compatible with the graph
    and horizon.
    """
    Q = check_policy_shape(Q, graph, T)
    return is_stochastic(Q, graph.indptr)

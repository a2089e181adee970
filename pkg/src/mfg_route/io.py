"""Reading game documents and writing CSV / JSON results.

CSV files always carry a header row; floats are written with ``repr`` so
two runs with the same inputs produce identical bytes.
"""

import csv
import json
import math

import numpy as np

from .game import game_to_dict, validate_game


def load_spec(path):
    with open(path, encoding="utf-8") as fh:
        return validate_game(json.load(fh))


def save_spec(spec, path):
    write_json(path, game_to_dict(spec))


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return repr(x + 0.0)
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def write_policy_csv(path, Q, graph):
    T = Q.shape[0]
    write_csv(path, ["t", "i", "j", "value"],
              ((t, graph.src[e], graph.dst[e], Q[t, e])
               for t in range(T) for e in range(graph.num_edges)))


def write_logphi_csv(path, logphi):
    write_csv(path, ["t", "i", "value"],
              ((t, i, logphi[t, i]) for t in range(logphi.shape[0])
               for i in range(logphi.shape[1])))


def write_distribution_csv(path, P):
    write_csv(path, ["t", "i", "probability"],
              ((t, i, P[t, i]) for t in range(P.shape[0]) for i in range(P.shape[1])))


def read_policy_csv(path, graph, horizon):
    Q = np.full((horizon, graph.num_edges), np.nan)
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            Q[int(row["t"]), graph.edge_index(int(row["i"]), int(row["j"]))] = float(row["value"])
    return Q


def sample_summary(sample, spec, P_star=None):
    """JSON-ready summary of a :class:`PopulationSample`."""
    g = spec.graph
    taxes = [
        {"t": int(t), "i": int(g.src[e]), "j": int(g.dst[e]),
         "count": int(sample.edge_counts[t, e]), "tax": float(sample.realized_tax[t, e])}
        for t, e in zip(*np.nonzero(sample.edge_counts))
    ]
    out = {
        "N": sample.N,
        "seed": sample.seed,
        "horizon": spec.horizon,
        "nodes": g.num_nodes,
        "alpha": spec.alpha,
        "node_counts": sample.node_counts.tolist(),
        "realized_tax": taxes,
    }
    if P_star is not None:
        dev = np.abs(sample.node_counts / sample.N - P_star).max(axis=1)
        out["max_frequency_deviation"] = dev.tolist()
    return out


def write_sample(out_dir, sample, spec, P_star=None, trajectories=False):
    g = spec.graph
    write_csv(out_dir / "counts.csv", ["t", "i", "count"],
              ((t, i, sample.node_counts[t, i]) for t in range(spec.horizon + 1)
               for i in range(g.num_nodes)))
    write_csv(out_dir / "realized_tax.csv", ["t", "i", "j", "count", "tax"],
              ((t, g.src[e], g.dst[e], sample.edge_counts[t, e], sample.realized_tax[t, e])
               for t, e in zip(*np.nonzero(sample.edge_counts))))
    write_json(out_dir / "sample_summary.json", sample_summary(sample, spec, P_star))
    if trajectories:
        write_csv(out_dir / "trajectories.csv", ["t", "agent", "node"],
                  ((t, n, sample.locations[t, n]) for t in range(spec.horizon + 1)
                   for n in range(sample.N)))

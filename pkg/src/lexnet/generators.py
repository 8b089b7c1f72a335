"""Seeded random graph models used as baselines and test fixtures."""

from __future__ import annotations

import numpy as np

from .graph import UndirectedGraph


def _labels(n):
    return tuple(str(i) for i in range(n))


def erdos_renyi(n: int, p: float, seed: int) -> UndirectedGraph:
    """G(n, p): every unordered pair is an edge independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.Generator(np.random.PCG64(seed))
    us, vs = [], []
    for i in range(n - 1):
        hits = np.flatnonzero(rng.random(n - i - 1) < p)
        if len(hits):
            us.append(np.full(len(hits), i, dtype=np.int64))
            vs.append(hits + i + 1)
    u = np.concatenate(us) if us else np.empty(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.empty(0, dtype=np.int64)
    return UndirectedGraph.from_edges(_labels(n), u, v, meta={"kind": "er", "p": p, "seed": seed})


def barabasi_albert(n: int, m: int, seed: int) -> UndirectedGraph:
    """Preferential attachment: each new node links to m distinct existing nodes.

    Starts from m unconnected nodes; the first arrival links to all of them.
    Targets are drawn proportionally to degree from the list of edge endpoints.
    """
    if not 1 <= m < n:
        raise ValueError("need 1 <= m < n")
    rng = np.random.Generator(np.random.PCG64(seed))
    endpoints: list[int] = []
    us, vs = [], []
    targets = list(range(m))
    for source in range(m, n):
        us.extend([source] * m)
        vs.extend(targets)
        endpoints.extend(targets)
        endpoints.extend([source] * m)
        chosen: set[int] = set()
        while len(chosen) < m:
            chosen.add(endpoints[rng.integers(len(endpoints))])
        targets = sorted(chosen)
    return UndirectedGraph.from_edges(_labels(n), us, vs, meta={"kind": "ba", "m": m, "seed": seed})

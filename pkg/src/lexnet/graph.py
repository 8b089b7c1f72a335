"""Simple undirected graphs over words, and the two network builders.

A word co-occurrence network (WCN) links two words when they appear in the
same text. A word similarity network (WSN) links two words whose embedding
cosine similarity is strictly above a percentile threshold.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse

from .corpus import Corpus, Vocabulary
from .embedding import EmbeddingError, EmbeddingMatrix

log = logging.getLogger(__name__)

# Above this many words an exhaustive threshold population is refused.
EXHAUSTIVE_LIMIT = 50_000


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class UndirectedGraph:
    """Simple unweighted undirected graph in CSR form.

    Node ``i`` is the word ``words[i]``; its neighbors are the sorted slice
    ``indices[indptr[i]:indptr[i + 1]]``. Build instances with
    :meth:`from_edges`, which enforces the simple-graph invariants.
    """

    words: tuple[str, ...]
    indptr: np.ndarray
    indices: np.ndarray
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_edges(cls, words: Sequence[str], u, v, meta: dict | None = None) -> "UndirectedGraph":
        """Build a graph from endpoint arrays; duplicate edges collapse.

        Raises GraphError on self-loops or ids outside ``range(len(words))``.
        """
        n = len(words)
        u = np.asarray(u, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=np.int64).ravel()
        if u.shape != v.shape:
            raise GraphError("endpoint arrays differ in length")
        if u.size:
            if min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n:
                raise GraphError("edge endpoint outside node range")
            if (u == v).any():
                raise GraphError(f"self-loop on node {int(u[u == v][0])}")
        a, b = np.minimum(u, v), np.maximum(u, v)
        keys = np.unique(a * n + b)
        return cls._from_keys(tuple(words), keys, meta)

    @classmethod
    def _from_keys(cls, words, keys, meta=None) -> "UndirectedGraph":
        # keys are unique a*n+b with a < b
        n = len(words)
        a, b = np.divmod(keys, n) if n else (keys, keys)
        rows = np.concatenate([a, b])
        cols = np.concatenate([b, a])
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return cls(words, indptr, cols.astype(np.int64), dict(meta or {}))

    @property
    def n_nodes(self) -> int:
        return len(self.words)

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        nb = self.neighbors(i)
        k = np.searchsorted(nb, j)
        return bool(k < len(nb) and nb[k] == j)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Edges as ``(u, v)`` arrays with ``u < v``, sorted by ``(u, v)``."""
        rows = np.repeat(np.arange(self.n_nodes, dtype=np.int64), self.degrees())
        mask = rows < self.indices
        return rows[mask], self.indices[mask]

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(*(x.tolist() for x in self.edges())))

    def word_edge_set(self) -> set[frozenset]:
        w = self.words
        return {frozenset((w[a], w[b])) for a, b in self.edge_set()}

    def adjacency(self) -> sparse.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.float64)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(self.n_nodes, self.n_nodes))

    def check_invariants(self) -> None:
        """Raise GraphError unless the graph is simple, symmetric and sorted."""
        n = self.n_nodes
        if len(self.indptr) != n + 1 or self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise GraphError("malformed indptr")
        if len(self.indices) % 2:
            raise GraphError("odd adjacency length; graph is not symmetric")
        rows = np.repeat(np.arange(n, dtype=np.int64), self.degrees())
        if (rows == self.indices).any():
            raise GraphError("self-loop present")
        for i in range(n):
            nb = self.neighbors(i)
            if len(nb) > 1 and not (np.diff(nb) > 0).all():
                raise GraphError(f"neighbors of {i} unsorted or duplicated")
        fwd = np.unique(rows * n + self.indices)
        back = np.unique(self.indices * n + rows)
        if not np.array_equal(fwd, back):
            raise GraphError("adjacency is not symmetric")


def degree_sequence(g: UndirectedGraph) -> list[int]:
    return g.degrees().tolist()


# -- word co-occurrence network ---------------------------------------------

def _text_pair_keys(ids: np.ndarray, n_vocab: int, window: int | None, max_unique: int | None):
    if window is None:
        seen = ids[ids >= 0]
        _, first = np.unique(seen, return_index=True)
        uniq = seen[np.sort(first)]
        if max_unique is not None and len(uniq) > max_unique:
            uniq = uniq[:max_unique]
        uniq = np.sort(uniq)
        if len(uniq) < 2:
            return None
        i, j = np.triu_indices(len(uniq), k=1)
        return uniq[i] * n_vocab + uniq[j]
    parts = []
    for off in range(1, window + 1):
        a, b = ids[:-off], ids[off:]
        ok = (a >= 0) & (b >= 0) & (a != b)
        if ok.any():
            lo = np.minimum(a[ok], b[ok])
            hi = np.maximum(a[ok], b[ok])
            parts.append(lo * n_vocab + hi)
    return np.concatenate(parts) if parts else None


def _wcn_chunk(encoded, n_vocab, window, max_unique):
    keys, pending, pending_len = None, [], 0
    present = np.zeros(n_vocab, dtype=bool)
    for ids in encoded:
        present[ids[ids >= 0]] = True
        k = _text_pair_keys(ids, n_vocab, window, max_unique)
        if k is None:
            continue
        pending.append(k)
        pending_len += len(k)
        if pending_len > 4_000_000:
            keys = _merge(keys, pending)
            pending, pending_len = [], 0
    keys = _merge(keys, pending)
    return keys, present


def _merge(keys, pending):
    if not pending:
        return keys if keys is not None else np.empty(0, dtype=np.int64)
    if keys is not None:
        pending = [keys] + pending
    return np.unique(np.concatenate(pending))


def build_wcn(
    corpus: Corpus,
    vocab: Vocabulary,
    window: int | None = None,
    max_unique_tokens: int | None = None,
    threads: int = 1,
) -> UndirectedGraph:
    """Word co-occurrence network: a clique over each text's vocabulary words.

    Nodes are the vocabulary words that occur in at least one text, in
    vocabulary order; words that never co-occur stay as isolated nodes.

    Parameters
    ----------
    window
        Extension, off by default. When set, only words at most ``window``
        positions apart (out-of-vocabulary tokens still count as positions)
        are linked, instead of every pair in the text.
    max_unique_tokens
        Keep only the first this-many distinct vocabulary words of each text.
        Unlimited by default.
    threads
        Texts are split into this many chunks processed concurrently; the
        result does not depend on the value.
    """
    if len(vocab) == 0:
        raise GraphError("empty vocabulary")
    if window is not None and window < 1:
        raise ValueError("window must be >= 1")
    n_vocab = len(vocab)
    encoded = [vocab.encode(t.tokens) for t in corpus.texts]
    if threads > 1 and len(encoded) > 1:
        bounds = np.linspace(0, len(encoded), threads + 1).astype(int)
        chunks = [encoded[bounds[i]:bounds[i + 1]] for i in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: _wcn_chunk(c, n_vocab, window, max_unique_tokens), chunks))
        keys = np.unique(np.concatenate([r[0] for r in results]))
        present = np.logical_or.reduce([r[1] for r in results])
    else:
        keys, present = _wcn_chunk(encoded, n_vocab, window, max_unique_tokens)

    node_of = np.full(n_vocab, -1, dtype=np.int64)
    kept = np.flatnonzero(present)
    node_of[kept] = np.arange(len(kept))
    words = tuple(vocab.words[i] for i in kept)
    a, b = np.divmod(keys, n_vocab)
    g = UndirectedGraph.from_edges(words, node_of[a], node_of[b], meta={"kind": "wcn"})
    log.info("WCN: %d nodes, %d edges", g.n_nodes, g.edge_count)
    return g


# -- word similarity network -------------------------------------------------

@dataclass(frozen=True)
class SimilarityThreshold:
    value: float
    percentile: float
    sample_size: int
    seed: int
    exhaustive: bool = False

    def __post_init__(self):
        if not -1.0 <= self.value <= 1.0:
            raise ValueError("threshold value must lie in [-1, 1]")
        if not 0.0 < self.percentile < 100.0:
            raise ValueError("percentile must lie in (0, 100)")


def _unit_rows(m: EmbeddingMatrix, vocab_subset: Vocabulary) -> np.ndarray:
    rows = m.rows_for(vocab_subset.words)
    norms = np.linalg.norm(rows, axis=1)
    zero = np.flatnonzero(norms == 0)
    if len(zero):
        raise EmbeddingError(f"undefined similarity: zero vector for word {vocab_subset.words[zero[0]]!r}")
    return rows / norms[:, None]


def estimate_similarity_threshold(
    m: EmbeddingMatrix,
    vocab_subset: Vocabulary,
    percentile: float = 99.0,
    sample_size: int = 10_000_000,
    seed: int = 0,
    exhaustive: bool = False,
    chunk: int = 1_000_000,
) -> SimilarityThreshold:
    """Empirical percentile of cosine similarity between distinct word pairs.

    By default ``sample_size`` unordered pairs are drawn uniformly with
    replacement (numpy PCG64, seeded), redrawing pairs of a word with itself.
    With ``exhaustive=True`` every unordered pair is used instead. Percentiles
    interpolate linearly between order statistics.
    """
    n = len(vocab_subset)
    if n < 2:
        raise GraphError("need at least 2 words to estimate a similarity threshold")
    unit = _unit_rows(m, vocab_subset)
    if exhaustive:
        if n >= EXHAUSTIVE_LIMIT:
            raise GraphError(f"exhaustive threshold refused for {n} words (limit {EXHAUSTIVE_LIMIT})")
        sims = []
        for i0 in range(0, n, 1024):
            block = unit[i0:i0 + 1024] @ unit.T
            r, c = np.nonzero(np.arange(i0, i0 + len(block))[:, None] < np.arange(n)[None, :])
            sims.append(block[r, c])
        pop = np.concatenate(sims)
        value = float(np.percentile(pop, percentile))
        return SimilarityThreshold(float(np.clip(value, -1, 1)), percentile, len(pop), seed, True)

    if sample_size < 1000:
        raise ValueError("sample_size must be >= 1000")
    rng = np.random.Generator(np.random.PCG64(seed))
    i = rng.integers(0, n, size=sample_size)
    j = rng.integers(0, n, size=sample_size)
    same = np.flatnonzero(i == j)
    while len(same):
        j[same] = rng.integers(0, n, size=len(same))
        same = same[i[same] == j[same]]
    pop = np.empty(sample_size)
    for s in range(0, sample_size, chunk):
        pop[s:s + chunk] = np.einsum("ij,ij->i", unit[i[s:s + chunk]], unit[j[s:s + chunk]])
    value = float(np.percentile(pop, percentile))
    return SimilarityThreshold(float(np.clip(value, -1, 1)), percentile, sample_size, seed, False)


def build_wsn(
    m: EmbeddingMatrix,
    vocab_subset: Vocabulary,
    threshold: SimilarityThreshold | float,
    block: int = 2048,
) -> UndirectedGraph:
    """Word similarity network over ``vocab_subset``.

    Words ``u`` and ``v`` are linked when their cosine similarity is strictly
    greater than the threshold. All pairs are compared, ``block`` rows at a
    time.
    """
    value = threshold.value if isinstance(threshold, SimilarityThreshold) else float(threshold)
    unit = _unit_rows(m, vocab_subset)
    n = len(unit)
    us, vs = [], []
    for i0 in range(0, n, block):
        sims = unit[i0:i0 + block] @ unit.T
        r, c = np.nonzero(sims > value)
        r = r + i0
        keep = r < c
        us.append(r[keep])
        vs.append(c[keep])
    u = np.concatenate(us) if us else np.empty(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.empty(0, dtype=np.int64)
    g = UndirectedGraph.from_edges(vocab_subset.words, u, v, meta={"kind": "wsn", "threshold": value})
    log.info("WSN: %d nodes, %d edges (threshold %.6f)", g.n_nodes, g.edge_count, value)
    return g


# -- persistence -------------------------------------------------------------

def save_graph(g: UndirectedGraph, path: str | Path) -> None:
    """Write ``N E``, then ``id word`` rows, ``#edges``, then sorted ``u v`` rows."""
    u, v = g.edges()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{g.n_nodes} {g.edge_count}\n")
        for i, w in enumerate(g.words):
            fh.write(f"{i} {w}\n")
        fh.write("#edges\n")
        fh.write("".join(f"{a} {b}\n" for a, b in zip(u.tolist(), v.tolist())))


def load_graph(path: str | Path) -> UndirectedGraph:
    """Read a graph written by :func:`save_graph`.

    Duplicate edge lines collapse to one edge; their number is stored in
    ``meta["duplicate_edges"]``. Unknown ids and self-loops raise GraphError
    naming the line.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise GraphError(f"{path}: empty file")
    head = lines[0].split()
    try:
        n, e = int(head[0]), int(head[1])
        if len(head) != 2:
            raise ValueError
    except (ValueError, IndexError):
        raise GraphError(f"{path}:1: expected header 'nodes edges'") from None
    if len(lines) < n + 2:
        raise GraphError(f"{path}: truncated node table")
    words = []
    for lineno in range(2, n + 2):
        parts = lines[lineno - 1].split(" ", 1)
        if len(parts) != 2 or parts[0] != str(lineno - 2) or not parts[1]:
            raise GraphError(f"{path}:{lineno}: expected '{lineno - 2} word'")
        words.append(parts[1])
    if lines[n + 1] != "#edges":
        raise GraphError(f"{path}:{n + 2}: expected '#edges'")
    us, vs = [], []
    seen = set()
    duplicates = 0
    for lineno in range(n + 3, len(lines) + 1):
        parts = lines[lineno - 1].split()
        try:
            a, b = int(parts[0]), int(parts[1])
            if len(parts) != 2:
                raise ValueError
        except (ValueError, IndexError):
            raise GraphError(f"{path}:{lineno}: expected 'u v'") from None
        if not (0 <= a < n and 0 <= b < n):
            raise GraphError(f"{path}:{lineno}: unknown node id in edge {a} {b}")
        if a == b:
            raise GraphError(f"{path}:{lineno}: self-loop {a} {b}")
        key = (min(a, b), max(a, b))
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        us.append(a)
        vs.append(b)
    if e not in (len(seen), len(seen) + duplicates):
        raise GraphError(f"{path}: header declares {e} edges, found {len(seen)} distinct")
    if duplicates:
        log.warning("%s: %d duplicate edge lines ignored", path, duplicates)
    return UndirectedGraph.from_edges(words, us, vs, meta={"duplicate_edges": duplicates})

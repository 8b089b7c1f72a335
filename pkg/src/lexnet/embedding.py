"""Skip-gram with negative sampling (SGNS) word embeddings.

The trainer is plain stochastic gradient descent on the SGNS objective, one
(center, context) pair at a time, compiled with numba. Randomness inside the
kernel comes from the 64-bit linear congruential generator used by the
original word2vec tool (multiplier 25214903917, increment 11), seeded from
``TrainingConfig.seed``; a fixed seed therefore gives bit-identical vectors
in single-threaded mode.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from .corpus import Corpus, CorpusError, Vocabulary

log = logging.getLogger(__name__)


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True)
class TrainingConfig:
    window: int = 10
    dim: int = 500
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    seed: int = 1
    # Frequent-word subsampling threshold (word2vec's ``sample``); 0 disables.
    subsample: float = 0.0

    def __post_init__(self):
        for name in ("window", "dim", "negatives"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not self.initial_lr > 0:
            raise ValueError("initial_lr must be positive")
        if self.subsample < 0:
            raise ValueError("subsample must be >= 0")


@dataclass(frozen=True)
class NoiseDistribution:
    """Unigram distribution raised to the 3/4 power."""

    weights: np.ndarray

    @classmethod
    def from_counts(cls, counts: Sequence[int], power: float = 0.75) -> "NoiseDistribution":
        w = np.asarray(counts, dtype=np.float64) ** power
        return cls(w / w.sum())

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.weights)


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Trained SGNS parameters.

    ``input_vectors`` are the word embeddings proper. ``output_vectors`` are
    the context parameters; they are None for matrices loaded from the text
    format, which stores input vectors only.
    """

    input_vectors: np.ndarray
    output_vectors: np.ndarray | None
    vocab: Vocabulary
    loss_history: tuple[float, ...] = field(default=())

    def __post_init__(self):
        v = len(self.vocab)
        if self.input_vectors.ndim != 2 or self.input_vectors.shape[0] != v:
            raise EmbeddingError("input_vectors must have one row per vocabulary word")
        if self.output_vectors is not None and self.output_vectors.shape != self.input_vectors.shape:
            raise EmbeddingError("output_vectors shape differs from input_vectors")
        if not np.isfinite(self.input_vectors).all():
            raise EmbeddingError("non-finite entries in input_vectors")

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def __len__(self):
        return self.input_vectors.shape[0]

    def vector(self, word: str) -> np.ndarray:
        return self.input_vectors[self.vocab[word]]

    def rows_for(self, words: Sequence[str]) -> np.ndarray:
        try:
            idx = [self.vocab[w] for w in words]
        except KeyError as exc:
            raise EmbeddingError(f"word {exc.args[0]!r} has no embedding") from None
        return self.input_vectors[idx]

    def similarity(self, a: str, b: str) -> float:
        return cosine_similarity(self.vector(a), self.vector(b))


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _check_dims(center, context, negatives):
    center = np.asarray(center, dtype=np.float64)
    context = np.asarray(context, dtype=np.float64)
    negs = [np.asarray(n, dtype=np.float64) for n in negatives]
    d = center.shape
    if context.shape != d or any(n.shape != d for n in negs) or center.ndim != 1:
        raise EmbeddingError("center, context and negatives must be vectors of one dimension")
    return center, context, negs


def sgns_pair_loss(center, context, negatives=()) -> float:
    """``-ln s(c.x) - sum_n ln s(-c.n)`` with s the logistic function."""
    c, x, negs = _check_dims(center, context, negatives)
    loss = -_log_sigmoid(c @ x)
    for n in negs:
        loss -= _log_sigmoid(-(c @ n))
    return float(loss)


def sgns_pair_gradient(center, context, negatives=()):
    """Analytic gradient of :func:`sgns_pair_loss`.

    Returns ``(d_center, d_context, [d_negative, ...])``.
    """
    c, x, negs = _check_dims(center, context, negatives)
    gx = _sigmoid(c @ x) - 1.0
    d_center = gx * x
    d_context = gx * c
    d_negs = []
    for n in negs:
        gn = _sigmoid(c @ n)
        d_center = d_center + gn * n
        d_negs.append(gn * c)
    return d_center, d_context, d_negs


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise EmbeddingError("undefined similarity: zero vector")
    return float(np.clip((a @ b) / (na * nb), -1.0, 1.0))


# -- training kernel ---------------------------------------------------------

@numba.njit(cache=True)
def _next(state):
    return state * np.uint64(25214903917) + np.uint64(11)


@numba.njit(cache=True)
def _uniform(state):
    # top 53 bits of the LCG state
    return float(state >> np.uint64(11)) / 9007199254740992.0


@numba.njit(cache=True, nogil=True)
def _train_shard(
    ids, offsets, texts, w_in, w_out, cum, keep, negatives, window,
    epochs, lr0, total_words, seed, loss_out, pairs_out,
):
    dim = w_in.shape[1]
    n_vocab = w_in.shape[0]
    total_mass = cum[n_vocab - 1]
    state = np.uint64(seed) * np.uint64(6364136223846793005) + np.uint64(1442695040888963407)
    neu1e = np.zeros(dim)
    processed = 0
    budget = max(1, epochs * total_words)
    for epoch in range(epochs):
        for ti in range(texts.shape[0]):
            t = texts[ti]
            start = offsets[t]
            stop = offsets[t + 1]
            for pos in range(start, stop):
                c = ids[pos]
                if c < 0:
                    continue
                processed += 1
                if keep[c] < 1.0:
                    state = _next(state)
                    if _uniform(state) > keep[c]:
                        continue
                progress = processed / budget
                if progress > 1.0:
                    progress = 1.0
                lr = lr0 * (1.0 - 0.99 * progress)
                lo = max(start, pos - window)
                hi = min(stop, pos + window + 1)
                for cpos in range(lo, hi):
                    if cpos == pos:
                        continue
                    o = ids[cpos]
                    if o < 0:
                        continue
                    if keep[o] < 1.0:
                        state = _next(state)
                        if _uniform(state) > keep[o]:
                            continue
                    for k in range(dim):
                        neu1e[k] = 0.0
                    loss = 0.0
                    for d in range(negatives + 1):
                        if d == 0:
                            target = o
                            label = 1.0
                        else:
                            target = o
                            while target == o:
                                state = _next(state)
                                u = _uniform(state) * total_mass
                                target = np.searchsorted(cum, u, side="right")
                                if target >= n_vocab:
                                    target = n_vocab - 1
                            label = 0.0
                        f = 0.0
                        for k in range(dim):
                            f += w_in[c, k] * w_out[target, k]
                        # stable log-sigmoid of +-f
                        if label == 1.0:
                            z = f
                        else:
                            z = -f
                        if z > 0:
                            loss += np.log1p(np.exp(-z))
                        else:
                            loss += -z + np.log1p(np.exp(z))
                        sig = 1.0 / (1.0 + np.exp(-f))
                        g = (label - sig) * lr
                        for k in range(dim):
                            neu1e[k] += g * w_out[target, k]
                        for k in range(dim):
                            w_out[target, k] += g * w_in[c, k]
                    for k in range(dim):
                        w_in[c, k] += neu1e[k]
                    loss_out[epoch] += loss
                    pairs_out[epoch] += 1
    return processed


def _flatten(corpus: Corpus, vocab: Vocabulary):
    get = vocab.get
    lengths = np.fromiter((len(t) for t in corpus.texts), dtype=np.int64, count=len(corpus))
    offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    ids = np.fromiter(
        (get(tok, -1) for t in corpus.texts for tok in t.tokens),
        dtype=np.int64,
        count=int(offsets[-1]),
    )
    return ids, offsets


def _keep_probabilities(counts: np.ndarray, threshold: float) -> np.ndarray:
    if threshold <= 0:
        return np.ones(len(counts))
    total = counts.sum()
    f = counts / total
    keep = (np.sqrt(f / threshold) + 1.0) * threshold / f
    return np.minimum(keep, 1.0)


def initial_vectors(n_words: int, config: TrainingConfig):
    """Input vectors uniform in (-0.5/dim, 0.5/dim); output vectors zero."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    half = 0.5 / config.dim
    w_in = rng.uniform(-half, half, size=(n_words, config.dim))
    w_out = np.zeros((n_words, config.dim))
    return w_in, w_out


def train_sgns(
    corpus: Corpus,
    vocab: Vocabulary,
    config: TrainingConfig = TrainingConfig(),
    threads: int = 1,
) -> EmbeddingMatrix:
    """Train SGNS embeddings for ``vocab`` over ``corpus``.

    Each text is windowed independently with a fixed window of
    ``config.window`` tokens on each side. Out-of-vocabulary tokens are never
    centers or contexts but still occupy positions. The learning rate decays
    linearly from ``initial_lr`` to ``initial_lr / 100`` over training.

    With ``threads > 1`` texts are split into shards trained concurrently on
    shared parameters without locking; results are then only statistically
    reproducible.
    """
    if len(vocab) < 2:
        raise EmbeddingError("need at least 2 vocabulary words for negative sampling")
    ids, offsets = _flatten(corpus, vocab)
    effective = int((ids >= 0).sum())
    if effective == 0:
        raise CorpusError("empty effective corpus: no token is in the vocabulary")

    counts = np.asarray(vocab.counts, dtype=np.float64)
    cum = NoiseDistribution.from_counts(counts).cumulative
    keep = _keep_probabilities(counts, config.subsample)
    w_in, w_out = initial_vectors(len(vocab), config)
    loss = np.zeros(config.epochs)
    pairs = np.zeros(config.epochs, dtype=np.int64)

    if config.epochs > 0:
        text_idx = np.arange(len(corpus), dtype=np.int64)
        if threads <= 1:
            _train_shard(ids, offsets, text_idx, w_in, w_out, cum, keep, config.negatives,
                         config.window, config.epochs, config.initial_lr, effective,
                         config.seed, loss, pairs)
        else:
            shards = np.array_split(text_idx, threads)
            losses = np.zeros((threads, config.epochs))
            counts_ = np.zeros((threads, config.epochs), dtype=np.int64)

            def run(i):
                shard = shards[i]
                shard_words = int(sum((ids[offsets[t]:offsets[t + 1]] >= 0).sum() for t in shard))
                _train_shard(ids, offsets, shard, w_in, w_out, cum, keep, config.negatives,
                             config.window, config.epochs, config.initial_lr, shard_words,
                             config.seed + 7919 * i, losses[i], counts_[i])

            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(run, range(threads)))
            loss = losses.sum(axis=0)
            pairs = counts_.sum(axis=0)

    history = tuple(float(l / p) if p else float("nan") for l, p in zip(loss, pairs))
    for epoch, value in enumerate(history):
        log.info("epoch %d: mean pair loss %.6f", epoch + 1, value)
    return EmbeddingMatrix(w_in, w_out, vocab, history)


def save_embeddings(m: EmbeddingMatrix, path: str | Path) -> None:
    """Write input vectors in word2vec text format with 9 significant digits."""
    if len(m) == 0:
        raise EmbeddingError("no vectors")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(m)} {m.dim}\n")
        for word, row in zip(m.vocab.words, m.input_vectors):
            fh.write(word + " " + " ".join(format(x, ".9g") for x in row) + "\n")


def load_embeddings(path: str | Path, vocab: Vocabulary | None = None) -> EmbeddingMatrix:
    """Read the text format written by :func:`save_embeddings`.

    When ``vocab`` is given, the file's words must match it in order and it is
    attached to the result; otherwise a count-less vocabulary is built.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingError(f"{path}:1: expected header 'V dim'")
        try:
            n, dim = int(header[0]), int(header[1])
        except ValueError:
            raise EmbeddingError(f"{path}:1: V and dim must be integers") from None
        if n == 0:
            raise EmbeddingError(f"{path}: no vectors")
        if dim < 1:
            raise EmbeddingError(f"{path}:1: dim must be positive")
        words = []
        rows = np.empty((n, dim))
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(words) == n:
                if line.strip():
                    raise EmbeddingError(f"{path}:{lineno}: more rows than declared V={n}")
                continue
            if len(parts) != dim + 1:
                raise EmbeddingError(f"{path}:{lineno}: expected word and {dim} values, got {len(parts) - 1}")
            try:
                rows[len(words)] = [float(x) for x in parts[1:]]
            except ValueError:
                raise EmbeddingError(f"{path}:{lineno}: non-numeric vector entry") from None
            words.append(parts[0])
    if len(words) != n:
        raise EmbeddingError(f"{path}: header declares {n} rows, found {len(words)}")
    if vocab is None:
        vocab = Vocabulary(tuple(words), (0,) * n)
    elif tuple(words) != vocab.words:
        raise EmbeddingError(f"{path}: words do not match the given vocabulary")
    return EmbeddingMatrix(rows, None, vocab)

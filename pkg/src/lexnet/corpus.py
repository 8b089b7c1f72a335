"""Corpus ingestion, text normalization and vocabulary construction.

Input corpora are already segmented into words; this module only cleans
tokens, groups them into texts (the co-occurrence unit) and counts them.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

FORMATS = ("pretokenized-lines", "token-json-lines")

# CJK Unified Ideographs, base block.
CJK_BASE = (0x4E00, 0x9FFF)
# Extension A and the compatibility block, for callers that want them.
CJK_EXT_A = (0x3400, 0x4DBF)
CJK_COMPAT = (0xF900, 0xFAFF)

_ASCII_LOWER = str.maketrans(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz"
)
_DIGIT = re.compile(r"\d")


class CorpusError(ValueError):
    """Raised for malformed or degenerate corpus input."""


@dataclass(frozen=True)
class NormalizationConfig:
    """Character classes kept by :func:`normalize_text`.

    ``ideograph_ranges`` are inclusive code point ranges treated as Mandarin
    characters. Latin letters are the ASCII letters; digits are any Unicode
    decimal digit.
    """

    ideograph_ranges: tuple[tuple[int, int], ...] = (CJK_BASE,)

    def __post_init__(self):
        for lo, hi in self.ideograph_ranges:
            if not 0 <= lo <= hi <= 0x10FFFF:
                raise ValueError(f"bad code point range {lo:#x}-{hi:#x}")

    @property
    def _strip(self) -> re.Pattern:
        ranges = "".join(
            f"\\U{lo:08x}-\\U{hi:08x}" for lo, hi in self.ideograph_ranges
        )
        return _strip_pattern(ranges)


_PATTERNS: dict[str, re.Pattern] = {}


def _strip_pattern(ranges: str) -> re.Pattern:
    pat = _PATTERNS.get(ranges)
    if pat is None:
        pat = re.compile(f"[^a-z0-9{ranges}]")
        _PATTERNS[ranges] = pat
    return pat


DEFAULT_NORMALIZATION = NormalizationConfig()


def normalize_text(raw: str, rules: NormalizationConfig = DEFAULT_NORMALIZATION) -> str:
    """Map digits to ``0``, lowercase Latin letters, drop everything else.

    Ideographs inside the configured ranges pass through unchanged. Whitespace
    counts as a removable character, so the result never contains spaces.

    >>> normalize_text("ABC123中文!")
    'abc000中文'
    """
    s = _DIGIT.sub("0", raw)
    s = s.translate(_ASCII_LOWER)
    return rules._strip.sub("", s)


def whitespace_tokenize(line: str) -> list[str]:
    return line.split()


@dataclass(frozen=True)
class TokenizedText:
    tokens: tuple[str, ...]
    source_id: str

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class Corpus:
    """An immutable sequence of texts.

    ``dropped`` counts input records whose tokens all normalized to empty.
    """

    texts: tuple[TokenizedText, ...]
    label: str = ""
    dropped: int = 0

    def __post_init__(self):
        if not self.texts:
            raise CorpusError("empty corpus")

    def __len__(self):
        return len(self.texts)

    def __iter__(self):
        return iter(self.texts)

    @property
    def n_tokens(self) -> int:
        return sum(len(t) for t in self.texts)

    @classmethod
    def from_token_lists(
        cls,
        token_lists: Iterable[Sequence[str]],
        label: str = "",
        rules: NormalizationConfig = DEFAULT_NORMALIZATION,
    ) -> "Corpus":
        """Build a corpus from in-memory token lists, normalizing each token."""
        texts = []
        dropped = 0
        for i, toks in enumerate(token_lists):
            text = _make_text(toks, str(i), rules)
            if text is None:
                dropped += 1
            else:
                texts.append(text)
        return cls(tuple(texts), label=label, dropped=dropped)


def _make_text(tokens, source_id, rules) -> TokenizedText | None:
    normed = [normalize_text(t, rules) for t in tokens]
    normed = [t for t in normed if t]
    if not normed:
        return None
    return TokenizedText(tuple(normed), source_id)


def ingest_corpus(
    path: str | Path,
    format: str = "pretokenized-lines",
    rules: NormalizationConfig = DEFAULT_NORMALIZATION,
    tokenizer: Callable[[str], list[str]] = whitespace_tokenize,
    label: str | None = None,
) -> Corpus:
    """Read a corpus file into a :class:`Corpus`.

    Parameters
    ----------
    path
        UTF-8 file, one record per line.
    format
        ``pretokenized-lines`` (tokens separated by spaces) or
        ``token-json-lines`` (``{"id": ..., "tokens": [...]}`` per line).
    rules
        Normalization applied to every token.
    tokenizer
        Splits a ``pretokenized-lines`` record into tokens.
    label
        Corpus name; defaults to the file stem.

    Raises
    ------
    CorpusError
        On a malformed record (the message names the line number) or when no
        text survives normalization.
    OSError
        If the file cannot be read.
    """
    if format not in FORMATS:
        raise CorpusError(f"unknown corpus format {format!r}; expected one of {FORMATS}")
    path = Path(path)
    texts: list[TokenizedText] = []
    dropped = 0
    records = 0
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid UTF-8 ({exc.reason})") from None
            line = line.rstrip("\r\n")
            if format == "pretokenized-lines":
                if not line.strip():
                    continue
                source_id, tokens = str(lineno), tokenizer(line)
            else:
                if not line.strip():
                    continue
                source_id, tokens = _parse_json_record(line, path, lineno)
            records += 1
            text = _make_text(tokens, source_id, rules)
            if text is None:
                dropped += 1
            else:
                texts.append(text)
    if not texts:
        raise CorpusError(f"empty corpus: {path} ({records} records, {dropped} dropped)")
    if dropped:
        log.warning("%s: dropped %d texts that normalized to nothing", path, dropped)
    return Corpus(tuple(texts), label=label if label is not None else path.stem, dropped=dropped)


def _parse_json_record(line, path, lineno):
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict) or "tokens" not in obj:
        raise CorpusError(f"{path}:{lineno}: record must be an object with a 'tokens' list")
    tokens = obj["tokens"]
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise CorpusError(f"{path}:{lineno}: 'tokens' must be a list of strings")
    source_id = obj.get("id", str(lineno))
    if not isinstance(source_id, str):
        raise CorpusError(f"{path}:{lineno}: 'id' must be a string")
    return source_id, tokens


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus in ``token-json-lines`` format."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for text in corpus.texts:
            rec = {"id": text.source_id, "tokens": list(text.tokens)}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class Vocabulary:
    """Word/id bijection with corpus counts.

    Ids are positions in ``words``. ``min_count`` is the strict threshold the
    vocabulary was filtered with, or None when unknown (e.g. loaded from disk).
    """

    words: tuple[str, ...]
    counts: tuple[int, ...]
    min_count: int | None = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.words) != len(self.counts):
            raise ValueError("words and counts differ in length")
        index = {w: i for i, w in enumerate(self.words)}
        if len(index) != len(self.words):
            raise ValueError("duplicate words in vocabulary")
        if self.min_count is not None and any(c <= self.min_count for c in self.counts):
            raise ValueError("vocabulary holds a word at or below min_count")
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self._index

    def __getitem__(self, word: str) -> int:
        return self._index[word]

    def get(self, word: str, default=None):
        return self._index.get(word, default)

    def count(self, word: str) -> int:
        return self.counts[self._index[word]]

    def encode(self, tokens: Iterable[str]) -> np.ndarray:
        """Ids for ``tokens``, with -1 for out-of-vocabulary entries."""
        get = self._index.get
        return np.fromiter((get(t, -1) for t in tokens), dtype=np.int64)


def build_vocabulary(corpus: Corpus, min_count: int = 3) -> Vocabulary:
    """Keep words whose token count is strictly greater than ``min_count``.

    Words are ordered by descending count, ties broken by the word itself, so
    ids are reproducible regardless of text order.
    """
    if min_count < 0:
        raise ValueError("min_count must be non-negative")
    tally: Counter = Counter()
    for text in corpus.texts:
        tally.update(text.tokens)
    kept = sorted(((w, c) for w, c in tally.items() if c > min_count), key=lambda wc: (-wc[1], wc[0]))
    if not kept:
        raise CorpusError(f"empty vocabulary: no word occurs more than {min_count} times")
    words, counts = zip(*kept)
    return Vocabulary(tuple(words), tuple(counts), min_count)


def sample_vocabulary(vocab: Vocabulary, fraction: float, seed: int) -> Vocabulary:
    """Uniform random subset of ``round(fraction * V)`` words.

    Uses numpy's PCG64 generator seeded with ``seed``. Surviving words keep
    their relative order and counts; ids are re-densified.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    size = int(np.floor(fraction * len(vocab) + 0.5))
    if size < 1:
        raise ValueError(f"fraction {fraction} of {len(vocab)} words selects nothing")
    rng = np.random.Generator(np.random.PCG64(seed))
    picked = np.sort(rng.choice(len(vocab), size=size, replace=False))
    return Vocabulary(
        tuple(vocab.words[i] for i in picked),
        tuple(vocab.counts[i] for i in picked),
        vocab.min_count,
    )


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("word\tid\tcount\n")
        for i, (w, c) in enumerate(zip(vocab.words, vocab.counts)):
            fh.write(f"{w}\t{i}\t{c}\n")


def load_vocabulary(path: str | Path, min_count: int | None = None) -> Vocabulary:
    words, counts = [], []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != "word\tid\tcount":
            raise CorpusError(f"{path}:1: expected header 'word\\tid\\tcount'")
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise CorpusError(f"{path}:{lineno}: expected 3 tab-separated fields")
            word, wid, cnt = parts
            try:
                wid, cnt = int(wid), int(cnt)
            except ValueError:
                raise CorpusError(f"{path}:{lineno}: id and count must be integers") from None
            if wid != len(words):
                raise CorpusError(f"{path}:{lineno}: ids must be contiguous from 0")
            words.append(word)
            counts.append(cnt)
    if not words:
        raise CorpusError(f"empty vocabulary: {path}")
    return Vocabulary(tuple(words), tuple(counts), min_count)

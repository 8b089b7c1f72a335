import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexnet.corpus import (
    CJK_EXT_A,
    Corpus,
    CorpusError,
    NormalizationConfig,
    Vocabulary,
    build_vocabulary,
    ingest_corpus,
    load_vocabulary,
    normalize_text,
    sample_vocabulary,
    save_vocabulary,
    write_corpus,
)
from oracles import token_tally


class TestNormalize:
    @pytest.mark.parametrize(
        "raw, expected",
        [
            ("ABC123中文!", "abc000中文"),
            ("中文", "中文"),
            ("Covid-19 疫苗 👍", "covid00疫苗"),
            ("", ""),
            ("！？。，", ""),
            ("ＡＢ", ""),  # full-width letters are not ASCII Latin
            ("٣", "0"),  # any Unicode decimal digit
        ],
    )
    def test_rules(self, raw, expected):
        assert normalize_text(raw) == expected

    def test_extension_block_is_opt_in(self):
        ch = "㐀"
        assert normalize_text(ch) == ""
        rules = NormalizationConfig(ideograph_ranges=((0x4E00, 0x9FFF), CJK_EXT_A))
        assert normalize_text(ch, rules) == ch

    def test_bad_range(self):
        with pytest.raises(ValueError):
            NormalizationConfig(ideograph_ranges=((10, 5),))

    @given(st.text())
    def test_idempotent(self, s):
        once = normalize_text(s)
        assert normalize_text(once) == once

    @given(st.text())
    def test_output_alphabet(self, s):
        out = normalize_text(s)
        assert all(c in "abcdefghijklmnopqrstuvwxyz0" or 0x4E00 <= ord(c) <= 0x9FFF for c in out)


class TestIngest:
    def test_pretokenized(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("我 喜歡 貓\n貓 可愛\n", encoding="utf-8")
        c = ingest_corpus(p)
        assert [len(t) for t in c] == [3, 2]
        assert c.texts[0].tokens == ("我", "喜歡", "貓")
        assert c.label == "c"

    def test_empty_file(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("", encoding="utf-8")
        with pytest.raises(CorpusError, match="empty corpus"):
            ingest_corpus(p)

    def test_all_punctuation_line_dropped(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("貓 可愛\n!!! ???\n", encoding="utf-8")
        c = ingest_corpus(p)
        assert len(c) == 1
        assert c.dropped == 1

    def test_tokens_normalized_and_empty_tokens_removed(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("COVID-19 ， 疫苗\n", encoding="utf-8")
        assert ingest_corpus(p).texts[0].tokens == ("covid00", "疫苗")

    def test_json_lines(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text(
            json.dumps({"id": "a", "tokens": ["貓", "狗"]}, ensure_ascii=False) + "\n"
            + json.dumps({"id": "b", "tokens": ["魚"]}, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        c = ingest_corpus(p, "token-json-lines")
        assert [t.source_id for t in c] == ["a", "b"]
        assert c.texts[0].tokens == ("貓", "狗")

    @pytest.mark.parametrize(
        "bad",
        ["not json", '{"id": "x"}', '{"id": "x", "tokens": "貓"}', '{"id": 3, "tokens": []}', "[1, 2]"],
    )
    def test_malformed_json_names_line(self, tmp_path, bad):
        p = tmp_path / "c.jsonl"
        p.write_text('{"id": "ok", "tokens": ["貓"]}\n' + bad + "\n", encoding="utf-8")
        with pytest.raises(CorpusError, match=":2:"):
            ingest_corpus(p, "token-json-lines")

    def test_invalid_utf8_names_line(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_bytes("貓\n".encode() + b"\xff\xfe\n")
        with pytest.raises(CorpusError, match=":2:"):
            ingest_corpus(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            ingest_corpus(tmp_path / "nope.txt")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(CorpusError):
            ingest_corpus(tmp_path / "x", "csv")

    def test_write_roundtrip(self, tmp_path):
        c = Corpus.from_token_lists([["貓", "狗"], ["魚"]])
        write_corpus(c, tmp_path / "c.jsonl")
        back = ingest_corpus(tmp_path / "c.jsonl", "token-json-lines")
        assert back.texts == c.texts


def corpus_of(*texts):
    return Corpus.from_token_lists(texts)


class TestVocabulary:
    def test_strict_threshold(self):
        c = corpus_of(["貓"] * 4, ["狗"] * 3)
        v = build_vocabulary(c, 3)
        assert v.words == ("貓",)
        assert v.min_count == 3

    def test_min_count_zero_keeps_everything(self):
        c = corpus_of(["a", "b"], ["c"])
        assert set(build_vocabulary(c, 0).words) == {"a", "b", "c"}

    def test_token_level_counts(self):
        v = build_vocabulary(corpus_of(["貓", "貓"]), 0)
        assert v.count("貓") == 2

    def test_empty_vocabulary(self):
        with pytest.raises(CorpusError, match="empty vocabulary"):
            build_vocabulary(corpus_of(["a"]), 3)

    def test_ids_dense_and_bijective(self):
        v = build_vocabulary(corpus_of(list("abcabcaab")), 0)
        assert [v[w] for w in v.words] == list(range(len(v)))
        assert v.words == ("a", "b", "c")

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.lists(st.sampled_from(list("abcdefgh")), min_size=1, max_size=30), min_size=1, max_size=40),
        st.integers(0, 4),
    )
    def test_counts_match_tally(self, texts, min_count):
        tally = token_tally(texts)
        expected = {w: c for w, c in tally.items() if c > min_count}
        if not expected:
            with pytest.raises(CorpusError):
                build_vocabulary(corpus_of(*texts), min_count)
            return
        v = build_vocabulary(corpus_of(*texts), min_count)
        assert dict(zip(v.words, v.counts)) == expected

    def test_tally_large_corpus(self):
        rng = np.random.default_rng(3)
        words = [chr(0x4E00 + i) for i in range(300)]
        texts = [[str(w) for w in rng.choice(words, size=rng.integers(1, 40))] for _ in range(500)]
        assert sum(map(len, texts)) <= 10_000
        v = build_vocabulary(corpus_of(*texts), 0)
        assert dict(zip(v.words, v.counts)) == dict(token_tally(texts))

    def test_rejects_invalid_construction(self):
        with pytest.raises(ValueError):
            Vocabulary(("a", "a"), (5, 5))
        with pytest.raises(ValueError):
            Vocabulary(("a",), (2,), min_count=3)

    def test_tsv_roundtrip(self, tmp_path):
        v = build_vocabulary(corpus_of(list("aabbbc")), 0)
        save_vocabulary(v, tmp_path / "v.tsv")
        text = (tmp_path / "v.tsv").read_text(encoding="utf-8")
        assert text.splitlines()[0] == "word\tid\tcount"
        assert text.splitlines()[1] == "b\t0\t3"
        back = load_vocabulary(tmp_path / "v.tsv")
        assert back.words == v.words and back.counts == v.counts

    def test_tsv_bad_row(self, tmp_path):
        (tmp_path / "v.tsv").write_text("word\tid\tcount\na\t0\t3\nb\t5\t2\n", encoding="utf-8")
        with pytest.raises(CorpusError, match=":3:"):
            load_vocabulary(tmp_path / "v.tsv")


class TestSampleVocabulary:
    @pytest.fixture
    def vocab100(self):
        return Vocabulary(tuple(f"w{i}" for i in range(100)), tuple(range(200, 100, -1)))

    def test_full_fraction(self, vocab100):
        assert sample_vocabulary(vocab100, 1.0, 0).words == vocab100.words

    def test_one_tenth(self, vocab100):
        s = sample_vocabulary(vocab100, 0.1, 0)
        assert len(s) == 10
        assert [s[w] for w in s.words] == list(range(10))
        assert all(s.count(w) == vocab100.count(w) for w in s.words)

    def test_deterministic(self, vocab100):
        assert sample_vocabulary(vocab100, 0.3, 42).words == sample_vocabulary(vocab100, 0.3, 42).words
        assert sample_vocabulary(vocab100, 0.3, 42).words != sample_vocabulary(vocab100, 0.3, 43).words

    def test_fraction_too_small(self, vocab100):
        with pytest.raises(ValueError):
            sample_vocabulary(vocab100, 0.001, 0)
        with pytest.raises(ValueError):
            sample_vocabulary(vocab100, 0.0, 0)

    def test_inclusion_frequency_binomial(self):
        v = Vocabulary(tuple(f"w{i}" for i in range(50)), (10,) * 50)
        fraction, seeds = 0.2, 1000
        hits = np.zeros(50)
        for seed in range(seeds):
            for w in sample_vocabulary(v, fraction, seed).words:
                hits[v[w]] += 1
        freq = hits / seeds
        sigma = np.sqrt(fraction * (1 - fraction) / seeds)
        assert np.all(np.abs(freq - fraction) <= 3 * sigma)

from __future__ import annotations

import pytest

from logcause.errors import DataError
from logcause.tokenizer import (
    ADDR,
    CLS,
    HEX,
    IP,
    NUM,
    RESERVED,
    UNK,
    TokenizerConfig,
    Vocabulary,
    build_vocab,
    decode,
    encode,
    tokenize,
)

CFG = TokenizerConfig()


def test_worked_example():
    seq = tokenize("Network ip: 192.168.0.1 weak connection", CFG)
    assert list(seq.tokens) == [CLS, "Network", "ip", IP, "weak", "connection"]


def test_single_token_no_replacement():
    assert list(tokenize("ok", CFG).tokens) == [CLS, "ok"]


def test_mixed_replacements_respect_threshold():
    seq = tokenize("retry 42 of 7 at 0xFF3A", CFG)
    assert list(seq.tokens) == [CLS, "retry", NUM, "of", "7", "at", HEX]


def test_separator_runs_collapse():
    seq = tokenize("a,,b::c  d,: e", CFG)
    assert list(seq.tokens) == [CLS, "a", "b", "c", "d", "e"]


def test_whitespace_only_content_yields_cls_only():
    assert list(tokenize(",,,:  ", CFG).tokens) == [CLS]


def test_replacement_priority_rules():
    # bare digit runs are NUM even with >= 4 digits: HEX needs a letter
    assert list(tokenize("1234", CFG).tokens) == [CLS, NUM]
    assert list(tokenize("deadbeef", CFG).tokens) == [CLS, HEX]
    assert list(tokenize("0x10", CFG).tokens) == [CLS, HEX]
    assert list(tokenize("@handler_3.run", CFG).tokens) == [CLS, ADDR]
    # out-of-range octet is not an IP; falls through untouched
    assert list(tokenize("300.1.1.1", CFG).tokens) == [CLS, "300.1.1.1"]


def test_placeholder_fuzz(rng):
    for _ in range(2000):
        octets = rng.integers(0, 256, size=4)
        ip = ".".join(str(int(o)) for o in octets)
        assert tokenize(ip, CFG).tokens[1] == IP

        value = int(rng.integers(10, 10**9))
        assert tokenize(str(value), CFG).tokens[1] == NUM

        small = int(rng.integers(0, 10))
        assert tokenize(str(small), CFG).tokens[1] == str(small)

        hex_token = f"0x{int(rng.integers(0, 2**32)):x}"
        assert tokenize(hex_token, CFG).tokens[1] == HEX


def test_idempotence_on_placeholder_free_content():
    for content in ("alpha beta gamma", "one: two, three four", "x y"):
        once = tokenize(content, CFG).tokens
        again = tokenize(" ".join(once[1:]), CFG).tokens
        assert once == again


def test_uniqueness_never_increases(rng):
    raw = []
    for i in range(500):
        raw.append(f"request {int(rng.integers(10, 10**6))} from "
                   f"{int(rng.integers(1, 255))}.{int(rng.integers(0, 255))}.0.{int(rng.integers(1, 255))}")
    unique_raw = len(set(raw))
    unique_abstract = len({tokenize(c, CFG).tokens for c in raw})
    assert unique_abstract <= unique_raw
    assert unique_abstract == 1  # every line collapses to the same template


def test_build_vocab_frequency_then_lexicographic():
    seqs = [tokenize("a a b", CFG)]
    vocab = build_vocab(seqs, min_count=1)
    assert vocab.tokens[: len(RESERVED)] == RESERVED
    assert vocab.tokens[len(RESERVED):] == ("a", "b")

    tie = build_vocab([tokenize("b a", CFG)], min_count=1)
    assert tie.tokens[len(RESERVED):] == ("a", "b")


def test_build_vocab_min_count_excludes():
    vocab = build_vocab([tokenize("a", CFG)], min_count=2)
    assert vocab.tokens == RESERVED
    ids = encode(tokenize("a", CFG), vocab, CFG)
    assert vocab.token_of(int(ids[1])) == UNK


def test_encode_pads_and_truncates():
    vocab = build_vocab([tokenize("t1 t2 t3", CFG)], min_count=1)
    cfg5 = TokenizerConfig(max_len=5)
    ids = encode(tokenize("t1 t2 t3", cfg5), vocab, cfg5)
    assert ids.shape == (5,)
    assert int(ids[4]) == vocab.pad_id == 0

    long_content = " ".join(f"t{i}" for i in range(30))
    vocab_long = build_vocab([tokenize(long_content, CFG)], min_count=1)
    cfg24 = TokenizerConfig(max_len=24)
    ids = encode(tokenize(long_content, cfg24), vocab_long, cfg24)
    assert ids.shape == (24,)
    assert vocab_long.token_of(int(ids[0])) == CLS
    assert all(int(i) != vocab_long.pad_id for i in ids)


def test_encode_decode_round_trip():
    vocab = build_vocab([tokenize("alpha beta 42", CFG)], min_count=1)
    seq = tokenize("alpha beta 42", CFG)
    ids = encode(seq, vocab, CFG)
    assert decode(ids, vocab) == list(seq.tokens)


def test_vocab_persistence_round_trip(tmp_path):
    vocab = build_vocab([tokenize("x y z y", CFG)], min_count=1)
    path = tmp_path / "vocab.json"
    vocab.save(path)
    loaded = Vocabulary.load(path)
    assert loaded.tokens == vocab.tokens
    assert loaded.id_of("y") == vocab.id_of("y")


def test_vocab_rejects_bad_version(tmp_path):
    path = tmp_path / "vocab.json"
    path.write_text('{"version": 99, "tokens": []}')
    with pytest.raises(DataError):
        Vocabulary.load(path)


def test_max_len_floor():
    with pytest.raises(DataError):
        TokenizerConfig(max_len=1)

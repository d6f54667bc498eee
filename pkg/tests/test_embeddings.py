import numpy as np
import pytest

from ian.embeddings import (
    PAD_INDEX,
    PAD_TOKEN,
    Vocabulary,
    load_pretrained,
    lookup,
    random_embeddings,
)
from ian.numerics import Rng


def test_pad_is_index_zero():
    vocab = Vocabulary(["food", "great"])
    assert vocab.tokens[0] == PAD_TOKEN
    assert vocab.index(PAD_TOKEN) == PAD_INDEX
    assert vocab.index("food") == 1
    assert vocab.index("great") == 2


def test_add_is_idempotent():
    vocab = Vocabulary()
    a = vocab.add("service")
    b = vocab.add("service")
    assert a == b
    assert len(vocab) == 2  # pad + service


def test_from_token_lists_first_appearance_order():
    vocab = Vocabulary.from_token_lists([["b", "a"], ["a", "c"]])
    assert vocab.tokens == [PAD_TOKEN, "b", "a", "c"]


def test_encode_round_trip():
    vocab = Vocabulary(["the", "fish", "is", "fresh"])
    idx = vocab.encode(["the", "fish", "is", "fresh", "fish"])
    assert idx.tolist() == [1, 2, 3, 4, 2]
    assert [vocab.tokens[i] for i in idx] == ["the", "fish", "is", "fresh", "fish"]


def test_encode_unknown_token():
    vocab = Vocabulary(["the"])
    with pytest.raises(KeyError):
        vocab.encode(["the", "zebra"])
    assert vocab.encode(["the", "zebra"], drop_unknown=True).tolist() == [1]


def test_random_embeddings_pad_row_zero_and_range():
    vocab = Vocabulary(["a", "b", "c"])
    table = random_embeddings(Rng(5), vocab, 6)
    assert table.shape == (4, 6)
    assert np.array_equal(table[PAD_INDEX], np.zeros(6))
    body = table[1:]
    assert np.all(body >= -0.1) and np.all(body < 0.1)
    assert not np.array_equal(body, np.zeros_like(body))


def test_random_embeddings_deterministic():
    vocab = Vocabulary(["a", "b"])
    t1 = random_embeddings(Rng(3), vocab, 4)
    t2 = random_embeddings(Rng(3), vocab, 4)
    assert np.array_equal(t1, t2)


def test_lookup_stacks_rows():
    vocab = Vocabulary(["x", "y"])
    table = np.arange(9.0).reshape(3, 3)
    got = lookup(table, vocab.encode(["y", "x", "y"]))
    assert np.array_equal(got, table[[2, 1, 2]])


def test_load_pretrained_hits_and_misses(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text(
        "food 1.0 2.0 3.0\n"
        "unrelated 9.0 9.0 9.0\n"
        "great 0.5 -0.5 0.25\n"
    )
    vocab = Vocabulary(["food", "great", "zebra"])
    table, hits, misses = load_pretrained(str(path), vocab, 3, Rng(1))
    assert (hits, misses) == (2, 1)
    assert np.array_equal(table[vocab.index("food")], [1.0, 2.0, 3.0])
    assert np.array_equal(table[vocab.index("great")], [0.5, -0.5, 0.25])
    zrow = table[vocab.index("zebra")]
    assert np.all(zrow >= -0.1) and np.all(zrow < 0.1) and np.any(zrow != 0)
    assert np.array_equal(table[PAD_INDEX], np.zeros(3))


def test_load_pretrained_miss_rows_deterministic(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("a 1.0 1.0\n")
    vocab = Vocabulary(["a", "m1", "m2"])
    t1, _, _ = load_pretrained(str(path), vocab, 2, Rng(7))
    t2, _, _ = load_pretrained(str(path), vocab, 2, Rng(7))
    assert np.array_equal(t1, t2)


def test_load_pretrained_dim_mismatch(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("a 1.0 2.0\n")
    vocab = Vocabulary(["a"])
    with pytest.raises(ValueError):
        load_pretrained(str(path), vocab, 3, Rng(1))

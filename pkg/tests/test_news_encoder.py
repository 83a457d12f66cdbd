import numpy as np
import pytest

from dcan.data.mind import PAD_ID, Vocabulary
from dcan.news_encoder import NewsEncoder, load_pretrained_embeddings, sinusoidal_positions
from dcan.numerics import precision


@pytest.fixture
def encoder():
    enc = NewsEncoder(vocab_size=40, word_dim=200, d=128, n_heads=8, rng=np.random.default_rng(0))
    enc.eval()
    return enc


def titles(rng, n=6, length=8):
    t = rng.integers(2, 40, size=(n, length))
    for i in range(n):
        t[i, rng.integers(2, length) :] = PAD_ID
    return t


class TestEmbedTokens:
    def test_pad_only_title_is_zero(self, encoder):
        assert not encoder.embed_tokens(np.zeros(5, dtype=int)).data.any()

    def test_same_token_same_row(self, encoder):
        e = encoder.embed_tokens(np.array([7, 3, 7])).data
        np.testing.assert_array_equal(e[0], e[2])

    def test_width(self, encoder):
        assert encoder.embed_tokens(np.array([2, 3])).shape == (2, 200)

    def test_out_of_range(self, encoder):
        with pytest.raises(IndexError):
            encoder.embed_tokens(np.array([2, 40]))


class TestEncode:
    def test_shape(self, encoder):
        out = encoder(titles(np.random.default_rng(0)))
        assert out.shape == (6, 128)

    def test_identical_titles(self, encoder):
        t = np.array([[5, 6, 7, 0], [5, 6, 7, 0]])
        out = encoder(t).data
        np.testing.assert_array_equal(out[0], out[1])

    def test_permutation_changes_output(self, encoder):
        a = encoder.encode_news([5, 6, 7, 8]).data
        b = encoder.encode_news([6, 5, 7, 8]).data
        assert not np.array_equal(a, b)

    def test_pad_embedding_irrelevant(self, encoder):
        t = np.array([[5, 6, 7, 0, 0]])
        before = encoder(t).data
        encoder.word_embedding.data[PAD_ID] = 50.0
        after = encoder(t).data
        np.testing.assert_allclose(before, after, atol=1e-5)

    def test_catalog_rows_match_standalone(self, encoder):
        t = titles(np.random.default_rng(1), n=5)
        cat = encoder.encode_catalog(t).data
        for k in range(5):
            np.testing.assert_allclose(cat[k], encoder.encode_news(t[k]).data, atol=1e-5)

    def test_batch_order_invariant(self, encoder):
        t = titles(np.random.default_rng(2))
        a = encoder(t).data
        b = encoder(t[::-1]).data[::-1]
        np.testing.assert_allclose(a, b, atol=1e-5)

    def test_chunked_catalog(self, encoder):
        t = titles(np.random.default_rng(3), n=9)
        np.testing.assert_allclose(encoder.encode_catalog(t, chunk=4).data, encoder(t).data, atol=1e-5)

    def test_all_pad_title_rejected(self, encoder):
        with pytest.raises(ValueError):
            encoder(np.array([[0, 0, 0]]))

    def test_trailing_padding_width_irrelevant(self, encoder):
        a = encoder(np.array([[5, 6, 7]])).data
        b = encoder(np.array([[5, 6, 7, 0, 0, 0]])).data
        np.testing.assert_allclose(a, b, atol=1e-5)


def test_sinusoidal_positions():
    p = sinusoidal_positions(4, 6)
    with precision(np.float64):
        p64 = sinusoidal_positions(4, 6)
    assert p.shape == (4, 6)
    np.testing.assert_allclose(p64[0], [0, 1, 0, 1, 0, 1])
    assert p64[3, 0] == pytest.approx(np.sin(3.0))
    assert p64[2, 3] == pytest.approx(np.cos(2.0 / 10000 ** (2 / 6)))


def test_pretrained_loader(tmp_path):
    vocab = Vocabulary(["[PAD]", "[UNK]", "apple", "pear"])
    table = np.zeros((4, 3), dtype=np.float32)
    path = tmp_path / "vec.txt"
    path.write_text("apple 1 2 3\nplum 4 5 6\npear 7 8\n[PAD] 9 9 9\n", encoding="utf-8")
    assert load_pretrained_embeddings(path, vocab, table) == 1
    np.testing.assert_array_equal(table[2], [1, 2, 3])
    assert not table[3].any() and not table[0].any()

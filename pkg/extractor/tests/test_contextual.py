import numpy as np
import pytest

from ckgx.contextual import ContextualEncoder
from ckgx.errors import ExtractorError


def test_shape_and_finiteness(tiny_bert):
    enc = ContextualEncoder(tiny_bert)
    out = enc.encode(["red apple", "blue car", "sky"])
    assert out.shape == (3, 8) and out.dtype == np.float32
    assert np.all(np.isfinite(out))


def test_identical_texts_identical_rows(tiny_bert):
    enc = ContextualEncoder(tiny_bert)
    out = enc.encode(["red apple", "blue car", "red apple", "red apple"])
    assert np.array_equal(out[0], out[2])
    assert np.array_equal(out[0], out[3])
    assert not np.array_equal(out[0], out[1])


def test_row_order_follows_input_not_processing(tiny_bert):
    enc = ContextualEncoder(tiny_bert, batch_size=2)
    texts = ["sky", "red apple", "blue car"]
    out = enc.encode(texts)
    flipped = enc.encode(texts[::-1])
    assert np.allclose(out, flipped[::-1], atol=1e-6)


def test_batch_size_does_not_change_rows(tiny_bert):
    one = ContextualEncoder(tiny_bert, batch_size=1)
    big = ContextualEncoder(tiny_bert, batch_size=16)
    texts = ["red apple", "blue car", "sky", "red car sky"]
    assert np.allclose(one.encode(texts), big.encode(texts), atol=1e-6)


def test_rerun_is_deterministic(tiny_bert):
    a = ContextualEncoder(tiny_bert).encode(["red apple", "sky"])
    b = ContextualEncoder(tiny_bert).encode(["red apple", "sky"])
    assert np.array_equal(a, b)


def test_unknown_words_still_embed(tiny_bert):
    # "zebra" falls to [UNK] wordpieces; the mean is over real tokens
    enc = ContextualEncoder(tiny_bert)
    out = enc.encode(["zebra zebra"])
    assert np.all(np.isfinite(out))


def test_unresolvable_model_is_diagnosed(tmp_path):
    with pytest.raises(ExtractorError, match="cannot load contextual model"):
        ContextualEncoder(str(tmp_path / "missing-model"))


def test_bad_batch_size(tiny_bert):
    with pytest.raises(ExtractorError, match="batch size"):
        ContextualEncoder(tiny_bert, batch_size=0)

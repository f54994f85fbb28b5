import os
import sys

sys.path.insert(1, os.path.join(sys.path[0], ".."))

import pytest
import torch

from heed.config import SceneConfig
from heed.corpus.vocabulary import Vocabulary
from heed.corpus.vocabulary import tokenize
from heed.exceptions import EmptySentenceError
from heed.exceptions import MalformedOneHotError
from heed.models.text_encoder import TextEncoder
from heed.models.text_encoder import pad_sentences
from heed.sim.catalog import Catalog
from tests.finite_differences import check_parameter_gradients

VOCABULARY = Vocabulary.from_catalog(Catalog.from_config(SceneConfig()))


def _encoder(cell="lstm", max_len=12):
    torch.manual_seed(0)
    return TextEncoder(VOCABULARY.size, d_x=8, d_h=16, max_len=max_len, cell=cell)


def test_encoding_shape():
    sentences = [tokenize("pick up the red bowl"), tokenize("grab the box")]
    onehots, lengths = pad_sentences(sentences, VOCABULARY)
    assert onehots.shape == (2, 5, VOCABULARY.size)
    assert lengths.tolist() == [5, 3]
    assert _encoder()(onehots, lengths).shape == (2, 16)


def test_padding_does_not_change_the_encoding():
    encoder = _encoder()
    short = tokenize("grab the box")
    onehots, lengths = pad_sentences([tokenize("push the red plate to the left"), short], VOCABULARY)
    batched = encoder(onehots, lengths)[1]
    alone = encoder.encode_sentence(torch.from_numpy(VOCABULARY.one_hots(short)))
    assert torch.allclose(batched, alone, atol=1e-6)


def test_gru_cell():
    encoder = _encoder(cell="gru")
    onehots, lengths = pad_sentences([tokenize("lift the black ring")], VOCABULARY)
    assert encoder(onehots, lengths).shape == (1, 16)


def test_word_order_matters():
    encoder = _encoder()
    a = encoder.encode_sentence(torch.from_numpy(VOCABULARY.one_hots(tokenize("red bowl"))))
    b = encoder.encode_sentence(torch.from_numpy(VOCABULARY.one_hots(tokenize("bowl red"))))
    assert not torch.allclose(a, b)


def test_embedding_is_a_row_lookup():
    encoder = _encoder()
    onehot = torch.zeros(VOCABULARY.size)
    onehot[3] = 1.0
    assert torch.equal(encoder.embed(onehot), encoder.W_omega[3])


def test_malformed_onehot():
    encoder = _encoder()
    onehots, lengths = pad_sentences([tokenize("grab the box")], VOCABULARY)
    onehots[0, 1, 0] = 1.0
    with pytest.raises(MalformedOneHotError) as err:
        encoder(onehots, lengths)
    assert err.value.bits_set == 2
    with pytest.raises(MalformedOneHotError):
        encoder.embed(torch.zeros(VOCABULARY.size))


def test_empty_sentence():
    encoder = _encoder()
    with pytest.raises(EmptySentenceError):
        encoder.encode_sentence(torch.zeros(0, VOCABULARY.size))
    with pytest.raises(EmptySentenceError):
        pad_sentences([()], VOCABULARY)


def test_long_sentences_are_truncated():
    encoder = _encoder(max_len=3)
    tokens = tokenize("push the red plate to the left")
    full = encoder.encode_sentence(torch.from_numpy(VOCABULARY.one_hots(tokens)))
    head = encoder.encode_sentence(torch.from_numpy(VOCABULARY.one_hots(tokens[:3])))
    assert torch.allclose(full, head)


def test_one_token_matches_a_hand_cell_step():
    encoder = _encoder().double()
    index = VOCABULARY.index("bowl")
    onehot = torch.zeros(1, VOCABULARY.size, dtype=torch.float64)
    onehot[0, index] = 1.0
    with torch.no_grad():
        encoding = encoder.encode_sentence(onehot)
        x = encoder.W_omega[index]
        gates = encoder.cell.weight_ih_l0 @ x + encoder.cell.bias_ih_l0 + encoder.cell.bias_hh_l0
        i, _, g, o = gates.chunk(4)
        c = torch.sigmoid(i) * torch.tanh(g)
        h = torch.sigmoid(o) * torch.tanh(c)
    assert torch.allclose(encoding, h, rtol=0, atol=1e-10)


def test_parameter_gradients():
    sentences = [tokenize("push the red plate to the left"), tokenize("grab the box")]
    onehots, lengths = pad_sentences(sentences, VOCABULARY)
    for cell in ("lstm", "gru"):
        encoder = _encoder(cell=cell).double()
        weights = torch.randn(16, dtype=torch.float64)

        def loss():
            return (encoder(onehots, lengths) * weights).sum()

        assert check_parameter_gradients(encoder, loss) > 0


if __name__ == "__main__":  # pragma: no cover
    from tests import run_tests

    run_tests()

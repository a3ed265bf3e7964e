import numpy as np
import pytest

from lpis.codes import LinearCode, bundled_code, codebook
from lpis.decoders import (
    MLDecoder,
    SumProductDecoder,
    channel_llr,
    coordinate_metric_gap,
    mld_decode,
    sum_product_decode,
)
from lpis.ggd_channel import GgdParams, ggd_sample
from lpis.rng import make_rng


@pytest.mark.parametrize("p", [1.0, 1.6, 2.0])
def test_metric_gap_matches_definition(p):
    y = np.linspace(-3, 3, 61)
    want = np.abs(y - 1) ** p - np.abs(y + 1) ** p
    assert np.allclose(coordinate_metric_gap(y, p), want, atol=1e-12)


def test_llr_sign():
    params = GgdParams(1.0, 0.8)
    # y near -1 is bit 0 under 0 -> -1 mapping
    assert channel_llr(np.array([-1.0]), params)[0] > 0
    assert channel_llr(np.array([0.9]), params)[0] < 0


@pytest.mark.parametrize("p", [1.0, 2.0, 1.6])
def test_batch_ml_agrees_with_exhaustive(p):
    code = bundled_code("bch_15_7")
    params = GgdParams(p, 0.9, code.n)
    rng = make_rng(5)
    y = -1.0 + ggd_sample(params, rng, size=(400, code.n))
    batch = MLDecoder(code).block_errors(y, params, make_rng(0))
    single = np.array([mld_decode(row, code, p).is_block_error for row in y])
    assert batch.sum() > 10
    assert np.array_equal(batch, single)


def test_ml_ties_split_evenly():
    # y = 0 ties every codeword: error probability 1 - 2^-k
    code = LinearCode(np.array([[1, 1, 0], [0, 1, 1]]))
    params = GgdParams(1.0, 1.0, 3)
    err = MLDecoder(code).block_errors(np.zeros((40_000, 3)), params, make_rng(1))
    assert err.mean() == pytest.approx(0.75, abs=0.01)
    # a single tie between the sent word and one other word
    code1 = LinearCode(np.array([[1, 1]]))
    err1 = MLDecoder(code1).block_errors(np.zeros((40_000, 2)), GgdParams(1.0, 1.0, 2), make_rng(2))
    assert err1.mean() == pytest.approx(0.5, abs=0.01)
    assert mld_decode(np.zeros(3), code, 1.0, rng=make_rng(0)).tie_flag


def test_sum_product_decodes_clean_and_noisy_words():
    code = bundled_code("eg_ldpc_15_7")
    params = GgdParams(2.0, 0.5, code.n)
    dec = SumProductDecoder(code)
    clean = -np.ones((3, code.n))
    assert not dec.block_errors(clean, params).any()
    # one strongly flipped bit gets corrected
    y = -np.ones(code.n)
    y[4] = 0.6
    out = sum_product_decode(y, code, params)
    assert not out.is_block_error and out.iterations >= 1
    assert np.array_equal(out.decoded_word, np.zeros(code.n))


def test_sum_product_close_to_ml_on_small_code():
    code = bundled_code("eg_ldpc_15_7")
    params = GgdParams(2.0, 0.6, code.n)
    y = -1.0 + ggd_sample(params, make_rng(9), size=(3000, code.n))
    ml = MLDecoder(code).block_errors(y, params, make_rng(0)).mean()
    bp = SumProductDecoder(code).block_errors(y, params).mean()
    # BP is suboptimal but in the same ballpark on this 4-cycle-free code
    assert ml <= bp + 0.01
    assert bp < 3 * ml + 0.01


def test_sum_product_needs_parity_check():
    code = LinearCode(codebook(bundled_code("bch_15_7"))[[1, 2, 4, 8, 16, 32, 64]])
    with pytest.raises(ValueError):
        SumProductDecoder(code)

import math

import numpy as np
import pytest
from icecream import ic

from pysupplygame import constants, exceptions, utils


def test_list_diff():
    diff = utils.list_diff(['T10-seed0', 'T10-seed1', 'T20-seed0'], ['T20-seed0', 'T10-seed0', 'T30-seed0'])
    assert diff.common == ['T10-seed0', 'T20-seed0']
    assert diff.unique1 == ['T10-seed1']
    assert diff.unique2 == ['T30-seed0']
    assert utils.list_diff({'a': 1}, []).unique1 == ['a']


def test_argmax_first():
    assert utils.argmax_first([0.1, 0.5, 0.5, 0.2]) == 1
    assert utils.argmax_first([0.5, 0.5 + 1e-13, 0.1], atol=1e-12) == 0
    assert utils.argmax_first(np.array([-3.0])) == 0
    with pytest.raises(ValueError):
        utils.argmax_first([])


def test_integer_roots():
    assert [utils.isqrt(n) for n in (0, 1, 99, 100, 101)] == [0, 1, 9, 10, 10]
    assert [utils.ceil_cbrt(n) for n in (1, 8, 9, 27, 28, 1000)] == [1, 2, 3, 3, 4, 10]
    assert utils.ceil_cbrt(10**15) == 10**5
    assert utils.ceil_cbrt(10**15 + 1) == 10**5 + 1


def test_grid_count():
    assert utils.grid_count(0.25) == 4
    assert utils.grid_count(0.3) == 4
    assert utils.grid_count(1.0) == 1
    assert utils.grid_count(1.0 / 3.0) == 3
    assert utils.grid_count(1e5 ** (-1.0 / 3.0)) == 47


def test_finite_differences():
    assert utils.central_difference(math.sin, 0.3) == pytest.approx(math.cos(0.3), abs=1e-8)
    assert utils.second_difference(lambda x: x ** 3, 0.5) == pytest.approx(3.0, abs=1e-3)


def test_substreams():
    first = utils.substream(7, constants.Streams.NATURE).random(5)
    again = utils.substream(7, constants.Streams.NATURE).random(5)
    other_stream = utils.substream(7, constants.Streams.RETAILER).random(5)
    other_seed = utils.substream(8, constants.Streams.NATURE).random(5)
    ic(first, other_stream)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, other_stream)
    assert not np.array_equal(first, other_seed)
    with pytest.raises(exceptions.ConfigurationError):
        utils.substream(7, 'weather')
    with pytest.raises(exceptions.ConfigurationError):
        utils.substream(7, 'supplier')
    assert sorted(constants.STREAM_IDS) == sorted(constants.Streams)
    assert len(set(constants.STREAM_IDS.values())) == len(constants.STREAM_IDS)


def test_serialization_helpers():
    assert float(utils.format_float(0.1)) == 0.1
    assert utils.format_float(1 / 3) == '0.33333333333333331'
    assert utils.canonical_json({'b': 1, 'a': [1, 2]}) == '{"a":[1,2],"b":1}'
    assert utils.content_hash({'b': 1, 'a': 2}) == utils.content_hash({'a': 2, 'b': 1})
    assert utils.content_hash({}) != utils.content_hash([])
    assert len(utils.content_hash({'mode': 'simulate'})) == 40

import math

import numpy as np
import pytest
from icecream import ic

from pysupplygame import constants, exceptions, utils
from pysupplygame.distributions import CustomDistribution, UniformDemand, WeibullDemand
from pysupplygame.learners import (
    ConstantSupplier, EtcNoCostSupplier, EtcSupplier, ExactBestResponseRetailer, FtlRetailer, PiyavskiiSupplier,
    build_retailer, build_supplier, default_lipschitz,
)
from pysupplygame.models import PolicySpec
from pysupplygame.repeated_game import run_episode
from pysupplygame.stage_game import StageGame

uniform = UniformDemand(c=0.2, p=0.8)
game = StageGame(uniform)


def test_protocol_order():
    supplier = ConstantSupplier(2, 0.5)
    with pytest.raises(exceptions.ProtocolViolationError):
        supplier.observe(1, 0.3, 0.2)
    assert supplier.act(1) == 0.5
    with pytest.raises(exceptions.ProtocolViolationError):
        supplier.act(2)
    supplier.observe(1, 0.3, 0.2)
    supplier.act(2)
    supplier.observe(2, 0.3, 0.2)
    with pytest.raises(exceptions.ProtocolViolationError):
        supplier.act(3)
    with pytest.raises(exceptions.PreconditionError):
        ConstantSupplier(0, 0.5)


def test_etc_commits_to_best_grid_price():
    supplier = EtcSupplier(81, uniform.expected_cost())
    assert supplier.grid_size == 9
    trajectory = run_episode(uniform, supplier, ExactBestResponseRetailer(81, game), 81, seed=0)
    assert np.allclose(trajectory.w[:9], np.arange(1, 10) / 10)
    assert supplier.phase == 'commit'
    assert supplier.committed_w == pytest.approx(0.5)
    assert np.all(trajectory.w[9:] == supplier.committed_w)


def test_piyavskii_first_steps():
    supplier = PiyavskiiSupplier(10, 0.2, 2.0)
    assert supplier.act(1) == 1.0
    supplier.observe(1, 0.0, 0.2)
    assert supplier.act(2) == 0.0
    supplier.observe(2, 1.0, 0.2)
    # envelope crossing of (0, -0.2) and (1, 0) with slope 2
    assert supplier.act(3) == pytest.approx(0.55)
    assert np.allclose(supplier.proxy([0.0, 1.0]), [-0.2, 0.0])
    with pytest.raises(exceptions.PreconditionError):
        PiyavskiiSupplier(10, 0.2, 0.0)


def test_etc_nocost_schedule():
    with pytest.raises(exceptions.PreconditionError):
        EtcNoCostSupplier(11)
    supplier = EtcNoCostSupplier(100)
    assert supplier.grid_size == 5
    assert supplier.exploration_rounds == 30
    trajectory = run_episode(uniform, supplier, ExactBestResponseRetailer(100, game), 100, seed=4)
    assert supplier.estimated_cost == pytest.approx(0.2)
    assert supplier.committed_w == pytest.approx(0.5)
    assert not supplier.flagged
    assert np.allclose(trajectory.w[:5], np.arange(1, 6) / 6)
    assert np.all(trajectory.w[30:] == supplier.committed_w)


def test_exact_retailer_needs_closed_forms():
    custom = CustomDistribution(sampler=lambda rng, n: (np.zeros(n), np.ones(n), rng.random(n)), samples=1000)
    with pytest.raises(exceptions.ConfigurationError):
        ExactBestResponseRetailer(10, StageGame(custom))


def test_ftl_grid_and_choices():
    with pytest.raises(exceptions.PreconditionError):
        FtlRetailer(11, utils.substream(0, constants.Streams.RETAILER))
    retailer = FtlRetailer(27, utils.substream(0, constants.Streams.RETAILER))
    assert np.allclose(retailer.grid, [0.25, 0.5, 0.75, 1.0])
    assert retailer.act(1, 0.5) in retailer.grid
    retailer.observe(1, 0.8, 0.6)
    # one observation d = 0.6: 0.8 min(q, 0.6) - 0.5 q peaks at q = 0.5 on the grid
    assert retailer.act(2, 0.5) == 0.5
    assert retailer.empirical_utility(0.5, 0.5) == pytest.approx(0.8 * 0.5 - 0.25)


def test_ftl_estimator_is_unbiased():
    n = 20_000
    retailer = FtlRetailer(n, utils.substream(11, constants.Streams.RETAILER))
    _, p, d = uniform.sample_batch(utils.substream(11, constants.Streams.NATURE), n)
    for t in range(1, n + 1):
        retailer.act(t, 0.5)
        retailer.observe(t, p[t - 1], d[t - 1])
    w, q = 0.5, 0.4
    values = np.minimum(q, d) * p - q * w
    se = values.std(ddof=1) / math.sqrt(n)
    estimate = retailer.empirical_utility(w, q)
    exact = game.retailer_utility(w, q)
    ic(estimate, exact, se)
    assert abs(estimate - exact) <= 3.0 * se


def test_build_policies():
    assert default_lipschitz(uniform) == pytest.approx(2.0)
    with pytest.raises(exceptions.ConfigurationError):
        default_lipschitz(WeibullDemand(c=0.0, p=1.0))
    assert isinstance(build_supplier(PolicySpec('etc'), 100, uniform), EtcSupplier)
    piyavskii = build_supplier(PolicySpec('piyavskii'), 100, uniform)
    assert piyavskii.lipschitz == pytest.approx(2.0)
    assert build_supplier(PolicySpec('piyavskii', {'lipschitz': 5.0}), 100, uniform).lipschitz == 5.0
    assert build_supplier(PolicySpec('constant', {'price': 0.4}), 10, uniform).act(1) == 0.4
    with pytest.raises(exceptions.ConfigurationError) as error:
        build_supplier(PolicySpec('constant'), 10, uniform)
    assert error.value.field == 'supplier.params.price'
    with pytest.raises(exceptions.ConfigurationError) as error:
        build_supplier(PolicySpec('etc', {'rate': 1.0}), 10, uniform)
    assert error.value.field == 'supplier.params.rate'
    retailer = build_retailer(PolicySpec('ftl'), 100, game, utils.substream(0, constants.Streams.RETAILER))
    assert isinstance(retailer, FtlRetailer)
    assert isinstance(build_retailer(PolicySpec('exact'), 100, game, None), ExactBestResponseRetailer)
    with pytest.raises(exceptions.ConfigurationError):
        build_retailer(PolicySpec('greedy'), 100, game, None)


def explore(supplier, quantities, costs):
    for t, (q, c) in enumerate(zip(quantities, costs), start=1):
        supplier.act(t)
        supplier.observe(t, q, c)


def test_etc_worked_example():
    supplier = EtcSupplier(16, 0.2)
    assert np.allclose(supplier.grid, [0.2, 0.4, 0.6, 0.8])
    explore(supplier, [0.9, 0.7, 0.4, 0.1], [0.2] * 4)
    assert supplier.committed_w == pytest.approx(0.6)
    for t in range(5, 17):
        assert supplier.act(t) == supplier.committed_w
        supplier.observe(t, 0.4, 0.2)


def test_etc_ties_toward_smallest_price():
    supplier = EtcSupplier(16, 0.2)
    explore(supplier, [0.0] * 4, [0.2] * 4)
    assert supplier.committed_w == pytest.approx(0.2)


def test_etc_nocost_boundary_horizons():
    smallest = EtcNoCostSupplier(12)
    assert smallest.grid_size == 3
    assert smallest.exploration_rounds == 12
    explore(smallest, [float(game.best_response(smallest.price_at(t))) for t in range(1, 13)], [0.2] * 12)
    assert smallest.estimated_cost == pytest.approx(0.2)
    assert smallest.committed_w == pytest.approx(0.5)
    assert not smallest.flagged

    supplier = EtcNoCostSupplier(1000)
    assert supplier.grid_size == 10
    assert supplier.exploration_rounds == 110
    quantities = [1.0 - supplier.price_at(t) for t in range(1, 111)]
    explore(supplier, quantities, [0.2] * 100 + [0.9] * 10)
    assert supplier.estimated_cost == pytest.approx(0.2)
    # (1 - w) (w - 0.2) peaks at 0.6, nearest grid point 7/11
    assert supplier.committed_w == pytest.approx(7.0 / 11.0)
    assert supplier.act(111) == supplier.committed_w


def test_piyavskii_envelope_bounds_the_objective():
    supplier = PiyavskiiSupplier(30, uniform.expected_cost(), default_lipschitz(uniform))
    grid = np.linspace(0.0, 1.0, 2001)
    truth = game.best_responses(grid) * (grid - uniform.expected_cost())
    for t in range(1, 31):
        w = supplier.act(t)
        supplier.observe(t, game.best_response(w), 0.2)
        assert np.all(supplier.proxy(grid) >= truth - 1e-12)
    assert np.allclose(supplier.proxy(supplier.points), supplier.values)


def test_ftl_worked_example():
    retailer = FtlRetailer(12, utils.substream(0, constants.Streams.RETAILER), grid=[0.25, 0.5, 0.75, 1.0])
    retailer.act(1, 0.3)
    retailer.observe(1, 1.0, 0.5)
    assert np.allclose(retailer.objective(0.3), [0.175, 0.35, 0.275, 0.2])
    assert retailer.act(2, 0.3) == 0.5
    retailer.observe(2, 1.0, 0.5)
    # at w = max P larger orders never help; ties go to the smallest q
    assert retailer.act(3, 1.0) == 0.25

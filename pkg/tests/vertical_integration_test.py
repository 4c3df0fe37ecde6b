import numpy as np
import pytest
from icecream import ic

from pysupplygame import constants, exceptions, utils
from pysupplygame.vertical_integration import (
    Exp3VI, LinearDemand, PiecewiseConstantDemand, ThresholdDemand, best_fixed_action, constant_posted_price,
    discretization_gap, equal_revenue_posted_price, estimated_losses, exponential_weights_slack,
    iid_uniform_posted_price, instance_from_dict, loss, losses_from_feedback, price_grid, read_instance,
    run_adversarial, total_sales, write_instance,
)


def random_mu(rng: np.random.Generator, k: int) -> np.ndarray:
    mu = rng.random((k, k + 1)) + 1e-3
    return mu / mu.sum()


@pytest.mark.parametrize('k', [2, 5, 10])
def test_estimator_is_unbiased(k):
    rng = np.random.default_rng(k)
    mu = random_mu(rng, k)
    losses = rng.random((k, k + 1))
    expected = np.zeros_like(mu)
    for i in range(k):
        for j in range(k + 1):
            expected += mu[i, j] * estimated_losses(mu, losses[i], i, j)
    assert np.max(np.abs(expected - losses)) <= 1e-12


def test_estimator_only_touches_smaller_quantities():
    mu = np.full((3, 4), 1.0 / 12.0)
    estimate = estimated_losses(mu, np.array([0.4, 0.6, 0.8, 1.0]), 1, 1)
    assert np.count_nonzero(estimate) == 2
    assert estimate[1, 0] == pytest.approx(0.4 / (4.0 / 12.0))
    assert estimate[1, 1] == pytest.approx(0.6 / (3.0 / 12.0))


def test_censored_feedback_is_sufficient():
    rng = np.random.default_rng(7)
    prices, quantities = price_grid(0.1)
    for _ in range(1000):
        i = int(rng.integers(len(prices)))
        j = int(rng.integers(len(quantities)))
        cost, demand = rng.random(2)
        feedback = min(quantities[j], demand)
        recovered = losses_from_feedback(prices, quantities, i, j, feedback, cost)
        assert np.allclose(recovered, loss(prices[i], quantities[:j + 1], cost, demand))


def test_exponential_weights_slack():
    rng = np.random.default_rng(11)
    for _ in range(100):
        horizon, k = rng.integers(1, 60), rng.integers(2, 12)
        losses = rng.random((horizon, k))
        eta = float(rng.uniform(0.01, 2.0))
        assert exponential_weights_slack(losses, eta) >= 0.0
    with pytest.raises(exceptions.PreconditionError):
        exponential_weights_slack(-np.ones((3, 2)), 0.5)
    with pytest.raises(exceptions.PreconditionError):
        exponential_weights_slack(np.ones((3, 2)), 0.0)


def test_price_grid():
    prices, quantities = price_grid(0.25)
    assert np.allclose(prices, [0.0, 0.25, 0.5, 0.75])
    assert np.allclose(quantities, [0.0, 0.25, 0.5, 0.75, 1.0])
    prices, _ = price_grid(1e5 ** (-1.0 / 3.0))
    assert len(prices) == 47


def test_demand_curves():
    assert ThresholdDemand(0.7)(0.7) == 1.0
    assert ThresholdDemand(0.7)(0.71) == 0.0
    assert LinearDemand(1.0, 2.0)(0.25) == pytest.approx(0.5)
    assert LinearDemand(1.0, 2.0)(0.9) == 0.0
    step = PiecewiseConstantDemand((0.3, 0.6), (1.0, 0.5, 0.1))
    assert [step(0.3), step(0.5), step(0.9)] == [1.0, 0.5, 0.1]
    with pytest.raises(exceptions.ConfigurationError):
        LinearDemand(1.0, -1.0)
    with pytest.raises(exceptions.ConfigurationError):
        PiecewiseConstantDemand((0.3,), (0.5, 0.6))
    with pytest.raises(exceptions.ConfigurationError):
        ThresholdDemand(1.5)


def test_best_fixed_action():
    best = best_fixed_action(constant_posted_price(100, 0.7))
    assert (best.price, best.quantity) == (0.7, 1.0)
    assert best.total_welfare == pytest.approx(70.0)
    instance = constant_posted_price(50, 0.4, cost=0.5)
    assert best_fixed_action(instance).total_welfare == 0.0
    linear = constant_posted_price(10, 0.5)
    linear.demands = [LinearDemand(1.0, 1.0)] * 10
    best = best_fixed_action(linear)
    ic(best)
    assert best.price == pytest.approx(0.5)
    assert best.quantity == pytest.approx(0.5)
    assert best.total_welfare == pytest.approx(2.5)


def test_discretization_gap():
    for seed in range(3):
        instance = iid_uniform_posted_price(200, np.random.default_rng(seed))
        for gamma in (0.05, 0.1, 0.3):
            gap = discretization_gap(instance, gamma)
            assert -1e-9 <= gap.gap <= gap.bound
            assert gap.bound == pytest.approx(2.0 * gamma * 200)


def test_total_sales():
    rng = np.random.default_rng(5)
    matrix = rng.random((40, 6))
    matrix[:5] = 0.5
    quantities = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    expected = np.array([[np.minimum(q, matrix[:, i]).sum() for q in quantities] for i in range(6)])
    assert np.allclose(total_sales(matrix, quantities), expected)
    assert total_sales(np.zeros((3, 2)), quantities).shape == (2, 5)


def test_instances_from_config():
    first = instance_from_dict({'family': 'iid-uniform-posted-price'}, 30, seed=4)
    second = instance_from_dict({'family': 'iid-uniform-posted-price'}, 30, seed=4)
    assert [d.v for d in first.demands] == [d.v for d in second.demands]
    bumped = equal_revenue_posted_price(500, utils.substream(0, constants.Streams.INSTANCE))
    assert all(0.25 <= d.v <= 1.0 for d in bumped.demands)
    with pytest.raises(exceptions.ConfigurationError) as error:
        instance_from_dict({'family': 'constant-posted-price'}, 10, seed=0)
    assert error.value.field == 'instance.v'
    with pytest.raises(exceptions.ConfigurationError) as error:
        instance_from_dict({'family': 'iid-uniform-posted-price', 'slope': 1}, 10, seed=0)
    assert error.value.field == 'instance.slope'


def test_instance_file(tmp_path):
    path = tmp_path / 'rounds.tsv'
    path.write_text("# cost\tfamily\tparams\n0.1\tthreshold\t0.7\n\n0.2\tlinear\t1,2\n0\tpiecewise\t0.5,1,0.2\n")
    instance = read_instance(path)
    assert instance.horizon == 3
    assert np.allclose(instance.costs, [0.1, 0.2, 0.0])
    assert instance.demands[1] == LinearDemand(1.0, 2.0)
    assert instance.demands[2](0.6) == pytest.approx(0.2)
    copy = tmp_path / 'copy.tsv'
    write_instance(instance, copy)
    assert read_instance(copy).demands == instance.demands
    assert instance_from_dict({'family': 'file', 'path': str(path)}, 2, seed=0).horizon == 2
    with pytest.raises(exceptions.ConfigurationError):
        instance_from_dict({'family': 'file', 'path': str(path)}, 5, seed=0)

    path.write_text("0.1\tthreshold\t0.7\n0.2\tthreshold\t0.5\n0.3\tthreshold\n")
    with pytest.raises(exceptions.ConfigurationError) as error:
        read_instance(path)
    assert error.value.line == 3
    path.write_text("0.1\tthreshold\tabc\n")
    with pytest.raises(exceptions.ConfigurationError) as error:
        read_instance(path)
    assert error.value.line == 1


def test_exp3vi_protocol():
    learner = Exp3VI(0.25, 0.1, np.random.default_rng(0))
    assert learner.K == 4
    assert learner.mu.sum() == pytest.approx(1.0)
    assert learner.mu[:, 4].sum() >= 0.25
    with pytest.raises(exceptions.ProtocolViolationError):
        learner.update(0.0, 0.0)
    i, j = learner.act()
    with pytest.raises(exceptions.ProtocolViolationError):
        learner.act()
    with pytest.raises(exceptions.ProtocolViolationError):
        learner.update(learner.quantities[j] + 0.5, 0.0)
    learner.update(0.0, 0.0)
    assert learner.t == 1
    with pytest.raises(exceptions.PreconditionError):
        Exp3VI(0.0, 0.1, np.random.default_rng(0))


def test_exp3vi_sampling_distribution():
    learner = Exp3VI(0.5, 0.1, np.random.default_rng(0))
    assert learner.K == 2
    assert np.allclose(learner.pi, 1.0 / 6.0)
    assert np.allclose(learner.mu[:, 2], 1.0 / 3.0)
    assert np.allclose(learner.mu[:, :2], 1.0 / 12.0)

    learner = Exp3VI(0.2, 0.5, utils.substream(2, constants.Streams.LEARNER))
    instance = iid_uniform_posted_price(300, utils.substream(2, constants.Streams.INSTANCE))
    ceiling = learner.K / learner.gamma
    for t in range(instance.horizon):
        mu = learner.mu
        i, j = learner.act()
        price, quantity = learner.prices[i], learner.quantities[j]
        feedback = min(quantity, float(instance.demands[t](price)))
        cost = float(instance.costs[t])
        losses = losses_from_feedback(learner.prices, learner.quantities, i, j, feedback, cost)
        assert np.max(estimated_losses(mu, losses, i, j)) <= ceiling + 1e-12
        learner.update(feedback, cost)
        assert abs(learner.mu.sum() - 1.0) <= 1e-12
        assert abs(learner.pi.sum() - 1.0) <= 1e-12
        assert np.all(learner.mu[:, learner.K] >= learner.gamma / learner.K - 1e-15)


def test_run_adversarial():
    instance = constant_posted_price(300, 0.7)
    run = run_adversarial(instance, seed=3)
    again = run_adversarial(instance, seed=3)
    assert run.frame.equals(again.frame)
    assert list(run.frame.columns) == constants.ADVERSARIAL_COLUMNS
    assert run.horizon == 300
    assert run.K == utils.grid_count(300 ** (-1.0 / 3.0))
    assert run.frame['I'].between(1, run.K).all()
    assert run.frame['J'].between(1, run.K + 1).all()
    assert run.regret == pytest.approx(70.0 * 300 / 100 - run.frame['welfare'].sum())
    assert run.regret <= run.bound
    assert run.records[0].t == 1


@pytest.mark.slow
def test_exp3vi_long_horizon():
    horizon = 100_000
    regrets = []
    for seed in range(20):
        instance = instance_from_dict({'family': 'iid-uniform-posted-price'}, horizon, seed)
        run = run_adversarial(instance, seed=seed)
        assert run.K == 47
        regrets.append(run.regret)
        assert run.regret <= run.bound
        assert run.bound <= run.tuned_bound
    ic(np.mean(regrets))

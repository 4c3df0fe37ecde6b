import math

import numpy as np
import pytest
from icecream import ic

from pysupplygame import constants, exceptions, utils
from pysupplygame.distributions import TruncatedExponentialDemand, UniformDemand, WeibullDemand
from pysupplygame.stage_game import StageGame, verify_weibull_uniqueness, weibull_second_derivative


def test_uniform_equilibrium():
    game = StageGame(UniformDemand(c=0.2, p=0.8))
    se = game.solve_equilibrium()
    ic(se)
    assert se.w_star == pytest.approx(0.5, abs=1e-6)
    assert se.q_star == pytest.approx(0.375, abs=1e-6)
    assert se.unique
    assert se.margin is None
    assert len(se.stationary_points) == 1
    assert se.supplier_utility == pytest.approx(0.1125, abs=1e-9)
    assert se.retailer_utility == pytest.approx(0.05625, abs=1e-9)
    assert game.solve_equilibrium() is se


def test_uniform_price_of_anarchy():
    poa = StageGame(UniformDemand(c=0.2, p=0.8)).price_of_anarchy()
    assert poa.ratio == pytest.approx(4.0 / 3.0, abs=1e-6)
    assert poa.optimal_welfare == pytest.approx(0.225, abs=1e-6)
    assert poa.equilibrium_welfare == pytest.approx(0.16875, abs=1e-6)
    assert poa.integrated_quantity == pytest.approx(0.75, abs=1e-5)


def test_weibull_equilibrium():
    game = StageGame(WeibullDemand(c=0.0, p=1.0, lam=1.0, k=1.0))
    se = game.solve_equilibrium()
    assert se.w_star == pytest.approx(math.exp(-1.0), abs=1e-5)
    assert se.q_star == pytest.approx(1.0, abs=1e-5)
    grid = np.arange(1, 1_000_000) * 1e-6
    oracle = grid[np.argmax(np.asarray(game.supplier_objective(grid)))]
    assert se.w_star == pytest.approx(oracle, abs=1e-5)


@pytest.mark.parametrize('c, p, lam, k', [(0.2, 1.0, 1.0, 1.0), (0.1, 0.9, 0.5, 2.0), (0.3, 1.0, 2.0, 1.5)])
def test_weibull_concavity(c, p, lam, k):
    report = verify_weibull_uniqueness(c, p, lam, k)
    ic(report)
    assert report.concave
    assert report.max_second_derivative <= 1e-8
    w = np.linspace(c + 0.01, p - 0.01, 50)
    assert np.all(np.asarray(weibull_second_derivative(w, c, p, lam, k)) <= 0.0)


def test_weibull_concavity_preconditions():
    with pytest.raises(exceptions.PreconditionError):
        verify_weibull_uniqueness(0.2, 1.0, 1.0, 0.5)
    with pytest.raises(exceptions.PreconditionError):
        verify_weibull_uniqueness(0.0, 1.0, 1.0, 1.0)


def test_best_response():
    game = StageGame(UniformDemand(c=0.2, p=0.8))
    assert game.best_response(0.8) == 0.0
    assert game.best_response(0.95) == 0.0
    assert game.best_response(0.0) == 1.0
    assert game.best_response(0.4) == pytest.approx(0.5)
    assert np.allclose(game.best_responses(np.array([0.0, 0.4, 0.9])), [1.0, 0.5, 0.0])


def test_stationarity_vanishes_at_equilibrium():
    game = StageGame(TruncatedExponentialDemand(c=0.1, p=0.9, rate=2.0))
    se = game.solve_equilibrium()
    assert abs(game.stationarity(se.w_star)) < 1e-7
    w = np.linspace(0.11, 0.89, 200)
    assert np.max(np.asarray(game.supplier_objective(w))) <= se.supplier_utility + 1e-9


@pytest.mark.parametrize('dist', [
    UniformDemand(c=0.2, p=0.8),
    WeibullDemand(c=0.3, p=0.9, lam=1.0, k=2.0),
    TruncatedExponentialDemand(c=0.1, p=0.9, rate=2.0),
])
def test_stationary_points_meet_tolerance(dist):
    game = StageGame(dist)
    se = game.solve_equilibrium()
    for w in se.stationary_points:
        assert abs(game.stationarity(w)) <= game.tol_stationary


def test_no_interior_maximizer(monkeypatch):
    game = StageGame(UniformDemand(c=0.2, p=0.8))
    monkeypatch.setattr(game, "stationarity", lambda w: np.ones_like(np.asarray(w, dtype=float)))
    with pytest.raises(exceptions.AnalysisError):
        game.solve_equilibrium()


families = [
    UniformDemand(c=0.2, p=0.8),
    WeibullDemand(c=0.3, p=0.9, lam=1.0, k=2.0),
    TruncatedExponentialDemand(c=0.1, p=0.9, rate=2.0),
]


@pytest.mark.parametrize('c, p, lam, k', [(0.2, 0.8, 1.0, 1.0), (0.1, 0.9, 0.5, 2.0), (0.3, 1.0, 2.0, 1.5)])
def test_weibull_second_derivative_matches_finite_differences(c, p, lam, k):
    dist = WeibullDemand(c=c, p=p, lam=lam, k=k)
    for w in np.linspace(c + 0.1 * (p - c), p - 0.1 * (p - c), 9):
        numeric = utils.second_difference(lambda x: float(dist.g(x)) * (x - c), float(w))
        assert weibull_second_derivative(float(w), c, p, lam, k) == pytest.approx(numeric, rel=1e-3, abs=1e-6)
    # k = 1 at the midpoint: L'' = -lam (w + c) / w^2
    w = 0.5
    assert weibull_second_derivative(w, 0.2, 0.8, 1.0, 1.0) == pytest.approx(-0.7 / 0.25, rel=1e-12)


@pytest.mark.parametrize('c, p', [(0.2, 0.8), (0.05, 1.0), (0.4, 0.6), (0.5, 0.95)])
def test_uniform_price_of_anarchy_is_four_thirds(c, p):
    poa = StageGame(UniformDemand(c=c, p=p)).price_of_anarchy()
    assert poa.ratio == pytest.approx(4.0 / 3.0, abs=1e-6)
    assert poa.optimal_welfare == pytest.approx((p - c) ** 2 / (2.0 * p), abs=1e-9)


@pytest.mark.parametrize('dist', families)
def test_equilibrium_matches_grid_search(dist):
    game = StageGame(dist)
    se = game.solve_equilibrium()
    grid = np.arange(dist.expected_cost() + 1e-5, dist.expected_price(), 1e-5)
    oracle = grid[np.argmax(np.asarray(game.supplier_objective(grid)))]
    ic(type(dist).__name__, se.w_star, oracle)
    assert se.w_star == pytest.approx(oracle, abs=2e-5)
    assert dist.expected_cost() < se.w_star < dist.expected_price()
    assert se.q_star == pytest.approx(game.best_response(se.w_star), abs=constants.TOL_G)


@pytest.mark.parametrize('dist', families)
def test_best_response_first_order_condition(dist):
    game = StageGame(dist)
    for w in np.linspace(0.02, dist.expected_price() - 0.02, 15):
        q = game.best_response(float(w))
        assert abs(float(dist.h(q)) - w) <= constants.TOL_G

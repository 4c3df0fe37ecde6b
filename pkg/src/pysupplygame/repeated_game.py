"""
The repeated stochastic game: episode runner, regret metrics and theoretical bound curves.
"""
from dataclasses import dataclass
import logging
import math
from pathlib import Path
from typing import List, Union

import numpy as np
import pandas as pd

from pysupplygame import constants, exceptions, utils
from pysupplygame.distributions import JointDistribution, require_bounded
from pysupplygame.learners import RetailerPolicy, SupplierPolicy
from pysupplygame.models import BoundParams, RegretReport, RoundRecord
from pysupplygame.stage_game import StageGame

logger = logging.getLogger(__name__)


@dataclass
class Trajectory:
    """Column view of one episode; row t - 1 holds round t."""
    t: np.ndarray
    w: np.ndarray
    q: np.ndarray
    c: np.ndarray
    p: np.ndarray
    d: np.ndarray

    @property
    def sigma(self) -> np.ndarray:
        return self.q * self.w - self.q * self.c

    @property
    def rho(self) -> np.ndarray:
        return np.minimum(self.q, self.d) * self.p - self.q * self.w

    @property
    def horizon(self) -> int:
        return len(self.t)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def records(self) -> List[RoundRecord]:
        sigma, rho = self.sigma, self.rho
        return [
            RoundRecord(t=int(self.t[i]), w=float(self.w[i]), q=float(self.q[i]), c=float(self.c[i]),
                        p=float(self.p[i]), d=float(self.d[i]), sigma=float(sigma[i]), rho=float(rho[i]))
            for i in range(len(self.t))
        ]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            't': self.t, 'w': self.w, 'q': self.q, 'c': self.c, 'p': self.p, 'd': self.d,
            'sigma': self.sigma, 'rho': self.rho,
        }, columns=constants.TRAJECTORY_COLUMNS)


def _check_action(t: int, name: str, value: float) -> float:
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise exceptions.ProtocolViolationError(t=t, reason=f"{name} = {value} lies outside [0, 1]")
    return value


def run_episode(dist: JointDistribution, supplier: SupplierPolicy, retailer: RetailerPolicy, horizon: int, seed: int) -> Trajectory:
    """
    Play T rounds of the repeated game.

    Nature draws all (c_t, p_t, d_t) from the seed's nature stream up front. In round t the supplier posts
    w_t, the retailer sees w_t and buys q_t, the supplier then learns (q_t, c_t) and the retailer (p_t, d_t).

    Args:
        dist (JointDistribution): A law with support in [0, 1]^3.
        supplier (SupplierPolicy): Fresh supplier policy for this horizon.
        retailer (RetailerPolicy): Fresh retailer policy for this horizon.
        horizon (int): T.
        seed (int): The episode seed.

    Returns:
        Trajectory: Exactly T rounds.

    Raises:
        exceptions.ConfigurationError: If dist has unbounded support.
        exceptions.ProtocolViolationError: If a policy emits an action outside [0, 1].
    """
    require_bounded(dist)
    costs, prices, demands = dist.sample_batch(utils.substream(seed, constants.Streams.NATURE), horizon)
    w = np.empty(horizon)
    q = np.empty(horizon)
    for i in range(horizon):
        t = i + 1
        w[i] = _check_action(t, 'w', float(supplier.act(t)))
        q[i] = _check_action(t, 'q', float(retailer.act(t, w[i])))
        supplier.observe(t, q[i], costs[i])
        retailer.observe(t, prices[i], demands[i])
    logger.debug("episode seed=%d T=%d finished: w_T=%.6g q_T=%.6g", seed, horizon, w[-1], q[-1])
    return Trajectory(t=np.arange(1, horizon + 1), w=w, q=q, c=costs, p=prices, d=demands)


def realized_supplier_values(trajectory: Trajectory, game: StageGame) -> np.ndarray:
    """E[sigma(w_t; q_t, C) | w_t, q_t] = q_t (w_t - E[C]) per round."""
    return trajectory.q * (trajectory.w - game.expected_cost)


def supplier_regret(trajectory: Trajectory, game: StageGame) -> float:
    """Average supplier regret against the equilibrium benchmark q* (w* - E[C])."""
    return game.supplier_benchmark() - float(np.mean(realized_supplier_values(trajectory, game)))


def retailer_regret(trajectory: Trajectory, game: StageGame) -> float:
    """Average retailer regret, scoring each round by the closed-form u_R(w_t, q_t)."""
    realized = np.asarray(game.retailer_utility(trajectory.w, trajectory.q), dtype=float)
    return game.retailer_benchmark() - float(np.mean(realized))


def l1_last_iterate(trajectory: Trajectory, game: StageGame) -> float:
    se = game.solve_equilibrium()
    return abs(se.w_star - float(trajectory.w[-1])) + abs(se.q_star - float(trajectory.q[-1]))


def cumulative_regret_curve(trajectory: Trajectory, game: StageGame) -> np.ndarray:
    return np.cumsum(game.supplier_benchmark() - realized_supplier_values(trajectory, game))


def simple_regret_curve(trajectory: Trajectory, game: StageGame) -> np.ndarray:
    """L(w*) minus the best value evaluated up to round t."""
    return game.supplier_benchmark() - np.maximum.accumulate(realized_supplier_values(trajectory, game))


def bound_params(game: StageGame, lipschitz: float = None) -> BoundParams:
    dist = game.dist
    return BoundParams(
        expected_cost=game.expected_cost,
        expected_price=game.expected_price,
        density_floor=dist.density_floor,
        lipschitz=lipschitz,
    )


def _require(params: BoundParams, bound_id: str, *names: str) -> List[float]:
    values = []
    for name in names:
        value = getattr(params, name)
        if value is None or not value > 0.0:
            raise exceptions.ConfigurationError(field=f'bounds.{bound_id}', reason=f"needs a positive {name}, got {value!r}")
        values.append(float(value))
    return values


def bound_value(bound_id: str, params: BoundParams, horizon: Union[int, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Evaluate one theoretical bound at T (or elementwise for an array of T).

    Args:
        bound_id (str): One of constants.Bounds.
        params (BoundParams): Instance constants.
        horizon (int | np.ndarray): T >= 1.

    Returns:
        float | np.ndarray: The bound value(s).

    Raises:
        exceptions.ConfigurationError: On an unknown id or a missing parameter.
    """
    T = np.asarray(horizon, dtype=float)
    if bound_id == constants.Bounds.ETC_SUPPLIER:
        cost = params.expected_cost if params.expected_cost is not None else -1.0
        if not 0.0 <= cost:
            raise exceptions.ConfigurationError(field=f'bounds.{bound_id}', reason="needs expected_cost")
        price, floor = _require(params, bound_id, 'expected_price', 'density_floor')
        value = ((1.0 - cost) / (price * floor) + 2.0) / np.sqrt(T)
    elif bound_id == constants.Bounds.ETC_RETAILER:
        (floor,) = _require(params, bound_id, 'density_floor')
        value = (1.0 / floor + 2.0) / np.sqrt(T)
    elif bound_id == constants.Bounds.ETC_LAST_ITERATE:
        price, floor = _require(params, bound_id, 'expected_price', 'density_floor')
        value = (1.0 / (price * floor) + 1.0) / np.sqrt(T)
    elif bound_id == constants.Bounds.LIPSCHITZ_SIMPLE:
        (m,) = _require(params, bound_id, 'lipschitz')
        value = 9.0 * m * np.log2(m * T) / T
    elif bound_id == constants.Bounds.LIPSCHITZ_AVERAGE:
        (m,) = _require(params, bound_id, 'lipschitz')
        value = 2.0 * m * np.log(4.0 * T) / T
    elif bound_id == constants.Bounds.ETC_FTL_SUPPLIER:
        cost = params.expected_cost if params.expected_cost is not None else -1.0
        if not 0.0 <= cost:
            raise exceptions.ConfigurationError(field=f'bounds.{bound_id}', reason="needs expected_cost")
        price, floor = _require(params, bound_id, 'expected_price', 'density_floor')
        value = (16.0 + (1.0 - cost) / (price * floor) + 7.0 * np.sqrt(np.log(T))) * T ** (-1.0 / 3.0)
    elif bound_id == constants.Bounds.EXP3VI:
        gamma, eta = _require(params, bound_id, 'gamma', 'eta')
        k = utils.grid_count(gamma)
        value = eta * k * T * np.log(math.e * k / gamma) + 4.0 * math.log(k + 1) / eta + 4.0 * gamma * T
    elif bound_id == constants.Bounds.EXP3VI_TUNED:
        value = 3.0 * (4.0 + 3.0 * np.log(T)) * T ** (2.0 / 3.0)
    else:
        raise exceptions.ConfigurationError(field='bounds', reason=f"unknown bound id {bound_id!r}")
    return float(value) if np.ndim(value) == 0 else value


def bound_curve(bound_id: str, params: BoundParams, horizon: int) -> np.ndarray:
    """The bound at t = 1..T."""
    return np.asarray(bound_value(bound_id, params, np.arange(1, int(horizon) + 1)), dtype=float)


def regret_report(trajectory: Trajectory, game: StageGame, bound_id: str, params: BoundParams) -> RegretReport:
    """
    Summarize one episode against one bound.

    The simple-regret bound is compared with the final simple regret; every other supplier bound with
    the average regret, the retailer bound with the average retailer regret and the last-iterate bound
    with the L1 distance.
    """
    horizon = trajectory.horizon
    curve = bound_curve(bound_id, params, horizon)
    supplier = supplier_regret(trajectory, game)
    retailer = retailer_regret(trajectory, game)
    l1 = l1_last_iterate(trajectory, game)
    if bound_id == constants.Bounds.ETC_RETAILER:
        metric = retailer
    elif bound_id == constants.Bounds.ETC_LAST_ITERATE:
        metric = l1
    elif bound_id == constants.Bounds.LIPSCHITZ_SIMPLE:
        metric = float(simple_regret_curve(trajectory, game)[-1])
    else:
        metric = supplier
    return RegretReport(
        horizon=horizon,
        supplier_avg_regret=supplier,
        retailer_avg_regret=retailer,
        l1_last_iterate=l1,
        bound_name=bound_id,
        bound_value=float(curve[-1]),
        metric=metric,
        bound_curve=curve.tolist(),
    )


def write_trajectory(trajectory: Trajectory, path: Union[str, Path]):
    """Write the (t, w, q, c, p, d, sigma, rho) columns with 17 significant digits."""
    trajectory.to_frame().to_csv(path, index=False, float_format='%' + constants.FLOAT_FORMAT)


def read_trajectory(path: Union[str, Path]) -> Trajectory:
    frame = pd.read_csv(path, float_precision='round_trip')
    if list(frame.columns) != constants.TRAJECTORY_COLUMNS:
        raise exceptions.ConfigurationError(field=str(path), reason=f"unexpected columns {list(frame.columns)}")
    return Trajectory(**{name: frame[name].to_numpy() for name in ('t', 'w', 'q', 'c', 'p', 'd')})

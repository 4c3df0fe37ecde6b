"""
Supplier and retailer policies for the repeated game.

Every policy is single-owner mutable state driven through act / observe in round order:
act(t) may only follow observe(t - 1), and no round beyond the horizon is accepted.
"""
from abc import ABC, abstractmethod
import logging
from typing import List, Optional

import numpy as np

from pysupplygame import constants, exceptions, utils
from pysupplygame.distributions import JointDistribution
from pysupplygame.models import PolicySpec
from pysupplygame.stage_game import StageGame

logger = logging.getLogger(__name__)


class _Policy(ABC):
    def __init__(self, horizon: int):
        if int(horizon) < 1:
            raise exceptions.PreconditionError(reason=f"horizon must be >= 1, got {horizon}")
        self.horizon = int(horizon)
        self._acted = 0
        self._observed = 0

    def _begin(self, t: int):
        if t > self.horizon:
            raise exceptions.ProtocolViolationError(t=t, reason=f"{self.__class__.__name__} asked to act after its horizon T = {self.horizon}")
        if t != self._observed + 1 or self._acted != self._observed:
            raise exceptions.ProtocolViolationError(t=t, reason=f"{self.__class__.__name__} expected round {self._observed + 1}")
        self._acted = t

    def _end(self, t: int):
        if t != self._acted or self._observed != t - 1:
            raise exceptions.ProtocolViolationError(t=t, reason=f"{self.__class__.__name__} observed round {t} before acting in it")
        self._observed = t


class SupplierPolicy(_Policy):
    """A supplier learner: posts a wholesale price, then sees the quantity bought and its own cost."""

    def act(self, t: int) -> float:
        self._begin(t)
        return self._act(t)

    def observe(self, t: int, q: float, c: float):
        self._end(t)
        self._observe(t, float(q), float(c))

    @abstractmethod
    def _act(self, t: int) -> float:
        raise NotImplementedError

    @abstractmethod
    def _observe(self, t: int, q: float, c: float):
        raise NotImplementedError


class RetailerPolicy(_Policy):
    """A retailer learner: sees the wholesale price, buys a quantity, then sees (p, d)."""

    def act(self, t: int, w: float) -> float:
        self._begin(t)
        return self._act(t, float(w))

    def observe(self, t: int, p: float, d: float):
        self._end(t)
        self._observe(t, float(p), float(d))

    @abstractmethod
    def _act(self, t: int, w: float) -> float:
        raise NotImplementedError

    def _observe(self, t: int, p: float, d: float):
        pass


class ConstantSupplier(SupplierPolicy):
    """Posts the same price every round."""

    def __init__(self, horizon: int, price: float):
        super().__init__(horizon)
        self.price = float(price)

    def _act(self, t: int) -> float:
        return self.price

    def _observe(self, t: int, q: float, c: float):
        pass


class EtcSupplier(SupplierPolicy):
    """
    Explore-then-commit with a known expected cost.

    The first floor(sqrt(T)) rounds sweep w = t / (floor(sqrt(T)) + 1); the remaining rounds repeat the
    swept price with the largest q_s (w_s - E[C]), ties toward the smallest s.

    Args:
        horizon (int): T.
        expected_cost (float): E[C].
    """
    def __init__(self, horizon: int, expected_cost: float):
        super().__init__(horizon)
        self.expected_cost = float(expected_cost)
        self.grid_size = utils.isqrt(self.horizon)
        self.grid = np.arange(1, self.grid_size + 1) / (self.grid_size + 1)
        self.observations: List[tuple] = []
        self.committed_w: Optional[float] = None

    @property
    def phase(self) -> str:
        return 'commit' if self.committed_w is not None else 'explore'

    def _act(self, t: int) -> float:
        if t <= self.grid_size:
            return float(self.grid[t - 1])
        return self.committed_w

    def _observe(self, t: int, q: float, c: float):
        if t > self.grid_size:
            return
        self.observations.append((float(self.grid[t - 1]), q))
        if t == self.grid_size:
            values = [q_s * (w_s - self.expected_cost) for w_s, q_s in self.observations]
            self.committed_w = self.observations[utils.argmax_first(values)][0]
            logger.debug("ETC commits to w=%.6g after %d exploration rounds", self.committed_w, self.grid_size)


class PiyavskiiSupplier(SupplierPolicy):
    """
    Piyavskii-Shubert maximization of w -> q(w) (w - E[C]) from exact evaluations.

    w_1 = 1; afterwards w_{t+1} maximizes the upper envelope min_s f_s + M |w_s - w| over [0, 1],
    computed exactly from the envelope breakpoints, ties toward the smallest w.

    Args:
        horizon (int): T.
        expected_cost (float): E[C].
        lipschitz (float): The envelope slope M > 0.
    """
    def __init__(self, horizon: int, expected_cost: float, lipschitz: float):
        super().__init__(horizon)
        if lipschitz <= 0.0:
            raise exceptions.PreconditionError(reason=f"the Lipschitz constant must be positive, got {lipschitz}")
        self.expected_cost = float(expected_cost)
        self.lipschitz = float(lipschitz)
        self.points: List[float] = []
        self.values: List[float] = []
        self._next = 1.0

    def proxy(self, w):
        """The upper envelope min_s f_s + M |w_s - w| (+inf before any evaluation)."""
        w = np.atleast_1d(np.asarray(w, dtype=float))
        if not self.points:
            return np.full(w.shape, np.inf)
        points = np.asarray(self.points)
        values = np.asarray(self.values)
        return np.min(values[None, :] + self.lipschitz * np.abs(points[None, :] - w[:, None]), axis=1)

    def maximize_proxy(self) -> float:
        order = np.argsort(self.points, kind='stable')
        points = np.asarray(self.points)[order]
        values = np.asarray(self.values)[order]
        crossings = (values[1:] - values[:-1] + self.lipschitz * (points[:-1] + points[1:])) / (2.0 * self.lipschitz)
        crossings = np.clip(crossings, points[:-1], points[1:])
        candidates = np.unique(np.concatenate(([0.0, 1.0], points, crossings)))
        return float(candidates[utils.argmax_first(self.proxy(candidates), atol=1e-12)])

    def _act(self, t: int) -> float:
        return self._next

    def _observe(self, t: int, q: float, c: float):
        w = self._next
        self.points.append(w)
        self.values.append(q * (w - self.expected_cost))
        if t < self.horizon:
            self._next = self.maximize_proxy()


class EtcNoCostSupplier(SupplierPolicy):
    """
    Explore-then-commit that learns E[C] from the revealed costs.

    With m = ceil(T^(1/3)), exploration sweeps w_s = s / (m + 1) for m + 1 passes. E[C] is estimated by
    the mean of the first m^2 observed costs, and the commit price maximizes q_s (w_s - estimate) over the
    final pass (rounds s > m^2), ties toward the smallest s.

    Args:
        horizon (int): T >= 12.
    """
    def __init__(self, horizon: int):
        if int(horizon) < constants.MIN_CUBE_ROOT_HORIZON:
            raise exceptions.PreconditionError(reason=f"explore-then-commit without E[C] takes input horizon T >= {constants.MIN_CUBE_ROOT_HORIZON}, got T = {horizon}")
        super().__init__(horizon)
        self.grid_size = utils.ceil_cbrt(self.horizon)
        # ceil(T^(1/3) + 1) == ceil(T^(1/3)) + 1
        self.passes = self.grid_size + 1
        self.exploration_rounds = self.passes * self.grid_size
        self.grid = np.arange(1, self.grid_size + 1) / (self.grid_size + 1)
        self.costs: List[float] = []
        self.quantities: List[float] = []
        self.estimated_cost: Optional[float] = None
        self.committed_w: Optional[float] = None
        self.flagged = False

    def price_at(self, t: int) -> float:
        return float(self.grid[(t - 1) % self.grid_size])

    def _act(self, t: int) -> float:
        if t <= self.exploration_rounds:
            return self.price_at(t)
        return self.committed_w

    def _observe(self, t: int, q: float, c: float):
        if t > self.exploration_rounds:
            return
        self.costs.append(c)
        self.quantities.append(q)
        if t == self.grid_size ** 2:
            self.estimated_cost = float(np.mean(self.costs))
        if t == min(self.exploration_rounds, self.horizon):
            self._commit(t)

    def _commit(self, t: int):
        rounds = list(range(self.grid_size ** 2 + 1, t + 1))
        if not rounds:
            rounds = list(range(1, t + 1))
            self.flagged = True
            logger.warning("empty final pass at T = %d; committing to the overall empirical argmax", self.horizon)
        if self.estimated_cost is None:
            self.estimated_cost = float(np.mean(self.costs))
        values = [self.quantities[s - 1] * (self.price_at(s) - self.estimated_cost) for s in rounds]
        self.committed_w = self.price_at(rounds[utils.argmax_first(values)])
        logger.debug("ETC without E[C] commits to w=%.6g (estimated E[C]=%.6g)", self.committed_w, self.estimated_cost)


class ExactBestResponseRetailer(RetailerPolicy):
    """Answers every price with the exact best response of the stage game."""

    def __init__(self, horizon: int, game: StageGame):
        super().__init__(horizon)
        if not game.dist.has_closed_forms:
            raise exceptions.ConfigurationError(field='retailer', reason="the exact best response needs a parametric family with a closed-form g")
        self.game = game

    def _act(self, t: int, w: float) -> float:
        return self.game.best_response(w)


class FtlRetailer(RetailerPolicy):
    """
    Follow-the-leader on the grid {k / (ceil(T^(1/3)) + 1)}.

    Round 1 draws a grid point uniformly with the retailer's generator; round t >= 2 maximizes
    (1 / (t - 1)) sum_s min(q, D_s) P_s - q w_t over the grid, ties toward the smallest q.

    Args:
        horizon (int): T >= 12.
        rng (np.random.Generator): The retailer's random stream.
        grid (list, optional): Explicit quantity grid, replacing the default one.
    """
    def __init__(self, horizon: int, rng: np.random.Generator, grid: Optional[List[float]] = None):
        if grid is None and int(horizon) < constants.MIN_CUBE_ROOT_HORIZON:
            raise exceptions.PreconditionError(reason=f"follow-the-leader takes input horizon T >= {constants.MIN_CUBE_ROOT_HORIZON}, got T = {horizon}")
        super().__init__(horizon)
        self.rng = rng
        if grid is None:
            m = utils.ceil_cbrt(self.horizon)
            grid = np.arange(1, m + 2) / (m + 1)
        self.grid = np.asarray(grid, dtype=float)
        self.sums = np.zeros_like(self.grid)
        self.prices: List[float] = []
        self.demands: List[float] = []

    def objective(self, w: float) -> np.ndarray:
        return self.sums / len(self.prices) - self.grid * w

    def empirical_utility(self, w: float, q: float) -> float:
        """rho_hat(w, q) = mean_s min(q, D_s) P_s - q w over the observed history."""
        if not self.prices:
            raise exceptions.PreconditionError(reason="no observations yet")
        return float(np.mean(np.minimum(q, self.demands) * np.asarray(self.prices))) - q * w

    def _act(self, t: int, w: float) -> float:
        if t == 1:
            return float(self.grid[self.rng.integers(len(self.grid))])
        return float(self.grid[utils.argmax_first(self.objective(w))])

    def _observe(self, t: int, p: float, d: float):
        self.prices.append(p)
        self.demands.append(d)
        self.sums += np.minimum(self.grid, d) * p


def default_lipschitz(dist: JointDistribution) -> float:
    """M = (1 - E[C]) / (E[P] L) + 1."""
    if dist.density_floor is None:
        raise exceptions.ConfigurationError(field='supplier.params.lipschitz', reason="no density floor is declared, give M explicitly")
    return (1.0 - dist.expected_cost()) / (dist.expected_price() * dist.density_floor) + 1.0


def _check_params(spec: PolicySpec, role: str, allowed: set):
    unknown = sorted(set(spec.params) - allowed)
    if unknown:
        raise exceptions.ConfigurationError(field=f'{role}.params.{unknown[0]}', reason=f"not a parameter of policy {spec.name!r}")


def build_supplier(spec: PolicySpec, horizon: int, dist: JointDistribution) -> SupplierPolicy:
    """
    Instantiate a supplier policy from its config record.

    Args:
        spec (PolicySpec): Policy name and parameters.
        horizon (int): T.
        dist (JointDistribution): The law the policy plays against; supplies E[C] and the default M.

    Returns:
        SupplierPolicy: A fresh policy.
    """
    params = spec.params
    if spec.name == constants.Suppliers.ETC:
        _check_params(spec, 'supplier', {'expected_cost'})
        return EtcSupplier(horizon, params.get('expected_cost', dist.expected_cost()))
    if spec.name == constants.Suppliers.PIYAVSKII:
        _check_params(spec, 'supplier', {'expected_cost', 'lipschitz'})
        lipschitz = params['lipschitz'] if 'lipschitz' in params else default_lipschitz(dist)
        return PiyavskiiSupplier(horizon, params.get('expected_cost', dist.expected_cost()), lipschitz)
    if spec.name == constants.Suppliers.ETC_NOCOST:
        _check_params(spec, 'supplier', set())
        return EtcNoCostSupplier(horizon)
    if spec.name == constants.Suppliers.CONSTANT:
        _check_params(spec, 'supplier', {'price'})
        if 'price' not in params:
            raise exceptions.ConfigurationError(field='supplier.params.price', reason="missing")
        return ConstantSupplier(horizon, params['price'])
    raise exceptions.ConfigurationError(field='supplier.name', reason=f"unknown supplier policy {spec.name!r}")


def build_retailer(spec: PolicySpec, horizon: int, game: StageGame, rng: np.random.Generator) -> RetailerPolicy:
    """
    Instantiate a retailer policy from its config record.

    Args:
        spec (PolicySpec): Policy name and parameters.
        horizon (int): T.
        game (StageGame): The stage game (exact best responses).
        rng (np.random.Generator): The retailer's random stream.

    Returns:
        RetailerPolicy: A fresh policy.
    """
    if spec.name == constants.Retailers.EXACT:
        _check_params(spec, 'retailer', set())
        return ExactBestResponseRetailer(horizon, game)
    if spec.name == constants.Retailers.FTL:
        _check_params(spec, 'retailer', {'grid'})
        return FtlRetailer(horizon, rng, spec.params.get('grid'))
    raise exceptions.ConfigurationError(field='retailer.name', reason=f"unknown retailer policy {spec.name!r}")

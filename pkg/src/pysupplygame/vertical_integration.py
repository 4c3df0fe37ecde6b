"""
Vertically integrated supply chain against adversarial costs and demand curves.

The retailer alone picks a retail price p and a quantity q each round, pays the production cost c_t per
unit, and only sees the censored sales min(q, d_t(p)). Exp3VI runs exponential weights over a
price / quantity grid and uses the one-sided structure of censored sales: every smaller quantity on the
played price row has a loss that is recoverable from the feedback.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
import logging
import math
from pathlib import Path
from typing import ClassVar, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import special

from pysupplygame import constants, exceptions, utils
from pysupplygame.models import BoundParams, DiscretizationGap, VIRoundRecord
from pysupplygame.repeated_game import bound_value

logger = logging.getLogger(__name__)


def welfare(p, q, c, d_value):
    """min(q, d) p - q c, the integrated chain's profit for one round."""
    return np.minimum(q, d_value) * p - q * c


def loss(p, q, c, d_value):
    """(1 - welfare) / 2, mapping welfare in [-1, 1] to a loss in [0, 1]."""
    return (1.0 - welfare(p, q, c, d_value)) / 2.0


class DemandCurve(ABC):
    """A non-increasing demand function d: [0, 1] -> [0, 1]."""
    family: ClassVar[constants.DemandShapes]

    @abstractmethod
    def __call__(self, p):
        raise NotImplementedError

    @property
    @abstractmethod
    def breakpoints(self) -> List[float]:
        """Prices where the curve changes shape; the integrated optimum only needs these as candidates."""
        raise NotImplementedError

    @property
    @abstractmethod
    def params(self) -> List[float]:
        raise NotImplementedError


@dataclass(frozen=True)
class ThresholdDemand(DemandCurve):
    """Posted-price demand: one unit is bought iff p <= v."""
    v: float
    family: ClassVar[constants.DemandShapes] = constants.DemandShapes.THRESHOLD

    def __post_init__(self):
        if not 0.0 <= self.v <= 1.0:
            raise exceptions.ConfigurationError(field='instance.v', reason=f"valuation must lie in [0, 1], got {self.v}")

    def __call__(self, p):
        return np.where(np.asarray(p) <= self.v, 1.0, 0.0) if np.ndim(p) else (1.0 if p <= self.v else 0.0)

    @property
    def breakpoints(self) -> List[float]:
        return [self.v]

    @property
    def params(self) -> List[float]:
        return [self.v]


@dataclass(frozen=True)
class LinearDemand(DemandCurve):
    """d(p) = clip(a - b p, 0, 1) with b >= 0."""
    a: float
    b: float
    family: ClassVar[constants.DemandShapes] = constants.DemandShapes.LINEAR

    def __post_init__(self):
        if self.b < 0.0:
            raise exceptions.ConfigurationError(field='instance.b', reason=f"slope must be >= 0 for a non-increasing demand, got {self.b}")

    def __call__(self, p):
        return np.clip(self.a - self.b * np.asarray(p, dtype=float), 0.0, 1.0) if np.ndim(p) else min(1.0, max(0.0, self.a - self.b * p))

    @property
    def breakpoints(self) -> List[float]:
        if self.b == 0.0:
            return []
        points = [(self.a - 1.0) / self.b, self.a / self.b, self.a / (2.0 * self.b)]
        return [x for x in points if 0.0 <= x <= 1.0]

    @property
    def params(self) -> List[float]:
        return [self.a, self.b]


@dataclass(frozen=True)
class PiecewiseConstantDemand(DemandCurve):
    """
    A step curve: d(p) = values[k] where k counts the breakpoints strictly below p.

    breakpoints are increasing in [0, 1]; values has one more entry, non-increasing in [0, 1].
    """
    cuts: Tuple[float, ...]
    values: Tuple[float, ...]
    family: ClassVar[constants.DemandShapes] = constants.DemandShapes.PIECEWISE

    def __post_init__(self):
        cuts = np.asarray(self.cuts, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if len(values) != len(cuts) + 1:
            raise exceptions.ConfigurationError(field='instance.values', reason="need exactly one more value than breakpoints")
        if np.any(np.diff(cuts) <= 0.0) or np.any(cuts < 0.0) or np.any(cuts > 1.0):
            raise exceptions.ConfigurationError(field='instance.breakpoints', reason="breakpoints must increase within [0, 1]")
        if np.any(np.diff(values) > 0.0) or np.any(values < 0.0) or np.any(values > 1.0):
            raise exceptions.ConfigurationError(field='instance.values', reason="values must be non-increasing within [0, 1]")

    def __call__(self, p):
        index = np.searchsorted(np.asarray(self.cuts, dtype=float), p, side='left')
        values = np.asarray(self.values, dtype=float)[index]
        return values if np.ndim(p) else float(values)

    @property
    def breakpoints(self) -> List[float]:
        return list(self.cuts)

    @property
    def params(self) -> List[float]:
        return list(self.cuts) + list(self.values)


def demand_from_params(family: str, params: List[float]) -> DemandCurve:
    """Rebuild a demand curve from its family name and flat parameter list."""
    if family == constants.DemandShapes.THRESHOLD and len(params) == 1:
        return ThresholdDemand(float(params[0]))
    if family == constants.DemandShapes.LINEAR and len(params) == 2:
        return LinearDemand(float(params[0]), float(params[1]))
    if family == constants.DemandShapes.PIECEWISE and len(params) % 2 == 1:
        m = len(params) // 2
        return PiecewiseConstantDemand(tuple(map(float, params[:m])), tuple(map(float, params[m:])))
    raise exceptions.ConfigurationError(field='instance.family', reason=f"cannot build a {family!r} demand from {len(params)} parameter(s)")


@dataclass
class AdversarialInstance:
    """An oblivious sequence of production costs and demand curves, one per round."""
    costs: np.ndarray
    demands: List[DemandCurve]
    name: str = 'custom'

    def __post_init__(self):
        self.costs = np.asarray(self.costs, dtype=float)
        if len(self.costs) != len(self.demands):
            raise exceptions.ConfigurationError(field='instance', reason=f"{len(self.costs)} costs for {len(self.demands)} demand curves")
        if np.any(self.costs < 0.0) or np.any(self.costs > 1.0):
            raise exceptions.ConfigurationError(field='instance.cost', reason="costs must lie in [0, 1]")

    @property
    def horizon(self) -> int:
        return len(self.costs)

    @property
    def is_threshold(self) -> bool:
        return all(isinstance(d, ThresholdDemand) for d in self.demands)

    def demand_matrix(self, prices: np.ndarray) -> np.ndarray:
        """d_t(p) for every round t (rows) and price p (columns)."""
        prices = np.asarray(prices, dtype=float)
        if self.is_threshold:
            valuations = np.array([d.v for d in self.demands])
            return (prices[None, :] <= valuations[:, None]).astype(float)
        return np.vstack([np.asarray(d(prices), dtype=float) for d in self.demands])

    def truncated(self, horizon: int) -> 'AdversarialInstance':
        if horizon > self.horizon:
            raise exceptions.ConfigurationError(field='horizons', reason=f"instance {self.name!r} has only {self.horizon} rounds, asked for {horizon}")
        return AdversarialInstance(self.costs[:horizon], self.demands[:horizon], self.name)


def iid_uniform_posted_price(horizon: int, rng: np.random.Generator, cost: float = 0.0) -> AdversarialInstance:
    """Threshold demands with valuations drawn i.i.d. uniform on [0, 1]."""
    valuations = rng.random(horizon)
    return AdversarialInstance(np.full(horizon, cost), [ThresholdDemand(float(v)) for v in valuations], constants.Instances.IID_UNIFORM_POSTED_PRICE)


def constant_posted_price(horizon: int, v: float, cost: float = 0.0) -> AdversarialInstance:
    demand = ThresholdDemand(float(v))
    return AdversarialInstance(np.full(horizon, cost), [demand] * horizon, constants.Instances.CONSTANT_POSTED_PRICE)


def equal_revenue_posted_price(horizon: int, rng: np.random.Generator, floor: float = 0.25, bump_center: float = 0.6,
                               bump_width: float = 0.02, bump_mass: float = 0.1, cost: float = 0.0) -> AdversarialInstance:
    """
    Posted-price valuations whose revenue curve is flat except for a narrow bump.

    Valuations follow P(v >= x) = floor / x on [floor, 1]; with probability bump_mass a valuation is
    redrawn uniformly in a window of width bump_width around bump_center, so only prices inside the
    window beat the flat revenue.
    """
    if not (0.0 < floor < 1.0 and 0.0 <= bump_mass <= 1.0 and bump_width > 0.0):
        raise exceptions.ConfigurationError(field='instance', reason="need 0 < floor < 1, 0 <= bump_mass <= 1 and bump_width > 0")
    u = 1.0 - rng.random(horizon)
    valuations = np.minimum(1.0, floor / u)
    bumped = rng.random(horizon) < bump_mass
    window = bump_center + bump_width * (rng.random(horizon) - 0.5)
    valuations = np.where(bumped, np.clip(window, 0.0, 1.0), valuations)
    return AdversarialInstance(np.full(horizon, cost), [ThresholdDemand(float(v)) for v in valuations], constants.Instances.EQUAL_REVENUE_POSTED_PRICE)


def read_instance(path: Union[str, Path]) -> AdversarialInstance:
    """
    Read a line-oriented instance file: one round per line, cost<TAB>family<TAB>params.

    params is a comma-separated list of numbers (threshold: v; linear: a,b; piecewise: the breakpoints
    followed by the values). Blank lines and lines starting with '#' are skipped.

    Raises:
        exceptions.ConfigurationError: On a malformed line, with its line number.
    """
    costs, demands = [], []
    with open(path, encoding='utf-8') as stream:
        for number, line in enumerate(stream, start=1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            parts = line.split('\t')
            if len(parts) != 3:
                raise exceptions.ConfigurationError(field=str(path), reason="expected cost<TAB>family<TAB>params", line=number)
            try:
                cost = float(parts[0])
                params = [float(x) for x in parts[2].split(',') if x.strip()]
                demands.append(demand_from_params(parts[1].strip(), params))
            except ValueError as e:
                raise exceptions.ConfigurationError(field=str(path), reason=str(e), line=number)
            except exceptions.ConfigurationError as e:
                raise exceptions.ConfigurationError(field=str(path), reason=e.reason, line=number)
            costs.append(cost)
    if not costs:
        raise exceptions.ConfigurationError(field=str(path), reason="no rounds")
    return AdversarialInstance(np.array(costs), demands, Path(path).name)


def write_instance(instance: AdversarialInstance, path: Union[str, Path]):
    with open(path, 'w', encoding='utf-8') as stream:
        for cost, demand in zip(instance.costs, instance.demands):
            params = ','.join(utils.format_float(x) for x in demand.params)
            stream.write(f"{utils.format_float(cost)}\t{demand.family}\t{params}\n")


def instance_from_dict(spec: dict, horizon: int, seed: int) -> AdversarialInstance:
    """
    Build the instance a config record names, for one horizon and seed.

    Random families draw from the seed's instance stream; file instances are truncated to the horizon.
    """
    if not isinstance(spec, dict) or 'family' not in spec:
        raise exceptions.ConfigurationError(field='instance.family', reason="missing")
    params = {k: v for k, v in spec.items() if k != 'family'}
    family = spec['family']
    rng = utils.substream(seed, constants.Streams.INSTANCE)
    allowed = {
        constants.Instances.IID_UNIFORM_POSTED_PRICE: {'cost'},
        constants.Instances.CONSTANT_POSTED_PRICE: {'cost', 'v'},
        constants.Instances.EQUAL_REVENUE_POSTED_PRICE: {'cost', 'floor', 'bump_center', 'bump_width', 'bump_mass'},
        constants.Instances.FILE: {'path'},
    }
    if family not in allowed:
        raise exceptions.ConfigurationError(field='instance.family', reason=f"unknown instance family {family!r}")
    unknown = sorted(set(params) - allowed[family])
    if unknown:
        raise exceptions.ConfigurationError(field=f'instance.{unknown[0]}', reason=f"not a parameter of {family!r}")
    if family == constants.Instances.IID_UNIFORM_POSTED_PRICE:
        return iid_uniform_posted_price(horizon, rng, **params)
    if family == constants.Instances.CONSTANT_POSTED_PRICE:
        if 'v' not in params:
            raise exceptions.ConfigurationError(field='instance.v', reason="missing")
        return constant_posted_price(horizon, **params)
    if family == constants.Instances.EQUAL_REVENUE_POSTED_PRICE:
        return equal_revenue_posted_price(horizon, rng, **params)
    if 'path' not in params:
        raise exceptions.ConfigurationError(field='instance.path', reason="missing")
    return read_instance(params['path']).truncated(horizon)


@dataclass
class BestFixedAction:
    price: float
    quantity: float
    total_welfare: float
    per_round: np.ndarray = field(repr=False)


def _best_quantity(price: float, demands: np.ndarray, total_cost: float) -> Tuple[float, float]:
    """Maximize price * sum_t min(q, D_t) - q * total_cost over q in {0} U {D_t}."""
    ordered = np.sort(demands)
    n = len(ordered)
    below = np.concatenate(([0.0], np.cumsum(ordered)[:-1]))
    values = price * (below + ordered * (n - np.arange(n))) - ordered * total_cost
    best = utils.argmax_first(values)
    if values[best] <= 0.0:
        return 0.0, 0.0
    return float(ordered[best]), float(values[best])


def best_fixed_action(instance: AdversarialInstance, grid_step: float = constants.BEST_FIXED_GRID_STEP) -> BestFixedAction:
    """
    The fixed (p, q) in [0, 1]^2 with the largest total welfare over the instance.

    Threshold instances are solved exactly: with q in {0, 1}, the best price is one of the valuations.
    Other instances are solved exactly in q for every candidate price (breakpoints of the curves and a
    grid of step grid_step), which is within grid_step per round of the supremum.
    """
    total_cost = float(np.sum(instance.costs))
    if instance.is_threshold:
        valuations = np.sort(np.array([d.v for d in instance.demands]))[::-1]
        revenues = valuations * np.arange(1, len(valuations) + 1) - total_cost
        best = utils.argmax_first(revenues)
        price, quantity = (float(valuations[best]), 1.0) if revenues[best] > 0.0 else (0.0, 0.0)
    else:
        candidates = np.round(np.arange(0.0, 1.0 + grid_step / 2, grid_step), constants.PRICE_GRID_DECIMALS)
        extra = [x for d in instance.demands for x in d.breakpoints]
        candidates = np.unique(np.clip(np.concatenate((candidates, extra)), 0.0, 1.0))
        matrix = instance.demand_matrix(candidates)
        price, quantity, value = 0.0, 0.0, 0.0
        for k, p in enumerate(candidates):
            q, v = _best_quantity(float(p), matrix[:, k], total_cost)
            if v > value:
                price, quantity, value = float(p), q, v
    d_values = np.array([d(price) for d in instance.demands], dtype=float)
    per_round = welfare(price, quantity, instance.costs, d_values)
    return BestFixedAction(price=price, quantity=quantity, total_welfare=float(per_round.sum()), per_round=per_round)


def price_grid(gamma: float) -> Tuple[np.ndarray, np.ndarray]:
    """Prices (i - 1) gamma for i in [K] and quantities (j - 1) gamma for j in [K] plus 1."""
    k = utils.grid_count(gamma)
    prices = np.round(np.arange(k) * gamma, constants.PRICE_GRID_DECIMALS)
    quantities = np.append(np.round(np.arange(k) * gamma, constants.PRICE_GRID_DECIMALS), 1.0)
    return prices, quantities


def estimated_losses(mu: np.ndarray, losses_row: np.ndarray, i: int, j: int) -> np.ndarray:
    """
    The importance-weighted loss estimate for a draw (i, j) (0-based).

    Entry (i, k) for k <= j is losses_row[k] / sum_{k' >= k} mu[i, k']; every other entry is 0.

    Args:
        mu (np.ndarray): Sampling distribution, shape (K, K + 1).
        losses_row (np.ndarray): Losses of row i for at least the quantities 0..j.
        i (int): Played price index.
        j (int): Played quantity index.

    Returns:
        np.ndarray: Estimates, shape (K, K + 1).
    """
    estimate = np.zeros_like(mu)
    tails = np.cumsum(mu[i, ::-1])[::-1]
    estimate[i, :j + 1] = np.asarray(losses_row[:j + 1], dtype=float) / tails[:j + 1]
    return estimate


def losses_from_feedback(prices: np.ndarray, quantities: np.ndarray, i: int, j: int, feedback: float, cost: float) -> np.ndarray:
    """
    Losses of (i, k) for k <= j reconstructed from the censored sales min(Q, d).

    min(q_k, d) == min(q_k, min(Q, d)) whenever q_k <= Q, so the true demand is never needed.
    """
    q = quantities[:j + 1]
    return loss(prices[i], q, cost, np.minimum(q, feedback))


class Exp3VI:
    """
    Exponential weights over the price / quantity grid with censored-sales feedback.

    Args:
        gamma (float): Grid step and exploration rate, in (0, 1].
        eta (float): Learning rate.
        rng (np.random.Generator): The learner's random stream.
    """
    def __init__(self, gamma: float, eta: float, rng: np.random.Generator):
        if not (0.0 < gamma <= 1.0) or eta <= 0.0:
            raise exceptions.PreconditionError(reason=f"need 0 < gamma <= 1 and eta > 0, got gamma = {gamma}, eta = {eta}")
        self.gamma = float(gamma)
        self.eta = float(eta)
        self.rng = rng
        self.prices, self.quantities = price_grid(gamma)
        self.K = len(self.prices)
        self.cumulative_losses = np.zeros((self.K, self.K + 1))
        self.t = 0
        self._mu: Optional[np.ndarray] = None
        self._draw: Optional[Tuple[int, int]] = None

    @property
    def pi(self) -> np.ndarray:
        """pi_t proportional to exp(-eta L_hat), normalized by log-sum-exp."""
        return special.softmax(-self.eta * self.cumulative_losses)

    @property
    def mu(self) -> np.ndarray:
        mu = (1.0 - self.gamma) * self.pi
        mu[:, self.K] += self.gamma / self.K
        return mu

    def act(self) -> Tuple[int, int]:
        """Draw (i, j) (0-based) from mu_t by inverse CDF over the row-major order."""
        if self._draw is not None:
            raise exceptions.ProtocolViolationError(t=self.t + 1, reason="act called twice without an update")
        self._mu = self.mu
        cdf = np.cumsum(self._mu.ravel())
        index = min(int(np.searchsorted(cdf, self.rng.random() * cdf[-1], side='right')), cdf.size - 1)
        self._draw = divmod(index, self.K + 1)
        return self._draw

    def update(self, feedback: float, cost: float):
        """
        Fold one round's censored feedback into the cumulative loss estimates.

        Raises:
            exceptions.ProtocolViolationError: If feedback lies outside [0, Q_t] or no action was drawn.
        """
        if self._draw is None:
            raise exceptions.ProtocolViolationError(t=self.t + 1, reason="update without a preceding act")
        i, j = self._draw
        quantity = self.quantities[j]
        if not (0.0 <= feedback <= quantity + 1e-12):
            raise exceptions.ProtocolViolationError(t=self.t + 1, reason=f"feedback {feedback} outside [0, {quantity}]")
        losses = losses_from_feedback(self.prices, self.quantities, i, j, feedback, cost)
        self.cumulative_losses += estimated_losses(self._mu, losses, i, j)
        self._draw = None
        self.t += 1


@dataclass
class AdversarialRun:
    seed: int
    gamma: float
    eta: float
    K: int
    best: BestFixedAction
    frame: pd.DataFrame = field(repr=False)

    @property
    def horizon(self) -> int:
        return len(self.frame)

    @property
    def regret(self) -> float:
        return float(self.frame['cumulative_regret'].iloc[-1])

    @property
    def bound(self) -> float:
        return float(self.frame['bound_value'].iloc[-1])

    @property
    def tuned_bound(self) -> float:
        return float(bound_value(constants.Bounds.EXP3VI_TUNED, BoundParams(), self.horizon))

    @property
    def records(self) -> List[VIRoundRecord]:
        return [
            VIRoundRecord(t=int(row.t), i=int(row.I), j=int(row.J), price=float(row.P), quantity=float(row.Q),
                          feedback=float(row.feedback), welfare=float(row.welfare))
            for row in self.frame.itertuples(index=False)
        ]


def default_rates(horizon: int) -> Tuple[float, float]:
    """gamma = T^(-1/3), eta = T^(-2/3)."""
    return horizon ** (-1.0 / 3.0), horizon ** (-2.0 / 3.0)


def run_adversarial(instance: AdversarialInstance, gamma: float = None, eta: float = None, seed: int = 0) -> AdversarialRun:
    """
    Run Exp3VI on an instance and measure its regret against the best fixed (p, q).

    Args:
        instance (AdversarialInstance): Costs and demand curves.
        gamma (float, optional): Grid step. Defaults to T^(-1/3).
        eta (float, optional): Learning rate. Defaults to T^(-2/3).
        seed (int, optional): Seed of the learner's stream. Defaults to 0.

    Returns:
        AdversarialRun: Per-round (t, I, J, P, Q, feedback, welfare, cumulative_regret, bound_value) and the benchmark.
    """
    horizon = instance.horizon
    default_gamma, default_eta = default_rates(horizon)
    gamma = default_gamma if gamma is None else gamma
    eta = default_eta if eta is None else eta
    learner = Exp3VI(gamma, eta, utils.substream(seed, constants.Streams.LEARNER))
    best = best_fixed_action(instance)

    rows = np.empty((horizon, 2), dtype=int)
    realized = np.empty((horizon, 4))
    for t in range(horizon):
        i, j = learner.act()
        price, quantity = learner.prices[i], learner.quantities[j]
        feedback = min(quantity, float(instance.demands[t](price)))
        cost = float(instance.costs[t])
        learner.update(feedback, cost)
        rows[t] = (i + 1, j + 1)
        realized[t] = (price, quantity, feedback, feedback * price - quantity * cost)

    steps = np.arange(1, horizon + 1)
    params = BoundParams(gamma=gamma, eta=eta)
    frame = pd.DataFrame({
        't': steps,
        'I': rows[:, 0],
        'J': rows[:, 1],
        'P': realized[:, 0],
        'Q': realized[:, 1],
        'feedback': realized[:, 2],
        'welfare': realized[:, 3],
        'cumulative_regret': np.cumsum(best.per_round) - np.cumsum(realized[:, 3]),
        'bound_value': bound_value(constants.Bounds.EXP3VI, params, steps),
    }, columns=constants.ADVERSARIAL_COLUMNS)
    run = AdversarialRun(seed=seed, gamma=gamma, eta=eta, K=learner.K, best=best, frame=frame)
    logger.debug("Exp3VI seed=%d T=%d K=%d: regret %.6g, bound %.6g", seed, horizon, learner.K, run.regret, run.bound)
    return run


def write_adversarial(run: AdversarialRun, path: Union[str, Path]):
    run.frame.to_csv(path, index=False, float_format='%' + constants.FLOAT_FORMAT)


def exponential_weights_slack(losses: np.ndarray, eta: float) -> float:
    """
    Slack of the exponential-weights inequality on a raw loss sequence.

    With p_t proportional to exp(-eta sum_{s<t} l_s), returns
    min_k [ln K / eta + eta / 2 sum_t sum_i p_t(i) l_t(i)^2 - (sum_t sum_i p_t(i) l_t(i) - sum_t l_t(k))].

    Args:
        losses (np.ndarray): Shape (T, K), nonnegative.
        eta (float): Learning rate.

    Returns:
        float: The smallest slack over k; nonnegative when the inequality holds.

    Raises:
        exceptions.PreconditionError: On negative losses or a non-positive eta.
    """
    losses = np.atleast_2d(np.asarray(losses, dtype=float))
    if np.any(losses < 0.0):
        raise exceptions.PreconditionError(reason="losses must be nonnegative")
    if eta <= 0.0:
        raise exceptions.PreconditionError(reason=f"eta must be positive, got {eta}")
    horizon, k = losses.shape
    before = np.vstack((np.zeros((1, k)), np.cumsum(losses, axis=0)[:-1]))
    weights = special.softmax(-eta * before, axis=1)
    expected = float(np.sum(weights * losses))
    second = float(np.sum(weights * losses ** 2))
    rhs = math.log(k) / eta + eta / 2.0 * second
    lhs = expected - losses.sum(axis=0)
    return float(np.min(rhs - lhs))


def total_sales(matrix: np.ndarray, quantities: np.ndarray) -> np.ndarray:
    """
    sum_t min(q, d_t) for every price column of a T x K demand matrix and every quantity.

    Each column is sorted once; the sum splits into the demands below q plus q per remaining round.

    Returns:
        np.ndarray: Shape (K, len(quantities)).
    """
    horizon = matrix.shape[0]
    ordered = np.sort(matrix, axis=0)
    prefix = np.vstack((np.zeros((1, matrix.shape[1])), np.cumsum(ordered, axis=0)))
    sales = np.empty((matrix.shape[1], len(quantities)))
    for i in range(matrix.shape[1]):
        below = np.searchsorted(ordered[:, i], quantities, side='left')
        sales[i] = prefix[below, i] + quantities * (horizon - below)
    return sales


def discretization_gap(instance: AdversarialInstance, gamma: float) -> DiscretizationGap:
    """
    Total welfare lost by restricting fixed actions to the gamma grid.

    Returns:
        DiscretizationGap: Continuous best, grid best, their gap and the 2 gamma T allowance.
    """
    prices, quantities = price_grid(gamma)
    matrix = instance.demand_matrix(prices)
    total_cost = float(np.sum(instance.costs))
    sales = total_sales(matrix, quantities)
    grid_totals = prices[:, None] * sales - quantities[None, :] * total_cost
    grid_best = float(grid_totals.max())
    continuous_best = best_fixed_action(instance).total_welfare
    return DiscretizationGap(
        continuous_best=continuous_best,
        grid_best=grid_best,
        gap=continuous_best - grid_best,
        bound=2.0 * gamma * instance.horizon,
    )

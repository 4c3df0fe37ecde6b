"""
Joint laws of (cost C, retail price P, demand D) and the maps derived from them.

Every law exposes h(x) = E[P * Fbar(x | C, P)], strictly decreasing in x, and its
inverse g = h^-1 on (0, E[P]). The parametric families keep (C, P) deterministic and give
closed forms for h, g, their derivatives and the expected sales E[min(q, D)]; the custom law
falls back on a fixed Monte-Carlo sample drawn once at construction.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
import logging
import math
from typing import Callable, ClassVar, Optional, Union

import numpy as np
from scipy import special
from scipy.optimize import brentq

from pysupplygame import constants, exceptions, utils
from pysupplygame.models import MonteCarloEstimate

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _out(value: np.ndarray) -> ArrayLike:
    """Return python floats for scalar inputs, arrays otherwise."""
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class JointDistribution(ABC):
    family: ClassVar[constants.Families]

    @property
    @abstractmethod
    def density_floor(self) -> Optional[float]:
        """Lower bound L on f(d | p) over the support, None when the support is unbounded."""
        raise NotImplementedError

    @property
    @abstractmethod
    def support_upper(self) -> float:
        """Upper end of the support of each coordinate (math.inf for unbounded demand)."""
        raise NotImplementedError

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.support_upper) and self.support_upper <= 1.0

    @property
    def has_closed_forms(self) -> bool:
        return True

    @abstractmethod
    def expected_cost(self) -> float:
        raise NotImplementedError

    @abstractmethod
    def expected_price(self) -> float:
        raise NotImplementedError

    @abstractmethod
    def sample_batch(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Draw n i.i.d. triples.

        Args:
            rng (np.random.Generator): The caller-owned generator.
            n (int): Number of draws.

        Returns:
            tuple: Arrays (c, p, d), each of length n.
        """
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> tuple[float, float, float]:
        """Draw one (c, p, d) triple; deterministic given the generator state."""
        c, p, d = self.sample_batch(rng, 1)
        return float(c[0]), float(p[0]), float(d[0])

    @abstractmethod
    def h(self, x: ArrayLike) -> ArrayLike:
        """h(x) = E[P * Fbar(x | C, P)]."""
        raise NotImplementedError

    @abstractmethod
    def h_prime(self, x: ArrayLike) -> ArrayLike:
        """h'(x) = -E[P * f(x | C, P)]."""
        raise NotImplementedError

    @abstractmethod
    def expected_revenue(self, q: ArrayLike) -> ArrayLike:
        """E[min(q, D) * P]."""
        raise NotImplementedError

    def g(self, w: ArrayLike) -> ArrayLike:
        """
        The inverse of h on (0, E[P]).

        Args:
            w (float | np.ndarray): Wholesale price(s) strictly between 0 and E[P].

        Returns:
            float | np.ndarray: The unique x with h(x) = w.

        Raises:
            exceptions.DomainError: If any w lies outside (0, E[P]).
        """
        self._check_g_domain(w)
        closed = self._g_closed(np.asarray(w, dtype=float))
        if closed is not None:
            return _out(closed)
        values = np.vectorize(self._g_root, otypes=[float])(np.asarray(w, dtype=float))
        return _out(values)

    def g_prime(self, w: ArrayLike) -> ArrayLike:
        """g'(w) = 1 / h'(g(w)) by the inverse function theorem."""
        self._check_g_domain(w)
        closed = self._g_prime_closed(np.asarray(w, dtype=float))
        if closed is not None:
            return _out(closed)
        return _out(1.0 / np.asarray(self.h_prime(self.g(w)), dtype=float))

    def _g_closed(self, w: np.ndarray) -> Optional[np.ndarray]:
        return None

    def _g_prime_closed(self, w: np.ndarray) -> Optional[np.ndarray]:
        return None

    def _g_root(self, w: float) -> float:
        if self.h(0.0) <= w:
            return 0.0
        hi = self.support_upper if math.isfinite(self.support_upper) else 1.0
        for _ in range(constants.G_MAX_ITERATIONS):
            if self.h(hi) <= w:
                break
            hi *= 2.0
        try:
            return brentq(lambda x: float(self.h(x)) - w, 0.0, hi,
                          xtol=constants.TOL_G, maxiter=constants.G_MAX_ITERATIONS)
        except (ValueError, RuntimeError) as e:
            raise exceptions.AnalysisError(reason=f"g({w}) has no bracketed root: {e}") from e

    def _check_g_domain(self, w: ArrayLike):
        values = np.asarray(w, dtype=float)
        upper = self.expected_price()
        bad = (values <= 0.0) | (values >= upper) | ~np.isfinite(values)
        if np.any(bad):
            first = float(values[bad][0]) if values.ndim else float(values)
            raise exceptions.DomainError(name='g', value=first, domain=f"(0, E[P]) = (0, {upper})")

    def cost_estimate(self) -> MonteCarloEstimate:
        """E[C] with its standard error; exact (zero error, zero samples) for parametric laws."""
        return MonteCarloEstimate(value=self.expected_cost(), std_error=0.0, samples=0)

    def price_estimate(self) -> MonteCarloEstimate:
        """E[P] with its standard error; exact (zero error, zero samples) for parametric laws."""
        return MonteCarloEstimate(value=self.expected_price(), std_error=0.0, samples=0)

    def monte_carlo_h(self, x: float, rng: np.random.Generator, n: int = constants.MONTE_CARLO_SAMPLES) -> MonteCarloEstimate:
        """
        Unbiased sample estimate of h(x) from the indicator P * 1{D > x}.

        Args:
            x (float): Quantity at which h is estimated.
            rng (np.random.Generator): Generator for the draws.
            n (int, optional): Sample count. Defaults to constants.MONTE_CARLO_SAMPLES.

        Returns:
            MonteCarloEstimate: Sample mean, standard error and n.
        """
        _, p, d = self.sample_batch(rng, n)
        values = p * (d > x)
        return MonteCarloEstimate(value=float(values.mean()), std_error=float(values.std(ddof=1) / math.sqrt(n)), samples=n)

    def check_density_floor(self, grid_size: int = 1001) -> bool:
        """
        Check f(d | p) >= L on a grid over the declared support.

        Args:
            grid_size (int, optional): Number of grid points. Defaults to 1001.

        Returns:
            bool: True if the density never drops below the declared floor.

        Raises:
            exceptions.PreconditionError: If the support is unbounded (no floor is declared).
        """
        if self.density_floor is None or not math.isfinite(self.support_upper):
            raise exceptions.PreconditionError(reason=f"{self.family} demand has unbounded support and no density floor")
        grid = np.linspace(0.0, self.support_upper, grid_size)
        densities = -np.asarray(self.h_prime(grid), dtype=float) / self.expected_price()
        return bool(np.all(densities >= self.density_floor - 1e-12))

    def _validate_moments(self):
        if not self.expected_cost() < self.expected_price():
            raise exceptions.ConfigurationError(
                field='distribution',
                reason=f"E[C] = {self.expected_cost()} must be strictly below E[P] = {self.expected_price()}",
            )


@dataclass(frozen=True)
class _DeterministicCostPrice(JointDistribution, ABC):
    """(C, P) = (c, p) almost surely, D independent with a parametric law."""
    c: float
    p: float

    def __post_init__(self):
        if not (0.0 <= self.c and self.p > 0.0):
            raise exceptions.ConfigurationError(field='distribution', reason=f"need c >= 0 and p > 0, got c = {self.c}, p = {self.p}")
        if math.isfinite(self.support_upper) and max(self.c, self.p) > self.support_upper:
            raise exceptions.ConfigurationError(field='distribution', reason=f"c and p must lie in [0, {self.support_upper}]")
        self._validate_moments()

    def expected_cost(self) -> float:
        return float(self.c)

    def expected_price(self) -> float:
        return float(self.p)

    @abstractmethod
    def survival(self, x: ArrayLike) -> ArrayLike:
        """Fbar(x) = P(D > x)."""
        raise NotImplementedError

    @abstractmethod
    def density(self, x: ArrayLike) -> ArrayLike:
        raise NotImplementedError

    @abstractmethod
    def expected_sales(self, q: ArrayLike) -> ArrayLike:
        """E[min(q, D)] = integral of Fbar over [0, q]."""
        raise NotImplementedError

    @abstractmethod
    def quantile(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample_batch(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        d = self.quantile(rng.random(n))
        return np.full(n, float(self.c)), np.full(n, float(self.p)), d

    def h(self, x: ArrayLike) -> ArrayLike:
        return _out(self.p * np.asarray(self.survival(x), dtype=float))

    def h_prime(self, x: ArrayLike) -> ArrayLike:
        return _out(-self.p * np.asarray(self.density(x), dtype=float))

    def expected_revenue(self, q: ArrayLike) -> ArrayLike:
        return _out(self.p * np.asarray(self.expected_sales(q), dtype=float))


@dataclass(frozen=True)
class UniformDemand(_DeterministicCostPrice):
    """Deterministic (c, p), D uniform on [0, 1]."""
    family: ClassVar[constants.Families] = constants.Families.UNIFORM

    @property
    def density_floor(self) -> float:
        return 1.0

    @property
    def support_upper(self) -> float:
        return 1.0

    def survival(self, x: ArrayLike) -> ArrayLike:
        return _out(np.clip(1.0 - np.asarray(x, dtype=float), 0.0, 1.0))

    def density(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        return _out(np.where((x >= 0.0) & (x <= 1.0), 1.0, 0.0))

    def expected_sales(self, q: ArrayLike) -> ArrayLike:
        q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
        return _out(q - 0.5 * q * q)

    def quantile(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u, dtype=float)

    def _g_closed(self, w: np.ndarray) -> np.ndarray:
        return (self.p - w) / self.p

    def _g_prime_closed(self, w: np.ndarray) -> np.ndarray:
        return np.full_like(w, -1.0 / self.p)


@dataclass(frozen=True)
class WeibullDemand(_DeterministicCostPrice):
    """
    Deterministic (c, p), D Weibull with scale lam and shape k: Fbar(x) = exp(-(x/lam)^k).

    The demand support is [0, inf), so this law serves stage-game analysis only.
    """
    lam: float = 1.0
    k: float = 1.0
    family: ClassVar[constants.Families] = constants.Families.WEIBULL

    def __post_init__(self):
        if self.lam <= 0.0 or self.k <= 0.0:
            raise exceptions.ConfigurationError(field='distribution', reason=f"Weibull needs lam > 0 and k > 0, got lam = {self.lam}, k = {self.k}")
        super().__post_init__()

    @property
    def density_floor(self) -> None:
        return None

    @property
    def support_upper(self) -> float:
        return math.inf

    def survival(self, x: ArrayLike) -> ArrayLike:
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return _out(np.exp(-(x / self.lam) ** self.k))

    def density(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        z = np.maximum(x, 0.0) / self.lam
        with np.errstate(divide='ignore'):
            values = (self.k / self.lam) * z ** (self.k - 1.0) * np.exp(-z ** self.k)
        return _out(np.where(x >= 0.0, values, 0.0))

    def expected_sales(self, q: ArrayLike) -> ArrayLike:
        q = np.maximum(np.asarray(q, dtype=float), 0.0)
        return _out(self.lam * special.gamma(1.0 + 1.0 / self.k) * special.gammainc(1.0 / self.k, (q / self.lam) ** self.k))

    def quantile(self, u: np.ndarray) -> np.ndarray:
        return self.lam * (-np.log1p(-np.asarray(u, dtype=float))) ** (1.0 / self.k)

    def _g_closed(self, w: np.ndarray) -> np.ndarray:
        return self.lam * np.log(self.p / w) ** (1.0 / self.k)

    def _g_prime_closed(self, w: np.ndarray) -> np.ndarray:
        return -(self.lam / (self.k * w)) * np.log(self.p / w) ** (1.0 / self.k - 1.0)


@dataclass(frozen=True)
class TruncatedExponentialDemand(_DeterministicCostPrice):
    """Deterministic (c, p), D exponential with the given rate truncated to [0, 1]."""
    rate: float = 1.0
    family: ClassVar[constants.Families] = constants.Families.TRUNCEXP

    def __post_init__(self):
        if self.rate <= 0.0:
            raise exceptions.ConfigurationError(field='distribution', reason=f"truncated exponential needs rate > 0, got {self.rate}")
        super().__post_init__()

    @property
    def _mass(self) -> float:
        return -math.expm1(-self.rate)

    @property
    def density_floor(self) -> float:
        return self.rate * math.exp(-self.rate) / self._mass

    @property
    def support_upper(self) -> float:
        return 1.0

    def survival(self, x: ArrayLike) -> ArrayLike:
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return _out((np.exp(-self.rate * x) - math.exp(-self.rate)) / self._mass)

    def density(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        values = self.rate * np.exp(-self.rate * np.clip(x, 0.0, 1.0)) / self._mass
        return _out(np.where((x >= 0.0) & (x <= 1.0), values, 0.0))

    def expected_sales(self, q: ArrayLike) -> ArrayLike:
        q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
        return _out((-np.expm1(-self.rate * q) / self.rate - q * math.exp(-self.rate)) / self._mass)

    def quantile(self, u: np.ndarray) -> np.ndarray:
        return -np.log1p(-np.asarray(u, dtype=float) * self._mass) / self.rate

    def _g_closed(self, w: np.ndarray) -> np.ndarray:
        return -np.log(math.exp(-self.rate) + (w / self.p) * self._mass) / self.rate

    def _g_prime_closed(self, w: np.ndarray) -> np.ndarray:
        return -(self._mass / self.p) / (self.rate * (math.exp(-self.rate) + (w / self.p) * self._mass))


@dataclass(frozen=True)
class CustomDistribution(JointDistribution):
    """
    A user-supplied law given by a sampler and optional conditional callbacks.

    sampler(rng, n) returns arrays (c, p, d). survival(x, c, p) and density(x, c, p) give
    Fbar(x | c, p) and f(x | c, p) elementwise; without them h and h' are estimated from
    the empirical indicator and finite differences. Moments come from a fixed sample of
    size samples drawn once with sample_seed, so every method is deterministic.
    """
    sampler: Optional[Callable] = None
    declared_floor: Optional[float] = None
    declared_upper: float = 1.0
    survival: Optional[Callable] = None
    density: Optional[Callable] = None
    samples: int = constants.MONTE_CARLO_SAMPLES
    sample_seed: int = constants.MONTE_CARLO_SEED
    _draws: tuple = field(init=False, repr=False, compare=False, default=())
    family: ClassVar[constants.Families] = constants.Families.CUSTOM

    def __post_init__(self):
        if self.sampler is None:
            raise exceptions.ConfigurationError(field='distribution.sampler', reason="a custom law needs a sampler")
        if self.declared_floor is not None and self.declared_floor <= 0.0:
            raise exceptions.ConfigurationError(field='distribution.density_floor', reason="must be positive")
        c, p, d = (np.asarray(a, dtype=float) for a in self.sampler(utils.substream(self.sample_seed, constants.Streams.NATURE), self.samples))
        object.__setattr__(self, '_draws', (c, p, d))
        logger.debug("custom law: %d reference draws, E[C] ~ %.6g, E[P] ~ %.6g", self.samples, c.mean(), p.mean())
        self._validate_moments()

    @property
    def density_floor(self) -> Optional[float]:
        return self.declared_floor

    @property
    def support_upper(self) -> float:
        return self.declared_upper

    @property
    def has_closed_forms(self) -> bool:
        return False

    def _estimate(self, values: np.ndarray) -> MonteCarloEstimate:
        return MonteCarloEstimate(value=float(values.mean()), std_error=float(values.std(ddof=1) / math.sqrt(values.size)), samples=int(values.size))

    def cost_estimate(self) -> MonteCarloEstimate:
        return self._estimate(self._draws[0])

    def price_estimate(self) -> MonteCarloEstimate:
        return self._estimate(self._draws[1])

    def expected_cost(self) -> float:
        return float(self._draws[0].mean())

    def expected_price(self) -> float:
        return float(self._draws[1].mean())

    def sample_batch(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        c, p, d = self.sampler(rng, n)
        return np.asarray(c, dtype=float), np.asarray(p, dtype=float), np.asarray(d, dtype=float)

    def _h_scalar(self, x: float) -> float:
        c, p, d = self._draws
        if self.survival is not None:
            return float(np.mean(p * np.asarray(self.survival(x, c, p), dtype=float)))
        return float(np.mean(p * (d > x)))

    def h(self, x: ArrayLike) -> ArrayLike:
        return _out(np.vectorize(self._h_scalar, otypes=[float])(np.asarray(x, dtype=float)))

    def _h_prime_scalar(self, x: float) -> float:
        c, p, _ = self._draws
        if self.density is not None:
            return -float(np.mean(p * np.asarray(self.density(x, c, p), dtype=float)))
        return utils.central_difference(self._h_scalar, x)

    def h_prime(self, x: ArrayLike) -> ArrayLike:
        return _out(np.vectorize(self._h_prime_scalar, otypes=[float])(np.asarray(x, dtype=float)))

    def expected_revenue(self, q: ArrayLike) -> ArrayLike:
        _, p, d = self._draws
        q = np.asarray(q, dtype=float)
        return _out(np.vectorize(lambda v: float(np.mean(np.minimum(v, d) * p)), otypes=[float])(q))

    def g_prime(self, w: ArrayLike) -> ArrayLike:
        self._check_g_domain(w)
        if self.density is not None:
            return super().g_prime(w)
        return _out(np.vectorize(lambda v: utils.central_difference(self.g, v), otypes=[float])(np.asarray(w, dtype=float)))


FAMILY_CLASSES = {
    constants.Families.UNIFORM: (UniformDemand, ('c', 'p')),
    constants.Families.WEIBULL: (WeibullDemand, ('c', 'p', 'lam', 'k')),
    constants.Families.TRUNCEXP: (TruncatedExponentialDemand, ('c', 'p', 'rate')),
}


def distribution_from_dict(spec: dict) -> JointDistribution:
    """
    Build a parametric law from a tagged config record.

    Args:
        spec (dict): {"family": "uniform" | "weibull" | "truncexp", ...numeric parameters}.
            Weibull accepts "lambda" as an alias of "lam".

    Returns:
        JointDistribution: The validated law.

    Raises:
        exceptions.ConfigurationError: On an unknown family or a missing / non-numeric parameter.
    """
    if not isinstance(spec, dict) or 'family' not in spec:
        raise exceptions.ConfigurationError(field='distribution.family', reason="missing")
    spec = dict(spec)
    if 'lambda' in spec:
        spec['lam'] = spec.pop('lambda')
    family = spec.pop('family')
    if family == constants.Families.CUSTOM:
        raise exceptions.ConfigurationError(field='distribution.family', reason="custom laws carry callbacks and cannot be read from a config file")
    if family not in FAMILY_CLASSES:
        raise exceptions.ConfigurationError(field='distribution.family', reason=f"unknown family {family!r}")
    cls, names = FAMILY_CLASSES[constants.Families(family)]
    unknown = sorted(set(spec) - set(names))
    if unknown:
        raise exceptions.ConfigurationError(field=f'distribution.{unknown[0]}', reason=f"not a parameter of the {family} family")
    params = {}
    for name in names:
        if name not in spec and name in ('c', 'p'):
            raise exceptions.ConfigurationError(field=f'distribution.{name}', reason="missing")
        if name in spec:
            value = spec[name]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise exceptions.ConfigurationError(field=f'distribution.{name}', reason=f"expected a number, got {value!r}")
            params[name] = float(value)
    return cls(**params)


def require_bounded(dist: JointDistribution) -> JointDistribution:
    """
    Reject laws whose samples can leave [0, 1]^3 (the repeated-game protocol needs them bounded).

    Raises:
        exceptions.ConfigurationError: If the law has unbounded support.
    """
    if not dist.is_bounded:
        raise exceptions.ConfigurationError(field='distribution', reason=f"the {dist.family} family has unbounded support; the repeated game needs samples in [0, 1]^3")
    return dist

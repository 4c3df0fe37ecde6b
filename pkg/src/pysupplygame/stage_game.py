"""
One-shot supplier / retailer game: utilities, the retailer best response, the Stackelberg
equilibrium and the price of anarchy.
"""
import logging
import math

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from pysupplygame import constants, exceptions, utils
from pysupplygame.distributions import ArrayLike, JointDistribution, WeibullDemand, _out
from pysupplygame.models import ConcavityReport, PriceOfAnarchy, StackelbergEquilibrium

logger = logging.getLogger(__name__)


class StageGame:
    """
    The stage game induced by a joint law of (C, P, D).

    The supplier posts w, the retailer answers with a quantity q; u_S(w, q) = q (w - E[C]) and
    u_R(w, q) = E[min(q, D) P] - q w.

    Args:
        dist (JointDistribution): The law of (C, P, D).
        tol_stationary (float, optional): Tolerance on the first-order expression. Defaults to constants.TOL_STATIONARY.
        tol_unique (float, optional): Utility margin certifying a unique maximizer. Defaults to constants.TOL_UNIQUE.
        scan_grid_size (int, optional): Points of the stationary-point scan. Defaults to constants.SCAN_GRID_SIZE.
        scan_epsilon (float, optional): Distance kept from E[C] and E[P] by the scan. Defaults to constants.SCAN_EPSILON.
    """
    def __init__(self, dist: JointDistribution, tol_stationary: float = constants.TOL_STATIONARY,
                 tol_unique: float = constants.TOL_UNIQUE, scan_grid_size: int = constants.SCAN_GRID_SIZE,
                 scan_epsilon: float = constants.SCAN_EPSILON):
        self.dist = dist
        self.tol_stationary = tol_stationary
        self.tol_unique = tol_unique
        self.scan_grid_size = scan_grid_size
        self.scan_epsilon = scan_epsilon
        self.expected_cost = dist.expected_cost()
        self.expected_price = dist.expected_price()
        self._equilibrium = None

    def supplier_utility(self, w: ArrayLike, q: ArrayLike) -> ArrayLike:
        return _out(np.asarray(q, dtype=float) * (np.asarray(w, dtype=float) - self.expected_cost))

    def retailer_utility(self, w: ArrayLike, q: ArrayLike) -> ArrayLike:
        q = np.asarray(q, dtype=float)
        return _out(np.asarray(self.dist.expected_revenue(q), dtype=float) - q * np.asarray(w, dtype=float))

    def welfare(self, q: ArrayLike) -> ArrayLike:
        """Vertically integrated welfare E[min(q, D) P] - E[C] q."""
        return self.retailer_utility(self.expected_cost, q)

    def best_response(self, w: float) -> float:
        """
        The retailer's utility-maximizing quantity at wholesale price w.

        Args:
            w (float): Wholesale price, w >= 0.

        Returns:
            float: g(w) for 0 < w < E[P], 0 for w >= E[P], the top of the demand support for w <= 0.
        """
        if w >= self.expected_price:
            return 0.0
        if w <= 0.0:
            return float(self.dist.support_upper)
        return float(self.dist.g(w))

    def best_responses(self, w: np.ndarray) -> np.ndarray:
        """Vectorized best_response."""
        w = np.asarray(w, dtype=float)
        out = np.where(w >= self.expected_price, 0.0, float(self.dist.support_upper))
        interior = (w > 0.0) & (w < self.expected_price)
        if np.any(interior):
            out[interior] = np.asarray(self.dist.g(w[interior]), dtype=float)
        return out

    def supplier_objective(self, w: ArrayLike) -> ArrayLike:
        """L(w) = BR(w) (w - E[C]), the supplier's utility when the retailer best-responds."""
        w = np.asarray(w, dtype=float)
        return _out(self.best_responses(np.atleast_1d(w)).reshape(w.shape) * (w - self.expected_cost))

    def stationarity(self, w: ArrayLike) -> ArrayLike:
        """The first-order expression g'(w) (w - E[C]) + g(w) on (0, E[P])."""
        w = np.asarray(w, dtype=float)
        return _out(np.asarray(self.dist.g_prime(w), dtype=float) * (w - self.expected_cost) + np.asarray(self.dist.g(w), dtype=float))

    def solve_equilibrium(self) -> StackelbergEquilibrium:
        """
        Locate every stationary point of L on (E[C], E[P]) and return the best one.

        Returns:
            StackelbergEquilibrium: (w*, q*), both utilities, the stationary set and the uniqueness certificate.

        Raises:
            exceptions.AnalysisError: If the scan finds no sign change of the first-order expression.
        """
        if self._equilibrium is not None:
            return self._equilibrium
        lo = self.expected_cost + self.scan_epsilon
        hi = self.expected_price - self.scan_epsilon
        lo = max(lo, self.scan_epsilon)
        grid = np.linspace(lo, hi, self.scan_grid_size)
        values = np.asarray(self.stationarity(grid), dtype=float)

        points = []
        for i in range(len(grid)):
            if values[i] == 0.0:
                points.append(float(grid[i]))
            elif i + 1 < len(grid) and values[i] * values[i + 1] < 0.0:
                points.append(brentq(lambda w: float(self.stationarity(w)), float(grid[i]), float(grid[i + 1]),
                                     xtol=constants.TOL_ROOT, maxiter=constants.G_MAX_ITERATIONS))
        if not points:
            raise exceptions.AnalysisError(reason="no interior maximizer located")

        objectives = [float(self.supplier_objective(w)) for w in points]
        best = utils.argmax_first(objectives, atol=self.tol_unique)
        others = [value for i, value in enumerate(objectives) if i != best]
        margin = objectives[best] - max(others) if others else None
        unique = margin is None or margin > self.tol_unique

        w_star = points[best]
        q_star = self.best_response(w_star)
        self._equilibrium = StackelbergEquilibrium(
            w_star=w_star,
            q_star=q_star,
            supplier_utility=float(self.supplier_utility(w_star, q_star)),
            retailer_utility=float(self.retailer_utility(w_star, q_star)),
            stationary_points=points,
            unique=unique,
            margin=margin,
        )
        if not unique:
            logger.warning("stationary points %s tie within %g; keeping the smallest price", points, self.tol_unique)
        logger.debug("equilibrium w*=%.12g q*=%.12g from %d stationary point(s)", w_star, q_star, len(points))
        return self._equilibrium

    def integrated_quantity(self) -> float:
        """The quantity maximizing the vertically integrated welfare."""
        if self.expected_cost <= 0.0:
            return float(self.dist.support_upper)
        upper = self.dist.support_upper
        if not math.isfinite(upper):
            upper = float(self.dist.g(0.5 * self.expected_cost))
        result = minimize_scalar(lambda q: -float(self.welfare(q)), bounds=(0.0, upper), method='bounded', options={'xatol': 1e-12})
        return float(result.x)

    def price_of_anarchy(self) -> PriceOfAnarchy:
        """
        Compare the integrated optimum with the welfare at the Stackelberg equilibrium.

        Returns:
            PriceOfAnarchy: Both welfares, the integrated quantity and their ratio (>= 1).
        """
        se = self.solve_equilibrium()
        quantity = self.integrated_quantity()
        if math.isfinite(quantity):
            optimal = float(self.welfare(quantity))
        else:
            optimal = float(self.dist.expected_revenue(quantity))
        equilibrium = se.supplier_utility + se.retailer_utility
        return PriceOfAnarchy(
            optimal_welfare=optimal,
            equilibrium_welfare=equilibrium,
            integrated_quantity=quantity,
            ratio=optimal / equilibrium,
        )

    def retailer_benchmark(self) -> float:
        """E[rho(q*; w*, P, D)], the retailer's utility at the equilibrium."""
        return self.solve_equilibrium().retailer_utility

    def supplier_benchmark(self) -> float:
        """E[sigma(w*; q*, C)] = q* (w* - E[C])."""
        return self.solve_equilibrium().supplier_utility


def weibull_second_derivative(w: ArrayLike, c: float, p: float, lam: float, k: float) -> ArrayLike:
    """
    Closed-form L''(w) for L(w) = g(w) (w - c) under Weibull demand.

    L''(w) = -lam / (k^2 w^2) * ln(p/w)^(1/k - 2) * (k (w + c) ln(p/w) + (k - 1) (w - c))
    """
    w = np.asarray(w, dtype=float)
    u = np.log(p / w)
    return _out(-lam / (k * k * w * w) * u ** (1.0 / k - 2.0) * (k * (w + c) * u + (k - 1.0) * (w - c)))


def verify_weibull_uniqueness(c: float, p: float, lam: float, k: float, grid_size: int = 1000,
                              step: float = constants.CONCAVITY_STEP,
                              tol: float = constants.TOL_STATIONARY) -> ConcavityReport:
    """
    Check concavity of L(w) = g(w) (w - c) on (c, p) by central second differences.

    Args:
        c (float): Deterministic cost, 0 < c < p.
        p (float): Deterministic retail price.
        lam (float): Weibull scale, lam > 0.
        k (float): Weibull shape, k >= 1.
        grid_size (int, optional): Number of grid points. Defaults to 1000.
        step (float, optional): Finite-difference step. Defaults to constants.CONCAVITY_STEP.
        tol (float, optional): Largest L'' still counted as concave. Defaults to constants.TOL_STATIONARY.

    Returns:
        ConcavityReport: Whether L'' <= tol everywhere on the grid and the largest L'' seen.

    Raises:
        exceptions.PreconditionError: If k < 1 or the other parameters are out of range.
    """
    if k < 1.0:
        raise exceptions.PreconditionError(reason=f"the concavity check needs a Weibull shape k >= 1, got k = {k}")
    if not (0.0 < c < p) or lam <= 0.0:
        raise exceptions.PreconditionError(reason=f"need 0 < c < p and lam > 0, got c = {c}, p = {p}, lam = {lam}")
    dist = WeibullDemand(c=c, p=p, lam=lam, k=k)

    def objective(w: float) -> float:
        return float(dist.g(w)) * (w - c)

    grid = np.linspace(c + 2.0 * step, p - 2.0 * step, grid_size)
    second = np.array([utils.second_difference(objective, float(w), step) for w in grid])
    largest = float(second.max())
    logger.debug("Weibull(lam=%g, k=%g) on (%g, %g): max L'' = %.6g", lam, k, c, p, largest)
    return ConcavityReport(concave=largest <= tol, max_second_derivative=largest, grid_size=grid_size)

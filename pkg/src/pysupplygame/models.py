from dataclasses import asdict, dataclass, field, fields
from enum import Enum
import json
from typing import List, Optional, Self

import numpy as np

from pysupplygame import constants, exceptions


class BaseModel:
    def json(self, indent=None) -> str:
        """Converts the object to a JSON string."""
        return json.dumps(self, default=self._json_default, indent=indent, sort_keys=True)

    def to_dict(self) -> dict:
        """Converts the object to a plain dictionary of JSON-compatible values."""
        return json.loads(self.json())

    @classmethod
    def from_dict(cls, data: dict) -> Self:
        """Helper method to create a BaseModel object from a dictionary.

        Args:
            data (dict): The dictionary to create the object from.

        Returns:
            Self: The created BaseModel object.
        """
        return cls(**{key: data[key] for key in cls.__dataclass_fields__ if key in data})

    @staticmethod
    def _json_default(obj):
        """Helper method to convert non-serializable objects."""
        if isinstance(obj, BaseModel):
            return asdict(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, np.generic):
            return obj.item()
        if isinstance(obj, Enum):
            return obj.value
        raise TypeError(f"Object of type {type(obj)} is not JSON serializable")


@dataclass
class MonteCarloEstimate(BaseModel):
    value: float
    std_error: float
    samples: int

    def covers(self, reference: float, width: float = 3.0) -> bool:
        """Whether reference lies within width standard errors of the estimate."""
        return abs(self.value - reference) <= width * self.std_error + 1e-15


@dataclass
class StackelbergEquilibrium(BaseModel):
    w_star: float
    q_star: float
    supplier_utility: float
    retailer_utility: float
    stationary_points: List[float]
    unique: bool
    margin: Optional[float]


@dataclass
class PriceOfAnarchy(BaseModel):
    optimal_welfare: float
    equilibrium_welfare: float
    integrated_quantity: float
    ratio: float


@dataclass
class ConcavityReport(BaseModel):
    concave: bool
    max_second_derivative: float
    grid_size: int


@dataclass
class RoundRecord(BaseModel):
    t: int
    w: float
    q: float
    c: float
    p: float
    d: float
    sigma: float
    rho: float

    def __post_init__(self):
        if self.sigma is None:
            self.sigma = self.q * self.w - self.q * self.c
        if self.rho is None:
            self.rho = min(self.q, self.d) * self.p - self.q * self.w


@dataclass
class RegretReport(BaseModel):
    horizon: int
    supplier_avg_regret: float
    retailer_avg_regret: float
    l1_last_iterate: float
    bound_name: str
    bound_value: float
    metric: float
    bound_curve: List[float] = field(repr=False)

    @property
    def compliant(self) -> bool:
        """Whether the quantity the bound constrains stays below it."""
        return self.metric <= self.bound_value


@dataclass
class BoundParams(BaseModel):
    """Instance constants the theoretical bound curves are evaluated with."""
    expected_cost: Optional[float] = None
    expected_price: Optional[float] = None
    density_floor: Optional[float] = None
    lipschitz: Optional[float] = None
    gamma: Optional[float] = None
    eta: Optional[float] = None


@dataclass
class VIRoundRecord(BaseModel):
    t: int
    i: int
    j: int
    price: float
    quantity: float
    feedback: float
    welfare: float


@dataclass
class DiscretizationGap(BaseModel):
    continuous_best: float
    grid_best: float
    gap: float
    bound: float


@dataclass
class EpisodeSummary(BaseModel):
    """What one (horizon, seed) job leaves behind in the result store."""
    mode: str
    horizon: int
    seed: int
    regret: float
    bound: Optional[float]
    compliant: Optional[bool]
    metrics: dict
    trajectory_file: str

    @property
    def key(self) -> str:
        return run_key(self.horizon, self.seed)


def run_key(horizon: int, seed: int) -> str:
    return f'T{int(horizon)}-seed{int(seed)}'


@dataclass
class AggregateRow(BaseModel):
    horizon: int
    count: int
    mean: float
    std: float
    min: float
    max: float
    bound: Optional[float]
    compliance: Optional[float]
    small_sample: bool


@dataclass
class PolicySpec(BaseModel):
    name: str
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data) -> Self:
        if isinstance(data, str):
            return cls(name=data)
        if not isinstance(data, dict) or 'name' not in data:
            raise exceptions.ConfigurationError(field='policy', reason=f"expected a name or a {{name, params}} record, got {data!r}")
        return cls(name=data['name'], params=dict(data.get('params', {})))


@dataclass
class ExperimentConfig(BaseModel):
    mode: str
    horizons: List[int]
    seeds: List[int]
    output_dir: str
    distribution: Optional[dict] = None
    instance: Optional[dict] = None
    supplier: Optional[PolicySpec] = None
    retailer: Optional[PolicySpec] = None
    bounds: List[str] = field(default_factory=list)
    workers: int = 1
    gamma: Optional[float] = None
    eta: Optional[float] = None

    @classmethod
    def from_dict(cls, data: dict) -> Self:
        """Create and validate an ExperimentConfig.

        Args:
            data (dict): The decoded config file.

        Returns:
            ExperimentConfig: The validated config.

        Raises:
            exceptions.ConfigurationError: On the first invalid or inconsistent field.
        """
        if not isinstance(data, dict):
            raise exceptions.ConfigurationError(field='<root>', reason="config must be a JSON object")
        known = {f.name for f in fields(cls)} | {'seed_base', 'seed_count'}
        unknown = sorted(set(data) - known)
        if unknown:
            raise exceptions.ConfigurationError(field=unknown[0], reason="unknown field")
        try:
            mode = constants.Modes(data.get('mode'))
        except ValueError:
            raise exceptions.ConfigurationError(field='mode', reason=f"expected one of {[m.value for m in constants.Modes]}, got {data.get('mode')!r}")

        seeds = cls._parse_seeds(data, required=mode != constants.Modes.SOLVE_SE)
        horizons = data.get('horizons', [] if mode == constants.Modes.SOLVE_SE else None)
        if horizons is None:
            raise exceptions.ConfigurationError(field='horizons', reason="missing")
        if not isinstance(horizons, list) or any(not isinstance(h, int) or isinstance(h, bool) or h < 1 for h in horizons):
            raise exceptions.ConfigurationError(field='horizons', reason="expected a list of integers >= 1")
        if mode != constants.Modes.SOLVE_SE and not horizons:
            raise exceptions.ConfigurationError(field='horizons', reason="at least one horizon is required")

        supplier = PolicySpec.from_dict(data['supplier']) if data.get('supplier') is not None else None
        retailer = PolicySpec.from_dict(data['retailer']) if data.get('retailer') is not None else None
        config = cls(
            mode=mode,
            horizons=list(horizons),
            seeds=seeds,
            output_dir=str(data.get('output_dir', 'runs')),
            distribution=data.get('distribution'),
            instance=data.get('instance'),
            supplier=supplier,
            retailer=retailer,
            bounds=list(data.get('bounds', [])),
            workers=int(data.get('workers', 1)),
            gamma=data.get('gamma'),
            eta=data.get('eta'),
        )
        config._validate()
        return config

    @staticmethod
    def _parse_seeds(data: dict, required: bool) -> List[int]:
        if 'seeds' in data:
            seeds = data['seeds']
            if not isinstance(seeds, list) or any(not isinstance(s, int) or isinstance(s, bool) for s in seeds):
                raise exceptions.ConfigurationError(field='seeds', reason="expected a list of integers")
        elif 'seed_count' in data:
            count = data['seed_count']
            base = data.get('seed_base', 0)
            if not isinstance(count, int) or not isinstance(base, int) or count < 0:
                raise exceptions.ConfigurationError(field='seed_count', reason="seed_base and seed_count must be integers, seed_count >= 0")
            seeds = list(range(base, base + count))
        else:
            seeds = [] if not required else None
        if seeds is None:
            raise exceptions.ConfigurationError(field='seeds', reason="give either seeds or seed_base/seed_count")
        if required and len(seeds) == 0:
            raise exceptions.ConfigurationError(field='seeds', reason="at least one seed is required")
        if len(set(seeds)) != len(seeds):
            raise exceptions.ConfigurationError(field='seeds', reason="seeds must be distinct")
        return list(seeds)

    def _validate(self):
        if self.workers < 1:
            raise exceptions.ConfigurationError(field='workers', reason="must be >= 1")
        if self.mode in (constants.Modes.SOLVE_SE, constants.Modes.SIMULATE) and self.distribution is None:
            raise exceptions.ConfigurationError(field='distribution', reason=f"required in {self.mode} mode")
        if self.mode == constants.Modes.ADVERSARIAL:
            if self.instance is None:
                raise exceptions.ConfigurationError(field='instance', reason="required in adversarial mode")
            for name in ('gamma', 'eta'):
                value = getattr(self, name)
                if value is not None and (not isinstance(value, (int, float)) or value <= 0):
                    raise exceptions.ConfigurationError(field=name, reason="must be a positive number")
        if self.mode == constants.Modes.SIMULATE:
            self._validate_policies()
        for bound in self.bounds:
            if bound not in set(constants.Bounds):
                raise exceptions.ConfigurationError(field='bounds', reason=f"unknown bound id {bound!r}")
        self._validate_bounds()

    def _validate_policies(self):
        if self.supplier is None or self.retailer is None:
            raise exceptions.ConfigurationError(field='supplier' if self.supplier is None else 'retailer', reason="required in simulate mode")
        if self.supplier.name not in set(constants.Suppliers):
            raise exceptions.ConfigurationError(field='supplier.name', reason=f"unknown supplier policy {self.supplier.name!r}")
        if self.retailer.name not in set(constants.Retailers):
            raise exceptions.ConfigurationError(field='retailer.name', reason=f"unknown retailer policy {self.retailer.name!r}")
        cube_root_policies = {constants.Suppliers.ETC_NOCOST, constants.Retailers.FTL}
        for spec in (self.supplier, self.retailer):
            if spec.name in cube_root_policies and min(self.horizons) < constants.MIN_CUBE_ROOT_HORIZON:
                raise exceptions.ConfigurationError(
                    field='horizons',
                    reason=f"policy {spec.name!r} takes input horizon T >= {constants.MIN_CUBE_ROOT_HORIZON}, got T = {min(self.horizons)}",
                )

    def _validate_bounds(self):
        supplier = self.supplier.name if self.supplier else None
        retailer = self.retailer.name if self.retailer else None
        requirements = {
            constants.Bounds.ETC_SUPPLIER: (supplier == constants.Suppliers.ETC, "requires supplier 'etc'"),
            constants.Bounds.ETC_RETAILER: (supplier == constants.Suppliers.ETC and retailer == constants.Retailers.EXACT, "requires supplier 'etc' and retailer 'exact'"),
            constants.Bounds.ETC_LAST_ITERATE: (supplier == constants.Suppliers.ETC and retailer == constants.Retailers.EXACT, "requires supplier 'etc' and retailer 'exact'"),
            constants.Bounds.LIPSCHITZ_SIMPLE: (supplier == constants.Suppliers.PIYAVSKII, "requires supplier 'piyavskii'"),
            constants.Bounds.LIPSCHITZ_AVERAGE: (supplier == constants.Suppliers.PIYAVSKII, "requires supplier 'piyavskii'"),
            constants.Bounds.ETC_FTL_SUPPLIER: (supplier == constants.Suppliers.ETC_NOCOST, "requires supplier 'etc-nocost'"),
            constants.Bounds.EXP3VI: (self.mode == constants.Modes.ADVERSARIAL, "requires adversarial mode"),
            constants.Bounds.EXP3VI_TUNED: (self.mode == constants.Modes.ADVERSARIAL, "requires adversarial mode"),
        }
        for bound in self.bounds:
            consistent, reason = requirements[constants.Bounds(bound)]
            if not consistent:
                raise exceptions.ConfigurationError(field='bounds', reason=f"bound {bound!r} {reason}")

    @property
    def primary_bound(self) -> Optional[str]:
        """The bound the aggregate compliance column is checked against."""
        if self.bounds:
            return self.bounds[0]
        if self.mode == constants.Modes.ADVERSARIAL:
            return constants.Bounds.EXP3VI
        if self.supplier is not None:
            return constants.SUPPLIER_BOUNDS.get(self.supplier.name)
        return None


@dataclass
class AggregateReport(BaseModel):
    """Contents of aggregate.json; free of timestamps so reruns are byte-identical."""
    mode: str
    config_hash: str
    bound: Optional[str]
    horizons: List[int]
    seeds: List[int]
    rows: List[AggregateRow]
    missing: List[str]

    @property
    def seed_count(self) -> int:
        return len(self.seeds)

    @classmethod
    def from_dict(cls, data: dict) -> Self:
        report = super().from_dict(data)
        report.rows = [AggregateRow.from_dict(row) if isinstance(row, dict) else row for row in report.rows]
        return report

from enum import StrEnum


class Families(StrEnum):
    UNIFORM = 'uniform'
    WEIBULL = 'weibull'
    TRUNCEXP = 'truncexp'
    CUSTOM = 'custom'

class Modes(StrEnum):
    SOLVE_SE = 'solve-se'
    SIMULATE = 'simulate'
    ADVERSARIAL = 'adversarial'

class Suppliers(StrEnum):
    ETC = 'etc'
    PIYAVSKII = 'piyavskii'
    ETC_NOCOST = 'etc-nocost'
    CONSTANT = 'constant'

class Retailers(StrEnum):
    EXACT = 'exact'
    FTL = 'ftl'

class Bounds(StrEnum):
    ETC_SUPPLIER = 'etc-supplier'
    ETC_RETAILER = 'etc-retailer'
    ETC_LAST_ITERATE = 'etc-last-iterate'
    LIPSCHITZ_SIMPLE = 'lipschitz-simple'
    LIPSCHITZ_AVERAGE = 'lipschitz-average'
    ETC_FTL_SUPPLIER = 'etc-ftl-supplier'
    EXP3VI = 'exp3vi'
    EXP3VI_TUNED = 'exp3vi-tuned'

# Bounds that certify the supplier's time-averaged regret, keyed by the supplier policy they hold for.
SUPPLIER_BOUNDS = {
    Suppliers.ETC: Bounds.ETC_SUPPLIER,
    Suppliers.PIYAVSKII: Bounds.LIPSCHITZ_AVERAGE,
    Suppliers.ETC_NOCOST: Bounds.ETC_FTL_SUPPLIER,
}

class DemandShapes(StrEnum):
    THRESHOLD = 'threshold'
    LINEAR = 'linear'
    PIECEWISE = 'piecewise'

class Instances(StrEnum):
    IID_UNIFORM_POSTED_PRICE = 'iid-uniform-posted-price'
    CONSTANT_POSTED_PRICE = 'constant-posted-price'
    EQUAL_REVENUE_POSTED_PRICE = 'equal-revenue-posted-price'
    FILE = 'file'

class Streams(StrEnum):
    NATURE = 'nature'
    RETAILER = 'retailer'
    LEARNER = 'learner'
    INSTANCE = 'instance'

STREAM_IDS = {
    Streams.NATURE: 0,
    Streams.RETAILER: 2,
    Streams.LEARNER: 3,
    Streams.INSTANCE: 4,
}

# Numerical tolerances
TOL_G = 1e-10
G_MAX_ITERATIONS = 200
TOL_STATIONARY = 1e-9
TOL_ROOT = 1e-12
TOL_UNIQUE = 1e-7
SCAN_GRID_SIZE = 10_000
SCAN_EPSILON = 1e-9
FINITE_DIFFERENCE_STEP = 1e-6
CONCAVITY_STEP = 1e-4
MONTE_CARLO_SAMPLES = 100_000
MONTE_CARLO_SEED = 20_240_101
BEST_FIXED_GRID_STEP = 1e-4
PRICE_GRID_DECIMALS = 12

# FTL and ETC without E[C] are only defined for horizons of at least this length
MIN_CUBE_ROOT_HORIZON = 12

TRAJECTORY_COLUMNS = ['t', 'w', 'q', 'c', 'p', 'd', 'sigma', 'rho']
ADVERSARIAL_COLUMNS = ['t', 'I', 'J', 'P', 'Q', 'feedback', 'welfare', 'cumulative_regret', 'bound_value']
FLOAT_FORMAT = '.17g'

OUTPUT_DIR_ENV = 'PYSUPPLYGAME_OUT'
MANIFEST_FILE = 'manifest.json'
AGGREGATE_FILE = 'aggregate.json'
EQUILIBRIUM_FILE = 'equilibrium.json'
RESULTS_STORE_FILE = 'results.sqlite'
TRAJECTORY_DIR = 'trajectories'

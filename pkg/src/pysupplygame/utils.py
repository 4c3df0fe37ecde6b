import hashlib
import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Union

import numpy as np

from pysupplygame import constants, exceptions


@dataclass
class ListDiff:
    list1: list
    list2: list
    common: list
    unique1: list
    unique2: list


def list_diff(list1: Iterable, list2: Iterable) -> ListDiff:
    """
    Compare two collections of hashable items.

    Args:
        list1 (Iterable): The first collection.
        list2 (Iterable): The second collection.

    Returns:
        ListDiff: The common items and the items unique to each side, each sorted.
    """
    set1 = set(list1)
    set2 = set(list2)
    return ListDiff(
        list(list1), list(list2),
        sorted(set1 & set2), sorted(set1 - set2), sorted(set2 - set1),
    )


def argmax_first(values: Union[np.ndarray, list], atol: float = 0.0) -> int:
    """
    Index of the maximum, ties broken toward the smallest index.

    Args:
        values (np.ndarray | list): The values to scan.
        atol (float, optional): Values within atol of the maximum count as ties. Defaults to 0.

    Returns:
        int: The smallest index whose value is a (tied) maximum.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("argmax of an empty sequence.")
    best = np.max(values)
    return int(np.flatnonzero(values >= best - atol)[0])


def isqrt(n: int) -> int:
    """floor(n^(1/2)) computed exactly."""
    return math.isqrt(int(n))


def ceil_cbrt(n: int) -> int:
    """ceil(n^(1/3)) computed exactly for integers (floating cube roots misround perfect cubes)."""
    n = int(n)
    if n <= 0:
        return 0
    root = int(round(n ** (1.0 / 3.0)))
    while root ** 3 < n:
        root += 1
    while root > 1 and (root - 1) ** 3 >= n:
        root -= 1
    return root


def central_difference(func: Callable[[float], float], x: float, step: float = constants.FINITE_DIFFERENCE_STEP) -> float:
    """First derivative by a central finite difference."""
    return (func(x + step) - func(x - step)) / (2.0 * step)


def second_difference(func: Callable[[float], float], x: float, step: float = constants.CONCAVITY_STEP) -> float:
    """Second derivative by a central finite difference."""
    return (func(x + step) - 2.0 * func(x) + func(x - step)) / (step * step)


def substream(seed: int, stream: str) -> np.random.Generator:
    """
    A counter-based generator for one named stream of one seeded run.

    Distinct (seed, stream) pairs map to distinct Philox keys, so parallel runs never share draws.

    Args:
        seed (int): The run seed.
        stream (str): One of constants.Streams.

    Returns:
        np.random.Generator: A Philox-backed generator.
    """
    if stream not in constants.STREAM_IDS:
        raise exceptions.ConfigurationError(field='stream', reason=f"unknown random stream {stream!r}")
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(constants.STREAM_IDS[stream],))
    return np.random.Generator(np.random.Philox(sequence))


def format_float(value: float) -> str:
    """Serialize a float with 17 significant digits (bit-stable round trip)."""
    return format(float(value), constants.FLOAT_FORMAT)


def canonical_json(payload) -> str:
    """Deterministic JSON text: sorted keys, no insignificant whitespace."""
    return json.dumps(payload, sort_keys=True, separators=(',', ':'))


def content_hash(payload) -> str:
    """
    Git-style blob hash of a JSON-serializable payload.

    Args:
        payload: Any JSON-serializable object.

    Returns:
        str: sha1 of "blob <len>\\0" followed by the canonical JSON bytes.
    """
    body = canonical_json(payload).encode('utf-8')
    return hashlib.sha1(b'blob ' + str(len(body)).encode('ascii') + b'\0' + body).hexdigest()


def grid_count(gamma: float) -> int:
    """K = ceil(1 / gamma), robust to 1 / gamma landing a hair above an integer."""
    return max(1, math.ceil(1.0 / gamma - 1e-12))

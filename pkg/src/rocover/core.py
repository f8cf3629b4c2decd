"""Domain types for machine covering: instances, arrival orders, schedules.

Covering instances are order-free multisets of job sizes together with a
machine count; the arrival order is a separate object so that one instance
can be replayed under many permutations.  All sizes are non-negative 64-bit
floats.  Generators that need exact arithmetic emit dyadic or integer values,
which double precision represents exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Instance",
    "Order",
    "RankStats",
    "Schedule",
    "rank_stats",
    "round_down_pow2",
    "harmonic",
]


class Instance:
    """An order-free covering instance: ``m`` identical machines, job sizes.

    Sizes are held in a read-only numpy array; zero sizes are legal (the
    two-phase scheduler pads with them).
    """

    __slots__ = ("m", "sizes")

    def __init__(self, m: int, sizes) -> None:
        if m < 1:
            raise ValueError(f"machine count must be >= 1, got {m}")
        arr = np.asarray(sizes, dtype=np.float64).copy()
        if arr.ndim != 1:
            raise ValueError("sizes must be a flat sequence")
        if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < 0.0):
            raise ValueError("sizes must be finite and non-negative")
        arr.setflags(write=False)
        self.m = int(m)
        self.sizes = arr

    @property
    def n(self) -> int:
        return int(self.sizes.size)

    @property
    def total_size(self) -> float:
        return math.fsum(self.sizes)

    def to_json(self) -> str:
        return json.dumps({"m": self.m, "sizes": [float(s) for s in self.sizes]})

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        data = json.loads(text)
        if not isinstance(data, dict) or "m" not in data or "sizes" not in data:
            raise ValueError('instance JSON must be {"m": int, "sizes": [...]}')
        return cls(int(data["m"]), data["sizes"])

    def __repr__(self) -> str:
        return f"Instance(m={self.m}, n={self.n})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Instance)
            and self.m == other.m
            and self.sizes.shape == other.sizes.shape
            and bool(np.all(self.sizes == other.sizes))
        )


@dataclass(frozen=True)
class Order:
    """An arrival order: ``perm[i]`` is the job index revealed at position i.

    ``provenance`` records where the permutation came from ("given" for an
    adversarial order, "uniform" for a random draw).
    """

    perm: tuple[int, ...]
    provenance: str = "given"
    seed: int | None = None

    def __post_init__(self) -> None:
        n = len(self.perm)
        if sorted(self.perm) != list(range(n)):
            raise ValueError("perm must be a permutation of 0..n-1")

    @property
    def n(self) -> int:
        return len(self.perm)

    @classmethod
    def given(cls, perm) -> "Order":
        return cls(tuple(int(i) for i in perm), provenance="given")

    @classmethod
    def identity(cls, n: int) -> "Order":
        return cls(tuple(range(n)), provenance="given")

    @classmethod
    def uniform(cls, n: int, rng: np.random.Generator, seed: int | None = None) -> "Order":
        return cls(tuple(int(i) for i in rng.permutation(n)), provenance="uniform", seed=seed)

    def arrival_sizes(self, instance: Instance) -> np.ndarray:
        return instance.sizes[np.asarray(self.perm, dtype=np.intp)]


@dataclass(frozen=True)
class RankStats:
    """Sizes sorted non-increasingly plus their suffix sums.

    Ranks are 1-based: ``nth_largest(1)`` is the biggest job.  Ties are broken
    stably by original job index, so equal sizes keep their input order.
    ``tail_sum(i)`` is the total size of the i-th largest job and everything
    smaller; ``tail_sum(n + 1)`` is 0.
    """

    sizes_desc: np.ndarray
    tail_sums: np.ndarray
    rank_order: np.ndarray  # job index at each rank (the tie-breaker witness)

    @property
    def n(self) -> int:
        return int(self.sizes_desc.size)

    def nth_largest(self, i: int) -> float:
        if not 1 <= i <= self.n:
            raise IndexError(f"rank {i} out of range 1..{self.n}")
        return float(self.sizes_desc[i - 1])

    def tail_sum(self, i: int) -> float:
        if not 1 <= i <= self.n + 1:
            raise IndexError(f"rank {i} out of range 1..{self.n + 1}")
        if i == self.n + 1:
            return 0.0
        return float(self.tail_sums[i - 1])


def rank_stats(instance: Instance) -> RankStats:
    """Sort sizes descending (stable in job index) and take suffix sums.

    Suffix sums accumulate in extended precision, so the head sum matches
    ``math.fsum`` of the sizes to well under 1e-12 relative error even for
    million-job instances.
    """
    sizes = instance.sizes
    order = np.argsort(-sizes, kind="stable")
    desc = sizes[order]
    tails = np.cumsum(desc[::-1], dtype=np.longdouble)[::-1].astype(np.float64)
    desc.setflags(write=False)
    tails.setflags(write=False)
    order.setflags(write=False)
    return RankStats(sizes_desc=desc, tail_sums=tails, rank_order=order)


class Schedule:
    """A (possibly partial) assignment of arrivals to machines.

    ``assignment[i]`` is the machine that received the i-th arrival; ``loads``
    accumulates raw sizes.  Mutated only by the scheduler run that owns it.
    """

    __slots__ = ("m", "assignment", "loads")

    def __init__(self, m: int) -> None:
        if m < 1:
            raise ValueError("need at least one machine")
        self.m = int(m)
        self.assignment: list[int] = []
        self.loads: list[float] = [0.0] * self.m

    def assign(self, machine: int, size: float) -> None:
        if not 0 <= machine < self.m:
            raise IndexError(f"machine {machine} out of range")
        self.assignment.append(machine)
        self.loads[machine] += size

    @property
    def min_load(self) -> float:
        return min(self.loads)

    def jobs_on(self, machine: int) -> list[int]:
        return [i for i, mach in enumerate(self.assignment) if mach == machine]

    def __repr__(self) -> str:
        return f"Schedule(m={self.m}, placed={len(self.assignment)}, min_load={self.min_load})"


def round_down_pow2(size: float) -> float:
    """Largest power of two (any integer exponent) not exceeding ``size``.

    Zero maps to zero.  Uses the float's own binary exponent, so the result
    is exact for every representable input.
    """
    if size < 0:
        raise ValueError("size must be non-negative")
    if size == 0.0:
        return 0.0
    mantissa, exponent = math.frexp(size)  # size = mantissa * 2**exponent, 0.5 <= m < 1
    return math.ldexp(1.0, exponent - 1)


def round_down_pow2_array(sizes: np.ndarray) -> np.ndarray:
    """Vectorized :func:`round_down_pow2` over a float array."""
    sizes = np.asarray(sizes, dtype=np.float64)
    _, exponent = np.frexp(sizes)
    out = np.ldexp(1.0, exponent - 1)
    out[sizes == 0.0] = 0.0
    return out


def harmonic(m: int) -> float:
    """The m-th harmonic number, summed directly."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return math.fsum(1.0 / i for i in range(1, m + 1))

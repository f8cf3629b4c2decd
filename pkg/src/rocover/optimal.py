"""Offline optimum, analytic bounds, and the large-job instance taxonomy.

The exact optimum is found by incumbent branch-and-bound over assignments:
jobs are placed in descending size order, machines with identical loads are
interchangeable (only the first is branched on), and subtrees are cut with a
fractional water-filling bound.  The returned value is the minimum machine
load of an actual assignment, so it agrees bit-for-bit with brute-force
enumeration whenever distinct assignment values are further apart than the
last few ulps (always true for integer or dyadic sizes).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Instance, Order, RankStats, Schedule, rank_stats

__all__ = [
    "OptResult",
    "Taxonomy",
    "BudgetExhausted",
    "opt_exact",
    "opt_upper_bound",
    "greedy_lower_bounds",
    "classify",
    "exact_rom_value",
]

DEFAULT_NODE_BUDGET = 5_000_000


@dataclass(frozen=True)
class OptResult:
    """Outcome of an optimum computation.

    ``method`` is "exact" when branch-and-bound finished, else
    "upper-bound-only" (the value is then the average load, which can only
    overestimate the optimum).
    """

    value: float
    witness: Schedule | None
    method: str
    nodes: int = 0


@dataclass(frozen=True)
class Taxonomy:
    """Large-job census of an instance relative to a reference optimum.

    A job is large when its size exceeds ``opt / (100 * m**0.25)``.  The
    instance is "simple" when it has fewer jobs than machines, at least m
    large jobs, or at most ``m - m**0.75 / 50`` of them; otherwise it is
    "proper" with degree ``ceil(log2(m - k))``.  The census is an analysis
    device only; no online scheduler consults it.
    """

    opt: float
    large_threshold: float
    k: int
    kind: str  # "simple" | "proper"
    reason: str | None  # "n<m" | "k>=m" | "k-small" for simple instances
    degree: int | None  # set for proper instances

    @property
    def is_simple(self) -> bool:
        return self.kind == "simple"


class BudgetExhausted(Exception):
    """Raised internally when the node budget runs out."""


def opt_upper_bound(instance: Instance) -> float:
    """Average machine load; no assignment can cover above it."""
    return instance.total_size / instance.m


def _water_level(loads: list[float], remaining: float) -> float:
    """Max-min level reachable if the remaining size were divisible freely."""
    ls = sorted(loads)
    level = ls[0]
    r = remaining
    width = 1
    m = len(ls)
    while width < m and r > 0.0:
        gap = (ls[width] - level) * width
        if gap <= r:
            r -= gap
            level = ls[width]
            width += 1
        else:
            level += r / width
            r = 0.0
    if r > 0.0:
        level += r / m
    return level


def _greedy_descending(sizes: list[float], m: int) -> list[int]:
    """Least-loaded placement of descending sizes; a strong incumbent."""
    import heapq

    heap = [(0.0, mach) for mach in range(m)]
    out = []
    for s in sizes:
        load, mach = heapq.heappop(heap)
        out.append(mach)
        heapq.heappush(heap, (load + s, mach))
    return out


def _min_fsum_load(bags: list[list[float]]) -> float:
    return min(math.fsum(bag) for bag in bags)


def opt_exact(instance: Instance, node_budget: int = DEFAULT_NODE_BUDGET) -> OptResult:
    """Exact maximum over assignments of the minimum machine load.

    Desk scale: guaranteed to finish comfortably for n <= 20, m <= 6.  On
    budget exhaustion returns the average-load upper bound instead, flagged
    via ``method``.
    """
    m = instance.m
    order = np.argsort(-instance.sizes, kind="stable")
    sizes_desc = [float(instance.sizes[i]) for i in order]
    positive = [s for s in sizes_desc if s > 0.0]

    if len(positive) < m:
        # Some machine inevitably stays empty.
        witness = Schedule(m)
        for s in instance.sizes:
            witness.assign(0, float(s))
        return OptResult(value=0.0, witness=witness, method="exact", nodes=0)

    n = len(sizes_desc)
    suffix = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + sizes_desc[i]

    best_assign = _greedy_descending(sizes_desc, m)
    bags: list[list[float]] = [[] for _ in range(m)]
    for mach, s in zip(best_assign, sizes_desc):
        bags[mach].append(s)
    best_val = _min_fsum_load(bags)
    best_solution = list(best_assign)

    loads = [0.0] * m
    current = [0] * n
    nodes = 0

    def dfs(j: int) -> None:
        nonlocal best_val, best_solution, nodes
        nodes += 1
        if nodes > node_budget:
            raise BudgetExhausted
        if j == n:
            leaf_bags: list[list[float]] = [[] for _ in range(m)]
            for idx in range(n):
                leaf_bags[current[idx]].append(sizes_desc[idx])
            val = _min_fsum_load(leaf_bags)
            if val > best_val:
                best_val = val
                best_solution = current[:]
            return
        if _water_level(loads, suffix[j]) <= best_val:
            return
        size = sizes_desc[j]
        tried: list[float] = []
        for mach in sorted(range(m), key=loads.__getitem__):
            load = loads[mach]
            if load in tried:
                continue  # interchangeable with a machine already branched on
            tried.append(load)
            loads[mach] = load + size
            current[j] = mach
            dfs(j + 1)
            loads[mach] = load

    try:
        dfs(0)
    except BudgetExhausted:
        return OptResult(
            value=opt_upper_bound(instance),
            witness=None,
            method="upper-bound-only",
            nodes=nodes,
        )

    witness = Schedule(m)
    machine_of_job = {int(order[pos]): best_solution[pos] for pos in range(n)}
    for job in range(n):
        witness.assign(machine_of_job[job], float(instance.sizes[job]))
    return OptResult(value=best_val, witness=witness, method="exact", nodes=nodes)


def greedy_lower_bounds(stats: RankStats, m: int) -> float:
    """Certified floor for least-loaded greedy in any arrival order.

    Combines the m-th largest size (when n >= m) with the suffix-average
    bounds ``tail_sum(i)/m - nth_largest(i)``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    best = 0.0
    n = stats.n
    if n >= m:
        best = max(best, stats.nth_largest(m))
    for i in range(1, min(m, n) + 1):
        best = max(best, stats.tail_sum(i) / m - stats.nth_largest(i))
    return best


def classify(instance: Instance, opt: float) -> Taxonomy:
    """Census the instance against a reference optimum (see :class:`Taxonomy`).

    ``opt`` is the exact optimum where feasible, or a construction-time
    reference for synthetic families beyond exact-solver scale.
    """
    if opt < 0:
        raise ValueError("reference optimum must be non-negative")
    m = instance.m
    n = instance.n
    threshold = opt / (100.0 * m**0.25)
    k = int(np.count_nonzero(instance.sizes > threshold))
    if n < m:
        return Taxonomy(opt, threshold, k, "simple", "n<m", None)
    if k >= m:
        return Taxonomy(opt, threshold, k, "simple", "k>=m", None)
    if k <= m - m**0.75 / 50.0:
        return Taxonomy(opt, threshold, k, "simple", "k-small", None)
    degree = (m - k - 1).bit_length()  # ceil(log2(m - k)), m - k >= 1 here
    return Taxonomy(opt, threshold, k, "proper", None, degree)


def exact_rom_value(
    instance: Instance,
    scheduler: Callable[[Instance, Order], Schedule],
    max_n: int = 8,
) -> float:
    """Average minimum load of a deterministic scheduler over all n! orders.

    Refuses instances with more than ``max_n`` jobs; use the Monte Carlo
    harness beyond that.
    """
    n = instance.n
    if n > max_n:
        raise ValueError(f"exact enumeration refuses n={n} > {max_n}")
    if n == 0:
        return scheduler(instance, Order.identity(0)).min_load
    values = [
        scheduler(instance, Order.given(perm)).min_load
        for perm in itertools.permutations(range(n))
    ]
    return math.fsum(values) / len(values)

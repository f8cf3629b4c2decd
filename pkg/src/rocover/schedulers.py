"""Online schedulers: least-loaded greedy and the two-phase sampling scheduler.

The two-phase scheduler guesses a machine-split degree, burns the first
eighth of the arrivals as a sample routed to the large machines, extracts a
size cutoff from the sample, and then routes the rest with a randomized
non-decreasing threshold.  All size comparisons happen on values rounded
down to powers of two; machine loads accumulate the raw sizes.

Reproducibility contract: a run consumes its generator in a fixed order
(degree guess, padding positions, then one uniform per partition arrival,
drawn as a single block), so fixing (order, seed, forced degree) makes the
whole run bit-reproducible.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Instance,
    Order,
    RankStats,
    Schedule,
    rank_stats,
    round_down_pow2,
    round_down_pow2_array,
)
from .optimal import Taxonomy

__all__ = [
    "TrialReport",
    "ReferenceInfo",
    "greedy_schedule",
    "split_degree_choices",
    "guess_split_degree",
    "sample_threshold_rank",
    "sample_partition_schedule",
]


def greedy_schedule(instance: Instance, order: Order) -> Schedule:
    """Assign each arrival to a least-loaded machine, ties to the lowest id."""
    if order.n != instance.n:
        raise ValueError("order and instance disagree on n")
    schedule = Schedule(instance.m)
    heap = [(0.0, mach) for mach in range(instance.m)]
    assignment = schedule.assignment
    loads = schedule.loads
    push, pop = heapq.heappush, heapq.heappop
    sizes = instance.sizes
    for job in order.perm:
        load, mach = pop(heap)
        size = float(sizes[job])
        assignment.append(mach)
        loads[mach] = load + size
        push(heap, (load + size, mach))
    return schedule


def split_degree_choices(m: int) -> list[int]:
    """Candidate machine-split degrees: -1 (plain greedy) up to ceil(3/4 log2 m)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    top = math.ceil(0.75 * math.log2(m)) if m > 1 else 0
    return list(range(-1, top + 1))


def guess_split_degree(m: int, rng: np.random.Generator) -> int:
    """Uniform draw from :func:`split_degree_choices`."""
    choices = split_degree_choices(m)
    return choices[int(rng.integers(len(choices)))]


def sample_threshold_rank(m: int, degree: int, n: int) -> int:
    """Rank (1-based, among the first n/8 arrivals) that defines the cutoff.

    Evaluates ``(m - 2**degree) / 8 - sqrt(m) / 2``, rounds half-up, and
    clamps into [1, n/8].
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    sample_len = n // 8
    if sample_len < 1:
        raise ValueError("instance too small: fewer than 8 arrivals")
    raw = (m - 2**degree) / 8.0 - math.sqrt(m) / 2.0
    rank = math.floor(raw + 0.5)
    return min(max(rank, 1), sample_len)


@dataclass(frozen=True)
class ReferenceInfo:
    """Analysis-only attachment: the large-job census plus rank statistics.

    Lets a run report classification events (misrouted large jobs, fatal
    threshold updates, the sampling band event).  Schedulers never use it
    for decisions.
    """

    taxonomy: Taxonomy
    stats: RankStats
    min_large_rounded: float

    @classmethod
    def from_instance(cls, instance: Instance, taxonomy: Taxonomy) -> "ReferenceInfo":
        stats = rank_stats(instance)
        large_mask = instance.sizes > taxonomy.large_threshold
        min_large = float(instance.sizes[large_mask].min()) if large_mask.any() else math.inf
        return cls(
            taxonomy=taxonomy,
            stats=stats,
            min_large_rounded=round_down_pow2(min_large) if math.isfinite(min_large) else math.inf,
        )

    def band_rank_low(self, m: int, degree: int) -> int:
        """Rank ceil(k - 8*sqrt(m) - 2**degree); < 1 means the band is undefined."""
        return math.ceil(self.taxonomy.k - 8.0 * math.sqrt(m) - 2**degree)


@dataclass
class TrialReport:
    """Per-run outcome of the two-phase scheduler."""

    min_load: float
    degree_guess: int
    degree: int  # effective degree; -1 whenever plain greedy ran
    padded_n: int
    sample_cutoff: float | None = None
    threshold_final: float = 0.0
    threshold_updates: int = 0
    # Fields below need a ReferenceInfo attachment.
    fatal_updates: int | None = None
    large_misrouted: int | None = None
    small_load_on_small: float | None = None
    band_event: bool | None = None
    orderly: bool | None = None


def partition_routes(
    rounded: np.ndarray,
    cutoff: float,
    update_prob: float,
    uniforms: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Threshold walk over the partition-phase arrivals, vectorized.

    ``uniforms`` holds one draw per arrival (consumed regardless of
    eligibility).  Returns (to_small mask, update positions, update values).
    An arrival goes to the small machines iff its rounded size is below the
    cutoff and at most the threshold *after* its own potential update.
    """
    if rounded.shape != uniforms.shape:
        raise ValueError("need one uniform per partition arrival")
    eligible = rounded < cutoff
    hits = np.flatnonzero(eligible & (uniforms < update_prob))
    positions: list[int] = []
    values: list[float] = []
    threshold = 0.0
    for pos in hits:
        value = float(rounded[pos])
        if value > threshold:
            threshold = value
            positions.append(int(pos))
            values.append(value)
    pos_arr = np.asarray(positions, dtype=np.intp)
    val_arr = np.asarray(values, dtype=np.float64)
    bounds = np.concatenate(([0], pos_arr, [rounded.size]))
    levels = np.concatenate(([0.0], val_arr))
    threshold_after = np.repeat(levels, np.diff(bounds))
    to_small = eligible & (rounded <= threshold_after)
    return to_small, pos_arr, val_arr


def _pad_arrivals(arrivals: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Insert zero-size arrivals at uniform positions until 8 | length."""
    pad = (-arrivals.size) % 8
    for _ in range(pad):
        pos = int(rng.integers(arrivals.size + 1))
        arrivals = np.insert(arrivals, pos, 0.0)
    return arrivals


def _greedy_over(arrivals: np.ndarray, m: int) -> Schedule:
    schedule = Schedule(m)
    heap = [(0.0, mach) for mach in range(m)]
    for size in arrivals:
        load, mach = heapq.heappop(heap)
        schedule.assign(mach, float(size))
        heapq.heappush(heap, (load + float(size), mach))
    return schedule


def sample_partition_schedule(
    instance: Instance,
    order: Order,
    rng: np.random.Generator,
    forced_degree: int | None = None,
    reference: ReferenceInfo | None = None,
) -> tuple[Schedule, TrialReport]:
    """Run the two-phase scheduler on one arrival order.

    ``forced_degree`` overrides the uniform degree guess (statistical tests
    condition on the correct guess this way).  Degree -1, a degenerate split
    (2**degree >= m), or fewer than 8 arrivals all fall back to plain greedy.
    """
    if order.n != instance.n:
        raise ValueError("order and instance disagree on n")
    m = instance.m
    guess = forced_degree if forced_degree is not None else guess_split_degree(m, rng)
    arrivals = _pad_arrivals(order.arrival_sizes(instance), rng)
    n_pad = arrivals.size

    if guess < 0 or 2**guess >= m or n_pad < 8:
        schedule = _greedy_over(arrivals, m)
        return schedule, TrialReport(
            min_load=schedule.min_load,
            degree_guess=guess,
            degree=-1,
            padded_n=n_pad,
        )

    degree = guess
    n_small = 2**degree
    sample_len = n_pad // 8
    rounded = round_down_pow2_array(arrivals)

    rank = sample_threshold_rank(m, degree, n_pad)
    sample = rounded[:sample_len]
    cutoff = float(np.partition(sample, sample_len - rank)[sample_len - rank])

    update_prob = 1.0 / (9.0 * n_small * math.sqrt(m))
    uniforms = rng.random(n_pad - sample_len)
    to_small, upd_pos, upd_val = partition_routes(
        rounded[sample_len:], cutoff, update_prob, uniforms
    )

    schedule = Schedule(m)
    small_heap = [(0.0, mach) for mach in range(n_small)]
    large_heap = [(0.0, mach) for mach in range(n_small, m)]
    push, pop = heapq.heappush, heapq.heappop
    for i in range(sample_len):
        load, mach = pop(large_heap)
        schedule.assign(mach, float(arrivals[i]))
        push(large_heap, (load + float(arrivals[i]), mach))
    for i in range(sample_len, n_pad):
        heap = small_heap if to_small[i - sample_len] else large_heap
        load, mach = pop(heap)
        schedule.assign(mach, float(arrivals[i]))
        push(heap, (load + float(arrivals[i]), mach))

    report = TrialReport(
        min_load=schedule.min_load,
        degree_guess=guess,
        degree=degree,
        padded_n=n_pad,
        sample_cutoff=cutoff,
        threshold_final=float(upd_val[-1]) if upd_val.size else 0.0,
        threshold_updates=int(upd_pos.size),
    )
    if reference is not None:
        _attach_events(report, reference, m, degree, arrivals, rounded, sample_len, to_small, upd_val, cutoff)
    return schedule, report


def _attach_events(
    report: TrialReport,
    reference: ReferenceInfo,
    m: int,
    degree: int,
    arrivals: np.ndarray,
    rounded: np.ndarray,
    sample_len: int,
    to_small: np.ndarray,
    update_values: np.ndarray,
    cutoff: float,
) -> None:
    """Fill the classification-event fields of a report (analysis only)."""
    taxonomy = reference.taxonomy
    threshold = taxonomy.large_threshold
    part_raw = arrivals[sample_len:]
    large_mask = part_raw > threshold

    report.fatal_updates = int(np.count_nonzero(update_values >= reference.min_large_rounded))
    report.large_misrouted = int(np.count_nonzero(to_small & large_mask))
    report.small_load_on_small = float(np.sum(part_raw, where=to_small & ~large_mask))

    k = taxonomy.k
    low = reference.band_rank_low(m, degree)
    if 1 <= low <= k <= reference.stats.n:
        at_k = round_down_pow2(reference.stats.nth_largest(k))
        at_low = round_down_pow2(reference.stats.nth_largest(low))
        report.band_event = bool(at_low >= cutoff >= at_k)
        report.orderly = bool(report.band_event and report.fatal_updates == 0)

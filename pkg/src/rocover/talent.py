"""The talent-contest selection game, marking strategies, and bound formulas.

n candidates with pairwise-distinct valuations each show up ``repeats`` times
in one global uniform order.  Every arrival may be marked (immediately and
irrevocably); round h scores a point when the target candidate's h-th arrival
is marked while no better candidate's h-th arrival is.  Larger valuation
means better candidate throughout this module.
"""

from __future__ import annotations

import math
from bisect import bisect_left, insort
from dataclasses import dataclass

import numpy as np

from .core import Schedule
from .generators import GeneratedInstance

__all__ = [
    "TalentInstance",
    "GameResult",
    "StrategyError",
    "MarkNever",
    "MarkAll",
    "QuantileStrategy",
    "PrecomputedMarks",
    "play",
    "collect_marks",
    "score_marks",
    "induced_marks",
    "contest_view",
    "binomial_guess_game",
    "zeta",
    "points_upper_bound",
    "per_round_upper_bound",
    "lambert_w",
    "ratio_lower_bound",
    "estimate_points",
]

WIN = "won"
MISSED = "missed_target"
MARKED_BETTER = "marked_better"


@dataclass(frozen=True)
class TalentInstance:
    """A contest: valuations per candidate and one global arrival order.

    ``arrivals[t]`` is the candidate appearing at position t; every candidate
    appears exactly ``repeats`` times.  ``target_rank`` = K counts from the
    best (rank 1 = largest valuation).
    """

    valuations: np.ndarray
    arrivals: np.ndarray
    target_rank: int

    def __post_init__(self) -> None:
        n = self.valuations.size
        if not 1 <= self.target_rank <= n:
            raise ValueError("target_rank out of range")
        if self.arrivals.size % n != 0:
            raise ValueError("arrival count must be a multiple of n")
        counts = np.bincount(self.arrivals, minlength=n)
        if not np.all(counts == self.arrivals.size // n):
            raise ValueError("each candidate must arrive the same number of times")
        if np.unique(self.valuations).size != n:
            raise ValueError("valuations must be pairwise distinct")

    @property
    def n(self) -> int:
        return int(self.valuations.size)

    @property
    def repeats(self) -> int:
        return int(self.arrivals.size // self.n)

    @property
    def target(self) -> int:
        """Candidate id of the target (the K-th best)."""
        order = np.argsort(-self.valuations, kind="stable")
        return int(order[self.target_rank - 1])

    @classmethod
    def build(cls, n: int, repeats: int, target_rank: int, rng: np.random.Generator) -> "TalentInstance":
        """Uniform valuations on [0, n] (ties resampled), uniform global order."""
        while True:
            vals = rng.random(n) * n
            if np.unique(vals).size == n:
                break
        arrivals = rng.permutation(np.repeat(np.arange(n), repeats))
        return cls(valuations=vals, arrivals=arrivals, target_rank=target_rank)


@dataclass(frozen=True)
class GameResult:
    points: int
    per_round: tuple[str, ...]  # one of "won" / "missed_target" / "marked_better"

    @property
    def round_wins(self) -> tuple[bool, ...]:
        return tuple(r == WIN for r in self.per_round)


class StrategyError(RuntimeError):
    """A marking strategy raised; the trial is aborted and reported."""


class MarkNever:
    def begin(self, n: int, repeats: int, target_rank: int) -> None:
        pass

    def decide(self, value: float, occurrence: int) -> bool:
        return False

    def bulk_marks(self, instance: "TalentInstance") -> np.ndarray:
        return np.zeros(instance.arrivals.size, dtype=bool)


class MarkAll:
    def begin(self, n: int, repeats: int, target_rank: int) -> None:
        pass

    def decide(self, value: float, occurrence: int) -> bool:
        return True

    def bulk_marks(self, instance: "TalentInstance") -> np.ndarray:
        return np.ones(instance.arrivals.size, dtype=bool)


class QuantileStrategy:
    """Mark arrivals whose extrapolated rank is at least the target rank.

    Sits out a warmup fraction of all arrivals, then marks an arrival iff the
    candidate's empirical rank among revealed candidates, scaled up by the
    reveal fraction, lands at or beyond the target rank.
    """

    def __init__(self, warmup: float = 0.25) -> None:
        if not 0.0 <= warmup < 1.0:
            raise ValueError("warmup fraction must be in [0, 1)")
        self.warmup = warmup

    def begin(self, n: int, repeats: int, target_rank: int) -> None:
        self._n = n
        self._target_rank = target_rank
        self._warm_until = self.warmup * n * repeats
        self._seen = 0
        self._revealed: list[float] = []

    def decide(self, value: float, occurrence: int) -> bool:
        revealed = self._revealed
        if occurrence == 1:
            insort(revealed, value)
        self._seen += 1
        if self._seen <= self._warm_until:
            return False
        # rank 1 = largest among revealed; extrapolate by the reveal fraction
        rank = len(revealed) - bisect_left(revealed, value)
        estimated = rank * self._n / len(revealed)
        return estimated >= self._target_rank

    def bulk_marks(self, instance: "TalentInstance") -> np.ndarray:
        """Whole-order marks, vectorized; agrees with decide() arrival for arrival.

        The empirical rank of an arrival is a 2D dominance count over
        (reveal epoch, valuation rank), read off one cumulative 0/1 matrix.
        """
        arrivals = instance.arrivals
        n = instance.n
        total = arrivals.size

        _, first_pos = np.unique(arrivals, return_index=True)  # first occurrence per candidate
        reveal_sorted = np.sort(first_pos)
        # epoch(t) = number of candidates revealed once position t is processed
        epochs = np.searchsorted(reveal_sorted, np.arange(total), side="right")

        # reveal_idx[c] = 1-based epoch at which candidate c is revealed
        reveal_idx = np.empty(n, dtype=np.intp)
        reveal_idx[np.argsort(first_pos, kind="stable")] = np.arange(1, n + 1)
        val_rank = np.empty(n, dtype=np.intp)
        val_rank[np.argsort(-instance.valuations, kind="stable")] = np.arange(1, n + 1)

        grid = np.zeros((n + 1, n + 1), dtype=np.int32)
        grid[reveal_idx, val_rank] = 1
        dominance = grid.cumsum(axis=0).cumsum(axis=1)

        ranks = dominance[epochs, val_rank[arrivals]].astype(np.int64)
        # same float association as decide(): (rank * n) / revealed
        estimated = (ranks * n) / epochs
        past_warmup = np.arange(1, total + 1) > self.warmup * total
        return (estimated >= instance.target_rank) & past_warmup


class PrecomputedMarks:
    """Replays a fixed mark sequence (used for schedule-induced strategies)."""

    def __init__(self, marks) -> None:
        self.marks = list(bool(b) for b in marks)
        self._pos = 0

    def begin(self, n: int, repeats: int, target_rank: int) -> None:
        self._pos = 0

    def decide(self, value: float, occurrence: int) -> bool:
        mark = self.marks[self._pos]
        self._pos += 1
        return mark


def collect_marks(instance: TalentInstance, strategy) -> np.ndarray:
    """Feed the arrivals to a strategy one at a time and record its marks.

    The strategy sees the candidate's valuation and its occurrence index;
    any history it wants it must keep itself.
    """
    n, repeats = instance.n, instance.repeats
    vals = instance.valuations
    strategy.begin(n, repeats, instance.target_rank)
    occurrence = [0] * n
    marks = np.zeros(instance.arrivals.size, dtype=bool)
    for pos, cand in enumerate(instance.arrivals):
        cand = int(cand)
        occurrence[cand] += 1
        try:
            marks[pos] = bool(strategy.decide(float(vals[cand]), occurrence[cand]))
        except Exception as exc:  # noqa: BLE001 - contract: abort and report
            raise StrategyError(f"strategy failed at arrival {pos}: {exc!r}") from exc
    return marks


def score_marks(instance: TalentInstance, marks) -> GameResult:
    """Score a mark sequence: round h is won iff the target's h-th arrival is
    marked and no better candidate's h-th arrival is."""
    marks = np.asarray(marks, dtype=bool)
    vals = instance.valuations
    target = instance.target
    better = np.flatnonzero(vals > float(vals[target]))

    nth_positions = _nth_arrival_positions(instance)
    per_round: list[str] = []
    for h in range(1, instance.repeats + 1):
        if not marks[nth_positions[target][h - 1]]:
            per_round.append(MISSED)
        elif any(marks[nth_positions[int(b)][h - 1]] for b in better):
            per_round.append(MARKED_BETTER)
        else:
            per_round.append(WIN)
    points = sum(1 for r in per_round if r == WIN)
    return GameResult(points=points, per_round=tuple(per_round))


def play(instance: TalentInstance, strategy) -> GameResult:
    """Run one contest (decisions immediate and irrevocable) and score it."""
    return score_marks(instance, collect_marks(instance, strategy))


def _nth_arrival_positions(instance: TalentInstance) -> list[list[int]]:
    out: list[list[int]] = [[] for _ in range(instance.n)]
    for pos, cand in enumerate(instance.arrivals):
        out[int(cand)].append(pos)
    return out


def induced_marks(schedule: Schedule, arrival_sizes) -> list[bool]:
    """Marks of the schedule-induced strategy: a job is marked iff its machine
    already holds a job of exactly the same size."""
    seen: list[set[float]] = [set() for _ in range(schedule.m)]
    marks: list[bool] = []
    for pos, mach in enumerate(schedule.assignment):
        size = float(arrival_sizes[pos])
        marks.append(size in seen[mach])
        seen[mach].add(size)
    return marks


def contest_view(gen: GeneratedInstance, perm) -> TalentInstance:
    """Interpret a reduction instance's arrival order as a contest.

    Jobs of a reduction instance come in blocks of ``arrivals`` per candidate,
    so job index // arrivals is the candidate id.
    """
    if gen.family != "reduction":
        raise ValueError("contest_view needs a reduction-family instance")
    repeats = int(gen.params["arrivals"])
    valuations = np.asarray(gen.params["valuations"], dtype=np.float64)
    arrivals = np.asarray([int(j) // repeats for j in perm], dtype=np.intp)
    return TalentInstance(
        valuations=valuations,
        arrivals=arrivals,
        target_rank=int(gen.params["target_rank"]),
    )


def binomial_guess_game(
    s: float, g: int, n_samples: int, value_range: float, rng: np.random.Generator
) -> bool:
    """Win iff exactly g of n_samples uniform draws on [0, value_range) fall below s."""
    if n_samples < 0 or value_range <= 0:
        raise ValueError("need n_samples >= 0 and a positive range")
    count = int(np.count_nonzero(rng.random(n_samples) * value_range < s))
    return count == g


def zeta(s: float, terms: int = 10_000) -> float:
    """Riemann zeta by direct series plus an Euler-Maclaurin tail.

    Accurate to ~1e-9 for s >= 1.5 at the default term count.
    """
    if s <= 1.0:
        raise ValueError("series diverges for s <= 1")
    x = np.arange(1, terms + 1, dtype=np.float64)
    head = float(np.sum(x**-s))
    m = float(terms)
    tail = m ** (1.0 - s) / (s - 1.0) - 0.5 * m**-s + (s / 12.0) * m ** (-s - 1.0)
    return head + tail


def points_upper_bound(target_rank: int, arrivals: int) -> float:
    """Closed-form ceiling on the expected contest points of any strategy.

    Defined for arrivals >= 3 only (the zeta argument must exceed 1).
    """
    if arrivals < 3:
        raise ValueError("bound undefined for fewer than 3 arrivals per candidate")
    if target_rank < 1:
        raise ValueError("target_rank must be >= 1")
    t = arrivals
    return zeta(t / 2.0) * (t + 1) ** (t / 2.0) / (2.0 * math.pi * math.sqrt(target_rank))


def per_round_upper_bound(target_rank: int, arrivals: int, round_index: int, eps: float) -> float:
    """Ceiling on the win probability of a single round h."""
    if not 1 <= round_index <= arrivals:
        raise ValueError("round_index out of range")
    if not 0.0 < eps < 1.0 / 6.0:
        raise ValueError("eps must be in (0, 1/6)")
    rho = (arrivals + 1 - round_index) / (arrivals + 1)
    return rho ** (arrivals / 2.0) / (2.0 * math.pi * math.sqrt(target_rank)) + eps


def lambert_w(x: float, tol: float = 1e-12, max_iter: int = 100) -> float:
    """Principal branch of w * e**w = x for x >= 0, by Newton iteration."""
    if x < 0:
        raise ValueError("only the non-negative domain is supported")
    if x == 0.0:
        return 0.0
    w = math.log1p(x)
    for _ in range(max_iter):
        ew = math.exp(w)
        step = (w * ew - x) / (ew * (w + 1.0))
        w -= step
        if abs(step) <= tol * (1.0 + abs(w)):
            return w
    raise RuntimeError("Newton iteration did not converge")


def ratio_lower_bound(m: int) -> float:
    """Floor on the competitive ratio of any random-order covering algorithm.

    ``(floor(exp(W(ln m))) - 1) / 1.16``, clipped at zero.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    value = math.floor(math.exp(lambert_w(math.log(m)))) - 1
    return max(0.0, value / 1.16)


def estimate_points(
    target_rank: int,
    arrivals: int,
    n: int,
    strategy_factory,
    trials: int,
    seed: int,
) -> tuple[float, float]:
    """Monte Carlo mean points (with normal 95% CI) for a strategy.

    Each trial draws fresh uniform valuations and a fresh order.  For any
    fixed strategy this estimates a value at most the optimal one.
    """
    if trials < 30:
        raise ValueError("use at least 30 trials for a meaningful interval")
    if not 1 <= target_rank <= n:
        raise ValueError("need 1 <= target_rank <= n")
    children = np.random.SeedSequence(seed).spawn(trials)
    scores = np.empty(trials, dtype=np.float64)
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        instance = TalentInstance.build(n, arrivals, target_rank, rng)
        strategy = strategy_factory()
        if hasattr(strategy, "bulk_marks"):
            strategy.begin(n, arrivals, target_rank)
            result = score_marks(instance, strategy.bulk_marks(instance))
        else:
            result = play(instance, strategy)
        scores[i] = result.points
    mean = float(scores.mean())
    ci95 = 1.96 * float(scores.std(ddof=1)) / math.sqrt(trials) if trials > 1 else 0.0
    return mean, ci95

"""Instance families: the classic adversarial family, proper instances of a
prescribed degree, steep valuation sets, contest-reduction instances, and a
uniform fuzzing substrate.

Each generator is deterministic given its seed and attaches whatever is known
by construction (a reference optimum, a taxonomy hint, an adversarial order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Instance, Order
from .optimal import Taxonomy, classify

__all__ = [
    "GeneratedInstance",
    "SteepValuations",
    "gen_adversarial",
    "gen_proper",
    "gen_steep_valuations",
    "gen_contest_reduction",
    "gen_uniform",
]


@dataclass(frozen=True)
class GeneratedInstance:
    """An instance plus construction-time knowledge about it.

    ``known_opt`` is exact whenever the exact solver could confirm it; for
    families beyond solver scale it is a constructed reference level that
    never exceeds the true optimum.  ``log_domain`` marks instances whose
    "sizes" are natural-log exponents (order comparisons only; never sum
    them as loads).
    """

    instance: Instance
    family: str
    params: dict
    known_opt: float | None = None
    taxonomy_hint: Taxonomy | None = None
    adversarial_order: Order | None = None
    log_domain: bool = False

    def sidecar(self) -> dict:
        return {
            "known_opt": self.known_opt,
            "family": self.family,
            "params": {k: v for k, v in self.params.items() if _jsonable(v)},
            "log_domain": self.log_domain,
        }


def _jsonable(v) -> bool:
    return isinstance(v, (int, float, str, bool, type(None), list, tuple))


def gen_adversarial(m: int) -> GeneratedInstance:
    """m unit jobs followed by m-1 jobs of size m; optimum m, greedy gets 1.

    The attached order (units first) is the order that defeats greedy; under
    it every machine receives a unit job before any big job arrives.
    """
    if m < 2:
        raise ValueError("adversarial family needs m >= 2")
    sizes = [1.0] * m + [float(m)] * (m - 1)
    instance = Instance(m, sizes)
    return GeneratedInstance(
        instance=instance,
        family="adversarial",
        params={"m": m},
        known_opt=float(m),
        taxonomy_hint=classify(instance, float(m)),
        adversarial_order=Order.identity(instance.n),
    )


def gen_proper(m: int, degree: int, n: int, seed: int, scale: float = 1.0) -> GeneratedInstance:
    """A proper instance of the requested degree with reference optimum ``scale``.

    Builds ``k = m - 2**degree`` large jobs uniform on [scale, 2*scale) and
    ``n - k`` small jobs log-uniform on [scale/(200*m**0.25),
    scale/(100*m**0.25)].  Proper instances only exist once ``m**0.75 / 50``
    exceeds ``2**degree``; the small-job mass then always suffices for a
    packing that covers every large-job-free machine to ``scale``.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if scale <= 0:
        raise ValueError("scale must be positive")
    n_gap = 2**degree
    if n_gap >= m**0.75 / 50.0:
        raise ValueError(
            f"no proper instance with m={m}, degree={degree}: "
            f"needs 2**degree < m**0.75/50 = {m**0.75 / 50.0:.3f}"
        )
    k = m - n_gap
    if n < 8 * k:
        raise ValueError(f"need n >= 8*k = {8 * k}, got {n}")

    rng = np.random.default_rng(seed)
    large = scale * (1.0 + rng.random(k))
    small_hi = scale / (100.0 * m**0.25)
    small_lo = small_hi / 2.0
    small = np.exp(rng.uniform(math.log(small_lo), math.log(small_hi), n - k))

    # Witness sanity: enough small mass to cover the 2**degree gap machines.
    if float(small.sum()) < n_gap * (scale + small_hi):
        raise ValueError("small-job mass too thin for the covering witness")

    instance = Instance(m, np.concatenate([large, small]))
    hint = classify(instance, scale)
    if hint.kind != "proper" or hint.degree != degree:
        raise AssertionError(f"construction bug: expected proper({degree}), got {hint}")
    return GeneratedInstance(
        instance=instance,
        family="proper",
        params={"m": m, "degree": degree, "n": n, "seed": seed, "scale": scale, "k": k},
        known_opt=scale,
        taxonomy_hint=hint,
    )


@dataclass(frozen=True)
class SteepValuations:
    """Valuations kept as natural-log exponents, pairwise >= log(ratio) apart.

    The construction maps uniform draws v on [0, n] to mu**(-v) with an
    astronomically large mu, so only the exponents are representable.
    """

    log_values: np.ndarray
    ratio: float
    draws_used: int

    @property
    def n(self) -> int:
        return int(self.log_values.size)


def gen_steep_valuations(
    n: int, ratio: float, fail_prob: float, seed: int, max_attempts: int = 100
) -> SteepValuations:
    """Draw a valuation set whose pairwise gaps beat ``ratio`` multiplicatively.

    Draws v_i uniform on [0, n] i.i.d. and emits exponents
    ``-v_i * log(mu)`` for ``mu = ratio**(n*(n-1)/fail_prob)``.  A raw draw
    fails the steepness check with probability below ``fail_prob``; failures
    are resampled.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if ratio < 1.0:
        raise ValueError("ratio must be >= 1")
    if not 0.0 < fail_prob < 1.0:
        raise ValueError("fail_prob must be in (0, 1)")
    log_mu = (n * (n - 1) / fail_prob) * math.log(ratio)
    min_gap = math.log(ratio)
    rng = np.random.default_rng(seed)
    for attempt in range(1, max_attempts + 1):
        draws = rng.random(n) * n
        exponents = -draws * log_mu
        if n == 1 or min_gap == 0.0:
            return SteepValuations(np.sort(exponents)[::-1], ratio, attempt)
        gaps = np.diff(np.sort(exponents))
        if gaps.size == 0 or float(gaps.min()) >= min_gap:
            return SteepValuations(np.sort(exponents)[::-1], ratio, attempt)
    raise RuntimeError(f"no steep draw within {max_attempts} attempts")


def gen_contest_reduction(
    target_rank: int,
    arrivals: int,
    steepness: float,
    seed: int,
    extra_candidates: int = 3,
) -> GeneratedInstance:
    """Job stream of a talent-contest instance on (K-1)*T + 1 machines.

    Each of the ``target_rank + extra_candidates`` candidates contributes
    ``arrivals`` jobs of its valuation size.  Valuations decay geometrically
    by a random factor above ``steepness``, so the top K-1 candidates yield
    the m-1 large jobs, the K-th the medium jobs, and the rest small jobs.
    The known optimum places each large job alone and everything else on the
    remaining machine.
    """
    K, T, lam = target_rank, arrivals, steepness
    if K < 2:
        raise ValueError("target_rank must be >= 2")
    if T < 1:
        raise ValueError("arrivals must be >= 1")
    if lam <= T:
        raise ValueError(f"steepness must exceed the arrival count {T}")
    if extra_candidates < 0:
        raise ValueError("extra_candidates must be >= 0")

    m = (K - 1) * T + 1
    n_cand = K + extra_candidates
    rng = np.random.default_rng(seed)
    ratio = lam * (1.01 + 0.49 * rng.random())
    scale = float(rng.uniform(0.5, 2.0))

    log_span = (n_cand - 1) * math.log10(ratio)
    log_domain = log_span > 280.0  # linear sizes would leave double range
    log_shift = 0.0
    if log_domain:
        # Shifted natural-log exponents: order and gaps survive, sums do not.
        exponents = math.log(scale) - np.arange(n_cand) * math.log(ratio)
        log_shift = -float(exponents.min())
        valuations = exponents + log_shift
    else:
        valuations = scale * ratio ** (-np.arange(n_cand, dtype=np.float64))

    instance = Instance(m, np.repeat(valuations, T))

    medium_value = float(valuations[K - 1])
    small_candidates = valuations[K:]
    small_total = float(T * small_candidates.sum()) if not log_domain else 0.0

    known_opt = None
    if not log_domain:
        known_opt = T * medium_value + small_total
        smallest_large = float(valuations[K - 2])
        if smallest_large < known_opt:
            raise ValueError(
                "constructed optimum is not witnessed: raise steepness to at "
                "least arrivals + 1 or drop extra_candidates"
            )

    params = {
        "target_rank": K,
        "arrivals": T,
        "steepness": lam,
        "ratio": float(ratio),
        "seed": seed,
        "n_candidates": n_cand,
        "valuations": [float(v) for v in valuations],
        "medium_value": medium_value,
        "small_total": small_total,
        "log_shift": log_shift,
    }
    return GeneratedInstance(
        instance=instance,
        family="reduction",
        params=params,
        known_opt=known_opt,
        taxonomy_hint=classify(instance, known_opt) if known_opt is not None else None,
        log_domain=log_domain,
    )


def gen_uniform(n: int, m: int, seed: int) -> GeneratedInstance:
    """n i.i.d. uniform [0, 1) sizes; nothing known about the optimum."""
    if n < 0 or m < 1:
        raise ValueError("need n >= 0 and m >= 1")
    rng = np.random.default_rng(seed)
    instance = Instance(m, rng.random(n))
    return GeneratedInstance(
        instance=instance,
        family="uniform",
        params={"n": n, "m": m, "seed": seed},
    )

"""rocover: online machine covering under random-order arrival, at desk scale.

Covers the domain types (instances, orders, schedules, rank statistics), an
exact offline solver with analytic bounds, the greedy and two-phase online
schedulers, instance generators for every family the analysis needs, the
talent-contest game with its bound calculators, and seeded Monte Carlo
harnesses tying it together.
"""

from .core import Instance, Order, RankStats, Schedule, harmonic, rank_stats, round_down_pow2
from .generators import (
    GeneratedInstance,
    SteepValuations,
    gen_adversarial,
    gen_contest_reduction,
    gen_proper,
    gen_steep_valuations,
    gen_uniform,
)
from .harness import (
    EstimateReport,
    EventRate,
    csv_emit,
    estimate_rom,
    greedy_adversarial_test,
    partition_phase_stats,
    sampling_band_test,
    wilson_interval,
)
from .optimal import (
    OptResult,
    Taxonomy,
    classify,
    exact_rom_value,
    greedy_lower_bounds,
    opt_exact,
    opt_upper_bound,
)
from .schedulers import (
    ReferenceInfo,
    TrialReport,
    greedy_schedule,
    guess_split_degree,
    sample_partition_schedule,
    sample_threshold_rank,
    split_degree_choices,
)
from .talent import (
    GameResult,
    MarkAll,
    MarkNever,
    PrecomputedMarks,
    QuantileStrategy,
    TalentInstance,
    binomial_guess_game,
    contest_view,
    estimate_points,
    induced_marks,
    lambert_w,
    per_round_upper_bound,
    play,
    points_upper_bound,
    ratio_lower_bound,
    zeta,
)

__version__ = "0.1.0"

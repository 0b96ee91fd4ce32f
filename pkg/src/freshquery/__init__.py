"""freshquery: optimal query-waiting policies for remotely monitored CTMCs."""

from .ctmc import (
    GeneratorMatrix,
    StationaryDistribution,
    TransitionMatrix,
    stationary_distribution,
    transition_probabilities,
    validate_generator,
)
from .delays import (
    CombinedDelay,
    Deterministic,
    DiscreteAtoms,
    Exponential,
    convolve,
    tail_cdf_shifted,
)
from .estimator import MatchProbability, aggregate_p, estimate_at, match_probability
from .freshness import (
    ConstantWait,
    DelayIndependent,
    EvalContext,
    FreshnessReport,
    FullTable,
    SampledChain,
    StateIndependentTable,
    ThresholdPolicy,
    WaitingPolicy,
    ZeroWait,
    expected_g,
    mbf_analytic,
    sampled_chain,
    zero_wait_mbf,
)
from .optimize import (
    PolicyResult,
    constant_wait_policy,
    delay_independent_policy,
    greedy_policy,
    optimal_policy,
    optimal_wait_for_theta,
    state_independent_policy,
    threshold_gamma,
)
from .simulator import SimConfig, SimResult, jump_path_fresh_time, simulate

__version__ = "0.1.0"

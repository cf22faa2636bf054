"""Exact match probabilities and first-duplicate statistics for random packs.

A pack is ``n`` items drawn independently and uniformly over ``d`` colors.
The package computes, in exact arithmetic, the probability that two packs
match (three independent counting routes), the distribution and expectation
of the number of packs bought until the first duplicate (a pairwise
closed-form model and an exact symmetric-polynomial oracle), match
probabilities under pack-size mixtures, and seeded Monte Carlo checks of all
of the above.
"""

from .coincidence import (
    CoincidenceTable,
    PackSpec,
    coincidence_probability,
    compositions,
    count_closed,
    count_gf,
    count_recursive,
    distinct_pack_count,
    endpoint_probability,
    two_color_probability,
)
from .exactmath import (
    FactorialCache,
    binomial,
    decimal_string,
    factorial,
    integer_pow,
    multinomial,
    significant_string,
)
from .firstmatch import (
    DEFAULT_PRECISION,
    DEFAULT_TOLERANCE,
    EndpointSpectrum,
    FirstMatchLaw,
    PackSizeDistribution,
    SeriesExpectation,
    endpoint_spectrum,
    exact_pmf_and_expectation,
    exact_survival,
    mixture_match_probability,
    pairwise_expectation,
    pairwise_pmf,
)
from .montecarlo import (
    RNG_ALGORITHM,
    FirstMatchReport,
    TrialReport,
    WalkSample,
    endpoint_histogram,
    first_match_experiment,
    first_match_trial,
    pair_match_rate,
    sample_pack,
)

__version__ = "0.1.0"

__all__ = [
    "CoincidenceTable",
    "DEFAULT_PRECISION",
    "DEFAULT_TOLERANCE",
    "EndpointSpectrum",
    "FactorialCache",
    "FirstMatchLaw",
    "FirstMatchReport",
    "PackSizeDistribution",
    "PackSpec",
    "RNG_ALGORITHM",
    "SeriesExpectation",
    "TrialReport",
    "WalkSample",
    "binomial",
    "coincidence_probability",
    "compositions",
    "count_closed",
    "count_gf",
    "count_recursive",
    "decimal_string",
    "distinct_pack_count",
    "endpoint_histogram",
    "endpoint_probability",
    "endpoint_spectrum",
    "exact_pmf_and_expectation",
    "exact_survival",
    "factorial",
    "first_match_experiment",
    "first_match_trial",
    "integer_pow",
    "mixture_match_probability",
    "multinomial",
    "pair_match_rate",
    "pairwise_expectation",
    "pairwise_pmf",
    "sample_pack",
    "significant_string",
    "two_color_probability",
    "__version__",
]

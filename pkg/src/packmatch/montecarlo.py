"""Seeded Monte Carlo checks of the exact results.

Sampling realises the ordered filling model: a pack is ``n`` independent
uniform draws over ``d`` colors, and only the per-color counts (the walk
endpoint) matter for pack identity. Per-draw color sequences are sampled where
the sequence itself is under test; otherwise endpoints are drawn directly
from the equivalent multinomial distribution, which is faster and exactly
matches the endpoint law of the ordered model.

Determinism contract: every experiment derives all generators from numpy's
``SeedSequence`` keyed by the experiment seed and a stream index, so a report
is a pure function of (spec, trials, seed) and chunks can be processed in any
order without changing the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coincidence import PackSpec, distinct_pack_count

RNG_ALGORITHM = "PCG64"

_PAIR_CHUNK = 1 << 16
_HISTOGRAM_CHUNK = 1 << 14
_Z_95 = 1.959963984540054  # two-sided 95% normal quantile


def _generator(seed: int, stream: int) -> np.random.Generator:
    """Independent generator for stream ``stream`` of experiment ``seed``."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(sequence))


def _validate_seed(seed: int) -> None:
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit non-negative value, got {seed}")


def _validate_trials(trials: int) -> None:
    if trials < 1:
        raise ValueError(f"trial count must be positive, got {trials}")


@dataclass(frozen=True)
class WalkSample:
    """One sampled pack: the color of each draw and the per-color counts."""

    steps: tuple[int, ...]
    endpoint: tuple[int, ...]


def sample_pack(spec: PackSpec, rng: np.random.Generator) -> WalkSample:
    """Draw one pack as an ordered color sequence plus its endpoint.

    The endpoint is exactly the histogram of the steps, so the invariant
    ``sum(endpoint) == n`` always holds.
    """
    steps = rng.integers(0, spec.d, size=spec.n)
    endpoint = np.bincount(steps, minlength=spec.d)
    return WalkSample(
        steps=tuple(int(s) for s in steps),
        endpoint=tuple(int(c) for c in endpoint),
    )


def _wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    z = _Z_95
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2.0 * trials)) / denom
    half = (
        z
        * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials))
        / denom
    )
    # The interval always contains phat mathematically; the outer min/max
    # absorb float roundoff at the p = 0 and p = 1 boundaries.
    return (max(0.0, min(center - half, phat)), min(1.0, max(center + half, phat)))


@dataclass(frozen=True)
class TrialReport:
    """Result of a pair-matching experiment.

    ``estimate`` always lies inside [ci_low, ci_high] (95% Wilson interval),
    and ``algorithm`` records the generator so reports are reproducible.
    """

    seed: int
    trials: int
    matches: int
    estimate: float
    ci_low: float
    ci_high: float
    algorithm: str
    analytic_reference: float | None = None


def pair_match_rate(
    spec: PackSpec,
    trials: int,
    seed: int,
    analytic_reference: float | None = None,
) -> TrialReport:
    """Estimate the probability that two independent packs match.

    Draws ``trials`` independent pack pairs (endpoints sampled directly from
    the multinomial endpoint law) in fixed-size chunks, each chunk on its own
    seed stream, and counts equal endpoints.

    Raises:
        ValueError: if ``trials`` is not positive or ``seed`` is negative.
    """
    _validate_trials(trials)
    _validate_seed(seed)
    pvals = np.full(spec.d, 1.0 / spec.d)
    matches = 0
    done = 0
    stream = 0
    while done < trials:
        chunk = min(_PAIR_CHUNK, trials - done)
        rng = _generator(seed, stream)
        pairs = rng.multinomial(spec.n, pvals, size=(chunk, 2))
        matches += int(np.all(pairs[:, 0, :] == pairs[:, 1, :], axis=1).sum())
        done += chunk
        stream += 1
    ci_low, ci_high = _wilson_interval(matches, trials)
    return TrialReport(
        seed=seed,
        trials=trials,
        matches=matches,
        estimate=matches / trials,
        ci_low=ci_low,
        ci_high=ci_high,
        algorithm=RNG_ALGORITHM,
        analytic_reference=analytic_reference,
    )


def first_match_trial(spec: PackSpec, rng: np.random.Generator) -> int:
    """Sample one first-match time: packs drawn until an endpoint repeats.

    Endpoints are drawn from the multinomial endpoint law in geometrically
    growing blocks and checked against a hash set of endpoints seen so far.
    The result is at most distinct_pack_count(spec) + 1 by pigeonhole, so
    the loop always terminates.
    """
    cap = distinct_pack_count(spec) + 1
    pvals = np.full(spec.d, 1.0 / spec.d)
    seen: set[bytes] = set()
    drawn = 0
    block = 16
    while True:
        size = min(block, cap - drawn)
        batch = rng.multinomial(spec.n, pvals, size=size)
        for row in batch:
            drawn += 1
            key = row.tobytes()
            if key in seen:
                return drawn
            seen.add(key)
        if drawn >= cap:
            raise AssertionError(
                f"no repeat within {cap} packs of {spec}; sampler violated pigeonhole"
            )
        block *= 2


@dataclass(frozen=True)
class FirstMatchReport:
    """Result of a first-match experiment.

    ``histogram`` maps each observed first-match time to its frequency and
    sums to ``trials``; ``std_error`` is the sample standard error of the
    mean, and the interval is the 95% normal interval around ``mean``.
    """

    seed: int
    trials: int
    mean: float
    std_error: float
    ci_low: float
    ci_high: float
    histogram: dict[int, int]
    algorithm: str
    analytic_reference: float | None = None


def first_match_experiment(
    spec: PackSpec,
    trials: int,
    seed: int,
    analytic_reference: float | None = None,
) -> FirstMatchReport:
    """Run ``trials`` independent first-match trials, one seed stream each.

    Raises:
        ValueError: if ``trials`` is not positive or ``seed`` is negative.
    """
    _validate_trials(trials)
    _validate_seed(seed)
    histogram: dict[int, int] = {}
    total = 0
    total_sq = 0
    for stream in range(trials):
        value = first_match_trial(spec, _generator(seed, stream))
        histogram[value] = histogram.get(value, 0) + 1
        total += value
        total_sq += value * value
    mean = total / trials
    if trials > 1:
        variance = (total_sq - trials * mean * mean) / (trials - 1)
        variance = max(0.0, variance)
    else:
        variance = 0.0
    std_error = math.sqrt(variance / trials)
    return FirstMatchReport(
        seed=seed,
        trials=trials,
        mean=mean,
        std_error=std_error,
        ci_low=mean - _Z_95 * std_error,
        ci_high=mean + _Z_95 * std_error,
        histogram=dict(sorted(histogram.items())),
        algorithm=RNG_ALGORITHM,
        analytic_reference=analytic_reference,
    )


def endpoint_histogram(
    spec: PackSpec, samples: int, seed: int
) -> dict[tuple[int, ...], int]:
    """Histogram of walk endpoints over ``samples`` ordered fillings.

    This one samples the per-draw color sequences themselves (not the
    multinomial shortcut), so it exercises the ordered model end to end; the
    test suite compares the result against the exact endpoint probabilities.

    Raises:
        ValueError: if ``samples`` is not positive or ``seed`` is negative.
    """
    _validate_trials(samples)
    _validate_seed(seed)
    counts: dict[tuple[int, ...], int] = {}
    done = 0
    stream = 0
    while done < samples:
        chunk = min(_HISTOGRAM_CHUNK, samples - done)
        rng = _generator(seed, stream)
        steps = rng.integers(0, spec.d, size=(chunk, spec.n))
        endpoints = np.zeros((chunk, spec.d), dtype=np.int64)
        for color in range(spec.d):
            endpoints[:, color] = (steps == color).sum(axis=1)
        unique, freq = np.unique(endpoints, axis=0, return_counts=True)
        for row, f in zip(unique, freq):
            key = tuple(int(c) for c in row)
            counts[key] = counts.get(key, 0) + int(f)
        done += chunk
        stream += 1
    return dict(sorted(counts.items()))

"""Distribution of the number of packs bought until two of them match.

Buy packs one at a time and stop as soon as the newest pack's per-color count
vector (its endpoint) equals the endpoint of any earlier pack; ``X`` is the
number of packs bought. Two models are implemented.

Pairwise model. Treats the C(m, 2) pairwise match indicators among m packs as
if they were mutually independent, which gives the closed form
``P[X = l] = (1 - p)^C(l-1, 2) * (l - 1) * p`` with ``p`` the single-pair
match probability. The indicators are in fact only pairwise independent, so
this is an approximation: each value lies in [0, 1] but the total over l can
exceed 1 (the test suite pins a witness).

Exact oracle. Uses the identity ``P[X > m] = m! * e_m(q)``, where ``q`` is
the vector of endpoint probabilities and ``e_m`` the m-th elementary
symmetric polynomial: buying m packs with all endpoints distinct means
choosing an ordered m-tuple of distinct endpoints. The e_m are evaluated
through Newton's identities over the endpoint power sums
``S_j = sum_v q_v^j``. Endpoints sharing a probability are grouped into
classes (one class per partition shape), which shrinks the working set by
orders of magnitude. Small problems run in exact rational arithmetic; larger
ones use high-precision decimal arithmetic with explicit error-bound
tracking and a precision alarm.
"""

from __future__ import annotations

import decimal
from collections import Counter
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Iterator, Sequence, Union

from .coincidence import PackSpec, coincidence_probability, distinct_pack_count
from .exactmath import factorial, multinomial

Number = Union[Fraction, Decimal]

DEFAULT_TOLERANCE = 1e-12
DEFAULT_PRECISION = 128
PAIRWISE_PRECISION = 40
EXACT_ENDPOINT_LIMIT = 10_000
EXACT_POWER_LIMIT = 200
DEFAULT_ENDPOINT_CEILING = 10_000_000

_PAIRWISE_MAX_TERMS = 5_000_000


def pairwise_pmf(p: Fraction, length: int) -> Fraction:
    """Pairwise-model probability that the first match happens at pack ``length``.

    Args:
        p: single-pair match probability, a rational in [0, 1].
        length: pack index, at least 1.

    Returns:
        (1 - p)^C(length - 1, 2) * (length - 1) * p exactly; 0 for length 1.

    Raises:
        ValueError: if ``p`` is outside [0, 1] or ``length < 1``.
    """
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"pair match probability must lie in [0, 1], got {p}")
    if length < 1:
        raise ValueError(f"pack index must be at least 1, got {length}")
    if length == 1:
        return Fraction(0)
    exponent = (length - 1) * (length - 2) // 2
    return (1 - p) ** exponent * (length - 1) * p


@dataclass(frozen=True)
class SeriesExpectation:
    """A truncated positive series: its value, tail bound, and last index."""

    value: Decimal
    tail_bound: Decimal
    last_index: int


def pairwise_expectation(
    p: Fraction,
    tol: float = DEFAULT_TOLERANCE,
    precision: int = PAIRWISE_PRECISION,
) -> SeriesExpectation:
    """Expectation of the pairwise model, summed until the tail is provably small.

    Sums l * (l - 1) * p * (1 - p)^C(l-1, 2) for l = 2, 3, ... and stops once
    the current term is below ``tol``, the term ratio
    r = (l + 1) / (l - 1) * (1 - p)^(l - 1) has dropped below 1, and the
    geometric tail bound term * r / (1 - r) is below ``tol``. The ratio is
    decreasing in l, so the geometric bound is valid from the stopping index.

    Raises:
        ValueError: if ``p`` is not in (0, 1] (the series diverges at p = 0).
    """
    p = Fraction(p)
    if not 0 < p <= 1:
        raise ValueError(f"pair match probability must lie in (0, 1], got {p}")
    ctx = decimal.Context(prec=precision, Emax=10**9, Emin=-(10**9))
    with decimal.localcontext(ctx):
        pd = Decimal(p.numerator) / Decimal(p.denominator)
        omp = 1 - pd
        tolerance = Decimal(str(tol))
        total = Decimal(0)
        power = Decimal(1)  # (1 - p)^C(l-1, 2)
        step = omp  # (1 - p)^(l - 1)
        index = 2
        while True:
            term = Decimal(index * (index - 1)) * pd * power
            total += term
            ratio = Decimal(index + 1) / Decimal(index - 1) * step
            if term <= tolerance and ratio < 1:
                tail = term * ratio / (1 - ratio)
                if tail <= tolerance:
                    return SeriesExpectation(+total, +tail, index)
            power *= step
            step *= omp
            index += 1
            if index > _PAIRWISE_MAX_TERMS:
                raise RuntimeError(
                    "pairwise expectation did not converge within "
                    f"{_PAIRWISE_MAX_TERMS} terms; raise tol"
                )


def _partitions_descending(total: int, slots: int, cap: int) -> Iterator[tuple[int, ...]]:
    """Partitions of ``total`` into at most ``slots`` positive parts, each <= cap."""
    if total == 0:
        yield ()
        return
    if slots == 0:
        return
    for first in range(min(total, cap), 0, -1):
        for rest in _partitions_descending(total - first, slots - 1, first):
            yield (first,) + rest


def _endpoint_classes(spec: PackSpec) -> list[tuple[int, int]]:
    """Group endpoints by their multinomial weight.

    Returns (weight, multiplicity) pairs sorted by descending weight, where
    multiplicity counts the endpoints sharing that weight. Endpoints with the
    same sorted count multiset form one partition class of size
    d! / prod(repetition factorials); classes with coinciding weights are
    merged. The multiplicities sum to C(n + d - 1, d - 1).
    """
    n, d = spec.n, spec.d
    merged: dict[int, int] = {}
    for partition in _partitions_descending(n, d, n if n else 1):
        padded = partition + (0,) * (d - len(partition))
        repeats = Counter(padded)
        classes = factorial(d)
        for count in repeats.values():
            classes //= factorial(count)
        weight = multinomial(n, padded)
        merged[weight] = merged.get(weight, 0) + classes
    pairs = sorted(merged.items(), key=lambda item: item[0], reverse=True)
    if sum(mult for _, mult in pairs) != distinct_pack_count(spec):
        raise AssertionError(f"endpoint classes for {spec} lost endpoints")
    return pairs


class EndpointSpectrum:
    """Endpoint probabilities of a pack shape, aggregated for the exact oracle.

    Holds one entry per distinct probability value together with its
    multiplicity, and grows three aligned sequences on demand: the power sums
    S_j, the elementary symmetric values e_m, and the survival probabilities
    P[X > m] = m! * e_m. Construct through :func:`endpoint_spectrum`.

    Two arithmetic modes exist. ``"rational"`` keeps everything as exact
    Fractions. ``"decimal"`` works at a fixed number of significant digits
    and tracks a conservative absolute error bound for every survival value;
    if any bound crosses the alarm threshold the sticky ``precision_alarm``
    flag is raised. In decimal mode, classes whose current power has decayed
    below 10**-(precision + 12) times the leading class's power are dropped
    from later power sums, which stays far below the tracked error bounds.

    Instances are not thread-safe; share them only with external locking.
    """

    def __init__(
        self,
        spec: PackSpec,
        mode: str,
        precision: int | None,
        alarm_threshold: Decimal | None,
    ) -> None:
        if mode not in ("rational", "decimal"):
            raise ValueError(f"unknown spectrum mode: {mode!r}")
        self.spec = spec
        self.mode = mode
        self.num_endpoints = distinct_pack_count(spec)
        classes = _endpoint_classes(spec)
        self.num_classes = len(classes)
        self._weights = [w for w, _ in classes]
        self._mults = [m for _, m in classes]
        self._power_sums: list[Number] = []
        self._elem: list[Number] = []
        self._surv: list[Number] = []
        self.precision: int | None = None
        self._alarm = False

        if mode == "rational":
            self._den = spec.d**spec.n
            self._int_cur = list(self._weights)
            self._den_cur = self._den
            if sum(m * w for w, m in classes) != self._den:
                raise AssertionError(f"endpoint probabilities for {spec} do not sum to 1")
            self._elem = [Fraction(1)]
        else:
            if precision is None:
                precision = DEFAULT_PRECISION
            if precision < 4:
                raise ValueError(f"decimal precision must be at least 4, got {precision}")
            self.precision = precision
            self._ctx = decimal.Context(prec=precision, Emax=10**9, Emin=-(10**9))
            with decimal.localcontext(self._ctx):
                den = Decimal(self._den_common(spec))
                self._values = [Decimal(w) / den for w in self._weights]
                self._dec_mults = [Decimal(m) for m in self._mults]
                self._cur = list(self._values)
                self._ulp = Decimal(10) ** (1 - precision)
                self._prune = Decimal(10) ** (-(precision + 12))
                if alarm_threshold is None:
                    alarm_threshold = Decimal(10) ** (-(precision // 2))
                self._elem = [Decimal(1)]
                self._elem_err: list[Decimal] = [Decimal(0)]
                self._fact = Decimal(1)
                self._surv_err: list[Decimal] = []
                self._srel: list[Decimal] = []
            self._active = self.num_classes
        self.alarm_threshold = alarm_threshold if mode == "decimal" else None
        self.max_survival_error: Decimal | None = Decimal(0) if mode == "decimal" else None

    @staticmethod
    def _den_common(spec: PackSpec) -> int:
        return spec.d**spec.n

    @property
    def max_power(self) -> int:
        """Highest power sum index computed so far (0 before any growth)."""
        return len(self._power_sums)

    @property
    def precision_alarm(self) -> bool:
        """True once any survival error bound exceeded the alarm threshold."""
        return self._alarm

    def power_sum(self, j: int) -> Number:
        """S_j = sum over endpoints of q^j, for 1 <= j <= max_power.

        Raises:
            ValueError: if ``j`` is out of the computed range; call
                :meth:`ensure_power` first to grow it.
        """
        if j < 1 or j > len(self._power_sums):
            raise ValueError(
                f"power sum index {j} outside computed range 1..{len(self._power_sums)}"
            )
        return self._power_sums[j - 1]

    def ensure_power(self, j: int) -> None:
        """Extend the power sums so that S_1..S_j are available."""
        if self.mode == "rational":
            while len(self._power_sums) < j:
                if self._power_sums:
                    self._int_cur = [
                        c * w for c, w in zip(self._int_cur, self._weights)
                    ]
                    self._den_cur *= self._den
                total = sum(m * c for m, c in zip(self._mults, self._int_cur))
                self._power_sums.append(Fraction(total, self._den_cur))
            return
        with decimal.localcontext(self._ctx):
            while len(self._power_sums) < j:
                if self._power_sums:
                    cur = self._cur
                    values = self._values
                    for i in range(self._active):
                        cur[i] *= values[i]
                total = Decimal(0)
                cur = self._cur
                mults = self._dec_mults
                for i in range(self._active):
                    total += mults[i] * cur[i]
                j_new = len(self._power_sums) + 1
                self._power_sums.append(total)
                # First-order bound: conversion, j_new power roundings, one
                # product and one add per class, plus the pruning slack.
                self._srel.append(Decimal(self.num_classes + j_new + 4) * self._ulp)
                # Drop classes that can no longer move S at this precision.
                cutoff = cur[0] * self._prune
                while self._active > 1 and cur[self._active - 1] < cutoff:
                    self._active -= 1

    def _extend_newton(self, m: int) -> None:
        if m > len(self._power_sums):
            raise ValueError(
                f"survival at {m} needs power sums up to {m}; call ensure_power"
            )
        if self.mode == "rational":
            while len(self._elem) <= m:
                k = len(self._elem)
                acc = Fraction(0)
                for idx in range(1, k + 1):
                    term = self._elem[k - idx] * self._power_sums[idx - 1]
                    acc += term if idx % 2 == 1 else -term
                e_k = acc / k
                self._elem.append(e_k)
                if k >= 2:
                    self._surv.append(factorial(k) * e_k)
            return
        with decimal.localcontext(self._ctx):
            ulp = self._ulp
            while len(self._elem) <= m:
                k = len(self._elem)
                acc = Decimal(0)
                acc_abs = Decimal(0)
                err = Decimal(0)
                for idx in range(1, k + 1):
                    e_prev = self._elem[k - idx]
                    s = self._power_sums[idx - 1]
                    term = e_prev * s
                    acc += term if idx % 2 == 1 else -term
                    mag = abs(term)
                    acc_abs += mag
                    err += self._elem_err[k - idx] * s
                    err += mag * (self._srel[idx - 1] + 2 * ulp)
                err += Decimal(k) * ulp * acc_abs
                e_k = acc / Decimal(k)
                self._elem.append(e_k)
                self._elem_err.append(err / Decimal(k) + 2 * ulp * abs(e_k))
                self._fact *= Decimal(k)
                if k >= 2:
                    surv = self._fact * e_k
                    surv_err = self._fact * self._elem_err[k] + Decimal(
                        k + 2
                    ) * ulp * abs(surv)
                    self._surv.append(surv)
                    self._surv_err.append(surv_err)
                    if surv_err > self.max_survival_error:
                        self.max_survival_error = surv_err
                    if surv_err > self.alarm_threshold:
                        self._alarm = True

    def survival(self, m: int) -> Number:
        """P[X > m]: probability the first m packs have pairwise distinct endpoints.

        Exact 1 for m <= 1 and exact 0 beyond the number of distinct
        endpoints, in both modes.

        Raises:
            ValueError: if ``m`` is negative, or ``m`` exceeds
                :attr:`max_power` while inside the support.
        """
        one: Number = Fraction(1) if self.mode == "rational" else Decimal(1)
        if m < 0:
            raise ValueError(f"pack count must be non-negative, got {m}")
        if m <= 1:
            return one
        if m > self.num_endpoints:
            return one - one
        if m > len(self._power_sums):
            raise ValueError(
                f"survival at {m} exceeds max_power={len(self._power_sums)}; "
                "call ensure_power first"
            )
        self._extend_newton(m)
        return self._surv[m - 2]

    def survival_error(self, m: int) -> Decimal | None:
        """Tracked absolute error bound for ``survival(m)`` (decimal mode only)."""
        if self.mode == "rational":
            return None
        if m <= 1 or m > self.num_endpoints:
            return Decimal(0)
        if m - 2 >= len(self._surv_err):
            raise ValueError(f"survival at {m} has not been computed yet")
        return self._surv_err[m - 2]


def endpoint_spectrum(
    spec: PackSpec,
    max_power: int,
    *,
    mode: str | None = None,
    precision: int | None = None,
    alarm_threshold: Decimal | None = None,
    endpoint_ceiling: int = DEFAULT_ENDPOINT_CEILING,
) -> EndpointSpectrum:
    """Build the endpoint spectrum of ``spec`` with S_1..S_max_power ready.

    Args:
        spec: pack shape.
        max_power: highest power sum to precompute; :meth:`ensure_power` can
            grow past it later.
        mode: force ``"rational"`` or ``"decimal"``; by default rational is
            chosen when the endpoint count is at most 10**4 and ``max_power``
            at most 200, decimal otherwise.
        precision: significant digits for decimal mode (default 128).
        alarm_threshold: absolute survival error that trips the precision
            alarm (default 10**-(precision // 2)).
        endpoint_ceiling: refuse specs with more distinct endpoints than
            this, as a resource guard (default 10**7).

    Raises:
        ValueError: on invalid arguments or when the endpoint count exceeds
            ``endpoint_ceiling``.
    """
    if max_power < 0:
        raise ValueError(f"max_power must be non-negative, got {max_power}")
    count = distinct_pack_count(spec)
    if count > endpoint_ceiling:
        raise ValueError(
            f"{spec} has {count} distinct endpoints, above the ceiling "
            f"{endpoint_ceiling}; raise endpoint_ceiling to proceed"
        )
    if mode is None:
        mode = (
            "rational"
            if count <= EXACT_ENDPOINT_LIMIT and max_power <= EXACT_POWER_LIMIT
            else "decimal"
        )
    if mode == "rational" and precision is not None:
        raise ValueError("precision applies to decimal mode only")
    spectrum = EndpointSpectrum(spec, mode, precision, alarm_threshold)
    spectrum.ensure_power(max_power)
    return spectrum


def exact_survival(spectrum: EndpointSpectrum, m: int) -> Number:
    """P[X > m] under the exact oracle; see :meth:`EndpointSpectrum.survival`."""
    return spectrum.survival(m)


@dataclass(frozen=True)
class FirstMatchLaw:
    """Truncated first-match distribution with its bookkeeping.

    ``pmf[l]`` is P[X = l] for l = 2..last_index; ``expectation`` is E[X]
    including the tail bound's worth of slack at most; ``tail_bound`` bounds
    the probability-weighted mass ignored past ``last_index``. ``model`` is
    ``"exact-oracle"`` here (the pairwise closed form reports through
    :class:`SeriesExpectation` instead). In decimal mode ``survival_error``
    carries the largest tracked error bound and ``precision_alarm`` mirrors
    the spectrum's sticky flag.
    """

    model: str
    mode: str
    pmf: dict[int, Number]
    expectation: Number
    tail_bound: Number
    last_index: int
    precision: int | None = None
    precision_alarm: bool = False
    survival_error: Decimal | None = None


def exact_pmf_and_expectation(
    spectrum: EndpointSpectrum, tol: float = DEFAULT_TOLERANCE
) -> FirstMatchLaw:
    """First-match law under the exact oracle, truncated at tolerance ``tol``.

    Walks m = 2, 3, ... computing survivals, growing the spectrum's power
    sums as needed. P[X = m] = P[X > m - 1] - P[X > m] and
    E[X] = sum of survivals. Stops exactly when the survival hits 0 (always
    within num_endpoints + 1 packs) or, in decimal mode, once the survival
    and its geometric tail bound both fall below ``tol``; survival ratios are
    decreasing, which makes the geometric bound valid. The pmf then sums to 1
    up to the reported tail.
    """
    one: Number
    zero: Number
    if spectrum.mode == "rational":
        one, zero = Fraction(1), Fraction(0)
        tolerance: Number = Fraction(Decimal(str(tol)))
    else:
        one, zero = Decimal(1), Decimal(0)
        tolerance = Decimal(str(tol))
    pmf: dict[int, Number] = {}
    expectation = one + one  # survivals at m = 0 and m = 1
    previous = one
    tail = zero
    m = 2
    while True:
        if m > spectrum.num_endpoints:
            survival = zero
        else:
            spectrum.ensure_power(m)
            survival = spectrum.survival(m)
            if survival < 0:
                # Roundoff past the bottom of the support; clamp.
                survival = zero
        mass = previous - survival
        pmf[m] = mass if mass > 0 else zero
        expectation = expectation + survival
        if survival == 0:
            tail = zero
            break
        if survival <= tolerance and survival < previous:
            ratio = survival / previous
            tail = survival * ratio / (1 - ratio)
            if tail <= tolerance:
                break
        previous = survival
        m += 1
    return FirstMatchLaw(
        model="exact-oracle",
        mode=spectrum.mode,
        pmf=pmf,
        expectation=expectation,
        tail_bound=tail,
        last_index=m,
        precision=spectrum.precision,
        precision_alarm=spectrum.precision_alarm,
        survival_error=spectrum.max_survival_error,
    )


@dataclass(frozen=True)
class PackSizeDistribution:
    """Probability distribution over pack sizes, with exact rational weights.

    ``weights`` maps each pack size to a positive Fraction; the weights sum
    to exactly 1 (parsing renormalises near-1 decimal input before
    construction). Build through :meth:`from_pairs`, :meth:`from_text`, or
    :meth:`from_file`.
    """

    weights: tuple[tuple[int, Fraction], ...]

    def __post_init__(self) -> None:
        if not self.weights:
            raise ValueError("pack size distribution must have at least one entry")
        total = Fraction(0)
        seen: set[int] = set()
        for size, weight in self.weights:
            if size < 0:
                raise ValueError(f"pack size must be non-negative, got {size}")
            if size in seen:
                raise ValueError(f"duplicate pack size {size}")
            if not 0 < weight <= 1:
                raise ValueError(f"weight for size {size} must lie in (0, 1], got {weight}")
            seen.add(size)
            total += weight
        if total != 1:
            raise ValueError(f"weights must sum to exactly 1, got {total}")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[int, Fraction]]) -> "PackSizeDistribution":
        """Distribution from (size, weight) pairs; weights must sum to exactly 1."""
        return cls(tuple(sorted(((n, Fraction(w)) for n, w in pairs))))

    @classmethod
    def from_text(cls, text: str, source: str = "<text>") -> "PackSizeDistribution":
        """Parse a distribution from its text format.

        One ``SIZE WEIGHT`` pair per line; ``#`` starts a comment and blank
        lines are ignored. Weights are rationals like ``1/3`` or integers, or
        decimals like ``0.25`` and ``2.5e-1``. If every weight is rational the
        sum must equal 1 exactly; if any weight is decimal the sum must be
        within 10**-9 of 1 and the weights are then renormalised to sum to
        exactly 1.

        Raises:
            ValueError: on any malformed line or bad total, with the source
                name and 1-based line number in the message.
        """
        entries: list[tuple[int, Fraction]] = []
        saw_decimal = False
        seen: set[int] = set()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise ValueError(
                    f"{source}: line {lineno}: expected 'SIZE WEIGHT', got {raw.strip()!r}"
                )
            size_token, weight_token = tokens
            try:
                size = int(size_token)
            except ValueError:
                raise ValueError(
                    f"{source}: line {lineno}: pack size {size_token!r} is not an integer"
                ) from None
            if size < 0:
                raise ValueError(f"{source}: line {lineno}: pack size must be non-negative")
            if size in seen:
                raise ValueError(f"{source}: line {lineno}: duplicate pack size {size}")
            seen.add(size)
            try:
                if "/" in weight_token:
                    weight = Fraction(weight_token)
                elif any(c in weight_token for c in ".eE"):
                    saw_decimal = True
                    weight = Fraction(Decimal(weight_token))
                else:
                    weight = Fraction(int(weight_token))
            except (ValueError, decimal.InvalidOperation, ZeroDivisionError):
                raise ValueError(
                    f"{source}: line {lineno}: weight {weight_token!r} is not a number"
                ) from None
            if weight <= 0:
                raise ValueError(f"{source}: line {lineno}: weight must be positive")
            entries.append((size, weight))
        if not entries:
            raise ValueError(f"{source}: no entries found")
        total = sum(w for _, w in entries)
        if saw_decimal:
            if abs(total - 1) > Fraction(1, 10**9):
                raise ValueError(
                    f"{source}: decimal weights sum to {float(total)}, "
                    "more than 1e-9 away from 1"
                )
            entries = [(n, w / total) for n, w in entries]
        elif total != 1:
            raise ValueError(f"{source}: rational weights sum to {total}, expected exactly 1")
        return cls.from_pairs(entries)

    @classmethod
    def from_file(cls, path: object) -> "PackSizeDistribution":
        """Parse a distribution file; see :meth:`from_text` for the format."""
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_text(handle.read(), source=str(path))

    def sizes(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.weights)


def mixture_match_probability(distribution: PackSizeDistribution, d: int) -> Fraction:
    """Probability two packs match when sizes are drawn from ``distribution``.

    Both packs draw a size independently from the distribution, then fill
    with ``d`` colors; matching requires equal sizes and equal contents, so
    the answer is sum over sizes of weight(n)^2 * match probability at n.

    Raises:
        ValueError: if ``d`` is not positive.
    """
    if d < 1:
        raise ValueError(f"color count must be positive, got {d}")
    total = Fraction(0)
    for size, weight in distribution.weights:
        total += weight * weight * coincidence_probability(PackSpec(size, d))
    return total

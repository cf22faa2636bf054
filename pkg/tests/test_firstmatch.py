"""First-duplicate distribution: pairwise closed form and exact oracle."""

from __future__ import annotations

import itertools
import math
from decimal import Decimal
from fractions import Fraction

import pytest

from packmatch.coincidence import (
    PackSpec,
    coincidence_probability,
    compositions,
    distinct_pack_count,
    endpoint_probability,
)
from packmatch.exactmath import factorial
from packmatch.firstmatch import (
    DEFAULT_PRECISION,
    EXACT_ENDPOINT_LIMIT,
    PackSizeDistribution,
    endpoint_spectrum,
    exact_pmf_and_expectation,
    exact_survival,
    mixture_match_probability,
    pairwise_expectation,
    pairwise_pmf,
)


def pairwise_term(p: Fraction, index: int) -> Fraction:
    """Exact expectation-series term: l * (l-1) * p * (1-p)^C(l-1, 2)."""
    exponent = (index - 1) * (index - 2) // 2
    return index * (index - 1) * p * (1 - p) ** exponent


class TestPairwisePmf:
    def test_examples(self):
        assert pairwise_pmf(Fraction(1, 2), 2) == Fraction(1, 2)
        assert pairwise_pmf(Fraction(1, 3), 3) == Fraction(4, 9)
        assert pairwise_pmf(Fraction(1, 3), 4) == Fraction(8, 27)
        assert pairwise_pmf(Fraction(1, 4), 1) == 0

    def test_value_at_two_equals_pair_probability(self):
        for p in [Fraction(1, 7), Fraction(3, 8), Fraction(1), Fraction(0)]:
            assert pairwise_pmf(p, 2) == p

    def test_values_lie_in_unit_interval(self):
        for p in [Fraction(1, 10), Fraction(1, 2), Fraction(9, 10)]:
            for length in range(1, 40):
                assert 0 <= pairwise_pmf(p, length) <= 1

    def test_validation(self):
        with pytest.raises(ValueError):
            pairwise_pmf(Fraction(3, 2), 2)
        with pytest.raises(ValueError):
            pairwise_pmf(Fraction(-1, 2), 2)
        with pytest.raises(ValueError):
            pairwise_pmf(Fraction(1, 2), 0)

    def test_total_mass_can_exceed_one(self):
        # Permanent witness that this model is not a true pmf: at p = 1/3 the
        # first three terms already sum to 29/27 > 1. The pairwise match
        # indicators are only pairwise independent, not mutually independent.
        total = sum(pairwise_pmf(Fraction(1, 3), length) for length in (2, 3, 4))
        assert total == Fraction(29, 27)
        assert total > 1
        assert pairwise_pmf(Fraction(1, 3), 5) > 0  # and the series continues


class TestPairwiseExpectation:
    def test_matches_exact_partial_sums(self):
        p = Fraction(1, 3)
        series = pairwise_expectation(p)
        partial = sum(
            (pairwise_term(p, index) for index in range(2, series.last_index + 1)),
            Fraction(0),
        )
        # The 40-digit decimal summation tracks the exact partial sum to far
        # below the reported tail bound.
        assert abs(Fraction(series.value) - partial) < Fraction(1, 10**30)
        assert Decimal(0) <= series.tail_bound <= Decimal("1e-12")
        assert abs(float(series.value) - 3.979886532006703) < 1e-14

    def test_tail_bound_dominates_truncated_mass(self):
        p = Fraction(1, 3)
        series = pairwise_expectation(p, tol=1e-6)
        extended = pairwise_expectation(p, tol=1e-18)
        truncated_mass = Fraction(extended.value) - Fraction(series.value)
        assert 0 <= truncated_mass <= Fraction(series.tail_bound) + Fraction(1, 10**17)

    def test_certain_match_gives_two(self):
        series = pairwise_expectation(Fraction(1))
        assert series.value == 2
        assert series.tail_bound == 0

    def test_headline_value(self, headline_probability):
        series = pairwise_expectation(headline_probability)
        assert Decimal("128.5") <= series.value <= Decimal("129.5")
        assert abs(float(series.value) - 128.91228023047068) < 1e-10
        assert series.tail_bound <= Decimal("1e-12")
        assert series.last_index == 841

    def test_validation(self):
        with pytest.raises(ValueError):
            pairwise_expectation(Fraction(0))
        with pytest.raises(ValueError):
            pairwise_expectation(Fraction(5, 4))


class TestEndpointSpectrum:
    def test_example_power_sums(self):
        one_two = endpoint_spectrum(PackSpec(1, 2), max_power=3)
        assert one_two.mode == "rational"
        assert one_two.num_endpoints == 2
        assert one_two.power_sum(1) == 1
        assert one_two.power_sum(2) == Fraction(1, 2)

        two_two = endpoint_spectrum(PackSpec(2, 2), max_power=2)
        assert two_two.power_sum(2) == Fraction(3, 8)

        one_three = endpoint_spectrum(PackSpec(1, 3), max_power=3)
        assert one_three.power_sum(2) == Fraction(1, 3)
        assert one_three.power_sum(3) == Fraction(1, 9)

    def test_second_power_sum_equals_pair_match_probability(self):
        # S_2 = sum q_v^2 is exactly the single-pair match probability.
        for n in range(7):
            for d in range(1, 5):
                spec = PackSpec(n, d)
                spectrum = endpoint_spectrum(spec, max_power=2)
                assert spectrum.power_sum(2) == coincidence_probability(spec)

    def test_first_power_sum_is_one(self):
        for n, d in [(0, 3), (1, 1), (4, 3), (6, 2)]:
            assert endpoint_spectrum(PackSpec(n, d), max_power=1).power_sum(1) == 1

    def test_power_sums_strictly_decreasing(self):
        # Non-degenerate spectra have every q_v < 1, so S_(j+1) < S_j.
        spectrum = endpoint_spectrum(PackSpec(3, 3), max_power=10)
        for j in range(1, 10):
            assert spectrum.power_sum(j + 1) < spectrum.power_sum(j)

    def test_power_sums_decreasing_in_decimal_mode(self, headline_spec):
        spectrum = endpoint_spectrum(headline_spec, max_power=12)
        assert spectrum.mode == "decimal"
        assert abs(spectrum.power_sum(1) - 1) < Decimal("1e-100")
        for j in range(1, 12):
            assert spectrum.power_sum(j + 1) < spectrum.power_sum(j)

    def test_mode_selection_gates(self, headline_spec):
        assert endpoint_spectrum(PackSpec(8, 4), max_power=10).mode == "rational"
        assert distinct_pack_count(headline_spec) > EXACT_ENDPOINT_LIMIT
        big = endpoint_spectrum(headline_spec, max_power=2)
        assert big.mode == "decimal"
        assert big.precision == DEFAULT_PRECISION
        deep = endpoint_spectrum(PackSpec(2, 2), max_power=201)
        assert deep.mode == "decimal"
        forced = endpoint_spectrum(PackSpec(3, 3), max_power=4, mode="decimal", precision=30)
        assert forced.mode == "decimal"
        assert forced.precision == 30

    def test_validation(self):
        with pytest.raises(ValueError):
            endpoint_spectrum(PackSpec(2, 2), max_power=-1)
        with pytest.raises(ValueError):
            endpoint_spectrum(PackSpec(2, 2), max_power=2, mode="float")
        with pytest.raises(ValueError):
            endpoint_spectrum(PackSpec(2, 2), max_power=2, mode="rational", precision=50)
        with pytest.raises(ValueError):
            endpoint_spectrum(PackSpec(2, 2), max_power=2, mode="decimal", precision=2)

    def test_endpoint_ceiling_guard(self):
        with pytest.raises(ValueError, match="ceiling"):
            endpoint_spectrum(PackSpec(60, 5), max_power=2, endpoint_ceiling=1000)
        with pytest.raises(ValueError, match="ceiling"):
            # C(139, 39) is astronomically above the default 10^7 ceiling.
            endpoint_spectrum(PackSpec(100, 40), max_power=2)

    def test_power_sum_range_checks(self):
        spectrum = endpoint_spectrum(PackSpec(2, 2), max_power=3)
        with pytest.raises(ValueError):
            spectrum.power_sum(0)
        with pytest.raises(ValueError):
            spectrum.power_sum(4)
        spectrum.ensure_power(5)
        assert spectrum.max_power == 5
        assert spectrum.power_sum(4) > 0


class TestExactSurvival:
    def test_examples(self):
        one_two = endpoint_spectrum(PackSpec(1, 2), max_power=3)
        assert exact_survival(one_two, 2) == Fraction(1, 2)
        assert exact_survival(one_two, 3) == 0
        one_three = endpoint_spectrum(PackSpec(1, 3), max_power=3)
        assert exact_survival(one_three, 3) == Fraction(2, 9)

    def test_boundary_values(self):
        spectrum = endpoint_spectrum(PackSpec(2, 3), max_power=6)
        assert exact_survival(spectrum, 0) == 1
        assert exact_survival(spectrum, 1) == 1
        assert exact_survival(spectrum, spectrum.num_endpoints + 1) == 0
        assert exact_survival(spectrum, 10**6) == 0
        with pytest.raises(ValueError):
            exact_survival(spectrum, -1)

    def test_non_increasing_and_zero_after_support(self):
        spectrum = endpoint_spectrum(PackSpec(2, 3), max_power=7)
        values = [exact_survival(spectrum, m) for m in range(8)]
        for earlier, later in zip(values, values[1:]):
            assert later <= earlier
        assert values[6] > 0  # all 6 distinct endpoints can still be distinct
        assert values[7] == 0  # pigeonhole beyond the support

    def test_requires_power_sums(self):
        spectrum = endpoint_spectrum(PackSpec(3, 3), max_power=2)
        with pytest.raises(ValueError, match="ensure_power"):
            spectrum.survival(5)
        spectrum.ensure_power(5)
        assert spectrum.survival(5) > 0

    def test_newton_matches_direct_expansion(self):
        # m! * e_m from Newton's identities vs. the m-th elementary symmetric
        # polynomial expanded literally over the endpoint probabilities.
        for n, d in [(2, 2), (4, 2), (2, 3), (1, 4), (3, 3), (2, 4)]:
            spec = PackSpec(n, d)
            values = [endpoint_probability(spec, c) for c in compositions(spec)]
            assert len(values) <= 12
            spectrum = endpoint_spectrum(spec, max_power=6)
            for m in range(2, 7):
                direct = sum(
                    (math.prod(combo) for combo in itertools.combinations(values, m)),
                    Fraction(0),
                )
                assert spectrum.survival(m) == factorial(m) * direct

    def test_decimal_mode_matches_rational_within_tracked_error(self):
        spec = PackSpec(3, 3)
        exact = endpoint_spectrum(spec, max_power=10)
        approx = endpoint_spectrum(spec, max_power=10, mode="decimal", precision=40)
        for m in range(2, 11):
            reference = exact.survival(m)
            value = approx.survival(m)
            error = approx.survival_error(m)
            assert error is not None and error >= 0
            assert abs(Fraction(value) - reference) <= Fraction(error)
            assert error < Decimal("1e-20")

    def test_survival_error_reporting(self):
        rational = endpoint_spectrum(PackSpec(2, 2), max_power=3)
        rational.survival(2)
        assert rational.survival_error(2) is None

        spectrum = endpoint_spectrum(PackSpec(3, 3), max_power=6, mode="decimal", precision=40)
        assert spectrum.survival_error(0) == 0
        assert spectrum.survival_error(1) == 0
        assert spectrum.survival_error(spectrum.num_endpoints + 5) == 0
        with pytest.raises(ValueError):
            spectrum.survival_error(3)  # not computed yet
        spectrum.survival(3)
        assert spectrum.survival_error(3) >= 0


class TestPrecisionAlarm:
    def test_trips_at_low_precision(self):
        spectrum = endpoint_spectrum(PackSpec(8, 3), max_power=2, mode="decimal", precision=6)
        law = exact_pmf_and_expectation(spectrum, tol=1e-9)
        assert law.precision_alarm
        assert spectrum.precision_alarm
        assert spectrum.max_survival_error > spectrum.alarm_threshold

    def test_silent_at_adequate_precision(self):
        spectrum = endpoint_spectrum(PackSpec(8, 3), max_power=2, mode="decimal", precision=50)
        law = exact_pmf_and_expectation(spectrum, tol=1e-12)
        assert not law.precision_alarm
        assert spectrum.max_survival_error < spectrum.alarm_threshold

    def test_flagship_run_stays_silent(self, headline_law):
        assert headline_law.precision == DEFAULT_PRECISION
        assert not headline_law.precision_alarm
        assert headline_law.survival_error < Decimal("1e-60")


class TestExactLaw:
    def test_one_item_three_colors(self):
        law = exact_pmf_and_expectation(endpoint_spectrum(PackSpec(1, 3), max_power=2))
        assert law.model == "exact-oracle"
        assert law.mode == "rational"
        assert law.pmf == {2: Fraction(1, 3), 3: Fraction(4, 9), 4: Fraction(2, 9)}
        assert law.expectation == Fraction(26, 9)
        assert law.tail_bound == 0
        assert law.last_index == 4

    def test_one_item_two_colors(self):
        law = exact_pmf_and_expectation(endpoint_spectrum(PackSpec(1, 2), max_power=2))
        assert law.pmf == {2: Fraction(1, 2), 3: Fraction(1, 2)}
        assert law.expectation == Fraction(5, 2)

    def test_empty_pack_always_matches_second_purchase(self):
        law = exact_pmf_and_expectation(endpoint_spectrum(PackSpec(0, 7), max_power=2))
        assert law.pmf == {2: Fraction(1)}
        assert law.expectation == 2
        assert law.last_index == 2

    def test_rational_laws_are_exact_distributions(self):
        for n, d in [(1, 2), (1, 3), (2, 2), (2, 3), (3, 2), (3, 3)]:
            law = exact_pmf_and_expectation(
                endpoint_spectrum(PackSpec(n, d), max_power=2)
            )
            assert law.mode == "rational"
            assert law.tail_bound == 0
            assert all(mass >= 0 for mass in law.pmf.values())
            assert sum(law.pmf.values()) == 1
            mean = sum(
                (length * mass for length, mass in law.pmf.items()), Fraction(0)
            )
            assert mean == law.expectation
            assert max(law.pmf) == distinct_pack_count(PackSpec(n, d)) + 1

    def test_flagship_decimal_law(self, headline_law):
        assert headline_law.mode == "decimal"
        assert abs(float(headline_law.expectation) - 128.07199587359997) < 5e-9
        assert Decimal(0) < headline_law.tail_bound <= Decimal("1e-12")
        assert all(mass >= 0 for mass in headline_law.pmf.values())
        total = sum(headline_law.pmf.values())
        assert abs(float(total) - 1.0) < 1e-11
        assert headline_law.last_index == max(headline_law.pmf)

    def test_pairwise_model_approaches_oracle_when_collisions_are_rare(
        self, headline_probability, headline_law
    ):
        # At p ~ 1e-4 the pairwise-independence approximation is good: the
        # two expectations differ, but by well under 5%.
        series = pairwise_expectation(headline_probability)
        exact = Fraction(headline_law.expectation)
        approx = Fraction(series.value)
        assert approx != exact
        assert abs(approx - exact) / exact < Fraction(5, 100)

    def test_model_discrepancy_on_enumerable_case(self):
        # Same comparison where collisions are common: the pairwise model is
        # far off (37.8% high), which is why the exact oracle exists.
        law = exact_pmf_and_expectation(endpoint_spectrum(PackSpec(1, 3), max_power=2))
        series = pairwise_expectation(Fraction(1, 3))
        relative = abs(Fraction(series.value) - law.expectation) / law.expectation
        assert relative > Fraction(1, 3)


class TestPackSizeDistribution:
    def test_from_pairs_sorted_and_exact(self):
        dist = PackSizeDistribution.from_pairs([(2, Fraction(1, 2)), (1, Fraction(1, 2))])
        assert dist.sizes() == (1, 2)
        assert dict(dist.weights) == {1: Fraction(1, 2), 2: Fraction(1, 2)}

    def test_construction_validation(self):
        with pytest.raises(ValueError):
            PackSizeDistribution(())
        with pytest.raises(ValueError):
            PackSizeDistribution.from_pairs([(1, Fraction(1, 2)), (1, Fraction(1, 2))])
        with pytest.raises(ValueError):
            PackSizeDistribution.from_pairs([(-1, Fraction(1))])
        with pytest.raises(ValueError):
            PackSizeDistribution.from_pairs([(1, Fraction(0)), (2, Fraction(1))])
        with pytest.raises(ValueError):
            PackSizeDistribution.from_pairs([(1, Fraction(1, 2)), (2, Fraction(1, 3))])

    def test_from_text_rational(self):
        dist = PackSizeDistribution.from_text("# sizes\n\n1 1/2  # half\n2 1/2\n")
        assert dict(dist.weights) == {1: Fraction(1, 2), 2: Fraction(1, 2)}

    def test_from_text_integer_weight_degenerate(self):
        dist = PackSizeDistribution.from_text("60 1\n")
        assert dist.weights == ((60, Fraction(1)),)

    def test_from_text_decimal_weights_renormalized(self):
        dist = PackSizeDistribution.from_text("1 0.25\n2 0.5\n3 0.2500000001\n")
        total = sum(w for _, w in dist.weights)
        assert total == 1
        weights = dict(dist.weights)
        raw_total = Fraction(1, 4) + Fraction(1, 2) + Fraction("0.2500000001")
        assert weights[2] == Fraction(1, 2) / raw_total

    def test_from_text_scientific_notation(self):
        dist = PackSizeDistribution.from_text("1 2.5e-1\n2 7.5e-1\n")
        assert dict(dist.weights) == {1: Fraction(1, 4), 2: Fraction(3, 4)}

    def test_from_text_error_messages_carry_line_numbers(self):
        with pytest.raises(ValueError, match=r"line 2: expected 'SIZE WEIGHT'"):
            PackSizeDistribution.from_text("1 1/2\n2 1/2 extra\n")
        with pytest.raises(ValueError, match=r"line 1: pack size 'x'"):
            PackSizeDistribution.from_text("x 1/2\n")
        with pytest.raises(ValueError, match=r"line 2: weight 'abc'"):
            PackSizeDistribution.from_text("1 1/2\n2 abc\n")
        with pytest.raises(ValueError, match=r"line 1: pack size must be non-negative"):
            PackSizeDistribution.from_text("-1 1\n")
        with pytest.raises(ValueError, match=r"line 2: duplicate pack size 1"):
            PackSizeDistribution.from_text("1 1/2\n1 1/2\n")
        with pytest.raises(ValueError, match=r"line 2: weight must be positive"):
            PackSizeDistribution.from_text("1 1/2\n2 0/5\n")
        with pytest.raises(ValueError, match=r"line 1: weight '1/0'"):
            PackSizeDistribution.from_text("1 1/0\n")

    def test_from_text_total_validation(self):
        with pytest.raises(ValueError, match="expected exactly 1"):
            PackSizeDistribution.from_text("1 1/2\n2 1/3\n")
        with pytest.raises(ValueError, match="away from 1"):
            PackSizeDistribution.from_text("1 0.4\n2 0.5\n")
        with pytest.raises(ValueError, match="no entries"):
            PackSizeDistribution.from_text("# only comments\n")

    def test_from_file(self, tmp_path):
        path = tmp_path / "sizes.txt"
        path.write_text("1 1/3\n2 2/3\n", encoding="utf-8")
        dist = PackSizeDistribution.from_file(path)
        assert dict(dist.weights) == {1: Fraction(1, 3), 2: Fraction(2, 3)}

    def test_from_file_missing_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            PackSizeDistribution.from_file(tmp_path / "absent.txt")


class TestMixtureMatchProbability:
    def test_degenerate_reduces_to_single_shape(self, headline_spec):
        dist = PackSizeDistribution.from_pairs([(60, Fraction(1))])
        assert mixture_match_probability(dist, 5) == coincidence_probability(headline_spec)

    def test_uniform_on_two_sizes(self):
        dist = PackSizeDistribution.from_pairs(
            [(1, Fraction(1, 2)), (2, Fraction(1, 2))]
        )
        # (1/2)^2 * 1/2 + (1/2)^2 * 3/8 = 7/32 = 0.21875
        assert mixture_match_probability(dist, 2) == Fraction(7, 32)

    def test_uniform_on_one_size_three_colors(self):
        dist = PackSizeDistribution.from_pairs([(1, Fraction(1))])
        assert mixture_match_probability(dist, 3) == Fraction(1, 3)

    def test_invalid_color_count(self):
        dist = PackSizeDistribution.from_pairs([(1, Fraction(1))])
        with pytest.raises(ValueError):
            mixture_match_probability(dist, 0)

    def test_mixture_never_exceeds_max_component(self):
        dist = PackSizeDistribution.from_pairs(
            [(1, Fraction(1, 4)), (2, Fraction(1, 4)), (3, Fraction(1, 2))]
        )
        value = mixture_match_probability(dist, 3)
        components = [coincidence_probability(PackSpec(n, 3)) for n in (1, 2, 3)]
        assert 0 < value < max(components)

"""
Tests for utils/instance_generators.py and utils/random_streams.py.
Run: python3 -m pytest tests/test_instance_generators.py -v
"""
import os
import sys
from fractions import Fraction

import pytest
from pydantic import ValidationError

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from utils.experiment_models import GeneratorSpec
from utils.fair_instance import bundle_value
from utils.instance_generators import (
    GeneratorError, counterexample, example1, generate, item_distributions, parse_distribution,
    proportional_count_allocation, proportional_counts, proportional_floor_holds,
    random_entitlements, stochastic_agents, stochastic_items,
)
from utils.random_streams import child_seed, make_rng, quantize


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------

class TestRandomStreams:
    def test_streams_are_reproducible(self):
        a = make_rng(42, 1, 2).uniform(size=5)
        b = make_rng(42, 1, 2).uniform(size=5)
        assert list(a) == list(b)

    def test_streams_are_independent_of_each_other(self):
        a = make_rng(42, 1).uniform(size=5)
        b = make_rng(42, 2).uniform(size=5)
        assert list(a) != list(b)

    def test_child_seed_is_64_bit_and_stable(self):
        s = child_seed(7, 3)
        assert 0 <= s < 2 ** 64
        assert s == child_seed(7, 3)
        assert s != child_seed(7, 4)

    def test_bad_seed(self):
        with pytest.raises(ValueError):
            make_rng(-1)
        with pytest.raises(ValueError):
            make_rng(2 ** 64)

    def test_quantize(self):
        assert quantize(0.123456) == Fraction(1235, 10000)
        assert quantize(12.3449, 2) == Fraction(1234, 100)


# ---------------------------------------------------------------------------
# Fixed families
# ---------------------------------------------------------------------------

class TestCounterexample:
    def test_three_agents(self):
        inst = counterexample(3, Fraction(1, 100))
        assert inst.agent_count == 3 and inst.item_count == 5
        assert inst.entitlements == (Fraction(1, 100), Fraction(1, 100), Fraction(49, 50))
        assert inst.valuations[2][0] == Fraction(49, 150)
        assert inst.valuations[0][2] == Fraction(49, 50)
        for i in inst.agents:
            assert inst.total_value(i) == 1

    def test_two_agents_have_three_items(self):
        inst = counterexample(2, Fraction(1, 4))
        assert inst.item_count == 3
        assert inst.entitlements == (Fraction(1, 4), Fraction(3, 4))

    def test_accepts_text_epsilon(self):
        assert counterexample(3, "1/100") == counterexample(3, Fraction(1, 100))

    @pytest.mark.parametrize("n,eps", [(1, "1/10"), (3, "0"), (3, "1/2"), (2, "1")])
    def test_rejects_bad_parameters(self, n, eps):
        with pytest.raises(GeneratorError):
            counterexample(n, eps)


def test_worked_example_fixture():
    inst, fix = example1()
    assert inst.valuations[0] == (4, 4, 4, 3, 9)
    assert inst.valuations[1] == inst.valuations[0]
    assert inst.entitlements == (Fraction(1, 3), Fraction(2, 3))
    assert bundle_value(inst, 0, fix.allocation_a.bundles[1]) == 15
    assert fix.allocation_a_prime.complete


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

class TestDistributions:
    def test_parse_kinds(self):
        assert parse_distribution("uniform:0,1").mean == Fraction(1, 2)
        assert parse_distribution("point:0.25").params == (Fraction(1, 4),)
        emp = parse_distribution("empirical:0.1;0.3")
        assert emp.mean == Fraction(1, 5)
        assert emp.describe() == "empirical:1/10;3/10"

    @pytest.mark.parametrize("text", [
        "normal:0,1", "uniform:0.5,0.2", "uniform:0", "point:2", "empirical:", "uniform:a,b",
    ])
    def test_parse_errors(self, text):
        with pytest.raises(GeneratorError):
            parse_distribution(text)

    def test_point_mass_instance(self):
        inst = stochastic_agents(3, 4, ["point:0.5"], seed=1)
        assert all(v == Fraction(1, 2) for row in inst.valuations for v in row)

    def test_per_agent_distributions(self):
        inst = stochastic_agents(2, 3, ["point:0.1", "point:0.9"], seed=1)
        assert inst.valuations == ((Fraction(1, 10),) * 3, (Fraction(9, 10),) * 3)

    def test_wrong_distribution_count(self):
        with pytest.raises(GeneratorError):
            stochastic_agents(3, 4, ["point:0.1", "point:0.2"], seed=1)

    def test_per_item_distributions(self):
        inst = stochastic_items(2, 3, ["point:0.1", "point:0.5", "point:0.9"], seed=11)
        assert inst.valuations[0] == inst.valuations[1] == (Fraction(1, 10), Fraction(1, 2), Fraction(9, 10))

    def test_seeded_determinism(self):
        assert stochastic_agents(3, 10, seed=5) == stochastic_agents(3, 10, seed=5)
        assert stochastic_agents(3, 10, seed=5) != stochastic_agents(3, 10, seed=6)
        assert stochastic_items(3, 10, seed=5) == stochastic_items(3, 10, seed=5)

    def test_draws_are_on_the_decimal_grid(self):
        inst = stochastic_agents(2, 20, seed=3)
        assert all((v * 10 ** 4).denominator == 1 for row in inst.valuations for v in row)

    def test_item_distributions_have_a_mean_floor(self):
        dists = item_distributions(50, seed=2)
        assert len(dists) == 50
        assert all(d.mean >= Fraction(1, 5) for d in dists)
        assert all(d.params[1] <= 1 for d in dists)


# ---------------------------------------------------------------------------
# Entitlements & proportional counts
# ---------------------------------------------------------------------------

class TestEntitlements:
    def test_single_agent(self):
        assert random_entitlements(1, seed=3) == (Fraction(1),)

    def test_positive_and_normalized(self):
        ents = random_entitlements(6, seed=9)
        assert len(ents) == 6
        assert all(e > 0 for e in ents)
        assert sum(ents) == 1

    def test_streams_differ(self):
        assert random_entitlements(4, seed=9) != random_entitlements(4, seed=9, stream=(1,))

    def test_random_entitlements_in_instances(self):
        inst = stochastic_agents(3, 5, seed=4, entitlements="random")
        assert inst.entitlements == random_entitlements(3, seed=4, stream=(1,))


class TestProportionalCounts:
    def test_largest_remainder_ties_go_to_larger_entitlement(self):
        assert proportional_counts(10, (Fraction(1, 4), Fraction(7, 20), Fraction(2, 5))) == [2, 4, 4]

    def test_counts_sum_to_m(self):
        ents = random_entitlements(5, seed=1)
        for m in (0, 1, 7, 100):
            assert sum(proportional_counts(m, ents)) == m

    def test_allocation_is_complete(self):
        inst = stochastic_agents(3, 11, seed=2, entitlements=["1/2", "1/3", "1/6"])
        alloc = proportional_count_allocation(inst)
        assert alloc.complete
        assert [len(b) for b in alloc.bundles] == proportional_counts(11, inst.entitlements)

    def test_floor_holds_for_large_m(self):
        e, eps = Fraction(1, 7), Fraction(1, 10)
        # m > 1 / (eps e) = 70
        assert all(proportional_floor_holds(m, e, eps) for m in range(71, 400))
        assert not proportional_floor_holds(6, e, eps)


# ---------------------------------------------------------------------------
# Generator configs
# ---------------------------------------------------------------------------

class TestGenerate:
    def test_dispatch(self):
        spec = GeneratorSpec(family="counterexample", n=3, epsilon="1/100")
        assert spec.m == 5
        assert generate(spec) == counterexample(3, Fraction(1, 100))
        assert generate(GeneratorSpec(family="example1")) == example1()[0]

    def test_stochastic_generator(self):
        spec = GeneratorSpec(family="stochastic-agents", n=2, m=4, distributions=["point:0.3"], seed=8)
        inst = generate(spec)
        assert inst.item_count == 4
        assert inst.valuations[0][0] == Fraction(3, 10)

    def test_bids_family_needs_a_pool(self):
        with pytest.raises(GeneratorError):
            generate(GeneratorSpec(family="bids", n=2, m=3))

    @pytest.mark.parametrize("raw", [
        {"family": "counterexample", "n": 3},
        {"family": "counterexample", "n": 3, "epsilon": "1/2"},
        {"family": "stochastic-items", "n": 0, "m": 3},
        {"family": "stochastic-items", "n": 2, "m": 3, "entitlements": [1, 2, 3]},
        {"family": "stochastic-items", "n": 2, "m": 3, "seed": -1},
        {"family": "poisson", "n": 2, "m": 3},
    ])
    def test_generator_validation(self, raw):
        with pytest.raises(ValidationError):
            GeneratorSpec.model_validate(raw)

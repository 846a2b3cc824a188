"""
Tests for utils/fair_instance.py: validation, bundle values, fairness scores,
guarantee reports and the JSON formats.
Run: python3 -m pytest tests/test_fair_instance.py -v
"""
import json
import os
import sys
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from utils.fair_instance import (
    INFINITE_RATIO, InstanceError, allocation_from_json_obj, bundle_value, dump_instance,
    fairness_score, guarantee_report, instance_from_json, instance_to_json, load_instance,
    make_allocation, make_instance, min_ratio, to_fraction, validate_instance,
)
from utils.instance_generators import example1

EX1, FIX = example1()


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

class TestValidation:
    def test_entitlements_are_normalized(self):
        inst = make_instance([[1, 2], [3, 4]], [1, 2])
        assert inst.entitlements == (Fraction(1, 3), Fraction(2, 3))
        assert sum(inst.entitlements) == 1

    def test_numeric_encodings(self):
        inst = validate_instance({
            "n": 2, "m": 2,
            "entitlements": ["0.25", "3/4"],
            "valuations": [[0.1, "2/3"], [Fraction(1, 7), 5]],
        })
        assert inst.valuations[0] == (Fraction(1, 10), Fraction(2, 3))
        assert inst.valuations[1] == (Fraction(1, 7), Fraction(5))

    def test_float_goes_through_decimal_text(self):
        assert to_fraction(0.1) == Fraction(1, 10)

    @pytest.mark.parametrize("raw,fragment", [
        ({"n": 2, "m": 1, "entitlements": [1, 1], "valuations": [[1]]}, "valuation rows"),
        ({"n": 1, "m": 2, "entitlements": [1], "valuations": [[1]]}, "entries"),
        ({"n": 1, "m": 1, "entitlements": [1], "valuations": [[-1]]}, "negative"),
        ({"n": 2, "m": 1, "entitlements": [1, 0], "valuations": [[1], [1]]}, "positive"),
        ({"n": 1, "m": 1, "valuations": [[1]]}, "missing"),
        ({"n": 0, "m": 0, "entitlements": [], "valuations": []}, "at least one agent"),
        ({"n": 2.7, "m": 1, "entitlements": [1, 1], "valuations": [[1], [1]]}, "'n' must be an integer"),
        ({"n": 1, "m": "one", "entitlements": [1], "valuations": [[1]]}, "'m' must be an integer"),
        ({"n": 1, "m": 1, "entitlements": 1, "valuations": [[1]]}, "entitlements must be a list"),
        ({"n": 1, "m": 1, "entitlements": [1], "valuations": "1"}, "valuations must be a list"),
        ({"n": 1, "m": 1, "entitlements": [1], "valuations": [5]}, "valuation row 1 must be a list"),
    ])
    def test_rejects_bad_records(self, raw, fragment):
        with pytest.raises(InstanceError, match=fragment):
            validate_instance(raw)

    def test_overlapping_bundles_rejected(self):
        with pytest.raises(InstanceError):
            make_allocation(EX1, [{0, 1}, {1, 2}])

    def test_out_of_range_bundle_rejected(self):
        with pytest.raises(InstanceError):
            make_allocation(EX1, [{0}, {5}])

    def test_partial_allocation(self):
        alloc = make_allocation(EX1, [{0}, {1}])
        assert not alloc.complete
        assert alloc.unallocated(EX1) == (2, 3, 4)


# ---------------------------------------------------------------------------
# Bundle values & fairness
# ---------------------------------------------------------------------------

class TestScores:
    def test_bundle_values_of_worked_example(self):
        assert bundle_value(EX1, 0, {0, 1, 2, 3}) == 15
        assert bundle_value(EX1, 0, set()) == 0
        assert bundle_value(EX1, 0, EX1.items) == 24

    def test_bundle_value_out_of_range(self):
        with pytest.raises(InstanceError):
            bundle_value(EX1, 0, {7})
        with pytest.raises(InstanceError):
            bundle_value(EX1, 2, {0})

    def test_fairness_of_worked_example(self):
        assert fairness_score(EX1, 0, FIX.allocation_a) == Fraction(15, 16)
        assert fairness_score(EX1, 0, FIX.allocation_a_prime) == 1
        assert FIX.fairness_a == Fraction(15, 16)

    def test_single_agent_fairness_is_one(self):
        inst = make_instance([[2, 3, 5]], [1])
        assert fairness_score(inst, 0, make_allocation(inst, [{0, 1, 2}])) == 1

    def test_zero_total_is_undefined(self):
        inst = make_instance([[0, 0], [1, 1]], [1, 1])
        with pytest.raises(InstanceError, match="undefined"):
            fairness_score(inst, 0, make_allocation(inst, [{0}, {1}]))

    def test_equal_entitlement_form(self):
        inst = make_instance([[3, 1, 4, 1, 5], [9, 2, 6, 5, 3]], [1, 1])
        alloc = make_allocation(inst, [{0, 2}, {1, 3, 4}])
        for i in inst.agents:
            vals = [bundle_value(inst, i, b) for b in alloc.bundles]
            assert fairness_score(inst, i, alloc) == 2 * min(vals) / inst.total_value(i)


# ---------------------------------------------------------------------------
# Guarantee reports
# ---------------------------------------------------------------------------

class TestGuaranteeReport:
    def test_worked_example_balanced_allocation(self):
        rep = guarantee_report(EX1, FIX.allocation_a_prime, FIX.shares)
        assert [g.ratio for g in rep.per_agent] == [1, 1]
        assert rep.min_ratio == 1

    def test_worked_example_skewed_allocation(self):
        rep = guarantee_report(EX1, FIX.allocation_a, FIX.shares)
        assert [g.ratio for g in rep.per_agent] == [Fraction(9, 8), Fraction(15, 16)]
        assert rep.min_ratio == Fraction(15, 16)

    def test_all_zero_shares_give_sentinel(self):
        inst = make_instance([[5], [5]], [3, 2])
        rep = guarantee_report(inst, make_allocation(inst, [{0}, set()]), [0, 0])
        assert rep.min_ratio == INFINITE_RATIO
        assert rep.to_json_obj()["min_ratio"] == "inf"

    def test_zero_share_agent_is_skipped(self):
        inst = make_instance([[1, 1], [1, 1]], [1, 1])
        alloc = make_allocation(inst, [{0, 1}, set()])
        assert min_ratio(inst, alloc, [1, 0]) == 2

    def test_share_length_checked(self):
        with pytest.raises(InstanceError):
            guarantee_report(EX1, FIX.allocation_a, [8])


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------

_values = st.lists(st.integers(min_value=0, max_value=20), min_size=4, max_size=4)


@settings(max_examples=60, deadline=None)
@given(row=_values, other=_values, scale=st.integers(min_value=1, max_value=50),
       split=st.lists(st.integers(min_value=0, max_value=1), min_size=4, max_size=4))
def test_fairness_is_scale_covariant(row, other, scale, split):
    if sum(row) == 0:
        row = [1] + row[1:]
    bundles = [{j for j in range(4) if split[j] == 0}, {j for j in range(4) if split[j] == 1}]
    inst = make_instance([row, other], [2, 5])
    scaled = make_instance([[Fraction(v * scale, 7) for v in row], other], [2, 5])
    a = make_allocation(inst, bundles)
    b = make_allocation(scaled, bundles)
    assert fairness_score(inst, 0, a) == fairness_score(scaled, 0, b)


@settings(max_examples=60, deadline=None)
@given(rows=st.lists(_values, min_size=3, max_size=3),
       shares=st.lists(st.integers(min_value=0, max_value=30), min_size=3, max_size=3),
       perm=st.permutations([0, 1, 2]))
def test_min_ratio_is_permutation_invariant(rows, shares, perm):
    ents = [1, 2, 3]
    bundles = [{0}, {1, 2}, {3}]
    inst = make_instance(rows, ents)
    base = min_ratio(inst, make_allocation(inst, bundles), shares)
    p_inst = make_instance([rows[k] for k in perm], [ents[k] for k in perm])
    p_alloc = make_allocation(p_inst, [bundles[k] for k in perm])
    assert min_ratio(p_inst, p_alloc, [shares[k] for k in perm]) == base


@settings(max_examples=60, deadline=None)
@given(row=st.lists(st.integers(min_value=0, max_value=100), min_size=6, max_size=6),
       mask=st.lists(st.integers(min_value=0, max_value=2), min_size=6, max_size=6))
def test_bundle_value_is_additive(row, mask):
    inst = make_instance([row], [1])
    s = {j for j in range(6) if mask[j] == 1}
    t = {j for j in range(6) if mask[j] == 2}
    assert bundle_value(inst, 0, s | t) == bundle_value(inst, 0, s) + bundle_value(inst, 0, t)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def test_instance_json_round_trip(tmp_path):
    path = tmp_path / "ex1.json"
    dump_instance(EX1, str(path))
    assert load_instance(str(path)) == EX1
    raw = json.loads(instance_to_json(EX1))
    assert raw["entitlements"] == ["1/3", "2/3"]


def test_instance_json_errors():
    with pytest.raises(InstanceError):
        instance_from_json("{not json")
    with pytest.raises(InstanceError):
        instance_from_json("[1, 2]")


def test_allocation_json_is_one_based():
    assert FIX.allocation_a.to_json_obj() == [[5], [1, 2, 3, 4]]
    assert allocation_from_json_obj(EX1, [[5], [1, 2, 3, 4]]) == FIX.allocation_a

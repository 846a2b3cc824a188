# utils/fair_instance.py
"""Instance model, additive valuations, allocations and fairness scores.

Everything here is exact: valuations and entitlements are Fractions, and the
fairness score / guarantee ratios never touch binary floating point.
"""
import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

logger = logging.getLogger(__name__)

# Ratio reported for agents whose share is 0 (any bundle satisfies them).
INFINITE_RATIO = math.inf


class InstanceError(ValueError):
    """Invalid instance data, index or undefined score."""


def to_fraction(value) -> Fraction:
    """Coerce ints, Fractions, decimal strings, "p/q" strings and floats to a Fraction.

    Floats go through their shortest decimal repr, so 0.1 becomes 1/10.
    """
    if isinstance(value, bool):
        raise InstanceError(f"boolean is not a number: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InstanceError(f"non-finite number: {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise InstanceError(f"cannot parse number {value!r}: {e}") from None
    raise InstanceError(f"unsupported number type {type(value).__name__}: {value!r}")


def fraction_text(value: Fraction) -> str:
    """Canonical "p/q" (or "p") text used in every JSON surface."""
    return str(Fraction(value))


@dataclass(frozen=True)
class Instance:
    agent_count: int
    item_count: int
    valuations: tuple  # n rows of m Fractions
    entitlements: tuple  # n positive Fractions summing to 1

    @property
    def agents(self) -> range:
        return range(self.agent_count)

    @property
    def items(self) -> range:
        return range(self.item_count)

    def value(self, agent: int, item: int) -> Fraction:
        return self.valuations[agent][item]

    def total_value(self, agent: int) -> Fraction:
        return sum(self.valuations[agent], Fraction(0))

    def max_item_value(self, agent: int) -> Fraction:
        return max(self.valuations[agent], default=Fraction(0))

    def has_equal_entitlements(self) -> bool:
        return len(set(self.entitlements)) == 1


@dataclass(frozen=True)
class Allocation:
    bundles: tuple  # n frozensets of 0-based item indices
    complete: bool

    def allocated(self) -> frozenset:
        return frozenset().union(*self.bundles) if self.bundles else frozenset()

    def unallocated(self, instance: "Instance") -> tuple:
        taken = self.allocated()
        return tuple(j for j in instance.items if j not in taken)

    def to_json_obj(self) -> list:
        """n arrays of 1-based item indices."""
        return [sorted(j + 1 for j in bundle) for bundle in self.bundles]


@dataclass(frozen=True)
class AgentGuarantee:
    received_value: Fraction
    share_value: Fraction
    ratio: object  # Fraction, or INFINITE_RATIO when share_value == 0


@dataclass(frozen=True)
class GuaranteeReport:
    per_agent: tuple
    min_ratio: object  # Fraction or INFINITE_RATIO

    def to_json_obj(self) -> dict:
        return {
            "per_agent": [
                {
                    "received_value": fraction_text(g.received_value),
                    "share_value": fraction_text(g.share_value),
                    "ratio": ratio_text(g.ratio),
                }
                for g in self.per_agent
            ],
            "min_ratio": ratio_text(self.min_ratio),
        }


def ratio_text(ratio) -> str:
    return "inf" if ratio == INFINITE_RATIO else fraction_text(ratio)


def parse_ratio(text: str):
    return INFINITE_RATIO if text == "inf" else Fraction(text)


# ---------------------------------------------------------------------------
# Construction & validation
# ---------------------------------------------------------------------------

def make_instance(valuations: Sequence[Sequence], entitlements: Sequence) -> Instance:
    """Build an Instance from nested sequences; shorthand for validate_instance."""
    rows = [list(r) for r in valuations]
    return validate_instance({
        "n": len(rows),
        "m": len(rows[0]) if rows else 0,
        "entitlements": list(entitlements),
        "valuations": rows,
    })


def _count_field(raw: Mapping, key: str) -> int:
    value = raw[key]
    try:
        number = to_fraction(value)
    except InstanceError:
        number = None
    if number is None or number.denominator != 1:
        raise InstanceError(f"field '{key}' must be an integer, got {value!r}")
    return int(number)


def _list_field(value, what: str):
    if isinstance(value, (str, bytes, Mapping)) or not isinstance(value, Sequence):
        raise InstanceError(f"{what} must be a list, got {type(value).__name__}")
    return value


def validate_instance(raw: Mapping) -> Instance:
    """Check a raw record and return a normalized Instance (entitlements sum to 1)."""
    for key in ("n", "m", "entitlements", "valuations"):
        if key not in raw:
            raise InstanceError(f"missing field '{key}'")
    n, m = _count_field(raw, "n"), _count_field(raw, "m")
    if n < 1:
        raise InstanceError(f"need at least one agent, got n={n}")
    if m < 0:
        raise InstanceError(f"item count must be non-negative, got m={m}")

    ents = [to_fraction(e) for e in _list_field(raw["entitlements"], "entitlements")]
    rows = [
        [to_fraction(v) for v in _list_field(row, f"valuation row {i + 1}")]
        for i, row in enumerate(_list_field(raw["valuations"], "valuations"))
    ]
    if len(ents) != n:
        raise InstanceError(f"expected {n} entitlements, got {len(ents)}")
    if len(rows) != n:
        raise InstanceError(f"expected {n} valuation rows, got {len(rows)}")
    for i, row in enumerate(rows):
        if len(row) != m:
            raise InstanceError(f"valuation row {i + 1} has {len(row)} entries, expected {m}")
        for j, v in enumerate(row):
            if v < 0:
                raise InstanceError(f"negative valuation {v} for agent {i + 1}, item {j + 1}")
    for i, e in enumerate(ents):
        if e <= 0:
            raise InstanceError(f"entitlement of agent {i + 1} must be positive, got {e}")
    total = sum(ents, Fraction(0))
    if total == 0:
        raise InstanceError("entitlements sum to zero")

    return Instance(
        agent_count=n,
        item_count=m,
        valuations=tuple(tuple(row) for row in rows),
        entitlements=tuple(e / total for e in ents),
    )


def make_allocation(instance: Instance, bundles: Sequence[Iterable[int]]) -> Allocation:
    """Validate disjoint, in-range bundles (0-based) and derive the complete flag."""
    if len(bundles) != instance.agent_count:
        raise InstanceError(f"expected {instance.agent_count} bundles, got {len(bundles)}")
    seen = set()
    frozen = []
    for i, bundle in enumerate(bundles):
        b = frozenset(int(j) for j in bundle)
        for j in b:
            if not 0 <= j < instance.item_count:
                raise InstanceError(f"item index {j + 1} out of range for bundle {i + 1}")
        if seen & b:
            dup = sorted(j + 1 for j in seen & b)
            raise InstanceError(f"items {dup} assigned to more than one bundle")
        seen |= b
        frozen.append(b)
    return Allocation(bundles=tuple(frozen), complete=len(seen) == instance.item_count)


def _check_agent(instance: Instance, agent: int) -> None:
    if not 0 <= agent < instance.agent_count:
        raise InstanceError(f"agent index {agent} out of range for n={instance.agent_count}")


# ---------------------------------------------------------------------------
# Valuations & scores
# ---------------------------------------------------------------------------

def bundle_value(instance: Instance, agent: int, bundle: Iterable[int]) -> Fraction:
    _check_agent(instance, agent)
    row = instance.valuations[agent]
    total = Fraction(0)
    for j in bundle:
        if not 0 <= j < instance.item_count:
            raise InstanceError(f"item index {j} out of range for m={instance.item_count}")
        total += row[j]
    return total


def fairness_score(instance: Instance, evaluating_agent: int, allocation: Allocation) -> Fraction:
    """min over bundles j of V_i(A_j) / (V_i(M) * e_j), from agent i's point of view."""
    total = bundle_value(instance, evaluating_agent, instance.items)
    if total == 0:
        raise InstanceError(f"agent {evaluating_agent + 1} values every item at 0; score undefined")
    return min(
        bundle_value(instance, evaluating_agent, bundle) / (total * e)
        for bundle, e in zip(allocation.bundles, instance.entitlements)
    )


def guarantee_report(instance: Instance, allocation: Allocation, shares: Sequence) -> GuaranteeReport:
    """Per-agent received/share ratios; min_ratio skips agents with a zero share."""
    shares = [to_fraction(s) for s in shares]
    if len(shares) != instance.agent_count:
        raise InstanceError(f"expected {instance.agent_count} shares, got {len(shares)}")
    rows = []
    for i in instance.agents:
        received = bundle_value(instance, i, allocation.bundles[i])
        ratio = received / shares[i] if shares[i] > 0 else INFINITE_RATIO
        rows.append(AgentGuarantee(received_value=received, share_value=shares[i], ratio=ratio))
    finite = [r.ratio for r in rows if r.share_value > 0]
    return GuaranteeReport(per_agent=tuple(rows), min_ratio=min(finite) if finite else INFINITE_RATIO)


def min_ratio(instance: Instance, allocation: Allocation, shares: Sequence):
    return guarantee_report(instance, allocation, shares).min_ratio


# ---------------------------------------------------------------------------
# JSON I/O
# ---------------------------------------------------------------------------

def instance_to_json_obj(instance: Instance) -> dict:
    return {
        "n": instance.agent_count,
        "m": instance.item_count,
        "entitlements": [fraction_text(e) for e in instance.entitlements],
        "valuations": [[fraction_text(v) for v in row] for row in instance.valuations],
    }


def instance_to_json(instance: Instance) -> str:
    return json.dumps(instance_to_json_obj(instance), indent=2)


def instance_from_json(text: str) -> Instance:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceError(f"instance is not valid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise InstanceError("instance JSON must be an object")
    return validate_instance(raw)


def load_instance(path: str) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return instance_from_json(fh.read())


def dump_instance(instance: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(instance_to_json(instance) + "\n")


def allocation_from_json_obj(instance: Instance, obj: Sequence[Sequence[int]]) -> Allocation:
    """Read n arrays of 1-based item indices."""
    return make_allocation(instance, [[int(j) - 1 for j in bundle] for bundle in obj])

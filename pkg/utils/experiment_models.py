# utils/experiment_models.py
"""Pydantic models for experiment configs and instance-generator settings."""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Literal, Optional, Union

from pydantic import BaseModel, field_validator, model_validator

try:
    from config import CONFIDENCE_LEVEL, DEFAULT_HEURISTIC_ITERATIONS, DEFAULT_MAX_STATES, DEFAULT_WORKERS
except ImportError:
    CONFIDENCE_LEVEL = 0.95
    DEFAULT_HEURISTIC_ITERATIONS = 20
    DEFAULT_MAX_STATES = 10 ** 7
    DEFAULT_WORKERS = 1

FAMILIES = ("counterexample", "example1", "stochastic-agents", "stochastic-items", "bids")
ALGORITHMS = ("existence", "roundrobin", "bagfill", "restricted", "lp")
_SEED_LIMIT = 2 ** 64


def _seed_ok(v: int) -> int:
    if not 0 <= v < _SEED_LIMIT:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return v


class GeneratorSpec(BaseModel):
    family: Literal["counterexample", "example1", "stochastic-agents", "stochastic-items", "bids"]
    n: int = 2
    m: int = 0
    epsilon: Optional[Union[str, int, float]] = None
    distributions: list[str] = []
    entitlements: Union[Literal["equal", "random"], list[Union[str, int, float]]] = "equal"
    seed: int = 0

    @field_validator("seed")
    @classmethod
    def _seed_range(cls, v):
        return _seed_ok(v)

    @model_validator(mode="after")
    def _family_fields(self):
        if self.family == "example1":
            self.n, self.m = 2, 5
            return self
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.family == "counterexample":
            if self.epsilon is None:
                raise ValueError("counterexample needs epsilon")
            if self.n < 2:
                raise ValueError("counterexample needs n >= 2")
            eps = Fraction(str(self.epsilon))
            if not 0 < eps < Fraction(1, self.n - 1):
                raise ValueError(f"epsilon must lie in (0, 1/{self.n - 1})")
            self.m = 2 * self.n - 1
        elif self.m < 0:
            raise ValueError("m must be >= 0")
        if isinstance(self.entitlements, list) and len(self.entitlements) != self.n:
            raise ValueError(f"expected {self.n} entitlements")
        return self


class ExperimentConfig(BaseModel):
    n: int
    m_values: list[int]
    trials: int = 1
    seed: int = 0
    share_method: Literal["exact", "heuristic"] = "exact"
    heuristic_iterations: int = DEFAULT_HEURISTIC_ITERATIONS
    algorithm: Literal["existence", "roundrobin", "bagfill", "restricted", "lp"] = "existence"
    max_states: int = DEFAULT_MAX_STATES
    time_limit: Optional[float] = None
    epsilon: Optional[Union[str, int, float]] = None
    confidence: float = CONFIDENCE_LEVEL
    detail: bool = False
    workers: int = DEFAULT_WORKERS
    record_timing: bool = False
    generator: Optional[GeneratorSpec] = None  # instance source when no bid pool is given

    @field_validator("seed")
    @classmethod
    def _seed_range(cls, v):
        return _seed_ok(v)

    @field_validator("m_values")
    @classmethod
    def _m_values(cls, v):
        if not v:
            raise ValueError("m_values must be non-empty")
        if any(m < 0 for m in v):
            raise ValueError("item counts must be non-negative")
        return v

    @model_validator(mode="after")
    def _ranges(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.heuristic_iterations < 1:
            raise ValueError("heuristic_iterations must be >= 1")
        if self.max_states < 1:
            raise ValueError("max_states must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")
        if self.generator is not None and self.generator.family == "bids":
            raise ValueError("the bids family is selected with --bids, not as a generator")
        fixed = self.generator is not None and self.generator.family in ("counterexample", "example1")
        if fixed and self.generator.n != self.n:
            raise ValueError(f"generator family {self.generator.family} has n={self.generator.n}, config has n={self.n}")
        if fixed and any(m != self.generator.m for m in self.m_values):
            raise ValueError(f"generator family {self.generator.family} fixes m={self.generator.m}")
        return self


def load_experiment_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.model_validate(json.load(fh))

"""Multilinear polynomial threshold instances, exact brute-force decision,
majority amplification and the end-to-end reduction."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from . import learner
from .learner import Grid, LearnResult
from .polynomial import (
    BudgetExceeded,
    MultilinearPolynomial,
    Subset,
    count_subsets,
    dense_values,
    extract_exact,
    mask_bits,
    subset_key,
)

MAX_DECIDE_VARS = 24
YES, NO = "YES", "NO"


class OffGridError(ValueError):
    """A coefficient or threshold is not a multiple of the grid spacing."""


@dataclass(frozen=True)
class ThresholdInstance:
    """Decide whether some y has P(y) >= a, with everything scaled by 2^denominator_log2."""

    n_vars: int
    degree: int
    denominator_log2: int
    coeffs: Mapping[Subset, int] = field(default_factory=dict)
    threshold_scaled: int = 0

    @property
    def grid_upper_scaled(self) -> int:
        return 1 << self.denominator_log2

    def to_doc(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "degree": self.degree,
            "denominator_log2": self.denominator_log2,
            "terms": [{"subset": list(s), "coeff": int(v)}
                      for s, v in sorted(self.coeffs.items(), key=lambda kv: subset_key(kv[0])) if v],
            "threshold_scaled": self.threshold_scaled,
            "grid_lower_scaled": 0,
            "grid_upper_scaled": self.grid_upper_scaled,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ThresholdInstance":
        coeffs = {tuple(sorted(t["subset"])): int(t["coeff"]) for t in doc["terms"]}
        return cls(int(doc["n_vars"]), int(doc["degree"]), int(doc["denominator_log2"]),
                   coeffs, int(doc["threshold_scaled"]))

    def value_scaled(self, y: str) -> int:
        return sum(v for s, v in self.coeffs.items() if all(y[i - 1] == "1" for i in s))

    def unscaled(self) -> MultilinearPolynomial:
        scale = 1 << self.denominator_log2
        return MultilinearPolynomial(self.n_vars, self.degree,
                                     {s: v / scale for s, v in self.coeffs.items()})


def _scale(x, log2: int, what: str) -> int:
    scaled = Fraction(x) * (1 << log2)
    if scaled.denominator != 1:
        raise OffGridError(f"{what} = {x} is not a multiple of 2^-{log2}")
    return int(scaled)


def from_learner_output(P_hat: MultilinearPolynomial, a, grid: Grid) -> ThresholdInstance:
    """Lossless integer scaling of a learned polynomial and its threshold."""
    L = grid.log2_size
    coeffs = {s: _scale(v, L, f"coefficient {s}") for s, v in P_hat.coeffs.items()}
    if a not in grid:
        raise OffGridError(f"threshold {a} is not in the grid")
    return ThresholdInstance(P_hat.n_vars, P_hat.degree, L, coeffs, _scale(a, L, "threshold"))


@dataclass(frozen=True)
class Decision:
    answer: str
    witness: str | None
    max_value_scaled: int
    argmax: str

    def to_doc(self) -> dict:
        return {"answer": self.answer, "witness": self.witness,
                "max_value_scaled": self.max_value_scaled, "argmax": self.argmax}


def all_values_scaled(instance: ThresholdInstance) -> np.ndarray:
    n = instance.n_vars
    if n > MAX_DECIDE_VARS:
        raise BudgetExceeded(f"N={n} exceeds the exhaustive decision budget of {MAX_DECIDE_VARS}")
    bound = sum(abs(v) for v in instance.coeffs.values())
    dtype = np.int64 if bound < 2**62 else object
    return dense_values(instance.coeffs, n, dtype=dtype)


def decide(instance: ThresholdInstance) -> Decision:
    """Exhaustive exact search; a YES witness is the lexicographically smallest one."""
    values = all_values_scaled(instance)
    best = int(np.argmax(values))
    hits = np.flatnonzero(values >= instance.threshold_scaled)
    n = instance.n_vars
    if hits.size:
        return Decision(YES, mask_bits(int(hits[0]), n), int(values[best]), mask_bits(best, n))
    return Decision(NO, None, int(values[best]), mask_bits(best, n))


def majority_amplify(run: Callable[[int], str], k: int) -> str:
    """Majority answer of ``run(0) .. run(k-1)``; each call must use fresh randomness."""
    if k < 1 or k % 2 == 0:
        raise ValueError(f"k must be a positive odd integer, got {k}")
    votes = Counter(run(i) for i in range(k))
    return votes.most_common(1)[0][0]


@dataclass(frozen=True)
class ReductionOutcome:
    answer: str
    decision: Decision
    instance: ThresholdInstance
    learned: LearnResult
    certificate: learner.AccuracyCertificate | None

    def to_doc(self) -> dict:
        return {
            "answer": self.answer,
            "decision": self.decision.to_doc(),
            "instance": self.instance.to_doc(),
            "learner": self.learned.to_doc(),
            "certificate": None if self.certificate is None else self.certificate.to_doc(),
        }


def reduce_and_decide(circuit, c: float, s: float, delta: float, master_seed: int,
                      shots_override: int | None = None,
                      exact: MultilinearPolynomial | None = None,
                      certify: bool = True) -> ReductionOutcome:
    """Learn the acceptance polynomial, build the threshold instance and decide it.

    ``exact`` is computed by extraction when not supplied and the circuit is
    small enough; it only feeds the accuracy certificate.
    """
    params = learner.derive_params(c, s, circuit.query_count, circuit.proof_len, delta, shots_override)
    learned = learner.learn_polynomial(circuit, params, master_seed)
    instance = from_learner_output(learned.polynomial, params.a, params.grid)
    decision = decide(instance)
    certificate = None
    if certify:
        if exact is None and circuit.proof_len <= 12 and count_subsets(circuit.proof_len, 2 * circuit.query_count) <= 5000:
            exact = extract_exact(circuit)
        if exact is not None:
            certificate = learner.accuracy_certificate(learned.polynomial, exact, params)
    return ReductionOutcome(decision.answer, decision, instance, learned, certificate)

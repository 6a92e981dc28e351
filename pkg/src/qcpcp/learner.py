"""Sampling-based learning of a verifier's acceptance polynomial.

Each coefficient is learned from the ground up: the acceptance probability on
the indicator proof of S is estimated from T measurement shots, truncated to
``l`` binary digits, and the already-learned coefficients of all proper
subsets are subtracted.  Coefficients are kept as exact integers in units of
2^-l so that the output is a set of grid points.

Shot t of subset rank r under master seed m is draw t of the Philox stream
keyed by (m, r); results never depend on scheduling.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .polynomial import (
    BudgetExceeded,
    MultilinearPolynomial,
    Subset,
    count_subsets,
    evaluate_all,
    fake_proof,
    subsets_by_cardinality,
)
from .seeding import stream

DEFAULT_SHOT_BUDGET = 10**9
DESK_SCALE_SHOTS = 10**8
DESK_SCALE_OVERRIDE = 2**16 - 1
_CHUNK = 1 << 20


class ParameterError(ValueError):
    pass


class ParameterOverflow(BudgetExceeded):
    """Derived parameters are too large to represent or run; use a shots override."""


def hoeffding_shots(eps: float, delta: float) -> int:
    """Smallest T with exp(-2 T eps^2) <= delta."""
    if eps <= 0 or not 0 < delta < 1:
        raise ParameterError("need eps > 0 and 0 < delta < 1")
    if eps * eps == 0.0:
        raise ParameterOverflow(f"precision {eps:.3g} underflows; pass a shots override")
    t = math.log(1 / delta) / (2 * eps * eps)
    if not math.isfinite(t) or t > 2**62:
        raise ParameterOverflow(f"Hoeffding shot count {t:.3g} overflows; pass a shots override")
    return math.ceil(t)


def hoeffding_epsilon(shots: int, delta: float) -> float:
    """Precision guaranteed by ``shots`` samples at failure probability ``delta``."""
    return math.sqrt(math.log(1 / delta) / (2 * shots))


def next_mersenne(t: int) -> int:
    """Smallest 2^k - 1 >= t."""
    return (1 << max(t, 1).bit_length()) - 1 if t & (t + 1) else max(t, 1)


def ceil_log2(x: float) -> int:
    """Smallest integer l with 2^l >= x."""
    if x <= 1:
        return 0
    l = math.ceil(math.log2(x))
    while 2.0 ** (l - 1) >= x:
        l -= 1
    while 2.0**l < x:
        l += 1
    return l


@dataclass(frozen=True)
class Grid:
    """G_{2^log2_size}: the evenly spaced points j / 2^log2_size of [0, 1]."""

    log2_size: int

    @property
    def spacing(self) -> Fraction:
        return Fraction(1, 1 << self.log2_size)

    def nearest(self, x: Fraction) -> Fraction:
        scaled = x * (1 << self.log2_size)
        j = math.floor(scaled)
        if scaled - j > Fraction(1, 2):
            j += 1
        j = min(max(j, 0), 1 << self.log2_size)
        return Fraction(j, 1 << self.log2_size)

    def __contains__(self, x) -> bool:
        x = Fraction(x)
        return 0 <= x <= 1 and (x * (1 << self.log2_size)).denominator == 1


@dataclass(frozen=True)
class LearnerParams:
    c: float
    s: float
    q: int
    p: int
    delta: float
    eps1: float
    eps2: float
    eps: float
    delta_prime: float
    hoeffding_T: int
    T: int
    l: int
    grid: Grid
    a: Fraction
    guarantee: str = "derived"

    @property
    def num_subsets(self) -> int:
        return count_subsets(self.p, 2 * self.q)

    @property
    def total_shots(self) -> int:
        return self.num_subsets * self.T

    @property
    def tolerance(self) -> float:
        """Allowed sup-norm error of the learned polynomial, (c - s)/4."""
        return (self.c - self.s) / 4

    def to_doc(self) -> dict:
        doc = asdict(self)
        doc["grid_log2_size"] = self.grid.log2_size
        doc["grid_spacing"] = float(self.grid.spacing)
        del doc["grid"]
        doc["a"] = float(self.a)
        return doc


def derive_params(c: float, s: float, q: int, p: int, delta: float,
                  shots_override: int | None = None) -> LearnerParams:
    """Parameter schedule of the learner.

    Derived mode chains eps1 = (c-s)/(4 p^2q), eps2 = eps1 / (1 + 2^(2q-1) (p^2q)^2q),
    eps = eps2/4, and takes the Hoeffding shot count for eps at the per-estimate
    failure probability delta / ((2q+1) p^2q).  With ``shots_override`` the chain
    runs backwards from the precision the given shot count guarantees.
    In both modes T is raised to the next 2^k - 1.
    """
    if not c > s:
        raise ParameterError(f"completeness c={c} must exceed soundness s={s}")
    if not (0 < c <= 1 and 0 <= s < 1):
        raise ParameterError("need c in (0, 1] and s in [0, 1)")
    if not 0 < delta < 0.5:
        raise ParameterError(f"delta must lie in (0, 1/2), got {delta}")
    if q < 1 or p < 1:
        raise ParameterError("need q >= 1 and p >= 1")
    gap = c - s
    monomials = p ** (2 * q)
    blowup = 1 + 2 ** (2 * q - 1) * monomials ** (2 * q)
    delta_prime = delta / ((2 * q + 1) * monomials)
    if shots_override is None:
        eps1 = gap / (4 * monomials)
        eps2 = eps1 / blowup
        eps = eps2 / 4
        if eps == 0.0:
            raise ParameterOverflow("estimation precision underflows; pass a shots override")
        hoeffding_T = hoeffding_shots(eps, delta_prime)
        T = next_mersenne(hoeffding_T)
        guarantee = "derived"
    else:
        if shots_override < 1:
            raise ParameterError("shots override must be >= 1")
        T = next_mersenne(int(shots_override))
        eps = hoeffding_epsilon(T, delta_prime)
        hoeffding_T = hoeffding_shots(eps, delta_prime)
        eps2 = 4 * eps
        eps1 = eps2 * blowup
        guarantee = "override"
    k = (T + 1).bit_length() - 1
    l = min(ceil_log2(1 / (2 * eps2) + 1), k)
    l = max(l, 1)
    grid = Grid(max(2 * l, ceil_log2(4 / gap)))
    a = grid.nearest((Fraction(c) + Fraction(s)) / 2)
    if not Fraction(s) < a < Fraction(c):
        raise ParameterError(f"threshold {a} not strictly between s and c")
    return LearnerParams(c, s, q, p, delta, eps1, eps2, eps, delta_prime,
                         hoeffding_T, T, l, grid, a, guarantee)


def desk_scale_params(c, s, q, p, delta, budget: int = DESK_SCALE_SHOTS,
                      override: int = DESK_SCALE_OVERRIDE) -> LearnerParams:
    """Fully derived parameters, or the override shot count when they exceed ``budget`` total shots."""
    try:
        params = derive_params(c, s, q, p, delta)
        if params.total_shots <= budget:
            return params
    except ParameterOverflow:
        pass
    return derive_params(c, s, q, p, delta, shots_override=override)


@dataclass(frozen=True)
class ShotEstimate:
    subset: Subset
    shots: int
    ones: int
    l: int

    @property
    def raw_mean(self) -> float:
        return self.ones / self.shots

    @property
    def truncated_units(self) -> int:
        """First l binary digits of the mean, in units of 2^-l (toward zero)."""
        return (self.ones << self.l) // self.shots

    @property
    def truncated(self) -> float:
        return self.truncated_units / (1 << self.l)

    def to_doc(self) -> dict:
        return {"subset": list(self.subset), "shots": self.shots, "ones": self.ones,
                "raw_mean": self.raw_mean, "truncated": self.truncated}


def count_ones(p: float, shots: int, rng: np.random.Generator) -> int:
    ones, left = 0, shots
    while left:
        n = min(left, _CHUNK)
        ones += int(np.count_nonzero(rng.random(n) < p))
        left -= n
    return ones


def estimate_acceptance(circuit, subset: Iterable[int], params: LearnerParams,
                        seed: int, rank: int = 0) -> ShotEstimate:
    """T measurement shots of the output qubit on the indicator proof of ``subset``."""
    subset = tuple(sorted(subset))
    p = circuit.acceptance(fake_proof(subset, circuit.proof_len))
    ones = count_ones(p, params.T, stream(seed, rank))
    return ShotEstimate(subset, params.T, ones, params.l)


@dataclass(frozen=True)
class LearnResult:
    polynomial: MultilinearPolynomial
    units: dict
    estimates: tuple[ShotEstimate, ...]
    params: LearnerParams
    master_seed: int

    @property
    def a(self) -> Fraction:
        return self.params.a

    @property
    def grid(self) -> Grid:
        return self.params.grid

    def to_doc(self) -> dict:
        return {
            "params": self.params.to_doc(),
            "seed": self.master_seed,
            "estimates": [e.to_doc() for e in self.estimates],
            "polynomial": self.polynomial.to_doc(),
            "a": float(self.a),
            "grid_spacing": float(self.grid.spacing),
        }


def learn_polynomial(circuit, params: LearnerParams, master_seed: int,
                     shot_budget: int = DEFAULT_SHOT_BUDGET) -> LearnResult:
    """Learn every coefficient of degree <= 2q, children before parents."""
    N, q = circuit.proof_len, circuit.query_count
    if (N, q) != (params.p, params.q):
        raise ParameterError(f"params are for p={params.p}, q={params.q}; circuit has p={N}, q={q}")
    if params.total_shots > shot_budget:
        raise BudgetExceeded(
            f"{params.total_shots} shots exceed the budget of {shot_budget}; pass a shots override"
        )
    units: dict[Subset, int] = {}
    estimates = []
    for rank, subset in enumerate(subsets_by_cardinality(N, 2 * q)):
        est = estimate_acceptance(circuit, subset, params, master_seed, rank)
        estimates.append(est)
        value = est.truncated_units
        for k in range(len(subset)):
            for sub in itertools.combinations(subset, k):
                value -= units[sub]
        units[subset] = value
    scale = 1 << params.l
    poly = MultilinearPolynomial(N, 2 * q, {s: u / scale for s, u in units.items()})
    return LearnResult(poly, units, tuple(estimates), params, master_seed)


@dataclass(frozen=True)
class AccuracyCertificate:
    max_coeff_error: float
    sup_error: float
    tolerance: float
    guarantee: str

    @property
    def passed(self) -> bool:
        return self.sup_error <= self.tolerance

    def to_doc(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def accuracy_certificate(P_hat: MultilinearPolynomial, P_exact: MultilinearPolynomial,
                         params: LearnerParams) -> AccuracyCertificate:
    keys = set(P_hat.coeffs) | set(P_exact.coeffs)
    coeff_err = max((abs(P_hat.coeff(k) - P_exact.coeff(k)) for k in keys), default=0.0)
    sup_err = float(np.max(np.abs(evaluate_all(P_hat) - evaluate_all(P_exact))))
    return AccuracyCertificate(coeff_err, sup_err, params.tolerance, params.guarantee)

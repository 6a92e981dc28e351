"""Multilinear polynomials over {0,1}^N and exact extraction from circuits.

Subsets are sorted tuples of 1-based variable indices.  Dense evaluation
encodes an assignment ``y_1 .. y_N`` as the integer whose most significant
bit is ``y_1``, so numeric order of masks is lexicographic order of strings.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .simulator import ClassicalProof

Subset = tuple[int, ...]

MAX_DENSE_VARS = 24


class BudgetExceeded(RuntimeError):
    """An exhaustive computation is beyond desk scale."""


@dataclass(frozen=True)
class MultilinearPolynomial:
    n_vars: int
    degree: int
    coeffs: Mapping[Subset, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for subset, value in self.coeffs.items():
            s = tuple(sorted(subset))
            if len(set(s)) != len(s):
                raise ValueError(f"repeated variable in monomial {subset}")
            if len(s) > self.degree:
                raise ValueError(f"monomial {s} exceeds degree {self.degree}")
            if s and (s[0] < 1 or s[-1] > self.n_vars):
                raise ValueError(f"monomial {s} references a variable outside 1..{self.n_vars}")
            if value != 0:
                clean[s] = value
        object.__setattr__(self, "coeffs", clean)

    def coeff(self, subset: Iterable[int]) -> float:
        return self.coeffs.get(tuple(sorted(subset)), 0.0)

    def max_abs_coeff(self) -> float:
        return max((abs(v) for v in self.coeffs.values()), default=0.0)

    def to_doc(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "degree": self.degree,
            "terms": [{"subset": list(s), "coeff": float(v)}
                      for s, v in sorted(self.coeffs.items(), key=lambda kv: subset_key(kv[0]))],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "MultilinearPolynomial":
        coeffs = {tuple(t["subset"]): float(t["coeff"]) for t in doc["terms"]}
        return cls(int(doc["n_vars"]), int(doc["degree"]), coeffs)


def subset_key(s: Subset) -> tuple[int, Subset]:
    return (len(s), s)


def subsets_by_cardinality(n: int, d: int) -> Iterator[Subset]:
    """All subsets of [n] with at most ``d`` elements, by size then lexicographically."""
    for k in range(min(d, n) + 1):
        yield from itertools.combinations(range(1, n + 1), k)


def count_subsets(n: int, d: int) -> int:
    return sum(math.comb(n, k) for k in range(min(d, n) + 1))


def _bits(y: str | Sequence[int] | ClassicalProof) -> tuple[int, ...]:
    if isinstance(y, ClassicalProof):
        return y.bits
    if isinstance(y, str):
        return tuple(int(c) for c in y)
    return tuple(int(b) for b in y)


def evaluate(P: MultilinearPolynomial, y) -> float:
    """Sum of the coefficients of monomials whose variables are all set in ``y``."""
    bits = _bits(y)
    if len(bits) != P.n_vars:
        raise ValueError(f"assignment has {len(bits)} bits, polynomial has {P.n_vars} variables")
    return sum(v for s, v in P.coeffs.items() if all(bits[i - 1] for i in s))


def subset_mask(s: Iterable[int], n: int) -> int:
    return sum(1 << (n - i) for i in s)


def mask_bits(mask: int, n: int) -> str:
    return format(mask, f"0{n}b") if n else ""


def dense_values(coeffs: Mapping[Subset, object], n: int, dtype=float) -> np.ndarray:
    """P(y) for every assignment, via the subset-sum (zeta) transform."""
    if n > MAX_DENSE_VARS:
        raise BudgetExceeded(f"exhaustive evaluation over 2^{n} assignments is beyond desk scale")
    values = np.zeros(1 << n, dtype=dtype)
    for s, v in coeffs.items():
        values[subset_mask(s, n)] += v
    view = values
    for bit in range(n):
        shaped = view.reshape(-1, 2, 1 << bit)
        shaped[:, 1, :] += shaped[:, 0, :]
    return values


def evaluate_all(P: MultilinearPolynomial) -> np.ndarray:
    if P.n_vars > 20:
        raise BudgetExceeded(f"N={P.n_vars} exceeds the exhaustive budget of 20 variables")
    return dense_values(P.coeffs, P.n_vars)


def uniform_norm(P: MultilinearPolynomial) -> float:
    """max_y |P(y)| by exhaustive enumeration."""
    return float(np.max(np.abs(evaluate_all(P))))


def coefficient_bound(d: int, norm: float) -> float:
    """Upper bound on any |coefficient| of a degree-d multilinear P with the given uniform norm."""
    if d < 1 or norm < 0:
        raise ValueError("need d >= 1 and norm >= 0")
    return (1 + (1 + 2 ** d) ** (d - 1)) * norm


def representation_bits(N: int, d: int, k: int) -> int:
    """ceil(log2 C(N, d)) + k."""
    if not 0 <= d <= N:
        raise ValueError("need 0 <= d <= N")
    return (math.comb(N, d) - 1).bit_length() + k


def solve_recursion(a: Sequence, x, l: int):
    """f(l) with f(0) = x and f(j) = x + sum_{i<j} a_i f(i), by direct unrolling.

    Works for any numeric type; pass ``Fraction`` inputs for exact results.
    """
    if l < 0:
        raise ValueError("l must be >= 0")
    if len(a) < l:
        raise ValueError(f"need {l} coefficients, got {len(a)}")
    f = [x]
    for j in range(1, l + 1):
        f.append(x + sum((a[i] * f[i] for i in range(j)), start=0 * x))
    return f[l]


def recursion_product_form(a: Sequence, x, l: int):
    """x * prod_{i<l} (1 + a_i), the closed form direct unrolling yields."""
    out = x
    for i in range(l):
        out = out * (1 + a[i])
    return out


def mobius_coefficients(
    values: Mapping[Subset, float],
    n: int,
    d: int,
    order: Iterable[Subset] | None = None,
) -> dict[Subset, float]:
    """beta_S = P(y^S) - sum_{S' proper subset of S} beta_{S'}.

    ``order`` must list every subset with children before parents; it
    defaults to cardinality-then-lexicographic order.
    """
    order = list(subsets_by_cardinality(n, d)) if order is None else [tuple(sorted(s)) for s in order]
    beta: dict[Subset, float] = {}
    for s in order:
        value = values[s]
        for k in range(len(s)):
            for sub in itertools.combinations(s, k):
                if sub not in beta:
                    raise ValueError(f"subset {sub} not computed before its superset {s}")
                value -= beta[sub]
        beta[s] = value
    return beta


def fake_proof(subset: Iterable[int], N: int) -> ClassicalProof:
    """Indicator proof: y_i = 1 exactly when i is in ``subset``."""
    bits = [0] * N
    for i in subset:
        if not 1 <= i <= N:
            raise ValueError(f"index {i} outside 1..{N}")
        bits[i - 1] = 1
    return ClassicalProof(tuple(bits))


def extract_exact(circuit, order: Iterable[Subset] | None = None,
                  max_subsets: int = 200_000) -> MultilinearPolynomial:
    """Acceptance polynomial of ``circuit`` from simulations on indicator proofs.

    Exact up to double-precision simulator arithmetic.
    """
    N, q = circuit.proof_len, circuit.query_count
    d = min(2 * q, N)
    if count_subsets(N, d) > max_subsets:
        raise BudgetExceeded(f"{count_subsets(N, d)} subsets exceed the extraction budget of {max_subsets}")
    values = {s: circuit.acceptance(fake_proof(s, N)) for s in subsets_by_cardinality(N, d)}
    beta = mobius_coefficients(values, N, d, order)
    return MultilinearPolynomial(N, 2 * q, beta)


def max_deviation(P: MultilinearPolynomial, f: Callable[[ClassicalProof], float]) -> float:
    """max_y |P(y) - f(y)| over all 2^N assignments."""
    values = evaluate_all(P)
    worst = 0.0
    for mask in range(1 << P.n_vars):
        y = ClassicalProof.from_bits(mask_bits(mask, P.n_vars))
        worst = max(worst, abs(values[mask] - f(y)))
    return worst

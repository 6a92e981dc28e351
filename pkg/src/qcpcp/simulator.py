"""Dense statevector simulation with proof-oracle queries.

Conventions:

* Qubit 0 is the most significant bit of a basis-state index.
* An index register (``index_qubits``) is read big-endian in the listed order.
* Proofs are 1-indexed.  A query whose register holds value ``v`` reads
  ``y[v + offset]``; register values that land on 0 or past ``N`` read as 0,
  which makes every oracle total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SINGLE_QUBIT_KINDS = ("H", "X", "Z", "S", "T", "RY")
TWO_QUBIT_KINDS = ("CNOT", "CZ")
QUERY_KINDS = ("std_query", "phase_query")
GATE_KINDS = SINGLE_QUBIT_KINDS + TWO_QUBIT_KINDS + QUERY_KINDS

_SQRT1_2 = 1 / math.sqrt(2)
_FIXED_MATRICES = {
    "H": np.array([[_SQRT1_2, _SQRT1_2], [_SQRT1_2, -_SQRT1_2]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex),
}


class GateError(ValueError):
    """A gate does not fit the state or proof it is applied to."""

    def __init__(self, gate: "Gate", message: str):
        super().__init__(f"{gate.kind} gate: {message}")
        self.gate = gate


class ProofError(ValueError):
    pass


@dataclass(frozen=True)
class ClassicalProof:
    """Bit string ``y_1 .. y_N``."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) < 1:
            raise ProofError("proof must contain at least one bit")
        if any(b not in (0, 1) for b in self.bits):
            raise ProofError("proof bits must be 0 or 1")

    @classmethod
    def from_bits(cls, bits: str | Iterable[int]) -> "ClassicalProof":
        if isinstance(bits, str):
            if set(bits) - {"0", "1"}:
                raise ProofError(f"not a bit string: {bits!r}")
            return cls(tuple(int(c) for c in bits))
        return cls(tuple(int(b) for b in bits))

    @classmethod
    def zeros(cls, n: int) -> "ClassicalProof":
        return cls((0,) * n)

    @property
    def N(self) -> int:
        return len(self.bits)

    def bit(self, i: int) -> int:
        """``y_i`` for 1-based ``i``; out-of-range indices read 0."""
        if 1 <= i <= len(self.bits):
            return self.bits[i - 1]
        return 0

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class Gate:
    """One circuit operation.

    Single-qubit kinds accept an optional ``controls`` tuple (all controls
    must be |1>).  ``CNOT``/``CZ`` take exactly one control and one target.
    ``std_query`` XORs ``y`` into ``targets[0]``; ``phase_query`` has no
    target.  ``offset`` shifts the proof index a query reads.
    """

    kind: str
    targets: tuple[int, ...] = ()
    controls: tuple[int, ...] = ()
    theta: float | None = None
    index_qubits: tuple[int, ...] = ()
    offset: int = 0

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "controls", tuple(self.controls))
        object.__setattr__(self, "index_qubits", tuple(self.index_qubits))
        if self.kind == "RY" and self.theta is None:
            raise GateError(self, "RY needs theta")
        if self.kind in SINGLE_QUBIT_KINDS and len(self.targets) != 1:
            raise GateError(self, f"expects one target, got {list(self.targets)}")
        if self.kind in TWO_QUBIT_KINDS and (len(self.targets) != 1 or len(self.controls) != 1):
            raise GateError(self, "expects one control and one target")
        if self.kind == "std_query" and len(self.targets) != 1:
            raise GateError(self, "std_query expects one target")
        if self.kind == "phase_query" and self.targets:
            raise GateError(self, "phase_query takes no target")
        if self.kind in QUERY_KINDS:
            if not self.index_qubits:
                raise GateError(self, "query needs at least one index qubit")
            if self.controls:
                raise GateError(self, "queries cannot be controlled")
        wires = self.wires
        if len(set(wires)) != len(wires):
            raise GateError(self, f"qubits must be distinct, got {list(wires)}")

    @property
    def is_query(self) -> bool:
        return self.kind in QUERY_KINDS

    @property
    def wires(self) -> tuple[int, ...]:
        return self.index_qubits + self.controls + self.targets

    def matrix(self) -> np.ndarray:
        if self.kind == "RY":
            c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
            return np.array([[c, -s], [s, c]], dtype=complex)
        if self.kind == "CNOT":
            return _FIXED_MATRICES["X"]
        if self.kind == "CZ":
            return _FIXED_MATRICES["Z"]
        return _FIXED_MATRICES[self.kind]


# short constructors used by the circuit builders
def H(t): return Gate("H", (t,))
def X(t, controls=()): return Gate("X", (t,), tuple(controls))
def Z(t, controls=()): return Gate("Z", (t,), tuple(controls))
def S(t): return Gate("S", (t,))
def T(t): return Gate("T", (t,))
def RY(t, theta): return Gate("RY", (t,), theta=float(theta))
def CNOT(c, t): return Gate("CNOT", (t,), (c,))
def CZ(c, t): return Gate("CZ", (t,), (c,))


def StdQuery(index_qubits, target, offset=0):
    return Gate("std_query", (target,), index_qubits=tuple(index_qubits), offset=offset)


def PhaseQuery(index_qubits, offset=0):
    return Gate("phase_query", index_qubits=tuple(index_qubits), offset=offset)


@dataclass
class Statevector:
    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"{self.num_qubits} qubits need {1 << self.num_qubits} amplitudes, "
                f"got shape {self.amplitudes.shape}"
            )

    @classmethod
    def zero(cls, num_qubits: int) -> "Statevector":
        amps = np.zeros(1 << num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "Statevector":
        amps = np.zeros(1 << num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _check_wires(state: Statevector, gate: Gate) -> None:
    for q in gate.wires:
        if not 0 <= q < state.num_qubits:
            raise GateError(gate, f"qubit index {q} out of range for {state.num_qubits} qubits")


def _bit_column(m: int, q: int) -> np.ndarray:
    return (np.arange(1 << m) >> (m - 1 - q)) & 1


def register_values(m: int, qubits: Sequence[int]) -> np.ndarray:
    """Big-endian value of ``qubits`` for every basis index of an m-qubit state."""
    values = np.zeros(1 << m, dtype=np.int64)
    for q in qubits:
        values = (values << 1) | _bit_column(m, q)
    return values


def _query_bits(state: Statevector, proof: ClassicalProof, gate: Gate) -> np.ndarray:
    reg = register_values(state.num_qubits, gate.index_qubits)
    table = np.array(
        [proof.bit(v + gate.offset) for v in range(1 << len(gate.index_qubits))], dtype=np.int64
    )
    return table[reg]


def _apply_unitary(state: Statevector, gate: Gate) -> Statevector:
    m = state.num_qubits
    psi = state.amplitudes.reshape((2,) * m).copy()
    sel: list = [slice(None)] * m
    for c in gate.controls:
        sel[c] = 1
    sel = tuple(sel)
    target = gate.targets[0]
    axis = target - sum(1 for c in gate.controls if c < target)
    block = psi[sel]
    block = np.moveaxis(np.tensordot(gate.matrix(), block, axes=([1], [axis])), 0, axis)
    psi[sel] = block
    return Statevector(m, psi.reshape(-1))


def apply_standard_query(
    state: Statevector,
    proof: ClassicalProof,
    index_qubits: Sequence[int],
    target_qubit: int,
    offset: int = 0,
) -> Statevector:
    """|i>|a> -> |i>|a xor y_i>."""
    return apply_gate(state, StdQuery(index_qubits, target_qubit, offset), proof)


def apply_phase_query(
    state: Statevector, proof: ClassicalProof, index_qubits: Sequence[int], offset: int = 0
) -> Statevector:
    """|i> -> (-1)^{y_i} |i>."""
    return apply_gate(state, PhaseQuery(index_qubits, offset), proof)


def apply_gate(state: Statevector, gate: Gate, proof: ClassicalProof | None = None) -> Statevector:
    """Return ``gate`` applied to ``state``; queries read ``proof``."""
    _check_wires(state, gate)
    if not gate.is_query:
        return _apply_unitary(state, gate)
    if proof is None:
        raise GateError(gate, "query applied without a proof")
    y = _query_bits(state, proof, gate)
    if gate.kind == "phase_query":
        return Statevector(state.num_qubits, state.amplitudes * (1 - 2 * y))
    tbit = 1 << (state.num_qubits - 1 - gate.targets[0])
    perm = np.arange(1 << state.num_qubits) ^ (tbit * y)
    return Statevector(state.num_qubits, state.amplitudes[perm])


def run(num_qubits: int, ops: Iterable[Gate], proof: ClassicalProof | None = None) -> Statevector:
    state = Statevector.zero(num_qubits)
    for gate in ops:
        state = apply_gate(state, gate, proof)
    return state


def acceptance_probability(state: Statevector, output_qubit: int) -> float:
    """Probability of measuring ``output_qubit`` in |1>."""
    if not 0 <= output_qubit < state.num_qubits:
        raise IndexError(f"output qubit {output_qubit} out of range for {state.num_qubits} qubits")
    probs = state.probabilities()
    p = float(probs[_bit_column(state.num_qubits, output_qubit) == 1].sum())
    return min(max(p, 0.0), 1.0)


def sample_shot(state: Statevector, output_qubit: int, seed: int) -> int:
    """Measure ``output_qubit`` once with a generator seeded by ``seed``."""
    p = acceptance_probability(state, output_qubit)
    return int(np.random.default_rng(seed).random() < p)


def bernoulli_shots(p: float, shots: int, rng: np.random.Generator) -> np.ndarray:
    """``shots`` measurement outcomes of a qubit with P(1) = p; draw t is shot t."""
    return (rng.random(shots) < p).astype(np.int8)


def measure_register(state: Statevector, qubits: Sequence[int], seed: int) -> str:
    """Sample all of ``qubits`` in the computational basis; returns their bits."""
    probs = state.probabilities()
    values = register_values(state.num_qubits, qubits)
    dist = np.bincount(values, weights=probs, minlength=1 << len(qubits))
    dist = dist / dist.sum()
    outcome = int(np.random.default_rng(seed).choice(len(dist), p=dist))
    return format(outcome, f"0{len(qubits)}b") if qubits else ""


def register_distribution(state: Statevector, qubits: Sequence[int]) -> np.ndarray:
    values = register_values(state.num_qubits, qubits)
    return np.bincount(values, weights=state.probabilities(), minlength=1 << len(qubits))

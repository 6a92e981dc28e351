"""Verifier circuits: data model, JSON documents, fixtures and BV protocols."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import simulator as sim
from .seeding import derive_seed
from .simulator import ClassicalProof, Gate


class SchemaError(ValueError):
    """A circuit document failed validation; ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class VerifierCircuit:
    num_qubits: int
    proof_len: int
    ops: tuple[Gate, ...]
    output_qubit: int
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.proof_len < 1:
            raise ValueError("proof_len must be >= 1")
        if not 0 <= self.output_qubit < self.num_qubits:
            raise ValueError(f"output qubit {self.output_qubit} out of range")
        for gate in self.ops:
            for q in gate.wires:
                if not 0 <= q < self.num_qubits:
                    raise sim.GateError(gate, f"qubit index {q} out of range for {self.num_qubits} qubits")

    @property
    def query_count(self) -> int:
        return sum(1 for g in self.ops if g.is_query)

    def final_state(self, proof: ClassicalProof) -> sim.Statevector:
        if proof.N != self.proof_len:
            raise sim.ProofError(f"circuit expects a proof of length {self.proof_len}, got {proof.N}")
        return sim.run(self.num_qubits, self.ops, proof)

    def acceptance(self, proof: ClassicalProof | str) -> float:
        if isinstance(proof, str):
            proof = ClassicalProof.from_bits(proof)
        return sim.acceptance_probability(self.final_state(proof), self.output_qubit)


# -- serialization ---------------------------------------------------------

def _gate_doc(g: Gate) -> dict[str, Any]:
    if g.kind == "std_query":
        doc = {"gate": g.kind, "index_qubits": list(g.index_qubits), "target": g.targets[0]}
    elif g.kind == "phase_query":
        doc = {"gate": g.kind, "index_qubits": list(g.index_qubits)}
    else:
        doc = {"gate": g.kind, "targets": list(g.targets), "controls": list(g.controls)}
        if g.theta is not None:
            doc["theta"] = g.theta
    if g.is_query and g.offset:
        doc["offset"] = g.offset
    return doc


def serialize_circuit(circuit: VerifierCircuit) -> dict[str, Any]:
    return {
        "label": circuit.label,
        "qubits": circuit.num_qubits,
        "proof_len": circuit.proof_len,
        "output_qubit": circuit.output_qubit,
        "query_count": circuit.query_count,
        "ops": [_gate_doc(g) for g in circuit.ops],
    }


def _int_field(doc: dict, key: str, where: str) -> int:
    if key not in doc:
        raise SchemaError(where + key, "missing")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(where + key, f"expected int, got {type(value).__name__}")
    return value


def _int_list(doc: dict, key: str, where: str, default=None) -> list[int]:
    if key not in doc:
        if default is not None:
            return default
        raise SchemaError(where + key, "missing")
    value = doc[key]
    if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, int) for v in value):
        raise SchemaError(where + key, "expected a list of ints")
    return value


def _parse_gate(doc: Any, where: str) -> Gate:
    if not isinstance(doc, dict):
        raise SchemaError(where, "op must be an object")
    kind = doc.get("gate")
    if kind not in sim.GATE_KINDS:
        raise SchemaError(where + "gate", f"unknown gate kind {kind!r}")
    try:
        if kind == "std_query":
            return Gate(kind, (_int_field(doc, "target", where),),
                        index_qubits=tuple(_int_list(doc, "index_qubits", where)),
                        offset=doc.get("offset", 0))
        if kind == "phase_query":
            return Gate(kind, index_qubits=tuple(_int_list(doc, "index_qubits", where)),
                        offset=doc.get("offset", 0))
        theta = doc.get("theta")
        if theta is not None and not isinstance(theta, (int, float)):
            raise SchemaError(where + "theta", "expected a number")
        return Gate(kind, tuple(_int_list(doc, "targets", where)),
                    tuple(_int_list(doc, "controls", where, default=[])),
                    theta=None if theta is None else float(theta))
    except sim.GateError as exc:
        raise SchemaError(where.rstrip("."), str(exc)) from exc


def parse_circuit(doc: Any) -> VerifierCircuit:
    """Validate a circuit document and build the circuit."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError("document", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("document", "expected a JSON object")
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise SchemaError("label", "expected a string")
    qubits = _int_field(doc, "qubits", "")
    if not 1 <= qubits <= 24:
        raise SchemaError("qubits", f"must be in 1..24, got {qubits}")
    proof_len = _int_field(doc, "proof_len", "")
    if proof_len < 1:
        raise SchemaError("proof_len", "must be >= 1")
    output = _int_field(doc, "output_qubit", "")
    if not 0 <= output < qubits:
        raise SchemaError("output_qubit", f"{output} out of range for {qubits} qubits")
    ops_doc = doc.get("ops")
    if not isinstance(ops_doc, list):
        raise SchemaError("ops", "expected a list")
    ops = [_parse_gate(op, f"ops[{i}].") for i, op in enumerate(ops_doc)]
    for i, g in enumerate(ops):
        for q in g.wires:
            if not 0 <= q < qubits:
                raise SchemaError(f"ops[{i}]", f"qubit index {q} out of range for {qubits} qubits")
    circuit = VerifierCircuit(qubits, proof_len, tuple(ops), output, label)
    if "query_count" in doc and doc["query_count"] != circuit.query_count:
        raise SchemaError(
            "query_count", f"stored {doc['query_count']} but ops contain {circuit.query_count} queries"
        )
    return circuit


def dumps(circuit: VerifierCircuit) -> str:
    return json.dumps(serialize_circuit(circuit), indent=2)


def load(path) -> VerifierCircuit:
    with open(path) as fh:
        text = fh.read()
    return parse_circuit(text)


# -- fixture builders ------------------------------------------------------

def index_width(N: int) -> int:
    """Register width able to hold the values 1..N."""
    return max(1, N.bit_length())


def _load_value(register: list[int], value: int) -> list[Gate]:
    r = len(register)
    return [sim.X(q) for k, q in enumerate(register) if (value >> (r - 1 - k)) & 1]


def _check_index(N: int, i: int, name: str = "i") -> None:
    if not 1 <= i <= N:
        raise ValueError(f"index {name}={i} outside 1..{N}")


def build_bit_reader(N: int, i: int) -> VerifierCircuit:
    """One standard query that copies ``y_i`` onto the output qubit."""
    _check_index(N, i)
    r = index_width(N)
    register = list(range(r))
    ops = _load_value(register, i) + [sim.StdQuery(register, r)]
    return VerifierCircuit(r + 1, N, tuple(ops), r, f"bit_reader(N={N}, i={i})")


def _pair_superposition(register: list[int], i: int, j: int) -> tuple[list[Gate], int]:
    """Gates taking |0..0> to (|i> + |j>)/sqrt2, and the pivot qubit."""
    r = len(register)
    diff = [k for k in range(r) if ((i ^ j) >> (r - 1 - k)) & 1]
    pivot = register[diff[0]]
    ops = [sim.H(pivot)] + [sim.CNOT(pivot, register[k]) for k in diff[1:]]
    return ops + _load_value(register, i), pivot


def build_deutsch_parity(N: int, i: int, j: int) -> VerifierCircuit:
    """Accepts with probability ``y_i xor y_j`` using one phase query."""
    _check_index(N, i, "i")
    _check_index(N, j, "j")
    if i == j:
        raise ValueError("i and j must differ")
    register = list(range(index_width(N)))
    prep, pivot = _pair_superposition(register, i, j)
    ops = prep + [sim.PhaseQuery(register)] + prep[::-1]
    return VerifierCircuit(len(register), N, tuple(ops), pivot, f"deutsch_parity(N={N}, i={i}, j={j})")


def build_constant(N: int, p_accept: float, queries: int = 1) -> VerifierCircuit:
    """Circuit whose acceptance is ``p_accept`` whatever the proof.

    The queries write into a scratch qubit that never touches the output.
    """
    if not 0.0 <= p_accept <= 1.0:
        raise ValueError("p_accept must lie in [0, 1]")
    r = index_width(N)
    register = list(range(r))
    scratch, out = r, r + 1
    ops = [sim.H(q) for q in register]
    ops += [sim.StdQuery(register, scratch) for _ in range(queries)]
    ops.append(sim.RY(out, 2 * math.asin(math.sqrt(p_accept))))
    return VerifierCircuit(r + 2, N, tuple(ops), out, f"constant(N={N}, p={p_accept})")


def random_circuit(N: int, q: int, m: int, rng: np.random.Generator, depth: int = 4) -> VerifierCircuit:
    """Random ``q``-query verifier on ``m`` qubits over proofs of length ``N``.

    Layers of random gates from the fixed gate set separate the queries;
    each query is a standard query (random target) or a phase query.
    """
    r = index_width(N)
    if m < r + 1:
        raise ValueError(f"need at least {r + 1} qubits for N={N}")
    register = list(range(r))

    def layer() -> list[Gate]:
        ops = []
        for _ in range(depth):
            kind = rng.choice(["H", "X", "Z", "S", "T", "RY", "CNOT", "CZ"])
            if kind in ("CNOT", "CZ"):
                c, t = (int(v) for v in rng.choice(m, size=2, replace=False))
                ops.append(Gate(kind, (t,), (c,)))
            elif kind == "RY":
                ops.append(sim.RY(int(rng.integers(m)), float(rng.uniform(0, 2 * math.pi))))
            else:
                ops.append(Gate(str(kind), (int(rng.integers(m)),)))
        return ops

    ops = [sim.H(k) for k in register] + layer()
    for _ in range(q):
        if rng.random() < 0.5:
            ops.append(sim.StdQuery(register, int(rng.integers(r, m))))
        else:
            ops.append(sim.PhaseQuery(register))
        ops += layer()
    return VerifierCircuit(m, N, tuple(ops), int(rng.integers(m)), f"random(N={N}, q={q}, m={m})")


# -- Bernstein-Vazirani ----------------------------------------------------

@dataclass(frozen=True)
class BVProof:
    """Proof of length 2^l whose entry y_{z+1} is z.x mod 2."""

    secret: str
    bits: ClassicalProof

    @property
    def ell(self) -> int:
        return len(self.secret)


def _check_bits(bits: str, name: str = "secret") -> None:
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"{name} must be a non-empty bit string, got {bits!r}")


def encode_bv_proof(secret: str) -> BVProof:
    _check_bits(secret)
    ell = len(secret)
    if ell > 16:
        raise ValueError("secrets longer than 16 bits are beyond desk scale")
    x = int(secret, 2)
    bits = tuple(bin(z & x).count("1") & 1 for z in range(1 << ell))
    return BVProof(secret, ClassicalProof(bits))


def build_bv_decoder(ell: int, offset: int = 1) -> VerifierCircuit:
    """H^l, one phase query, H^l.  Register value z reads y_{z + offset}."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    register = list(range(ell))
    ops = [sim.H(k) for k in register] + [sim.PhaseQuery(register, offset)] + [sim.H(k) for k in register]
    return VerifierCircuit(ell, 1 << ell, tuple(ops), 0, f"bv_decoder(l={ell})")


def bv_decode(proof: ClassicalProof, ell: int, seed: int, offset: int = 1) -> str:
    """Run the decoder on ``proof`` and measure the index register.

    ``offset`` selects which length-2^l block of ``proof`` is read; proofs
    longer than one block are allowed only through the concatenated protocol.
    """
    if offset == 1 and proof.N != 1 << ell:
        raise ValueError(f"proof length {proof.N} is not 2^{ell}")
    decoder = build_bv_decoder(ell, offset)
    state = sim.run(ell, decoder.ops, proof)
    return sim.measure_register(state, list(range(ell)), seed)


def concat_bv_protocol(secret: str, ell: int, seed: int) -> tuple[str, int]:
    """Decode ``secret`` from k concatenated BV proofs, one query per chunk."""
    _check_bits(secret)
    if ell < 1 or len(secret) % ell:
        raise ValueError(f"secret length {len(secret)} not divisible by chunk size {ell}")
    chunks = [secret[j:j + ell] for j in range(0, len(secret), ell)]
    proof = ClassicalProof(sum((encode_bv_proof(c).bits.bits for c in chunks), ()))
    decoded, queries = [], 0
    for j in range(len(chunks)):
        decoder = build_bv_decoder(ell, offset=j * (1 << ell) + 1)
        queries += decoder.query_count
        state = sim.run(ell, decoder.ops, proof)
        decoded.append(sim.measure_register(state, list(range(ell)), derive_seed(seed, j)))
    return "".join(decoded), queries


# -- OR with advice (Grover) -----------------------------------------------

def or_proof(n: int, marked: int | None) -> ClassicalProof:
    """Length-2^n proof with a single 1 at item ``marked`` (0-based), or none."""
    bits = [0] * (1 << n)
    if marked is not None:
        if not 0 <= marked < 1 << n:
            raise ValueError(f"marked item {marked} outside 0..{(1 << n) - 1}")
        bits[marked] = 1
    return ClassicalProof(tuple(bits))


def build_grover_or(n: int, iterations: int, advice: str = "", marked: int | None = None) -> VerifierCircuit:
    """Grover search for the marked item among those whose high bits equal ``advice``.

    Qubits 0..n-1 hold the item index (item z reads y_{z+1}); qubit n is the
    output, set by one final standard query, so the circuit accepts iff the
    measured index is marked.  ``iterations`` phase queries precede it.
    """
    if not 1 <= n <= 14:
        raise ValueError("n must be in 1..14")
    if advice and set(advice) - {"0", "1"}:
        raise ValueError(f"advice must be a bit string, got {advice!r}")
    a = len(advice)
    if a > n:
        raise ValueError("more advice bits than index bits")
    if marked is not None and a and format(marked, f"0{n}b")[:a] != advice:
        raise ValueError(f"advice {advice} inconsistent with marked item {marked:0{n}b}")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    register = list(range(n))
    prefix, suffix = register[:a], register[a:]
    out = n
    prep = [sim.X(q) for q, b in zip(prefix, advice) if b == "1"]
    prep += [sim.H(q) for q in suffix]
    ops = list(prep)
    for _ in range(iterations):
        ops.append(sim.PhaseQuery(register, 1))
        if suffix:
            ops += _diffusion(suffix)
    ops.append(sim.StdQuery(register, out, 1))
    return VerifierCircuit(n + 1, 1 << n, tuple(ops), out,
                           f"grover_or(n={n}, k={iterations}, advice={advice or '-'})")


def _diffusion(qubits: list[int]) -> list[Gate]:
    """2|s><s| - I on ``qubits`` up to global phase."""
    ops = [sim.H(q) for q in qubits] + [sim.X(q) for q in qubits]
    ops.append(sim.Z(qubits[-1], qubits[:-1]))
    return ops + [sim.X(q) for q in qubits] + [sim.H(q) for q in qubits]


def grover_success_closed_form(n: int, a: int, k: int) -> float:
    """sin^2((2k+1) theta) with sin(theta) = 2^{-(n-a)/2}."""
    theta = math.asin(2.0 ** (-(n - a) / 2))
    return math.sin((2 * k + 1) * theta) ** 2

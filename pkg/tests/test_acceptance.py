"""Acceptance gate: one PASS/FAIL line per criterion, each at its stated tolerance."""

import itertools
import math
import random
import time

import numpy as np

from qcpcp import circuits, cli, learner, simulator as sim, threshold
from qcpcp.learner import accuracy_certificate, desk_scale_params, learn_polynomial
from qcpcp.polynomial import coefficient_bound, evaluate, extract_exact, uniform_norm
from qcpcp.seeding import derive_seed
from qcpcp.threshold import NO, YES, ThresholdInstance, decide, majority_amplify

import oracles

C, S, DELTA = 2 / 3, 1 / 3, 0.1
RUNS = 200


def _random_circuits(count, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        N = int(rng.integers(1, 9))
        q = int(rng.integers(1, 3))
        m = int(rng.integers(N.bit_length() + 1, 9))
        out.append(circuits.random_circuit(N, q, m, rng))
    return out


def test_criteria_1_and_2_polynomial_method(criterion):
    worst_dev, worst_degree_excess, bound_violations = 0.0, 0, 0
    batch = _random_circuits(50, 2024)
    # the runtime budget covers extraction; the dense-unitary oracle below is deliberately slow
    start = time.perf_counter()
    extracted = [extract_exact(c) for c in batch]
    elapsed = time.perf_counter() - start
    for c, P in zip(batch, extracted):
        worst_degree_excess = max(worst_degree_excess, max((len(s) for s in P.coeffs), default=0) - 2 * c.query_count)
        for bits in itertools.product((0, 1), repeat=c.proof_len):
            # independent dense-unitary simulation, not the statevector engine
            worst_dev = max(worst_dev, abs(evaluate(P, bits) - oracles.dense_acceptance(c, bits)))
        if P.max_abs_coeff() > coefficient_bound(2 * c.query_count, uniform_norm(P)) + 1e-9:
            bound_violations += 1
    ok1 = worst_dev <= 1e-9 and worst_degree_excess <= 0 and elapsed < 120
    criterion(1, ok1, f"{len(batch)} circuits, max |P - p_acc| = {worst_dev:.2e}, "
                      f"degree excess {worst_degree_excess}, extraction {elapsed:.1f}s")
    criterion(2, bound_violations == 0, f"{bound_violations} coefficient-bound violations")
    assert ok1 and bound_violations == 0


def test_criteria_3_and_4_learner_guarantee(criterion):
    fixtures = {"bit_reader(4,3)": circuits.build_bit_reader(4, 3),
                "parity(4,1,2)": circuits.build_deutsch_parity(4, 1, 2)}
    ok3, ok4, details3, details4 = True, True, [], []
    for name, c in fixtures.items():
        full = learner.derive_params(C, S, c.query_count, c.proof_len, DELTA)
        params = desk_scale_params(C, S, c.query_count, c.proof_len, DELTA)
        exact = extract_exact(c)
        passing_units = set()
        passes = 0
        for run in range(RUNS):
            learned = learn_polynomial(c, params, derive_seed(3, run))
            if accuracy_certificate(learned.polynomial, exact, params).passed:
                passes += 1
                passing_units.add(tuple(sorted(learned.units.items())))
        rate = passes / RUNS
        ok3 &= rate >= 0.85
        ok4 &= len(passing_units) <= 1
        details3.append(f"{name}: {rate:.1%} within (c-s)/4 [derived T={full.T} x {full.num_subsets} subsets "
                        f"> 1e8 shots -> {params.guarantee} T={params.T}, eps={params.eps:.4g}, l={params.l}]")
        details4.append(f"{name}: {len(passing_units)} distinct coefficient set(s)")
    criterion(3, ok3, "; ".join(details3))
    criterion(4, ok4, "; ".join(details4))
    assert ok3 and ok4


def test_criterion_5_threshold_solver(criterion):
    rng = random.Random(5)
    start = time.perf_counter()
    disagreements = 0
    for _ in range(1000):
        n, d, coeffs = oracles.random_integer_instance(rng, max_n=16)
        thr = rng.randint(-60, 200)
        got = decide(ThresholdInstance(n, d, 6, coeffs, thr))
        best, witness = oracles.gray_code_search(coeffs, n, thr)
        if (got.max_value_scaled, got.witness, got.answer) != (best, witness, YES if witness else NO):
            disagreements += 1
    elapsed = time.perf_counter() - start
    ok = disagreements == 0 and elapsed < 60
    criterion(5, ok, f"{disagreements} disagreements on 1000 instances, {elapsed:.1f}s")
    assert ok


def _shots_for(c, cc, ss):
    params = desk_scale_params(cc, ss, c.query_count, c.proof_len, DELTA)
    return None if params.guarantee == "derived" else params.T


def test_criterion_6_end_to_end(criterion):
    yes_c, no_c = circuits.build_bit_reader(4, 2), circuits.build_constant(4, 0.0)
    rates = {}
    for name, c, expected in (("YES", yes_c, YES), ("NO", no_c, NO)):
        shots = _shots_for(c, 1, 0)
        hits = sum(threshold.reduce_and_decide(c, 1, 0, DELTA, derive_seed(6, run), shots_override=shots,
                                               certify=False).answer == expected for run in range(RUNS))
        rates[name] = hits / RUNS

    noisy = circuits.build_constant(1, 0.4)

    def once(seed):
        return threshold.reduce_and_decide(noisy, 0.6, 0.4, DELTA, seed, shots_override=31, certify=False).answer

    single = sum(once(derive_seed(61, t)) == NO for t in range(RUNS)) / RUNS
    amplified = sum(majority_amplify(lambda i: once(derive_seed(62, t, i)), 15) == NO for t in range(RUNS)) / RUNS
    ok = min(rates.values()) >= 0.85 and amplified >= 0.95 and amplified > single
    criterion(6, ok, f"YES {rates['YES']:.1%}, NO {rates['NO']:.1%}; noisy override T=31: "
                     f"k=1 {single:.1%} -> k=15 {amplified:.1%}")
    assert ok


def test_criterion_7_bv(criterion):
    worst = 1.0
    for ell in range(1, 9):
        decoder = circuits.build_bv_decoder(ell)
        for x in range(1 << ell):
            secret = format(x, f"0{ell}b")
            state = sim.run(ell, decoder.ops, circuits.encode_bv_proof(secret).bits)
            worst = min(worst, sim.register_distribution(state, list(range(ell)))[x])
    concat_ok = True
    rng = random.Random(7)
    for k in range(1, 9):
        ell = rng.randint(1, 4)
        secret = "".join(rng.choice("01") for _ in range(k * ell))
        decoded, queries = circuits.concat_bv_protocol(secret, ell, seed=k)
        concat_ok &= decoded == secret and queries == k
    ok = worst >= 1 - 1e-9 and concat_ok
    criterion(7, ok, f"min Pr[decode x] = {worst:.12f} over all secrets l <= 8; "
                     f"concatenated k <= 8 {'exact with k queries' if concat_ok else 'FAILED'}")
    assert ok


def test_criterion_8_or_with_advice(criterion):
    start = time.perf_counter()
    rows, summary, _ = cli.or_scaling(10, [0, 2, 4, 6], 40, 0, seed=8)
    elapsed = time.perf_counter() - start
    max_diff = max(r["abs_diff"] for r in rows)
    factor_ok = True
    parts = []
    for s in summary:
        predicted = math.ceil(math.pi / 4 * math.sqrt(2 ** (10 - s["advice"])))
        k = s["k_star"]
        factor_ok &= k is not None and predicted / 2 <= k <= 2 * predicted
        parts.append(f"a={s['advice']}: k*={k} vs {predicted}")
    ok = factor_ok and max_diff <= 1e-6 and elapsed < 300
    criterion(8, ok, f"{', '.join(parts)}; max |sim - sin^2| = {max_diff:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_9_hoeffding(criterion):
    t = learner.hoeffding_shots(0.1, 0.05)
    criterion(9, t == 150, f"T(0.1, 0.05) = {t}, rounded to {learner.next_mersenne(t)}")
    assert t == 150

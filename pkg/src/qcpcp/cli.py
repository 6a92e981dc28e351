"""Command-line experiments.  Every report is JSON (or CSV for its table)
and byte-identical for identical command line and seed.

Exit codes: 0 success (a NO decision is still success), 2 usage or input
error, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

from . import __version__
from . import circuits, learner, polynomial, simulator, threshold
from .polynomial import BudgetExceeded
from .seeding import MASK64, derive_seed, stream

EXIT_OK, EXIT_USAGE, EXIT_BUDGET = 0, 2, 3


class UsageError(Exception):
    pass


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value <= MASK64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _odd(text: str) -> int:
    value = int(text)
    if value < 1 or value % 2 == 0:
        raise argparse.ArgumentTypeError("must be a positive odd integer")
    return value


def _envelope(command: str, args: argparse.Namespace, result: dict, table=None) -> dict:
    echo = {k: v for k, v in sorted(vars(args).items())
            if k not in ("func", "out", "format", "timing", "command")}
    report = {"command": command, "version": __version__, "args": echo,
              "seed": getattr(args, "seed", None), "result": result}
    if table is not None:
        report["table"] = table
    return report


def _load_circuit(path: str) -> circuits.VerifierCircuit:
    try:
        return circuits.load(path)
    except OSError as exc:
        raise UsageError(f"cannot read circuit file {path}: {exc.strerror}") from exc
    except circuits.SchemaError as exc:
        raise UsageError(f"invalid circuit {path}: {exc}") from exc


def cmd_extract(args):
    circuit = _load_circuit(args.circuit)
    poly = polynomial.extract_exact(circuit)
    table = [{"subset": " ".join(map(str, t["subset"])), "coeff": t["coeff"]}
             for t in poly.to_doc()["terms"]]
    return _envelope("extract", args, {"label": circuit.label, "polynomial": poly.to_doc()}, table)


def _params(args, circuit):
    try:
        return learner.derive_params(args.c, args.s, circuit.query_count, circuit.proof_len,
                                     args.delta, args.shots_override)
    except learner.ParameterError as exc:
        raise UsageError(str(exc)) from exc


def cmd_learn(args):
    circuit = _load_circuit(args.circuit)
    params = _params(args, circuit)
    learned = learner.learn_polynomial(circuit, params, args.seed)
    result = learned.to_doc()
    exact = None
    if circuit.proof_len <= 12:
        exact = polynomial.extract_exact(circuit)
        result["certificate"] = learner.accuracy_certificate(learned.polynomial, exact, params).to_doc()
    if args.sweep:
        if exact is None:
            raise UsageError("--sweep needs a circuit small enough for exact extraction")
        passes = sum(
            learner.accuracy_certificate(
                learner.learn_polynomial(circuit, params, derive_seed(args.seed, i)).polynomial,
                exact, params).passed
            for i in range(args.sweep))
        result["sweep"] = {"runs": args.sweep, "passed": passes, "pass_rate": passes / args.sweep}
    table = [{"subset": " ".join(map(str, e["subset"])), "raw_mean": e["raw_mean"],
              "truncated": e["truncated"]} for e in result["estimates"]]
    return _envelope("learn", args, result, table)


def cmd_reduce(args):
    circuit = _load_circuit(args.circuit)
    _params(args, circuit)
    exact = polynomial.extract_exact(circuit) if circuit.proof_len <= 12 else None

    def run(seed):
        return threshold.reduce_and_decide(circuit, args.c, args.s, args.delta, seed,
                                           args.shots_override, exact=exact)

    if args.amplify_k is None:
        outcome = run(args.seed)
        return _envelope("reduce", args, outcome.to_doc())
    outcomes = []

    def vote(i):
        outcomes.append(run(derive_seed(args.seed, i)))
        return outcomes[-1].answer

    answer = threshold.majority_amplify(vote, args.amplify_k)
    table = [{"run": i, "answer": o.answer, "max_value_scaled": o.decision.max_value_scaled,
              "certificate_passed": None if o.certificate is None else o.certificate.passed}
             for i, o in enumerate(outcomes)]
    result = {"answer": answer, "amplify_k": args.amplify_k,
              "votes": {v: sum(o.answer == v for o in outcomes) for v in (threshold.YES, threshold.NO)},
              "witness": next((o.decision.witness for o in outcomes if o.answer == answer == threshold.YES), None)}
    return _envelope("reduce", args, result, table)


def _secret(text: str) -> str:
    if not text or set(text) - {"0", "1"}:
        raise UsageError(f"secret must be a non-empty bit string, got {text!r}")
    return text


def cmd_bv(args):
    secret = _secret(args.secret)
    ell = len(secret)
    proof = circuits.encode_bv_proof(secret).bits
    decoder = circuits.build_bv_decoder(ell)
    state = simulator.run(ell, decoder.ops, proof)
    p_secret = float(simulator.register_distribution(state, list(range(ell)))[int(secret, 2)])
    decoded = circuits.bv_decode(proof, ell, args.seed)
    result = {"secret": secret, "decoded": decoded, "queries": decoder.query_count,
              "proof_len": proof.N, "probability_of_secret": p_secret, "success": decoded == secret}
    return _envelope("bv", args, result)


def cmd_bv_concat(args):
    secret = _secret(args.secret)
    if args.chunk_bits < 1 or len(secret) % args.chunk_bits:
        raise UsageError(f"secret length {len(secret)} is not a multiple of --chunk-bits {args.chunk_bits}")
    decoded, queries = circuits.concat_bv_protocol(secret, args.chunk_bits, args.seed)
    result = {"secret": secret, "decoded": decoded, "chunks": len(secret) // args.chunk_bits,
              "queries": queries, "success": decoded == secret}
    return _envelope("bv-concat", args, result)


def predicted_iterations(n: int, a: int) -> int:
    """ceil((pi/4) sqrt(2^(n-a))), or 0 with full advice."""
    return 0 if a == n else math.ceil(math.pi / 4 * math.sqrt(2 ** (n - a)))


def or_scaling(n: int, advice_levels, max_iterations: int, trials: int, seed: int):
    """Rows of the OR-with-advice table and the per-advice summary."""
    if not 1 <= n <= 14:
        raise UsageError("--n must be in 1..14")
    marked = int(stream(seed, 0).integers(1 << n))
    proof = circuits.or_proof(n, marked)
    rows, summary = [], []
    for a in advice_levels:
        if not 0 <= a <= n:
            raise UsageError(f"advice {a} outside 0..{n}")
        advice = format(marked, f"0{n}b")[:a]
        k_star = None
        for k in range(max_iterations + 1 if a < n else 1):
            circuit = circuits.build_grover_or(n, k, advice, marked)
            p_sim = circuit.acceptance(proof)
            p_formula = circuits.grover_success_closed_form(n, a, k)
            row = {"advice": a, "k": k, "simulated": p_sim, "closed_form": p_formula,
                   "abs_diff": abs(p_sim - p_formula)}
            if trials:
                hits = learner.count_ones(p_sim, trials, stream(seed, 1, a, k))
                row["empirical"] = hits / trials
            rows.append(row)
            if k_star is None and p_sim >= 2 / 3:
                k_star = k
        predicted = predicted_iterations(n, a)
        within = None
        if k_star is not None and n - a >= 2:
            within = predicted / 2 <= k_star <= 2 * predicted
        elif n == a:
            within = k_star == 0
        summary.append({"advice": a, "k_star": k_star, "predicted": predicted, "within_factor_2": within})
    return rows, summary, marked


def cmd_experiment_or(args):
    levels = args.advice if args.advice else list(range(0, args.n + 1, 2))
    rows, summary, marked = or_scaling(args.n, levels, args.max_iterations, args.trials, args.seed)
    stars = [s["k_star"] for s in summary if s["k_star"] is not None]
    result = {"n": args.n, "marked": marked, "summary": summary,
              "max_abs_diff": max(r["abs_diff"] for r in rows),
              "k_star_non_increasing": all(x >= y for x, y in zip(stars, stars[1:]))}
    return _envelope("experiment-or", args, result, rows)


def _canonical(doc) -> str:
    return json.dumps(doc, sort_keys=True)


def merge_reports(docs: list[dict]) -> dict:
    merged, seen = [], set()
    for doc in docs:
        for item in doc.get("merged_reports", [doc]):
            key = _canonical(item)
            if key not in seen:
                seen.add(key)
                merged.append(item)
    return {"command": "report", "version": __version__,
            "seeds": [r.get("seed") for r in merged], "merged_reports": merged}


def cmd_report(args):
    if not args.paths:
        raise UsageError("report needs at least one input file")
    docs = []
    for path in args.paths:
        try:
            with open(path) as fh:
                docs.append(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read report {path}: {exc}") from exc
    return merge_reports(docs)


def cmd_fixture(args):
    builders = {
        "bit-reader": lambda: circuits.build_bit_reader(args.N, args.i),
        "parity": lambda: circuits.build_deutsch_parity(args.N, args.i, args.j),
        "constant": lambda: circuits.build_constant(args.N, args.p),
    }
    return circuits.serialize_circuit(builders[args.kind]())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcpcp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--timing", action="store_true", help="add wall_clock_seconds to the report")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    def learner_flags(p):
        p.add_argument("--circuit", required=True)
        p.add_argument("--c", type=float, required=True)
        p.add_argument("--s", type=float, required=True)
        p.add_argument("--delta", type=float, default=0.1)
        p.add_argument("--seed", type=_u64, default=0)
        p.add_argument("--shots-override", type=int)

    p = add("extract", cmd_extract, "exact acceptance polynomial of a circuit file")
    p.add_argument("--circuit", required=True)
    p = add("learn", cmd_learn, "learn the acceptance polynomial from measurement shots")
    learner_flags(p)
    p.add_argument("--sweep", type=int, default=0, help="also report certificate pass rate over this many seeds")
    p = add("reduce", cmd_reduce, "learn, build the threshold instance, decide")
    learner_flags(p)
    p.add_argument("--amplify-k", type=_odd)
    p = add("bv", cmd_bv, "decode a secret from a BV proof with one query")
    p.add_argument("--secret", required=True)
    p.add_argument("--seed", type=_u64, default=0)
    p = add("bv-concat", cmd_bv_concat, "decode a secret from concatenated BV proofs")
    p.add_argument("--secret", required=True)
    p.add_argument("--chunk-bits", type=int, required=True)
    p.add_argument("--seed", type=_u64, default=0)
    p = add("experiment-or", cmd_experiment_or, "Grover OR-with-advice iteration scaling")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--advice", type=int, action="append", help="advice bits; repeatable")
    p.add_argument("--max-iterations", type=int, default=40)
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=_u64, default=0)
    p = add("fixture", cmd_fixture, "write a fixture circuit document")
    p.add_argument("kind", choices=("bit-reader", "parity", "constant"))
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--j", type=int, default=2)
    p.add_argument("--p", type=float, default=0.5)
    p = add("report", cmd_report, "merge report files")
    p.add_argument("paths", nargs="*")
    return parser


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    table = report.get("table")
    if not table:
        raise UsageError("this command has no table to emit as CSV")
    fields = list(dict.fromkeys(k for row in table for k in row))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(table)
    return buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        report = args.func(args)
        if args.timing:
            report["wall_clock_seconds"] = time.perf_counter() - start
        text = render(report, args.format)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

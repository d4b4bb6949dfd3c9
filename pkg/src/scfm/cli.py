"""Command-line interface.

Subcommands cover the full workflow: ``generate`` synthetic data,
``identify`` rank/identifiability reports, ``cluster`` combination-value
estimation, ``learn`` dictionary recovery, ``infer-assignments`` state
decoding, ``estimate`` auxiliary parameters, ``em`` the baseline, and
``bench`` the sweep harness. Matrices travel as header-free CSV; reports
as JSON.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .bench import BenchmarkConfig, run_benchmark
from .cluster import ClusterOptions, concentration_diagnostic, estimate_combinations
from .em import EMConfig, em_fit
from .estimate import estimate_covariance, estimate_priors, estimate_transitions
from .exceptions import InvalidConfig, ScfmError
from .generate import GeneratorConfig, generate_dataset
from .identifiability import verify_identifiability
from .lasso import LassoOptions, infer_assignments
from .recovery import RecoveryOptions, learn_emissions
from .types import SHARED, AssignmentMatrix, EmissionMatrix, ModelShape


def _parse_lambda(text):
    if text == "auto":
        return None
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("lambda must be positive or 'auto'")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scfm",
        description="Shared-component factorial model learning and analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a synthetic dataset")
    p.add_argument("--config", required=True, help="GeneratorConfig JSON file")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("identify", help="rank-based identifiability report")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--L", type=int, default=1, help="observation dimension (unused by ranks)")
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")

    p = sub.add_parser("cluster", help="estimate the combination-value matrix")
    p.add_argument("--in", dest="infile", required=True, help="X.csv (L x T)")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="centers CSV (L x M**K)")
    p.add_argument("--diag", default=None, help="diagnostics JSON")

    p = sub.add_parser("learn", help="recover the dictionary from combination values")
    p.add_argument("--xc", required=True, help="combination values CSV (L x M**K)")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=_parse_lambda, default=None)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True, help="recovered dictionary CSV (L x KM)")
    p.add_argument("--report", default=None, help="recovery report JSON")

    p = sub.add_parser("infer-assignments", help="decode chain states from data")
    p.add_argument("--x", required=True, help="X.csv (L x T)")
    p.add_argument("--o", required=True, help="dictionary CSV (L x KM)")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=_parse_lambda, default=None)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True, help="assignment CSV (K(M-1)+1 x T)")

    p = sub.add_parser("estimate", help="estimate priors/transitions and covariance")
    p.add_argument("--x", required=True)
    p.add_argument("--o", required=True, help="dictionary CSV (L x KM)")
    p.add_argument("--r", required=True, help="assignment CSV (K(M-1)+1 x T)")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--mode", choices=("iid", "markov"), default="iid")
    p.add_argument("--out", required=True, help="parameters JSON")

    p = sub.add_parser("em", help="EM baseline fit")
    p.add_argument("--x", required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="fitted dictionary CSV (L x KM)")
    p.add_argument("--trace", default=None,
                   help="CSV of (restart, iteration, loglik) rows")

    p = sub.add_parser("bench", help="run a benchmark sweep")
    p.add_argument("--config", required=True, help="BenchmarkConfig JSON file")
    return parser


def _cmd_generate(args):
    config = GeneratorConfig.from_json(args.config)
    data = generate_dataset(config)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    io.write_matrix(outdir / "X.csv", data.X)
    io.write_matrix(outdir / "O_true.csv", data.emission.full)
    io.write_matrix(outdir / "R_true.csv", data.assignments.matrix)
    io.write_json(outdir / "params.json", {
        "config": config.to_dict(),
        "dictionary_retries": data.retries,
    })
    print(f"wrote X.csv O_true.csv R_true.csv params.json to {outdir}")
    return 0


def _cmd_identify(args):
    shape = ModelShape(L=args.L, M=args.M, K=args.K)
    verdict = verify_identifiability(shape)
    report = {
        "M": args.M,
        "K": args.K,
        "expected_rank": shape.n_shared_rows,
        **verdict,
    }
    if args.out:
        io.write_json(args.out, report)
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _cmd_cluster(args):
    X = io.read_matrix(args.infile)
    shape = ModelShape(L=X.shape[0], M=args.M, K=args.K)
    opts = ClusterOptions(restarts=args.restarts, seed=args.seed)
    clusters = estimate_combinations(X, shape, opts)
    io.write_matrix(args.out, clusters.centers)
    if args.diag:
        q = clusters.quality
        conc = concentration_diagnostic(X, clusters.centers, q.sigma_hat)
        io.write_json(args.diag, {
            "min_center_separation": q.min_center_separation,
            "noise_shell_radius": q.noise_shell_radius,
            "separation_ratio": q.separation_ratio,
            "concentration_ok": q.concentration_ok,
            "sigma_hat": q.sigma_hat,
            "distortion": q.distortion,
            "missing_combinations": q.missing_combinations,
            "best_restart": q.best_restart,
            "counts": clusters.counts.tolist(),
            "concentration": {
                "constants": list(conc.constants),
                "empirical_fractions": list(conc.empirical_fractions),
                "bounds": list(conc.bounds),
                "n_pairs": conc.n_pairs,
            },
        })
    print(f"wrote {shape.n_combinations} centers to {args.out}")
    return 0


def _cmd_learn(args):
    xc = io.read_matrix(args.xc)
    shape = ModelShape(L=xc.shape[0], M=args.M, K=args.K)
    opts = RecoveryOptions(lam=args.lam, binarize_threshold=args.threshold)
    recovered = learn_emissions(xc, shape, opts)
    io.write_matrix(args.out, recovered.O_hat.full)
    if args.report:
        io.write_json(args.report, recovered.provenance)
    print(f"wrote recovered dictionary to {args.out}")
    return 0


def _cmd_infer(args):
    X = io.read_matrix(args.x)
    full = io.read_matrix(args.o)
    emission = EmissionMatrix.from_full(full, args.M, args.K)
    opts = LassoOptions(lam=args.lam)
    inference = infer_assignments(emission, X, opts, args.threshold)
    io.write_matrix(args.out, inference.assignments.matrix)
    if inference.high_rejection:
        print(
            f"warning: {inference.rejection_rate:.1%} of positive coefficients fell "
            "below the threshold",
            file=sys.stderr,
        )
    print(f"wrote assignments to {args.out}")
    return 0


def _cmd_estimate(args):
    X = io.read_matrix(args.x)
    full = io.read_matrix(args.o)
    emission = EmissionMatrix.from_full(full, args.M, args.K)
    rmat = io.read_matrix(args.r, dtype=int)
    assignments = AssignmentMatrix(
        shape=emission.shape, form=SHARED, matrix=rmat
    ).validate()
    report = {}
    if args.mode == "iid":
        report["priors"] = estimate_priors(assignments).tolist()
    else:
        transitions, raw = estimate_transitions(assignments)
        report["transitions"] = transitions.tolist()
        report["transitions_raw"] = raw.tolist()
    cov = estimate_covariance(X, emission, assignments)
    report["covariance"] = cov.tolist()
    io.write_json(args.out, report)
    print(f"wrote parameter estimates to {args.out}")
    return 0


def _cmd_em(args):
    X = io.read_matrix(args.x)
    shape = ModelShape(L=X.shape[0], M=args.M, K=args.K)
    config = EMConfig(restarts=args.restarts, max_iters=args.max_iters, seed=args.seed)
    result = em_fit(X, shape, config)
    io.write_matrix(args.out, result.emission.full)
    if args.trace:
        rows = [
            (r, i, ll)
            for r, trace in enumerate(result.restart_traces)
            for i, ll in enumerate(trace)
        ]
        io.write_matrix(args.trace, np.array(rows))
    print(
        f"EM finished: loglik {result.loglik:.6g} "
        f"(best of {args.restarts} restarts: #{result.best_restart})"
    )
    return 0


def _cmd_bench(args):
    config = BenchmarkConfig.from_json(args.config)
    results = run_benchmark(config)
    n_failed = sum(r.failed for r in results)
    print(
        f"benchmark complete: {len(results)} trials ({n_failed} failed), "
        f"results in {config.output_dir}"
    )
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "identify": _cmd_identify,
    "cluster": _cmd_cluster,
    "learn": _cmd_learn,
    "infer-assignments": _cmd_infer,
    "estimate": _cmd_estimate,
    "em": _cmd_em,
    "bench": _cmd_bench,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ScfmError, InvalidConfig, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

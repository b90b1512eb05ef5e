import os
import argparse


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=str, default="./quasr_out")
    parser.add_argument("--threads", type=int, default=None,
                        help="parallel workers (falls back to $QUASR_THREADS, then 1)")
    parser.add_argument("--deterministic", action="store_true",
                        help="single-threaded execution for bit-reproducible outputs")
    parser.add_argument("--progress", action="store_true")
    parser.add_argument("--verbose", action="store_true")


def _add_solver(parser):
    parser.add_argument("--solver", type=str, default="admm", choices=["cd", "admm", "ista"])
    parser.add_argument("--rho", type=float, default=1.0)
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--max_iters", type=int, default=None)
    parser.add_argument("--no_penalize_vertices", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="quasr", description="Regularized score matching for graphical models")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit one lambda or a lambda path on a data matrix")
    fit.add_argument("data", type=str, help="CSV file, n rows x d columns, optional header")
    fit.add_argument("--basis", type=str, default="gaussian", choices=["gaussian", "legendre"])
    fit.add_argument("--m1", type=int, default=None)
    fit.add_argument("--m2", type=int, default=None)
    fit.add_argument("--truncation_grid", type=int, default=None,
                     help="legendre path over (1,1)..(M,M) instead of a single (m1, m2)")
    mode = fit.add_mutually_exclusive_group(required=True)
    mode.add_argument("--lambda", dest="lam", type=float, default=None)
    mode.add_argument("--path", action="store_true")
    fit.add_argument("--n_lambdas", type=int, default=30)
    fit.add_argument("--lambda_min_ratio", type=float, default=0.01)
    fit.add_argument("--holdout", type=str, default=None)
    fit.add_argument("--holdout_fraction", type=float, default=0.2,
                     help="share of the data held out when --path is given without --holdout")
    fit.add_argument("--criterion", type=str, default="hyvarinen", choices=["hyvarinen", "nll"])
    fit.add_argument("--no_standardize", action="store_true")
    _add_solver(fit)
    _add_common(fit)

    simulate = sub.add_parser("simulate", help="sample data from a random graphical model")
    simulate.add_argument("--graph", type=str, default="tree", choices=["tree", "er"])
    simulate.add_argument("--p", type=float, default=0.1)
    simulate.add_argument("--d", type=int, default=10)
    simulate.add_argument("--n", type=int, default=100)
    simulate.add_argument("--copula", action="store_true")
    _add_common(simulate)

    experiment = sub.add_parser("experiment", help="replicated structure-recovery experiment")
    experiment.add_argument("descriptor", type=str, help="experiment JSON file")
    _add_common(experiment)
    experiment.set_defaults(seed=None)

    # wandb
    experiment.add_argument("--wandb", action="store_true")
    experiment.add_argument("--name", type=str, default="quasr-experiment")
    experiment.add_argument("--project", type=str, default="QUASR")
    experiment.add_argument("--entity", type=str, default=None)
    experiment.add_argument("--offline", action="store_true")
    return parser


def resolve_threads(args) -> int:
    if args.deterministic:
        return 1
    if args.threads is not None:
        return args.threads
    return int(os.environ.get("QUASR_THREADS", "1"))


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        parser.error(f"Invalid thread count: {args.threads}")
    return args

"""Command-line driver.

Exit codes: 0 on success (certificate Holds or Marginal), 1 when a
certificate Fails or a fuzz run records a counterexample, 2 on invalid
input.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import markov_core as mc
from .certification import DEFAULT_TOL, CHAIN_KINDS, FuzzConfig, Verdict, certify_matrix_poincare, fuzz
from .concentration import tail_report
from .matrix_function import FUNCTION_KINDS, MatrixFunction, random_matrix_function
from .spectral import SpectralError, eigendecompose

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, output: str | None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def load_chain(path: str) -> mc.ReversibleGenerator:
    return mc.chain_from_dict(_load_json(path))


def load_function(path: str) -> MatrixFunction:
    return MatrixFunction.from_dict(_load_json(path))


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from exc


def _builder_params(args) -> dict:
    if args.params is not None:
        try:
            return json.loads(args.params)
        except json.JSONDecodeError as exc:
            raise InputError(f"--params is not valid JSON: {exc}") from exc
    name = args.name
    need = {
        "complete": ["n"],
        "hypercube": ["m"],
        "birth_death": ["up", "down"],
        "two_state": ["a", "b"],
        "product": ["left", "right"],
        "metropolis": ["target", "proposal"],
    }.get(name)
    if need is None:
        raise InputError(f"unknown builder {name!r}; known: {sorted(mc.BUILDERS)}")
    missing = [k for k in need if getattr(args, k) is None]
    if missing:
        raise InputError(f"builder {name!r} needs --{' --'.join(missing)}")
    params = {}
    for k in need:
        v = getattr(args, k)
        if k in ("up", "down", "target"):
            params[k] = _floats(v)
        elif k in ("left", "right"):
            params[k] = _load_json(v)
        elif k == "proposal":
            params[k] = _load_json(v)
        else:
            params[k] = v
    return params


def cmd_chain_build(args) -> int:
    params = _builder_params(args)
    chain = mc.chain_from_dict({"kind": "builder", "name": args.name, "params": params})
    _emit(dumps(mc.chain_to_dict(chain)), args.output)
    report = mc.check_detailed_balance(chain.rates, chain.mu)
    print(f"n={chain.n} reversibility_residual={report.max_violation:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_spectral(args) -> int:
    chain = load_chain(args.chain)
    spec = eigendecompose(chain)
    _emit(dumps(spec.to_dict()), args.output)
    print(f"lambda_1={spec.gap!r} alpha={spec.poincare_constant!r}", file=sys.stderr)
    return EXIT_OK


def cmd_certify(args) -> int:
    chain = load_chain(args.chain)
    f = load_function(args.function)
    if f.n != chain.n:
        raise InputError(f"function has {f.n} states, chain has {chain.n}")
    report = certify_matrix_poincare(chain, f, args.alpha, args.tol)
    _emit(dumps(report.to_dict()), args.output)
    print(f"verdict={report.verdict.value} min_eig={report.certificate.difference_min_eigenvalue!r}",
          file=sys.stderr)
    return EXIT_FAIL if report.verdict is Verdict.FAILS else EXIT_OK


def cmd_fuzz(args) -> int:
    config = FuzzConfig(
        num_trials=args.trials,
        n_range=(args.n_min, args.n_max),
        d_range=(args.d_min, args.d_max),
        chain_kinds=tuple(args.chain_kinds.split(",")),
        function_kinds=tuple(args.function_kinds.split(",")),
        seed=args.seed,
        alpha_factor=args.invalid_alpha_factor,
        tol=args.tol,
        jobs=args.jobs,
    )
    summary = fuzz(config)
    _emit(dumps(summary.to_dict()), args.output)
    print(f"trials={summary.trials} failures={len(summary.failures)} "
          f"worst_slack={summary.worst_slack!r}", file=sys.stderr)
    return EXIT_FAIL if summary.failures else EXIT_OK


def cmd_tail(args) -> int:
    chain = load_chain(args.chain)
    f = load_function(args.function)
    if f.n != chain.n:
        raise InputError(f"function has {f.n} states, chain has {chain.n}")
    report = tail_report(chain, f, _floats(args.thresholds), args.alpha,
                         chain_id=args.chain, function_id=args.function)
    text = report.to_csv() if args.format == "csv" else dumps(report.to_dict())
    _emit(text, args.output)
    return EXIT_OK


def cmd_function_random(args) -> int:
    chain = load_chain(args.chain)
    f = random_matrix_function(chain, args.d, args.kind, seed=args.seed, mode_index=args.mode)
    _emit(dumps(f.to_dict()), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", "-o", default=None, help="output file (default: stdout)")
    common.add_argument("--jobs", type=int, default=1)

    parser = argparse.ArgumentParser(prog="matpoincare", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    chain = sub.add_parser("chain", help="chain construction")
    chain_sub = chain.add_subparsers(dest="chain_command", required=True)
    build = chain_sub.add_parser("build", parents=[common], help="build a named chain")
    build.add_argument("--name", required=True, choices=sorted(mc.BUILDERS))
    build.add_argument("--params", help="builder parameters as a JSON object")
    build.add_argument("--n", type=int)
    build.add_argument("--m", type=int)
    build.add_argument("--a", type=float)
    build.add_argument("--b", type=float)
    build.add_argument("--up", help="comma-separated up rates")
    build.add_argument("--down", help="comma-separated down rates")
    build.add_argument("--target", help="comma-separated target measure")
    build.add_argument("--proposal", help="JSON file holding the proposal matrix")
    build.add_argument("--left", help="chain file for the first factor")
    build.add_argument("--right", help="chain file for the second factor")
    build.set_defaults(func=cmd_chain_build)

    p = sub.add_parser("spectral", parents=[common], help="spectrum and Poincare constant")
    p.add_argument("chain")
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("certify", parents=[common], help="certify the matrix Poincare inequality")
    p.add_argument("chain")
    p.add_argument("function")
    p.add_argument("--alpha", type=float, default=None)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("fuzz", parents=[common], help="randomized soundness sweep")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--d-min", type=int, default=1)
    p.add_argument("--d-max", type=int, default=4)
    p.add_argument("--chain-kinds", default=",".join(CHAIN_KINDS))
    p.add_argument("--function-kinds", default=",".join(FUNCTION_KINDS))
    p.add_argument("--invalid-alpha-factor", type=float, default=1.0,
                   help="certify at FACTOR / gap instead of 1 / gap (negative control when < 1)")
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("tail", parents=[common], help="exact tail vs second-moment bound")
    p.add_argument("chain")
    p.add_argument("function")
    p.add_argument("--thresholds", required=True, help="comma-separated ascending t values")
    p.add_argument("--alpha", type=float, default=None)
    p.set_defaults(func=cmd_tail)

    fn = sub.add_parser("function", help="matrix function fixtures")
    fn_sub = fn.add_subparsers(dest="function_command", required=True)
    p = fn_sub.add_parser("random", parents=[common], help="random matrix function on a chain")
    p.add_argument("chain")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--kind", choices=FUNCTION_KINDS, default="hermitian")
    p.add_argument("--mode", type=int, default=None, help="eigenmode index for --kind eigenmode")
    p.set_defaults(func=cmd_function_random)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, ValueError, IndexError, SpectralError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

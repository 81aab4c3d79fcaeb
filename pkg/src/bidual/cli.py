"""Command-line interface: ``bidual solve|bound|oracle|verify|sweep|classify``.

Exit codes: 0 success, 1 input error, 2 infeasible, 3 unbounded,
4 certificate invalid under a satisfied hypothesis.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bench
from .certify import InfeasibleRelaxation, lower_bound, oracle_for, verify_certificate
from .model import (
    CONSERVATIVE,
    BlockPartition,
    InvalidInstance,
    ProblemInstance,
    SparsityMode,
    Status,
    validate,
)
from .oracle import BudgetExceeded, OracleBudget
from .relax import build_bidual_lp, recover_solution, trivially_infeasible
from .simplex import format_lp, solve_lp

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_UNBOUNDED = 3
EXIT_INVALID = 4

DISPLAY_TOL = 1e-8

log = logging.getLogger("bidual")


class ProblemFileError(ValueError):
    pass


def _parse_M(value):
    if isinstance(value, str):
        if value.strip().lower() == CONSERVATIVE:
            return CONSERVATIVE
        try:
            return float(value)
        except ValueError:
            raise ProblemFileError(f'"M" must be a number or "{CONSERVATIVE}", got {value!r}') from None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ProblemFileError(f'"M" must be a number or "{CONSERVATIVE}"')


def parse_problem(text: str, source: str = "<input>") -> ProblemInstance:
    """Parse a problem JSON document into a validated ProblemInstance."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{source}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ProblemFileError(f"{source}: top level must be an object")
    for key in ("A", "b"):
        if key not in doc:
            raise ProblemFileError(f'{source}: missing required field "{key}"')
    try:
        A = np.array(doc["A"], dtype=float)
        b = np.array(doc["b"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemFileError(f'{source}: "A" and "b" must be numeric arrays ({exc})') from None
    if A.ndim != 2:
        raise ProblemFileError(f'{source}: "A" must be an array of equal-length rows')
    if b.ndim != 1:
        raise ProblemFileError(f'{source}: "b" must be a flat array')
    m, n = A.shape
    if "m" in doc and doc["m"] != m:
        raise ProblemFileError(f'{source}: "m" = {doc["m"]} but A has {m} rows')
    if "n" in doc and doc["n"] != n:
        raise ProblemFileError(f'{source}: "n" = {doc["n"]} but A has {n} columns')
    try:
        partition = BlockPartition(tuple(doc.get("blocks", [1] * n)))
    except (TypeError, ValueError) as exc:
        raise ProblemFileError(f'{source}: bad "blocks": {exc}') from None
    M = _parse_M(doc.get("M", CONSERVATIVE))

    mode = doc.get("mode")
    if mode is not None:
        gamma = float(doc.get("gamma", 0.01))
        try:
            smode = SparsityMode(mode, gamma if mode == SparsityMode.MIXED else 0.0)
        except ValueError as exc:
            raise ProblemFileError(f'{source}: bad "mode": {exc}') from None
        inst = ProblemInstance.from_mode(A, b, smode, partition, M)
    else:
        for key in ("alpha", "beta"):
            if key not in doc:
                raise ProblemFileError(f'{source}: missing required field "{key}" (or give "mode")')
        inst = ProblemInstance(A, b, partition, doc["alpha"], doc["beta"], M)
    problems = validate(inst)
    if problems:
        raise ProblemFileError(f"{source}: invalid problem: " + "; ".join(problems))
    return inst


def dump_problem(instance: ProblemInstance) -> str:
    doc = {
        "m": instance.m,
        "n": instance.n,
        "A": instance.A.tolist(),
        "b": instance.b.tolist(),
        "blocks": list(instance.partition.sizes),
        "alpha": instance.alpha.tolist(),
        "beta": instance.beta.tolist(),
        "M": instance.M,
    }
    if instance.mode is not None:
        doc["mode"] = instance.mode.name
        if instance.mode.name == SparsityMode.MIXED:
            doc["gamma"] = instance.mode.gamma
    return json.dumps(doc)


def load_problem(path) -> ProblemInstance:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror}") from None
    return parse_problem(text, str(path))


def _g(v) -> str:
    return f"{v:.12g}"


def _format_vector(name, x, tol=DISPLAY_TOL):
    shown = np.flatnonzero(np.abs(x) >= tol)
    lines = [f"  {name}[{i}] = {_g(x[i])}" for i in shown]
    hidden = x.size - shown.size
    if hidden:
        lines.append(f"  ({hidden} entries hidden, |{name}_i| < {tol:g})")
    return lines


def _instance_from_args(args) -> ProblemInstance:
    inst = load_problem(args.file)
    if getattr(args, "mode", None):
        mode = SparsityMode(args.mode, args.gamma if args.mode == SparsityMode.MIXED else 0.0)
        inst = ProblemInstance.from_mode(inst.A, inst.b, mode, inst.partition, inst.M)
    if getattr(args, "m", None) is not None:
        inst = inst.with_M(_parse_M(args.m))
    problems = validate(inst)
    if problems:
        raise ProblemFileError("invalid problem: " + "; ".join(problems))
    return inst


def cmd_solve(args) -> int:
    inst = _instance_from_args(args)
    enc = build_bidual_lp(inst)
    if args.dump_lp:
        Path(args.dump_lp).write_text(format_lp(enc.lp))
    if trivially_infeasible(inst):
        print("status: infeasible")
        return EXIT_INFEASIBLE
    lp_sol = solve_lp(enc.lp)
    print(f"status: {lp_sol.status.value}")
    if lp_sol.status is Status.INFEASIBLE:
        return EXIT_INFEASIBLE
    if lp_sol.status is Status.UNBOUNDED:
        return EXIT_UNBOUNDED
    sol = recover_solution(enc, lp_sol)
    form = "conservative" if inst.conservative else f"box M = {_g(inst.M)}"
    print(f"form: {form}")
    print(f"objective: {_g(sol.objective)}")
    print("x:")
    print("\n".join(_format_vector("x", sol.x)))
    print("block inf-norms: " + " ".join(_g(v) for v in sol.block_inf_norms))
    print("block l1-norms:  " + " ".join(_g(v) for v in sol.block_l1_norms))
    return EXIT_OK


def cmd_bound(args) -> int:
    inst = _instance_from_args(args)
    if inst.conservative:
        raise ProblemFileError('a certificate needs a finite M; pass --m or set "M" in the file')
    try:
        cert = lower_bound(inst)
    except InfeasibleRelaxation as exc:
        print(f"status: infeasible ({exc})")
        return EXIT_INFEASIBLE
    print(f"bound: {_g(cert.bound)}")
    if cert.integer_bound is not None:
        print(f"integer bound: {cert.integer_bound}")
    print(f"M_used: {_g(cert.M_used)}")
    print(f"kind: {cert.kind if cert.kind is not None else 'weighted'}")
    print(f"claim: {cert.claim}")
    return EXIT_OK


def _budget(args) -> OracleBudget:
    if args.budget_subsets is None:
        return OracleBudget()
    return OracleBudget(max_subsets=args.budget_subsets)


def cmd_oracle(args) -> int:
    inst = _instance_from_args(args)
    res = oracle_for(inst, _budget(args))
    if res.witness_x is None:
        print("status: infeasible" if res.exhaustive else "status: budget exhausted, no feasible support found")
        return EXIT_INFEASIBLE if res.exhaustive else EXIT_INPUT
    print(f"value: {_g(res.value)}")
    print(f"support: {sorted(res.support)}")
    print(f"exhaustive: {'yes' if res.exhaustive else 'no (budget exceeded, best so far)'}")
    print(f"supports tested: {res.subsets_tested}")
    print("witness:")
    print("\n".join(_format_vector("x", res.witness_x)))
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = _instance_from_args(args)
    res = oracle_for(inst.with_M(CONSERVATIVE), _budget(args))
    if res.witness_x is None:
        print("status: primal infeasible, nothing to verify")
        return EXIT_INFEASIBLE
    if not res.exhaustive:
        print("oracle budget exceeded; cannot verify")
        return EXIT_INPUT
    if inst.conservative:
        inst = inst.with_M(max(float(np.max(np.abs(res.witness_x))), 1e-12))
    try:
        cert = lower_bound(inst)
    except InfeasibleRelaxation as exc:
        print(f"status: infeasible ({exc})")
        return EXIT_INFEASIBLE
    report = verify_certificate(cert, res)
    print(f"M_used: {_g(cert.M_used)}")
    print(report.summary())
    return EXIT_OK if report.ok else EXIT_INVALID


def _write_out(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_sweep(args) -> int:
    cfg = bench.SweepConfig(
        m=args.rows,
        n=args.cols,
        sparsity_grid=tuple(args.sparsity),
        M_multipliers=tuple(args.multipliers),
        trials=args.trials,
        rng_seed=args.seed,
    )
    records = bench.run_sweep(cfg, threads=args.threads, timing=not args.no_timing, oracle=args.oracle)
    _write_out(bench.records_to_csv(records), args.out)
    if args.summary:
        Path(args.summary).write_text(json.dumps(bench.summarize(records), indent=2))
    return EXIT_OK


def cmd_classify(args) -> int:
    cfg = bench.ClassifyConfig(
        K=args.classes,
        d=args.per_class,
        m=args.rows,
        rho=args.rho,
        gamma=args.gamma,
        trials=args.trials,
        rng_seed=args.seed,
        block_energy_threshold=args.threshold,
    )
    report = bench.run_classify(cfg, threads=args.threads)
    _write_out(report.to_json() + "\n", args.out)
    return EXIT_OK


def _sparsity_list(text):
    return [int(v) for v in text.split(",") if v]


def _float_list(text):
    return [float(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bidual", description="Bidual relaxations and sparsity lower bounds")
    sub = p.add_subparsers(dest="command", required=True)

    def problem_cmd(name, help_, func):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--file", required=True, help="problem JSON file")
        sp.add_argument("--m", help='box bound M (number or "conservative"); overrides the file')
        sp.add_argument("--mode", choices=[SparsityMode.ENTRY, SparsityMode.GROUP, SparsityMode.MIXED])
        sp.add_argument("--gamma", type=float, default=0.01)
        sp.set_defaults(func=func)
        return sp

    sp = problem_cmd("solve", "solve the bidual relaxation", cmd_solve)
    sp.add_argument("--dump-lp", metavar="PATH", help="write the LP in fixed-width text form")
    problem_cmd("bound", "lower-bound certificate", cmd_bound)
    for name, func in (("oracle", cmd_oracle), ("verify", cmd_verify)):
        sp = problem_cmd(name, f"{name} by exact support enumeration", func)
        sp.add_argument("--budget-subsets", type=int)

    sp = sub.add_parser("sweep", help="lower-bound sweep on random Gaussian instances")
    sp.add_argument("--rows", type=int, default=32)
    sp.add_argument("--cols", type=int, default=64)
    sp.add_argument("--sparsity", type=_sparsity_list, default=[1, 4, 7, 10, 13, 16])
    sp.add_argument("--multipliers", type=_float_list, default=[1.0, 2.0, 5.0])
    sp.add_argument("--trials", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--out", help="CSV path (default stdout)")
    sp.add_argument("--summary", help="JSON path for per-cell quantiles")
    sp.add_argument("--oracle", action="store_true", help="also compute exact l0 values (small n)")
    sp.add_argument("--no-timing", action="store_true", help="write ms = 0 for byte-stable output")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("classify", help="synthetic mixed-sparsity classification")
    sp.add_argument("--classes", type=int, default=4)
    sp.add_argument("--per-class", type=int, default=3)
    sp.add_argument("--rows", type=int, default=30)
    sp.add_argument("--rho", type=float, default=0.1)
    sp.add_argument("--gamma", type=float, default=0.01)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threshold", type=float, default=1e-3, help="block energy threshold")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--out", help="JSON path (default stdout)")
    sp.set_defaults(func=cmd_classify)
    return p


def main(argv=None) -> int:
    level = os.environ.get("BIDUAL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ProblemFileError, InvalidInstance, BudgetExceeded, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: parse, prove, extract, verify, print."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from functools import reduce

from .countermodel import (
    countermodel,
    countermodel_violations,
    format_model,
    model_to_dict,
    model_to_dot,
)
from .formula import BOT, And, Formula, Imp, Or, ParseError, parse
from .oracle import BoundExceeded, brute_force_validity
from .proof import extract_proof, format_proof, proof_error, proof_to_dict, proof_to_dot
from .prover import DEFAULT_BUDGET, BudgetExceeded, prove
from .sequent import SeqTree, logic_name, parse_logic, parse_seqtree, render_seqtree

EXIT_PROVABLE = 0
EXIT_NOT_PROVABLE = 1
EXIT_ERROR = 2


class VerificationFailure(RuntimeError):
    """A certificate produced by the tool was rejected by its own checker."""


@dataclass
class RunConfig:
    logic: frozenset[str]
    input: str
    output_format: str = "human"
    trace: bool = False
    budget: int = DEFAULT_BUDGET
    oracle_bound: int | None = None
    sequent: bool = False
    workers: int = 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nested-tense",
        description="Decide intuitionistic tense logics IK_tC (C a subset of T, B, D) "
        "by nested-sequent proof search; prints a checked proof or a checked counter-model.",
    )
    p.add_argument("input", help="formula, or nested sequent with --sequent")
    p.add_argument("--logic", default="", help="subset of the letters T, B, D (default: none)")
    p.add_argument("--format", dest="output_format", choices=("human", "json", "dot"), default="human")
    p.add_argument("--trace", action="store_true", help="print one line per rule application to stderr")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="computation-tree node budget")
    p.add_argument("--oracle-bound", type=int, default=None,
                   help="cross-check with brute-force model search up to this many worlds")
    p.add_argument("--sequent", action="store_true", help="read the input as a nested sequent")
    p.add_argument("--workers", type=int, default=1, help="worker processes for db branches")
    return p


def _as_formula(t: SeqTree) -> Formula:
    """The formula of a single-component sequent."""
    if len(t) != 1:
        raise ValueError("the oracle cross-check needs a single-component input")
    s = t.label(t.root)
    ant = sorted(s.antecedent, key=str)
    cons = sorted(s.consequent, key=str)
    left = reduce(And, ant) if ant else Imp(BOT, BOT)
    right = reduce(Or, cons) if cons else BOT
    return Imp(left, right) if ant else right


def run(cfg: RunConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        inp = parse_seqtree(cfg.input) if cfg.sequent else SeqTree.of_formula(parse(cfg.input))
    except ParseError as exc:
        print(f"parse error: {exc}", file=err)
        return EXIT_ERROR

    trace = (lambda line: print(line, file=err)) if cfg.trace else None
    started = time.perf_counter()
    try:
        verdict = prove(inp, cfg.logic, budget=cfg.budget, trace=trace, workers=cfg.workers)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=err)
        return EXIT_ERROR
    elapsed = time.perf_counter() - started

    result: dict = {
        "input": render_seqtree(inp),
        "logic": logic_name(cfg.logic),
        "provable": verdict.provable,
        "nodes": len(verdict.tree),
        "seconds": round(elapsed, 6),
    }
    try:
        if verdict.provable:
            proof = extract_proof(verdict)
            problem = proof_error(proof, cfg.logic)
            if problem:
                raise VerificationFailure(f"proof checker rejected the extracted proof: {problem}")
            result["proof"] = proof_to_dict(proof)
        else:
            model, bp = countermodel(verdict)
            problems = countermodel_violations(model, bp, inp)
            if problems:
                raise VerificationFailure("model checker rejected the extracted model: " + "; ".join(problems[:5]))
            result["model"] = model_to_dict(model)
        result["verified"] = True

        if cfg.oracle_bound is not None:
            oracle = brute_force_validity(_as_formula(inp), cfg.logic, cfg.oracle_bound)
            result["oracle"] = {
                "bound": cfg.oracle_bound,
                "outcome": "invalid" if oracle.is_invalid else "no_countermodel",
            }
            if oracle.is_invalid and verdict.provable:
                raise VerificationFailure("the oracle refutes a formula the prover proved")
    except VerificationFailure as exc:
        print(f"INTERNAL VERIFICATION FAILURE: {exc}", file=err)
        return EXIT_ERROR
    except (BoundExceeded, ValueError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_ERROR

    if cfg.output_format == "json":
        print(json.dumps(result, indent=2), file=out)
    elif cfg.output_format == "dot":
        print(proof_to_dot(proof) if verdict.provable else model_to_dot(model), file=out)
    else:
        name = "IK_t" + logic_name(cfg.logic)
        status = "provable" if verdict.provable else "not provable"
        print(f"{render_seqtree(inp)} is {status} in {name} "
              f"({len(verdict.tree)} computation-tree nodes, {elapsed:.3f}s)", file=out)
        if verdict.provable:
            print("proof (checked):", file=out)
            print(format_proof(proof), file=out)
        else:
            print("counter-model (checked):", file=out)
            print(format_model(model), file=out)
        if "oracle" in result:
            print(f"oracle up to {cfg.oracle_bound} worlds: {result['oracle']['outcome']}", file=out)
    return EXIT_PROVABLE if verdict.provable else EXIT_NOT_PROVABLE


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        logic = parse_logic(args.logic)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.budget < 1 or args.workers < 1:
        print("error: --budget and --workers must be positive", file=sys.stderr)
        return EXIT_ERROR
    cfg = RunConfig(logic, args.input, args.output_format, args.trace, args.budget,
                    args.oracle_bound, args.sequent, args.workers)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

"""Benchmark problem domains and the problem registry used by the CLI."""

from __future__ import annotations

from .base import Problem
from .bitstrings import OneMax, Trap5, score_onemax, score_trap
from .realvec import Rosenbrock, Sphere, score_rosenbrock, score_sphere
from .symreg import SymbolicRegression, eval_tree, load_dataset, tree_str

PROBLEM_NAMES = ("onemax", "trap5", "sphere", "rosenbrock", "symreg")


def make_problem(name: str, **params) -> Problem:
    """Build a problem by registry name.

    Recognized params per problem: onemax/trap5 -> bits; sphere and
    rosenbrock -> dim, target; symreg -> max_depth, dataset (CSV path).
    """
    if name == "onemax":
        return OneMax(bits=int(params.get("bits", 50)))
    if name == "trap5":
        return Trap5(bits=int(params.get("bits", 30)))
    if name == "sphere":
        kw = {}
        if "target" in params:
            kw["target"] = params["target"]
        return Sphere(dim=int(params.get("dim", 10)), **kw)
    if name == "rosenbrock":
        kw = {}
        if "target" in params:
            kw["target"] = params["target"]
        return Rosenbrock(dim=int(params.get("dim", 5)), **kw)
    if name == "symreg":
        kw = {"max_depth": int(params.get("max_depth", 5))}
        if "dataset" in params and params["dataset"]:
            probes, outputs = load_dataset(params["dataset"])
            kw["probes"], kw["outputs"] = probes, outputs
        if "target" in params:
            kw["target"] = params["target"]
        return SymbolicRegression(**kw)
    raise KeyError(name)


__all__ = [
    "Problem",
    "OneMax",
    "Trap5",
    "Sphere",
    "Rosenbrock",
    "SymbolicRegression",
    "make_problem",
    "PROBLEM_NAMES",
    "score_onemax",
    "score_trap",
    "score_sphere",
    "score_rosenbrock",
    "eval_tree",
    "tree_str",
    "load_dataset",
]

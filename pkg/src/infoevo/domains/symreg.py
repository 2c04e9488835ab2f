"""Small expression-tree symbolic regression.

Trees are nested tuples: ("x", i) for inputs, ("c", v) for constants,
and (op, left, right) for the binary operators +, -, * and protected /.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..errors import NonFiniteOutput
from .base import Problem

OPS = ("+", "-", "*", "/")
CONSTANT_POOL = (0.0, 1.0, 2.0, 0.5, -1.0)
DIV_GUARD = 1e-9  # protected division returns 1 below this magnitude
OVERFLOW_SCORE = -1e18  # finite sentinel for non-finite tree outputs
DEFAULT_PROBES = ((-1.0,), (0.0,), (1.0,), (2.0,))
DEFAULT_OUTPUTS = (0.0, 0.0, 2.0, 6.0)  # f(x) = x^2 + x


def eval_tree(node, inputs) -> float:
    tag = node[0]
    if tag == "x":
        return float(inputs[node[1]])
    if tag == "c":
        return float(node[1])
    a = eval_tree(node[1], inputs)
    b = eval_tree(node[2], inputs)
    if tag == "+":
        return a + b
    if tag == "-":
        return a - b
    if tag == "*":
        return a * b
    if abs(b) < DIV_GUARD:
        return 1.0
    return a / b


def tree_depth(node) -> int:
    if node[0] in ("x", "c"):
        return 1
    return 1 + max(tree_depth(node[1]), tree_depth(node[2]))


def tree_size(node) -> int:
    if node[0] in ("x", "c"):
        return 1
    return 1 + tree_size(node[1]) + tree_size(node[2])


def tree_labels(node, out=None) -> list[str]:
    if out is None:
        out = []
    tag = node[0]
    if tag == "x":
        out.append(f"x{node[1]}")
    elif tag == "c":
        out.append(f"c:{node[1]!r}")
    else:
        out.append(tag)
        tree_labels(node[1], out)
        tree_labels(node[2], out)
    return out


def tree_str(node) -> str:
    tag = node[0]
    if tag == "x":
        return f"x{node[1]}"
    if tag == "c":
        return f"{node[1]:g}"
    return f"({tree_str(node[1])} {tag} {tree_str(node[2])})"


def _depth_profile(node, max_depth: int) -> np.ndarray:
    counts = np.zeros(max_depth, dtype=float)

    def walk(nd, depth):
        counts[min(depth, max_depth) - 1] += 1
        if nd[0] not in ("x", "c"):
            walk(nd[1], depth + 1)
            walk(nd[2], depth + 1)

    walk(node, 1)
    return counts / counts.sum()


def _subtree_positions(node, prefix=()) -> list[tuple]:
    positions = [prefix]
    if node[0] not in ("x", "c"):
        positions += _subtree_positions(node[1], prefix + (1,))
        positions += _subtree_positions(node[2], prefix + (2,))
    return positions


def _get_subtree(node, pos):
    for i in pos:
        node = node[i]
    return node


def _replace_subtree(node, pos, repl):
    if not pos:
        return repl
    parts = list(node)
    parts[pos[0]] = _replace_subtree(node[pos[0]], pos[1:], repl)
    return tuple(parts)


def load_dataset(path) -> tuple[tuple[tuple[float, ...], ...], tuple[float, ...]]:
    """Read a CSV with header row: input columns then one output column."""
    probes, outputs = [], []
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        next(reader)  # header
        for row in reader:
            if not row:
                continue
            vals = [float(v) for v in row]
            probes.append(tuple(vals[:-1]))
            outputs.append(vals[-1])
    return tuple(probes), tuple(outputs)


class SymbolicRegression(Problem):
    def __init__(
        self,
        probes=DEFAULT_PROBES,
        outputs=DEFAULT_OUTPUTS,
        n_vars: int | None = None,
        max_depth: int = 5,
        target: float | None = -1e-9,
        pheno_metric: str = "euclidean",
    ):
        if len(probes) == 0:
            raise ValueError("dataset must be nonempty")
        if pheno_metric not in ("euclidean", "fisher"):
            raise ValueError(f"unknown pheno metric {pheno_metric!r}")
        self.probes = tuple(tuple(p) for p in probes)
        self.outputs = np.asarray(outputs, dtype=float)
        self.n_vars = n_vars if n_vars is not None else len(self.probes[0])
        self.max_depth = max_depth
        self.dimension = self.n_vars
        self.name = f"symreg-d{max_depth}"
        self.target = target
        self.pheno_metric = pheno_metric

    def _random_leaf(self, rng):
        if rng.random() < 0.6:
            return ("x", int(rng.integers(self.n_vars)))
        return ("c", float(CONSTANT_POOL[rng.integers(len(CONSTANT_POOL))]))

    def _grow(self, rng, depth_left: int):
        if depth_left <= 1 or rng.random() < 0.3:
            return self._random_leaf(rng)
        op = OPS[rng.integers(len(OPS))]
        return (op, self._grow(rng, depth_left - 1), self._grow(rng, depth_left - 1))

    def random_genotype(self, rng):
        return self._grow(rng, self.max_depth)

    def score(self, genotype) -> float:
        outs = np.array([eval_tree(genotype, p) for p in self.probes])
        if not np.all(np.isfinite(outs)):
            return OVERFLOW_SCORE
        return float(-np.mean((outs - self.outputs) ** 2))

    def canonical_key(self, genotype) -> str:
        return tree_str(genotype)

    def behavior(self, genotype) -> np.ndarray:
        outs = np.array([eval_tree(genotype, p) for p in self.probes])
        return np.clip(np.nan_to_num(outs, nan=1e6, posinf=1e6, neginf=-1e6), -1e6, 1e6)

    def mutate(self, genotype, rate, rng):
        out = genotype
        if rng.random() < max(rate * 4, 0.3):
            positions = _subtree_positions(out)
            pos = positions[rng.integers(len(positions))]
            room = self.max_depth - len(pos)
            out = _replace_subtree(out, pos, self._grow(rng, max(room, 1)))
        else:
            positions = _subtree_positions(out)
            pos = positions[rng.integers(len(positions))]
            node = _get_subtree(out, pos)
            if node[0] in ("x", "c"):
                out = _replace_subtree(out, pos, self._random_leaf(rng))
            else:
                op = OPS[rng.integers(len(OPS))]
                out = _replace_subtree(out, pos, (op, node[1], node[2]))
        if tree_depth(out) > self.max_depth:
            return genotype
        return out

    def crossover(self, a, b, rng):
        for _ in range(8):
            pa = _subtree_positions(a)
            pb = _subtree_positions(b)
            pos_a = pa[rng.integers(len(pa))]
            pos_b = pb[rng.integers(len(pb))]
            child = _replace_subtree(a, pos_a, _get_subtree(b, pos_b))
            if tree_depth(child) <= self.max_depth:
                return child
        return a

    def d_geno(self, a, b) -> float:
        la, lb = tree_labels(a), tree_labels(b)
        ca: dict[str, int] = {}
        for lbl in la:
            ca[lbl] = ca.get(lbl, 0) + 1
        shared = 0
        cb: dict[str, int] = {}
        for lbl in lb:
            cb[lbl] = cb.get(lbl, 0) + 1
        for lbl, cnt in cb.items():
            shared += min(cnt, ca.get(lbl, 0))
        label_term = 1.0 - shared / max(len(la), len(lb))
        pa = _depth_profile(a, self.max_depth)
        pb = _depth_profile(b, self.max_depth)
        depth_term = 0.5 * float(np.abs(pa - pb).sum())
        return 0.5 * (label_term + depth_term)

    def d_pheno(self, a, b) -> float:
        if self.pheno_metric == "fisher":
            from ..demes import program_fisher_distance

            return program_fisher_distance(a, b, self.probes, self)
        return super().d_pheno(a, b)

    def render(self, genotype) -> str:
        return tree_str(genotype)

    def default_mutation_rate(self) -> float:
        return 0.1

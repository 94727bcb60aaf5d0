"""Directed multigraphs, epsilon-balanced edge models and laplacians.

Vertices are 0-based.  ``deg(i, j)`` is ``G.mult[i, j]``, the number of edges
from i to j.

The laplacian acts on column vectors and column j is the firing vector of
vertex j: ``L[j, j] = outdeg(j) - deg(j, j)`` and ``L[i, j] = -deg(j, i)``.
Every column sums to zero, so ``L Z^n`` lies in the sum-zero lattice, and
``L 1 = 0`` exactly when indegree equals outdegree at every vertex.
"""

from __future__ import annotations

import itertools
import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sympy import primerange

from .integer_smith import IntMatrix

# tolerance for comparing probability masses
_MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Digraph:
    n: int
    mult: np.ndarray

    def __post_init__(self):
        mult = np.array(self.mult, dtype=np.int64)
        if mult.shape != (self.n, self.n):
            raise ValueError(f"mult must be {self.n}x{self.n}, got {mult.shape}")
        if (mult < 0).any():
            raise ValueError("edge multiplicities must be nonnegative")
        mult.setflags(write=False)
        object.__setattr__(self, "mult", mult)

    def __eq__(self, other):
        if not isinstance(other, Digraph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.mult, other.mult)

    def __hash__(self):
        return hash((self.n, self.mult.tobytes()))

    @classmethod
    def from_edges(cls, n: int, edges) -> Digraph:
        mult = np.zeros((n, n), dtype=np.int64)
        for i, j in edges:
            mult[i, j] += 1
        return cls(n, mult)

    def outdeg(self) -> np.ndarray:
        """Out-degrees, loops excluded."""
        return self.mult.sum(axis=1) - np.diag(self.mult)

    def indeg(self) -> np.ndarray:
        return self.mult.sum(axis=0) - np.diag(self.mult)

    def is_balanced(self) -> bool:
        return bool((self.outdeg() == self.indeg()).all())

    def to_json(self) -> dict:
        return {"n": self.n, "mult": self.mult.tolist()}

    @classmethod
    def from_json(cls, obj: Mapping) -> Digraph:
        return cls(int(obj["n"]), np.array(obj["mult"], dtype=np.int64).reshape(obj["n"], obj["n"]))


@dataclass(frozen=True)
class EdgeModel:
    """Finite-support distribution of a single edge multiplicity.

    Construction validates the pmf and, unless ``check=False``, that the
    model is epsilon-balanced at ``epsilon``.
    """

    pmf: Mapping[int, float]
    epsilon: float
    name: str = "custom"
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        pmf = {int(v): float(w) for v, w in sorted(self.pmf.items(), key=lambda kv: int(kv[0]))}
        if not pmf:
            raise ValueError("empty support")
        if any(v < 0 for v in pmf):
            raise ValueError("multiplicities must be nonnegative")
        if any(w <= 0 for w in pmf.values()):
            raise ValueError("probabilities must be positive")
        if abs(sum(pmf.values()) - 1.0) > _MASS_TOL:
            raise ValueError(f"probabilities sum to {sum(pmf.values())}, not 1")
        object.__setattr__(self, "pmf", pmf)
        if self.check:
            if not 0 < self.epsilon < 1:
                raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
            if not check_epsilon_balanced(self, self.epsilon):
                raise ValueError(f"model {self.name!r} is not {self.epsilon}-balanced")

    @property
    def values(self) -> np.ndarray:
        return np.array(list(self.pmf), dtype=np.int64)

    @property
    def probs(self) -> np.ndarray:
        return np.array(list(self.pmf.values()), dtype=np.float64)

    def mean(self) -> float:
        return sum(v * w for v, w in self.pmf.items())

    def to_json(self) -> dict:
        return {"name": self.name, "pmf": {str(v): w for v, w in self.pmf.items()}, "epsilon": self.epsilon}

    @classmethod
    def from_json(cls, obj: Mapping) -> EdgeModel:
        try:
            pmf = {int(v): float(w) for v, w in obj["pmf"].items()}
            eps = float(obj["epsilon"])
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ValueError(f"malformed edge model: {exc}") from exc
        return cls(pmf, eps, name=str(obj.get("name", "custom")))

    @classmethod
    def from_file(cls, path) -> EdgeModel:
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed model file {path}: {exc}") from exc
        return cls.from_json(obj)


def bernoulli(q: float) -> EdgeModel:
    """Erdos-Renyi edges: one edge with probability q."""
    if not 0 < q < 1:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    return EdgeModel({0: 1 - q, 1: q}, min(q, 1 - q), name=f"bernoulli({q})")


def uniform(k: int) -> EdgeModel:
    """Multiplicity uniform on {0, ..., k}."""
    if k < 1:
        raise ValueError("uniform model needs k >= 1")
    w = 1.0 / (k + 1)
    # mod 2 the even residues carry the most mass
    eps = 1.0 - ((k // 2) + 1) * w
    return EdgeModel({v: w for v in range(k + 1)}, eps, name=f"uniform({k})")


def check_epsilon_balanced(model: EdgeModel, eps: float) -> bool:
    """True iff no residue class mod any prime carries more than 1 - eps.

    Only primes up to the support width can put two support points in one
    class; every larger prime is settled by the largest point mass.
    """
    pmf = model.pmf
    if not pmf:
        raise ValueError("empty support")
    bound = 1.0 - eps + _MASS_TOL
    if max(pmf.values()) > bound:
        return False
    width = max(pmf) - min(pmf)
    for p in primerange(2, width + 1):
        mass = [0.0] * p
        for v, w in pmf.items():
            mass[v % p] += w
        if max(mass) > bound:
            return False
    return True


def sample_digraph(n: int, model: EdgeModel, rng: np.random.Generator) -> Digraph:
    """Independent off-diagonal multiplicities drawn from ``model``."""
    if n < 2:
        raise ValueError("need at least 2 vertices")
    mult = model.values[rng.choice(len(model.pmf), size=(n, n), p=model.probs)]
    np.fill_diagonal(mult, 0)
    return Digraph(n, mult)


def laplacian_array(G: Digraph) -> np.ndarray:
    """int64 laplacian; see the module docstring for the convention."""
    A = G.mult.copy()
    np.fill_diagonal(A, 0)
    return np.diag(A.sum(axis=1)) - A.T


def laplacian(G: Digraph) -> IntMatrix:
    return IntMatrix(laplacian_array(G))


def _check_vertex(G: Digraph, i: int) -> None:
    if not 0 <= i < G.n:
        raise IndexError(f"vertex {i} out of range for n={G.n}")


def reduced_laplacian(G: Digraph, i: int) -> IntMatrix:
    """Laplacian with row i and column i deleted."""
    _check_vertex(G, i)
    L = np.delete(np.delete(laplacian_array(G), i, axis=0), i, axis=1)
    return IntMatrix(L, cols=G.n - 1)


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        v = stack.pop()
        for w in np.flatnonzero(adj[v] & ~seen):
            seen[w] = True
            stack.append(int(w))
    return seen


def is_strongly_connected(G: Digraph) -> bool:
    adj = G.mult > 0
    return bool(_reachable(adj, 0).all() and _reachable(adj.T, 0).all())


# brute-force range for spanning_trees_toward
MAX_TREE_VERTICES = 7
MAX_TREE_EDGES = 20


def spanning_trees_toward(G: Digraph, root: int) -> int:
    """Count spanning arborescences oriented toward ``root`` by enumeration.

    Each non-root vertex keeps exactly one outgoing edge; a choice is a tree
    iff following those edges from every vertex reaches the root.  Parallel
    edges contribute the product of their multiplicities.
    """
    _check_vertex(G, root)
    off = G.mult.copy()
    np.fill_diagonal(off, 0)
    # parallel edges are weights, so the range counts distinct edges
    if G.n > MAX_TREE_VERTICES or np.count_nonzero(off) > MAX_TREE_EDGES:
        raise ValueError(
            f"outside brute-force range (n <= {MAX_TREE_VERTICES}, distinct edges <= {MAX_TREE_EDGES})"
        )
    others = [v for v in range(G.n) if v != root]
    choices = [[int(w) for w in np.flatnonzero(off[v])] for v in others]
    total = 0
    for targets in itertools.product(*choices):
        parent = dict(zip(others, targets))
        ok = True
        for v in others:
            seen = set()
            while v != root:
                if v in seen:
                    ok = False
                    break
                seen.add(v)
                v = parent[v]
            if not ok:
                break
        if ok:
            weight = 1
            for v, w in parent.items():
                weight *= int(off[v, w])
            total += weight
    return total

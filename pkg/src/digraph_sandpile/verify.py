"""Small-instance oracle suites, shared by the ``verify`` command and the tests.

Each suite returns a SuiteResult; ``failures`` lists a short description of
every disagreement so a failing run points at a concrete instance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from sympy import factorint

from .abelian_groups import (
    AbelianGroup,
    aut_order,
    cyclic_quotient_witness,
    hom_count,
    order,
    partitions_of,
    sur_count,
    surjection_exists,
)
from .integer_smith import IntMatrix, determinant, smith_normal_form
from .oracles import (
    aut_order_brute,
    cyclic_quotient_brute,
    hom_count_brute,
    quotient_exists_brute,
    smith_diagonal_by_minors,
    sur_count_brute,
)
from .random_digraph import (
    Digraph,
    is_strongly_connected,
    reduced_laplacian,
    spanning_trees_toward,
)
from .sandpile import (
    check_coeulerian_equivalences,
    check_eulerian_equivalences,
    total_sandpile,
    total_sandpile_fast,
    vertex_sandpile,
)

# keep at most this many failure descriptions per suite
_MAX_REPORTED = 20


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, msg: str) -> None:
        if len(self.failures) < _MAX_REPORTED:
            self.failures.append(msg)
        else:
            self.failures[-1] = f"... and more (last: {msg})"

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.checked} checked, {len(self.failures)} failures"


def groups_up_to(max_order: int) -> list[AbelianGroup]:
    """Every abelian group of order at most ``max_order``, one per class."""
    out = []
    for m in range(1, max_order + 1):
        f = factorint(m)
        for combo in itertools.product(*(list(partitions_of(e)) for e in f.values())):
            out.append(AbelianGroup(dict(zip(f, combo))))
    return out


def group_counting_suite(max_order: int = 32) -> SuiteResult:
    """hom_count, sur_count and aut_order against element enumeration."""
    res = SuiteResult(f"group counts vs brute force, |G| <= {max_order}")
    groups = groups_up_to(max_order)
    for G in groups:
        res.checked += 1
        if aut_order(G) != aut_order_brute(G):
            res.fail(f"aut_order({G})")
    for H, G in itertools.product(groups, repeat=2):
        res.checked += 2
        if hom_count(H, G) != hom_count_brute(H, G):
            res.fail(f"hom_count({H}, {G})")
        if sur_count(H, G) != sur_count_brute(H, G):
            res.fail(f"sur_count({H}, {G})")
    return res


def quotient_suite(max_order: int = 16) -> SuiteResult:
    """surjection_exists and cyclic_quotient_witness against subgroup search."""
    res = SuiteResult(f"quotient predicates vs brute force, |H| <= {max_order}")
    groups = groups_up_to(max_order)
    for H, G in itertools.product(groups, repeat=2):
        if order(H) % order(G):
            continue
        res.checked += 2
        if surjection_exists(H, G) != quotient_exists_brute(H, G):
            res.fail(f"surjection_exists({H}, {G})")
        if cyclic_quotient_witness(H, G) != cyclic_quotient_brute(H, G):
            res.fail(f"cyclic_quotient_witness({H}, {G})")
    return res


def smith_suite(count: int = 1000, seed: int = 0, max_dim: int = 4, bound: int = 9) -> SuiteResult:
    """SNF diagonal vs the determinantal-divisor oracle, plus U M V = D."""
    res = SuiteResult(f"Smith form vs minor gcds, {count} matrices")
    rng = np.random.default_rng(seed)
    for t in range(count):
        m, n = (int(x) for x in rng.integers(1, max_dim + 1, size=2))
        # sparse-ish entries exercise rank deficiency and nontrivial divisors
        A = rng.integers(-bound, bound + 1, size=(m, n)) * (rng.random((m, n)) < 0.8)
        if t % 5 == 0:
            A = A * int(rng.integers(2, 5))
        M = IntMatrix(A.tolist(), cols=n)
        snf = smith_normal_form(M, want_transforms=True)
        res.checked += 1
        if snf.diagonal != smith_diagonal_by_minors(M.tolist()):
            res.fail(f"diagonal of {M.tolist()}: {snf.diagonal}")
        if snf.U @ M @ snf.V != snf.diagonal_matrix():
            res.fail(f"U M V != D for {M.tolist()}")
        if abs(determinant(snf.U)) != 1 or abs(determinant(snf.V)) != 1:
            res.fail(f"non-unimodular transform for {M.tolist()}")
    return res


def random_small_digraph(rng: np.random.Generator, n: int, max_mult: int) -> Digraph:
    mult = rng.integers(0, max_mult + 1, size=(n, n))
    np.fill_diagonal(mult, 0)
    return Digraph(n, mult)


def matrix_tree_suite(count: int = 10_000, seed: int = 0, max_n: int = 4, max_mult: int = 2) -> SuiteResult:
    """|det L_i| equals the number of arborescences toward i, every i."""
    res = SuiteResult(f"matrix tree theorem, {count} digraphs")
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(2, max_n + 1))
        G = random_small_digraph(rng, n, max_mult)
        for i in range(n):
            res.checked += 1
            det = abs(determinant(reduced_laplacian(G, i)))
            trees = spanning_trees_toward(G, i)
            if det != trees:
                res.fail(f"vertex {i} of {G.mult.tolist()}: det {det}, trees {trees}")
    return res


def _structural_sample(rng: np.random.Generator, max_n: int) -> Digraph:
    # every fourth sample is symmetric, hence balanced, so the eulerian
    # branch of the checks is exercised
    while True:
        n = int(rng.integers(2, max_n + 1))
        G = random_small_digraph(rng, n, 2)
        if rng.random() < 0.25:
            G = Digraph(n, G.mult + G.mult.T)
        if is_strongly_connected(G):
            return G


def structural_suite(count: int = 1000, seed: int = 0, max_n: int = 8) -> SuiteResult:
    """Identities relating S and the S_i on strongly connected digraphs."""
    res = SuiteResult(f"structural identities, {count} strongly connected digraphs")
    rng = np.random.default_rng(seed)
    for _ in range(count):
        G = _structural_sample(rng, max_n)
        tag = f"{G.mult.tolist()}"
        S = total_sandpile(G)
        Si = [vertex_sandpile(G, i) for i in range(G.n)]
        res.checked += 1
        if order(S) != reduce(math.gcd, (order(X) for X in Si)):
            res.fail(f"gcd identity: {tag}")
        if any(total_sandpile(G, drop_row=r) != S for r in range(G.n)):
            res.fail(f"row-drop invariance: {tag}")
        if total_sandpile_fast(G) != S:
            res.fail(f"fast route: {tag}")
        for i, X in enumerate(Si):
            if not surjection_exists(X, S):
                res.fail(f"no surjection S_{i} -> S: {tag}")
            if not cyclic_quotient_witness(X, S):
                res.fail(f"S not a cyclic quotient of S_{i}: {tag}")
        if G.is_balanced() and any(X != S for X in Si):
            res.fail(f"eulerian but S not isomorphic to every S_i: {tag}")
        if not check_eulerian_equivalences(G):
            res.fail(f"eulerian conditions disagree: {tag}")
        if not check_coeulerian_equivalences(G):
            res.fail(f"coeulerian conditions disagree: {tag}")
    return res


SUITES = {
    "groups": group_counting_suite,
    "quotients": quotient_suite,
    "smith": smith_suite,
    "matrix_tree": matrix_tree_suite,
    "structural": structural_suite,
}


def run_all(quick: bool = False, seed: int = 0, names=None) -> list[SuiteResult]:
    """Run the named suites (default all) in a fixed order."""
    if quick:
        runs = {
            "groups": lambda: group_counting_suite(16),
            "quotients": lambda: quotient_suite(8),
            "smith": lambda: smith_suite(100, seed),
            "matrix_tree": lambda: matrix_tree_suite(500, seed),
            "structural": lambda: structural_suite(100, seed),
        }
    else:
        runs = {
            "groups": group_counting_suite,
            "quotients": quotient_suite,
            "smith": lambda: smith_suite(seed=seed),
            "matrix_tree": lambda: matrix_tree_suite(seed=seed),
            "structural": lambda: structural_suite(seed=seed),
        }
    names = list(runs) if names is None else names
    unknown = set(names) - set(runs)
    if unknown:
        raise ValueError(f"unknown suites {sorted(unknown)}")
    return [runs[name]() for name in runs if name in names]

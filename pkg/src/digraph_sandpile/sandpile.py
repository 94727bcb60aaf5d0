"""Total and vertex sandpile groups of digraphs.

The total group is Z_0^n / L Z^n.  In the basis {e_j - e_last} of the
sum-zero lattice, L is the laplacian with its last row deleted (the deleted
row is minus the sum of the others), so the total group is the cokernel of
an (n-1) x n integer matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from sympy import factorint

from .abelian_groups import (
    TRIVIAL,
    AbelianGroup,
    is_cyclic,
    order,
    surjection_exists,
)
from .integer_smith import (
    IntMatrix,
    cokernel,
    determinant_multimodular,
    local_cokernel_partition,
    smith_normal_form,
)
from .random_digraph import Digraph, is_strongly_connected, laplacian_array

# stop collecting vertex determinants once their gcd is this small
_GCD_FACTOR_LIMIT = 10**12
_MAX_EXTRA_MINORS = 6


class ConsistencyError(RuntimeError):
    """A structural identity failed; this is a bug, never valid data."""


@dataclass(frozen=True)
class Infinite:
    """Marker for an infinite cokernel: torsion plus ``free_rank`` copies of Z."""

    free_rank: int
    torsion: AbelianGroup = TRIVIAL

    def __str__(self):
        return "infinite"

    def to_json(self) -> dict:
        return {"infinite": True, "free_rank": self.free_rank, "torsion": self.torsion.to_json()}


SandpileGroup = AbelianGroup | Infinite


def group_to_json(G: SandpileGroup) -> dict:
    return G.to_json()


def _cokernel_group(M) -> SandpileGroup:
    torsion, free_rank = cokernel(M)
    return Infinite(free_rank, torsion) if free_rank else torsion


def restricted_laplacian_array(G: Digraph, drop_row: int | None = None) -> np.ndarray:
    if G.n < 2:
        raise ValueError("need at least 2 vertices")
    drop_row = G.n - 1 if drop_row is None else drop_row
    if not 0 <= drop_row < G.n:
        raise IndexError(f"vertex {drop_row} out of range for n={G.n}")
    return np.delete(laplacian_array(G), drop_row, axis=0)


def restricted_laplacian(G: Digraph, drop_row: int | None = None) -> IntMatrix:
    """Laplacian with row ``drop_row`` (default: the last vertex) deleted."""
    return IntMatrix(restricted_laplacian_array(G, drop_row), cols=G.n)


def total_sandpile(G: Digraph, drop_row: int | None = None) -> SandpileGroup:
    """S(G) via the integral Smith normal form."""
    return _cokernel_group(restricted_laplacian(G, drop_row))


def vertex_sandpile(G: Digraph, i: int) -> SandpileGroup:
    """S_i(G) = Z^(n-1) / L_i Z^(n-1)."""
    if G.n < 2:
        raise ValueError("need at least 2 vertices")
    if not 0 <= i < G.n:
        raise IndexError(f"vertex {i} out of range for n={G.n}")
    L = np.delete(np.delete(laplacian_array(G), i, axis=0), i, axis=1)
    return _cokernel_group(IntMatrix(L, cols=G.n - 1))


# --- fast routes ----------------------------------------------------------


def _order_multiple(M: np.ndarray) -> int:
    # Maximal minors of M are, up to sign, the vertex determinants det(L_j),
    # so their gcd is |S|.  A few of them give a small multiple of |S|.
    n = M.shape[1]
    g = 0
    for j in range(n - 1, max(n - 2 - _MAX_EXTRA_MINORS, -1), -1):
        g = math.gcd(g, determinant_multimodular(np.delete(M, j, axis=1)))
        if g and g < _GCD_FACTOR_LIMIT and j <= n - 2:
            break
    return g


def total_sandpile_fast(G: Digraph) -> SandpileGroup:
    """S(G) from its Sylow parts computed over Z/p^v.

    For a strongly connected digraph, |S| divides g = gcd of a few vertex
    determinants, and S_p = coker(M tensor Z/p^v) for p^v exactly dividing
    g.  Other digraphs fall back to the integral route.
    """
    if not is_strongly_connected(G):
        return total_sandpile(G)
    M = restricted_laplacian_array(G)
    g = _order_multiple(M)
    if g == 0:
        return total_sandpile(G)
    if g == 1:
        return TRIVIAL
    return AbelianGroup(
        {int(p): local_cokernel_partition(M, int(p), int(v)) for p, v in factorint(g).items()}
    )


def sylow_fast(G: Digraph, p: int, depth: int) -> tuple[tuple[int, ...], bool]:
    """Partition of S(G)_p with parts tracked up to ``depth``.

    Works modulo p^(depth+1).  Returns (partition, overflow); when overflow
    is True some part exceeds ``depth`` and the partition is not exact.
    Only valid for strongly connected digraphs, whose total group is finite.
    """
    parts = local_cokernel_partition(restricted_laplacian_array(G), p, depth + 1)
    return parts, any(x > depth for x in parts)


def tensor_fast(G: Digraph, a: int) -> AbelianGroup:
    """S(G) tensor Z/a for strongly connected G (finite S)."""
    M = restricted_laplacian_array(G)
    return AbelianGroup(
        {int(p): local_cokernel_partition(M, int(p), int(v)) for p, v in factorint(a).items()}
    )


# --- profile and structural checks --------------------------------------


@dataclass(frozen=True)
class SandpileProfile:
    total: SandpileGroup
    vertex_groups: tuple[SandpileGroup, ...]
    strongly_connected: bool
    eulerian: bool
    coeulerian: bool

    def to_json(self) -> dict:
        return {
            "total": group_to_json(self.total),
            "vertex_groups": [group_to_json(S) for S in self.vertex_groups],
            "strongly_connected": self.strongly_connected,
            "eulerian": self.eulerian,
            "coeulerian": self.coeulerian,
        }


def profile(G: Digraph) -> SandpileProfile:
    """All sandpile data of G, with the structural identities asserted.

    ``eulerian`` means indegree equals outdegree at every vertex.  For
    strongly connected G the gcd identity |S| = gcd |S_i| and the existence
    of surjections S_i -> S are verified; a violation raises
    ConsistencyError.
    """
    total = total_sandpile(G)
    vertex_groups = tuple(vertex_sandpile(G, i) for i in range(G.n))
    sc = is_strongly_connected(G)
    if sc:
        if isinstance(total, Infinite) or any(isinstance(S, Infinite) for S in vertex_groups):
            raise ConsistencyError("strongly connected digraph with infinite sandpile group")
        gcd = reduce(math.gcd, (order(S) for S in vertex_groups))
        if order(total) != gcd:
            raise ConsistencyError(f"|S| = {order(total)} but gcd |S_i| = {gcd}")
        for i, S in enumerate(vertex_groups):
            if not surjection_exists(S, total):
                raise ConsistencyError(f"no surjection S_{i} -> S")
    return SandpileProfile(
        total=total,
        vertex_groups=vertex_groups,
        strongly_connected=sc,
        eulerian=G.is_balanced(),
        coeulerian=total == TRIVIAL,
    )


def _require_strongly_connected(G: Digraph) -> None:
    if not is_strongly_connected(G):
        raise ValueError("digraph is not strongly connected")


def eulerian_conditions(G: Digraph) -> dict[str, bool]:
    """Conditions equivalent to being eulerian, for strongly connected G.

    "S isomorphic to S_i for some i" is deliberately absent: it fails for
    edges 0->1, 1->0, 1->2, 2->0, where S and S_1 are both trivial but
    vertex 1 is unbalanced.
    """
    _require_strongly_connected(G)
    L = laplacian_array(G)
    # ker L = Z.1: L.1 = 0 and rank n-1; 1 is primitive, so the rational
    # kernel line meets Z^n in exactly Z.1
    kernel_is_ones = bool((L.sum(axis=1) == 0).all()) and smith_normal_form(IntMatrix(L)).rank == G.n - 1
    S = total_sandpile(G)
    Si = [vertex_sandpile(G, i) for i in range(G.n)]
    return {
        "kernel_is_ones": kernel_is_ones,
        "orders_equal": all(order(X) == order(S) for X in Si),
        "balanced": G.is_balanced(),
        "isomorphic_to_every_vertex_group": all(X == S for X in Si),
        "vertex_groups_isomorphic": all(X == Si[0] for X in Si),
    }


def check_eulerian_equivalences(G: Digraph) -> bool:
    """True iff the eulerian conditions are all true or all false."""
    return len(set(eulerian_conditions(G).values())) == 1


def coeulerian_conditions(G: Digraph) -> dict[str, bool]:
    _require_strongly_connected(G)
    n = G.n
    trivial = total_sandpile(G) == TRIVIAL
    # Z^n / L Z^n = Z + S, so Im L = Z_0^n iff the SNF of L is (1, ..., 1, 0)
    diag = smith_normal_form(IntMatrix(laplacian_array(G))).diagonal
    image_is_sum_zero = diag == (1,) * (n - 1) + (0,)
    return {
        "trivial": trivial,
        "image_is_sum_zero": image_is_sum_zero,
        "vertex_groups_cyclic": all(is_cyclic(vertex_sandpile(G, i)) for i in range(n)),
    }


def check_coeulerian_equivalences(G: Digraph) -> bool:
    """Trivial S agrees with Im L = Z_0^n, and trivial S forces cyclic S_i.

    The generator statements about the canonical elements of S_i are only
    checked in this weakened form, since those elements are not built.
    """
    c = coeulerian_conditions(G)
    agree = c["trivial"] == c["image_is_sum_zero"]
    return agree and (not c["trivial"] or c["vertex_groups_cyclic"])

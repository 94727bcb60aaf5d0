"""Brute-force oracles for small instances.

Everything here works on explicit element sets, independently of the
partition formulas in ``abelian_groups`` and the elimination in
``integer_smith``.  Intended for groups of order at most a few dozen and
matrices up to about 5 x 5.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache, reduce

from .abelian_groups import AbelianGroup, invariant_factors

Element = tuple[int, ...]


class ExplicitGroup:
    """Z/d_1 x ... x Z/d_r with elements listed as tuples."""

    def __init__(self, moduli):
        self.moduli = tuple(int(d) for d in moduli if d > 1)
        self.elements = list(itertools.product(*(range(d) for d in self.moduli)))
        self.zero = tuple(0 for _ in self.moduli)

    @classmethod
    def of(cls, G: AbelianGroup) -> ExplicitGroup:
        return cls(invariant_factors(G))

    def __len__(self):
        return len(self.elements)

    def add(self, x: Element, y: Element) -> Element:
        return tuple((a + b) % d for a, b, d in zip(x, y, self.moduli))

    def mul(self, m: int, x: Element) -> Element:
        return tuple((m * a) % d for a, d in zip(x, self.moduli))

    def span(self, gens) -> frozenset[Element]:
        seen = {self.zero}
        frontier = [self.zero]
        while frontier:
            x = frontier.pop()
            for g in gens:
                y = self.add(x, g)
                if y not in seen:
                    seen.add(y)
                    frontier.append(y)
        return frozenset(seen)

    def subgroups(self) -> list[frozenset[Element]]:
        """All subgroups, each as a set of elements."""
        found = {frozenset([self.zero])}
        layer = list(found)
        while layer:
            nxt = []
            for S in layer:
                for g in self.elements:
                    if g not in S:
                        T = self.span(list(S) + [g]) if len(S) < 4 else self._extend(S, g)
                        if T not in found:
                            found.add(T)
                            nxt.append(T)
            layer = nxt
        return sorted(found, key=len)

    def _extend(self, S, g) -> frozenset[Element]:
        # S + <g> without re-spanning all of S
        cyc = self.span([g])
        return frozenset(self.add(s, c) for s in S for c in cyc)


def _killed(G: ExplicitGroup, elements, m: int) -> int:
    return sum(1 for x in elements if G.mul(m, x) == G.zero)


def hom_count_brute(H: AbelianGroup, G: AbelianGroup) -> int:
    # a hom from Z/d_1 x ... x Z/d_r sends generator i to any element killed by d_i
    EG = ExplicitGroup.of(G)
    return math.prod(_killed(EG, EG.elements, d) for d in invariant_factors(H))


@lru_cache(maxsize=None)
def _lattice(G: AbelianGroup):
    EG = ExplicitGroup.of(G)
    subs = EG.subgroups()
    full = frozenset(EG.elements)
    # Moebius function mu(K, G) on the subgroup lattice
    mu = {full: 1}
    for K in sorted(subs, key=len, reverse=True):
        if K == full:
            continue
        mu[K] = -sum(mu[J] for J in mu if K < J)
    return EG, subs, mu


def sur_count_brute(H: AbelianGroup, G: AbelianGroup) -> int:
    """#Sur(H, G) = sum over subgroups K of G of mu(K, G) #Hom(H, K)."""
    EG, subs, mu = _lattice(G)
    dH = invariant_factors(H)
    total = 0
    for K in subs:
        if mu[K]:
            total += mu[K] * math.prod(_killed(EG, K, d) for d in dH)
    return total


def aut_order_brute(G: AbelianGroup) -> int:
    """|Aut G|: endomorphisms that are onto, i.e. generator images spanning G."""
    return sur_count_brute(G, G)


def _torsion_profile(orders: dict[int, int]) -> tuple:
    return tuple(sorted(orders.items()))


def _quotient_profile(G: ExplicitGroup, K: frozenset, ms) -> tuple:
    # |(G/K)[m]| = #{x in G : m x in K} / |K|
    return _torsion_profile({m: sum(1 for x in G.elements if G.mul(m, x) in K) // len(K) for m in ms})


def _group_profile(G: AbelianGroup, ms) -> tuple:
    EG = ExplicitGroup.of(G)
    return _torsion_profile({m: _killed(EG, EG.elements, m) for m in ms})


def _test_moduli(H: AbelianGroup, G: AbelianGroup) -> list[int]:
    # groups whose exponents divide L are told apart by the sizes of their
    # m-torsion for m dividing L
    L = reduce(math.lcm, invariant_factors(H) + invariant_factors(G), 1)
    return [m for m in range(1, L + 1) if L % m == 0]


def quotient_exists_brute(H: AbelianGroup, G: AbelianGroup) -> bool:
    """Some subgroup K of H has H/K isomorphic to G."""
    EH = ExplicitGroup.of(H)
    ms = _test_moduli(H, G)
    target = _group_profile(G, ms)
    if len(EH) % max(1, math.prod(invariant_factors(G))):
        return False
    return any(_quotient_profile(EH, K, ms) == target for K in EH.subgroups())


def cyclic_quotient_brute(H: AbelianGroup, G: AbelianGroup) -> bool:
    """Some cyclic subgroup C of H has H/C isomorphic to G."""
    EH = ExplicitGroup.of(H)
    ms = _test_moduli(H, G)
    target = _group_profile(G, ms)
    cyclics = {EH.span([h]) for h in EH.elements}
    return any(_quotient_profile(EH, C, ms) == target for C in cyclics)


# --- determinantal divisors ---------------------------------------------


def _det_laplace(rows) -> int:
    n = len(rows)
    if n == 0:
        return 1
    if n == 1:
        return rows[0][0]
    total = 0
    for j in range(n):
        if rows[0][j]:
            minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
            total += (-1) ** j * rows[0][j] * _det_laplace(minor)
    return total


def determinantal_divisors(M) -> list[int]:
    """d_k = gcd of all k x k minors, for k = 1 .. min(shape); zeros included."""
    rows = [list(map(int, r)) for r in M]
    m = len(rows)
    n = len(rows[0]) if rows else 0
    out = []
    for k in range(1, min(m, n) + 1):
        g = 0
        for I in itertools.combinations(range(m), k):
            for J in itertools.combinations(range(n), k):
                g = math.gcd(g, _det_laplace([[rows[i][j] for j in J] for i in I]))
        out.append(g)
    return out


def smith_diagonal_by_minors(M) -> tuple[int, ...]:
    """Smith diagonal s_k = d_k / d_(k-1), with s_k = 0 once d_k = 0."""
    diag = []
    prev = 1
    for d in determinantal_divisors(M):
        if d == 0:
            diag.append(0)
            prev = 0
            continue
        diag.append(d // prev)
        prev = d
    return tuple(diag)

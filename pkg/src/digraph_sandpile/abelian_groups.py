"""Finite abelian groups stored as one partition of p-exponents per prime.

``AbelianGroup({2: (2, 1), 3: (1,)})`` is Z/4 x Z/2 x Z/3.  Every counting
function here works prime by prime; the counts are multiplicative over
coprime Sylow parts.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from math import prod

from sympy import factorint, isprime

Partition = tuple[int, ...]


class AbelianGroup:
    """Isomorphism class of a finite abelian group.

    Canonical form: primes sorted, partitions non-increasing, no empty
    partitions.  Equality and hashing are by canonical form, so two values
    compare equal exactly when the groups are isomorphic.
    """

    __slots__ = ("_items",)

    def __init__(self, sylow: Mapping[int, Iterable[int]] | None = None):
        items = []
        for p, parts in (sylow or {}).items():
            p = int(p)
            if not isprime(p):
                raise ValueError(f"{p} is not prime")
            parts = tuple(sorted((int(x) for x in parts), reverse=True))
            if parts and parts[-1] <= 0:
                raise ValueError(f"partition at {p} has non-positive parts: {parts}")
            if parts:
                items.append((p, parts))
        self._items = tuple(sorted(items))

    @property
    def sylow(self) -> dict[int, Partition]:
        return dict(self._items)

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self._items)

    def partition(self, p: int) -> Partition:
        return self.sylow.get(p, ())

    def __eq__(self, other):
        if not isinstance(other, AbelianGroup):
            return NotImplemented
        return self._items == other._items

    def __hash__(self):
        return hash(self._items)

    def __repr__(self):
        return f"AbelianGroup({self.sylow!r})"

    def __str__(self):
        factors = invariant_factors(self)
        if not factors:
            return "1"
        return " x ".join(f"C{d}" for d in factors)

    def __bool__(self):
        # truthy iff nontrivial
        return bool(self._items)

    def to_json(self) -> dict:
        return {"sylow": {str(p): list(parts) for p, parts in self._items}}

    @classmethod
    def from_json(cls, obj: Mapping) -> AbelianGroup:
        return cls({int(p): parts for p, parts in obj["sylow"].items()})


TRIVIAL = AbelianGroup()


def _check_prime(p: int) -> None:
    if not isprime(p):
        raise ValueError(f"{p} is not prime")


def valuation(a: int, p: int) -> int:
    """Exponent of p in the nonzero integer a."""
    if a == 0:
        raise ValueError("valuation of 0 is undefined")
    v = 0
    while a % p == 0:
        a //= p
        v += 1
    return v


def from_cyclic_orders(orders: Iterable[int]) -> AbelianGroup:
    """The direct sum of Z/dZ over ``orders``, e.g. SNF diagonal entries.

    A zero entry would be a free factor Z, which is not representable here.
    """
    sylow: dict[int, list[int]] = {}
    for d in orders:
        d = int(d)
        if d <= 0:
            raise ValueError(f"cyclic orders must be positive, got {d}")
        for p, e in factorint(d).items():
            sylow.setdefault(int(p), []).append(int(e))
    return AbelianGroup(sylow)


def from_invariant_factors(factors: Iterable[int]) -> AbelianGroup:
    return from_cyclic_orders(factors)


def invariant_factors(G: AbelianGroup) -> tuple[int, ...]:
    """Invariant factors d_1 | d_2 | ... | d_r, all > 1, ascending."""
    sylow = G.sylow
    if not sylow:
        return ()
    r = max(len(parts) for parts in sylow.values())
    factors = [1] * r
    for p, parts in sylow.items():
        # largest part goes into the last (largest) factor
        for k, e in enumerate(parts):
            factors[r - 1 - k] *= p**e
    return tuple(factors)


def order(G: AbelianGroup) -> int:
    return prod(p ** sum(parts) for p, parts in G.sylow.items())


def exponent(G: AbelianGroup) -> int:
    return prod(p ** parts[0] for p, parts in G.sylow.items())


def rank(G: AbelianGroup, p: int) -> int:
    """p-rank: number of cyclic factors in the p-Sylow part."""
    return len(G.partition(p))


def sylow_restrict(G: AbelianGroup, primes: Iterable[int]) -> AbelianGroup:
    keep = set()
    for p in primes:
        _check_prime(p)
        keep.add(p)
    return AbelianGroup({p: parts for p, parts in G.sylow.items() if p in keep})


def direct_sum(*groups: AbelianGroup) -> AbelianGroup:
    sylow: dict[int, list[int]] = {}
    for G in groups:
        for p, parts in G.sylow.items():
            sylow.setdefault(p, []).extend(parts)
    return AbelianGroup(sylow)


def tensor_mod(G: AbelianGroup, a: int) -> AbelianGroup:
    """G tensor Z/aZ."""
    if a <= 0:
        raise ValueError(f"modulus must be positive, got {a}")
    sylow = {}
    for p, v in factorint(a).items():
        parts = G.partition(p)
        if parts:
            sylow[p] = [min(x, v) for x in parts]
    return AbelianGroup(sylow)


def _aut_order_p(p: int, parts: Partition) -> int:
    # Hillar-Rhea: with exponents e_1 <= ... <= e_r (1-based),
    # d_k = max{l : e_l = e_k}, c_k = min{l : e_l = e_k}.
    e = sorted(parts)
    r = len(e)
    d = [max(l for l in range(1, r + 1) if e[l - 1] == ek) for ek in e]
    c = [min(l for l in range(1, r + 1) if e[l - 1] == ek) for ek in e]
    result = 1
    for k in range(1, r + 1):
        result *= p ** d[k - 1] - p ** (k - 1)
    for j in range(r):
        result *= p ** (e[j] * (r - d[j]))
    for i in range(r):
        result *= p ** ((e[i] - 1) * (r - c[i] + 1))
    return result


def aut_order(G: AbelianGroup) -> int:
    """|Aut(G)|, the product of the per-prime Hillar-Rhea counts."""
    return prod(_aut_order_p(p, parts) for p, parts in G.sylow.items())


def _hom_exponent(lam: Partition, mu: Partition) -> int:
    return sum(min(x, y) for x in lam for y in mu)


def hom_count(H: AbelianGroup, G: AbelianGroup) -> int:
    """|Hom(H, G)|."""
    return prod(
        p ** _hom_exponent(H.partition(p), mu) for p, mu in G.sylow.items()
    )


def _sur_count_p(p: int, lam: Partition, mu: Partition) -> int:
    # A hom f: H -> G onto a p-group is onto iff H -> G/pG is onto.  The
    # reduction Hom(H, G) -> Hom(H, G/pG) is a group hom whose image is the
    # set of matrices with row j supported on {i : lam_i >= mu_j}.  Those
    # supports are nested, so full-rank matrices are counted row by row.
    c = [sum(1 for x in lam if x >= y) for y in mu]
    full_rank = 1
    for j, cj in enumerate(c):
        full_rank *= p**cj - p**j
        if full_rank == 0:
            return 0
    return p ** (_hom_exponent(lam, mu) - sum(c)) * full_rank


def sur_count(H: AbelianGroup, G: AbelianGroup) -> int:
    """|Sur(H, G)|; zero when no surjection exists."""
    result = 1
    for p, mu in G.sylow.items():
        result *= _sur_count_p(p, H.partition(p), mu)
        if result == 0:
            break
    return result


def _pad(parts: Partition, length: int) -> list[int]:
    return list(parts) + [0] * (length - len(parts))


def surjection_exists(H: AbelianGroup, G: AbelianGroup) -> bool:
    """True iff G is a quotient of H (per prime, mu_k <= lambda_k)."""
    for p, mu in G.sylow.items():
        lam = H.partition(p)
        if len(mu) > len(lam):
            return False
        if any(y > x for x, y in zip(lam, mu)):
            return False
    return True


def cyclic_quotient_witness(H: AbelianGroup, G: AbelianGroup) -> bool:
    """True iff H has a cyclic subgroup C with H/C isomorphic to G.

    Per prime the partitions must interlace,
    lambda_1 >= mu_1 >= lambda_2 >= mu_2 >= ...
    """
    for p in set(H.primes) | set(G.primes):
        lam, mu = H.partition(p), G.partition(p)
        n = max(len(lam), len(mu)) + 1
        lam, mu = _pad(lam, n + 1), _pad(mu, n)
        for k in range(n):
            if not lam[k] >= mu[k] >= lam[k + 1]:
                return False
    return True


def is_cyclic(G: AbelianGroup) -> bool:
    return all(len(parts) <= 1 for parts in G.sylow.values())


def partitions_of(m: int, largest: int | None = None) -> Iterable[Partition]:
    """Partitions of m in reverse lexicographic order."""
    if largest is None:
        largest = m
    if m == 0:
        yield ()
        return
    for first in range(min(m, largest), 0, -1):
        for rest in partitions_of(m - first, first):
            yield (first,) + rest


def enumerate_p_groups(p: int, max_order_exponent: int) -> list[Partition]:
    """All p-group types of order at most p**max_order_exponent."""
    _check_prime(p)
    if max_order_exponent < 0:
        raise ValueError("max_order_exponent must be >= 0")
    return [lam for m in range(max_order_exponent + 1) for lam in partitions_of(m)]


def enumerate_groups(primes: Iterable[int], max_order_exponent: int) -> list[AbelianGroup]:
    """All groups supported on ``primes`` with each Sylow order <= p**e."""
    primes = sorted(set(primes))
    per_prime = [
        [AbelianGroup({p: lam}) for lam in enumerate_p_groups(p, max_order_exponent)]
        for p in primes
    ]
    groups = [TRIVIAL]
    for options in per_prime:
        groups = [direct_sum(G, X) for G in groups for X in options]
    return groups


def parse_group(text: str) -> AbelianGroup:
    """Parse ``"2,4"``, ``"C2 x C4"`` (cyclic orders) or ``"1"`` into a group."""
    text = text.replace("C", "").replace("x", ",").replace(" ", "")
    if not text:
        return TRIVIAL
    return from_cyclic_orders(int(tok) for tok in text.split(","))


"""Cohen-Lenstra constants evaluated to a certified tolerance.

Every constant is computed as an interval [lo, hi] that provably contains
the true value; ``value`` is the midpoint and ``tail_bound`` the half-width.
Arithmetic runs at ``WORKING_DPS`` decimal digits, far below every
truncation error, and a tiny rounding slack is added to each bound.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass, field

import mpmath
from mpmath import mpf
from sympy import primerange

from .abelian_groups import (
    AbelianGroup,
    aut_order,
    enumerate_groups,
    enumerate_p_groups,
    order,
    sur_count,
)

WORKING_DPS = 40
# covers accumulated rounding at WORKING_DPS
_ROUNDING_SLACK = mpf(10) ** -30


@dataclass(frozen=True)
class TruncatedConstant:
    value: mpf
    tail_bound: mpf
    truncation_params: dict = field(default_factory=dict)

    @classmethod
    def from_interval(cls, lo, hi, **params) -> TruncatedConstant:
        with mpmath.workdps(WORKING_DPS):
            lo, hi = mpf(lo) - _ROUNDING_SLACK, mpf(hi) + _ROUNDING_SLACK
            return cls((lo + hi) / 2, (hi - lo) / 2, params)

    @property
    def lo(self) -> mpf:
        with mpmath.workdps(WORKING_DPS):
            return self.value - self.tail_bound

    @property
    def hi(self) -> mpf:
        with mpmath.workdps(WORKING_DPS):
            return self.value + self.tail_bound

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __float__(self):
        return float(self.value)

    def to_json(self, digits: int = 20) -> dict:
        return {
            "value": mpmath.nstr(self.value, digits, strip_zeros=False),
            "tail_bound": mpmath.nstr(self.tail_bound, 3),
            "truncation_params": {str(k): v for k, v in self.truncation_params.items()},
        }


def _check_tol(tol) -> None:
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")


def _mul(*factors: TruncatedConstant, scale=1, **params) -> TruncatedConstant:
    # all factors are positive intervals
    lo = hi = mpf(scale)
    for f in factors:
        lo *= f.lo
        hi *= f.hi
    return TruncatedConstant.from_interval(lo, hi, **params)


def q_p(p: int, tol: float) -> TruncatedConstant:
    """Q_p = prod_{k>=2} (1 - p^-k).

    The partial product through K brackets Q_p from above; the tail product
    is at least 1 - sum_{k>K} p^-k = 1 - p^-K / (p - 1).
    """
    _check_tol(tol)
    with mpmath.workdps(WORKING_DPS):
        p_ = mpf(p)
        K = 2
        while p_ ** -K / (p - 1) > tol:
            K += 1
        partial = mpf(1)
        for k in range(2, K + 1):
            partial *= 1 - p_**-k
        return TruncatedConstant.from_interval(partial * (1 - p_**-K / (p - 1)), partial, p=p, K=K)


def zeta_bracket(k: int, N: int) -> tuple[mpf, mpf]:
    """Interval for zeta(k): partial sum to N plus integral bounds on the tail.

    f(x) = x^-k is convex, so each trapezoid over [m, m+1] overestimates the
    integral and each midpoint rectangle underestimates it.  Hence
    sum_{m>N} f(m) lies between int_{N+1}^oo f + f(N+1)/2 and
    int_{N+1/2}^oo f, an interval of width O(N^-(k+1)).
    """
    if k < 2 or N < 1:
        raise ValueError("need k >= 2 and N >= 1")
    with mpmath.workdps(WORKING_DPS):
        s = mpmath.fsum(mpf(m) ** -k for m in range(1, N + 1))
        a = mpf(N + 1)
        return (
            s + a ** (1 - k) / (k - 1) + a**-k / 2 - _ROUNDING_SLACK,
            s + (a - mpf(1) / 2) ** (1 - k) / (k - 1) + _ROUNDING_SLACK,
        )


def q_total(tol: float) -> TruncatedConstant:
    """Q = 1 / prod_{k>=2} zeta(k).

    zeta(k) - 1 <= 2^-k + 2^(1-k)/(k-1) <= 3 * 2^-k, so the factors with
    k > K multiply to at most exp(3 * 2^-K); K makes that tol/4.  Each
    zeta(k), k <= K, is bracketed to relative width tol/(4K).
    """
    _check_tol(tol)
    with mpmath.workdps(WORKING_DPS):
        K = max(2, math.ceil(math.log2(12 / tol)))
        target = mpf(tol) / (4 * K)
        lo = hi = mpf(1)
        cutoffs = {}
        for k in range(2, K + 1):
            N = max(1, math.ceil((1 / target) ** (1 / (k + 1))))
            z_lo, z_hi = zeta_bracket(k, N)
            while z_hi - z_lo > target:
                N *= 2
                z_lo, z_hi = zeta_bracket(k, N)
            lo *= z_lo
            hi *= z_hi
            cutoffs[k] = N
        hi *= mpmath.exp(3 * mpf(2) ** -K)
        return TruncatedConstant.from_interval(
            1 / hi, 1 / lo, method="zeta_product", K=K, zeta_sum_cutoffs=cutoffs
        )


def q_total_by_primes(X: int = 10**4, tol: float = 1e-9) -> TruncatedConstant:
    """Q as prod_{p<=X} Q_p, the cross-method check for ``q_total``.

    1 - Q_p <= 1/(p(p-1)) and sum_{m>X} 1/(m(m-1)) = 1/X, so the primes
    above X change the product by a factor in [1 - 1/X, 1].
    """
    _check_tol(tol)
    primes = list(primerange(2, X + 1))
    with mpmath.workdps(WORKING_DPS):
        per = tol / (4 * len(primes))
        prod_ = _mul(*(q_p(p, per) for p in primes))
        return TruncatedConstant.from_interval(
            prod_.lo * (1 - mpf(1) / X), prod_.hi, method="prime_product", prime_cutoff=X
        )


def _check_support(G: AbelianGroup, P: Iterable[int]) -> frozenset[int]:
    P = frozenset(int(p) for p in P)
    outside = set(G.primes) - P
    if outside:
        raise ValueError(f"primes {sorted(outside)} divide |G| but are not in P")
    return P


def prob_Y(G: AbelianGroup, P: Iterable[int], tol: float) -> TruncatedConstant:
    """P(Y_P = G) = prod_{p in P} Q_p / (|G| |Aut G|)."""
    _check_tol(tol)
    P = _check_support(G, P)
    with mpmath.workdps(WORKING_DPS):
        per = tol / (2 * max(1, len(P)))
        factors = [q_p(p, per) for p in sorted(P)]
        return _mul(*factors, scale=mpf(1) / (order(G) * aut_order(G)), primes=sorted(P))


def _cyclic_factor(p: int) -> mpf:
    return 1 + mpf(p) / ((p - 1) * (p * p - 1))


def prob_cyclic_p(p: int, tol: float) -> TruncatedConstant:
    """P(Y_p cyclic) = Q_p (1 + p / ((p-1)(p^2-1)))."""
    _check_tol(tol)
    with mpmath.workdps(WORKING_DPS):
        f = _cyclic_factor(p)
        return _mul(q_p(p, tol / 2), scale=f, p=p)


def _cyclic_tail(X: int) -> mpf:
    # Using Q_p >= 1 - 1/(p(p-1)):
    #   1 - c_p <= 1/(p (p-1)^3 (p+1)) <= (p-1)^-5,
    # and sum_{j>=X} j^-5 <= X^-5 + X^-4 / 4 bounds the primes above X.
    return mpf(X) ** -5 + mpf(X) ** -4 / 4


def cyclic_constant(tol: float) -> TruncatedConstant:
    """prod_p P(Y_p cyclic), the limit bound for cyclic sandpile groups.

    Each factor is at most 1 (it is a probability), and the primes above
    the cutoff X lower the product by a factor of at least 1 - tail(X).
    """
    _check_tol(tol)
    with mpmath.workdps(WORKING_DPS):
        X = 3
        while _cyclic_tail(X) > tol / 4:
            X += 1
        primes = list(primerange(2, X + 1))
        prod_ = _mul(*(prob_cyclic_p(p, tol / (4 * len(primes))) for p in primes))
        return TruncatedConstant.from_interval(
            prod_.lo * (1 - _cyclic_tail(X)), prod_.hi, prime_cutoff=X
        )


def cyclic_series(p: int, max_exponent: int, tol: float = 1e-15) -> mpf:
    """sum_{k<=max_exponent} P(Y_p = Z/p^k), the explicit cyclic-group sum."""
    with mpmath.workdps(WORKING_DPS):
        Q = q_p(p, tol).value
        return mpmath.fsum(
            Q / (order(G) * aut_order(G))
            for G in (AbelianGroup({p: (k,)} if k else {}) for k in range(max_exponent + 1))
        )


def check_normalization(p: int, max_order_exponent: int, tol: float = 1e-20) -> mpf:
    """Total P(Y_p = G) over p-groups of order at most p**e."""
    with mpmath.workdps(WORKING_DPS):
        Q = q_p(p, tol).value
        return mpmath.fsum(
            Q / (order(G) * aut_order(G))
            for G in (AbelianGroup({p: lam}) for lam in enumerate_p_groups(p, max_order_exponent))
        )


def moment_identity_check(
    G: AbelianGroup, P: Iterable[int], max_order_exponent: int, tol: float = 1e-20
) -> mpf:
    """Truncated E #Sur(Y_P, G); tends to 1/|G| as the exponent grows."""
    P = _check_support(G, P)
    with mpmath.workdps(WORKING_DPS):
        Q = mpmath.fprod(q_p(p, tol).value for p in sorted(P))
        return mpmath.fsum(
            Q * sur_count(H, G) / (order(H) * aut_order(H))
            for H in enumerate_groups(P, max_order_exponent)
        )


def constants_table(tol: float, primes: Iterable[int] = (2, 3, 5)) -> dict:
    """The JSON payload of the ``constants`` command."""
    return {
        "Q": q_total(tol).to_json(),
        "Q_p": {str(p): q_p(p, tol).to_json() for p in primes},
        "cyclic_constant": cyclic_constant(tol).to_json(),
        "tol": repr(float(tol)),
    }

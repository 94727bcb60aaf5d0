import math
import time

import mpmath
import pytest
from sympy import primerange

from digraph_sandpile.abelian_groups import TRIVIAL, AbelianGroup, from_cyclic_orders
from digraph_sandpile.cohen_lenstra import (
    TruncatedConstant,
    check_normalization,
    constants_table,
    cyclic_constant,
    cyclic_series,
    moment_identity_check,
    prob_cyclic_p,
    prob_Y,
    q_p,
    q_total,
    q_total_by_primes,
    zeta_bracket,
)

Z2 = AbelianGroup({2: (1,)})
V4 = AbelianGroup({2: (1, 1)})


def _q2_direct():
    return math.prod(1 - 2.0**-k for k in range(2, 41))


def test_q_p_two():
    assert abs(float(q_p(2, 1e-12)) - _q2_direct()) < 1e-7
    assert abs(float(q_p(2, 1e-9)) - 0.5775762) < 1e-7


def test_q_p_large_prime():
    v = float(q_p(1009, 1e-12))
    assert 1 - 2 * 1009**-2 < v < 1 - 0.99 * 1009**-2


def test_q_p_monotone_in_p():
    vals = [float(q_p(p, 1e-12)) for p in primerange(2, 60)]
    assert vals == sorted(vals)


def test_q_p_bracket_and_params():
    c = q_p(3, 1e-6)
    assert c.tail_bound <= 1e-6
    assert c.contains(q_p(3, 1e-15).value)
    assert c.truncation_params["p"] == 3
    with pytest.raises(ValueError):
        q_p(2, 0)


def test_zeta_bracket_contains_closed_form():
    lo, hi = zeta_bracket(2, 1000)
    assert lo <= mpmath.pi**2 / 6 <= hi
    assert hi - lo < 1e-8
    lo4, hi4 = zeta_bracket(4, 10)
    assert lo4 <= mpmath.pi**4 / 90 <= hi4
    with pytest.raises(ValueError):
        zeta_bracket(1, 10)


def test_q_total_value_and_speed():
    t0 = time.perf_counter()
    c = q_total(1e-6)
    assert time.perf_counter() - t0 < 1
    assert abs(float(c) - 0.4357571) < 1e-6
    assert c.tail_bound <= 1e-6


def test_q_total_against_library_zeta():
    with mpmath.workdps(30):
        oracle = 1 / mpmath.nprod(lambda k: mpmath.zeta(k), [2, mpmath.inf])
    assert q_total(1e-10).contains(oracle)


def test_q_total_cross_method():
    a = q_total(1e-9)
    b = q_total_by_primes(10**4, 1e-9)
    assert abs(a.value - b.value) <= a.tail_bound + b.tail_bound


def test_tighter_tolerance_stays_inside_bracket():
    for f in (q_total, cyclic_constant, lambda t: q_p(5, t)):
        wide, narrow = f(1e-6), f(1e-7)
        assert wide.contains(narrow.value)
        assert narrow.tail_bound <= wide.tail_bound


def test_prob_y_examples():
    q2 = q_p(2, 1e-15).value
    assert abs(prob_Y(TRIVIAL, {2}, 1e-12).value - q2) < 1e-12
    assert abs(float(prob_Y(Z2, {2}, 1e-12)) - 0.2887881) < 1e-7
    assert abs(float(prob_Y(V4, {2}, 1e-12)) - 0.0240657) < 1e-7
    with pytest.raises(ValueError):
        prob_Y(from_cyclic_orders([3]), {2}, 1e-6)


def test_prob_cyclic_examples():
    v = prob_cyclic_p(2, 1e-12)
    assert abs(float(v) - 0.9626270) < 1e-7
    assert abs(cyclic_series(2, 20) - v.value) < 1e-5
    assert float(prob_cyclic_p(997, 1e-9)) > 0.999
    # the gap below 1 is about 1e-18 here, so a tight bracket is needed to see it
    assert prob_cyclic_p(997, 1e-20).hi < 1


def test_cyclic_series_converges_to_closed_form():
    for p in (2, 3, 5):
        target = prob_cyclic_p(p, 1e-15).value
        errs = [abs(cyclic_series(p, e) - target) for e in (2, 5, 10, 20)]
        assert errs == sorted(errs, reverse=True)
        assert errs[-1] < 1e-10


def test_cyclic_constant():
    c = cyclic_constant(1e-6)
    assert abs(float(c) - 0.9603461) < 1e-6
    assert c.tail_bound <= 1e-6
    finite = math.prod(float(prob_cyclic_p(p, 1e-12)) for p in primerange(2, 100))
    assert float(c) < finite
    assert float(c) > float(q_total(1e-6))


def test_normalization():
    for p in (2, 3, 5):
        sums = [check_normalization(p, e) for e in range(9)]
        assert all(a <= b for a, b in zip(sums, sums[1:]))
        assert sums[-1] <= 1 + 1e-12
    assert abs(check_normalization(2, 0) - 0.5776) < 1e-4
    # regression anchors, frozen after the first evaluation
    assert abs(check_normalization(2, 6) - 0.99983833) < 1e-8
    assert abs(check_normalization(2, 8) - 0.99998984) < 1e-8


def test_moment_identity():
    assert abs(moment_identity_check(Z2, {2}, 8) - 0.5) < 1e-3
    assert abs(moment_identity_check(V4, {2}, 8) - 0.25) < 1e-2
    assert abs(moment_identity_check(Z2, {2}, 8) - 0.4999797) < 1e-7
    for G, p in ((Z2, 2), (from_cyclic_orders([3]), 3), (V4, 2)):
        target = 1 / (p ** sum(G.partition(p)))
        errs = [abs(moment_identity_check(G, {p}, e) - target) for e in (3, 5, 7)]
        assert errs == sorted(errs, reverse=True)


def test_moment_identity_trivial_is_normalization():
    assert abs(moment_identity_check(TRIVIAL, {2}, 6) - check_normalization(2, 6)) < 1e-25


def test_truncated_constant_json():
    c = TruncatedConstant.from_interval(mpmath.mpf(1), mpmath.mpf(3), K=4)
    assert float(c) == 2 and abs(c.tail_bound - 1) < 1e-20
    j = c.to_json()
    assert j["value"].startswith("2.0000") and j["truncation_params"] == {"K": 4}


def test_constants_table_shape():
    t = constants_table(1e-6, primes=(2, 3))
    assert set(t) == {"Q", "Q_p", "cyclic_constant", "tol"}
    assert set(t["Q_p"]) == {"2", "3"}

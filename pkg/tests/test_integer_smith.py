import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from digraph_sandpile.abelian_groups import TRIVIAL, AbelianGroup, direct_sum, from_cyclic_orders, tensor_mod
from digraph_sandpile.integer_smith import (
    IntMatrix,
    cokernel,
    cokernel_mod,
    determinant,
    determinant_multimodular,
    local_cokernel_partition,
    smith_normal_form,
)
from digraph_sandpile.oracles import ExplicitGroup, smith_diagonal_by_minors

from .strategies import int_matrices


def test_snf_examples():
    assert smith_normal_form(IntMatrix.identity(3)).diagonal == (1, 1, 1)
    assert smith_normal_form([[2, 4], [6, 8]]).diagonal == (2, 4)
    assert smith_normal_form([[2, 0], [0, 3]]).diagonal == (1, 6)


def test_snf_empty_and_zero():
    assert smith_normal_form(IntMatrix([], cols=0)).diagonal == ()
    assert smith_normal_form(IntMatrix([], cols=3)).diagonal == ()
    snf = smith_normal_form(IntMatrix.zeros(2, 3))
    assert snf.diagonal == (0, 0) and snf.rank == 0


def test_snf_json():
    snf = smith_normal_form([[2, 0], [0, 3]])
    assert snf.to_json() == {"diagonal": ["1", "6"], "free_rank": 0}


def test_intmatrix_json_is_decimal_strings():
    big = 10**30
    M = IntMatrix([[big, -1]])
    assert M.to_json() == [[str(big), "-1"]]
    assert IntMatrix.from_json(M.to_json()) == M


def test_cokernel_examples():
    assert cokernel(IntMatrix.zeros(2, 2)) == (TRIVIAL, 2)
    assert cokernel([[2, 0], [0, 3]]) == (from_cyclic_orders([6]), 0)
    assert cokernel([[1, -1], [-1, 1]]) == (TRIVIAL, 1)


def test_cokernel_mod_examples():
    assert cokernel_mod([[5, 7], [1, 2]], 1) == TRIVIAL
    assert cokernel_mod([[2]], 4) == AbelianGroup({2: (1,)})
    assert cokernel_mod([[0]], 6) == from_cyclic_orders([6])
    with pytest.raises(ValueError):
        cokernel_mod([[1]], 0)


def test_cokernel_mod_by_enumeration():
    # Z/4 / 2 Z/4 has two elements
    E = ExplicitGroup([4])
    image = {E.mul(2, x) for x in E.elements}
    assert len(E.elements) // len(image) == 2


def test_determinant_examples():
    assert determinant([[2, -1], [-1, 2]]) == 3
    assert determinant(IntMatrix.identity(4)) == 1
    assert determinant([[1, 1], [1, 1]]) == 0
    assert determinant(IntMatrix([], cols=0)) == 1
    with pytest.raises(ValueError):
        determinant([[1, 2, 3]])


def test_snf_transforms_big_entries():
    M = [[10**20 + 3, 7, 0], [14, 10**18, 5], [0, 35, 21]]
    snf = smith_normal_form(M, want_transforms=True)
    assert snf.U @ IntMatrix(M) @ snf.V == snf.diagonal_matrix()
    assert abs(determinant(snf.U)) == 1 and abs(determinant(snf.V)) == 1


@given(int_matrices())
@settings(max_examples=300)
def test_snf_matches_minor_gcds(rows):
    assert smith_normal_form(rows).diagonal == smith_diagonal_by_minors(rows)


@given(int_matrices())
@settings(max_examples=200)
def test_transform_soundness(rows):
    M = IntMatrix(rows)
    snf = smith_normal_form(M, want_transforms=True)
    assert snf.U @ M @ snf.V == snf.diagonal_matrix()
    assert abs(determinant(snf.U)) == 1
    assert abs(determinant(snf.V)) == 1
    d = [x for x in snf.diagonal if x]
    assert all(b % a == 0 for a, b in zip(d, d[1:]))
    assert all(x > 0 for x in d)
    assert snf.diagonal[len(d) :] == (0,) * (len(snf.diagonal) - len(d))


@given(int_matrices(), st.randoms(use_true_random=False))
def test_permutation_invariance(rows, rnd):
    A = np.array(rows)
    P = A[rnd.sample(range(A.shape[0]), A.shape[0])][:, rnd.sample(range(A.shape[1]), A.shape[1])]
    assert smith_normal_form(P.tolist()).diagonal == smith_normal_form(rows).diagonal


@given(int_matrices(), st.integers(1, 12))
def test_scale_property(rows, c):
    d = smith_normal_form(rows).diagonal
    scaled = [[c * x for x in r] for r in rows]
    assert smith_normal_form(scaled).diagonal == tuple(c * x for x in d)


def test_cokernel_mod_matches_integral_route():
    rng = random.Random(3)
    for _ in range(500):
        m, n = rng.randint(1, 4), rng.randint(1, 5)
        rows = [[rng.randint(-9, 9) * (rng.random() < 0.7) for _ in range(n)] for _ in range(m)]
        a = rng.choice([2, 3, 4, 6, 8, 9, 12, 27, 32])
        torsion, free = cokernel(rows)
        expected = direct_sum(tensor_mod(torsion, a), from_cyclic_orders([a] * free))
        assert cokernel_mod(rows, a) == expected, (rows, a)


def test_local_partition_python_fallback_agrees():
    # p^k above the int64 kernel's limit goes through the pure Python path
    rows = [[2**40, 6], [3, 2**35]]
    part = local_cokernel_partition(rows, 2, 50)
    torsion, free = cokernel(rows)
    assert part == tuple(min(x, 50) for x in torsion.partition(2))


def test_multimodular_determinant():
    rng = np.random.default_rng(5)
    for n in (1, 2, 5, 12, 30):
        A = rng.integers(-50, 51, size=(n, n))
        assert determinant_multimodular(A) == determinant(A.tolist())
    assert determinant_multimodular(np.zeros((3, 3), dtype=np.int64)) == 0
    assert determinant_multimodular(np.ones((0, 0), dtype=np.int64)) == 1

import json
import math

import numpy as np
import pytest
from hypothesis import given

from digraph_sandpile.integer_smith import IntMatrix, determinant
from digraph_sandpile.random_digraph import (
    Digraph,
    EdgeModel,
    bernoulli,
    check_epsilon_balanced,
    is_strongly_connected,
    laplacian,
    laplacian_array,
    reduced_laplacian,
    sample_digraph,
    spanning_trees_toward,
    uniform,
)

from .strategies import digraphs

# vertices are 0-based, so the directed 3-cycle is 0 -> 1 -> 2 -> 0
K3 = Digraph.from_edges(3, [(i, j) for i in range(3) for j in range(3) if i != j])
CYCLE3 = Digraph.from_edges(3, [(0, 1), (1, 2), (2, 0)])


def test_epsilon_balanced_examples():
    assert check_epsilon_balanced(bernoulli(0.3), 0.3)
    point = EdgeModel({3: 1.0}, 0.5, check=False)
    assert not check_epsilon_balanced(point, 0.01)
    u = EdgeModel({0: 1 / 3, 1: 1 / 3, 2: 1 / 3}, 1 / 3)
    assert check_epsilon_balanced(u, 1 / 3)
    assert not check_epsilon_balanced(u, 0.4)


def test_builtin_models_declare_valid_epsilon():
    for model in (bernoulli(0.5), bernoulli(0.1), uniform(1), uniform(2), uniform(5)):
        assert check_epsilon_balanced(model, model.epsilon)


def test_model_validation():
    with pytest.raises(ValueError):
        EdgeModel({0: 0.5, 1: 0.4}, 0.4)
    with pytest.raises(ValueError):
        EdgeModel({}, 0.5)
    with pytest.raises(ValueError):
        EdgeModel({0: 0.9, 1: 0.1}, 0.5)
    with pytest.raises(ValueError):
        bernoulli(1.0)


def test_model_from_file(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"pmf": {"0": 0.5, "1": 0.5}, "epsilon": 0.5}))
    assert EdgeModel.from_file(path).pmf == {0: 0.5, 1: 0.5}
    path.write_text("{not json")
    with pytest.raises(ValueError):
        EdgeModel.from_file(path)
    path.write_text(json.dumps({"pmf": [1, 2]}))
    with pytest.raises(ValueError):
        EdgeModel.from_file(path)


def test_sample_point_mass_model():
    model = EdgeModel({1: 1.0}, 0.5, check=False)
    G = sample_digraph(2, model, np.random.default_rng(0))
    assert G.mult.tolist() == [[0, 1], [1, 0]]


def test_sample_is_reproducible():
    a = sample_digraph(3, bernoulli(0.5), np.random.default_rng(11))
    b = sample_digraph(3, bernoulli(0.5), np.random.default_rng(11))
    assert a == b
    with pytest.raises(ValueError):
        sample_digraph(1, bernoulli(0.5), np.random.default_rng(0))


def test_sample_mean_bernoulli():
    rng = np.random.default_rng(1)
    draws = np.concatenate(
        [sample_digraph(10, bernoulli(0.3), rng).mult[~np.eye(10, dtype=bool)] for _ in range(1112)]
    )[:100_000]
    sigma = math.sqrt(0.3 * 0.7 / draws.size)
    assert abs(draws.mean() - 0.3) < 3 * sigma


def test_laplacian_examples():
    assert laplacian(K3).tolist() == [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]]
    # columns are firing vectors, so this is the transpose of the row-source display
    assert laplacian(CYCLE3).tolist() == [[1, 0, -1], [-1, 1, 0], [0, -1, 1]]
    assert laplacian(Digraph(1, [[4]])).tolist() == [[0]]


def test_reduced_laplacian_examples():
    assert reduced_laplacian(K3, 0).tolist() == [[2, -1], [-1, 2]]
    two = Digraph.from_edges(2, [(0, 1), (1, 0)])
    assert reduced_laplacian(two, 1).tolist() == [[1]]
    assert reduced_laplacian(Digraph(1, [[0]]), 0).shape == (0, 0)
    with pytest.raises(IndexError):
        reduced_laplacian(K3, 3)


def test_strong_connectivity_examples():
    assert is_strongly_connected(CYCLE3)
    assert not is_strongly_connected(Digraph.from_edges(2, [(0, 1)]))
    no_into_last = Digraph.from_edges(3, [(0, 1), (1, 0), (2, 0), (2, 1)])
    assert not is_strongly_connected(no_into_last)


def test_spanning_tree_examples():
    assert [spanning_trees_toward(CYCLE3, i) for i in range(3)] == [1, 1, 1]
    assert [spanning_trees_toward(K3, i) for i in range(3)] == [3, 3, 3]
    assert spanning_trees_toward(Digraph.from_edges(2, [(0, 1)]), 0) == 0
    with pytest.raises(ValueError):
        spanning_trees_toward(Digraph(8, np.ones((8, 8), dtype=np.int64)), 0)


def test_digraph_json_round_trip():
    assert CYCLE3.to_json() == {"n": 3, "mult": [[0, 1, 0], [0, 0, 1], [1, 0, 0]]}
    assert Digraph.from_json(CYCLE3.to_json()) == CYCLE3


def test_column_sums_zero_all_models():
    rng = np.random.default_rng(2)
    models = [bernoulli(0.5), bernoulli(0.2), uniform(2), uniform(4)]
    for t in range(500):
        G = sample_digraph(int(rng.integers(2, 12)), models[t % len(models)], rng)
        assert not laplacian_array(G).sum(axis=0).any()


@given(digraphs())
def test_loop_invariance(G):
    looped = G.mult.copy()
    np.fill_diagonal(looped, np.arange(1, G.n + 1))
    assert laplacian(Digraph(G.n, looped)) == laplacian(G)


@given(digraphs())
def test_kernel_contains_ones_iff_balanced(G):
    assert (not laplacian_array(G).sum(axis=1).any()) == G.is_balanced()


@given(digraphs(max_n=5))
def test_matrix_tree(G):
    for i in range(G.n):
        assert abs(determinant(reduced_laplacian(G, i))) == spanning_trees_toward(G, i)


def test_strong_connectivity_frequency():
    rng = np.random.default_rng(30)
    hits = sum(is_strongly_connected(sample_digraph(30, bernoulli(0.5), rng)) for _ in range(2000))
    assert hits / 2000 >= 0.999


def test_intmatrix_from_digraph_shape():
    assert isinstance(laplacian(K3), IntMatrix)

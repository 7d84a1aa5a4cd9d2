import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freep.errors import ExponentError, SpaceStructureError, TreeError, TriangleError
from freep.space import (
    QuasiMetricSpace,
    SubsetSelection,
    WeightedTree,
    ensure_valid,
    from_points,
    grid_space,
    leaves,
    line_space,
    skeleton_tree_space,
    snowflake,
    validate,
    validate_table,
)


def test_line_is_metric():
    assert validate(line_space([0, 1, 2])).ok


def test_squared_line_fails_at_middle_point():
    X = line_space([0, 1, 2])
    rep = validate_table(X.points, X.dist**2, 1.0)
    assert not rep.ok
    assert rep.worst_triple in ((0, 1, 2), (2, 1, 0))
    assert rep.worst_ratio == pytest.approx(2.0)


def test_squared_line_is_half_metric():
    X = line_space([0, 1, 2])
    assert validate_table(X.points, X.dist**2, 0.5).ok


def test_ensure_valid_raises_with_triple():
    X = line_space([0, 1, 2])
    bad = QuasiMetricSpace(X.points, 0, X.dist**2, 1.0)
    with pytest.raises(TriangleError) as exc:
        ensure_valid(bad)
    assert exc.value.triple is not None


@pytest.mark.parametrize(
    "table",
    [
        [[0, 1], [2, 0]],
        [[0, -1], [-1, 0]],
        [[0, 0], [0, 0]],
        [[1, 1], [1, 0]],
    ],
)
def test_structural_errors(table):
    with pytest.raises(SpaceStructureError):
        QuasiMetricSpace([0, 1], 0, table, 1.0)


def test_base_must_be_a_point():
    with pytest.raises(SpaceStructureError):
        QuasiMetricSpace([0, 1], 5, [[0, 1], [1, 0]], 1.0)


@pytest.mark.parametrize("p", [0.0, -0.5, 1.5])
def test_exponent_range(p):
    with pytest.raises(ExponentError):
        QuasiMetricSpace([0, 1], 0, [[0, 1], [1, 0]], p)


def test_snowflake_two_points():
    X = line_space([0, 1])
    Y = snowflake(X, 2)
    assert Y.d(0, 1) == 1.0 and Y.p == 0.5


def test_snowflake_identity():
    X = line_space([0, 1, 3])
    assert snowflake(X, 1) is X


def test_snowflake_half_is_metric():
    Y = snowflake(line_space([0, 1, 2]), 0.5)
    assert Y.p == 1.0
    assert Y.d(0, 2) == pytest.approx(np.sqrt(2))
    assert validate(Y).ok


def test_grid_window_one_dimensional():
    G = grid_space(1, 1.0)
    assert G.points == ((-1,), (0,), (1,))
    assert G.d((-1,), (1,)) == 2.0


def test_grid_window_two_dimensional_half():
    G = grid_space(2, 0.5)
    assert len(G) == 9
    assert G.d((0, 0), (1, 1)) == 1.0
    assert G.d((0, 0), (1, -1)) == 1.0
    assert G.d((-1, 0), (1, 0)) == 4.0


def test_grid_window_scaled():
    G = grid_space(1, 0.5, t=0.5, radius=2)
    # |0.5 * 1|_inf ** 2
    assert G.d((0,), (1,)) == 0.25
    assert G.d((-2,), (2,)) == 4.0
    assert validate(G).ok


def test_path_tree():
    T = WeightedTree((0, "a", "b"), ((0, "a", 1), ("a", "b", 1)), 0)
    X = skeleton_tree_space(T, 1.0)
    assert X.d(0, "b") == 2.0
    assert leaves(T) == frozenset({0, "b"})


def test_star_tree_leaves():
    T = WeightedTree((0, 1, 2, 3), ((0, 1, 1), (0, 2, 1), (0, 3, 1)), 0)
    assert leaves(T) == frozenset({0, 1, 2, 3})


def test_path_tree_half():
    T = WeightedTree((0, "a", "b"), ((0, "a", 1), ("a", "b", 1)), 0)
    X = skeleton_tree_space(T, 0.5)
    assert X.d(0, "b") == 4.0 and X.d(0, "a") == 1.0
    assert validate(X).ok


@pytest.mark.parametrize(
    "edges",
    [
        ((0, 1, 1.0),),
        ((0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)),
        ((0, 1, 0.0), (1, 2, 1.0)),
    ],
)
def test_tree_errors(edges):
    with pytest.raises(TreeError):
        WeightedTree((0, 1, 2), edges, 0)


def test_subset_requires_base():
    X = line_space([0, 1, 2])
    with pytest.raises(SpaceStructureError):
        SubsetSelection(X, frozenset({1, 2}))
    N = SubsetSelection(X, frozenset({0, 2}))
    assert N.complement == (1,)
    assert N.space().points == (0, 2)


def test_json_round_trip():
    X = from_points({"a": [0, 0], "b": [1, 2], "c": [3, 1]}, "a", 1.0, ord=2)
    Y = QuasiMetricSpace.from_dict(X.to_dict())
    assert Y.points == X.points
    assert np.array_equal(Y.dist, X.dist)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=7, unique=True),
       st.floats(0.2, 1.0))
def test_snowflaked_line_validates(xs, r):
    xs = sorted(set(round(x, 3) for x in xs))
    if len(xs) < 2:
        return
    X = from_points({i: [x] for i, x in enumerate(xs)}, 0)
    assert validate(snowflake(X, r)).ok


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 10), st.integers(0, 10_000), st.sampled_from([0.3, 0.5, 1.0]))
def test_random_trees_validate(n, seed, p):
    rng = np.random.default_rng(seed)
    edges = [(i, int(rng.integers(0, i)), float(rng.uniform(0.1, 3))) for i in range(1, n)]
    T = WeightedTree(tuple(range(n)), tuple(edges), 0)
    X = skeleton_tree_space(T, p)
    assert validate(X).ok
    assert np.array_equal(X.dist, X.dist.T)

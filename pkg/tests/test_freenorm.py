import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freep.errors import ExponentError, SizeCapError, SpaceMismatchError
from freep.freenorm import (
    distortion,
    dual_lower_bound,
    envelope_compare,
    norm,
    norm_exact,
    norm_search,
    norm_upper,
)
from freep.molecule import Molecule, elementary
from freep.space import QuasiMetricSpace, SubsetSelection, WeightedTree, leaves, line_space, skeleton_tree_space
from freep.trees import brute_force_trees, decode, rooted_tree_table

from oracles import random_molecule, random_space, tree_flow_norm


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_tree_table_counts(n):
    par, order = rooted_tree_table(n)
    assert par.shape[0] == n ** (n - 2)
    assert len(brute_force_trees(n)) == n ** (n - 2)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_pruefer_matches_subset_filter(n):
    par, _ = rooted_tree_table(n)
    got = {frozenset(tuple(sorted((v, int(row[v])))) for v in range(n - 1)) for row in par}
    assert got == set(brute_force_trees(n))


def test_decode_path():
    # sequence (0, 1) on 4 labels: leaf 2 -> 0, leaf 0 -> 1, then 1 -> 3
    assert list(decode((0, 1), 4)) == [1, 3, 0, -1]


def test_two_point_half():
    X = QuasiMetricSpace([0, "z"], 0, [[0, 2], [2, 0]], 0.5)
    res = norm_exact(Molecule.delta(X, "z"), 0.5)
    assert res.value == pytest.approx(2.0)
    assert res.witness.terms == (("z", 0, 2.0),)
    assert res.certified


def test_path_p1_matches_dual():
    X = line_space([0, 1, 2])
    mu = Molecule.delta(X, 2)
    assert norm_exact(mu, 1.0).value == pytest.approx(dual_lower_bound(mu), rel=1e-12)
    assert norm_exact(mu, 1.0).value == pytest.approx(2.0)


def test_path_half_three_trees():
    X = line_space([0, 1, 2], p=0.5)
    mu = Molecule.delta(X, 2)
    # trees of K3 carrying delta(2) to 0: direct edge (2), through 1 ((1+1)^2), or 0-2 plus 1-2 (2)
    assert norm_exact(mu, 0.5).value == pytest.approx(tree_flow_norm(mu, 0.5))
    assert norm_exact(mu, 0.5).value == pytest.approx(2.0)


def test_zero_molecule():
    X = line_space([0, 1])
    zero = Molecule(X)
    assert norm_exact(zero, 1).value == 0.0
    assert norm_search(zero, 1).value == 0.0
    assert dual_lower_bound(zero) == 0.0
    assert envelope_compare(zero, 1, 1) == (0.0, 0.0)


def test_dual_two_point():
    X = QuasiMetricSpace([0, "z"], 0, [[0, 2], [2, 0]], 1.0)
    assert dual_lower_bound(Molecule.delta(X, "z")) == pytest.approx(2.0)


@pytest.mark.parametrize("p", [1.0, 0.5])
def test_elementary_norm_at_most_one(p):
    X = random_space(5, p, np.random.default_rng(3))
    assert norm_exact(elementary(X, 2, 4), p).value <= 1 + 1e-12
    assert norm_search(elementary(X, 2, 4), p).value <= 1 + 1e-12


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("p", [0.3, 0.6, 1.0])
def test_exact_matches_independent_tree_oracle(seed, p):
    rng = np.random.default_rng(seed)
    X = random_space(5, p, rng)
    mu = random_molecule(X, rng)
    assert norm_exact(mu, p).value == pytest.approx(tree_flow_norm(mu, p), rel=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_witness_reconstructs(seed):
    rng = np.random.default_rng(seed)
    X = random_space(6, 0.5, rng)
    mu = random_molecule(X, rng)
    res = norm_exact(mu, 0.5)
    assert res.witness.reconstruct(X).allclose(mu, atol=1e-9)
    assert res.witness.value(0.5) == pytest.approx(res.value, rel=1e-9)


@pytest.mark.parametrize("seed", range(6))
def test_dual_equals_exact_p1(seed):
    rng = np.random.default_rng(100 + seed)
    X = random_space(6, 1.0, rng)
    mu = random_molecule(X, rng)
    a = norm_exact(mu, 1.0).value
    assert dual_lower_bound(mu) == pytest.approx(a, rel=1e-7)


@pytest.mark.parametrize("support", ["tree", "any"])
@pytest.mark.parametrize("seed", range(4))
def test_search_never_below_exact(seed, support):
    rng = np.random.default_rng(seed)
    X = random_space(5, 0.5, rng)
    mu = random_molecule(X, rng)
    a = norm_exact(mu, 0.5).value
    b = norm_search(mu, 0.5, restarts=30, seed=seed, support=support)
    assert b.value >= a * (1 - 1e-9)
    assert not b.certified


def test_norm_dispatch():
    X = line_space([0, 1, 2])
    mu = Molecule.delta(X, 2)
    assert norm(mu, 1, "dual").value == pytest.approx(2.0)
    with pytest.raises(ValueError):
        norm(mu, 1, "magic")


def test_exponent_above_space():
    X = line_space([0, 1, 2], p=0.5)
    with pytest.raises(ExponentError):
        norm_exact(Molecule.delta(X, 1), 1.0)


def test_size_cap():
    X = line_space(list(range(10)))
    with pytest.raises(SizeCapError):
        norm_exact(Molecule.delta(X, 3), 1.0)


def test_norm_upper_bounds_exact():
    rng = np.random.default_rng(4)
    X = random_space(7, 0.5, rng)
    mu = Molecule(X, {1: 1.0, 2: -0.5})
    assert norm_upper(mu, 0.5) >= norm_exact(mu, 0.5).value * (1 - 1e-12)


def test_envelope_equal_levels():
    rng = np.random.default_rng(5)
    X = random_space(5, 0.5, rng)
    mu = random_molecule(X, rng)
    a, b = envelope_compare(mu, 0.5, 0.5)
    assert a == b


def test_envelope_monotone_and_positive():
    rng = np.random.default_rng(6)
    X = random_space(5, 1.0, rng)
    mu = random_molecule(X, rng)
    a, b = envelope_compare(mu, 0.5, 1.0)
    assert 0 < b <= a * (1 + 1e-9)


def test_distortion_full_subset():
    rng = np.random.default_rng(7)
    X = random_space(5, 0.5, rng)
    N = SubsetSelection(X, frozenset(X.points))
    assert distortion(X, N, random_molecule(X, rng), 0.5).ratio == 1.0


def test_distortion_rejects_escaping_support():
    X = line_space([0, 1, 2])
    N = SubsetSelection(X, frozenset({0, 1}))
    with pytest.raises(SpaceMismatchError):
        distortion(X, N, Molecule.delta(X, 2), 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_distortion_p1_isometric(seed):
    rng = np.random.default_rng(seed)
    X = random_space(6, 1.0, rng)
    N = SubsetSelection(X, frozenset({0, 2, 3, 5}))
    mu = Molecule(X, {2: rng.normal(), 3: rng.normal(), 5: rng.normal()})
    assert distortion(X, N, mu, 1.0).ratio == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("seed", range(5))
def test_distortion_tree_leaves_half(seed):
    rng = np.random.default_rng(seed)
    n = 7
    T = WeightedTree(tuple(range(n)), tuple((i, int(rng.integers(0, i)), float(rng.uniform(0.5, 2)))
                                            for i in range(1, n)), 0)
    X = skeleton_tree_space(T, 0.5)
    N = SubsetSelection(X, leaves(T))
    mu = Molecule(X, {x: rng.normal() for x in N.members if x != 0})
    rep = distortion(X, N, mu, 0.5, bound=1e12)
    assert rep.ratio >= 1 - 1e-9
    assert not rep.counterexample


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([0.3, 0.5, 0.8, 1.0]), st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_homogeneity_property(seed, p, c):
    rng = np.random.default_rng(seed)
    X = random_space(5, p, rng)
    mu = random_molecule(X, rng)
    assert norm_exact(c * mu, p).value == pytest.approx(abs(c) * norm_exact(mu, p).value, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([0.3, 0.5, 0.8, 1.0]))
def test_p_triangle_property(seed, p):
    rng = np.random.default_rng(seed)
    X = random_space(5, p, rng)
    mu, nu = random_molecule(X, rng), random_molecule(X, rng)
    lhs = norm_exact(mu + nu, p).value ** p
    rhs = norm_exact(mu, p).value ** p + norm_exact(nu, p).value ** p
    assert lhs <= rhs * (1 + 1e-9) + 1e-12


def test_kantorovich_value_with_explicit_witness():
    # delta(1) - delta(2) on the line {0, 1, 3}: f(x) = -x gives 2, matching the single edge
    X = line_space([0, 1, 3])
    mu = Molecule(X, {1: 1.0, 3: -1.0})
    assert norm_exact(mu, 1).value == pytest.approx(2.0)
    assert dual_lower_bound(mu) == pytest.approx(2.0)
    assert math.isclose(norm_search(mu, 1).value, 2.0, rel_tol=1e-9)

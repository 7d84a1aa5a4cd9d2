from fractions import Fraction

import numpy as np
import pytest

from freep.errors import MapError, SpaceMismatchError
from freep.grid import retraction, retraction_check
from freep.molecule import ElementaryDecomposition, Molecule, elementary, lipschitz_constant, pushforward
from freep.space import QuasiMetricSpace, grid_space, line_space


def two_point(d=3.0):
    return QuasiMetricSpace([0, "z"], 0, [[0, d], [d, 0]], 1.0)


def test_elementary_two_point():
    m = elementary(two_point(3.0), "z", 0)
    assert m.coeff("z") == pytest.approx(1 / 3)
    assert m.coeff(0) == 0.0


def test_elementary_antisymmetry():
    X = line_space([0, 1, 2.5])
    assert (elementary(X, 1, 2.5) + elementary(X, 2.5, 1)).is_zero()


def test_base_coefficient_is_dropped():
    X = line_space([0, 1])
    assert Molecule(X, {0: 5.0, 1: 2.0}).support == (1,)


def test_reconstruct_three_terms():
    X = line_space([0, 1, 3, 4])
    terms = ((1, 0, 2.0), (3, 1, -0.5), (4, 3, 1.25))
    got = ElementaryDecomposition(terms).reconstruct(X)
    # direct summation of a * (delta(x) - delta(y)) / d(x, y)
    want = {1: 2.0 / 1 + 0.5 / 2, 3: -0.5 / 2 - 1.25 / 1, 4: 1.25 / 1}
    for x, a in want.items():
        assert got.coeff(x) == pytest.approx(a, abs=1e-15)


def test_decomposition_value():
    d = ElementaryDecomposition(((1, 0, 3.0), (2, 0, -4.0)))
    assert d.value(1.0) == 7.0
    assert d.value(0.5) == pytest.approx((3**0.5 + 4**0.5) ** 2)


def test_mismatched_spaces():
    with pytest.raises(SpaceMismatchError):
        Molecule.delta(line_space([0, 1]), 1) + Molecule.delta(line_space([0, 2]), 2)


def test_pushforward_identity():
    X = line_space([0, 1, 2])
    m = Molecule(X, {1: 1.0, 2: -3.0})
    assert pushforward(m, lambda x: x, X).equals(m)


def test_pushforward_to_base():
    X = line_space([0, 1, 2])
    m = Molecule(X, {1: 1.0, 2: -3.0})
    assert pushforward(m, lambda x: 0, X).is_zero()


def test_pushforward_radial_retraction_one_dim():
    G = grid_space(1, 1.0, radius=2)
    m = Molecule.delta(G, (2,))
    got = pushforward(m, lambda w: retraction(1, w), G)
    assert got.equals(Molecule.delta(G, (1,)))


def test_pushforward_rejects_base_motion():
    X = line_space([0, 1, 2])
    with pytest.raises(MapError):
        pushforward(Molecule.delta(X, 1), {0: 1, 1: 2}, X)


def test_pushforward_rejects_foreign_image():
    X = line_space([0, 1, 2])
    with pytest.raises(MapError):
        pushforward(Molecule.delta(X, 1), lambda x: 7 if x else 0, X)


def test_lipschitz_identity_and_constant():
    X = line_space([0, 1, 3])
    assert lipschitz_constant(lambda x: x, X, X) == 1.0
    assert lipschitz_constant(lambda x: 0, X, X) == 0.0


def test_lipschitz_of_dilation():
    X = line_space([0, 1, 3])
    Y = line_space([0, 2, 6])
    assert lipschitz_constant(lambda x: 2 * x, X, Y) == 2.0


def test_radial_retraction_on_lattice_window():
    # d = 2, q = 1, radius 3, n = 2: exact supremum 4/3 at ((-3,-1), (-2,-2))
    rep = retraction_check(2, 2, 3, 1.0)
    assert rep.lipschitz_exact == Fraction(4, 3)
    assert not rep.ok
    assert not rep.lattice_valued


def test_molecule_linear_ops():
    X = line_space([0, 1, 2])
    a = Molecule(X, {1: 1.0, 2: 2.0})
    b = Molecule(X, {1: -1.0, 2: 0.5})
    assert (a + b).allclose(Molecule(X, {2: 2.5}))
    assert (2 * a - a).equals(a)
    assert np.array_equal((-a).coeffs, -a.coeffs)

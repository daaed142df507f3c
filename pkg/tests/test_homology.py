import numpy as np
import pytest

from modwedge.errors import TorsionClass
from modwedge.homology import (dual_basis_cocycle, evaluate, is_torsion, random_homologous,
                               relative_homology)
from modwedge.mesh import Chain, boundary_matrix
from modwedge.scenes import cylinder, flat_torus, klein_bottle, lohvansuu_cube
from conftest import box, torus


def betti(X, rel=None):
    return [relative_homology(X, k, rel).betti for k in range(X.dimension + 1)]


def test_torus_betti_numbers():
    assert betti(torus(3)) == [1, 2, 1]
    assert betti(torus(2, (1.0, 1.0, 1.0))) == [1, 3, 3, 1]


def test_box_absolute_and_relative():
    X = box(3, (1.0, 1.0, 1.0))
    assert betti(X) == [1, 0, 0, 0]
    assert betti(X, "E") == [0, 0, 0, 1]


def test_klein_bottle_torsion():
    X = klein_bottle(6).complex
    H1 = relative_homology(X, 1)
    assert H1.betti == 1 and H1.torsion_invariants == [2]
    assert relative_homology(X, 2).betti == 0
    # over the reals the torsion disappears
    assert relative_homology(X, 1, ring="R").torsion_invariants == []


def test_lohvansuu_relative_groups():
    sc = lohvansuu_cube(3, 1, 4)
    X = sc.complex
    assert relative_homology(X, 1, "D").betti == 1
    assert relative_homology(X, 2, "E").betti == 1
    assert relative_homology(X, 1, "E").betti == 0


@pytest.mark.parametrize("scene", [flat_torus((1.0, 2.0), 4), cylinder((1.0,), 1.0, 4),
                                   lohvansuu_cube(2, 1, 5), klein_bottle(4)])
def test_pairing_matrix_is_identity(scene):
    X = scene.complex
    for k in range(X.dimension + 1):
        for rel in (None, "D", "E"):
            if rel and not X.has_marking(rel):
                continue
            H = relative_homology(X, k, rel)
            P = np.array(H.cohomology.pairing_matrix, dtype=object).reshape(H.betti, H.betti)
            if H.betti:
                assert (P == np.eye(H.betti, dtype=int).astype(object)).all()


def test_random_homologous_chains_keep_their_class(rng):
    sc = lohvansuu_cube(2, 1, 6)
    X = sc.complex
    for label in ("A", "B"):
        c = sc.featured_classes[label]
        sigma = c.representative()
        for _ in range(10):
            tau = random_homologous(X, sigma, c.rel, rng)
            assert c.summary.class_of(tau).coords == c.coords


def test_evaluate_dual_cocycle_on_class():
    sc = flat_torus((2.0, 1.0), 5)
    c = sc.featured_classes["x"]
    omega = dual_basis_cocycle(sc.complex, c)
    assert evaluate(omega, c.representative()) == pytest.approx(1.0)
    exact = dual_basis_cocycle(sc.complex, c, exact=True)
    assert evaluate(exact, c.representative()) == 1


def test_torsion_class_detected():
    sc = klein_bottle(4)
    t = sc.featured_classes["torsion"]
    assert is_torsion(t)
    with pytest.raises(TorsionClass):
        dual_basis_cocycle(sc.complex, t)
    # twice the torsion generator is a boundary
    twice = Chain(1, 2 * t.representative().values)
    assert all(v == 0 for v in t.summary.class_of(twice).coords)


def test_generators_are_relative_cycles():
    sc = cylinder((1.0, 1.0), 1.0, 3)
    X = sc.complex
    for label, c in sc.featured_classes.items():
        sigma = c.representative()
        k = sigma.degree
        if k == 0:
            continue
        bd = boundary_matrix(X, k) @ sigma.values
        assert not np.any(bd[~X.rel_mask(k - 1, c.rel)])

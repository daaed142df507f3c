import numpy as np
import pytest

from modwedge.dec import characterize, coboundary, cup_pair, lp_norm, lp_norm_p
from modwedge.dmod import (SolverOptions, complementary, conjugate, dual_form,
                           identify_dual_class, inverse_dual_form, minimize_dmod, objective,
                           poincare_dual, verify_duality)
from modwedge.errors import NoConvergence, TorsionClass, UnsupportedBoundary
from modwedge.homology import evaluate, random_homologous, relative_homology
from modwedge.mesh import Cochain
from modwedge.scenes import cylinder, flat_torus, klein_bottle, lohvansuu_cube

PS = [1.5, 2.0, 3.0]


@pytest.fixture(scope="module")
def torus21():
    return flat_torus((2.0, 1.0), 12)


@pytest.mark.parametrize("p", PS)
def test_flat_torus_closed_form(torus21, p):
    res = minimize_dmod(torus21.complex, torus21.featured_classes["x"], p)
    assert res.converged
    assert res.value == pytest.approx(2.0 ** (1 - p), rel=1e-9 if p == 2 else 1e-6)
    assert res.value == pytest.approx(torus21.expected_for("dmod", "x").value(p), rel=1e-6)


@pytest.mark.parametrize("p", PS)
def test_minimizer_is_admissible_and_closed(p):
    sc = lohvansuu_cube(2, 1, 8)
    X = sc.complex
    c = sc.featured_classes["A"]
    res = minimize_dmod(X, c, p)
    assert res.converged
    assert res.residual <= 1e-8 * res.initial_residual
    # exactly closed and relative in rational arithmetic
    exact = res.exact_minimizer()
    ch = characterize(X, exact, c.rel)
    assert ch.closed_by_pairing and ch.closed_by_coboundary
    assert evaluate(exact, c.representative()) == 1
    for value in res.certificate_evaluations:
        assert value == pytest.approx(1.0, abs=1e-10)
    assert res.value == pytest.approx(lp_norm_p(X, res.minimizer, p), rel=1e-12)


def test_objective_gradient_consistent(rng):
    sc = cylinder((1.0,), 1.0, 4)
    value, grad, n = objective(sc.complex, sc.featured_classes["path"], 3.0)
    tau = rng.standard_normal(n) * 0.1
    d = rng.standard_normal(n)
    h = 1e-6
    fd = (value(tau + h * d) - value(tau - h * d)) / (2 * h)
    assert fd == pytest.approx(grad(tau) @ d, rel=1e-5)


@pytest.mark.parametrize("p", PS)
def test_random_restarts_agree(p, rng):
    sc = lohvansuu_cube(2, 1, 6)
    X = sc.complex
    c = sc.featured_classes["A"]
    base = minimize_dmod(X, c, p).minimizer.values
    for _ in range(2):
        tau0 = rng.standard_normal(X.n_cells(0))
        other = minimize_dmod(X, c, p, tau0=tau0).minimizer.values
        assert np.max(np.abs(other - base)) <= 1e-6


def test_distinct_generators_give_distinct_minimizers(torus21):
    X = torus21.complex
    wx = minimize_dmod(X, torus21.featured_classes["x"], 2.0).minimizer.values
    wy = minimize_dmod(X, torus21.featured_classes["y"], 2.0).minimizer.values
    assert np.max(np.abs(wx - wy)) >= 1e-3


@pytest.mark.parametrize("p", PS)
def test_duality_product_on_torus(torus21, p):
    rep = verify_duality(torus21.complex, torus21.featured_classes["x"], p)
    assert rep.converged
    assert rep.product == pytest.approx(1.0, abs=1e-6 if p == 2 else 1e-3)
    assert rep.pairing_check == pytest.approx(1.0, abs=1e-9)
    assert rep.reciprocity == pytest.approx(1.0, abs=1e-9)
    assert rep.dual_form_error <= 1e-6
    assert rep.q == pytest.approx(conjugate(p))


@pytest.mark.parametrize("scene,label", [(lohvansuu_cube(2, 1, 8), "A"),
                                         (lohvansuu_cube(2, 1, 8), "B"),
                                         (cylinder((1.0,), 1.0, 6), "path")])
def test_duality_product_with_boundary(scene, label):
    for p in (1.5, 3.0):
        rep = verify_duality(scene.complex, scene.featured_classes[label], p)
        assert rep.converged
        assert abs(rep.product - 1) <= 1e-3
        assert rep.integerness_gap <= 1e-6
        assert rep.reciprocity is None


def test_poincare_dual_represents_evaluation(rng):
    sc = lohvansuu_cube(2, 1, 6)
    X = sc.complex
    c = sc.featured_classes["A"]
    alpha, _, _ = poincare_dual(X, c)
    sigma = c.representative()
    base = minimize_dmod(X, c, 2.0).minimizer.values
    for _ in range(5):
        tau = rng.standard_normal(X.n_cells(0))
        tau[X.rel_mask(0, "D")] = 0
        omega = Cochain(1, rng.uniform(0.5, 2) * base + coboundary(X, Cochain(0, tau)).values)
        assert cup_pair(X, alpha, omega) == pytest.approx(evaluate(omega, sigma), rel=1e-10)


def test_dual_class_pairs_to_one():
    sc = flat_torus((1.0, 1.0, 1.0), 4)
    X = sc.complex
    c = sc.featured_classes["x"]
    res = minimize_dmod(X, c, 2.0)
    y = identify_dual_class(X, res.minimizer, c.rel)
    assert np.allclose(y, np.round(y), atol=1e-9)
    assert complementary(None) == "E" and complementary("D") == "E"


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_inverse_dual_form_round_trip(torus21, p):
    X = torus21.complex
    omega = minimize_dmod(X, torus21.featured_classes["x"], p).minimizer
    zeta = dual_form(X, omega, p)
    back = inverse_dual_form(X, zeta, conjugate(p))
    assert np.linalg.norm(back.values - omega.values) <= 1e-9 * np.linalg.norm(omega.values)
    assert lp_norm(X, omega, p) * lp_norm(X, zeta, conjugate(p)) == pytest.approx(1.0, abs=1e-9)


def test_torsion_class_rejected():
    sc = klein_bottle(4)
    with pytest.raises(TorsionClass):
        minimize_dmod(sc.complex, sc.featured_classes["torsion"], 2.0)


def test_absolute_class_with_d_marking_rejected():
    sc = cylinder((1.0,), 1.0, 4)
    absolute = relative_homology(sc.complex, 0).generator(0, "point")
    with pytest.raises(UnsupportedBoundary):
        verify_duality(sc.complex, absolute, 2.0)


def test_dual_form_needs_periodic_grid():
    sc = lohvansuu_cube(2, 1, 4)
    omega = minimize_dmod(sc.complex, sc.featured_classes["A"], 2.0).minimizer
    with pytest.raises(UnsupportedBoundary):
        dual_form(sc.complex, omega, 2.0)


def test_strict_mode_raises_on_budget_exhaustion():
    sc = lohvansuu_cube(2, 1, 8)
    with pytest.raises(NoConvergence):
        minimize_dmod(sc.complex, sc.featured_classes["A"], 3.0,
                      SolverOptions(max_iter=1, strict=True))


def test_invalid_exponent():
    sc = flat_torus((1.0, 1.0), 4)
    with pytest.raises(ValueError):
        minimize_dmod(sc.complex, sc.featured_classes["x"], 1.0)


def test_certificates_on_homologous_cycles(rng):
    sc = cylinder((1.0, 1.0), 1.0, 3)
    X = sc.complex
    c = sc.featured_classes["section"]
    res = minimize_dmod(X, c, 3.0)
    for _ in range(5):
        sigma = random_homologous(X, c.representative(), c.rel, rng)
        assert evaluate(res.minimizer, sigma) == pytest.approx(1.0, abs=1e-9)

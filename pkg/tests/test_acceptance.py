"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in a dedicated section of the terminal summary, so a
plain ``pytest -v`` run shows the verdict for every criterion next to the
usual per-test output.
"""

import time
from fractions import Fraction
from functools import lru_cache

import numpy as np

from modwedge.cmod import CmodOptions, check_corollary
from modwedge.dec import (characterize, coboundary, cup_pair, objective_gradient, random_cochain,
                          to_exact)
from modwedge.dmod import minimize_dmod, verify_duality
from modwedge.homology import dual_basis_cocycle, evaluate, relative_homology
from modwedge.mesh import Chain, Cochain, GridSpec, boundary_matrix, build_complex
from modwedge.scenes import cylinder, flat_torus, freedman_he, klein_bottle, lohvansuu_cube
from modwedge.snf import int_det, smith_normal_form
from conftest import record_criterion

PS = (1.5, 2.0, 3.0)


def _product_tol(p):
    return 1e-6 if p == 2.0 else 1e-3


def _verdict(number, failures, detail):
    ok = not failures
    shown = detail if ok else "; ".join(failures[:3])
    record_criterion(number, ok, shown)
    assert ok, "\n".join(failures)


@lru_cache(maxsize=None)
def duality_scenes():
    """Desk-resolution scenes for the product law, with the class to test."""
    return (
        ("torus2 (2,1) 32x32", flat_torus((2.0, 1.0), 32), "x"),
        ("torus3 (1,2,1.5) 12^3", flat_torus((1.0, 2.0, 1.5), 12), "x"),
        ("lohvansuu n=2 k=1 32x32", lohvansuu_cube(2, 1, 32), "A"),
        ("lohvansuu n=3 k=1 12^3", lohvansuu_cube(3, 1, 12), "A"),
        ("cylinder 2d 32x32", cylinder((1.0,), 1.0, 32), "path"),
        ("cylinder 3d 12^3", cylinder((1.0, 1.0), 1.0, 12), "path"),
    )


@lru_cache(maxsize=None)
def duality_reports():
    """(name, p, report, seconds for the scene) for every scene and exponent."""
    out = []
    for name, sc, label in duality_scenes():
        t0 = time.perf_counter()
        reps = [(p, verify_duality(sc.complex, sc.featured_classes[label], p)) for p in PS]
        elapsed = time.perf_counter() - t0
        out.extend((name, p, rep, elapsed) for p, rep in reps)
    return tuple(out)


@lru_cache(maxsize=None)
def freedman_he_run():
    """dMod and certified classical products on the eps = 0.05 twisted dumbbell."""
    t0 = time.perf_counter()
    sc = freedman_he(0.05, 20, 4)
    X = sc.complex
    c, cp = sc.featured_classes["c"], sc.featured_classes["cprime"]
    dual = verify_duality(X, c, 2.0)
    cor = check_corollary(X, c, cp, 2.0, CmodOptions(max_outer=3),
                          rho_c=sc.densities["c"], rho_cprime=sc.densities["cprime"],
                          forms=True)
    return dual, cor, time.perf_counter() - t0


def test_criterion_01_flat_torus_closed_form():
    failures, worst = [], 0.0
    for a, b in [(1.0, 1.0), (2.0, 1.0), (3.0, 2.0)]:
        for p in PS:
            t0 = time.perf_counter()
            sc = flat_torus((a, b), 32)
            res = minimize_dmod(sc.complex, sc.featured_classes["x"], p)
            elapsed = time.perf_counter() - t0
            exact = b * a ** (1 - p)
            if p == 2.0:
                err = abs(res.value - exact)
                ok = err <= 1e-9
            else:
                err = abs(res.value - exact) / exact
                ok = err <= 1e-4
            worst = max(worst, err)
            if not ok or not res.converged:
                failures.append(f"torus ({a:g},{b:g}) p={p}: {res.value!r} vs {exact!r}")
            if elapsed >= 5.0:
                failures.append(f"torus ({a:g},{b:g}) p={p}: {elapsed:.1f}s >= 5s")
    _verdict(1, failures, f"9 cases at 32x32, worst error {worst:.1e}")


def test_criterion_02_duality_product_law():
    failures, worst, slowest = [], 0.0, 0.0
    for name, p, rep, elapsed in duality_reports():
        dev = abs(rep.product - 1.0)
        worst = max(worst, dev)
        slowest = max(slowest, elapsed)
        if not rep.converged or dev > _product_tol(p):
            failures.append(f"{name} p={p}: product {rep.product!r}")
        if elapsed >= 60.0:
            failures.append(f"{name}: {elapsed:.1f}s >= 60s")
    _verdict(2, failures, f"{len(duality_scenes())} scenes x 3 exponents, "
                          f"max |product-1| {worst:.1e}, slowest scene {slowest:.1f}s")


def test_criterion_03_integer_dual_class():
    failures, gaps = [], []
    for name, p, rep, _ in duality_reports():
        if rep.integerness_gap is None:
            continue
        gaps.append(rep.integerness_gap)
        if rep.integerness_gap > 1e-6:
            failures.append(f"{name} p={p}: c' coordinates {rep.cprime_coordinates}")
    extra = [("lohvansuu n=3 k=2 8^3", lohvansuu_cube(3, 2, 8), "A")]
    for name, sc, label in extra:
        for p in PS:
            rep = verify_duality(sc.complex, sc.featured_classes[label], p)
            gaps.append(rep.integerness_gap)
            if rep.integerness_gap is None or rep.integerness_gap > 1e-6:
                failures.append(f"{name} p={p}: c' coordinates {rep.cprime_coordinates}")
    dual, _, _ = freedman_he_run()
    gaps.append(dual.integerness_gap)
    if dual.integerness_gap is None or dual.integerness_gap > 1e-6:
        failures.append(f"freedman_he: c' coordinates {dual.cprime_coordinates}")
    if len(gaps) < 16:
        failures.append(f"only {len(gaps)} rank-1 checks ran")
    _verdict(3, failures, f"{len(gaps)} rank-1 solves, max gap {max(gaps):.1e}")


def test_criterion_04_dual_form_and_reciprocity():
    failures, worst_err, worst_rec, count = [], 0.0, 0.0, 0
    for name, p, rep, _ in duality_reports():
        if rep.dual_form_error is None:
            continue
        count += 1
        worst_err = max(worst_err, rep.dual_form_error)
        worst_rec = max(worst_rec, abs(rep.reciprocity - 1.0))
        if rep.dual_form_error > 1e-6:
            failures.append(f"{name} p={p}: dual-form error {rep.dual_form_error:.2e}")
        if abs(rep.reciprocity - 1.0) > 1e-9:
            failures.append(f"{name} p={p}: reciprocity {rep.reciprocity!r}")
    if count < 6:
        failures.append(f"only {count} periodic reports")
    _verdict(4, failures, f"{count} periodic solves, max dual-form error {worst_err:.1e}, "
                          f"max |reciprocity-1| {worst_rec:.1e}")


def _exactly_closed(X, res):
    omega = res.exact_minimizer()
    vals = omega.values
    if any(vals[X.rel_mask(omega.degree, res.rel)] != 0):
        return False
    if omega.degree == X.dimension:
        return True
    return all(v == 0 for v in coboundary(X, omega).values)


def test_criterion_05_p_harmonicity():
    failures, count, worst = [], 0, 0.0
    scenes = {name: sc for name, sc, _ in duality_scenes()}
    for name, p, rep, _ in duality_reports():
        X = scenes[name].complex
        for res in (rep.result_p, rep.result_q):
            count += 1
            ratio = res.residual / res.initial_residual if res.initial_residual else 0.0
            worst = max(worst, ratio)
            if not res.converged or ratio > 1e-8:
                failures.append(f"{name} p={res.p}: residual ratio {ratio:.2e}")
            if not _exactly_closed(X, res):
                failures.append(f"{name} p={res.p}: minimizer not exactly closed")
    _verdict(5, failures, f"{count} minimizers exactly closed, max residual ratio {worst:.1e}")


def test_criterion_06_classical_upper_bound():
    failures, worst = [], -np.inf
    scenes = [("n=2 k=1 16x16", lohvansuu_cube(2, 1, 16)),
              ("n=3 k=1 8^3", lohvansuu_cube(3, 1, 8)),
              ("n=3 k=2 6^3", lohvansuu_cube(3, 2, 6))]
    for name, sc in scenes:
        A, B = sc.featured_classes["A"], sc.featured_classes["B"]
        for p in PS:
            rep = check_corollary(sc.complex, A, B, p, forms=True)
            worst = max(worst, rep.product_upper)
            if rep.product_upper > 1 + 1e-6:
                failures.append(f"{name} p={p}: upper product {rep.product_upper!r}")
            for r in (rep.result_p, rep.result_q):
                if r.certified_length < 1 - 1e-9:
                    failures.append(f"{name} p={p}: uncertified density")
    sq = lohvansuu_cube(2, 1, 16)
    rep = check_corollary(sq.complex, sq.featured_classes["A"], sq.featured_classes["B"], 2.0)
    for which, val in (("upper", rep.product_upper), ("lower", rep.product_lower)):
        if abs(val - 1.0) > 1e-6:
            failures.append(f"square p=q=2: {which} product {val!r}")
    _verdict(6, failures, f"max upper product {worst:.12f}; square p=q=2 product in "
                          f"[{rep.product_lower:.9f}, {rep.product_upper:.9f}]")


def test_criterion_07_freedman_he_separation():
    dual, cor, elapsed = freedman_he_run()
    failures = []
    if not dual.converged or abs(dual.product - 1.0) > 1e-3:
        failures.append(f"dMod product {dual.product!r}")
    for r in (cor.result_p, cor.result_q):
        if r.certified_length < 1 - 1e-9:
            failures.append(f"classical density certified length {r.certified_length!r}")
    if not cor.product_upper < 0.9:
        failures.append(f"certified classical product {cor.product_upper!r} not < 0.9")
    if elapsed >= 600.0:
        failures.append(f"runtime {elapsed:.0f}s >= 600s")
    _verdict(7, failures, f"eps=0.05 p=q=2: classical product <= {cor.product_upper:.4f}, "
                          f"dMod product {dual.product:.9f}, {elapsed:.0f}s")


def _characterization_scenes():
    t = flat_torus((1.0, 1.0), 6)
    t3 = flat_torus((1.0, 1.0, 1.0), 3)
    lo = lohvansuu_cube(2, 1, 5)
    lo3 = lohvansuu_cube(3, 2, 3)
    cy = cylinder((1.0,), 1.0, 5)
    kb = klein_bottle(4)
    return [("torus2", t.complex, 1, None), ("torus3", t3.complex, 2, None),
            ("lohvansuu2", lo.complex, 1, "D"), ("lohvansuu3 k=2", lo3.complex, 2, "D"),
            ("cylinder", cy.complex, 1, "D"), ("klein", kb.complex, 1, None)]


def test_criterion_08_characterization_suite():
    rng = np.random.default_rng(2024)
    failures, total = [], 0
    for name, X, k, rel in _characterization_scenes():
        H = relative_homology(X, k, rel)
        duals = [dual_basis_cocycle(X, H.homology_class(list(row)))
                 for row in np.eye(H.betti, dtype=int)]
        for phi in duals:
            ch = characterize(X, phi, rel)
            if not (ch.consistent and ch.closed and not ch.exact):
                failures.append(f"{name}: generator dual not Closed-not-Exact")
        for i in range(1000):
            kind = i % 3
            tau = random_cochain(X, k - 1, rng, rel).values
            exact_part = coboundary(X, Cochain(k - 1, tau)).values
            if kind == 0:
                omega = random_cochain(X, k, rng, rel)
            elif kind == 1:
                omega = Cochain(k, exact_part)
            else:
                coef = rng.integers(1, 4) * rng.choice([-1, 1])
                phi = duals[rng.integers(len(duals))]
                omega = Cochain(k, coef * phi.values + exact_part)
            ch = characterize(X, omega, rel)
            total += 1
            if not ch.consistent:
                failures.append(f"{name} #{i}: closedness routes disagree")
                continue
            expected = ("open", "exact", "closed")[kind]
            got = "exact" if ch.exact else "closed" if ch.closed else "open"
            if got != expected:
                failures.append(f"{name} #{i}: {got} instead of {expected}")
            if ch.exact:
                resid = np.max(np.abs(coboundary(X, ch.primitive).values - omega.values))
                if ch.primitive_residual > 1e-10 or resid > 1e-10:
                    failures.append(f"{name} #{i}: primitive residual {resid:.1e}")
    _verdict(8, failures, f"{total} cochains over {total // 1000} scenes classified consistently")


def _exact_vals(X, k, rng):
    return to_exact(rng.integers(-4, 5, X.n_cells(k)).astype(np.int64))


def test_criterion_09_algebraic_invariants():
    rng = np.random.default_rng(7)
    failures = []
    complexes = [
        flat_torus((1.0, 2.0, 1.5), 3).complex,
        lohvansuu_cube(3, 1, 3).complex,
        klein_bottle(4).complex,
        build_complex(GridSpec([1.0] * 3, [3, 3, 3], ["none", "none", ("twisted", (0, 1))])),
        freedman_he(0.25, 4, 2).complex,
    ]
    for X in complexes:
        n = X.dimension
        for k in range(2, n + 1):
            if (boundary_matrix(X, k - 1) @ boundary_matrix(X, k)).count_nonzero():
                failures.append(f"boundary of boundary nonzero in degree {k}")
        for k in range(n - 1):
            dd = coboundary(X, coboundary(X, Cochain(k, _exact_vals(X, k, rng)))).values
            if any(v != 0 for v in dd):
                failures.append(f"coboundary squared nonzero in degree {k}")
        for k in range(n):
            omega = Cochain(k, _exact_vals(X, k, rng))
            sigma = Chain(k + 1, rng.integers(-3, 4, X.n_cells(k + 1)))
            bd = Chain(k, boundary_matrix(X, k + 1) @ sigma.values)
            if evaluate(omega, bd) != evaluate(coboundary(X, omega), sigma):
                failures.append(f"Stokes pairing not exact in degree {k}")

    mats = [rng.integers(-6, 7, (rng.integers(1, 7), rng.integers(1, 7))) for _ in range(200)]
    X = flat_torus((1.0, 1.0), 3).complex
    mats.append(boundary_matrix(X, 1).toarray())
    mats.append(boundary_matrix(X, 2).toarray())
    for A in mats:
        A = A.astype(object)
        U, S, V = smith_normal_form(A)
        if not (U.dot(A).dot(V) == S).all() or abs(int_det(U)) != 1 or abs(int_det(V)) != 1:
            failures.append(f"SNF not a unimodular factorization for shape {A.shape}")

    for sc, label in [(lohvansuu_cube(2, 1, 4), "A"), (lohvansuu_cube(3, 2, 3), "A"),
                      (cylinder((1.0, 1.0), 1.0, 3), "path")]:
        Y = sc.complex
        c = sc.featured_classes[label]
        k, n = c.degree, Y.dimension
        alpha = dual_basis_cocycle(Y, c, exact=True)
        H = relative_homology(Y, n - k, "E" if c.rel == "D" else "D")
        omega = Cochain(n - k, to_exact(H.cocycles[0].values))
        base = cup_pair(Y, alpha, omega)
        for _ in range(5):
            tD = _exact_vals(Y, k - 1, rng)
            tD[Y.rel_mask(k - 1, c.rel)] = 0
            tE = _exact_vals(Y, n - k - 1, rng)
            tE[Y.rel_mask(n - k - 1, H.rel)] = 0
            a2 = Cochain(k, alpha.values + coboundary(Y, Cochain(k - 1, tD)).values)
            w2 = Cochain(n - k, omega.values + coboundary(Y, Cochain(n - k - 1, tE)).values)
            if Fraction(cup_pair(Y, a2, w2)) != Fraction(base):
                failures.append(f"cup pairing changed within the class on {sc.name}")

    worst = 0.0
    Y = lohvansuu_cube(2, 1, 4).complex
    free = np.flatnonzero(~Y.rel_mask(0, "D"))
    B = boundary_matrix(Y, 1).T.tocsc()[:, free]
    for p in PS:
        w0 = rng.standard_normal(Y.n_cells(1)) + 0.5

        def phi(t, w0=w0, p=p):
            w = (w0 + B @ t) / Y.volume[1]
            return float(np.sum(Y.mass[1] * np.abs(w) ** p))

        g = objective_gradient(Y, Cochain(1, w0), p, "D")
        h = 1e-6
        fd = np.array([(phi(h * e) - phi(-h * e)) / (2 * h) for e in np.eye(len(free))])
        rel_err = np.linalg.norm(g - fd) / np.linalg.norm(g)
        worst = max(worst, rel_err)
        if rel_err > 1e-5:
            failures.append(f"gradient p={p}: relative error {rel_err:.1e}")
    _verdict(9, failures, f"exact identities on {len(complexes)} complexes, "
                          f"{len(mats)} SNF factorizations, gradient error {worst:.1e}")


def test_criterion_10_uniqueness_and_injectivity():
    rng = np.random.default_rng(99)
    failures, worst_restart, closest = [], 0.0, np.inf
    for sc, label, k in [(lohvansuu_cube(2, 1, 8), "A", 1), (flat_torus((2.0, 1.0), 8), "x", 1),
                         (lohvansuu_cube(3, 2, 4), "A", 2)]:
        X = sc.complex
        c = sc.featured_classes[label]
        for p in PS:
            base = minimize_dmod(X, c, p).minimizer.values
            for _ in range(3):
                tau0 = rng.standard_normal(X.n_cells(k - 1))
                tau0[X.rel_mask(k - 1, c.rel)] = 0
                other = minimize_dmod(X, c, p, tau0=tau0).minimizer.values
                dev = float(np.max(np.abs(other - base)))
                worst_restart = max(worst_restart, dev)
                if dev > 1e-6:
                    failures.append(f"{sc.name} p={p}: restart deviation {dev:.1e}")
    for sc in (flat_torus((2.0, 1.0), 8), flat_torus((1.0, 2.0, 1.5), 4)):
        X = sc.complex
        labels = [lab for lab in sc.featured_classes if len(lab) == 1]
        for p in PS:
            mins = {lab: minimize_dmod(X, sc.featured_classes[lab], p).minimizer.values
                    for lab in labels}
            for i, a in enumerate(labels):
                for b in labels[i + 1:]:
                    gap = float(np.max(np.abs(mins[a] - mins[b])))
                    closest = min(closest, gap)
                    if gap < 1e-3:
                        failures.append(f"{sc.name} p={p}: {a} and {b} minimizers {gap:.1e} apart")
    _verdict(10, failures, f"max restart deviation {worst_restart:.1e}, "
                           f"closest distinct generators {closest:.2f} apart")


def test_freedman_he_classical_bracket_is_ordered():
    _, cor, _ = freedman_he_run()
    assert cor.product_lower <= cor.product_upper + 1e-12

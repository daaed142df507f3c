"""Differential-form modulus: minimizers, dual forms and the duality check.

dMod_p(c) is the minimum of Σ mass (|ω(f)|/vol_f)^p over relative cocycles ω
with ω(c) = 1. Writing ω = ω₀ + δτ + Σ_j s_j φ_j, where ω₀ is the
generator-dual cocycle of c and the φ_j span the cohomology directions
annihilating c, turns this into an unconstrained convex problem in (τ, s).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

from .dec import apply, cup_pair, hodge_star, lp_norm, lp_norm_p
from .errors import NoConvergence, SingularPairing, TorsionClass, UnsupportedBoundary
from .homology import (HomologyClass, dual_basis_cocycle, evaluate, is_torsion,
                       random_homologous, relative_homology)
from .mesh import Cochain, MetricComplex, boundary_matrix

log = logging.getLogger(__name__)


def complementary(rel):
    """Marking paired with ``rel`` by duality; absolute classes pair with rel E.

    An absolute class is treated as relative to an empty D, so the whole
    boundary is E (and on closed complexes E is empty).
    """
    return {"D": "E", "E": "D", None: "E"}[rel]


def conjugate(p: float) -> float:
    return p / (p - 1.0)


@dataclass
class SolverOptions:
    """Tolerances for ``minimize_dmod``.

    Attributes:
        tolerance: converged when the variational residual is at most
            ``tolerance`` times its value at the starting cocycle.
        max_iter: cap on Newton iterations over all smoothing stages.
        delta_start: first smoothing parameter, relative to the field scale.
        delta_end: last smoothing parameter for p < 2.
        cg_rtol: relative tolerance of the inner conjugate-gradient solves.
        strict: raise NoConvergence instead of returning an unconverged result.
        seed: seed for the randomized certificate representatives.
    """

    tolerance: float = 1e-8
    max_iter: int = 200
    delta_start: float = 1e-2
    delta_end: float = 1e-8
    cg_rtol: float = 1e-12
    cg_maxiter: int | None = None
    strict: bool = False
    seed: int = 0


@dataclass
class ModulusResult:
    """Outcome of a dMod_p minimization.

    Attributes:
        p: exponent.
        class_label: label of the homology class.
        value: Σ mass (|ω|/vol)^p at the minimizer (the modulus).
        minimizer: the minimizing cocycle ω.
        residual: variational residual ‖∇Φ‖ at the minimizer.
        initial_residual: the same quantity at the starting cocycle.
        iterations: Newton iterations used.
        converged: residual ≤ tolerance · initial_residual.
        certificate_evaluations: ω evaluated on randomized cycles in the class.
        tau: the (k-1)-cochain with ω = Σ coeffs_j φ_j + δτ.
        coeffs: coefficients over the integer cocycle basis.
        history: per-iteration (iteration, smoothing, objective, gradient norm).
    """

    p: float
    class_label: str
    value: float
    minimizer: Cochain
    residual: float
    initial_residual: float
    iterations: int
    converged: bool
    certificate_evaluations: list
    tau: np.ndarray = field(repr=False, default=None)
    coeffs: np.ndarray = field(repr=False, default=None)
    rel: str | None = None
    history: list = field(repr=False, default_factory=list)
    _cocycles: list = field(repr=False, default=None)
    _boundary: object = field(repr=False, default=None)

    def exact_minimizer(self) -> Cochain:
        """The minimizer rebuilt in rational arithmetic from (coeffs, τ).

        The floats stored in ``coeffs`` and ``tau`` are exact binary
        rationals, so the result is an exact cocycle whose float rounding is
        ``minimizer``.
        """
        k = self.minimizer.degree
        n_cells = len(self.minimizer.values)
        vals = np.empty(n_cells, dtype=object)
        vals[:] = Fraction(0)
        for coef, phi in zip(self.coeffs, self._cocycles):
            if coef:
                vals = vals + Fraction(float(coef)) * phi.values.astype(object)
        if k > 0 and self.tau is not None:
            tau = np.empty(len(self.tau), dtype=object)
            tau[:] = [Fraction(float(t)) for t in self.tau]
            vals = vals + apply(self._boundary.T, tau)
        return Cochain(k, vals)

    def to_json(self) -> dict:
        return {"p": self.p, "class": self.class_label, "value": self.value,
                "residual": self.residual, "initial_residual": self.initial_residual,
                "iterations": self.iterations, "converged": self.converged,
                "certificate_evaluations": list(self.certificate_evaluations)}


class _Problem:
    """ω(y) = ω₀ + A y with A = [δ restricted to free (k-1)-cells | Ψ]."""

    def __init__(self, X: MetricComplex, c: HomologyClass, p: float, omega0=None):
        self.X, self.c, self.p = X, c, p
        k = c.degree
        self.k = k
        H = c.summary
        self.cocycles = H.cocycles
        a = np.array([float(v) for v in c.free_coords])
        self.base_coeffs = a / np.dot(a, a)
        Phi = np.column_stack([phi.values.astype(float) for phi in self.cocycles])
        # cohomology directions with zero pairing against c
        self.null = scipy.linalg.null_space(a[None, :]) if len(a) > 1 else np.zeros((1, 0))
        if omega0 is None:
            self.omega0 = Phi @ self.base_coeffs
        else:
            self.omega0 = np.asarray(omega0.values, dtype=float)
        blocks = []
        if k > 0:
            self.free = np.flatnonzero(~X.rel_mask(k - 1, c.rel))
            blocks.append(boundary_matrix(X, k).T.tocsc()[:, self.free].astype(float))
        else:
            self.free = np.zeros(0, dtype=np.int64)
        self.n_tau = len(self.free)
        if self.null.shape[1]:
            blocks.append(sp.csc_matrix(Phi @ self.null))
        self.A = sp.hstack(blocks).tocsr() if blocks else sp.csr_matrix((len(self.omega0), 0))
        self.AT = self.A.T.tocsr()
        self.A2T = self.A.multiply(self.A).T.tocsr()
        self.m = X.mass[k]
        self.v = X.volume[k]
        self.scale = (self.value(self.omega0, 0.0) / float(np.sum(self.m))) ** (1.0 / p)
        # |x|^(p-1) is only Hölder at 0 for p < 2: rounding residue of size
        # 1e-16 in a vanishing cell would contribute 1e-8 to the gradient, so
        # the residual smooths at the floating-point resolution of the field
        self.delta_floor = 1e-12 * self.scale if p < 2 else 0.0

    def omega(self, y):
        return self.omega0 + self.A @ y

    def value(self, omega, delta):
        x = omega / self.v
        return float(np.sum(self.m * (x * x + delta * delta) ** (self.p / 2)))

    def grad_omega(self, omega, delta):
        x = omega / self.v
        s = x * x + delta * delta
        if delta == 0:
            return self.p * self.m * np.sign(x) * np.abs(x) ** (self.p - 1) / self.v
        return self.p * self.m * s ** (self.p / 2 - 1) * x / self.v

    def hess_omega(self, omega, delta):
        x = omega / self.v
        s = x * x + delta * delta
        p = self.p
        if delta == 0:
            return p * (p - 1) * self.m * np.abs(x) ** (p - 2) / self.v ** 2
        return p * self.m / self.v ** 2 * s ** (p / 2 - 2) * ((p - 1) * x * x + delta * delta)

    def residual(self, omega):
        return float(np.linalg.norm(self.AT @ self.grad_omega(omega, self.delta_floor)))

    def split(self, y):
        tau = np.zeros(self.X.n_cells(self.k - 1)) if self.k > 0 else None
        if self.k > 0:
            tau[self.free] = y[:self.n_tau]
        coeffs = self.base_coeffs + self.null @ y[self.n_tau:]
        return tau, coeffs


def _newton(prob: _Problem, y, delta, opts, target, budget, history, it0):
    """Damped Newton on the smoothed objective until ‖∇‖ ≤ target."""
    it = 0
    omega = prob.omega(y)
    stalled, f_prev, g_first = 0, np.inf, None
    while it < budget:
        g = prob.AT @ prob.grad_omega(omega, delta)
        gnorm = float(np.linalg.norm(g))
        f = prob.value(omega, delta)
        history.append((it0 + it, delta, f, gnorm))
        log.debug("newton it=%d delta=%.3e f=%.17g |g|=%.3e", it0 + it, delta, f, gnorm)
        if gnorm <= target or gnorm == 0.0:
            break
        # at the rounding floor the objective stops decreasing
        stalled = stalled + 1 if f >= f_prev - 1e-15 * abs(f_prev) else 0
        if stalled >= 3:
            break
        f_prev = f
        g_first = g_first or gnorm
        # inexact Newton: the forcing term shrinks with the gradient, which
        # keeps local convergence superlinear; p = 2 is one exact solve
        rtol = opts.cg_rtol if prob.p == 2 else max(opts.cg_rtol, min(0.1, gnorm / g_first))
        h = prob.hess_omega(omega, delta)
        diag = prob.A2T @ h
        mu = 1e-14 * float(np.max(diag)) if len(diag) else 0.0
        diag = diag + mu
        op = LinearOperator((len(y), len(y)),
                            matvec=lambda z: prob.AT @ (h * (prob.A @ z)) + mu * z)
        pre = LinearOperator((len(y), len(y)), matvec=lambda z: z / diag)
        step, _ = cg(op, -g, rtol=rtol, maxiter=opts.cg_maxiter or 10 * len(y) + 50,
                     M=pre)
        slope = float(g @ step)
        if slope >= 0:
            step, slope = -g / diag, -float(g @ (g / diag))
        Astep = prob.A @ step
        t = _line_search(prob, omega, Astep, delta, slope)
        it += 1
        if t == 0.0:
            break
        y = y + t * step
        omega = prob.omega(y)
    return y, it


def _line_search(prob: _Problem, omega, Astep, delta, slope) -> float:
    """Step length along a descent direction with |φ'(t)| ≤ 0.1 |φ'(0)|.

    φ(t) = Φ(ω + t·Aδ) is convex, so its derivative is monotone; the root is
    bracketed by doubling and then located by safeguarded 1D Newton steps.
    A plain backtracking rule stalls for p < 2, where the objective is close
    to homogeneous and the Newton step overshoots by a factor 1/(p-1).
    """
    def dphi(t):
        cand = omega + t * Astep
        return (float(Astep @ prob.grad_omega(cand, delta)),
                float(Astep @ (prob.hess_omega(cand, delta) * Astep)))

    goal = 0.1 * abs(slope)
    lo, hi = 0.0, None
    t = 1.0
    for _ in range(100):
        d1, d2 = dphi(t)
        if not np.isfinite(d1):
            hi = t
        elif abs(d1) <= goal:
            return t
        elif d1 < 0:
            lo = t
        else:
            hi = t
        if hi is None:
            t = 2.0 * t
            continue
        newton = t - d1 / d2 if np.isfinite(d1) and d2 > 0 else None
        t = newton if newton is not None and lo < newton < hi else 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * hi:
            break
    return lo


def minimize_dmod(X: MetricComplex, c: HomologyClass, p: float,
                  opts: SolverOptions | None = None, *, omega0: Cochain | None = None,
                  tau0: np.ndarray | None = None) -> ModulusResult:
    """Minimize Σ mass (|ω|/vol)^p over relative cocycles ω with ω(c) = 1.

    Args:
        X: the complex.
        c: non-torsion relative class; cocycles vanish on ``c.rel``.
        p: exponent in (1, ∞).
        opts: solver options.
        omega0: alternative starting cocycle (must satisfy ω₀(c) = 1).
        tau0: starting (k-1)-cochain added as δτ₀ (for restart tests).

    Raises:
        TorsionClass: c is zero in real homology.
        NoConvergence: only with ``opts.strict``.
    """
    opts = opts or SolverOptions()
    if not p > 1:
        raise ValueError("p must exceed 1")
    if is_torsion(c):
        raise TorsionClass("dMod is undefined for torsion or zero classes")
    prob = _Problem(X, c, p, omega0)
    y = np.zeros(prob.A.shape[1])
    if tau0 is not None and prob.k > 0:
        y[:prob.n_tau] = np.asarray(tau0, dtype=float)[prob.free]
    r0 = prob.residual(prob.omega0)
    history = []
    iters = 0
    target = opts.tolerance * r0
    scale = prob.scale
    if p == 2:
        stages = [0.0]
    else:
        stages = [scale * 10.0 ** e for e in
                  range(int(round(np.log10(opts.delta_start))),
                        int(round(np.log10(opts.delta_end))) - 1, -2)]
    for j, delta in enumerate(stages):
        last = j == len(stages) - 1
        stage_target = 0.0 if last else max(target, 1e-3 * r0 * (delta / scale))
        y, used = _newton(prob, y, delta, opts, stage_target, opts.max_iter - iters,
                          history, iters)
        iters += used
    omega = prob.omega(y)
    res = prob.residual(omega)
    # for p < 2 keep shrinking the smoothing while the residual is above target
    delta = stages[-1]
    while p < 2 and res > target and iters < opts.max_iter and delta > prob.delta_floor:
        delta *= 1e-2
        y, used = _newton(prob, y, delta, opts, target * 1e-2, opts.max_iter - iters,
                          history, iters)
        iters += used
        omega = prob.omega(y)
        res = prob.residual(omega)
    tau, coeffs = prob.split(y)
    if omega0 is not None:
        coeffs = None
    minimizer = Cochain(prob.k, omega)
    rng = np.random.default_rng(opts.seed)
    rep = c.representative()
    certs = [evaluate(minimizer, random_homologous(X, rep, c.rel, rng)) for _ in range(3)]
    converged = res <= target or r0 == 0.0
    result = ModulusResult(p=p, class_label=c.label, value=prob.value(omega, 0.0),
                           minimizer=minimizer, residual=res, initial_residual=r0,
                           iterations=iters, converged=bool(converged),
                           certificate_evaluations=certs, tau=tau, coeffs=coeffs,
                           rel=c.rel, history=history, _cocycles=prob.cocycles,
                           _boundary=boundary_matrix(X, prob.k) if prob.k > 0 else None)
    log.info("dMod_%g(%s) = %.17g residual %.3e/%.3e iterations %d converged %s",
             p, c.label, result.value, res, r0, iters, converged)
    if not converged and opts.strict:
        raise NoConvergence(f"residual {res:.3e} after {iters} iterations", result)
    return result


def objective(X: MetricComplex, c: HomologyClass, p: float):
    """Φ(τ) and its gradient for τ on the unmarked (k-1)-cells (for testing)."""
    prob = _Problem(X, c, p)

    def value(tau):
        y = np.zeros(prob.A.shape[1])
        y[:prob.n_tau] = tau
        return prob.value(prob.omega(y), 0.0)

    def grad(tau):
        y = np.zeros(prob.A.shape[1])
        y[:prob.n_tau] = tau
        g = prob.AT @ prob.grad_omega(prob.omega(y), 0.0)
        return g[:prob.n_tau]

    return value, grad, prob.n_tau


# --- dual form and dual class ------------------------------------------------

def dual_form(X: MetricComplex, omega: Cochain, p: float) -> Cochain:
    """ζ = (-1)^{k(n-k)} |ω|^{p-2} ⋆ω / ‖ω‖_p^p on a periodic grid.

    Raises:
        UnsupportedBoundary: the grid is not fully periodic and uniform.
    """
    k = omega.degree
    n = X.dimension
    w = omega.values / X.volume[k]
    with np.errstate(divide="ignore", invalid="ignore"):
        weighted = np.abs(w) ** (p - 2) * omega.values if p != 2 else omega.values.copy()
    weighted[w == 0] = 0.0
    norm_p = lp_norm_p(X, omega, p)
    star = hodge_star(X, Cochain(k, weighted))
    return Cochain(n - k, (-1) ** (k * (n - k)) * star.values / norm_p)


def inverse_dual_form(X: MetricComplex, zeta: Cochain, q: float) -> Cochain:
    """ω = |ζ|^{q-2} ⋆ζ / ‖ζ‖_q^q, the inverse of ``dual_form``."""
    j = zeta.degree
    z = zeta.values / X.volume[j]
    with np.errstate(divide="ignore", invalid="ignore"):
        weighted = np.abs(z) ** (q - 2) * zeta.values if q != 2 else zeta.values.copy()
    weighted[z == 0] = 0.0
    star = hodge_star(X, Cochain(j, weighted), dual=True)
    return Cochain(star.degree, star.values / lp_norm_p(X, zeta, q))


def poincare_dual(X: MetricComplex, c: HomologyClass):
    """Cocycle α of degree n-k, vanishing on the complementary marking,
    with cup_pair(α, φ) = φ(c) for every relative cocycle φ of c's degree.

    Returns:
        (α, z, G): α = Σ z_i ψ_i over the complementary cocycle basis and
        G[i, l] = cup_pair(ψ_i, φ_l).
    """
    k, n = c.degree, X.dimension
    Hc = c.summary
    Hd = relative_homology(X, n - k, complementary(c.rel))
    if Hd.betti != Hc.betti:
        raise SingularPairing(f"Betti numbers {Hc.betti} and {Hd.betti} differ")
    G = np.array([[cup_pair(X, psi, phi) for phi in Hc.cocycles] for psi in Hd.cocycles],
                 dtype=float).reshape(Hd.betti, Hc.betti)
    if Hd.betti and abs(np.linalg.det(G)) < 1e-9:
        raise SingularPairing("intersection matrix is singular")
    a = np.array([float(v) for v in c.free_coords])
    z = np.linalg.solve(G.T, a) if Hd.betti else np.zeros(0)
    alpha = np.zeros(X.n_cells(n - k))
    for zi, psi in zip(z, Hd.cocycles):
        alpha += zi * psi.values.astype(float)
    return Cochain(n - k, alpha), z, G


def identify_dual_class(X: MetricComplex, omega: Cochain, rel) -> np.ndarray:
    """Coordinates of the class Poincaré dual to [(-1)^{k(n-k)} ω].

    ``omega`` is a relative k-cocycle vanishing on ``rel``; the returned
    coordinates refer to the generators of H_{n-k}(M, complementary(rel)).

    Raises:
        SingularPairing: the cocycle/generator pairing matrix is singular.
    """
    k, n = omega.degree, X.dimension
    Hd = relative_homology(X, n - k, complementary(rel))
    P = np.array(Hd.cohomology.pairing_matrix, dtype=float).reshape(Hd.betti, Hd.betti)
    if Hd.betti == 0:
        raise SingularPairing("complementary homology group has rank 0")
    if abs(np.linalg.det(P)) < 1e-9:
        raise SingularPairing("cocycle/generator pairing matrix is singular")
    sign = (-1) ** (k * (n - k))
    b = np.array([sign * cup_pair(X, omega, psi) for psi in Hd.cocycles])
    return np.linalg.solve(P, b)


@dataclass
class DualityReport:
    """Result of checking dMod_p(c)^{1/p} · dMod_q(c')^{1/q} = 1.

    Attributes:
        p, q: conjugate exponents.
        dmod_p_c, dmod_q_cprime: the two moduli.
        product: dmod_p_c^{1/p} · dmod_q_cprime^{1/q}.
        cprime_coordinates: coordinates of c' in the complementary generator basis.
        pairing_check: PD(c) evaluated on c' (target 1).
        integerness_gap: distance of the coordinates to integers when both
            groups are infinite cyclic, else None.
        reciprocity: ‖ω‖_p·‖ζ‖_q for the cellwise dual form (periodic grids only).
        dual_form_error: relative L² distance between the cellwise dual form
            and the computed q-minimizer (periodic grids only).
    """

    p: float
    q: float
    dmod_p_c: float
    dmod_q_cprime: float
    product: float
    cprime_coordinates: list
    pairing_check: float
    integerness_gap: float | None
    result_p: ModulusResult = field(repr=False, default=None)
    result_q: ModulusResult = field(repr=False, default=None)
    reciprocity: float | None = None
    dual_form_error: float | None = None

    @property
    def converged(self) -> bool:
        return self.result_p.converged and self.result_q.converged

    def to_json(self) -> dict:
        return {"p": self.p, "q": self.q, "dmod_p_c": self.dmod_p_c,
                "dmod_q_cprime": self.dmod_q_cprime, "product": self.product,
                "cprime_coordinates": list(map(float, self.cprime_coordinates)),
                "pairing_check": self.pairing_check,
                "integerness_gap": self.integerness_gap,
                "reciprocity": self.reciprocity, "dual_form_error": self.dual_form_error,
                "dmod_p": self.result_p.to_json(), "dmod_q": self.result_q.to_json()}


def verify_duality(X: MetricComplex, c: HomologyClass, p: float,
                   opts: SolverOptions | None = None) -> DualityReport:
    """Solve both modulus problems and check the product law."""
    q = conjugate(p)
    if c.rel is None and X.has_marking("D"):
        raise UnsupportedBoundary("absolute classes need an empty D marking; use rel='D'")
    res_p = minimize_dmod(X, c, p, opts)
    y = identify_dual_class(X, res_p.minimizer, c.rel)
    n, k = X.dimension, c.degree
    Hd = relative_homology(X, n - k, complementary(c.rel))
    cprime = Hd.homology_class([float(v) for v in y], label=f"PD({c.label})")
    res_q = minimize_dmod(X, cprime, q, opts)
    product = res_p.value ** (1 / p) * res_q.value ** (1 / q)
    _, z, _ = poincare_dual(X, c)
    P = np.array(Hd.cohomology.pairing_matrix, dtype=float).reshape(Hd.betti, Hd.betti)
    pairing = float(z @ P @ y)
    gap = None
    if c.summary.betti == 1 and Hd.betti == 1 and not c.summary.torsion_invariants \
            and not Hd.torsion_invariants:
        gap = float(np.max(np.abs(y - np.round(y))))
    report = DualityReport(p, q, res_p.value, res_q.value, product, list(y), pairing, gap,
                           res_p, res_q)
    if X.is_periodic and X.is_uniform:
        zeta = dual_form(X, res_p.minimizer, p)
        report.reciprocity = lp_norm(X, res_p.minimizer, p) * lp_norm(X, zeta, q)
        diff = np.linalg.norm(zeta.values - res_q.minimizer.values)
        report.dual_form_error = float(diff / np.linalg.norm(res_q.minimizer.values))
    log.info("duality p=%g product=%.17g pairing=%.17g", p, product, pairing)
    return report


__all__ = [
    "SolverOptions", "ModulusResult", "DualityReport", "minimize_dmod", "objective",
    "dual_form", "inverse_dual_form", "poincare_dual", "identify_dual_class",
    "verify_duality", "conjugate", "complementary",
]

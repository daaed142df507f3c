"""Discrete exterior calculus on metric cubical complexes.

Cochain values are integrals over cells, so the pointwise norm of a k-cochain
on cell f is |ω(f)|/vol_k(f). Arrays of dtype ``object`` (Fractions or ints)
are handled exactly; float arrays use sparse matrix products.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import lsmr

from .errors import DegreeMismatch, TopDegree, UnsupportedBoundary
from .homology import evaluate, relative_homology
from .mesh import Chain, Cochain, MetricComplex, _axes, _combinations, boundary_matrix


@dataclass(frozen=True)
class PointwiseField:
    """Per-cell pointwise norm samples |ω(f)|/vol_k(f)."""

    degree: int
    values: np.ndarray


def _is_exact(values: np.ndarray) -> bool:
    return values.dtype == object


def apply(mat: sp.spmatrix, values: np.ndarray) -> np.ndarray:
    """Sparse matrix times vector, exact for object arrays."""
    if not _is_exact(values):
        return mat @ values
    coo = mat.tocoo()
    out = np.empty(mat.shape[0], dtype=object)
    out[:] = 0
    for r, c, v in zip(coo.row, coo.col, coo.data):
        x = values[c]
        if x:
            out[r] += int(v) * x
    return out


def pointwise(X: MetricComplex, omega: Cochain) -> PointwiseField:
    return PointwiseField(omega.degree, np.abs(omega.values.astype(float)) / X.volume[omega.degree])


def lp_norm(X: MetricComplex, omega: Cochain, p: float) -> float:
    """(Σ_f mass_f (|ω(f)|/vol_f)^p)^{1/p}."""
    w = pointwise(X, omega).values
    return float(np.sum(X.mass[omega.degree] * w ** p) ** (1.0 / p))


def lp_norm_p(X: MetricComplex, omega: Cochain, p: float) -> float:
    """The p-th power of ``lp_norm`` (the discrete ∫|ω|^p)."""
    w = pointwise(X, omega).values
    return float(np.sum(X.mass[omega.degree] * w ** p))


def coboundary(X: MetricComplex, omega: Cochain) -> Cochain:
    """δω = ∂_{k+1}ᵀ ω."""
    k = omega.degree
    if k >= X.dimension:
        raise TopDegree("no coboundary out of the top degree")
    return Cochain(k + 1, apply(boundary_matrix(X, k + 1).T, omega.values))


def boundary(X: MetricComplex, sigma: Chain) -> Chain:
    k = sigma.degree
    return Chain(k - 1, apply(boundary_matrix(X, k), sigma.values))


def _shuffle_sign(first: list[int], second: list[int]) -> int:
    seq = first + second
    inv = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inv % 2 else 1


def _star_map(X: MetricComplex, k: int):
    """Target ids, signs and volume ratios for ⋆ on primal k-cells."""
    key = ("star", k)
    if key in X._cache:
        return X._cache[key]
    if not X.is_periodic or not X.is_uniform:
        raise UnsupportedBoundary("Hodge star needs a fully periodic, uniform grid")
    n = X.dimension
    full = (1 << n) - 1
    h = np.array([s[0] for s in X.spacings])
    target = np.empty(X.n_cells(k), dtype=np.int64)
    sign = np.empty(X.n_cells(k), dtype=np.int64)
    ratio = np.empty(X.n_cells(k))
    for smask in _combinations(n, k):
        sel = np.flatnonzero(X.cell_axes[k] == smask)
        S = _axes(smask, n)
        comp = _axes(full & ~smask, n)
        idx = X.cell_index[k][sel].copy()
        for a in S:
            idx[:, a] += 1
        ids, sg = X.lookup(n - k, np.full(len(sel), full & ~smask), idx)
        target[sel] = ids
        sign[sel] = sg * _shuffle_sign(S, comp)
        ratio[sel] = np.prod(h[comp]) / np.prod(h[S])
    X._cache[key] = (target, sign, ratio)
    return X._cache[key]


def hodge_star(X: MetricComplex, omega: Cochain, dual: bool = False) -> Cochain:
    """Diagonal Hodge star on a fully periodic uniform grid.

    The staggered dual complex is identified with the primal one by the
    half-cell translation: the dual of primal cell (S, i) is stored on primal
    cell (Sᶜ, i + e_S). With ``dual=False`` the input is a primal k-cochain
    and the output a dual (n-k)-cochain; ``dual=True`` maps back, so that
    applying both gives (-1)^{k(n-k)} times the identity.

    Raises:
        UnsupportedBoundary: the complex has boundary, twists or varying spacing.
    """
    n = X.dimension
    k = omega.degree
    if not dual:
        target, sign, ratio = _star_map(X, k)
        out = np.zeros(X.n_cells(n - k))
        out[target] = sign * omega.values.astype(float) * ratio
        return Cochain(n - k, out)
    # omega is a dual k-cochain; its cells are duals of primal (n-k)-cells
    target, sign, ratio = _star_map(X, n - k)
    vals = omega.values.astype(float)[target]
    # ⋆ on the dual side carries sign(T, Tᶜ) where T spans the dual cell
    back = sign * _swap_signs(X, n - k)
    return Cochain(n - k, back * vals / ratio)


def _swap_signs(X: MetricComplex, k: int) -> np.ndarray:
    """(-1)^{k(n-k)} relates sign(S, Sᶜ) and sign(Sᶜ, S)."""
    n = X.dimension
    return np.full(X.n_cells(k), -1 if (k * (n - k)) % 2 else 1)


def _cup_matrix(X: MetricComplex, k: int) -> sp.csr_matrix:
    """Bilinear form W with cup_pair(α, ω) = αᵀ W ω."""
    key = ("cup", k)
    if key in X._cache:
        return X._cache[key]
    n = X.dimension
    full = (1 << n) - 1
    top = X.cell_index[n]
    rows, cols, vals = [], [], []
    for smask in _combinations(n, k):
        S = _axes(smask, n)
        comp = _axes(full & ~smask, n)
        front, s1 = X.lookup(k, np.full(len(top), smask), top)
        idx = top.copy()
        for a in S:
            idx[:, a] += 1
        back, s2 = X.lookup(n - k, np.full(len(top), full & ~smask), idx)
        rows.append(front)
        cols.append(back)
        vals.append(_shuffle_sign(S, comp) * s1 * s2)
    W = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(X.n_cells(k), X.n_cells(n - k))).tocsr()
    W.sum_duplicates()
    X._cache[key] = W
    return W


def cup_pair(X: MetricComplex, alpha: Cochain, omega: Cochain, *, rel_alpha=None,
             rel_omega=None, check: bool = False):
    """Cubical cup product of α (degree k) and ω (degree n-k) on [M].

    Σ over n-cells C and k-subsets S of axes of
    sign(S, Sᶜ)·α(front S-face of C)·ω(back Sᶜ-face of C).

    With ``check=True`` a warning is issued when the inputs are not cocycles
    vanishing on their marked subcomplexes (the value then depends on the
    representatives).
    """
    n = X.dimension
    k = alpha.degree
    if omega.degree != n - k:
        raise DegreeMismatch(f"degrees {k} and {omega.degree} do not add up to {n}")
    if check:
        for form, rel in ((alpha, rel_alpha), (omega, rel_omega)):
            bad = form.degree < n and np.any(np.abs(coboundary(X, form).values.astype(float)) > 1e-9)
            bad = bad or np.any(np.abs(form.values[X.rel_mask(form.degree, rel)].astype(float)) > 1e-9)
            if bad:
                warnings.warn("cup_pair input is not a relative cocycle", RuntimeWarning)
    W = _cup_matrix(X, k)
    if _is_exact(alpha.values) or _is_exact(omega.values):
        Wo = apply(W, omega.values)
        total = 0
        for i in np.flatnonzero(alpha.values):
            total += alpha.values[i] * Wo[i]
        return total
    return float(alpha.values @ (W @ omega.values))


def _free_columns(X: MetricComplex, k: int, rel) -> np.ndarray:
    return np.flatnonzero(~X.rel_mask(k, rel))


def p_harmonic_residual(X: MetricComplex, omega: Cochain, p: float, rel=None) -> float:
    """‖∇_τ Φ(0)‖₂ for Φ(τ) = Σ mass (|ω + δτ|/vol)^p, τ off the marked cells."""
    if omega.degree == 0:
        return 0.0
    return float(np.linalg.norm(objective_gradient(X, omega, p, rel)))


def objective_gradient(X: MetricComplex, omega: Cochain, p: float, rel=None) -> np.ndarray:
    """Gradient of τ ↦ Σ mass (|ω + δτ|/vol)^p at τ = 0 over unmarked (k-1)-cells."""
    k = omega.degree
    v = X.volume[k]
    w = omega.values.astype(float) / v
    g_omega = p * X.mass[k] * np.sign(w) * np.abs(w) ** (p - 1) / v
    B = boundary_matrix(X, k).T.tocsc()[:, _free_columns(X, k - 1, rel)]
    return B.T @ g_omega


@dataclass
class Characterization:
    """Closed/exact verdict for a cochain with certificates.

    Attributes:
        closed: both closedness tests agree on closed.
        exact: closed and pairs to zero with every homology generator.
        closed_by_pairing: verdict from evaluating on ∂(cells) and marked cells.
        closed_by_coboundary: verdict from δω = 0 and ω|_R = 0.
        violated_chain: a boundary or marked chain with nonzero pairing.
        generator_pairings: values on the free homology generators.
        primitive: τ with δτ = ω (vanishing on marked cells) when exact.
        primitive_residual: max-norm of δτ - ω.
    """

    closed: bool
    exact: bool
    closed_by_pairing: bool
    closed_by_coboundary: bool
    violated_chain: Chain | None = None
    generator_pairings: list | None = None
    primitive: Cochain | None = None
    primitive_residual: float | None = None

    @property
    def consistent(self) -> bool:
        return self.closed_by_pairing == self.closed_by_coboundary


def _geometric_boundary_chains(X: MetricComplex, k: int) -> sp.csr_matrix:
    """Rows are ∂C for each k-cell C, assembled from cell geometry.

    Independent of the stored incidence matrices: faces are located by
    coordinate lookup with the orientation rule Σ_t (-1)^t (upper - lower).
    """
    key = ("geo_boundary", k)
    if key in X._cache:
        return X._cache[key]
    n = X.dimension
    rows, cols, vals = [], [], []
    for c in range(X.n_cells(k)):
        mask = int(X.cell_axes[k][c])
        for t, j in enumerate(_axes(mask, n)):
            for shift, coef in ((1, (-1) ** t), (0, -(-1) ** t)):
                idx = X.cell_index[k][c].copy()
                idx[j] += shift
                ids, sg = X.lookup(k - 1, [mask & ~(1 << j)], idx[None, :])
                rows.append(c)
                cols.append(int(ids[0]))
                vals.append(coef * int(sg[0]))
    M = sp.coo_matrix((vals, (rows, cols)), shape=(X.n_cells(k), X.n_cells(k - 1))).tocsr()
    M.sum_duplicates()
    M.eliminate_zeros()
    X._cache[key] = M
    return M


def _is_zero(x, tol) -> bool:
    if isinstance(x, (Fraction, int, np.integer)):
        return x == 0
    return abs(x) <= tol


def characterize(X: MetricComplex, omega: Cochain, rel=None, tol: float = 1e-12) -> Characterization:
    """Decide whether ω is closed and exact relative to the marked subcomplex.

    Floating-point inputs are compared against ``tol`` times max|ω|; object
    arrays are tested exactly.
    """
    k = omega.degree
    vals = omega.values
    exact_mode = _is_exact(vals)
    scale = 0.0 if exact_mode else float(np.max(np.abs(vals), initial=0.0))
    thr = tol * max(scale, 1.0)
    mask = X.rel_mask(k, rel)

    # route 1: explicit chains ∂C (geometric) and marked cells
    violated = None
    if k < X.dimension:
        chains = _geometric_boundary_chains(X, k + 1)
        pair = apply(chains, vals)
        bad = [i for i in range(len(pair)) if not _is_zero(pair[i], thr)]
        if bad:
            row = chains.getrow(bad[0]).toarray().ravel().astype(np.int64)
            violated = Chain(k, row)
    if violated is None:
        bad = [i for i in np.flatnonzero(mask) if not _is_zero(vals[i], thr)]
        if bad:
            row = np.zeros(X.n_cells(k), dtype=np.int64)
            row[bad[0]] = 1
            violated = Chain(k, row)
    by_pairing = violated is None

    # route 2: coboundary through the incidence matrix, plus trace on R
    by_cob = True
    if k < X.dimension:
        d = coboundary(X, omega).values
        by_cob = all(_is_zero(x, thr) for x in d)
    by_cob = by_cob and all(_is_zero(x, thr) for x in vals[mask])

    closed = by_pairing and by_cob
    result = Characterization(closed, False, by_pairing, by_cob, violated)
    if not closed:
        return result
    H = relative_homology(X, k, rel)
    pairings = [evaluate(omega, g) for g in H.free_generators]
    result.generator_pairings = pairings
    if not all(_is_zero(x, thr) for x in pairings):
        return result
    result.exact = True
    if k == 0:
        result.primitive = None
        result.primitive_residual = float(np.max(np.abs(vals.astype(float)), initial=0.0))
        return result
    free = _free_columns(X, k - 1, rel)
    B = boundary_matrix(X, k).T.tocsc()[:, free].astype(float)
    target = vals.astype(float)
    sol = lsmr(B, target, atol=1e-16, btol=1e-16, maxiter=20 * B.shape[1] + 100)[0]
    # one refinement pass on the residual
    sol = sol + lsmr(B, target - B @ sol, atol=1e-16, btol=1e-16,
                     maxiter=20 * B.shape[1] + 100)[0]
    tau = np.zeros(X.n_cells(k - 1))
    tau[free] = sol
    result.primitive = Cochain(k - 1, tau)
    result.primitive_residual = float(np.max(np.abs(B @ sol - target), initial=0.0))
    return result


def random_cochain(X: MetricComplex, k: int, rng: np.random.Generator, rel=None,
                   integer: bool = False) -> Cochain:
    """Random k-cochain vanishing on the marked subcomplex."""
    if integer:
        vals = rng.integers(-5, 6, X.n_cells(k)).astype(np.int64)
    else:
        vals = rng.standard_normal(X.n_cells(k))
    vals[X.rel_mask(k, rel)] = 0
    return Cochain(k, vals)


def to_exact(values: np.ndarray) -> np.ndarray:
    out = np.empty(len(values), dtype=object)
    out[:] = [Fraction(v) if isinstance(v, float) else Fraction(int(v)) for v in values.tolist()]
    return out


__all__ = [
    "PointwiseField", "Characterization", "pointwise", "lp_norm", "lp_norm_p",
    "coboundary", "boundary", "hodge_star", "cup_pair", "p_harmonic_residual",
    "objective_gradient", "characterize", "random_cochain", "apply", "to_exact",
]

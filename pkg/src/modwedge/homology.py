"""Exact relative homology of marked cubical complexes.

Homology of the quotient complex C(M)/C(R), where R is the closed marked
subcomplex, is computed in two stages. A sparse reduction first cancels pairs
of cells joined by a unit incidence coefficient (this shrinks a grid complex to
a handful of cells). Smith normal form of the small reduced complex then gives
Betti numbers, torsion, generators and a dual integer cocycle basis, which are
transported back to the original cells through the recorded reduction steps.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DegreeMismatch, TorsionClass
from .mesh import Chain, Cochain, MetricComplex, boundary_matrix
from .snf import diagonal, smith_normal_form


@dataclass(frozen=True)
class CohomologyBasis:
    """Integer cocycles dual to the free homology generators.

    ``pairing_matrix[i][j]`` is the evaluation of cocycle i on generator j.
    """

    degree: int
    cocycles: list
    pairing_matrix: np.ndarray


@dataclass
class HomologySummary:
    """Relative homology H_k(M, R) of a complex.

    Attributes:
        degree: k.
        rel: ``None``, ``"D"`` or ``"E"`` (the closed subcomplex quotiented out).
        ring: ``"Z"`` or ``"R"``.
        betti: rank of the free part.
        torsion_invariants: orders of the cyclic torsion summands (empty over R).
        generators: integer relative cycles, free generators first.
        cohomology: integer cocycles dual to the free generators.
        rank_in: rank of the boundary map into degree k.
        rank_out: rank of the boundary map out of degree k.
        n_cells: number of k-cells outside the marked subcomplex.
    """

    degree: int
    rel: str | None
    ring: str
    betti: int
    torsion_invariants: list
    generators: list
    cohomology: CohomologyBasis
    rank_in: int
    rank_out: int
    n_cells: int
    _complex: MetricComplex = field(repr=False, default=None)

    @property
    def free_generators(self) -> list:
        return self.generators[:self.betti]

    @property
    def cocycles(self) -> list:
        return self.cohomology.cocycles

    def homology_class(self, coords, label: str = "") -> "HomologyClass":
        coords = tuple(coords)
        if len(coords) < self.betti:
            raise DegreeMismatch("need one coordinate per free generator")
        coords = coords + (0,) * (len(self.generators) - len(coords))
        return HomologyClass(self, coords, label)

    def generator(self, i: int, label: str = "") -> "HomologyClass":
        coords = [0] * len(self.generators)
        coords[i] = 1
        return HomologyClass(self, tuple(coords), label)

    def coordinates_of(self, chain: Chain) -> list:
        """Free coordinates of a relative cycle, from the dual cocycles."""
        if chain.degree != self.degree:
            raise DegreeMismatch(f"chain degree {chain.degree} != {self.degree}")
        return [evaluate(phi, chain) for phi in self.cocycles]

    def class_of(self, chain: Chain, label: str = "") -> "HomologyClass":
        """Class of an integer relative cycle (torsion component not tracked)."""
        coords = [int(round(v)) if _is_intlike(v) else v for v in self.coordinates_of(chain)]
        return self.homology_class(coords, label)


def _is_intlike(v) -> bool:
    return float(v) == round(float(v))


@dataclass(frozen=True)
class HomologyClass:
    """A relative homology class in generator coordinates.

    Coordinates may be integers or reals; entries past ``summary.betti``
    multiply torsion generators.
    """

    summary: HomologySummary
    coords: tuple
    label: str = ""

    @property
    def degree(self) -> int:
        return self.summary.degree

    @property
    def rel(self) -> str | None:
        return self.summary.rel

    @property
    def free_coords(self) -> tuple:
        return self.coords[:self.summary.betti]

    @property
    def is_integral(self) -> bool:
        return all(isinstance(c, (int, np.integer)) or _is_intlike(c) for c in self.coords)

    def representative(self) -> Chain:
        """Σ coords_i · generator_i (exact for integer coordinates)."""
        gens = self.summary.generators
        n = self.summary._complex.n_cells(self.degree)
        if self.is_integral:
            vals = np.zeros(n, dtype=np.int64)
            for c, g in zip(self.coords, gens):
                vals = vals + int(round(float(c))) * g.values
        else:
            vals = np.zeros(n)
            for c, g in zip(self.coords, gens):
                vals = vals + float(c) * g.values
        return Chain(self.degree, vals)

    def scaled(self, m) -> "HomologyClass":
        return HomologyClass(self.summary, tuple(m * c for c in self.coords), self.label)


class _Reducer:
    """Cancels unit-coefficient cell pairs in the complex truncated around degree k."""

    def __init__(self, X: MetricComplex, k: int, rel):
        n = X.dimension
        self.k = k
        self.alive = {}
        for d in (k - 1, k, k + 1):
            if 0 <= d <= n:
                self.alive[d] = set(np.flatnonzero(~X.rel_mask(d, rel)).tolist())
        self.col, self.row = {}, {}
        for d in (k, k + 1):
            if 1 <= d <= n:
                self._load(X, d)
        self.log_chain = []    # pivots in ∂_k: (a, b, u, {c: λ_c})
        self.log_cochain = []  # pivots in ∂_{k+1}: (a, b, u, {e: μ_e})
        self.pivots = {d: 0 for d in self.col}

    def _load(self, X, d):
        mat = boundary_matrix(X, d).tocsc()
        rows_alive = self.alive[d - 1]
        col, row = {}, {a: {} for a in rows_alive}
        indptr, indices, data = mat.indptr, mat.indices, mat.data
        for b in sorted(self.alive[d]):
            entries = {}
            for t in range(indptr[b], indptr[b + 1]):
                a = int(indices[t])
                if a in rows_alive:
                    entries[a] = int(data[t])
                    row[a][b] = int(data[t])
            col[b] = entries
        self.col[d], self.row[d] = col, row

    def _cost(self, d, a, b):
        return (len(self.row[d][a]) - 1) * (len(self.col[d][b]) - 1)

    def run(self):
        heap = []
        counter = 0
        for d in self.col:
            for b in sorted(self.col[d]):
                for a, v in sorted(self.col[d][b].items()):
                    if abs(v) == 1:
                        heap.append((self._cost(d, a, b), counter, d, a, b))
                        counter += 1
        heapq.heapify(heap)
        while heap:
            cost, _, d, a, b = heapq.heappop(heap)
            colb = self.col[d].get(b)
            if colb is None or abs(colb.get(a, 0)) != 1:
                continue
            cur = self._cost(d, a, b)
            if cur > cost:
                counter += 1
                heapq.heappush(heap, (cur, counter, d, a, b))
                continue
            for key in self._pivot(d, a, b):
                dd, aa, bb = key
                counter += 1
                heapq.heappush(heap, (self._cost(dd, aa, bb), counter, dd, aa, bb))

    def _pivot(self, d, a, b):
        col, row = self.col[d], self.row[d]
        colb = col.pop(b)
        u = colb[a]
        for e in colb:
            row[e].pop(b, None)
        rowa = row.pop(a)
        touched = set()
        if d == self.k:
            self.log_chain.append((a, b, u, dict(rowa)))
        else:
            self.log_cochain.append((a, b, u, {e: m for e, m in colb.items() if e != a}))
        for c, lam in rowa.items():
            colc = col[c]
            f = -lam * u
            for e, mu in colb.items():
                if e == a:
                    colc.pop(a, None)
                    continue
                v = colc.get(e, 0) + f * mu
                if v:
                    colc[e] = v
                    row[e][c] = v
                    if abs(v) == 1:
                        touched.add((d, e, c))
                else:
                    colc.pop(e, None)
                    row[e].pop(c, None)
        # rows that became short may now offer cheap pivots
        for e in colb:
            if e != a and len(row[e]) <= 2:
                touched.update((d, e, c) for c, v in row[e].items() if abs(v) == 1)
        self.alive[d - 1].discard(a)
        self.alive[d].discard(b)
        self.pivots[d] += 1
        # the cancelled pair also disappears from the neighbouring boundary map
        if d == self.k + 1 and self.k in self.col:
            for e in self.col[self.k].pop(a, {}):
                rowe = self.row[self.k][e]
                rowe.pop(a, None)
                if len(rowe) <= 2:
                    touched.update((self.k, e, c) for c, v in rowe.items() if abs(v) == 1)
        if d == self.k and self.k + 1 in self.col:
            for c in self.row[self.k + 1].pop(b, {}):
                colc = self.col[self.k + 1][c]
                colc.pop(b, None)
                if len(colc) <= 4:
                    touched.update((self.k + 1, e, c) for e, v in colc.items() if abs(v) == 1)
        return sorted(touched)

    def dense(self, d):
        rows = sorted(self.alive.get(d - 1, ()))
        cols = sorted(self.alive.get(d, ()))
        ri = {a: i for i, a in enumerate(rows)}
        M = np.zeros((len(rows), len(cols)), dtype=object)
        M[...] = 0
        if d in self.col:
            for j, b in enumerate(cols):
                for a, v in self.col[d][b].items():
                    M[ri[a], j] = v
        return M

    def lift_chain(self, coeffs: dict) -> dict:
        x = dict(coeffs)
        for a, b, u, rowa in reversed(self.log_chain):
            s = sum(x.get(c, 0) * lam for c, lam in rowa.items())
            if s:
                x[b] = x.get(b, 0) - u * s
        return {c: v for c, v in x.items() if v}

    def lift_cochains(self, values: list[dict], n_cells: int) -> list[list]:
        phis = []
        for vals in values:
            phi = [0] * n_cells
            for c, v in vals.items():
                phi[c] = v
            phis.append(phi)
        for a, b, u, mu in reversed(self.log_cochain):
            items = list(mu.items())
            for phi in phis:
                phi[a] = -u * sum(m * phi[e] for e, m in items)
        return phis


def _as_array(vals: list) -> np.ndarray:
    if all(-2 ** 62 < v < 2 ** 62 for v in vals):
        return np.array(vals, dtype=np.int64)
    out = np.empty(len(vals), dtype=object)
    out[:] = vals
    return out


def relative_homology(X: MetricComplex, k: int, rel: str | None = None,
                      ring: str = "Z") -> HomologySummary:
    """H_k(M, R; ring) where R is the closed subcomplex marked ``rel``.

    Results are cached on the complex.
    """
    X._check_degree(k, 0)
    if ring not in ("Z", "R"):
        raise ValueError("ring must be 'Z' or 'R'")
    key = ("homology", k, rel, ring)
    if key in X._cache:
        return X._cache[key]
    red = _Reducer(X, k, rel)
    n_rel = len(red.alive[k])
    red.run()
    cells_k = sorted(red.alive[k])
    Dk = red.dense(k)
    Dk1 = red.dense(k + 1) if k + 1 <= X.dimension else np.zeros((len(cells_k), 0), dtype=object)
    m = len(cells_k)
    # zero rows of ∂_k and zero columns of ∂_{k+1} do not affect homology
    Dk = Dk[[i for i in range(Dk.shape[0]) if any(Dk[i, :])], :]
    Dk1 = Dk1[:, [j for j in range(Dk1.shape[1]) if any(Dk1[:, j])]]
    U0, S0, V0, _, V0i = smith_normal_form(Dk if Dk.shape[0] else np.zeros((0, m), dtype=object),
                                           return_inverses=True)
    r0 = sum(1 for d in diagonal(S0) if d)
    Z = V0[:, r0:]
    A = V0i[r0:, :].dot(Dk1) if Dk1.shape[1] else np.zeros((m - r0, 0), dtype=object)
    U1, S1, _, U1i, _ = smith_normal_form(A, return_inverses=True)
    invariants = [d for d in diagonal(S1) if d]
    r1 = len(invariants)
    G = Z.dot(U1i) if Z.shape[1] else np.zeros((m, 0), dtype=object)
    betti = Z.shape[1] - r1
    order = list(range(r1, Z.shape[1]))
    torsion = []
    if ring == "Z":
        tors_idx = [j for j in range(r1) if invariants[j] > 1]
        order += tors_idx
        torsion = [invariants[j] for j in tors_idx]
    generators = []
    for j in order:
        coeffs = {cells_k[i]: int(G[i, j]) for i in range(m) if G[i, j]}
        lifted = red.lift_chain(coeffs)
        vals = [0] * X.n_cells(k)
        for c, v in lifted.items():
            vals[c] = v
        generators.append(Chain(k, _as_array(vals)))
    dual_rows = []
    if betti:
        P = U1[r1:, :].dot(V0i[r0:, :])
        for i in range(betti):
            dual_rows.append({cells_k[t]: int(P[i, t]) for t in range(m) if P[i, t]})
    cocycles = [Cochain(k, _as_array(phi))
                for phi in red.lift_cochains(dual_rows, X.n_cells(k))]
    pairing = np.empty((betti, betti), dtype=object)
    for i in range(betti):
        for j in range(betti):
            pairing[i, j] = evaluate(cocycles[i], generators[j])
    rank_in = red.pivots.get(k, 0) + r0
    rank_out = red.pivots.get(k + 1, 0) + r1
    summary = HomologySummary(k, rel, ring, betti, torsion, generators,
                              CohomologyBasis(k, cocycles, pairing),
                              rank_in, rank_out, n_rel, X)
    X._cache[key] = summary
    return summary


def _exact(values) -> bool:
    return values.dtype == object


def evaluate(omega: Cochain, sigma: Chain):
    """Pairing Σ_f σ(f)·ω(f) of a cochain with a chain of the same degree."""
    if omega.degree != sigma.degree:
        raise DegreeMismatch(f"cochain degree {omega.degree} != chain degree {sigma.degree}")
    if _exact(omega.values) or _exact(sigma.values):
        nz = np.flatnonzero(sigma.values)
        total = 0
        for i in nz:
            total += sigma.values[i] * omega.values[i]
        return total
    if np.issubdtype(omega.values.dtype, np.integer) and \
            np.issubdtype(sigma.values.dtype, np.integer):
        return int(np.dot(omega.values.astype(object), sigma.values.astype(object)))
    return float(np.dot(omega.values, sigma.values))


def is_torsion(c: HomologyClass, degree: int | None = None) -> bool:
    """True iff the class vanishes in real homology."""
    if degree is not None and degree != c.degree:
        raise DegreeMismatch(f"class has degree {c.degree}, expected {degree}")
    return all(float(v) == 0.0 for v in c.free_coords)


def dual_basis_cocycle(X: MetricComplex, c: HomologyClass, exact: bool = False) -> Cochain:
    """A cocycle ω₀ vanishing on the marked subcomplex with ω₀(c) = 1.

    ω₀ = Σ b_i φ_i with b = a/|a|², where a are the free coordinates of c
    and φ_i the integer cocycles dual to the generators.

    Raises:
        TorsionClass: c vanishes in real homology.
    """
    if is_torsion(c):
        raise TorsionClass("class is zero in real homology")
    a = c.free_coords
    if exact:
        a = [Fraction(v) for v in a]
        norm2 = sum(v * v for v in a)
        vals = np.empty(X.n_cells(c.degree), dtype=object)
        vals[:] = Fraction(0)
        for coef, phi in zip(a, c.summary.cocycles):
            if coef:
                vals = vals + (coef / norm2) * phi.values.astype(object)
        return Cochain(c.degree, vals)
    a = np.array([float(v) for v in a])
    b = a / np.dot(a, a)
    vals = np.zeros(X.n_cells(c.degree))
    for coef, phi in zip(b, c.summary.cocycles):
        if coef:
            vals += coef * phi.values.astype(float)
    return Cochain(c.degree, vals)


def random_homologous(X: MetricComplex, sigma: Chain, rel: str | None,
                      rng: np.random.Generator, amplitude: int = 3) -> Chain:
    """σ + ∂τ + ρ with random integer τ and ρ supported in the marked subcomplex."""
    k = sigma.degree
    vals = sigma.values.astype(np.int64) if not _exact(sigma.values) else sigma.values.copy()
    if k < X.dimension:
        tau = rng.integers(-amplitude, amplitude + 1, X.n_cells(k + 1))
        vals = vals + boundary_matrix(X, k + 1) @ tau
    mask = X.rel_mask(k, rel)
    if mask.any():
        vals = vals + np.where(mask, rng.integers(-amplitude, amplitude + 1, len(mask)), 0)
    return Chain(k, vals)


__all__ = [
    "HomologySummary", "HomologyClass", "CohomologyBasis", "relative_homology",
    "evaluate", "is_torsion", "dual_basis_cocycle", "random_homologous",
]

"""Classical modulus of the cycles in a homology class, with certified bounds.

Mod_p(c) is the minimum of Σ mass·ρ^p over densities ρ ≥ 0 on k-cells such
that every relative cycle σ in c has ρ-length Σ |σ_f| vol_f ρ_f ≥ 1. The
family is infinite, so the program is solved by constraint generation: a
restricted problem over a finite set of cycles is solved through its concave
dual (giving a lower bound), and an exact oracle returns the ρ-shortest cycle
of the whole class (certifying ρ/ℓ and giving an upper bound).

Two oracles are provided. Curves (k = 1) use Dijkstra on the covering graph
whose sheets are labelled by the values of the integer cocycle basis, with a
cyclic cover supplying a certified lower bound for the window. Cycles
of codimension one are σ₀ + ∂U for integer n-chains U; the minimum of
Σ w_f |σ₀ + ∂U|_f is a linear program over a network matrix, so the HiGHS
vertex solution is integral and exact.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra
from scipy.sparse.linalg import cg

from .errors import Disconnected, NoConvergence, TorsionClass, UnsupportedClass
from .homology import HomologyClass, is_torsion
from .mesh import Chain, MetricComplex, boundary_matrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Density:
    """Non-negative pointwise density sampled per k-cell."""

    degree: int
    values: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.values) < 0):
            raise ValueError("densities are non-negative")


@dataclass
class CmodOptions:
    """Options for ``minimize_cmod``.

    Attributes:
        feastol: stop adding cycles once the oracle minimum is ≥ 1 - feastol.
        gap: converged when value_upper - value_lower ≤ gap · value_upper.
        max_outer: cap on constraint-generation rounds.
        batch: most violated cycles added per round.
        max_winding: initial extra sheets of the covering graph on each side
            of the target winding; the curve oracle widens the window until a
            cyclic-cover bound certifies it.
        strict: raise NoConvergence instead of returning an open bracket.
    """

    feastol: float = 1e-9
    gap: float = 1e-7
    max_outer: int = 200
    batch: int = 32
    max_winding: int = 0
    strict: bool = False


@dataclass
class ClassicalModulusResult:
    """Bracket for Mod_p of the cycles in a class.

    Attributes:
        p: exponent.
        class_label: label of the class.
        value_lower: dual value of the final restricted program.
        value_upper: Σ mass (ρ/ℓ)^p for the best certified density.
        density: the certified admissible density (already divided by ℓ).
        active_constraints: cycles generated by the oracle.
        certified_length: certified lower bound for the minimum ρ-length under
            the returned density (≥ 1 - 1e-9).
        converged: bracket closed within ``gap``.
        history: per-round (round, lower, upper, oracle minimum, #constraints).
    """

    p: float
    class_label: str
    value_lower: float
    value_upper: float
    density: Density
    active_constraints: list
    certified_length: float
    converged: bool
    iterations: int
    history: list = field(repr=False, default_factory=list)

    @property
    def value(self) -> float:
        return self.value_upper

    def to_json(self) -> dict:
        return {"p": self.p, "class": self.class_label, "value_lower": self.value_lower,
                "value_upper": self.value_upper, "certified_length": self.certified_length,
                "converged": self.converged, "iterations": self.iterations,
                "active_constraints": len(self.active_constraints),
                "history": [list(h) for h in self.history]}


def _target(c: HomologyClass) -> np.ndarray:
    """Values of the integer cocycle basis on the class."""
    P = np.array(c.summary.cohomology.pairing_matrix, dtype=object)
    a = np.array([int(round(float(v))) for v in c.free_coords], dtype=object)
    if any(float(v) != round(float(v)) for v in c.free_coords):
        raise UnsupportedClass("classical modulus needs an integral class")
    return np.array(P.dot(a) if len(a) else [], dtype=np.int64)


def _length(X: MetricComplex, sigma: Chain, rho) -> float:
    k = sigma.degree
    return float(np.sum(np.abs(sigma.values.astype(float)) * X.volume[k] * rho))


# --- curve oracle ------------------------------------------------------------

def _compact_cocycles(X: MetricComplex, cocycles, rel) -> np.ndarray:
    """Cohomologous integer 1-cocycles supported near a single cut.

    Each φ is replaced by φ + δ round(u), where φ + δu is the least-squares
    (harmonic) representative with u vanishing on marked vertices. The values
    on cycles are unchanged; the support shrinks to the edges where u crosses
    a half-integer, which keeps the set of Dijkstra sources small.
    """
    B = boundary_matrix(X, 1).tocsr().astype(float)
    free = np.flatnonzero(~X.rel_mask(0, rel))
    Bf = B[free, :]
    L = (Bf @ Bf.T).tocsr()
    # closed components make L singular; a tiny shift pins the constant
    L = L + 1e-12 * sp.identity(L.shape[0], format="csr")
    out = []
    for phi in cocycles:
        phi = np.asarray(phi.values, dtype=np.int64)
        rhs = -(Bf @ phi.astype(float))
        u, _ = cg(L, rhs, rtol=1e-10, maxiter=10 * L.shape[0])
        full = np.zeros(X.n_cells(0), dtype=np.int64)
        full[free] = np.round(u - np.median(u)).astype(np.int64)
        out.append(phi + (B.T @ full.astype(float)).round().astype(np.int64))
    return np.array(out, dtype=np.int64).reshape(len(cocycles), X.n_cells(1))


class _CurveOracle:
    """Shortest relative 1-cycles with prescribed cocycle values.

    Vertices of the marked subcomplex are merged into one node, so relative
    cycles become closed walks through it. A walk from sheet w = 0 to sheet
    w = target that returns to its start is a cycle in the class.

    Walks are searched in a finite window of sheets around [0, target]. The
    window is certified against a cyclic cover in which sheet coordinates
    wrap modulo the window size: every walk with the exact target winding is
    also a walk in the cyclic cover, so its minimum is a lower bound for the
    true minimum. When the two agree the window result is exact; otherwise
    the window is widened, and if a gap remains the cyclic-cover value is
    reported as ``last_lower`` so that upper bounds stay sound.
    """

    max_window = 16

    def __init__(self, X: MetricComplex, c: HomologyClass, max_winding: int = 0):
        if c.degree != 1:
            raise UnsupportedClass("the curve oracle needs a degree-1 class")
        self.X, self.c = X, c
        self.target = _target(c)
        b = len(self.target)
        cocycles = _compact_cocycles(X, c.summary.cocycles, c.rel)
        self._set_window(max_winding)
        self.last_lower = None
        self.window_exact = None

        B = boundary_matrix(X, 1).tocsc()
        marked = X.rel_mask(0, c.rel)
        node = np.full(X.n_cells(0), -1, dtype=np.int64)
        node[~marked] = np.arange(int(np.count_nonzero(~marked)))
        self.super = int(np.count_nonzero(~marked)) if marked.any() else None
        if self.super is not None:
            node[marked] = self.super
        self.n_nodes = int(node.max()) + 1 if len(node) else 0

        edge_free = ~X.rel_mask(1, c.rel)
        tails, heads, ids = [], [], []
        for e in np.flatnonzero(edge_free):
            rows = B.indices[B.indptr[e]:B.indptr[e + 1]]
            vals = B.data[B.indptr[e]:B.indptr[e + 1]]
            if len(rows) == 2:
                u, v = (rows[0], rows[1]) if vals[0] < 0 else (rows[1], rows[0])
            elif len(rows) == 0:
                # both ends glued to the same vertex
                u = v = X.cell_vertices(1)[e][0]
            else:
                continue
            tails.append(node[u])
            heads.append(node[v])
            ids.append(e)
        self.tail = np.array(tails, dtype=np.int64)
        self.head = np.array(heads, dtype=np.int64)
        self.edges = np.array(ids, dtype=np.int64)
        self.dw = cocycles[:, self.edges].T if b else np.zeros((len(self.edges), 0), np.int64)
        self.vol = X.volume[1][self.edges]

        # sources: every cycle with nonzero target crosses the support of some
        # cocycle with a nonzero target value; the smallest such support wins
        if self.super is not None:
            sources = {self.super}
        else:
            sources = set()
        if b and np.any(self.target):
            best = None
            for j in np.flatnonzero(self.target):
                supp = np.flatnonzero(self.dw[:, j])
                if best is None or len(supp) < len(best):
                    best = supp
            sources |= set(self.tail[best].tolist())
        elif self.super is None:
            raise TorsionClass("the class is zero")
        self.sources = sorted(sources)

    def _set_window(self, width):
        self.width = int(width)
        self.lo = np.minimum(0, self.target) - self.width
        hi = np.maximum(0, self.target) + self.width
        self.dims = hi - self.lo + 1
        self.n_sheets = int(np.prod(self.dims))

    def _sheet(self, w, wrap=False):
        """Flat sheet index of winding vectors (rows), -1 outside the window."""
        w = np.atleast_2d(w) - self.lo
        if wrap:
            w = np.mod(w, self.dims)
        inside = np.all((w >= 0) & (w < self.dims), axis=1)
        flat = np.zeros(len(w), dtype=np.int64)
        for j, d in enumerate(self.dims):
            flat = flat * d + np.clip(w[:, j], 0, d - 1)
        return np.where(inside, flat, -1)

    def _graph(self, rho, wrap=False):
        weights = rho[self.edges] * self.vol
        sheets = np.array(list(itertools.product(*[range(d) for d in self.dims])),
                          dtype=np.int64).reshape(-1, len(self.dims)) + self.lo
        rows, cols, data, eid = [], [], [], []
        for s_idx, w in enumerate(sheets):
            dst = self._sheet(w + self.dw, wrap)
            ok = dst >= 0
            rows.append(s_idx * self.n_nodes + self.tail[ok])
            cols.append(dst[ok] * self.n_nodes + self.head[ok])
            data.append(weights[ok])
            eid.append(self.edges[ok])
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        data = np.concatenate(data)
        eid = np.concatenate(eid)
        # keep the lightest of parallel covering edges (sparse assembly would sum them)
        u, v = np.minimum(rows, cols), np.maximum(rows, cols)
        order = np.lexsort((data, v, u))
        u, v, data, eid, rows = u[order], v[order], data[order], eid[order], rows[order]
        first = np.ones(len(u), dtype=bool)
        first[1:] = (u[1:] != u[:-1]) | (v[1:] != v[:-1])
        loops = u == v
        loop_edges = [(int(eid[i]), float(data[i]), int(rows[i]))
                      for i in np.flatnonzero(loops & first)]
        keep = first & ~loops
        u, v, data, eid, rows = u[keep], v[keep], data[keep], eid[keep], rows[keep]
        N = self.n_sheets * self.n_nodes
        # symmetric assembly keeps explicit zeros (sparse addition would drop them)
        G = sp.csr_matrix((np.concatenate([data, data]),
                           (np.concatenate([u, v]), np.concatenate([v, u]))), shape=(N, N))
        if wrap:
            return G, None, loop_edges
        pairs = {}
        for a, b, e, r in zip(u.tolist(), v.tolist(), eid.tolist(), rows.tolist()):
            # orientation: +1 when walking from the covering tail to the head
            pairs[(a, b)] = (e, 1 if r == a else -1)
        return G, pairs, loop_edges

    def _ends(self, wrap=False):
        zero = self._sheet(np.zeros((1, len(self.dims)), dtype=np.int64), wrap)[0]
        tgt = self._sheet(self.target[None, :], wrap)[0]
        return zero, tgt

    @staticmethod
    def _cycle_cost(G, dist, goal):
        # shortest path to a neighbour of the goal plus the closing edge
        lo, hi = G.indptr[goal], G.indptr[goal + 1]
        cand = dist[G.indices[lo:hi]] + G.data[lo:hi]
        j = int(np.argmin(cand)) if len(cand) else -1
        return (float(cand[j]), int(G.indices[lo + j])) if j >= 0 else (np.inf, -1)

    def _loop_cycles(self, loop_edges, wrap=False):
        """Single edges glued to themselves that already close a cycle of the class."""
        out = []
        for e, wgt, _ in loop_edges:
            dw = self.dw[np.searchsorted(self.edges, e)]
            same = np.mod(dw - self.target, self.dims) == 0 if wrap else dw == self.target
            if np.all(same):
                out.append((e, wgt))
        return out

    def _source_costs(self, G, best, limit, want, wrap=False):
        """Cheapest cycle through each source, pruned at the running bound."""
        zero, tgt = self._ends(wrap)
        costs = np.full(len(self.sources), np.inf)
        for i, s in enumerate(self.sources):
            start, goal = zero * self.n_nodes + s, tgt * self.n_nodes + s
            if start == goal:
                continue
            bound = max(best, limit) if want > 1 else best
            dist = dijkstra(G, directed=True, indices=start,
                            limit=bound * (1 + 1e-12) if np.isfinite(bound) else np.inf)
            costs[i] = self._cycle_cost(G, dist, goal)[0]
            best = min(best, costs[i])
        return costs

    def _lower_bound(self, rho, upper):
        """Minimum over the cyclic cover, capped at ``upper``."""
        G, _, loops = self._graph(rho, wrap=True)
        best = min([w for _, w in self._loop_cycles(loops, wrap=True)], default=np.inf)
        best = min(best, upper)
        costs = self._source_costs(G, best, np.inf, 1, wrap=True)
        return float(min(best, costs.min(initial=np.inf)))

    def shortest(self, rho, limit: float = np.inf, want: int = 1):
        """Up to ``want`` cycles of the class, cheapest first.

        Returns a list of (Chain, ρ-length). The first entry is a minimum
        ρ-length cycle of the class when ``window_exact`` is set afterwards;
        ``last_lower`` always holds a certified lower bound for that minimum.

        Raises:
            Disconnected: no cycle of the class exists in the window.
        """
        rho = np.asarray(rho, dtype=float)
        while True:
            found = self._window_cycles(rho, limit, want)
            upper = found[0][1] if found else np.inf
            lower = self._lower_bound(rho, upper)
            exact = lower >= upper * (1 - 1e-12) - 1e-300
            if exact or 2 * self.width + 1 > self.max_window:
                break
            log.debug("curve window %d not exact (%.17g < %.17g); widening",
                      self.width, lower, upper)
            self._set_window(2 * self.width + 1)
        self.last_lower, self.window_exact = lower, bool(exact)
        if not exact:
            log.warning("curve window %d left a gap: cycles %.17g, certified lower bound %.17g",
                        self.width, upper, lower)
        if not found:
            raise Disconnected("no cycle of the class inside the winding window")
        return found

    def _window_cycles(self, rho, limit, want):
        G, pairs, loops = self._graph(rho)
        found = []
        for e, wgt in self._loop_cycles(loops):
            vals = np.zeros(self.X.n_cells(1), dtype=np.int64)
            vals[e] = 1
            found.append((wgt, Chain(1, vals)))
        best = min([f[0] for f in found], default=np.inf)
        costs = self._source_costs(G, best, limit, want)
        zero, tgt = self._ends()
        # rebuild the chosen cycles, one per source
        for i in np.argsort(costs, kind="stable")[:want]:
            if not np.isfinite(costs[i]):
                break
            s = self.sources[i]
            start, goal = zero * self.n_nodes + s, tgt * self.n_nodes + s
            dist, pred = dijkstra(G, directed=True, indices=start, return_predecessors=True,
                                  limit=costs[i] * (1 + 1e-9))
            _, last = self._cycle_cost(G, dist, goal)
            path = self._path(pred, start, last)
            if path is not None:
                path.append(goal)
                found.append((float(costs[i]), self._chain(path, pairs)))
        found.sort(key=lambda f: f[0])
        out, seen = [], set()
        for _, chain in found:
            key = chain.values.tobytes()
            if key in seen:
                continue
            seen.add(key)
            out.append((chain, _length(self.X, chain, rho)))
            if len(out) >= want:
                break
        out.sort(key=lambda f: f[1])
        return out

    def _path(self, pred, start, node):
        path = [node]
        while node != start:
            node = pred[node]
            if node < 0:
                return None
            path.append(int(node))
        path.reverse()
        return path

    def _chain(self, path, pairs) -> Chain:
        vals = np.zeros(self.X.n_cells(1), dtype=np.int64)
        for a, b in zip(path[:-1], path[1:]):
            if a < b:
                e, s = pairs[(a, b)]
            else:
                e, s = pairs[(b, a)]
                s = -s
            vals[e] += s
        return Chain(1, vals)


def shortest_cycle_in_class(X: MetricComplex, rho, c: HomologyClass,
                            max_winding: int = 0) -> tuple[Chain, float]:
    """Minimum ρ-length relative 1-cycle in the class ``c``.

    Args:
        X: complex.
        rho: Density or per-edge array of non-negative densities.
        c: integral degree-1 class.
        max_winding: initial extra covering sheets on each side of the target;
            the window widens on its own until it is certified exact.

    Raises:
        UnsupportedClass: c is not an integral degree-1 class.
        Disconnected: no representative exists in the window.
    """
    rho = np.asarray(getattr(rho, "values", rho), dtype=float)
    chain, length = _CurveOracle(X, c, max_winding).shortest(rho)[0]
    return chain, length


# --- surface oracle ----------------------------------------------------------

class _SurfaceOracle:
    """Minimum ρ-area relative (n-1)-cycles σ₀ + ∂U over integer n-chains U."""

    def __init__(self, X: MetricComplex, c: HomologyClass):
        n = X.dimension
        if c.degree != n - 1 or n < 2:
            raise UnsupportedClass("the surface oracle needs a class of codimension one")
        _target(c)
        self.X, self.c = X, c
        self.free = np.flatnonzero(~X.rel_mask(n - 1, c.rel))
        D = boundary_matrix(X, n).tocsr()[self.free, :]
        if D.nnz and np.max(np.abs(D.data)) > 1:
            raise UnsupportedClass("a face meets the same cell twice")
        counts = np.diff(D.indptr)
        if np.any(counts > 2):
            raise UnsupportedClass("a face is shared by more than two cells")
        # network matrix check: two incidences on a face must have opposite signs
        two = np.flatnonzero(counts == 2)
        if len(two):
            s = D.data[D.indptr[two]] + D.data[D.indptr[two] + 1]
            if np.any(s != 0):
                raise UnsupportedClass("the complex is not orientable along the class")
        self.D = D.tocsc()
        self.sigma0 = np.asarray(c.representative().values, dtype=np.int64)[self.free]

    def shortest(self, rho, limit=np.inf, want=1):
        X = self.X
        n = X.dimension
        w = np.asarray(rho, dtype=float)[self.free] * X.volume[n - 1][self.free]
        m, N = self.D.shape
        # y+ - y- - D U = σ₀, minimize w·(y+ + y-)
        A = sp.hstack([sp.identity(m, format="csc"), -sp.identity(m, format="csc"),
                       -self.D]).tocsc()
        cost = np.concatenate([w, w, np.zeros(N)])
        bounds = [(0, None)] * (2 * m) + [(None, None)] * N
        res = scipy.optimize.linprog(cost, A_eq=A, b_eq=self.sigma0.astype(float),
                                     bounds=bounds, method="highs-ds")
        if res.status != 0:
            raise Disconnected(f"surface program failed: {res.message}")
        U = res.x[2 * m:]
        Ui = np.round(U).astype(np.int64)
        if np.max(np.abs(U - Ui), initial=0.0) > 1e-6:
            raise UnsupportedClass("surface program returned a fractional vertex")
        full = np.zeros(X.n_cells(n - 1), dtype=np.int64)
        full[self.free] = self.sigma0 + self.D @ Ui
        chain = Chain(n - 1, full)
        area = _length(X, chain, rho)
        # the program is exact: its optimum is the minimum area
        self.last_lower, self.window_exact = area, True
        return [(chain, area)]


def min_cut_surface(X: MetricComplex, rho, c: HomologyClass) -> tuple[Chain, float]:
    """Minimum ρ-area relative (n-1)-cycle in the class ``c``.

    The relative cycles in c are σ₀ + ∂U + (chains in the marked part) for
    integer n-chains U. The objective Σ w_f |σ₀ + ∂U|_f is minimized as a
    linear program whose constraint matrix is a network matrix (each face
    bounds at most two cells, with opposite signs), so the simplex vertex is
    integral: the result is a minimum cut of the dual graph.

    Raises:
        UnsupportedClass: wrong degree, non-integral class or a
            non-orientable face configuration.
    """
    rho = np.asarray(getattr(rho, "values", rho), dtype=float)
    chain, area = _SurfaceOracle(X, c).shortest(rho)[0]
    return chain, area


def _oracle(X, c, opts):
    if c.degree == 1:
        return _CurveOracle(X, c, opts.max_winding)
    if c.degree == X.dimension - 1:
        return _SurfaceOracle(X, c)
    raise UnsupportedClass(f"no oracle for degree {c.degree} in dimension {X.dimension}")


def _certified_length(oracle, rho) -> float:
    oracle.shortest(rho)
    return float(oracle.last_lower)


def density_bound(X: MetricComplex, c: HomologyClass, rho, p: float,
                  max_winding: int = 0) -> float:
    """Σ mass·ρ^p / ℓ^p with ℓ a certified lower bound for the minimum ρ-length.

    This is an upper bound for Mod_p(c).
    """
    rho = np.asarray(getattr(rho, "values", rho), dtype=float)
    oracle = _oracle(X, c, CmodOptions(max_winding=max_winding))
    ell = _certified_length(oracle, rho)
    if ell <= 0:
        return np.inf
    return float(np.sum(X.mass[c.degree] * rho ** p)) / ell ** p


# --- constraint generation ---------------------------------------------------

class _Restricted:
    """Dual of min Σ m ρ^p subject to a_i·ρ ≥ 1 over the active cycles.

    g(λ) = Σλ - (p-1) Σ m ρ(λ)^p with ρ(λ) = (Aᵀλ / (p m))^{1/(p-1)}; any
    λ ≥ 0 gives a lower bound for the modulus of the whole family.
    """

    def __init__(self, m, p):
        self.m, self.p = m, p
        self.rows = []

    def add(self, a):
        self.rows.append(a)

    def solve(self, lam0):
        A = sp.vstack(self.rows).tocsr()
        AT = A.T.tocsr()
        p, m = self.p, self.m

        def neg_g(lam):
            rho = (np.maximum(AT @ lam, 0.0) / (p * m)) ** (1.0 / (p - 1.0))
            g = lam.sum() - (p - 1.0) * float(np.sum(m * rho ** p))
            grad = 1.0 - A @ rho
            return -g, -grad

        res = scipy.optimize.minimize(neg_g, lam0, jac=True, method="L-BFGS-B",
                                      bounds=[(0, None)] * len(lam0),
                                      options={"maxiter": 20000, "maxfun": 40000,
                                               "ftol": 1e-16, "gtol": 1e-13, "maxcor": 30})
        lam = res.x
        rho = (np.maximum(AT @ lam, 0.0) / (p * m)) ** (1.0 / (p - 1.0))
        return lam, rho, -float(res.fun)


def form_density(X: MetricComplex, omega) -> np.ndarray:
    """Pointwise norm |ω(f)|/vol_f of a cocycle, read as a density.

    If ω takes the value 1 on the class, every integer cycle σ of the class
    has ρ-length Σ|σ_f||ω(f)| ≥ |ω(σ)| = 1, so this density is admissible and
    costs exactly the form objective. It is the warm start behind Mod ≤ dMod.
    """
    k = omega.degree
    return np.abs(np.asarray(omega.values, dtype=float)) / X.volume[k]


def minimize_cmod(X: MetricComplex, c: HomologyClass, p: float,
                  opts: CmodOptions | None = None, *, rho0=None) -> ClassicalModulusResult:
    """Bracket Mod_p of the relative cycles in ``c`` by constraint generation.

    Args:
        X: the complex.
        c: integral class of degree 1 or n-1.
        p: exponent, p > 1.
        opts: solver options.
        rho0: optional density or list of densities. Each one is certified by
            the oracle and rescaled, so the upper bound starts at the best of
            them. The first batch of cycles still comes from the uniform
            density: a near-optimal density makes many zig-zag cycles tight
            and seeds the restricted program badly.

    Raises:
        UnsupportedClass: no oracle for the class degree.
        TorsionClass: c is zero in real homology.
        NoConvergence: only with ``opts.strict``.
    """
    opts = opts or CmodOptions()
    if not p > 1:
        raise ValueError("p must exceed 1")
    if is_torsion(c):
        raise TorsionClass("classical modulus of a zero class is infinite")
    k = c.degree
    oracle = _oracle(X, c, opts)
    mass, vol = X.mass[k], X.volume[k]
    restricted = _Restricted(mass, p)

    lower, upper = 0.0, np.inf
    best_rho = None
    # start from the uniform density unless candidates are given
    rho = np.ones(X.n_cells(k))
    if rho0 is not None:
        for cand_rho in _as_list(rho0):
            cand_rho = np.asarray(getattr(cand_rho, "values", cand_rho), dtype=float)
            if cand_rho.shape != rho.shape or np.any(cand_rho < 0):
                raise ValueError("warm-start densities must be non-negative per k-cell")
            ell = _certified_length(oracle, cand_rho)
            if ell > 0:
                cand = float(np.sum(mass * cand_rho ** p)) / ell ** p
                if cand < upper:
                    upper, best_rho = cand, cand_rho / ell
    active, history, seen = [], [], set()
    lam = np.zeros(0)
    converged = False
    rounds = 0
    for rounds in range(1, opts.max_outer + 1):
        cycles = oracle.shortest(rho, limit=1.0, want=opts.batch)
        ell = float(oracle.last_lower)
        if ell > 0:
            cand = float(np.sum(mass * rho ** p)) / ell ** p
            if cand < upper:
                upper, best_rho = cand, rho / ell
        # the first round seeds the active set with the shortest cycles
        new = [ch for ch, length in cycles
               if (rounds == 1 or length < 1 - opts.feastol)
               and ch.values.tobytes() not in seen]
        history.append((rounds, lower, upper, ell, len(active)))
        log.debug("cmod round %d lower %.17g upper %.17g oracle %.17g active %d",
                  rounds, lower, upper, ell, len(active))
        if upper - lower <= opts.gap * upper:
            converged = True
            break
        if not new:
            # every violated cycle is already active: the restricted solve is
            # as accurate as it gets and the bracket stays open
            break
        for ch in new:
            seen.add(ch.values.tobytes())
            active.append(ch)
            restricted.add(sp.csr_matrix(np.abs(ch.values.astype(float)) * vol))
        lam = np.concatenate([lam, np.zeros(len(new))])
        if len(lam) and not lam.any():
            lam[:] = 1.0 / len(lam)
        lam, rho, g = restricted.solve(lam)
        lower = max(lower, g)
        if not np.any(rho > 0):
            rho = np.ones(X.n_cells(k))
    # certify the returned density once more against the full class
    if best_rho is None:
        raise NoConvergence("no admissible density found", None)
    ell = _certified_length(oracle, best_rho)
    if ell < 1:
        upper = float(np.sum(mass * best_rho ** p)) / ell ** p
        best_rho = best_rho / ell
        ell = 1.0
    result = ClassicalModulusResult(p, c.label, float(lower), float(upper),
                                    Density(k, best_rho), active, float(ell), converged,
                                    rounds, history)
    log.info("Mod_%g(%s) in [%.17g, %.17g] after %d rounds, %d cycles", p, c.label,
             lower, upper, rounds, len(active))
    if not converged and opts.strict:
        raise NoConvergence(f"bracket [{lower:.6g}, {upper:.6g}] still open", result)
    return result


def _as_list(rho) -> list:
    if np.ndim(getattr(rho, "values", rho)) == 1:
        return [rho]
    return list(rho)


@dataclass
class CorollaryReport:
    """Mod_p(c)^{1/p} · Mod_q(c')^{1/q} from certified upper bounds.

    Attributes:
        product_upper: sound upper bound for the product.
        product_lower: the same product from the lower bounds.
        strict: the upper bound is below 1 by more than 1e-6.
    """

    p: float
    q: float
    result_p: ClassicalModulusResult
    result_q: ClassicalModulusResult
    product_upper: float
    product_lower: float
    strict: bool

    def to_json(self) -> dict:
        return {"p": self.p, "q": self.q, "product_upper": self.product_upper,
                "product_lower": self.product_lower, "strict": self.strict,
                "mod_p": self.result_p.to_json(), "mod_q": self.result_q.to_json()}


def check_corollary(X: MetricComplex, c: HomologyClass, cprime: HomologyClass, p: float,
                    opts: CmodOptions | None = None, *, rho_c=None, rho_cprime=None,
                    forms: bool = False) -> CorollaryReport:
    """Classical product for c and its dual class, using value_upper on both factors.

    Args:
        rho_c, rho_cprime: warm-start densities passed to ``minimize_cmod``.
        forms: also warm start from the form-modulus minimizers of c at p
            and of c' at q, which caps each factor by its form modulus.
    """
    q = p / (p - 1.0)
    cands_c = [] if rho_c is None else _as_list(rho_c)
    cands_q = [] if rho_cprime is None else _as_list(rho_cprime)
    if forms:
        from .dmod import minimize_dmod
        cands_c.append(form_density(X, minimize_dmod(X, c, p).minimizer))
        cands_q.append(form_density(X, minimize_dmod(X, cprime, q).minimizer))
    rp = minimize_cmod(X, c, p, opts, rho0=cands_c or None)
    rq = minimize_cmod(X, cprime, q, opts, rho0=cands_q or None)
    up = rp.value_upper ** (1 / p) * rq.value_upper ** (1 / q)
    lo = rp.value_lower ** (1 / p) * rq.value_lower ** (1 / q)
    log.info("classical product p=%g in [%.17g, %.17g]", p, lo, up)
    return CorollaryReport(p, q, rp, rq, up, lo, bool(up < 1 - 1e-6))


__all__ = [
    "Density", "CmodOptions", "ClassicalModulusResult", "CorollaryReport",
    "shortest_cycle_in_class", "min_cut_surface", "minimize_cmod", "check_corollary",
    "density_bound", "form_density",
]

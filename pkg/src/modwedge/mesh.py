"""Metric cubical complexes built from structured grids.

A cell is stored as a pair (axes, index): ``axes`` is the bitmask of grid axes
the cell spans and ``index`` is the integer position of its lower corner.
Periodic and twisted identifications are applied by mapping every cell to a
canonical representative, so gluing is a relabelling of grid cells.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DegreeMismatch, DegreeOutOfRange, EmptyComplex, InvalidGluing

INTERIOR = "interior"
BOUNDARY_D = "D"
BOUNDARY_E = "E"
CORNER = "corner"


@dataclass(frozen=True)
class Identification:
    """Gluing rule for one grid axis.

    Attributes:
        kind: ``"none"``, ``"periodic"`` or ``"twisted"``.
        flip: axes reflected when crossing the glued face (twisted only).
    """

    kind: str = "none"
    flip: tuple[int, ...] = ()

    @classmethod
    def parse(cls, value) -> "Identification":
        if isinstance(value, Identification):
            return value
        if value is None or value == "none":
            return cls("none")
        if value == "periodic":
            return cls("periodic")
        if isinstance(value, (tuple, list)) and value and value[0] == "twisted":
            return cls("twisted", tuple(int(a) for a in value[1]))
        raise InvalidGluing(f"unknown identification {value!r}")


MarkingRule = Callable[[np.ndarray, int, int], str]


def _all_e(center, normal_axis, outward):
    return BOUNDARY_E


@dataclass
class GridSpec:
    """Description of a structured grid and its gluing.

    Attributes:
        lengths: side length per axis.
        resolution: number of cells per axis.
        identifications: per-axis ``"none"``, ``"periodic"`` or
            ``("twisted", flip_axes)``.
        active: optional boolean array of shape ``resolution`` or a callable
            mapping an ``(m, n)`` array of cell centers to a boolean mask.
        marking: callable ``(face_center, normal_axis, outward_sign) -> "D" | "E"``
            applied to every boundary face. Defaults to all ``"E"``.
        origin: coordinates of the grid's lower corner.
    """

    lengths: Sequence[float]
    resolution: Sequence[int]
    identifications: Sequence = ()
    active: object = None
    marking: MarkingRule = _all_e
    origin: Sequence[float] | None = None


@dataclass(frozen=True)
class Chain:
    """Integer, rational or real coefficients over the k-cells of a complex."""

    degree: int
    values: np.ndarray

    def to_json(self) -> dict:
        nz = np.flatnonzero(self.values)
        return {"degree": self.degree,
                "cells": [[int(i), _json_number(self.values[i])] for i in nz]}


@dataclass(frozen=True)
class Cochain:
    """Values of a discrete k-form; entry f is the integral over cell f."""

    degree: int
    values: np.ndarray

    def to_json(self) -> dict:
        return {"degree": self.degree,
                "values": [_json_number(v) for v in self.values]}


def _json_number(v):
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def _combinations(n: int, k: int) -> list[int]:
    return [sum(1 << a for a in c) for c in itertools.combinations(range(n), k)]


def _axes(mask: int, n: int) -> list[int]:
    return [a for a in range(n) if mask >> a & 1]


class MetricComplex:
    """Immutable cubical complex with volumes, masses and D/E markings.

    Cells of degree k are numbered ``0..n_cells(k)-1`` in increasing
    ``(index, axes)`` order. Use ``build_complex`` to construct one.
    """

    def __init__(self, *, dimension, shape, spacings, origin, identifications,
                 cell_axes, cell_index, incidence, volume, mass, marking):
        self.dimension = int(dimension)
        self.shape = tuple(int(s) for s in shape)
        self.spacings = [np.asarray(h, dtype=float) for h in spacings]
        self.origin = np.asarray(origin, dtype=float)
        self.identifications = tuple(identifications)
        self.cell_axes = cell_axes
        self.cell_index = cell_index
        self.incidence = incidence
        self.volume = volume
        self.mass = mass
        self.marking = marking
        self._codes = [_encode(cell_axes[k], cell_index[k], self.shape)
                       for k in range(self.dimension + 1)]
        self._cache: dict = {}
        for arrs in (cell_axes, cell_index, volume, mass, marking):
            for a in arrs:
                a.setflags(write=False)

    # basic queries -----------------------------------------------------
    def n_cells(self, k: int) -> int:
        self._check_degree(k, 0)
        return len(self.cell_axes[k])

    def _check_degree(self, k, low):
        if not low <= k <= self.dimension:
            raise DegreeOutOfRange(f"degree {k} outside [{low}, {self.dimension}]")

    @property
    def is_periodic(self) -> bool:
        return all(i.kind == "periodic" for i in self.identifications)

    @property
    def is_uniform(self) -> bool:
        return all(np.all(h == h[0]) for h in self.spacings)

    def lookup(self, k: int, axes, index) -> tuple[np.ndarray, np.ndarray]:
        """Return (cell ids, orientation signs) for possibly unglued cells.

        ``axes`` is an array of bitmasks and ``index`` an ``(m, n)`` array.
        Ids are -1 where the cell does not belong to the complex.
        """
        axes = np.broadcast_to(np.asarray(axes, dtype=np.int64),
                               (len(index),)).copy()
        index = np.array(index, dtype=np.int64, copy=True).reshape(-1, self.dimension)
        sign = _canonicalize(axes, index, self.shape, self.identifications)
        codes = _encode(axes, index, self.shape)
        pos = np.searchsorted(self._codes[k], codes)
        pos = np.minimum(pos, len(self._codes[k]) - 1)
        found = self._codes[k][pos] == codes
        return np.where(found, pos, -1), np.where(found, sign, 0)

    def find_cell(self, axes: Sequence[int], index: Sequence[int]) -> int:
        mask = sum(1 << a for a in axes)
        ids, _ = self.lookup(len(axes), [mask], [list(index)])
        return int(ids[0])

    def centers(self, k: int) -> np.ndarray:
        """Model-space coordinates of cell centers (for reporting)."""
        self._check_degree(k, 0)
        return _centers(self.cell_axes[k], self.cell_index[k], self.spacings, self.origin)

    def vertex_positions(self) -> np.ndarray:
        return self.centers(0)

    def cell_vertices(self, k: int) -> list[list[int]]:
        """Vertex ids in the closure of each k-cell."""
        n = self.dimension
        result = []
        for mask, idx in zip(self.cell_axes[k], self.cell_index[k]):
            span = _axes(int(mask), n)
            corners = []
            for offs in itertools.product((0, 1), repeat=len(span)):
                v = idx.copy()
                for a, o in zip(span, offs):
                    v[a] += o
                corners.append(v)
            ids, _ = self.lookup(0, np.zeros(len(corners), dtype=np.int64),
                                 np.array(corners))
            result.append(sorted(set(int(i) for i in ids)))
        return result

    def rel_mask(self, k: int, rel: str | None) -> np.ndarray:
        """Boolean mask of k-cells in the closed subcomplex D or E (with corners)."""
        if rel is None:
            return np.zeros(self.n_cells(k), dtype=bool)
        mk = self.marking[k]
        if rel == "D":
            return (mk == 1) | (mk == 3)
        if rel == "E":
            return (mk == 2) | (mk == 3)
        raise ValueError(f"relative marking must be 'D' or 'E', not {rel!r}")

    def marking_labels(self, k: int) -> np.ndarray:
        names = np.array([INTERIOR, BOUNDARY_D, BOUNDARY_E, CORNER])
        return names[self.marking[k]]

    def has_marking(self, rel: str) -> bool:
        return bool(self.rel_mask(self.dimension - 1, rel).any()) if self.dimension else False

    def coboundary_matrix(self, k: int) -> sp.csr_matrix:
        """Matrix of δ_k: k-cochains to (k+1)-cochains."""
        return boundary_matrix(self, k + 1).T.tocsr()

    # serialization -----------------------------------------------------
    def to_json(self) -> dict:
        n = self.dimension
        cells = []
        for k in range(n + 1):
            verts = self.cell_vertices(k)
            labels = self.marking_labels(k)
            cells.append([
                {"id": i, "axes": _axes(int(self.cell_axes[k][i]), n),
                 "index": [int(v) for v in self.cell_index[k][i]],
                 "vertices": verts[i], "volume": float(self.volume[k][i]),
                 "mass": float(self.mass[k][i]), "marking": str(labels[i])}
                for i in range(self.n_cells(k))])
        incidence = []
        for k in range(1, n + 1):
            m = self.incidence[k].tocoo()
            order = np.lexsort((m.row, m.col))
            incidence.append([[int(m.row[j]), int(m.col[j]), int(m.data[j])] for j in order])
        return {
            "dimension": n, "shape": list(self.shape),
            "spacings": [[float(x) for x in h] for h in self.spacings],
            "origin": [float(x) for x in self.origin],
            "identifications": [[i.kind, list(i.flip)] for i in self.identifications],
            "cells": cells, "incidence": incidence,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, doc: dict) -> "MetricComplex":
        n = doc["dimension"]
        codes = {INTERIOR: 0, BOUNDARY_D: 1, BOUNDARY_E: 2, CORNER: 3}
        cell_axes, cell_index, volume, mass, marking = [], [], [], [], []
        for k in range(n + 1):
            cells = doc["cells"][k]
            cell_axes.append(np.array([sum(1 << a for a in c["axes"]) for c in cells],
                                      dtype=np.int64))
            cell_index.append(np.array([c["index"] for c in cells],
                                       dtype=np.int64).reshape(-1, n))
            volume.append(np.array([c["volume"] for c in cells], dtype=float))
            mass.append(np.array([c["mass"] for c in cells], dtype=float))
            marking.append(np.array([codes[c["marking"]] for c in cells], dtype=np.int8))
        incidence = [None]
        for k in range(1, n + 1):
            trip = np.array(doc["incidence"][k - 1], dtype=np.int64).reshape(-1, 3)
            incidence.append(sp.csr_matrix(
                (trip[:, 2], (trip[:, 0], trip[:, 1])),
                shape=(len(cell_axes[k - 1]), len(cell_axes[k]))))
        idents = [Identification(kind, tuple(flip)) for kind, flip in doc["identifications"]]
        return cls(dimension=n, shape=doc["shape"], spacings=doc["spacings"],
                   origin=doc["origin"], identifications=idents,
                   cell_axes=cell_axes, cell_index=cell_index, incidence=incidence,
                   volume=volume, mass=mass, marking=marking)

    @classmethod
    def loads(cls, text: str) -> "MetricComplex":
        return cls.from_json(json.loads(text))


def _centers(axes, index, spacings, origin) -> np.ndarray:
    out = np.empty(index.shape)
    for a in range(index.shape[1]):
        edges = np.concatenate([[0.0], np.cumsum(spacings[a])])
        idx = index[:, a]
        spans = (axes >> a) & 1
        lo = edges[idx]
        hi = edges[np.minimum(idx + 1, len(edges) - 1)]
        out[:, a] = origin[a] + np.where(spans == 1, 0.5 * (lo + hi), lo)
    return out


def _encode(axes, index, shape):
    n = len(shape)
    if len(index) == 0:
        return np.zeros(0, dtype=np.int64)
    lin = np.ravel_multi_index(tuple(index.T), tuple(s + 1 for s in shape))
    return axes + (lin.astype(np.int64) << n)


def _canonicalize(axes, index, shape, idents) -> np.ndarray:
    """Map cells to canonical representatives in place; return orientation signs."""
    n = len(shape)
    sign = np.ones(len(axes), dtype=np.int64)
    for _ in range(2 * n + 2):
        changed = False
        for j, ident in enumerate(idents):
            if ident.kind == "none":
                continue
            hit = (((axes >> j) & 1) == 0) & (index[:, j] == shape[j])
            if not hit.any():
                continue
            changed = True
            index[hit, j] = 0
            for a in ident.flip:
                spans = ((axes[hit] >> a) & 1) == 1
                col = index[hit, a]
                index[hit, a] = np.where(spans, shape[a] - 1 - col, shape[a] - col)
                sign[hit] *= np.where(spans, -1, 1)
        if not changed:
            return sign
    raise InvalidGluing("identification does not reach a canonical form")


def _spacings(spec: GridSpec) -> list[np.ndarray]:
    out = []
    for length, res in zip(spec.lengths, spec.resolution):
        if np.ndim(length) == 0:
            out.append(np.full(int(res), float(length) / int(res)))
        else:
            h = np.asarray(length, dtype=float)
            if len(h) != res:
                raise ValueError("explicit spacing array must match resolution")
            out.append(h)
    return out


def _active_mask(spec: GridSpec, shape, spacings, origin) -> np.ndarray:
    if spec.active is None:
        return np.ones(shape, dtype=bool)
    if callable(spec.active):
        grids = []
        for a in range(len(shape)):
            edges = np.concatenate([[0.0], np.cumsum(spacings[a])])
            grids.append(origin[a] + 0.5 * (edges[:-1] + edges[1:]))
        mesh = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, len(shape))
        return np.asarray(spec.active(mesh), dtype=bool).reshape(shape)
    mask = np.asarray(spec.active, dtype=bool)
    if mask.shape != tuple(shape):
        raise ValueError(f"active mask shape {mask.shape} != resolution {tuple(shape)}")
    return mask


def _validate_twists(mask, idents, spacings):
    n = mask.ndim
    for j, ident in enumerate(idents):
        if ident.kind != "twisted":
            continue
        if j in ident.flip or any(not 0 <= a < n for a in ident.flip):
            raise InvalidGluing(f"axis {j}: invalid flip axes {ident.flip}")
        first = np.take(mask, 0, axis=j)
        last = np.take(mask, -1, axis=j)
        flip_axes = [a if a < j else a - 1 for a in ident.flip]
        if not np.array_equal(np.flip(last, axis=flip_axes), first):
            raise InvalidGluing(f"axis {j}: cross-section is not symmetric under the twist")
        for a in ident.flip:
            if not np.allclose(spacings[a], spacings[a][::-1]):
                raise InvalidGluing(f"axis {a}: spacing not symmetric under the twist")


def build_complex(spec: GridSpec) -> MetricComplex:
    """Build the cubical complex described by ``spec``.

    Raises:
        EmptyComplex: no active top cells.
        InvalidGluing: twist not symmetric, or the glued boundary fails ∂∂ = 0.
    """
    n = len(spec.resolution)
    shape = tuple(int(r) for r in spec.resolution)
    if n == 0 or len(spec.lengths) != n or min(shape) < 1:
        raise ValueError("need matching lengths and resolutions >= 1")
    idents = [Identification.parse(v) for v in spec.identifications] or \
        [Identification()] * n
    if len(idents) != n:
        raise ValueError("one identification per axis required")
    spacings = _spacings(spec)
    origin = np.zeros(n) if spec.origin is None else np.asarray(spec.origin, dtype=float)
    mask = _active_mask(spec, shape, spacings, origin)
    if not mask.any():
        raise EmptyComplex("active-cell predicate removed every top cell")
    _validate_twists(mask, idents, spacings)

    top = np.argwhere(mask).astype(np.int64)
    top_vol = np.ones(len(top))
    for a in range(n):
        top_vol *= spacings[a][top[:, a]]

    cell_axes, cell_index, volume, mass, adjacency = [], [], [], [], []
    for k in range(n + 1):
        codes_all, weights_all = [], []
        for smask in _combinations(n, k):
            free = [a for a in range(n) if not smask >> a & 1]
            for offs in itertools.product((0, 1), repeat=len(free)):
                idx = top.copy()
                for a, o in zip(free, offs):
                    idx[:, a] += o
                axes = np.full(len(top), smask, dtype=np.int64)
                _canonicalize(axes, idx, shape, idents)
                codes_all.append(_encode(axes, idx, shape))
                weights_all.append(top_vol / 2 ** (n - k))
        codes = np.concatenate(codes_all)
        weights = np.concatenate(weights_all)
        uniq, inverse = np.unique(codes, return_inverse=True)
        mass.append(np.bincount(inverse, weights=weights, minlength=len(uniq)))
        adjacency.append(np.bincount(inverse, minlength=len(uniq)))
        axes = uniq & ((1 << n) - 1)
        lin = uniq >> n
        idx = np.stack(np.unravel_index(lin, tuple(s + 1 for s in shape)), axis=1).astype(np.int64)
        cell_axes.append(axes.astype(np.int64))
        cell_index.append(idx.reshape(-1, n))
        vol = np.ones(len(uniq))
        for a in range(n):
            spans = ((axes >> a) & 1) == 1
            vol[spans] *= spacings[a][idx[spans, a]]
        volume.append(vol)

    incidence = [None]
    codes = [_encode(cell_axes[k], cell_index[k], shape) for k in range(n + 1)]
    for k in range(1, n + 1):
        rows, cols, vals = [], [], []
        m = len(cell_axes[k])
        for smask in _combinations(n, k):
            sel = np.flatnonzero(cell_axes[k] == smask)
            if len(sel) == 0:
                continue
            for t, j in enumerate(_axes(smask, n)):
                for shift, coef in ((1, (-1) ** t), (0, -(-1) ** t)):
                    idx = cell_index[k][sel].copy()
                    idx[:, j] += shift
                    axes = np.full(len(sel), smask & ~(1 << j), dtype=np.int64)
                    sign = _canonicalize(axes, idx, shape, idents)
                    fc = _encode(axes, idx, shape)
                    pos = np.searchsorted(codes[k - 1], fc)
                    if np.any(pos >= len(codes[k - 1])) or \
                            np.any(codes[k - 1][np.minimum(pos, len(codes[k - 1]) - 1)] != fc):
                        raise InvalidGluing("boundary face missing from the complex")
                    rows.append(pos)
                    cols.append(sel)
                    vals.append(coef * sign)
        mat = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(len(cell_axes[k - 1]), m)).tocsr()
        mat.sum_duplicates()
        mat.eliminate_zeros()
        incidence.append(mat.astype(np.int64))
    for k in range(2, n + 1):
        prod = (incidence[k - 1] @ incidence[k]).tocoo()
        if np.any(prod.data != 0):
            raise InvalidGluing(f"glued boundary violates ∂∂ = 0 in degree {k}")

    marking = _mark_boundary(n, spec.marking, cell_axes, cell_index, adjacency,
                             incidence, spacings, origin)
    return MetricComplex(dimension=n, shape=shape, spacings=spacings, origin=origin,
                         identifications=idents, cell_axes=cell_axes,
                         cell_index=cell_index, incidence=incidence, volume=volume,
                         mass=mass, marking=marking)


def _mark_boundary(n, rule, cell_axes, cell_index, adjacency, incidence, spacings, origin):
    flag_d = [np.zeros(len(a), dtype=bool) for a in cell_axes]
    flag_e = [np.zeros(len(a), dtype=bool) for a in cell_axes]
    if n >= 1:
        bnd = np.flatnonzero(adjacency[n - 1] == 1)
        centers = _centers(cell_axes[n - 1], cell_index[n - 1], spacings, origin)
        full = (1 << n) - 1
        top = incidence[n].tocsr()
        for f in bnd:
            normal = (full & ~int(cell_axes[n - 1][f])).bit_length() - 1
            cell = top.indices[top.indptr[f]]
            outward = -1 if cell_index[n][cell][normal] == cell_index[n - 1][f][normal] else 1
            label = rule(centers[f], normal, outward)
            if label == BOUNDARY_D:
                flag_d[n - 1][f] = True
            elif label == BOUNDARY_E:
                flag_e[n - 1][f] = True
            else:
                raise ValueError(f"marking rule returned {label!r}")
        for k in range(n - 2, -1, -1):
            absb = abs(incidence[k + 1])
            flag_d[k] = (absb @ flag_d[k + 1].astype(np.int64)) > 0
            flag_e[k] = (absb @ flag_e[k + 1].astype(np.int64)) > 0
    marking = []
    for k in range(n + 1):
        code = np.zeros(len(cell_axes[k]), dtype=np.int8)
        code[flag_d[k]] = 1
        code[flag_e[k]] = 2
        code[flag_d[k] & flag_e[k]] = 3
        marking.append(code)
    return marking


def boundary_matrix(X: MetricComplex, k: int) -> sp.csr_matrix:
    """Signed integer matrix of ∂_k (rows: (k-1)-cells, columns: k-cells)."""
    X._check_degree(k, 1)
    return X.incidence[k]


def mass_weights(X: MetricComplex, k: int) -> np.ndarray:
    """Share of n-volume attributed to each k-cell."""
    X._check_degree(k, 0)
    return X.mass[k]


def check_degree(obj, k: int) -> None:
    if obj.degree != k:
        raise DegreeMismatch(f"expected degree {k}, got {obj.degree}")


__all__ = [
    "GridSpec", "Identification", "MetricComplex", "Chain", "Cochain",
    "build_complex", "boundary_matrix", "mass_weights",
    "INTERIOR", "BOUNDARY_D", "BOUNDARY_E", "CORNER",
]

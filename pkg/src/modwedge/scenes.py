"""Built-in scenes: complexes with named homology classes and reference values."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, ResolutionTooCoarse, UnknownScene
from .homology import relative_homology
from .mesh import BOUNDARY_D, BOUNDARY_E, Chain, GridSpec, MetricComplex, build_complex

AXIS_NAMES = "xyzw"
_REL_SIGN = {"eq": "=", "le": "<=", "lt": "<"}


@dataclass(frozen=True)
class Expected:
    """A reference value attached to a scene.

    Attributes:
        quantity: what is predicted, e.g. ``"dmod"``, ``"dmod_product"``,
            ``"cmod_upper"`` or ``"cmod_product_upper"``.
        label: class label the value refers to.
        formula: human-readable form of the prediction.
        provenance: how the value was obtained (closed form, mesh evaluation).
        relation: ``"eq"`` for a prediction, ``"le"`` for an upper bound and
            ``"lt"`` for a strict one.
    """

    quantity: str
    label: str
    formula: str
    provenance: str
    fn: Callable[[float], float] = field(repr=False, compare=False)
    relation: str = "eq"

    def value(self, p: float) -> float:
        return float(self.fn(p))

    def to_json(self, p: float | None = None) -> dict:
        doc = {"quantity": self.quantity, "class": self.label, "formula": self.formula,
               "provenance": self.provenance, "relation": self.relation}
        if p is not None:
            doc["value"] = self.value(p)
        return doc


@dataclass
class Scene:
    """A complex with featured classes.

    Attributes:
        name: registry name.
        params: constructor parameters.
        complex: the metric complex.
        featured_classes: label -> class. Classes flagged in ``flags`` may be
            torsion or zero; all others are non-torsion.
        expected: reference values with provenance.
        duals: label -> label of the featured class in the complementary degree.
        densities: explicit densities (label -> per-cell array) used for
            classical modulus bounds.
        flags: label -> note (e.g. ``"torsion"``).
    """

    name: str
    params: dict
    complex: MetricComplex
    featured_classes: dict
    expected: list = field(default_factory=list)
    duals: dict = field(default_factory=dict)
    densities: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def expected_for(self, quantity: str, label: str) -> Expected | None:
        for e in self.expected:
            if e.quantity == quantity and e.label == label:
                return e
        return None

    def describe(self) -> str:
        X = self.complex
        lines = [f"scene {self.name} {format_params(self.params)}",
                 f"  dimension {X.dimension}, cells per degree "
                 + " ".join(str(X.n_cells(k)) for k in range(X.dimension + 1))]
        for label, c in self.featured_classes.items():
            note = f" [{self.flags[label]}]" if label in self.flags else ""
            lines.append(f"  class {label}: degree {c.degree}, rel {c.rel or '-'}, "
                         f"coordinates {list(c.coords)}{note}")
        for e in self.expected:
            lines.append(f"  expected {e.quantity}({e.label}) {_REL_SIGN[e.relation]} "
                         f"{e.formula}  ({e.provenance})")
        return "\n".join(lines)


def sheet_chain(X: MetricComplex, axes, fixed: dict) -> Chain:
    """Sum of the cells spanning ``axes`` with the other coordinates fixed.

    Args:
        X: complex.
        axes: grid axes spanned by the cells (in increasing order).
        fixed: grid index of the lower corner along each remaining axis.

    Cells outside the complex are skipped, so on a masked grid the result is
    the part of the coordinate sheet that lies in the body.
    """
    axes = sorted(axes)
    n = X.dimension
    ranges = [range(X.shape[a]) if a in axes else [fixed.get(a, 0)] for a in range(n)]
    index = np.array(list(itertools.product(*ranges)), dtype=np.int64)
    mask = sum(1 << a for a in axes)
    ids, signs = X.lookup(len(axes), mask, index)
    vals = np.zeros(X.n_cells(len(axes)), dtype=np.int64)
    keep = ids >= 0
    np.add.at(vals, ids[keep], signs[keep])
    return Chain(len(axes), vals)


def _resolution(resolution, n):
    if np.isscalar(resolution):
        resolution = [int(resolution)] * n
    resolution = [int(r) for r in resolution]
    if len(resolution) != n or min(resolution) < 1:
        raise ConfigError(f"resolution must be {n} positive integers")
    return resolution


# --- constructors ------------------------------------------------------------

def flat_torus(lengths=(1.0, 1.0), resolution=16) -> Scene:
    """Flat torus with side lengths ``lengths``; classes are the axis windings."""
    lengths = [float(v) for v in lengths]
    n = len(lengths)
    if n not in (2, 3) or min(lengths) <= 0:
        raise ConfigError("flat_torus needs 2 or 3 positive lengths")
    res = _resolution(resolution, n)
    X = build_complex(GridSpec(lengths, res, ["periodic"] * n))
    H = relative_homology(X, 1)
    classes, expected = {}, []
    for i in range(n):
        label = AXIS_NAMES[i]
        classes[label] = H.class_of(sheet_chain(X, [i], {}), label)
        other = float(np.prod([lengths[j] for j in range(n) if j != i]))
        expected.append(Expected(
            "dmod", label, f"{other:g}*{lengths[i]:g}^(1-p)", "closed form, constant minimizer",
            lambda p, o=other, L=lengths[i]: o * L ** (1 - p)))
    if n == 2:
        # in 2D the dual of a winding class is the other winding class
        a, b = lengths
        expected.append(Expected("dmod_product", "x", "1", "closed form", lambda p: 1.0))
        expected.append(Expected(
            "cmod", "x", f"{b:g}*{a:g}^(1-p)", "closed form, constant density",
            lambda p, a=a, b=b: b * a ** (1 - p)))
    else:
        H2 = relative_homology(X, 2)
        for i in range(n):
            label = f"{AXIS_NAMES[i]}_sheet"
            others = [j for j in range(n) if j != i]
            classes[label] = H2.class_of(sheet_chain(X, others, {i: 0}), label)
        expected.append(Expected("dmod_product", "x", "1", "closed form", lambda p: 1.0))
    return Scene("flat_torus", {"lengths": lengths, "resolution": res}, X, classes, expected,
                 duals={"x": "y" if n == 2 else "x_sheet"})


def lohvansuu_cube(n=2, k=1, resolution=16) -> Scene:
    """Unit cube [0,1]^n with D = faces normal to the first k axes, E the rest.

    Class ``A`` spans the first k axes (degree k rel D); class ``B`` spans the
    remaining n-k axes (degree n-k rel E).
    """
    n, k = int(n), int(k)
    if n < 2:
        raise ConfigError("lohvansuu_cube needs n >= 2")
    if not 0 < k < n:
        raise ConfigError(f"k must satisfy 0 < k < n, got k={k}, n={n}")
    res = _resolution(resolution, n)

    def marking(center, axis, outward):
        return BOUNDARY_D if axis < k else BOUNDARY_E

    X = build_complex(GridSpec([1.0] * n, res, ["none"] * n, marking=marking))
    first, rest = list(range(k)), list(range(k, n))
    A = relative_homology(X, k, "D").class_of(
        sheet_chain(X, first, {a: res[a] // 2 for a in rest}), "A")
    B = relative_homology(X, n - k, "E").class_of(
        sheet_chain(X, rest, {a: res[a] // 2 for a in first}), "B")
    one = lambda p: 1.0  # noqa: E731
    expected = [Expected("dmod", "A", "1", "closed form, constant minimizer", one),
                Expected("dmod", "B", "1", "closed form, constant minimizer", one),
                Expected("dmod_product", "A", "1", "closed form", one)]
    if k == 1:
        expected.append(Expected("cmod", "A", "1", "closed form, constant density", one))
    if n - k == 1 or k == n - 1:
        expected.append(Expected("cmod_product_upper", "A", "1", "duality inequality", one,
                                 relation="le"))
    return Scene("lohvansuu_cube", {"n": n, "k": k, "resolution": res}, X,
                 {"A": A, "B": B}, expected, duals={"A": "B", "B": "A"})


def cylinder(base=(1.0,), height=1.0, resolution=16, ends="both") -> Scene:
    """Box base × [0, height]; D = the end faces listed in ``ends``.

    ``ends`` is ``"both"`` or ``"bottom"``. Class ``path`` is the vertical
    segment; class ``section`` is the horizontal slice at mid height. With a
    single marked end the path class is zero and flagged as such.
    """
    base = [float(v) for v in np.atleast_1d(base)]
    height = float(height)
    n = len(base) + 1
    if ends not in ("both", "bottom"):
        raise ConfigError("ends must be 'both' or 'bottom'")
    res = _resolution(resolution, n)

    def marking(center, axis, outward):
        if axis != n - 1:
            return BOUNDARY_E
        if ends == "both" or center[n - 1] < height / 2:
            return BOUNDARY_D
        return BOUNDARY_E

    X = build_complex(GridSpec(base + [height], res, ["none"] * n, marking=marking))
    mid = {a: res[a] // 2 for a in range(n - 1)}
    path = relative_homology(X, 1, "D").class_of(sheet_chain(X, [n - 1], mid), "path")
    section = relative_homology(X, n - 1, "E").class_of(
        sheet_chain(X, list(range(n - 1)), {n - 1: res[n - 1] // 2}), "section")
    area = float(np.prod(base))
    expected, flags = [], {}
    if ends == "both":
        expected = [
            Expected("dmod", "path", f"{area:g}*{height:g}^(1-p)",
                     "closed form, constant minimizer", lambda p: area * height ** (1 - p)),
            Expected("cmod", "path", f"{area:g}*{height:g}^(1-p)",
                     "closed form, constant density", lambda p: area * height ** (1 - p)),
            Expected("dmod_product", "path", "1", "closed form", lambda p: 1.0)]
    else:
        flags = {"path": "zero class", "section": "zero class"}
    return Scene("cylinder", {"base": base, "height": height, "resolution": res, "ends": ends},
                 X, {"path": path, "section": section}, expected,
                 duals={"path": "section", "section": "path"}, flags=flags)


def klein_bottle(resolution=8) -> Scene:
    """Unit square with x periodic and y glued with a flip of x.

    H_1 is Z ⊕ Z/2; class ``loop`` is the free generator, ``torsion`` the
    order-two class (flagged).
    """
    res = _resolution(resolution, 2)
    X = build_complex(GridSpec([1.0, 1.0], res, ["periodic", ("twisted", (0,))]))
    H = relative_homology(X, 1)
    loop = H.class_of(sheet_chain(X, [1], {0: 0}), "loop")
    tors = [0] * H.betti + [1] * len(H.torsion_invariants)
    classes = {"loop": loop, "torsion": H.homology_class(tors, "torsion")}
    return Scene("klein_bottle", {"resolution": res}, X, classes, [],
                 flags={"torsion": "torsion"})


def _dumbbell(eps):
    def inside(c):
        x, y = c[:, 0], c[:, 1]
        bells = ((x - 1) ** 2 + y ** 2 <= 0.25) | ((x + 1) ** 2 + y ** 2 <= 0.25)
        handle = (np.abs(x) <= 1) & (np.abs(y) <= eps)
        return bells | handle
    return inside


def freedman_he(eps=0.05, resolution=20, nz=4, twisted=True) -> Scene:
    """Solid torus with dumbbell cross-section, optionally glued with a half turn.

    The cross-section is two disks of radius 1/2 centred at (±1, 0) joined by
    the bar [-1, 1] × [-eps, eps], rasterized by cell centres on a grid with
    ``resolution`` cells per unit length over [-1.5, 1.5] × [-0.5, 0.5]. The
    third axis has ``nz`` cells over [0, 1]; with ``twisted`` the top is glued
    to the bottom by (x, y) -> (-x, -y).

    Class ``c`` is the longitudinal H_1 generator, ``cprime`` the H_2(M, ∂M)
    generator (a cross-section). The explicit densities are 1 on cells over
    the central part of the bar (for c) and a constant on cells over the bells
    (for c'); their moduli are mesh-relative upper bounds once certified.

    Raises:
        ResolutionTooCoarse: fewer than two cell rows fit across the bar.
    """
    eps = float(eps)
    res, nz = int(resolution), int(nz)
    if not 0 < eps <= 0.25:
        raise ConfigError("eps must lie in (0, 1/4]")
    if res < 2 or nz < 1:
        raise ConfigError("resolution must be >= 2 and nz >= 1")
    h = 1.0 / res
    centres = -0.5 + h * (np.arange(res) + 0.5)
    rows = int(np.sum(np.abs(centres) <= eps + 1e-12))
    if rows < 2:
        raise ResolutionTooCoarse(
            f"only {rows} cell row(s) across the bar of half-width {eps}; increase resolution")
    inside = _dumbbell(eps + 1e-12)
    shape = (3 * res, res, nz)
    spacings = [3.0, 1.0, 1.0]
    origin = [-1.5, -0.5, 0.0]
    xc = origin[0] + h * (np.arange(shape[0]) + 0.5)
    yc = origin[1] + h * (np.arange(shape[1]) + 0.5)
    XX, YY = np.meshgrid(xc, yc, indexing="ij")
    cross = inside(np.column_stack([XX.ravel(), YY.ravel()])).reshape(shape[:2])
    cross = cross | cross[::-1, ::-1]
    active = np.repeat(cross[:, :, None], nz, axis=2)
    ident = ["none", "none", ("twisted", (0, 1)) if twisted else "periodic"]
    X = build_complex(GridSpec(spacings, list(shape), ident, active=active, origin=origin))
    from .dmod import poincare_dual

    H1 = relative_homology(X, 1)
    H2 = relative_homology(X, 2, "E")
    if H1.betti != 1 or H2.betti != 1:
        raise ResolutionTooCoarse(f"unexpected ranks H1={H1.betti}, H2={H2.betti}")
    # c' is the cross-section class oriented so that the dual of c is +1 on it
    c = H1.generator(0, "c")
    section = sheet_chain(X, [0, 1], {2: 0})
    alpha, _, _ = poincare_dual(X, c)
    sign = 1 if float(np.dot(alpha.values, section.values)) > 0 else -1
    cprime = H2.class_of(Chain(2, sign * section.values), "cprime")

    # explicit densities on the built mesh
    edge_centres = X.centers(1)
    rho_c = (np.abs(edge_centres[:, 0]) < 0.5).astype(float)
    face_centres = X.centers(2)
    bells = np.abs(face_centres[:, 0]) > 0.5
    rho_cp = np.where(bells, 1.0, 0.0)
    scene = Scene("freedman_he", {"eps": eps, "resolution": res, "nz": nz, "twisted": bool(twisted)},
                  X, {"c": c, "cprime": cprime}, [], duals={"c": "cprime", "cprime": "c"},
                  densities={"c": rho_c, "cprime": rho_cp})

    def bound(label, p):
        from .cmod import density_bound
        return density_bound(X, scene.featured_classes[label], scene.densities[label], p)

    scene.expected = [
        Expected("cmod_upper", "c", "mass-weighted bar density / certified length^p",
                 "explicit density on the bar, evaluated on the mesh",
                 lambda p: bound("c", p), relation="le"),
        Expected("cmod_upper", "cprime", "mass-weighted bell density / certified area^p",
                 "explicit density on the bells, evaluated on the mesh",
                 lambda p: bound("cprime", p), relation="le"),
        Expected("dmod_product", "c", "1", "duality law", lambda p: 1.0),
        Expected("cmod_product_upper", "c", "1", "strict classical inequality",
                 lambda p: 1.0, relation="lt"),
    ]
    return scene


# --- registry ----------------------------------------------------------------

@dataclass(frozen=True)
class SceneEntry:
    constructor: Callable
    schema: dict
    summary: str


def _floats(text):
    return [float(v) for v in str(text).replace("x", ",").split(",") if v]


def _ints(text):
    vals = [int(v) for v in str(text).replace("x", ",").split(",") if v]
    return vals[0] if len(vals) == 1 else vals


def _bool(text):
    if isinstance(text, bool):
        return text
    if str(text).lower() in ("1", "true", "yes"):
        return True
    if str(text).lower() in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


SCENES = {
    "flat_torus": SceneEntry(flat_torus, {
        "lengths": (_floats, "1,1", "side lengths, 2 or 3 values"),
        "resolution": (_ints, "16", "cells per axis (one value or one per axis)")},
        "flat 2- or 3-torus; classes x, y[, z] and the coordinate sheets in 3D"),
    "lohvansuu_cube": SceneEntry(lohvansuu_cube, {
        "n": (int, "2", "dimension"),
        "k": (int, "1", "degree of class A, 0 < k < n"),
        "resolution": (_ints, "16", "cells per axis")},
        "unit cube with D normal to the first k axes; classes A (rel D) and B (rel E)"),
    "cylinder": SceneEntry(cylinder, {
        "base": (_floats, "1", "base side lengths"),
        "height": (float, "1", "height"),
        "resolution": (_ints, "16", "cells per axis"),
        "ends": (str, "both", "marked ends: both or bottom")},
        "box with marked ends; classes path (rel D) and section (rel E)"),
    "klein_bottle": SceneEntry(klein_bottle, {
        "resolution": (_ints, "8", "cells per axis")},
        "Klein bottle; classes loop (free) and torsion (order 2)"),
    "freedman_he": SceneEntry(freedman_he, {
        "eps": (float, "0.05", "half-width of the bar joining the bells"),
        "resolution": (int, "20", "cells per unit length in the cross-section"),
        "nz": (int, "4", "cells along the gluing axis"),
        "twisted": (_bool, "true", "glue the ends with a half turn")},
        "twisted dumbbell solid torus; classes c (H_1) and cprime (H_2 rel boundary)"),
}


def parse_params(text: str | dict | None) -> dict:
    """Parse ``"key=value;key=value"`` into a dict of strings."""
    if text is None:
        return {}
    if isinstance(text, dict):
        return dict(text)
    out = {}
    for part in str(text).split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigError(f"parameter {part!r} is not key=value")
        key, value = part.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def format_params(params: dict) -> str:
    def fmt(v):
        if isinstance(v, (list, tuple)):
            return ",".join(fmt(x) for x in v)
        if isinstance(v, bool):
            return str(v).lower()
        return f"{v:g}" if isinstance(v, float) else str(v)
    return ";".join(f"{k}={fmt(v)}" for k, v in params.items())


def get_scene(name: str, params=None) -> Scene:
    """Build a registered scene from a name and parameters.

    Args:
        name: registry key.
        params: dict (values may be typed or strings) or a
            ``"key=value;key=value"`` string.

    Raises:
        UnknownScene: no such scene.
        ConfigError: unknown or malformed parameter.
    """
    if name not in SCENES:
        raise UnknownScene(f"unknown scene {name!r}; known: {', '.join(sorted(SCENES))}")
    entry = SCENES[name]
    raw = parse_params(params)
    kwargs = {}
    for key, value in raw.items():
        if key not in entry.schema:
            raise ConfigError(f"scene {name} has no parameter {key!r}")
        conv = entry.schema[key][0]
        try:
            kwargs[key] = value if not isinstance(value, str) else conv(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return entry.constructor(**kwargs)


def list_scenes() -> str:
    lines = []
    for name in sorted(SCENES):
        entry = SCENES[name]
        lines.append(f"{name}: {entry.summary}")
        for key, (_, default, doc) in entry.schema.items():
            lines.append(f"    {key} (default {default}): {doc}")
    return "\n".join(lines)


__all__ = [
    "Scene", "Expected", "SceneEntry", "SCENES", "flat_torus", "lohvansuu_cube", "cylinder",
    "klein_bottle", "freedman_he", "get_scene", "list_scenes", "parse_params",
    "format_params", "sheet_chain",
]

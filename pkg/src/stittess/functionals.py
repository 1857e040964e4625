"""Translation-covariant window functionals evaluated on half-open cuboids.

All functionals take (tessellation, region) with the region inside the
simulation window and see only internal dividing facets: the window boundary
is an artifact of the bounded construction and is excluded, so vertex and
segment counts require a window strictly larger than the measured region.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import (
    REL_TOL,
    ConvexPolytope,
    CuboidRegion,
    Facet,
    RegionNotCoveredError,
    boundary_mass_in_region,
    contained_in,
    intersect_cuboid,
    intrinsic_features,
)
from .process import Tessellation

ADDITIVE = "additive"
SUBADDITIVE = "subadditive"
SUPERADDITIVE = "superadditive"

#: selectors usable with the cell-sum functionals
PHI_SELECTORS = ("count", "volume", "boundary_measure", "diameter", "face_count")


def _check_region(tess: Tessellation, region: CuboidRegion) -> None:
    if region.dim != tess.dim:
        raise RegionNotCoveredError("region dimension does not match the tessellation")
    corners = _region_corners(region)
    if not all(tess.window.contains_point(c) for c in corners):
        raise RegionNotCoveredError("measured region is not covered by the window")


def _region_corners(region: CuboidRegion) -> np.ndarray:
    axes = [(lo, hi) for lo, hi in zip(region.lower, region.upper)]
    return np.array(list(itertools.product(*axes)))


# -- counting functionals ----------------------------------------------------


def vertex_count(tess: Tessellation, region: CuboidRegion) -> int:
    """Interior corner points of the cell complex inside the half-open region.

    In 2D these are the T-nodes where a chord ends on an older chord; corner
    points on the window boundary are construction artifacts and never
    counted.
    """
    _check_region(tess, region)
    pts = tess.internal_vertices()
    if pts.shape[0] == 0:
        return 0
    return int(np.count_nonzero(region.contains_points(pts)))


def boundary_mass(tess: Tessellation, region: CuboidRegion) -> float:
    """Total (dim-1)-volume of internal dividing facets inside the region."""
    _check_region(tess, region)
    return boundary_mass_in_region(tess.facets(), region)


def segment_center_count(tess: Tessellation, region: CuboidRegion) -> int:
    """Midpoints of uncensored maximal segments (2D) inside the region.

    Each split chord is one maximal segment almost surely; chords touching
    the window boundary are censored (their true extent is unknown) and are
    excluded here, see censored_segment_count.
    """
    if tess.dim != 2:
        raise RegionNotCoveredError("maximal segments are a 2D notion")
    _check_region(tess, region)
    mids = tess.derived_cache.get("segment_midpoints")
    if mids is None:
        mids = np.array(
            [ev.facet.midpoint() for ev in tess.events if not ev.censored]
        ).reshape(-1, 2)
        tess.derived_cache["segment_midpoints"] = mids
    if mids.shape[0] == 0:
        return 0
    return int(np.count_nonzero(region.contains_points(mids)))


def censored_segment_count(tess: Tessellation) -> int:
    return sum(1 for ev in tess.events if ev.censored)


# -- k-face reference points -------------------------------------------------


def _cell_kfaces(poly: ConvexPolytope, k: int) -> list[np.ndarray]:
    """Vertex arrays of the k-faces of one cell."""
    if not (0 <= k <= poly.dim - 1):
        raise ValueError("face dimension k must lie in 0..dim-1")
    if poly.dim == 2:
        ring = poly.vertices
        m = ring.shape[0]
        if k == 0:
            return [ring[i : i + 1] for i in range(m)]
        return [np.array([ring[i], ring[(i + 1) % m]]) for i in range(m)]
    verts = poly.vertices
    if k == 0:
        return [verts[i : i + 1] for i in range(verts.shape[0])]
    if k == 1:
        return [np.array([verts[i], verts[j]]) for i, j, _, _ in poly._edge_index]
    return [ring for ring, _ in poly._facets]


def _min_enclosing_circle(points: np.ndarray) -> np.ndarray:
    """Center of the smallest enclosing circle of 2D points (Welzl)."""

    def circle_two(a, b):
        c = (a + b) / 2.0
        return c, float(np.linalg.norm(a - c))

    def circle_three(a, b, c):
        ax, ay = a
        bx, by = b
        cx, cy = c
        d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
        if abs(d) < 1e-300:
            return None
        ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay) + (cx**2 + cy**2) * (ay - by)) / d
        uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx) + (cx**2 + cy**2) * (bx - ax)) / d
        center = np.array([ux, uy])
        return center, float(np.linalg.norm(a - center))

    def covers(circle, p, eps=1e-12):
        center, r = circle
        return np.linalg.norm(p - center) <= r * (1.0 + eps) + eps

    pts = [np.asarray(p, dtype=float) for p in points]
    if len(pts) == 1:
        return pts[0]
    circle = circle_two(pts[0], pts[1])
    for i in range(2, len(pts)):
        if covers(circle, pts[i]):
            continue
        circle = circle_two(pts[i], pts[0])
        for j in range(1, i):
            if covers(circle, pts[j]):
                continue
            circle = circle_two(pts[i], pts[j])
            for l in range(j):
                if covers(circle, pts[l]):
                    continue
                c3 = circle_three(pts[i], pts[j], pts[l])
                if c3 is not None:
                    circle = c3
    return circle[0]


def face_reference_point(face: np.ndarray) -> np.ndarray:
    """Circumcenter rule: center of the smallest ball enclosing the face's
    vertices (computed in the face's own plane for 3D polygons)."""
    face = np.asarray(face, dtype=float)
    if face.shape[0] == 1:
        return face[0]
    if face.shape[0] == 2:
        return face.mean(axis=0)
    if face.shape[1] == 2:
        return _min_enclosing_circle(face)
    origin = face[0]
    rel = face - origin
    e1 = rel[1] / np.linalg.norm(rel[1])
    n = np.cross(rel[1], rel[2])
    n /= np.linalg.norm(n)
    e2 = np.cross(n, e1)
    uv = np.column_stack([rel @ e1, rel @ e2])
    c = _min_enclosing_circle(uv)
    return origin + c[0] * e1 + c[1] * e2


def _dedup_faces(faces: list[np.ndarray], tol: float) -> list[np.ndarray]:
    """Merge faces whose vertex sets coincide within tol (shared cell faces)."""
    kept: list[np.ndarray] = []
    keys: list[tuple[int, np.ndarray]] = []
    for face in faces:
        centroid = face.mean(axis=0)
        match = False
        for (nverts, other_centroid), other in zip(keys, kept):
            if nverts != face.shape[0]:
                continue
            if np.max(np.abs(other_centroid - centroid)) > tol:
                continue
            if _same_point_set(face, other, tol):
                match = True
                break
        if not match:
            kept.append(face)
            keys.append((face.shape[0], centroid))
    return kept


def _same_point_set(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    used = np.zeros(b.shape[0], dtype=bool)
    for p in a:
        d = np.max(np.abs(b - p), axis=1)
        d[used] = np.inf
        j = int(np.argmin(d))
        if d[j] > tol:
            return False
        used[j] = True
    return True


def _face_on_window(face: np.ndarray, window: ConvexPolytope, tol: float) -> bool:
    normals, offsets = window.halfspace_arrays
    on = np.abs(face @ normals.T - offsets) <= tol
    return bool(np.any(np.all(on, axis=0)))


def kface_reference_count(tess: Tessellation, region: CuboidRegion, k: int) -> int:
    """Count k-faces of surviving cells whose reference point lies in the
    region; faces shared by adjacent cells are merged, faces lying on the
    window boundary are excluded."""
    _check_region(tess, region)
    refs = tess.derived_cache.get(("kface_refs", k))
    if refs is None:
        tol = 1e-9 * tess.window.diameter
        faces: list[np.ndarray] = []
        for cell in tess.cells:
            faces.extend(_cell_kfaces(cell.polytope, k))
        faces = _dedup_faces(faces, tol)
        refs = np.array(
            [
                face_reference_point(face)
                for face in faces
                if not _face_on_window(face, tess.window, tol)
            ]
        ).reshape(-1, tess.dim)
        tess.derived_cache[("kface_refs", k)] = refs
    if refs.shape[0] == 0:
        return 0
    return int(np.count_nonzero(region.contains_points(refs)))


# -- cell sums ----------------------------------------------------------------


def _phi_value(poly: ConvexPolytope, phi: str, k: int | None = None) -> float:
    if phi == "count":
        return 1.0
    feats = intrinsic_features(poly)
    if phi == "volume":
        return feats.volume
    if phi == "boundary_measure":
        return feats.boundary_measure
    if phi == "diameter":
        return feats.diameter
    if phi == "face_count":
        if k is None:
            raise ValueError("face_count selector needs the face dimension k")
        return float(feats.face_counts[k])
    raise ValueError(f"unknown feature selector {phi!r}")


def contained_cell_sum(
    tess: Tessellation, region: CuboidRegion, phi: str = "count", k: int | None = None
) -> float:
    """Sum of phi over surviving cells completely contained in the half-open
    region.  Empirically superadditive: a cell inside the union of two parts
    may be inside neither part."""
    _check_region(tess, region)
    total = 0.0
    for cell in tess.cells:
        if contained_in(cell.polytope, region):
            total += _phi_value(cell.polytope, phi, k)
    return total


def visible_cell_sum(
    tess: Tessellation, region: CuboidRegion, phi: str = "count", k: int | None = None
) -> float:
    """Sum of phi over cell pieces visible in the region (cells clipped to
    closure(region), empty clips dropped)."""
    _check_region(tess, region)
    total = 0.0
    vol_floor = 1e-12 * region.volume
    for cell in tess.cells:
        piece = intersect_cuboid(cell.polytope, region)
        if piece is not None and piece.volume > vol_floor:
            total += _phi_value(piece, phi, k)
    return total


def power_functional(tess: Tessellation, region: CuboidRegion, alpha: float) -> float:
    """boundary_mass ** alpha for 0 < alpha < 1 (concave, hence subadditive)."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("power exponent must lie strictly between 0 and 1")
    return boundary_mass(tess, region) ** alpha


# -- functional registry -------------------------------------------------------


@dataclass(frozen=True)
class FunctionalSpec:
    """Named functional with parameters and its declared additivity kind.

    The kind is what the property tests verify, not an assumption the
    evaluator relies on.
    """

    name: str
    kind: str
    params: dict = field(default_factory=dict)

    def label(self) -> str:
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}({inner})"


_REGISTRY: dict[str, tuple[Callable, str]] = {}


def register_functional(name: str, kind: str, fn: Callable) -> None:
    """Extension hook: fn(tessellation, region, params) -> float.

    Reference-point counts for other geometric objects can be plugged in here
    without touching the evaluator or the harness.
    """
    if kind not in (ADDITIVE, SUBADDITIVE, SUPERADDITIVE):
        raise ValueError("kind must be additive, subadditive or superadditive")
    _REGISTRY[name] = (fn, kind)


def _register(name: str, kind: str, fn: Callable) -> None:
    _REGISTRY[name] = (fn, kind)


_register("vertex_count", ADDITIVE, lambda tess, region, p: float(vertex_count(tess, region)))
_register("boundary_mass", ADDITIVE, lambda tess, region, p: boundary_mass(tess, region))
_register(
    "segment_centers", ADDITIVE, lambda tess, region, p: float(segment_center_count(tess, region))
)
_register(
    "kface_refs",
    ADDITIVE,
    lambda tess, region, p: float(kface_reference_count(tess, region, p["k"])),
)
_register(
    "contained_cells",
    SUPERADDITIVE,
    lambda tess, region, p: contained_cell_sum(tess, region, p.get("phi", "count"), p.get("k")),
)
_register(
    "visible_cells",
    SUBADDITIVE,
    lambda tess, region, p: visible_cell_sum(tess, region, p.get("phi", "count"), p.get("k")),
)
_register(
    "boundary_power", SUBADDITIVE, lambda tess, region, p: power_functional(tess, region, p["alpha"])
)


def functional(name: str, **params) -> FunctionalSpec:
    """Look up a registered functional; kind defaults come from the registry.

    visible_cells with phi='volume' is exactly additive (Lebesgue coverage)
    and is declared as such.
    """
    if name not in _REGISTRY:
        raise KeyError(f"unknown functional {name!r}; known: {sorted(_REGISTRY)}")
    kind = _REGISTRY[name][1]
    if name == "visible_cells" and params.get("phi") == "volume":
        kind = ADDITIVE
    if params.pop("negate", False):
        if kind == SUPERADDITIVE:
            kind = SUBADDITIVE
        elif kind == SUBADDITIVE:
            kind = SUPERADDITIVE
        params["_negate"] = True
    return FunctionalSpec(name=name, kind=kind, params=params)


def evaluate(spec: FunctionalSpec, tess: Tessellation, region: CuboidRegion) -> float:
    fn, _ = _REGISTRY[spec.name]
    value = fn(tess, region, spec.params)
    if spec.params.get("_negate"):
        return -value
    return value


def functional_names() -> tuple:
    return tuple(sorted(_REGISTRY))


# -- the unit-cube lattice grid -------------------------------------------------


@dataclass(frozen=True)
class CuboidGrid:
    """Unit-cube partition of [-n, n[^dim shifted by an optional origin.

    Cube c_i spans [i_r, i_r + 1[ per coordinate for every integer vector i
    with -n <= i_r < n, giving (2n)^dim cubes.  The index metric is the
    maximum metric.
    """

    n: int
    dim: int
    origin: tuple = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("grid level n must be at least 1")
        if self.dim not in (2, 3):
            raise ValueError("grid dimension must be 2 or 3")
        if self.origin is None:
            object.__setattr__(self, "origin", tuple(0.0 for _ in range(self.dim)))

    def indices(self) -> list[tuple]:
        rng = range(-self.n, self.n)
        return list(itertools.product(rng, repeat=self.dim))

    def cuboid(self, index: Sequence[int]) -> CuboidRegion:
        lo = np.asarray(index, dtype=float) + np.asarray(self.origin)
        return CuboidRegion.make(lo, lo + 1.0)

    def union_region(self) -> CuboidRegion:
        lo = np.asarray(self.origin) - self.n
        hi = np.asarray(self.origin) + self.n
        return CuboidRegion.make(lo, hi)

    @staticmethod
    def distance(i: Sequence[int], j: Sequence[int]) -> int:
        return int(max(abs(a - b) for a, b in zip(i, j)))

    def shell_size(self, k: int) -> int:
        """Lattice points at maximum-metric distance exactly k from a fixed
        center: (2k+1)^dim - (2k-1)^dim."""
        if k == 0:
            return 1
        return (2 * k + 1) ** self.dim - (2 * k - 1) ** self.dim


def evaluate_on_grid(tess: Tessellation, spec: FunctionalSpec, grid: CuboidGrid) -> np.ndarray:
    """Per-cube functional values, ordered like grid.indices()."""
    return np.array([evaluate(spec, tess, grid.cuboid(i)) for i in grid.indices()])

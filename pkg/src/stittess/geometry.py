"""Convex geometry kernel for cell-division tessellations in 2 and 3 dimensions.

Cells are bounded convex polytopes that only ever shrink by one halfspace at a
time, so no general vertex enumeration is needed: 2D cells are ordered vertex
rings, 3D cells are facet lists (planar convex rings with outward normals)
maintained incrementally under plane clips.

All values are immutable after construction and all operations are pure, so
they are safe to share across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

# Geometric predicates are resolved at REL_TOL relative to the cell diameter.
REL_TOL = 1e-9
# A split child below this relative volume is treated as degenerate; the
# caller is expected to resample the cutting hyperplane.
DEGENERATE_REL_VOLUME = 1e-12


class GeometryError(Exception):
    """Inconsistent geometric state (face lattice corruption, bad input)."""


class DegenerateSplitError(GeometryError):
    """A split produced a child of negligible volume; resample the cut."""


class WindowNotContainedError(GeometryError):
    """Restriction target is not contained in the source window."""


class RegionNotCoveredError(GeometryError):
    """Measured region is not covered by the tessellation window."""


def canonical_direction(u: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Normalize u and flip it into the canonical hemisphere.

    The canonical representative has its first coordinate that differs from
    zero (beyond tol) positive, which makes (normal, offset) pairs unique per
    hyperplane.
    """
    u = np.asarray(u, dtype=float)
    norm = float(np.linalg.norm(u))
    if norm <= 0.0 or not np.isfinite(norm):
        raise GeometryError("direction must be a nonzero finite vector")
    u = u / norm
    for x in u:
        if abs(x) > tol:
            if x < 0.0:
                u = -u
            break
    return u


@dataclass(frozen=True)
class Hyperplane:
    """Affine hyperplane {x : normal . x = offset} with canonical unit normal."""

    normal: np.ndarray
    offset: float

    @staticmethod
    def make(normal: Sequence[float], offset: float) -> "Hyperplane":
        """Plane {x : normal . x = offset}; the stored pair is normalized to a
        canonical unit normal with the offset rescaled accordingly."""
        u = np.asarray(normal, dtype=float)
        norm = float(np.linalg.norm(u))
        if norm <= 0.0 or not np.isfinite(norm):
            raise GeometryError("normal must be a nonzero finite vector")
        offset = float(offset) / norm
        n = canonical_direction(u)
        # flipping the normal flips the sign of the offset
        if float(np.dot(n, u)) < 0.0:
            offset = -offset
        n.setflags(write=False)
        return Hyperplane(n, offset)

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.normal - self.offset

    def translate(self, a: np.ndarray) -> "Hyperplane":
        return Hyperplane(self.normal, self.offset + float(self.normal @ np.asarray(a, dtype=float)))


@dataclass(frozen=True)
class CuboidRegion:
    """Half-open axis cuboid [lower, upper[ with the membership rule
    lower_r <= x_r < upper_r in every coordinate."""

    lower: tuple
    upper: tuple

    @staticmethod
    def make(lower: Sequence[float], upper: Sequence[float]) -> "CuboidRegion":
        lo = tuple(float(x) for x in lower)
        hi = tuple(float(x) for x in upper)
        if len(lo) != len(hi) or len(lo) not in (2, 3):
            raise GeometryError("cuboid bounds must both have dimension 2 or 3")
        if any(l >= u for l, u in zip(lo, hi)):
            raise GeometryError("cuboid requires lower < upper in every coordinate")
        return CuboidRegion(lo, hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.asarray(self.upper) - np.asarray(self.lower)))

    def contains_points(self, points: np.ndarray) -> np.ndarray:
        """Vectorized half-open membership (exact comparisons, no tolerance)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return np.all(pts >= lo, axis=1) & np.all(pts < hi, axis=1)

    def contains_point(self, x: Sequence[float]) -> bool:
        return bool(self.contains_points(np.asarray(x))[0])

    def translate(self, a: Sequence[float]) -> "CuboidRegion":
        a = np.asarray(a, dtype=float)
        return CuboidRegion.make(np.asarray(self.lower) + a, np.asarray(self.upper) + a)

    def to_polytope(self) -> "ConvexPolytope":
        return ConvexPolytope.from_cuboid(self.lower, self.upper)


def _ring_area(ring: np.ndarray) -> float:
    x = ring[:, 0]
    y = ring[:, 1]
    wrap = x[-1] * y[0] - x[0] * y[-1]
    return 0.5 * (float(np.dot(x[:-1], y[1:]) - np.dot(y[:-1], x[1:])) + wrap)


def _polygon3_area(ring: np.ndarray) -> float:
    v = ring - ring[0]
    cross = np.cross(v[1:-1], v[2:])
    return 0.5 * float(np.linalg.norm(cross.sum(axis=0)))


def _dedup_points(points: np.ndarray, tol: float) -> np.ndarray:
    """Merge points closer than tol; order of first appearance is kept."""
    pts = np.asarray(points)
    m = pts.shape[0]
    if m <= 1:
        return pts
    close = np.max(np.abs(pts[:, None, :] - pts[None, :, :]), axis=-1) <= tol
    keep = [i for i in range(m) if not close[i, :i].any()]
    return pts if len(keep) == m else pts[keep]


def _clip_ring(ring: np.ndarray, s: np.ndarray, tol: float):
    """Split a convex ring by the signed distances s of its vertices.

    Returns (neg_ring, pos_ring, cut_points): vertices with |s| <= tol belong
    to both sides and to the cut.
    """
    m = ring.shape[0]
    neg: list[np.ndarray] = []
    pos: list[np.ndarray] = []
    cut: list[np.ndarray] = []
    for i in range(m):
        p = ring[i]
        sp = s[i]
        j = i + 1 if i + 1 < m else 0
        sq = s[j]
        if sp <= tol:
            neg.append(p)
        if sp >= -tol:
            pos.append(p)
        if abs(sp) <= tol:
            cut.append(p)
        if (sp > tol and sq < -tol) or (sp < -tol and sq > tol):
            t = sp / (sp - sq)
            x = p + t * (ring[j] - p)
            neg.append(x)
            pos.append(x)
            cut.append(x)
    return neg, pos, cut


def _plane_basis(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = int(np.argmin(np.abs(u)))
    axis = np.zeros(3)
    axis[k] = 1.0
    e1 = np.cross(u, axis)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(u, e1)
    return e1, e2


class ConvexPolytope:
    """Bounded convex cell: halfspace history plus a cached vertex realization.

    The halfspace list records {x : n . x <= c} constraints in the order they
    were applied (window faces first, one more per ancestor split).
    """

    def __init__(self, dim: int, ring=None, facets=None, halfspaces=None):
        self.dim = int(dim)
        if self.dim == 2:
            ring = np.asarray(ring, dtype=float)
            if ring.ndim != 2 or ring.shape[0] < 3 or ring.shape[1] != 2:
                raise GeometryError("2D cell needs a ring of at least 3 vertices")
            if _ring_area(ring) < 0.0:
                ring = ring[::-1].copy()
            self._ring = ring
            self._facets = None
        elif self.dim == 3:
            if not facets or len(facets) < 4:
                raise GeometryError("3D cell needs at least 4 facets")
            self._ring = None
            self._facets = facets  # list of (verts (m,3), outward unit normal)
        else:
            raise GeometryError("only dimensions 2 and 3 are supported")
        self.halfspaces = list(halfspaces) if halfspaces is not None else self._derived_halfspaces()

    # -- construction ------------------------------------------------------

    @staticmethod
    def from_cuboid(lower: Sequence[float], upper: Sequence[float]) -> "ConvexPolytope":
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        dim = lo.shape[0]
        if dim == 2:
            ring = np.array(
                [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]]
            )
            hs = ConvexPolytope._cuboid_halfspaces(lo, hi)
            return ConvexPolytope(2, ring=ring, halfspaces=hs)
        if dim == 3:
            facets = []
            for r in range(3):
                for sign, c in ((-1.0, lo[r]), (1.0, hi[r])):
                    other = [s for s in range(3) if s != r]
                    corners = []
                    for a in (lo[other[0]], hi[other[0]]):
                        for b in (lo[other[1]], hi[other[1]]):
                            p = np.empty(3)
                            p[r] = c
                            p[other[0]] = a
                            p[other[1]] = b
                            corners.append(p)
                    # swap to a proper ring (corners enumerated in grid order)
                    ring = np.array([corners[0], corners[1], corners[3], corners[2]])
                    normal = np.zeros(3)
                    normal[r] = sign
                    facets.append((ring, normal))
            hs = ConvexPolytope._cuboid_halfspaces(lo, hi)
            return ConvexPolytope(3, facets=facets, halfspaces=hs)
        raise GeometryError("only dimensions 2 and 3 are supported")

    @staticmethod
    def _cuboid_halfspaces(lo: np.ndarray, hi: np.ndarray):
        dim = lo.shape[0]
        hs = []
        for r in range(dim):
            n = np.zeros(dim)
            n[r] = -1.0
            hs.append((n, -float(lo[r])))
            n = np.zeros(dim)
            n[r] = 1.0
            hs.append((n, float(hi[r])))
        return hs

    @staticmethod
    def from_ring(ring: Sequence[Sequence[float]]) -> "ConvexPolytope":
        """2D polygon from an ordered convex vertex ring."""
        return ConvexPolytope(2, ring=np.asarray(ring, dtype=float))

    def _derived_halfspaces(self):
        if self.dim != 2:
            raise GeometryError("3D cells must be constructed with explicit halfspaces")
        ring = self._ring
        hs = []
        for i in range(ring.shape[0]):
            p = ring[i]
            q = ring[(i + 1) % ring.shape[0]]
            e = q - p
            n = np.array([e[1], -e[0]])
            nn = np.linalg.norm(n)
            if nn <= 0.0:
                continue
            n /= nn
            hs.append((n, float(n @ p)))
        return hs

    # -- cached scalar features -------------------------------------------

    @cached_property
    def vertices(self) -> np.ndarray:
        if self.dim == 2:
            return self._ring
        pts = np.vstack([f[0] for f in self._facets])
        return _dedup_points(pts, 1e-9 * self._rough_scale(pts))

    @staticmethod
    def _rough_scale(pts: np.ndarray) -> float:
        span = float(np.max(pts.max(axis=0) - pts.min(axis=0)))
        return span if span > 0.0 else 1.0

    @cached_property
    def volume(self) -> float:
        if self.dim == 2:
            return abs(_ring_area(self._ring))
        total = 0.0
        for ring, normal in self._facets:
            total += _polygon3_area(ring) * float(normal @ ring[0])
        return total / 3.0

    @cached_property
    def boundary_measure(self) -> float:
        if self.dim == 2:
            d = self._ring[1:] - self._ring[:-1]
            wrap = self._ring[0] - self._ring[-1]
            return float(np.sqrt((d * d).sum(axis=1)).sum() + math.hypot(wrap[0], wrap[1]))
        return float(sum(_polygon3_area(ring) for ring, _ in self._facets))

    @cached_property
    def diameter(self) -> float:
        v = self.vertices
        d2 = np.sum((v[:, None, :] - v[None, :, :]) ** 2, axis=-1)
        return math.sqrt(float(d2.max()))

    @cached_property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    @cached_property
    def halfspace_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        normals = np.array([n for n, _ in self.halfspaces])
        offsets = np.array([c for _, c in self.halfspaces])
        return normals, offsets

    @cached_property
    def _edge_index(self):
        """3D edge table: list of (i, j, length, exterior_angle)."""
        if self.dim != 3:
            raise GeometryError("edge table is a 3D feature")
        verts = self.vertices
        tol = 1e-9 * max(self.diameter, 1e-300)
        edge_facets: dict[tuple[int, int], list[int]] = {}
        for fi, (ring, _) in enumerate(self._facets):
            ids = []
            for p in ring:
                d = np.max(np.abs(verts - p), axis=1)
                k = int(np.argmin(d))
                if d[k] > 10.0 * tol:
                    raise GeometryError("facet vertex missing from unified vertex set")
                ids.append(k)
            m = len(ids)
            for a in range(m):
                i, j = ids[a], ids[(a + 1) % m]
                if i == j:
                    continue
                key = (i, j) if i < j else (j, i)
                edge_facets.setdefault(key, []).append(fi)
        edges = []
        for (i, j), fs in edge_facets.items():
            fs = sorted(set(fs))
            if len(fs) != 2:
                raise GeometryError("face lattice inconsistency: edge not shared by two facets")
            n1 = self._facets[fs[0]][1]
            n2 = self._facets[fs[1]][1]
            ang = math.acos(min(1.0, max(-1.0, float(n1 @ n2))))
            edges.append((i, j, float(np.linalg.norm(verts[i] - verts[j])), ang))
        return edges

    @cached_property
    def face_counts(self) -> tuple:
        """Counts of k-faces for k = 0 .. dim-1."""
        if self.dim == 2:
            m = self._ring.shape[0]
            return (m, m)
        return (self.vertices.shape[0], len(self._edge_index), len(self._facets))

    def mean_width(self) -> float:
        """Average width over all directions (2D: perimeter/pi; 3D via the
        edge length, exterior dihedral angle sum)."""
        if self.dim == 2:
            return self.boundary_measure / math.pi
        s = sum(length * ang for _, _, length, ang in self._edge_index)
        return s / (4.0 * math.pi)

    # -- queries -----------------------------------------------------------

    def support(self, u: Sequence[float]) -> float:
        return float(np.max(self.vertices @ np.asarray(u, dtype=float)))

    def extent(self, u: Sequence[float]) -> tuple[float, float]:
        proj = self.vertices @ np.asarray(u, dtype=float)
        return float(proj.min()), float(proj.max())

    def width(self, u: Sequence[float]) -> float:
        lo, hi = self.extent(u)
        return hi - lo

    def contains_polytope(self, other: "ConvexPolytope", tol: float | None = None) -> bool:
        if tol is None:
            tol = REL_TOL * max(self.diameter, 1.0)
        normals, offsets = self.halfspace_arrays
        return bool(np.all(other.vertices @ normals.T - offsets <= tol))

    def contains_point(self, x: Sequence[float], tol: float | None = None) -> bool:
        if tol is None:
            tol = REL_TOL * max(self.diameter, 1.0)
        x = np.asarray(x, dtype=float)
        return all(float(n @ x) - c <= tol for n, c in self.halfspaces)

    # -- transforms --------------------------------------------------------

    def translate(self, a: Sequence[float]) -> "ConvexPolytope":
        a = np.asarray(a, dtype=float)
        hs = [(n, c + float(n @ a)) for n, c in self.halfspaces]
        if self.dim == 2:
            return ConvexPolytope(2, ring=self._ring + a, halfspaces=hs)
        facets = [(ring + a, normal) for ring, normal in self._facets]
        return ConvexPolytope(3, facets=facets, halfspaces=hs)

    def clip_halfspace(self, normal: Sequence[float], offset: float) -> "ConvexPolytope | None":
        """Intersect with {x : normal . x <= offset}; None when empty/degenerate."""
        u = np.asarray(normal, dtype=float)
        tol = REL_TOL * self.diameter
        if self.dim == 2:
            s = self._ring @ u - offset
            if np.all(s <= tol):
                return self
            neg, _, _ = _clip_ring(self._ring, s, tol)
            if len(neg) < 3:
                return None
            ring = _dedup_points(np.asarray(neg), tol)
            if ring.shape[0] < 3 or abs(_ring_area(ring)) <= tol * tol:
                return None
            return ConvexPolytope(2, ring=ring, halfspaces=self.halfspaces + [(u, float(offset))])
        smin, smax = self.extent(u)
        if smax - offset <= tol:
            return self
        if smin - offset >= -tol:
            return None
        try:
            neg, _, _ = self._split_facets(u, float(offset), tol)
        except DegenerateSplitError:
            return None
        if neg is None:
            return None
        return ConvexPolytope(3, facets=neg, halfspaces=self.halfspaces + [(u, float(offset))])

    # -- splitting ---------------------------------------------------------

    def _split_facets(self, u: np.ndarray, d: float, tol: float):
        """3D split helper; returns (neg_facets, pos_facets, cut_ring)."""
        neg_facets = []
        pos_facets = []
        cut_pts: list[np.ndarray] = []
        for ring, normal in self._facets:
            s = ring @ u - d
            if np.all(s <= tol):
                neg_facets.append((ring, normal))
                if np.any(np.abs(s) <= tol):
                    cut_pts.extend(ring[np.abs(s) <= tol])
                continue
            if np.all(s >= -tol):
                pos_facets.append((ring, normal))
                if np.any(np.abs(s) <= tol):
                    cut_pts.extend(ring[np.abs(s) <= tol])
                continue
            neg, pos, cut = _clip_ring(ring, s, tol)
            cut_pts.extend(cut)
            for part, dst in ((neg, neg_facets), (pos, pos_facets)):
                arr = _dedup_points(np.asarray(part), tol)
                if arr.shape[0] >= 3 and _polygon3_area(arr) > tol * tol:
                    dst.append((arr, normal))
        if not cut_pts:
            raise DegenerateSplitError("cut plane does not cross the cell")
        cut = _dedup_points(np.asarray(cut_pts), tol)
        if cut.shape[0] < 3:
            raise DegenerateSplitError("cut section is lower dimensional")
        e1, e2 = _plane_basis(u)
        c = cut.mean(axis=0)
        rel = cut - c
        order = np.argsort(np.arctan2(rel @ e2, rel @ e1))
        cut_ring = cut[order]
        if _polygon3_area(cut_ring) <= tol * tol:
            raise DegenerateSplitError("cut section has negligible area")
        neg_facets.append((cut_ring, u.copy()))
        pos_facets.append((cut_ring, -u))
        if len(neg_facets) < 4 or len(pos_facets) < 4:
            raise DegenerateSplitError("split produced an invalid polyhedron")
        return neg_facets, pos_facets, cut_ring

    def split(self, plane: Hyperplane):
        """Cut the cell along plane into (negative side, positive side, facet).

        Raises DegenerateSplitError when one child would fall below the
        relative volume threshold; the caller resamples the hyperplane.
        """
        u = plane.normal
        d = plane.offset
        tol = REL_TOL * self.diameter
        vol_floor = DEGENERATE_REL_VOLUME * self.volume
        hs_neg = self.halfspaces + [(u, float(d))]
        hs_pos = self.halfspaces + [(-u, float(-d))]
        if self.dim == 2:
            s = self._ring @ u - d
            neg, pos, cut = _clip_ring(self._ring, s, tol)
            if np.any(np.abs(s) <= tol):
                # plane grazes a vertex: duplicates possible, clean them up
                cut = _dedup_points(np.asarray(cut), tol) if cut else np.empty((0, 2))
                neg = _dedup_points(np.asarray(neg), tol) if len(neg) >= 3 else np.empty((0, 2))
                pos = _dedup_points(np.asarray(pos), tol) if len(pos) >= 3 else np.empty((0, 2))
            else:
                cut = np.asarray(cut)
                neg = np.asarray(neg)
                pos = np.asarray(pos)
            if cut.shape[0] != 2:
                raise DegenerateSplitError("cut chord is degenerate")
            if len(neg) < 3 or len(pos) < 3:
                raise DegenerateSplitError("split produced an empty child")
            child_neg = ConvexPolytope(2, ring=neg, halfspaces=hs_neg)
            child_pos = ConvexPolytope(2, ring=pos, halfspaces=hs_pos)
            facet = Facet(cut, plane)
        else:
            neg_facets, pos_facets, cut_ring = self._split_facets(u, d, tol)
            child_neg = ConvexPolytope(3, facets=neg_facets, halfspaces=hs_neg)
            child_pos = ConvexPolytope(3, facets=pos_facets, halfspaces=hs_pos)
            facet = Facet(cut_ring, plane)
        if child_neg.volume < vol_floor or child_pos.volume < vol_floor:
            raise DegenerateSplitError("split child below volume threshold")
        return child_neg, child_pos, facet


@dataclass(frozen=True)
class Facet:
    """A dividing face: segment (2D) or planar convex ring (3D) on a hyperplane."""

    vertices: np.ndarray
    plane: Hyperplane

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def measure(self) -> float:
        """(dim-1)-volume: segment length or polygon area."""
        if self.dim == 2:
            return float(np.linalg.norm(self.vertices[1] - self.vertices[0]))
        return _polygon3_area(self.vertices)

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def midpoint(self) -> np.ndarray:
        return self.centroid()

    def translate(self, a: Sequence[float]) -> "Facet":
        a = np.asarray(a, dtype=float)
        return Facet(self.vertices + a, self.plane.translate(a))

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def clip_to_cuboid(self, region: CuboidRegion) -> "Facet | None":
        """Intersection with the closed cuboid closure(region), or None.

        Half-open versus closed clipping differs only on alignment events of
        measure zero under any hyperplane measure with a Lebesgue distance
        component.
        """
        lo = np.asarray(region.lower)
        hi = np.asarray(region.upper)
        vmin, vmax = self.bounds()
        if np.any(vmin > hi) or np.any(vmax < lo):
            return None
        if np.all(vmin >= lo) and np.all(vmax <= hi):
            return self
        if self.dim == 2:
            p, q = self.vertices
            e = q - p
            t0, t1 = 0.0, 1.0
            for r in range(2):
                if e[r] == 0.0:
                    if p[r] < lo[r] or p[r] > hi[r]:
                        return None
                    continue
                ta = (lo[r] - p[r]) / e[r]
                tb = (hi[r] - p[r]) / e[r]
                if ta > tb:
                    ta, tb = tb, ta
                t0 = max(t0, ta)
                t1 = min(t1, tb)
            if t1 <= t0:
                return None
            return Facet(np.array([p + t0 * e, p + t1 * e]), self.plane)
        ring = self.vertices
        scale = max(float(np.max(vmax - vmin)), 1e-300)
        tol = 1e-12 * scale
        for r in range(3):
            for sign, c in ((-1.0, -lo[r]), (1.0, hi[r])):
                u = np.zeros(3)
                u[r] = sign
                s = ring @ u - c
                if np.all(s <= tol):
                    continue
                neg, _, _ = _clip_ring(ring, s, tol)
                if len(neg) < 3:
                    return None
                ring = _dedup_points(np.asarray(neg), tol)
                if ring.shape[0] < 3:
                    return None
        return Facet(ring, self.plane)

    def touches_boundary(self, window: ConvexPolytope, tol: float | None = None) -> bool:
        """True when some facet vertex lies on a bounding hyperplane of window."""
        if tol is None:
            tol = REL_TOL * window.diameter
        normals, offsets = window.halfspace_arrays
        return bool((np.abs(self.vertices @ normals.T - offsets) <= tol).any())


# -- module level operations (thin wrappers used throughout) ----------------


def support_value(poly: ConvexPolytope, u: Sequence[float]) -> float:
    """Support function h(poly, u) = max over vertices of <v, u>."""
    return poly.support(u)


def hits(plane: Hyperplane, poly: ConvexPolytope) -> bool:
    """Whether the hyperplane meets the (closed) cell, tangency included."""
    s = plane.signed_distance(poly.vertices)
    tol = REL_TOL * poly.diameter
    return bool(s.min() <= tol and s.max() >= -tol)


def split(poly: ConvexPolytope, plane: Hyperplane):
    return poly.split(plane)


def boundary_mass_in_region(facets: Iterable[Facet], region: CuboidRegion) -> float:
    """Total (dim-1)-volume of the given dividing facets inside closure(region)."""
    total = 0.0
    for f in facets:
        clipped = f.clip_to_cuboid(region)
        if clipped is not None:
            total += clipped.measure()
    return total


def contained_in(poly: ConvexPolytope, region: CuboidRegion) -> bool:
    """Half-open containment: every vertex satisfies lower <= x < upper."""
    return bool(np.all(region.contains_points(poly.vertices)))


@dataclass(frozen=True)
class IntrinsicFeatures:
    volume: float
    boundary_measure: float
    diameter: float
    face_counts: tuple


def intrinsic_features(poly: ConvexPolytope) -> IntrinsicFeatures:
    return IntrinsicFeatures(
        volume=poly.volume,
        boundary_measure=poly.boundary_measure,
        diameter=poly.diameter,
        face_counts=poly.face_counts,
    )


def intersect_cuboid(poly: ConvexPolytope, region: CuboidRegion) -> ConvexPolytope | None:
    """poly intersected with closure(region), or None when empty."""
    lo = np.asarray(region.lower)
    hi = np.asarray(region.upper)
    vmin = poly.vertices.min(axis=0)
    vmax = poly.vertices.max(axis=0)
    if np.all(vmin >= lo) and np.all(vmax <= hi):
        return poly
    if np.any(vmin >= hi) or np.any(vmax <= lo):
        return None
    out: ConvexPolytope | None = poly
    for r in range(region.dim):
        for sign, c in ((-1.0, -region.lower[r]), (1.0, region.upper[r])):
            if out is None:
                return None
            u = np.zeros(region.dim)
            u[r] = sign
            out = out.clip_halfspace(u, c)
    return out

"""Translation-invariant hyperplane measures.

A measure is factored as a directional distribution (discrete atoms on the
canonical hemisphere, or an isotropic mass) tensored with Lebesgue signed
distance, which realizes translation invariance by construction.  The module
computes hitting masses, samples hyperplanes from normalized restrictions,
evaluates separating-class masses for nested cubes, and checks the two
admissibility assumptions (locally finite with spanning support; positive
mass on every facet-separating class).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .geometry import ConvexPolytope, GeometryError, Hyperplane, canonical_direction

QUAD_REL_TOL = 1e-8
SAMPLER_ITERATION_CAP = 10**6


class InvalidMeasureError(Exception):
    """Directional distribution violates its invariants."""


class SamplerStallError(RuntimeError):
    """Rejection sampling exceeded its iteration cap; the measure or the
    target cell is almost surely misconfigured."""


@dataclass(frozen=True)
class DirectionalDistribution:
    """Directional part of the hyperplane measure.

    kind 'discrete': atoms (k, dim) on the canonical hemisphere with positive
    weights.  kind 'isotropic': total mass spread uniformly over the
    hemisphere of directions.
    """

    kind: str
    dim: int
    directions: np.ndarray | None = None
    weights: np.ndarray | None = None
    mass: float = 0.0

    @staticmethod
    def discrete(directions: Sequence[Sequence[float]], weights: Sequence[float]) -> "DirectionalDistribution":
        dirs = np.array([canonical_direction(u) for u in directions], dtype=float)
        w = np.asarray(weights, dtype=float)
        if dirs.ndim != 2 or dirs.shape[1] not in (2, 3):
            raise InvalidMeasureError("directions must live in dimension 2 or 3")
        if w.shape != (dirs.shape[0],) or np.any(w <= 0.0) or not np.all(np.isfinite(w)):
            raise InvalidMeasureError("weights must be positive finite, one per direction")
        for i in range(dirs.shape[0]):
            for j in range(i + 1, dirs.shape[0]):
                if np.max(np.abs(dirs[i] - dirs[j])) <= 1e-12:
                    raise InvalidMeasureError("directions must be pairwise distinct")
        dirs.setflags(write=False)
        w.setflags(write=False)
        return DirectionalDistribution("discrete", dirs.shape[1], dirs, w, mass=float(w.sum()))

    @staticmethod
    def isotropic(dim: int, mass: float = 1.0) -> "DirectionalDistribution":
        if dim not in (2, 3):
            raise InvalidMeasureError("dimension must be 2 or 3")
        if not (mass > 0.0 and np.isfinite(mass)):
            raise InvalidMeasureError("isotropic mass must be positive and finite")
        return DirectionalDistribution("isotropic", dim, mass=float(mass))

    def direction_rank(self) -> int:
        if self.kind == "isotropic":
            return self.dim
        return int(np.linalg.matrix_rank(self.directions, tol=1e-9))


@dataclass(frozen=True)
class SeparatorClass:
    """Hyperplanes weakly separating facet r of [-a,a]^dim from the matching
    facet of [-b,b]^dim; r runs over 1..2*dim (positive faces first)."""

    a: float
    b: float
    r: int
    dim: int

    def __post_init__(self):
        if not (0.0 < self.a < self.b):
            raise ValueError("separator class needs 0 < a < b")
        if self.dim not in (2, 3) or not (1 <= self.r <= 2 * self.dim):
            raise ValueError("facet index must lie in 1..2*dim")

    @property
    def axis(self) -> int:
        return (self.r - 1) % self.dim

    @property
    def sign(self) -> float:
        return 1.0 if self.r <= self.dim else -1.0

    def gap(self, u: np.ndarray) -> float:
        """Lebesgue measure of offsets at direction u that weakly separate the
        two facets (zero when their projections onto u overlap)."""
        others = float(np.sum(np.abs(u))) - abs(float(u[self.axis]))
        ua = float(u[self.axis])
        a_lo = self.sign * self.a * ua - self.a * others
        a_hi = self.sign * self.a * ua + self.a * others
        b_lo = self.sign * self.b * ua - self.b * others
        b_hi = self.sign * self.b * ua + self.b * others
        return max(0.0, b_lo - a_hi, a_lo - b_hi)


def _hemisphere_direction(dim: int, angles: tuple) -> np.ndarray:
    if dim == 2:
        (phi,) = angles
        return np.array([math.cos(phi), math.sin(phi)])
    theta, phi = angles
    return np.array([math.cos(theta), math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi)])


@dataclass(frozen=True)
class HyperplaneMeasure:
    """Directional distribution tensored with Lebesgue offsets."""

    directional: DirectionalDistribution

    @property
    def dim(self) -> int:
        return self.directional.dim

    @staticmethod
    def discrete(directions, weights) -> "HyperplaneMeasure":
        return HyperplaneMeasure(DirectionalDistribution.discrete(directions, weights))

    @staticmethod
    def isotropic(dim: int, mass: float = 1.0) -> "HyperplaneMeasure":
        return HyperplaneMeasure(DirectionalDistribution.isotropic(dim, mass))

    # -- hitting mass --------------------------------------------------------

    def hitting_mass(self, poly: ConvexPolytope) -> float:
        """Mass of the hyperplanes meeting poly: the width integral over the
        directional distribution.

        Discrete kind sums exactly; isotropic kind uses the exact mean-width
        identities (perimeter/pi in 2D, edge angle sum/(4 pi) in 3D), which
        agree with adaptive quadrature of the width to far better than the
        1e-8 contract tolerance.
        """
        d = self.directional
        if d.kind == "discrete":
            widths = np.array([poly.width(u) for u in d.directions])
            return float(np.dot(d.weights, widths))
        return d.mass * poly.mean_width()

    def hitting_mass_quadrature(self, poly: ConvexPolytope) -> float:
        """Width integral by adaptive quadrature (isotropic kind only); slow,
        kept as the independent cross-check of the closed-form path."""
        d = self.directional
        if d.kind != "isotropic":
            raise InvalidMeasureError("quadrature path applies to the isotropic kind")
        if d.dim == 2:
            val, _ = integrate.quad(
                lambda phi: poly.width(_hemisphere_direction(2, (phi,))),
                0.0,
                math.pi,
                epsrel=QUAD_REL_TOL,
                limit=200,
            )
            return d.mass * val / math.pi
        val, _ = integrate.dblquad(
            lambda phi, theta: poly.width(_hemisphere_direction(3, (theta, phi))) * math.sin(theta),
            0.0,
            math.pi / 2.0,
            0.0,
            2.0 * math.pi,
            epsrel=QUAD_REL_TOL,
        )
        return d.mass * val / (2.0 * math.pi)

    # -- sampling --------------------------------------------------------

    def sample_hitting(self, poly: ConvexPolytope, rng: np.random.Generator) -> Hyperplane:
        """Draw a hyperplane from the normalized restriction of the measure to
        the planes hitting poly.

        Directions are width-weighted (exact for discrete atoms; rejection
        with the diameter as envelope for the isotropic kind, acceptance rate
        mean width / diameter), offsets uniform over the support interval.
        """
        d = self.directional
        if d.kind == "discrete":
            widths = np.array([poly.width(u) for u in d.directions])
            scores = widths * d.weights
            total = float(scores.sum())
            if total <= 0.0:
                raise InvalidMeasureError("cell has zero hitting mass")
            cdf = np.cumsum(scores) / total
            idx = int(np.searchsorted(cdf, rng.uniform()))
            idx = min(idx, len(cdf) - 1)
            u = d.directions[idx]
        else:
            diam = poly.diameter
            for _ in range(SAMPLER_ITERATION_CAP):
                if d.dim == 2:
                    phi = rng.uniform(-math.pi / 2.0, math.pi / 2.0)
                    u = np.array([math.cos(phi), math.sin(phi)])
                else:
                    g = rng.standard_normal(3)
                    norm = float(np.linalg.norm(g))
                    if norm <= 0.0:
                        continue
                    u = g / norm
                    if u[0] < 0.0:
                        u = -u
                if rng.uniform() * diam <= poly.width(u):
                    break
            else:
                raise SamplerStallError("direction rejection sampling exceeded the iteration cap")
        lo, hi = poly.extent(u)
        offset = rng.uniform(lo, hi)
        return Hyperplane.make(u, offset)

    # -- separating classes and assumptions ----------------------------------

    def separator_mass(self, sep: SeparatorClass) -> float:
        """Mass of the hyperplanes weakly separating the facet pair of sep.

        The per-direction offset gap is max(0, (b-a)|u_axis| - (a+b) * sum of
        the remaining |u_s|), so the isotropic integral reduces by symmetry:
        in 2D a single quadrature over the angle, in 3D the polar integral is
        analytic and only the azimuth is integrated numerically.
        """
        if sep.dim != self.dim:
            raise InvalidMeasureError("separator dimension does not match the measure")
        d = self.directional
        if d.kind == "discrete":
            return float(sum(w * sep.gap(u) for u, w in zip(d.directions, d.weights)))
        amp = sep.b - sep.a
        coef = sep.a + sep.b
        if d.dim == 2:
            # gap(phi) = max(0, amp*cos(phi') - coef*sin(phi')) around the axis
            kink = math.atan2(amp, coef)
            val, _ = integrate.quad(
                lambda phi: max(0.0, amp * math.cos(phi) - coef * math.sin(phi)),
                0.0,
                kink,
                epsrel=QUAD_REL_TOL,
                limit=200,
            )
            return d.mass * 2.0 * val / math.pi

        def inner(phi: float) -> float:
            # analytic polar integral up to the zero of the gap
            b_coef = coef * (math.cos(phi) + math.sin(phi))
            psi = math.atan2(amp, b_coef)
            s, c = math.sin(psi), math.cos(psi)
            return 0.5 * amp * s * s - 0.5 * b_coef * (psi - s * c)

        val, _ = integrate.quad(inner, 0.0, math.pi / 2.0, epsrel=QUAD_REL_TOL, limit=200)
        return d.mass * 2.0 * val / math.pi

    def check_assumptions(self, a: float, b: float) -> "AssumptionReport":
        """Spanning-support check plus positive separator mass on every facet
        pair of the nested cubes [-a,a]^dim in [-b,b]^dim."""
        if not (0.0 < a < b):
            raise ValueError("assumption check needs 0 < a < b")
        rank = self.directional.direction_rank()
        span_ok = rank == self.dim
        masses = tuple(
            self.separator_mass(SeparatorClass(a, b, r, self.dim)) for r in range(1, 2 * self.dim + 1)
        )
        separators_ok = all(m > 0.0 for m in masses)
        return AssumptionReport(
            dim=self.dim,
            a=float(a),
            b=float(b),
            direction_rank=rank,
            span_ok=span_ok,
            separator_masses=masses,
            separators_ok=separators_ok,
        )


@dataclass(frozen=True)
class AssumptionReport:
    dim: int
    a: float
    b: float
    direction_rank: int
    span_ok: bool
    separator_masses: tuple
    separators_ok: bool

    @property
    def passed(self) -> bool:
        return self.span_ok and self.separators_ok


def measure_from_config(spec: dict, dim: int) -> HyperplaneMeasure:
    """Build a measure from a config mapping.

    Accepted forms:
      {"kind": "isotropic", "mass": 1.0}
      {"kind": "discrete", "atoms": [{"angle": 0.0, "weight": 1.0},
                                     {"vector": [0, 1], "weight": 1.0}]}
    Angles are valid in dimension 2 only and give the direction
    (cos angle, sin angle).
    """
    kind = spec.get("kind")
    if kind == "isotropic":
        return HyperplaneMeasure.isotropic(dim, float(spec.get("mass", 1.0)))
    if kind == "discrete":
        atoms = spec.get("atoms")
        if not atoms:
            raise InvalidMeasureError("discrete measure needs a nonempty atoms list")
        dirs = []
        weights = []
        for row in atoms:
            if "angle" in row:
                if dim != 2:
                    raise InvalidMeasureError("angle atoms are only valid in dimension 2")
                phi = float(row["angle"])
                dirs.append([math.cos(phi), math.sin(phi)])
            elif "vector" in row:
                vec = [float(x) for x in row["vector"]]
                if len(vec) != dim:
                    raise InvalidMeasureError("atom vector has the wrong dimension")
                dirs.append(vec)
            else:
                raise InvalidMeasureError("each atom needs an 'angle' or a 'vector'")
            weights.append(float(row.get("weight", 1.0)))
        return HyperplaneMeasure.discrete(dirs, weights)
    raise InvalidMeasureError("measure kind must be 'isotropic' or 'discrete'")

"""Cell-division tessellation engine.

The process starts from a single window cell.  Every cell carries an
exponential lifetime with rate equal to the hyperplane mass hitting it; at
death it is divided by a hyperplane drawn from the normalized restriction of
the measure to the planes hitting it, and the two children restart the clock.
The simulation is event driven: a priority queue keyed by death time replaces
the per-cell clocks, which is equivalent by the memoryless property.

Cells are numbered in birth order: the window is cell 1 and the k-th split
creates cells 2k and 2k+1, so ids are consecutive in event order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Sequence

import numpy as np

from .geometry import (
    REL_TOL,
    ConvexPolytope,
    CuboidRegion,
    DegenerateSplitError,
    Facet,
    GeometryError,
    WindowNotContainedError,
)
from .measure import HyperplaneMeasure
from .rand import derive_rng

DEFAULT_EVENT_CAP = 10**7
# degenerate-split resampling is a float-roundoff event; hitting this many in
# a row on one cell means the geometry is broken, not unlucky
MAX_RESAMPLE_ATTEMPTS = 256


class ExplosionGuardError(RuntimeError):
    """Event count exceeded the cap; the jump process is almost surely finite,
    so this signals a measure or window misconfiguration."""


class SimulationConfigError(ValueError):
    """Configuration fails a module precondition."""


@dataclass(frozen=True)
class Cell:
    id: int
    polytope: ConvexPolytope
    birth_time: float
    parent_id: int | None
    rate: float | None  # hitting mass of the cell, cached at enqueue


@dataclass(frozen=True)
class SplitEvent:
    time: float
    cell_id: int
    hyperplane: object
    facet: Facet
    censored: bool  # facet touches the window boundary


@dataclass(frozen=True)
class Tessellation:
    """State of the division process at a fixed time, with full genealogy."""

    window: ConvexPolytope
    time: float
    cells: tuple  # surviving Cell records, ascending id
    events: tuple  # SplitEvent records in event order
    seed: int | None

    @property
    def dim(self) -> int:
        return self.window.dim

    def facets(self) -> tuple:
        return tuple(e.facet for e in self.events)

    @cached_property
    def derived_cache(self) -> dict:
        """Scratch space for functionals that precompute per-tessellation
        geometry (face lists, reference points); safe because the state is
        immutable."""
        return {}

    @cached_property
    def _internal_vertices(self) -> np.ndarray:
        pts = []
        window = self.window
        tol = REL_TOL * window.diameter
        normals, offsets = window.halfspace_arrays
        for ev in self.events:
            verts = ev.facet.vertices
            on_boundary = np.any(np.abs(verts @ normals.T - offsets) <= tol, axis=1)
            if np.any(~on_boundary):
                pts.append(verts[~on_boundary])
        if not pts:
            return np.empty((0, self.dim))
        return np.vstack(pts)

    def internal_vertices(self) -> np.ndarray:
        """Corner points of the induced cell complex that do not lie on the
        window boundary.

        Each such point is a ring vertex of exactly one dividing facet (the
        youngest one through it) almost surely, so collecting facet ring
        vertices off the boundary counts every interior corner once.  In 2D
        these are the T-nodes where a chord ends on an older chord.
        """
        return self._internal_vertices


@dataclass(frozen=True)
class SimulationConfig:
    window: object  # CuboidRegion or ConvexPolytope
    t: float
    measure: HyperplaneMeasure
    seed: int
    max_events: int = DEFAULT_EVENT_CAP

    def window_polytope(self) -> ConvexPolytope:
        if isinstance(self.window, CuboidRegion):
            return self.window.to_polytope()
        if isinstance(self.window, ConvexPolytope):
            return self.window
        raise SimulationConfigError("window must be a CuboidRegion or a ConvexPolytope")

    def validate(self) -> None:
        if not (self.t > 0.0 and np.isfinite(self.t)):
            raise SimulationConfigError("time horizon t must be positive and finite")
        w = self.window_polytope()
        if w.dim != self.measure.dim:
            raise SimulationConfigError("window and measure dimensions differ")
        if self.measure.directional.direction_rank() != self.measure.dim:
            raise SimulationConfigError(
                "measure directions do not span the space (admissibility failure: "
                "cells would stay unbounded in some direction)"
            )
        if self.seed < 0:
            raise SimulationConfigError("seed must be a nonnegative integer")


def simulate(cfg: SimulationConfig, rng: np.random.Generator | None = None) -> Tessellation:
    """Run the division process in the window up to time cfg.t.

    Deterministic given the seed: the draw schedule is pinned to event order
    (one exponential at enqueue; direction and offset draws at each split,
    repeated on degenerate-split resampling).  Ties in death times are broken
    by the smaller cell id.
    """
    cfg.validate()
    if rng is None:
        rng = derive_rng(cfg.seed)
    window = cfg.window_polytope()
    measure = cfg.measure
    t_end = float(cfg.t)

    rate0 = measure.hitting_mass(window)
    cells: dict[int, Cell] = {1: Cell(1, window, 0.0, None, rate0)}
    heap: list[tuple[float, int]] = [(rng.exponential(1.0 / rate0), 1)]
    events: list[SplitEvent] = []
    window_tol = REL_TOL * window.diameter

    while heap:
        death, cid = heapq.heappop(heap)
        if death > t_end:
            break
        if len(events) >= cfg.max_events:
            raise ExplosionGuardError(
                f"event cap {cfg.max_events} reached at simulated time {death:.6g}"
            )
        cell = cells.pop(cid)
        for _ in range(MAX_RESAMPLE_ATTEMPTS):
            plane = measure.sample_hitting(cell.polytope, rng)
            try:
                child_neg, child_pos, facet = cell.polytope.split(plane)
                rate_neg = measure.hitting_mass(child_neg)
                rate_pos = measure.hitting_mass(child_pos)
                break
            except (DegenerateSplitError, GeometryError):
                continue
        else:
            raise GeometryError("persistent degenerate splits; geometry kernel is inconsistent")
        k = len(events) + 1
        censored = facet.touches_boundary(window, window_tol)
        events.append(SplitEvent(death, cid, plane, facet, censored))
        id_neg, id_pos = 2 * k, 2 * k + 1
        cells[id_neg] = Cell(id_neg, child_neg, death, cid, rate_neg)
        cells[id_pos] = Cell(id_pos, child_pos, death, cid, rate_pos)
        heapq.heappush(heap, (death + rng.exponential(1.0 / rate_neg), id_neg))
        heapq.heappush(heap, (death + rng.exponential(1.0 / rate_pos), id_pos))

    survivors = tuple(cells[i] for i in sorted(cells))
    return Tessellation(window=window, time=t_end, cells=survivors, events=tuple(events), seed=cfg.seed)


def holding_rate(tess: Tessellation) -> float:
    """Total division rate of the current state: the exponential parameter of
    the next jump if the process were continued."""
    rates = [c.rate for c in tess.cells]
    if any(r is None for r in rates):
        raise ValueError("cell rates unavailable (tessellation was restricted without a measure)")
    return float(sum(rates))


def restrict(
    tess: Tessellation,
    subwindow: object,
    measure: HyperplaneMeasure | None = None,
) -> Tessellation:
    """Induced tessellation on a subwindow.

    Cells are clipped (empty clips dropped), events whose facets miss the
    subwindow are dropped, and censoring flags are recomputed against the new
    boundary.  Cell rates are recomputed when a measure is supplied, else
    cleared.
    """
    if isinstance(subwindow, CuboidRegion):
        sub = subwindow.to_polytope()
    elif isinstance(subwindow, ConvexPolytope):
        sub = subwindow
    else:
        raise WindowNotContainedError("subwindow must be a CuboidRegion or a ConvexPolytope")
    if not tess.window.contains_polytope(sub):
        raise WindowNotContainedError("subwindow is not contained in the tessellation window")

    new_cells = []
    for cell in tess.cells:
        poly = cell.polytope
        for n, c in sub.halfspaces:
            poly = poly.clip_halfspace(n, c)
            if poly is None:
                break
        if poly is None:
            continue
        rate = measure.hitting_mass(poly) if measure is not None else None
        new_cells.append(replace(cell, polytope=poly, rate=rate))

    sub_tol = REL_TOL * sub.diameter
    new_events = []
    for ev in tess.events:
        facet = _clip_facet_to_polytope(ev.facet, sub, sub_tol)
        if facet is None:
            continue
        new_events.append(replace(ev, facet=facet, censored=facet.touches_boundary(sub, sub_tol)))

    return Tessellation(
        window=sub,
        time=tess.time,
        cells=tuple(new_cells),
        events=tuple(new_events),
        seed=tess.seed,
    )


def _clip_facet_to_polytope(facet: Facet, poly: ConvexPolytope, tol: float) -> Facet | None:
    verts = facet.vertices
    if facet.dim == 2:
        p, q = verts
        e = q - p
        t0, t1 = 0.0, 1.0
        for n, c in poly.halfspaces:
            sp = float(n @ p) - c
            se = float(n @ e)
            if abs(se) <= 1e-300:
                if sp > tol:
                    return None
                continue
            tcut = -sp / se
            if se > 0.0:
                t1 = min(t1, tcut)
            else:
                t0 = max(t0, tcut)
        if t1 <= t0:
            return None
        return Facet(np.array([p + t0 * e, p + t1 * e]), facet.plane)
    ring = verts
    from .geometry import _clip_ring, _dedup_points  # shared ring clipping helpers

    for n, c in poly.halfspaces:
        s = ring @ n - c
        if np.all(s <= tol):
            continue
        neg, _, _ = _clip_ring(ring, s, tol)
        if len(neg) < 3:
            return None
        ring = _dedup_points(np.asarray(neg), tol)
        if ring.shape[0] < 3:
            return None
    return Facet(ring, facet.plane)


def translate(tess: Tessellation, a: Sequence[float]) -> Tessellation:
    """Shift the whole tessellation (window, cells, facets) by the vector a."""
    a = np.asarray(a, dtype=float)
    cells = tuple(replace(c, polytope=c.polytope.translate(a)) for c in tess.cells)
    events = tuple(
        replace(e, hyperplane=e.hyperplane.translate(a), facet=e.facet.translate(a))
        for e in tess.events
    )
    return Tessellation(
        window=tess.window.translate(a),
        time=tess.time,
        cells=cells,
        events=events,
        seed=tess.seed,
    )

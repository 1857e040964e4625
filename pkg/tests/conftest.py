import numpy as np
import pytest

from stittess.geometry import ConvexPolytope, CuboidRegion, Hyperplane
from stittess.measure import HyperplaneMeasure
from stittess.process import Cell, SimulationConfig, SplitEvent, Tessellation, simulate
from stittess.rand import derive_rng


@pytest.fixture
def axis_measure_2d():
    return HyperplaneMeasure.discrete([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0])


@pytest.fixture
def iso2():
    return HyperplaneMeasure.isotropic(2, 1.0)


@pytest.fixture
def iso3():
    return HyperplaneMeasure.isotropic(3, 1.0)


@pytest.fixture
def unit_square():
    return ConvexPolytope.from_cuboid([0.0, 0.0], [1.0, 1.0])


@pytest.fixture
def unit_cube():
    return ConvexPolytope.from_cuboid([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])


def hand_tessellation(events_spec, window_lo=(0.0, 0.0), window_hi=(1.0, 1.0), t=1.0):
    """Deterministic tessellation built by replaying an explicit event list.

    events_spec: list of (cell_id_to_split, normal, offset, event_time).
    Cell ids follow birth order (window is 1, event k creates 2k and 2k+1).
    """
    window = ConvexPolytope.from_cuboid(window_lo, window_hi)
    cells = {1: Cell(1, window, 0.0, None, None)}
    events = []
    tol = 1e-9 * window.diameter
    for k, (cid, normal, offset, time) in enumerate(events_spec, start=1):
        plane = Hyperplane.make(normal, offset)
        parent = cells.pop(cid)
        neg, pos, facet = parent.polytope.split(plane)
        events.append(SplitEvent(time, cid, plane, facet, facet.touches_boundary(window, tol)))
        cells[2 * k] = Cell(2 * k, neg, time, cid, None)
        cells[2 * k + 1] = Cell(2 * k + 1, pos, time, cid, None)
    survivors = tuple(cells[i] for i in sorted(cells))
    return Tessellation(window=window, time=t, cells=survivors, events=tuple(events), seed=None)


@pytest.fixture
def split_once():
    """Unit square split by x = 0.5 (both chord endpoints on the boundary)."""
    return hand_tessellation([(1, [1.0, 0.0], 0.5, 0.3)])


@pytest.fixture
def split_twice():
    """x = 0.5 split, then the left cell split by y = 0.5: the second chord
    ends on the first at (0.5, 0.5), the single interior T-node."""
    return hand_tessellation([(1, [1.0, 0.0], 0.5, 0.3), (2, [0.0, 1.0], 0.5, 0.6)])


def quick_sim(measure, lo, hi, t, seed):
    cfg = SimulationConfig(window=CuboidRegion.make(lo, hi), t=t, measure=measure, seed=seed)
    return simulate(cfg, rng=derive_rng(seed))


def random_convex_polytope_2d(rng, n_extra_cuts=2):
    """Random polygon generated the way cells arise: cuboid plus random cuts."""
    lo = rng.uniform(-2.0, 0.0, size=2)
    hi = lo + rng.uniform(0.5, 3.0, size=2)
    poly = ConvexPolytope.from_cuboid(lo, hi)
    for _ in range(n_extra_cuts):
        side = cut_through(poly, rng)
        if side is not None:
            poly = side
    return poly


def random_convex_polytope_3d(rng, n_extra_cuts=1):
    lo = rng.uniform(-2.0, 0.0, size=3)
    hi = lo + rng.uniform(0.5, 2.5, size=3)
    poly = ConvexPolytope.from_cuboid(lo, hi)
    for _ in range(n_extra_cuts):
        side = cut_through(poly, rng)
        if side is not None:
            poly = side
    return poly


def cut_through(poly, rng):
    """One random proper cut; returns the larger side or None on failure."""
    from stittess.geometry import DegenerateSplitError

    dim = poly.dim
    for _ in range(20):
        u = rng.standard_normal(dim)
        norm = np.linalg.norm(u)
        if norm < 1e-12:
            continue
        u /= norm
        lo, hi = poly.extent(u)
        d = rng.uniform(lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo))
        try:
            a, b, _ = poly.split(Hyperplane.make(u, d))
        except DegenerateSplitError:
            continue
        return a if a.volume >= b.volume else b
    return None

"""Beta-mixing (absolute regularity) machinery.

For sigma-algebras generated by finite partitions the mixing coefficient is
an explicit function of the joint atom matrix, so it can be computed exactly,
checked against its total-variation form, and brute-forced over all partition
coarsenings.  The same exact computation applied to hit-or-miss patterns of
probe boxes yields a lower-bound estimator of the spatial mixing coefficient
of a simulated tessellation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import CuboidRegion
from .measure import HyperplaneMeasure
from .process import SimulationConfig, Tessellation, simulate
from .rand import derive_rng

MATRIX_TOL = 1e-12


class InvalidDistributionError(ValueError):
    """Joint matrix is not a probability distribution."""


class InsufficientSamplesError(ValueError):
    """Too few replicates for a meaningful empirical matrix."""


class DegenerateFitError(RuntimeError):
    """All estimates are indistinguishable from zero; no envelope can be
    fitted (which is itself consistent with any decaying upper bound)."""


@dataclass(frozen=True)
class JointPartitionDistribution:
    """Joint probabilities over the atoms of two finite partitions."""

    matrix: np.ndarray

    @staticmethod
    def make(matrix) -> "JointPartitionDistribution":
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.size == 0:
            raise InvalidDistributionError("joint matrix must be two dimensional")
        if np.any(m < -MATRIX_TOL) or not np.all(np.isfinite(m)):
            raise InvalidDistributionError("joint matrix entries must be nonnegative")
        if abs(float(m.sum()) - 1.0) > MATRIX_TOL:
            raise InvalidDistributionError("joint matrix must sum to one")
        m = np.clip(m, 0.0, None)
        m.setflags(write=False)
        return JointPartitionDistribution(m)

    @property
    def row_marginal(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    @property
    def col_marginal(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    def deviation(self) -> np.ndarray:
        """matrix minus the product of its marginals."""
        return self.matrix - np.outer(self.row_marginal, self.col_marginal)


def beta_exact(joint: JointPartitionDistribution) -> float:
    """Half the absolute deviation from independence, summed over atoms."""
    return 0.5 * float(np.abs(joint.deviation()).sum())


def beta_variational(joint: JointPartitionDistribution) -> float:
    """Total-variation form: the largest signed deviation over unions of atom
    pairs, attained by collecting all positive deviations."""
    dev = joint.deviation()
    return float(dev[dev > 0.0].sum())


def set_partitions(n: int) -> list[list[list[int]]]:
    """All partitions of {0..n-1} via restricted growth strings."""
    if n == 0:
        return [[]]
    out: list[list[list[int]]] = []
    rgs = [0] * n

    def rec(i: int, maxval: int):
        if i == n:
            blocks: dict[int, list[int]] = {}
            for idx, b in enumerate(rgs):
                blocks.setdefault(b, []).append(idx)
            out.append([blocks[b] for b in sorted(blocks)])
            return
        for b in range(maxval + 2):
            rgs[i] = b
            rec(i + 1, max(maxval, b))

    rec(1, 0)
    return out


def coarsen(joint: JointPartitionDistribution, row_groups, col_groups) -> JointPartitionDistribution:
    """Aggregate atoms into the given partition blocks."""
    m = joint.matrix
    rmat = np.zeros((len(row_groups), m.shape[0]))
    for g, members in enumerate(row_groups):
        rmat[g, members] = 1.0
    cmat = np.zeros((len(col_groups), m.shape[1]))
    for g, members in enumerate(col_groups):
        cmat[g, members] = 1.0
    return JointPartitionDistribution.make(rmat @ m @ cmat.T)


def beta_partition_supremum(joint: JointPartitionDistribution) -> float:
    """Exhaustive supremum of the atom-sum over all coarsenings of both
    partitions.  Brute-force oracle; factorial in the number of atoms."""
    m = joint.matrix
    dev = joint.deviation()
    best = 0.0
    for rows in set_partitions(m.shape[0]):
        rmat = np.zeros((len(rows), m.shape[0]))
        for g, members in enumerate(rows):
            rmat[g, members] = 1.0
        rdev = rmat @ dev
        for cols in set_partitions(m.shape[1]):
            cmat = np.zeros((len(cols), m.shape[1]))
            for g, members in enumerate(cols):
                cmat[g, members] = 1.0
            val = 0.5 * float(np.abs(rdev @ cmat.T).sum())
            if val > best:
                best = val
    return best


# -- inequality audits ---------------------------------------------------------


@dataclass(frozen=True)
class InequalityReport:
    lhs: float
    rhs: float
    slack: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + self.slack


def yoshihara_check(
    joint: JointPartitionDistribution, h: np.ndarray, delta: float, slack: float = 1e-9
) -> InequalityReport:
    """Weighted total-variation bound: integral of |h| against the deviation
    measure versus twice the larger (1+delta)-norm of h times
    beta^(delta/(1+delta))."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    h = np.asarray(h, dtype=float)
    if h.shape != joint.matrix.shape:
        raise InvalidDistributionError("weight matrix shape must match the joint matrix")
    dev = joint.deviation()
    lhs = float(np.abs(h * dev).sum())
    prod = np.outer(joint.row_marginal, joint.col_marginal)
    power = np.abs(h) ** (1.0 + delta)
    norm_joint = float((power * joint.matrix).sum()) ** (1.0 / (1.0 + delta))
    norm_prod = float((power * prod).sum()) ** (1.0 / (1.0 + delta))
    beta = beta_exact(joint)
    rhs = 2.0 * max(norm_joint, norm_prod) * beta ** (delta / (1.0 + delta))
    return InequalityReport(lhs=lhs, rhs=rhs, slack=slack)


@dataclass(frozen=True)
class CovarianceReport:
    covariance: float
    bound: float
    beta: float
    slack: float

    @property
    def passed(self) -> bool:
        return abs(self.covariance) <= self.bound + self.slack


def _coarsen_by_values(joint: JointPartitionDistribution, x: np.ndarray, z: np.ndarray):
    """Merge atoms on which the variables coincide, yielding the partitions
    actually generated by the two variables."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    xs, xi = np.unique(x, return_inverse=True)
    zs, zi = np.unique(z, return_inverse=True)
    rows = [list(np.flatnonzero(xi == g)) for g in range(xs.size)]
    cols = [list(np.flatnonzero(zi == g)) for g in range(zs.size)]
    return coarsen(joint, rows, cols), xs, zs


def covariance_bound_check(
    x: Sequence[float],
    z: Sequence[float],
    joint: JointPartitionDistribution,
    delta: float,
    slack: float = 1e-9,
) -> CovarianceReport:
    """Covariance bound with exponent delta/(2+delta).

    The mixing coefficient is computed on the partitions generated by the two
    variables (atoms with equal values merged), which is the coefficient the
    bound is stated for.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != (joint.matrix.shape[0],) or z.shape != (joint.matrix.shape[1],):
        raise InvalidDistributionError("variable lengths must match the joint matrix")
    p = joint.row_marginal
    q = joint.col_marginal
    cov = float(x @ joint.matrix @ z) - float(x @ p) * float(z @ q)
    coarse, xs, zs = _coarsen_by_values(joint, x, z)
    beta = beta_exact(coarse)
    mom_x = float(np.dot(np.abs(x) ** (2.0 + delta), p)) ** (1.0 / (2.0 + delta))
    mom_z = float(np.dot(np.abs(z) ** (2.0 + delta), q)) ** (1.0 / (2.0 + delta))
    bound = 2.0 * mom_x * mom_z * beta ** (delta / (2.0 + delta))
    return CovarianceReport(covariance=cov, bound=bound, beta=beta, slack=slack)


# -- empirical beta for tessellations -------------------------------------------


@dataclass(frozen=True)
class BetaEstimate:
    a: float
    b: float
    value: float
    n_samples: int
    pattern_dims: tuple
    stderr: float

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0):
            raise ValueError("mixing coefficient must lie in [0, 1]")
        if not (self.b > self.a > 0.0):
            raise ValueError("windows need b > a > 0")


@dataclass(frozen=True)
class DecayFit:
    chi: float
    theta: float
    residuals: np.ndarray

    def envelope(self, b: np.ndarray) -> np.ndarray:
        return self.chi * np.asarray(b, dtype=float) ** (-self.theta)


def _cuboid_outside(region: CuboidRegion, b: float) -> bool:
    lo = np.asarray(region.lower)
    hi = np.asarray(region.upper)
    return bool(np.any(lo >= b) or np.any(hi <= -b))


def _cuboid_inside(region: CuboidRegion, a: float) -> bool:
    lo = np.asarray(region.lower)
    hi = np.asarray(region.upper)
    return bool(np.all(lo >= -a) and np.all(hi <= a))


def _facet_hits_cuboid(facet, region: CuboidRegion) -> bool:
    return facet.clip_to_cuboid(region) is not None


def hit_pattern(tess: Tessellation, probes: Sequence[CuboidRegion]) -> int:
    """Bit pattern of hit-or-miss events: bit i set when a dividing facet
    meets the closure of probe i."""
    code = 0
    for i, probe in enumerate(probes):
        lo = np.asarray(probe.lower)
        hi = np.asarray(probe.upper)
        for facet in tess.facets():
            vmin, vmax = facet.bounds()
            if np.any(vmin > hi) or np.any(vmax < lo):
                continue
            if _facet_hits_cuboid(facet, probe):
                code |= 1 << i
                break
    return code


def joint_from_patterns(inner: np.ndarray, outer: np.ndarray, m_bits: int, k_bits: int) -> JointPartitionDistribution:
    n = inner.shape[0]
    counts = np.bincount(inner * (1 << k_bits) + outer, minlength=(1 << m_bits) * (1 << k_bits))
    return JointPartitionDistribution.make(counts.reshape(1 << m_bits, 1 << k_bits) / n)


def default_probe_layout(a: float, b: float, dim: int) -> tuple[list[CuboidRegion], list[CuboidRegion]]:
    """Two inner probes nearly filling [-a,a]^dim and two outer probes hugging
    opposite faces of [-b,b]^dim (pattern dimensions 4 x 4)."""
    s = 0.9 * a
    gap = 0.05 * a
    lo = [-s] * dim
    hi = [s] * dim
    inner = [
        CuboidRegion.make(lo[:1] + lo[1:], [-gap] + hi[1:]),
        CuboidRegion.make([gap] + lo[1:], hi[:1] + hi[1:]),
    ]
    pad = 0.05 * a
    depth = 1.0
    side = [-min(b, 1.0)] * (dim - 1), [min(b, 1.0)] * (dim - 1)
    outer = [
        CuboidRegion.make([b + pad] + side[0], [b + pad + depth] + side[1]),
        CuboidRegion.make([-b - pad - depth] + side[0], [-b - pad] + side[1]),
    ]
    return inner, outer


def empirical_beta(
    measure: HyperplaneMeasure,
    t: float,
    a: float,
    b: float,
    inner_probes: Sequence[CuboidRegion],
    outer_probes: Sequence[CuboidRegion],
    n_samples: int,
    seed: int,
    window: CuboidRegion | None = None,
    n_bootstrap: int = 200,
    return_patterns: bool = False,
):
    """Lower-bound estimate of the spatial mixing coefficient between the
    inside of [-a,a]^dim and the outside of [-b,b]^dim at time t.

    Simulates n_samples tessellations, records the hit-or-miss pattern of the
    probe boxes on both sides, and computes the exact mixing coefficient of
    the empirical joint pattern matrix.  The finite probe families generate
    sub-sigma-algebras of the two window algebras, hence the lower bound.
    The standard error is bootstrapped over replicates.
    """
    if n_samples < 100:
        raise InsufficientSamplesError("need at least 100 replicates")
    if not (0.0 < a < b):
        raise ValueError("windows need 0 < a < b")
    dim = measure.dim
    for probe in inner_probes:
        if not _cuboid_inside(probe, a):
            raise ValueError("every inner probe must lie inside [-a,a]^dim")
    for probe in outer_probes:
        if not _cuboid_outside(probe, b):
            raise ValueError("every outer probe must lie outside [-b,b]^dim")
    if window is None:
        pad = 0.25
        bounds = np.array(
            [
                [min(p.lower[r] for p in [*inner_probes, *outer_probes]) for r in range(dim)],
                [max(p.upper[r] for p in [*inner_probes, *outer_probes]) for r in range(dim)],
            ]
        )
        lo = np.minimum(bounds[0], -b) - pad
        hi = np.maximum(bounds[1], b) + pad
        window = CuboidRegion.make(lo, hi)
    wpoly = window.to_polytope()
    for probe in [*inner_probes, *outer_probes]:
        # negative tolerance makes the containment test strict
        if not all(
            wpoly.contains_point(c, tol=-1e-9 * wpoly.diameter)
            for c in np.array(np.meshgrid(*zip(probe.lower, probe.upper))).T.reshape(-1, dim)
        ):
            raise ValueError("simulation window must strictly contain every probe")

    m_bits = len(inner_probes)
    k_bits = len(outer_probes)
    inner_codes = np.empty(n_samples, dtype=np.int64)
    outer_codes = np.empty(n_samples, dtype=np.int64)
    for rep in range(n_samples):
        cfg = SimulationConfig(window=window, t=t, measure=measure, seed=seed)
        tess = simulate(cfg, rng=derive_rng(seed, rep))
        inner_codes[rep] = hit_pattern(tess, inner_probes)
        outer_codes[rep] = hit_pattern(tess, outer_probes)

    joint = joint_from_patterns(inner_codes, outer_codes, m_bits, k_bits)
    value = beta_exact(joint)
    boot_rng = derive_rng(seed, n_samples, 7)
    boot = np.empty(n_bootstrap)
    for i in range(n_bootstrap):
        idx = boot_rng.integers(0, n_samples, size=n_samples)
        boot[i] = beta_exact(joint_from_patterns(inner_codes[idx], outer_codes[idx], m_bits, k_bits))
    estimate = BetaEstimate(
        a=float(a),
        b=float(b),
        value=value,
        n_samples=n_samples,
        pattern_dims=(1 << m_bits, 1 << k_bits),
        stderr=float(boot.std(ddof=1)),
    )
    if return_patterns:
        return estimate, inner_codes, outer_codes
    return estimate


def permutation_null(
    inner: np.ndarray,
    outer: np.ndarray,
    m_bits: int,
    k_bits: int,
    n_shuffles: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Mean and standard deviation of the estimator under independence,
    obtained by shuffling the outer patterns across replicates.  Calibrates
    the plug-in bias of the empirical coefficient."""
    vals = np.empty(n_shuffles)
    for i in range(n_shuffles):
        vals[i] = beta_exact(joint_from_patterns(inner, rng.permutation(outer), m_bits, k_bits))
    return float(vals.mean()), float(vals.std(ddof=1))


def fit_decay(estimates: Sequence[BetaEstimate]) -> DecayFit:
    """Power-law envelope over estimates sharing the inner scale.

    Least squares on (log b, log value) with the slope clipped into (-1, 0);
    the prefactor is raised until every point lies below the envelope.
    """
    if len(estimates) < 3:
        raise ValueError("need at least 3 estimates to fit a decay envelope")
    a_vals = {e.a for e in estimates}
    if len(a_vals) != 1:
        raise ValueError("estimates must share the inner scale a")
    bs = np.array([e.b for e in estimates])
    if np.any(np.diff(bs) <= 0.0):
        raise ValueError("estimates must come with increasing b")
    vals = np.array([e.value for e in estimates])
    errs = np.array([e.stderr for e in estimates])
    if np.all(vals <= errs):
        raise DegenerateFitError("estimates indistinguishable from zero")
    mask = vals > 0.0
    if int(mask.sum()) < 3:
        raise DegenerateFitError("fewer than 3 positive estimates")
    lx = np.log(bs[mask])
    ly = np.log(vals[mask])
    slope, intercept = np.polyfit(lx, ly, 1)
    eps = 1e-6
    theta = float(np.clip(-slope, eps, 1.0 - eps))
    chi = float(np.max(vals[mask] * bs[mask] ** theta))
    residuals = np.log(chi * bs[mask] ** (-theta)) - ly
    return DecayFit(chi=chi, theta=theta, residuals=residuals)

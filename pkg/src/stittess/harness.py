"""Monte Carlo experiment orchestration.

Plans describe a measure, a time horizon, a functional and a ladder of window
levels; the harness runs seeded independent replicates (optionally across
processes), aggregates densities and variances, fits decay slopes with
bootstrap confidence intervals, evaluates the explicit variance upper bound,
audits covariance decay over lattice shells, and runs the window-consistency
test.

Every replicate stream is derived from (base seed, level, replicate), so
results are reproducible bit for bit and independent of scheduling order.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .functionals import ADDITIVE, SUBADDITIVE, CuboidGrid, FunctionalSpec, evaluate, evaluate_on_grid
from .geometry import CuboidRegion
from .measure import HyperplaneMeasure
from .mixing import BetaEstimate
from .process import SimulationConfig, Tessellation, simulate
from .rand import derive_rng

#: functionals that see window-boundary artifacts and need a strict margin
MARGIN_REQUIRED = ("vertex_count", "segment_centers", "kface_refs")


class InvalidParamsError(ValueError):
    """Parameters violate a harness precondition."""


class UnstableMomentsWarning(UserWarning):
    """Empirical higher moments keep growing with the sample; the moment
    condition backing the variance bound looks doubtful at this scale."""


@dataclass(frozen=True)
class ExperimentPlan:
    measure: HyperplaneMeasure
    t: float
    functional: FunctionalSpec
    n_values: tuple
    replicates: int
    margin: float = 0.0
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.replicates < 2:
            raise InvalidParamsError("need at least 2 replicates")
        if not (self.t > 0.0):
            raise InvalidParamsError("time horizon must be positive")
        if any(n < 1 for n in self.n_values) or len(self.n_values) == 0:
            raise InvalidParamsError("window levels must be positive integers")
        if self.margin < 0.0:
            raise InvalidParamsError("buffer margin cannot be negative")
        if self.functional.name in MARGIN_REQUIRED and self.margin <= 0.0:
            raise InvalidParamsError(
                f"functional {self.functional.name} counts window-boundary artifacts "
                "at margin 0; use a positive buffer margin"
            )

    @property
    def dim(self) -> int:
        return self.measure.dim

    def window(self, n: int) -> CuboidRegion:
        half = n + self.margin
        return CuboidRegion.make([-half] * self.dim, [half] * self.dim)

    def region(self, n: int) -> CuboidRegion:
        return CuboidRegion.make([-float(n)] * self.dim, [float(n)] * self.dim)

    def describe(self) -> dict:
        d = self.measure.directional
        meas = (
            {"kind": "isotropic", "mass": d.mass}
            if d.kind == "isotropic"
            else {
                "kind": "discrete",
                "atoms": [
                    {"vector": list(map(float, u)), "weight": float(w)}
                    for u, w in zip(d.directions, d.weights)
                ],
            }
        )
        return {
            "dim": self.dim,
            "measure": meas,
            "t": self.t,
            "functional": self.functional.label(),
            "kind": self.functional.kind,
            "n_values": list(self.n_values),
            "replicates": self.replicates,
            "margin": self.margin,
            "seed": self.seed,
        }

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.describe(), sort_keys=True).encode()).hexdigest()[:16]


def _one_replicate(args) -> tuple[int, float]:
    plan, n, rep = args
    cfg = SimulationConfig(window=plan.window(n), t=plan.t, measure=plan.measure, seed=plan.seed)
    tess = simulate(cfg, rng=derive_rng(plan.seed, n, rep))
    return rep, evaluate(plan.functional, tess, plan.region(n))


def replicate_values(plan: ExperimentPlan, n: int) -> np.ndarray:
    """Functional values on [-n,n[^dim over the plan's replicates (raw, not
    volume normalized)."""
    jobs = [(plan, n, rep) for rep in range(plan.replicates)]
    out = np.empty(plan.replicates)
    if plan.threads > 1:
        with ProcessPoolExecutor(max_workers=plan.threads) as pool:
            for rep, val in pool.map(_one_replicate, jobs, chunksize=16):
                out[rep] = val
    else:
        for job in jobs:
            rep, val = _one_replicate(job)
            out[rep] = val
    return out


def _bootstrap_ci(values: np.ndarray, stat: Callable, n_boot: int, rng, level: float = 0.95):
    boot = np.empty(n_boot)
    n = values.shape[0]
    for i in range(n_boot):
        boot[i] = stat(values[rng.integers(0, n, size=n)])
    alpha = (1.0 - level) / 2.0
    return float(np.quantile(boot, alpha)), float(np.quantile(boot, 1.0 - alpha))


@dataclass(frozen=True)
class DensityEstimate:
    n: int
    mean: float
    stderr: float
    ci_normal: tuple
    ci_bootstrap: tuple
    replicates: int


def estimate_density(plan: ExperimentPlan, n: int, n_boot: int = 500) -> DensityEstimate:
    """Mean of the volume-normalized functional on [-n,n[^dim with normal and
    bootstrap confidence intervals.  Different n estimate the same density."""
    vals = replicate_values(plan, n) / (2.0 * n) ** plan.dim
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    ci_n = (mean - 1.96 * se, mean + 1.96 * se)
    ci_b = _bootstrap_ci(vals, lambda v: float(v.mean()), n_boot, derive_rng(plan.seed, n, 10**6))
    return DensityEstimate(
        n=n, mean=mean, stderr=se, ci_normal=ci_n, ci_bootstrap=ci_b, replicates=plan.replicates
    )


@dataclass(frozen=True)
class LevelStats:
    n: int
    mean: float
    variance: float
    var_ci: tuple
    moment_2_delta: float


@dataclass(frozen=True)
class ScanResult:
    plan_hash: str
    levels: tuple
    slope: float
    slope_ci: tuple
    theta: float
    delta: float
    theorem_exponent: float
    slope_consistent: bool
    moments_stable: bool

    def summary(self) -> dict:
        return {
            "plan": self.plan_hash,
            "levels": [
                {
                    "n": l.n,
                    "mean": l.mean,
                    "variance": l.variance,
                    "var_ci": list(l.var_ci),
                    "moment_2_delta": l.moment_2_delta,
                }
                for l in self.levels
            ],
            "slope": self.slope,
            "slope_ci": list(self.slope_ci),
            "theorem_exponent": self.theorem_exponent,
            "slope_consistent": self.slope_consistent,
            "moments_stable": self.moments_stable,
        }


def _moment_stability(values: np.ndarray, delta: float) -> bool:
    """Crude heavy-tail monitor: the cumulative (2+delta)-th moment should
    stabilize; flag when the second half more than triples the first half."""
    power = np.abs(values) ** (2.0 + delta)
    half = len(power) // 2
    first = power[:half].mean()
    second = power[half:].mean()
    if first <= 0.0:
        return second <= 0.0
    return second <= 3.0 * first


def variance_scan(
    plan: ExperimentPlan, theta: float = 0.9, delta: float = 2.0, n_boot: int = 400
) -> ScanResult:
    """Sample variance of the normalized functional per level and the fitted
    log-log slope against n, with a bootstrap interval.

    Reports whether the fitted slope is at most -theta*delta/(2+delta), the
    exponent the mixing bound guarantees for additive functionals.
    """
    if plan.functional.kind != ADDITIVE:
        raise InvalidParamsError("variance scan applies to additive functionals")
    if not (0.0 < theta < 1.0) or delta <= 0.0:
        raise InvalidParamsError("need 0 < theta < 1 and delta > 0")
    per_level = []
    samples = {}
    stable = True
    for n in plan.n_values:
        vals = replicate_values(plan, n) / (2.0 * n) ** plan.dim
        samples[n] = vals
        var = float(vals.var(ddof=1))
        rng = derive_rng(plan.seed, n, 10**6 + 1)
        ci = _bootstrap_ci(vals, lambda v: float(v.var(ddof=1)), n_boot, rng)
        mom = float(np.mean(np.abs(vals) ** (2.0 + delta)))
        if not _moment_stability(vals, delta):
            stable = False
            warnings.warn(
                f"(2+delta)-moment unstable at level n={n}", UnstableMomentsWarning, stacklevel=2
            )
        per_level.append(LevelStats(n=n, mean=float(vals.mean()), variance=var, var_ci=ci, moment_2_delta=mom))

    ns = np.array([l.n for l in per_level], dtype=float)
    variances = np.array([l.variance for l in per_level])
    # variances at float-roundoff scale mean a deterministic functional
    floors = np.array([(1e-12 * max(1.0, abs(l.mean))) ** 2 for l in per_level])
    if np.any(variances <= floors):
        slope = math.nan
        slope_ci = (math.nan, math.nan)
    else:
        slope = float(np.polyfit(np.log(ns), np.log(variances), 1)[0])
        boot_rng = derive_rng(plan.seed, 10**6 + 2)
        boots = []
        reps = plan.replicates
        for _ in range(n_boot):
            vs = []
            for n in plan.n_values:
                idx = boot_rng.integers(0, reps, size=reps)
                vs.append(samples[n][idx].var(ddof=1))
            vs = np.array(vs)
            if np.all(vs > 0.0):
                boots.append(np.polyfit(np.log(ns), np.log(vs), 1)[0])
        boots = np.array(boots)
        slope_ci = (float(np.quantile(boots, 0.025)), float(np.quantile(boots, 0.975)))
    exponent = -theta * delta / (2.0 + delta)
    consistent = bool(slope <= exponent) if not math.isnan(slope) else False
    return ScanResult(
        plan_hash=plan.hash(),
        levels=tuple(per_level),
        slope=slope,
        slope_ci=slope_ci,
        theta=theta,
        delta=delta,
        theorem_exponent=exponent,
        slope_consistent=consistent,
        moments_stable=stable,
    )


# -- explicit variance bound -----------------------------------------------------


@dataclass(frozen=True)
class MomentParams:
    """Exponent bookkeeping for the explicit variance bound."""

    delta: float
    theta: float
    kappa: float = 0.25

    def __post_init__(self):
        if self.delta <= 0.0:
            raise InvalidParamsError("delta must be positive")
        if not (0.0 < self.theta < 1.0):
            raise InvalidParamsError("theta must lie strictly between 0 and 1")
        if not (0.0 < self.kappa < 0.5):
            raise InvalidParamsError("kappa must lie strictly between 0 and 1/2")

    @property
    def rho(self) -> float:
        return 1.0 - self.theta * self.delta / (2.0 + self.delta)


def variance_upper_bound(
    params: MomentParams, dim: int, n: float, var_x1: float, moment: float, chi: float
) -> float:
    """Explicit bound for the variance of the normalized additive functional:

        3^dim/(2n)^dim * Var(X_1)
      + 2^dim * (E|X_1|^(2+delta))^(2/(2+delta)) * chi * (2n - kappa)^-(1-rho)

    where X_1 is the functional on a unit cube and chi scales the mixing
    envelope (not computable here; supplied by the user or a fit).
    """
    if dim not in (2, 3):
        raise InvalidParamsError("dimension must be 2 or 3")
    if n < 1:
        raise InvalidParamsError("window level n must be at least 1")
    if var_x1 < 0.0 or moment < 0.0 or chi <= 0.0:
        raise InvalidParamsError("need Var >= 0, moment >= 0 and chi > 0")
    first = 3.0**dim / (2.0 * n) ** dim * var_x1
    second = (
        2.0**dim
        * moment ** (2.0 / (2.0 + params.delta))
        * chi
        * (2.0 * n - params.kappa) ** (-(1.0 - params.rho))
    )
    return first + second


# -- lattice shell covariance audit ------------------------------------------------


@dataclass(frozen=True)
class ShellStats:
    k: int
    lattice_size: int
    pair_count: int
    mean_cov: float
    mean_abs_cov: float
    stderr_abs: float
    envelope: float | None


@dataclass(frozen=True)
class ShellAuditReport:
    shells: tuple
    diagonal_variances: np.ndarray
    spearman_rho: float
    spearman_p: float
    decay_trend_ok: bool


def shell_covariance_audit(
    tessellations: Sequence[Tessellation],
    spec: FunctionalSpec,
    grid: CuboidGrid,
    params: MomentParams | None = None,
    chi: float | None = None,
) -> ShellAuditReport:
    """Empirical covariances of per-cube values grouped by lattice distance.

    Checks the qualitative decay (nonincreasing trend of |cov| in the shell
    index, Spearman) and, when chi is given, reports the mixing-envelope bound
    2 * m^(2/(2+delta)) * (chi * (k-kappa)^-theta)^(delta/(2+delta)) next to
    each shell; the bound is reported, never asserted.
    """
    values = np.array([evaluate_on_grid(t, spec, grid) for t in tessellations])
    if values.shape[0] < 2:
        raise InvalidParamsError("need at least 2 replicate tessellations")
    centered = values - values.mean(axis=0, keepdims=True)
    cov = centered.T @ centered / (values.shape[0] - 1)
    indices = grid.indices()
    by_shell: dict[int, list[float]] = {}
    for i_pos, i in enumerate(indices):
        for j_pos in range(i_pos + 1, len(indices)):
            k = CuboidGrid.distance(i, indices[j_pos])
            by_shell.setdefault(k, []).append(cov[i_pos, j_pos])
    moment = float(np.mean(np.abs(values) ** (2.0 + params.delta))) if params else None
    shells = []
    ks = sorted(by_shell)
    means_abs = []
    for k in ks:
        arr = np.abs(np.array(by_shell[k]))
        envelope = None
        if params is not None and chi is not None and k > params.kappa:
            beta_bound = chi * (k - params.kappa) ** (-params.theta)
            envelope = (
                2.0
                * moment ** (2.0 / (2.0 + params.delta))
                * beta_bound ** (params.delta / (2.0 + params.delta))
            )
        shells.append(
            ShellStats(
                k=k,
                lattice_size=grid.shell_size(k),
                pair_count=len(by_shell[k]),
                mean_cov=float(np.mean(by_shell[k])),
                mean_abs_cov=float(arr.mean()),
                stderr_abs=float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0,
                envelope=envelope,
            )
        )
        means_abs.append(float(arr.mean()))
    if len(ks) >= 3:
        rho, pval = stats.spearmanr(ks, means_abs)
        rho = float(rho)
        pval = float(pval)
    else:
        rho, pval = math.nan, math.nan
    return ShellAuditReport(
        shells=tuple(shells),
        diagonal_variances=np.diag(cov).copy(),
        spearman_rho=rho,
        spearman_p=pval,
        decay_trend_ok=bool(rho < 0.0) if not math.isnan(rho) else False,
    )


# -- ergodic scans ------------------------------------------------------------------


@dataclass(frozen=True)
class ErgodicTrace:
    """Normalized per-replicate trajectories of one realization across nested
    window levels."""

    plan_hash: str
    n_values: tuple
    values: np.ndarray  # replicates x levels, volume normalized
    gamma_hat: float
    l1_deviation: np.ndarray
    sd_per_level: np.ndarray

    def mean_trajectory(self) -> np.ndarray:
        return self.values.mean(axis=0)


def _one_trace(args) -> tuple[int, np.ndarray]:
    plan, rep = args
    n_max = max(plan.n_values)
    cfg = SimulationConfig(window=plan.window(n_max), t=plan.t, measure=plan.measure, seed=plan.seed)
    tess = simulate(cfg, rng=derive_rng(plan.seed, rep))
    row = np.empty(len(plan.n_values))
    for pos, n in enumerate(plan.n_values):
        row[pos] = evaluate(plan.functional, tess, plan.region(n)) / (2.0 * n) ** plan.dim
    return rep, row


def ergodic_scan(plan: ExperimentPlan) -> ErgodicTrace:
    """Almost-sure convergence scan for subadditive (or additive) functionals.

    One simulation per replicate in the largest window; the functional is
    evaluated on the nested half-open cubes of every level, so each row is a
    genuine trajectory of one realization.  The limit estimate is the mean at
    the largest level.
    """
    if plan.functional.kind not in (ADDITIVE, SUBADDITIVE):
        raise InvalidParamsError(
            "ergodic scan needs a subadditive functional (negate a superadditive one)"
        )
    ns = sorted(plan.n_values)
    plan = ExperimentPlan(
        measure=plan.measure,
        t=plan.t,
        functional=plan.functional,
        n_values=tuple(ns),
        replicates=plan.replicates,
        margin=plan.margin,
        seed=plan.seed,
        threads=plan.threads,
    )
    jobs = [(plan, rep) for rep in range(plan.replicates)]
    values = np.empty((plan.replicates, len(ns)))
    if plan.threads > 1:
        with ProcessPoolExecutor(max_workers=plan.threads) as pool:
            for rep, row in pool.map(_one_trace, jobs, chunksize=4):
                values[rep] = row
    else:
        for job in jobs:
            rep, row = _one_trace(job)
            values[rep] = row
    gamma_hat = float(values[:, -1].mean())
    l1 = np.abs(values - gamma_hat).mean(axis=0)
    return ErgodicTrace(
        plan_hash=plan.hash(),
        n_values=tuple(ns),
        values=values,
        gamma_hat=gamma_hat,
        l1_deviation=l1,
        sd_per_level=values.std(axis=0, ddof=1),
    )


# -- window consistency --------------------------------------------------------------


@dataclass(frozen=True)
class ConsistencyReport:
    statistic: float
    p_value: float
    n_samples: int


def consistency_test(
    measure: HyperplaneMeasure,
    t: float,
    window: CuboidRegion,
    subwindow: CuboidRegion,
    n_samples: int,
    seed: int,
    t_direct: float | None = None,
) -> ConsistencyReport:
    """Two-sample KS test of the boundary mass in the subwindow: restrictions
    of simulations in the window against direct simulations in the subwindow.

    The restriction identity says the two samples share one distribution;
    passing t_direct different from t gives the negative control.
    """
    from .functionals import boundary_mass
    from .process import restrict

    if t_direct is None:
        t_direct = t
    lo = np.asarray(subwindow.lower)
    hi = np.asarray(subwindow.upper)
    wlo = np.asarray(window.lower)
    whi = np.asarray(window.upper)
    if np.any(lo < wlo) or np.any(hi > whi):
        raise InvalidParamsError("subwindow must be contained in the window")
    region = subwindow
    restricted = np.empty(n_samples)
    direct = np.empty(n_samples)
    for rep in range(n_samples):
        big = simulate(
            SimulationConfig(window=window, t=t, measure=measure, seed=seed),
            rng=derive_rng(seed, 0, rep),
        )
        restricted[rep] = boundary_mass(restrict(big, subwindow), region)
        small = simulate(
            SimulationConfig(window=subwindow, t=t_direct, measure=measure, seed=seed),
            rng=derive_rng(seed, 1, rep),
        )
        direct[rep] = boundary_mass(small, region)
    ks = stats.ks_2samp(restricted, direct)
    return ConsistencyReport(statistic=float(ks.statistic), p_value=float(ks.pvalue), n_samples=n_samples)

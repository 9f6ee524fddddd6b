"""Headline quantities of the capacity model.

Long-run fate probes, the reversibility threshold (the unstable basin
boundary in initial capacity, found by bisection), interpolated
threshold-crossing times, two-parameter sensitivity sweeps, and seeded
Monte Carlo uncertainty bands over erosion-rate draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .model import (
    ModelParams,
    SalienceSchedule,
    Trajectory,
    N_DOMAINS,
    simulate,
    single_domain_step,
)

__all__ = [
    "DECAYED",
    "PERSISTED",
    "ThresholdReport",
    "SweepResult",
    "BandResult",
    "single_domain_capacity",
    "long_run_fate",
    "estimate_reversibility_threshold",
    "time_to_threshold",
    "sweep",
    "default_mc_intervals",
    "monte_carlo_band",
]

DECAYED = "decayed"
PERSISTED = "persisted"

# Fate probes default to a long window: near the basin boundary the
# repulsion is weak (it scales with the recovery rate), so short probes
# would misclassify slow escapes.
DEFAULT_PROBE_HORIZON = 600.0
DEFAULT_FATE_EPS = 0.02


@dataclass(frozen=True)
class ThresholdReport:
    """Estimated reversibility threshold and the bracket that pinned it.

    ``monostable`` is set (and ``c_bar`` is None) when both probe ends
    share one fate, reported as a result rather than raised.
    """

    c_bar: Optional[float]
    basin_low: float
    basin_high: float
    method: str = "bisection"
    tolerance: float = 1e-3
    probe_horizon: float = DEFAULT_PROBE_HORIZON
    eps: float = DEFAULT_FATE_EPS
    monostable: bool = False
    fate: Optional[str] = None
    crossing_year: Optional[tuple[Optional[float], ...]] = None
    scenario: Optional[str] = None


@dataclass(frozen=True)
class SweepResult:
    """Crossing years over a rectangular (delta, alpha) grid, row-major."""

    delta_values: tuple[float, ...]
    alpha_values: tuple[float, ...]
    crossing_years: tuple[tuple[Optional[float], ...], ...]
    scenario: str
    c_bar_ref: float
    horizon_years: float

    def cell(self, i: int, j: int) -> Optional[float]:
        return self.crossing_years[i][j]


@dataclass(frozen=True)
class BandResult:
    """Seeded Monte Carlo crossing-year statistics for one scenario."""

    scenario: str
    n: int
    seed: int
    mean: Optional[float]
    sd: Optional[float]
    min: Optional[float]
    max: Optional[float]
    crossed: int
    rejections: int
    horizon_years: float
    intervals: tuple[tuple[str, float, float], ...]


def _autonomous_params(params: ModelParams, s_level: Optional[float]) -> ModelParams:
    """Single-domain probe setup: constant schedule, no lock-in feedback."""
    if s_level is None:
        s_level = params.salience_schedule.level(0.0, 0)
    return replace(
        params,
        kappa_L=0.0,
        salience_schedule=SalienceSchedule.constant(s_level),
    )


def single_domain_capacity(
    c0: float,
    params: ModelParams,
    horizon_years: float,
    s_level: Optional[float] = None,
    domain: int = 0,
) -> list[float]:
    """Capacity path of one uncoupled domain under a constant schedule."""
    p = _autonomous_params(params, s_level).validate()
    n_steps = int(round(horizon_years / p.dt))
    c = float(c0)
    s = p.salience_schedule.level(0.0, domain)
    v_e = 0.0
    v_h = 0.0
    path = [c]
    for i in range(n_steps):
        c, s, v_e, v_h, _, _ = single_domain_step(c, s, v_e, v_h, p, i * p.dt, domain)
        path.append(c)
    return path


def long_run_fate(
    c0: float,
    params: ModelParams,
    probe_horizon: float = DEFAULT_PROBE_HORIZON,
    eps: float = DEFAULT_FATE_EPS,
    step: Optional[Callable[[float], float]] = None,
) -> str:
    """Classify an initial capacity as DECAYED or PERSISTED.

    Runs a lone domain (constant schedule, no feedback) for the probe
    horizon and reports DECAYED iff the final capacity is below eps.
    ``step`` substitutes an arbitrary 1-D capacity map for the
    institutional step, applied once per dt.
    """
    if probe_horizon <= 0:
        raise ConfigurationError(f"probe_horizon must be > 0, got {probe_horizon!r}")
    if eps <= 0:
        raise ConfigurationError(f"eps must be > 0, got {eps!r}")
    if step is not None:
        n_steps = int(round(probe_horizon / params.dt))
        c = float(c0)
        for _ in range(n_steps):
            c = step(c)
        return DECAYED if c < eps else PERSISTED
    path = single_domain_capacity(c0, params, probe_horizon)
    return DECAYED if path[-1] < eps else PERSISTED


def estimate_reversibility_threshold(
    params: ModelParams,
    c_lo: float,
    c_hi: float,
    tol: float = 1e-3,
    probe_horizon: float = DEFAULT_PROBE_HORIZON,
    eps: float = DEFAULT_FATE_EPS,
    step: Optional[Callable[[float], float]] = None,
    scenario: Optional[str] = None,
) -> ThresholdReport:
    """Bisect initial capacity for the basin boundary between decay and persistence.

    Needs at most ceil(log2((c_hi - c_lo)/tol)) fate probes after the two
    bracket probes. If both bracket ends share a fate the system is
    reported monostable instead of raising.
    """
    if not c_lo < c_hi:
        raise ConfigurationError(f"need c_lo < c_hi, got {c_lo!r} >= {c_hi!r}")
    if tol <= 0:
        raise ConfigurationError(f"tol must be > 0, got {tol!r}")

    def fate(c0: float) -> str:
        return long_run_fate(c0, params, probe_horizon, eps, step)

    fate_lo = fate(c_lo)
    fate_hi = fate(c_hi)
    if fate_lo == fate_hi:
        return ThresholdReport(
            c_bar=None,
            basin_low=c_lo,
            basin_high=c_hi,
            tolerance=tol,
            probe_horizon=probe_horizon,
            eps=eps,
            monostable=True,
            fate=fate_lo,
            scenario=scenario,
        )
    if fate_lo == PERSISTED:
        raise ConfigurationError(
            "inverted bracket: low end persists while high end decays"
        )

    lo, hi = c_lo, c_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fate(mid) == DECAYED:
            lo = mid
        else:
            hi = mid
    return ThresholdReport(
        c_bar=0.5 * (lo + hi),
        basin_low=lo,
        basin_high=hi,
        tolerance=tol,
        probe_horizon=probe_horizon,
        eps=eps,
        fate=None,
        scenario=scenario,
    )


def time_to_threshold(
    traj: Trajectory, c_bar: float, domain_index: int = 0
) -> Optional[float]:
    """First time capacity drops below c_bar, linearly interpolated.

    None when the trajectory never crosses. A sample sitting exactly on
    c_bar counts as the crossing instant only once the next sample is
    strictly below.
    """
    if not traj.samples:
        raise ConfigurationError("trajectory is empty")
    if not 0 <= domain_index < N_DOMAINS:
        raise ConfigurationError(f"domain_index must be in 0..2, got {domain_index!r}")
    prev_t: Optional[float] = None
    prev_c: Optional[float] = None
    for sample in traj.samples:
        c = sample.state.domains[domain_index].c
        if c < c_bar:
            if prev_t is None:
                return sample.t  # already below at the first sample
            frac = (prev_c - c_bar) / (prev_c - c)
            return prev_t + (sample.t - prev_t) * frac
        prev_t, prev_c = sample.t, c
    return None


def fill_crossings(traj: Trajectory, c_bar: float) -> Trajectory:
    """Record per-domain crossing years on the trajectory."""
    traj.crossing_year = tuple(
        time_to_threshold(traj, c_bar, i) for i in range(N_DOMAINS)
    )
    return traj


def _linspace(lo: float, hi: float, n: int) -> tuple[float, ...]:
    if n < 1:
        raise ConfigurationError(f"grid steps must be >= 1, got {n}")
    if n == 1:
        return (lo,)
    return tuple(lo + (hi - lo) * i / (n - 1) for i in range(n))


def sweep(
    scenario,
    delta_range: tuple[float, float],
    alpha_range: tuple[float, float],
    steps: int | tuple[int, int] = 7,
    domain_index: int = 0,
) -> SweepResult:
    """Crossing year over a (delta, alpha) grid of otherwise-identical runs.

    ``scenario`` is a ScenarioConfig; each cell reruns it with that
    cell's erosion rates. Output is row-major by (delta index, alpha
    index) regardless of evaluation order.
    """
    n_delta, n_alpha = (steps, steps) if isinstance(steps, int) else steps
    deltas = _linspace(delta_range[0], delta_range[1], n_delta)
    alphas = _linspace(alpha_range[0], alpha_range[1], n_alpha)
    c_bar = scenario.c_bar_ref
    if c_bar is None:
        raise ConfigurationError(f"scenario {scenario.id!r} has no c_bar_ref")
    grid = []
    for d in deltas:
        row = []
        for a in alphas:
            params = replace(scenario.params, delta=d, alpha=a).validate()
            traj = simulate(
                scenario.initial, params, scenario.interventions, scenario.horizon_years
            )
            row.append(time_to_threshold(traj, c_bar, domain_index))
        grid.append(tuple(row))
    return SweepResult(
        delta_values=deltas,
        alpha_values=alphas,
        crossing_years=tuple(grid),
        scenario=scenario.id,
        c_bar_ref=c_bar,
        horizon_years=scenario.horizon_years,
    )


def default_mc_intervals(
    params: ModelParams, half_width: float = 0.02
) -> dict[str, tuple[float, float]]:
    """Uncertainty intervals centred on a scenario's erosion rates.

    Plus/minus 0.02 per year around (delta, alpha), clipped to stay
    inside the admissible (0, 1) ranges.
    """
    lo_d = max(params.delta - half_width, 1e-4)
    hi_d = min(params.delta + half_width, 0.999)
    lo_a = max(params.alpha - half_width, 1e-4)
    hi_a = min(params.alpha + half_width, 0.999)
    return {"delta": (lo_d, hi_d), "alpha": (lo_a, hi_a)}


def monte_carlo_band(
    scenario,
    intervals: Optional[dict[str, tuple[float, float]]] = None,
    n: int = 200,
    seed: int = 0,
    horizon_years: Optional[float] = None,
    domain_index: int = 0,
) -> BandResult:
    """Crossing-year statistics over uniform parameter draws.

    Draws each listed parameter independently and uniformly from its
    interval using numpy's seeded PCG64 generator, so a seed fully
    determines the sample sequence. Draws that fail parameter validation
    are rejected and redrawn (counted). Statistics cover the draws that
    crossed; mean and spread are None when none did.
    """
    if n < 2:
        raise ConfigurationError(f"n must be >= 2, got {n}")
    if intervals is None:
        intervals = default_mc_intervals(scenario.params)
    for name, (lo, hi) in intervals.items():
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise ConfigurationError(f"interval for {name!r} is invalid: ({lo}, {hi})")
    c_bar = scenario.c_bar_ref
    if c_bar is None:
        raise ConfigurationError(f"scenario {scenario.id!r} has no c_bar_ref")
    horizon = scenario.horizon_years if horizon_years is None else horizon_years

    rng = np.random.default_rng(seed)
    names = list(intervals.keys())
    crossings: list[float] = []
    rejections = 0
    for _ in range(n):
        while True:
            draw = {
                name: float(rng.uniform(intervals[name][0], intervals[name][1]))
                for name in names
            }
            try:
                params = replace(scenario.params, **draw).validate()
                break
            except ConfigurationError:
                rejections += 1
        traj = simulate(scenario.initial, params, scenario.interventions, horizon)
        year = time_to_threshold(traj, c_bar, domain_index)
        if year is not None:
            crossings.append(year)

    if crossings:
        arr = np.asarray(crossings)
        mean = float(arr.mean())
        sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        mn, mx = float(arr.min()), float(arr.max())
    else:
        mean = sd = mn = mx = None
    return BandResult(
        scenario=scenario.id,
        n=n,
        seed=seed,
        mean=mean,
        sd=sd,
        min=mn,
        max=mx,
        crossed=len(crossings),
        rejections=rejections,
        horizon_years=horizon,
        intervals=tuple((k, float(v[0]), float(v[1])) for k, v in intervals.items()),
    )

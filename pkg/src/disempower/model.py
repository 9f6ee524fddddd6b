"""Coupled dynamics of institutional decision capacity.

State per domain: capacity ``c``, salience pressure ``s``, delegation
share ``d``, a binary disuse indicator ``u``, and an encoded value
position ``v_e``. Three domains (economic, political, cultural) share a
clock ``t`` (years) and a drifting human value position ``v_h``.

One step of the system, in this fixed order:

1. ``v_h`` advances by ``rho_v * dt``.
2. Each domain's delegation is computed from its start-of-step
   ``(s, c)`` and capped at ``d_cap``.
3. The disuse indicator ``u`` is derived from the capped delegation.
4. Spillover pressure on a domain is the coupling-weighted sum of the
   *other* domains' step-2 delegation values.
5. Capacity advances (erosion from delegation, spillover and disuse;
   logistic recovery plus any protected additive recovery).
6. The encoded value position relaxes toward the already-advanced
   ``v_h`` at a capacity-gated rate.
7. Salience resets to the schedule value at the advanced clock,
   amplified by the optional lock-in feedback term.

Apart from the spillover (step 4) and the advanced ``v_h`` (step 1),
every update reads start-of-step values, so the step is synchronous.
All functions are pure; states and parameter sets are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

from .errors import ConfigurationError, OutOfRangeError

__all__ = [
    "DOMAIN_NAMES",
    "SIGMA_W_LOCKED_68",
    "SalienceSchedule",
    "ModelParams",
    "DomainState",
    "SystemState",
    "TrajectorySample",
    "Trajectory",
    "delegation_fraction",
    "usage_indicator",
    "capacity_step",
    "salience_step",
    "value_step",
    "welfare_divergence",
    "system_step",
    "simulate",
    "single_domain_step",
]

DOMAIN_NAMES = ("economic", "political", "cultural")
N_DOMAINS = 3

# Divergence scale such that a fully locked system (mu = 0, rho_v = 1)
# shows 68% welfare divergence 24 years in: solve 1 - exp(-24/s) = 0.68.
SIGMA_W_LOCKED_68 = 24.0 / math.log(1.0 / 0.32)

_YEAR_EPS = 1e-9


def _require_finite(name: str, x: float) -> float:
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return x


def _require_nonneg(name: str, x: float) -> float:
    _require_finite(name, x)
    if x < 0:
        raise ValueError(f"{name} must be >= 0, got {x!r}")
    return x


@dataclass(frozen=True)
class SalienceSchedule:
    """Baseline salience level per domain as a function of the year.

    Either a constant level per domain, or a year-indexed table of
    per-domain levels starting at ``start_year``. Table lookups floor
    the query time to a year; with ``hold_last`` the final row extends
    indefinitely, otherwise querying past the table is a configuration
    error.
    """

    levels: tuple[float, float, float] = (1.0, 1.0, 1.0)
    rows: tuple[tuple[float, float, float], ...] = ()
    start_year: int = 0
    hold_last: bool = True

    @staticmethod
    def constant(level: float | Sequence[float]) -> "SalienceSchedule":
        if isinstance(level, (int, float)):
            lv = (float(level),) * 3
        else:
            lv = tuple(float(x) for x in level)
            if len(lv) != 3:
                raise ConfigurationError(
                    f"salience_schedule: expected 3 per-domain levels, got {len(lv)}"
                )
        return SalienceSchedule(levels=lv)  # type: ignore[arg-type]

    @staticmethod
    def table(
        rows: Sequence[Sequence[float]],
        start_year: int = 0,
        hold_last: bool = True,
    ) -> "SalienceSchedule":
        if not rows:
            raise ConfigurationError("salience_schedule: table must have at least one row")
        packed = []
        for row in rows:
            row = tuple(float(x) for x in row)
            if len(row) != 3:
                raise ConfigurationError(
                    f"salience_schedule: each table row needs 3 entries, got {len(row)}"
                )
            packed.append(row)
        return SalienceSchedule(
            rows=tuple(packed), start_year=int(start_year), hold_last=hold_last
        )

    @property
    def is_table(self) -> bool:
        return bool(self.rows)

    def validate(self) -> None:
        entries = self.rows if self.rows else (self.levels,)
        for row in entries:
            for x in row:
                if not math.isfinite(x) or x < 0:
                    raise OutOfRangeError(
                        "salience_schedule", f"levels must be finite and >= 0, got {x!r}"
                    )

    def level(self, t: float, domain: int) -> float:
        if not 0 <= domain < N_DOMAINS:
            raise ValueError(f"domain index must be in 0..2, got {domain}")
        if not self.rows:
            return self.levels[domain]
        idx = math.floor(t + _YEAR_EPS) - self.start_year
        if idx < 0:
            raise ConfigurationError(
                f"salience_schedule: undefined at t={t} (table starts at {self.start_year})"
            )
        if idx >= len(self.rows):
            if not self.hold_last:
                raise ConfigurationError(
                    f"salience_schedule: undefined at t={t} (table ends at "
                    f"{self.start_year + len(self.rows) - 1})"
                )
            idx = len(self.rows) - 1
        return self.rows[idx][domain]


def _zero_coupling() -> tuple[tuple[float, ...], ...]:
    return ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))


@dataclass(frozen=True)
class ModelParams:
    """All rate constants, the coupling matrix, and the salience schedule.

    ``delta`` and ``alpha`` are the per-year erosion and disuse-atrophy
    rates. ``coupling[i][j]`` weights how strongly domain j's delegation
    erodes domain i's capacity; the diagonal must be zero. Defaults give
    the bare erosion model: no recovery, no coupling, locked values.
    """

    delta: float = 0.08
    alpha: float = 0.09
    gamma: float = 1.0
    theta_use: float = 0.5
    kappa_L: float = 0.0
    rho_r: float = 0.0
    a_dec: float = 0.0
    c_max: float = 1.0
    coupling: tuple[tuple[float, ...], ...] = field(default_factory=_zero_coupling)
    rho_v: float = 1.0
    mu: float = 0.0
    m_forum: float = 1.0
    sigma_w: float = SIGMA_W_LOCKED_68
    d_cap: float = 1.0
    salience_schedule: SalienceSchedule = field(default_factory=SalienceSchedule)
    dt: float = 0.25

    def validate(self) -> "ModelParams":
        """Check every declared range; raises OutOfRangeError naming the field."""
        if not 0.0 < self.delta < 1.0:
            raise OutOfRangeError("delta", f"must be in (0,1), got {self.delta!r}")
        if not 0.0 < self.alpha < 1.0:
            raise OutOfRangeError("alpha", f"must be in (0,1), got {self.alpha!r}")
        if not self.delta + self.alpha < 1.0:
            raise OutOfRangeError(
                "delta", f"delta + alpha must be < 1, got {self.delta + self.alpha!r}"
            )
        if not self.gamma > 0 or not math.isfinite(self.gamma):
            raise OutOfRangeError("gamma", f"must be > 0, got {self.gamma!r}")
        if not 0.0 <= self.theta_use <= 1.0:
            raise OutOfRangeError("theta_use", f"must be in [0,1], got {self.theta_use!r}")
        if self.kappa_L < 0 or not math.isfinite(self.kappa_L):
            raise OutOfRangeError("kappa_L", f"must be >= 0, got {self.kappa_L!r}")
        if self.rho_r < 0 or not math.isfinite(self.rho_r):
            raise OutOfRangeError("rho_r", f"must be >= 0, got {self.rho_r!r}")
        if self.a_dec < 0 or not math.isfinite(self.a_dec):
            raise OutOfRangeError("a_dec", f"must be >= 0, got {self.a_dec!r}")
        if not self.c_max > 0 or not math.isfinite(self.c_max):
            raise OutOfRangeError("c_max", f"must be > 0, got {self.c_max!r}")
        if len(self.coupling) != N_DOMAINS:
            raise OutOfRangeError("coupling", "must be a 3x3 matrix")
        for i, row in enumerate(self.coupling):
            if len(row) != N_DOMAINS:
                raise OutOfRangeError("coupling", "must be a 3x3 matrix")
            for j, w in enumerate(row):
                if not math.isfinite(w) or w < 0:
                    raise OutOfRangeError(
                        "coupling", f"entries must be finite and >= 0, got {w!r} at ({i},{j})"
                    )
                if i == j and w != 0.0:
                    raise OutOfRangeError(
                        "coupling", f"diagonal must be exactly zero, got {w!r} at ({i},{i})"
                    )
        if self.rho_v < 0 or not math.isfinite(self.rho_v):
            raise OutOfRangeError("rho_v", f"must be >= 0, got {self.rho_v!r}")
        if self.mu < 0 or not math.isfinite(self.mu):
            raise OutOfRangeError("mu", f"must be >= 0, got {self.mu!r}")
        if self.m_forum < 1.0 or not math.isfinite(self.m_forum):
            raise OutOfRangeError("m_forum", f"must be >= 1, got {self.m_forum!r}")
        if not self.sigma_w > 0 or not math.isfinite(self.sigma_w):
            raise OutOfRangeError("sigma_w", f"must be > 0, got {self.sigma_w!r}")
        if not 0.0 < self.d_cap <= 1.0:
            raise OutOfRangeError("d_cap", f"must be in (0,1], got {self.d_cap!r}")
        if not 0.0 < self.dt <= 1.0:
            raise OutOfRangeError("dt", f"must be in (0,1], got {self.dt!r}")
        steps = 1.0 / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise OutOfRangeError(
                "dt", f"must divide the 1-year reporting interval exactly, got {self.dt!r}"
            )
        self.salience_schedule.validate()
        return self

    def with_overrides(self, **kwargs) -> "ModelParams":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class DomainState:
    """Per-domain state: capacity, salience, delegation, disuse flag, encoded values."""

    c: float
    s: float
    d: float = 0.0
    u: int = 0
    v_e: float = 0.0


@dataclass(frozen=True)
class SystemState:
    """Full simulation state: clock, three ordered domains, human value position."""

    t: float
    domains: tuple[DomainState, DomainState, DomainState]
    v_h: float = 0.0

    def validate(self) -> "SystemState":
        if len(self.domains) != N_DOMAINS:
            raise ConfigurationError(
                f"state must have exactly {N_DOMAINS} domains, got {len(self.domains)}"
            )
        if self.t < 0:
            raise ConfigurationError(f"t must be >= 0, got {self.t!r}")
        for name, dom in zip(DOMAIN_NAMES, self.domains):
            if dom.c < 0 or not math.isfinite(dom.c):
                raise ConfigurationError(f"{name}: c must be finite and >= 0, got {dom.c!r}")
            if dom.s < 0 or not math.isfinite(dom.s):
                raise ConfigurationError(f"{name}: s must be finite and >= 0, got {dom.s!r}")
            if not 0.0 <= dom.d <= 1.0:
                raise ConfigurationError(f"{name}: d must be in [0,1], got {dom.d!r}")
            if dom.u not in (0, 1):
                raise ConfigurationError(f"{name}: u must be 0 or 1, got {dom.u!r}")
            if not math.isfinite(dom.v_e):
                raise ConfigurationError(f"{name}: v_e must be finite, got {dom.v_e!r}")
        return self


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    state: SystemState
    divergence: tuple[float, float, float]


@dataclass
class Trajectory:
    """Time-ordered samples plus the parameter snapshot that produced them.

    ``crossing_year`` stays None until an analysis pass fills in the
    first (interpolated) time each domain's capacity dropped below the
    reference threshold.
    """

    samples: tuple[TrajectorySample, ...]
    params_used: ModelParams
    crossing_year: Optional[tuple[Optional[float], ...]] = None

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(s.t for s in self.samples)

    def capacity(self, domain: int) -> tuple[float, ...]:
        return tuple(s.state.domains[domain].c for s in self.samples)


# ---------------------------------------------------------------------------
# Elementary operations


def delegation_fraction(s: float, c: float, gamma: float) -> float:
    """Delegated decision share given salience pressure s and capacity c.

    Saturating form s / (s + gamma*c): rises with salience, falls with
    capacity, 1 in the vanished-capacity limit. The no-pressure,
    no-capacity corner (s = c = 0) is defined as 0.
    """
    _require_nonneg("s", s)
    _require_nonneg("c", c)
    _require_finite("gamma", gamma)
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma!r}")
    denom = s + gamma * c
    if denom <= 0.0:
        return 0.0
    return s / denom


def usage_indicator(d: float, theta_use: float) -> int:
    """1 when delegation has displaced enough decisions to idle the capacity."""
    if not 0.0 <= d <= 1.0:
        raise ValueError(f"d must be in [0,1], got {d!r}")
    if not 0.0 <= theta_use <= 1.0:
        raise ValueError(f"theta_use must be in [0,1], got {theta_use!r}")
    return 1 if d >= theta_use else 0


def capacity_step(
    c: float, d: float, u: int, spill: float, params: ModelParams, dt: float
) -> float:
    """Advance capacity one step of length dt.

    Multiplicative erosion from own and spillover delegation plus disuse
    atrophy, then logistic recovery and any protected additive recovery.
    Clamped at zero, which is absorbing when a_dec = 0. With dt = 1 and
    spill = rho_r = a_dec = 0 this reduces exactly (same float algebra)
    to c * (1 - delta*d - alpha*u).
    """
    if dt <= 0:
        raise ConfigurationError(f"dt must be > 0, got {dt!r}")
    _require_nonneg("c", c)
    _require_nonneg("spill", spill)
    raw = c * (1.0 - dt * params.delta * (d + spill) - dt * params.alpha * u) + dt * (
        params.rho_r * c * (1.0 - c / params.c_max) + params.a_dec
    )
    return max(0.0, raw)


def salience_step(
    s: float,
    lock_in_gap: float,
    params: ModelParams,
    t: float,
    dt: float,
    domain: int = 0,
) -> float:
    """Salience at time t: the exogenous schedule, optionally amplified by lock-in.

    With kappa_L = 0 the path equals the schedule exactly. The previous
    level ``s`` does not persist; salience is a forcing, not a stock.
    """
    _require_nonneg("lock_in_gap", lock_in_gap)
    base = params.salience_schedule.level(t, domain)
    return base * (1.0 + params.kappa_L * lock_in_gap * dt)


def value_step(v_e: float, v_h: float, c: float, params: ModelParams, dt: float) -> float:
    """Encoded values relax toward current human values at a capacity-gated rate.

    mu = 0 is full lock-in: v_e never moves.
    """
    _require_finite("v_e", v_e)
    _require_finite("v_h", v_h)
    _require_nonneg("c", c)
    return v_e + dt * params.m_forum * params.mu * c * (v_h - v_e)


def welfare_divergence(v_e: float, v_h: float, sigma_w: float) -> float:
    """Saturating [0,1) measure of the encoded-vs-human value gap."""
    if not sigma_w > 0:
        raise ConfigurationError(f"sigma_w must be > 0, got {sigma_w!r}")
    _require_finite("v_e", v_e)
    _require_finite("v_h", v_h)
    return 1.0 - math.exp(-abs(v_h - v_e) / sigma_w)


# ---------------------------------------------------------------------------
# System stepping


def _capped_delegation(s: float, c: float, params: ModelParams) -> float:
    return min(delegation_fraction(s, c, params.gamma), params.d_cap)


def _advance_domain(
    dom: DomainState,
    d: float,
    u: int,
    spill: float,
    v_h_new: float,
    params: ModelParams,
    t_next: float,
    dt: float,
    domain: int,
) -> DomainState:
    c_next = capacity_step(dom.c, d, u, spill, params, dt)
    v_e_next = value_step(dom.v_e, v_h_new, dom.c, params, dt)
    gap = abs(v_h_new - dom.v_e)
    s_next = salience_step(dom.s, gap, params, t_next, dt, domain)
    d_next = _capped_delegation(s_next, c_next, params)
    u_next = usage_indicator(d_next, params.theta_use)
    return DomainState(c=c_next, s=s_next, d=d_next, u=u_next, v_e=v_e_next)


def system_step(state: SystemState, params: ModelParams) -> SystemState:
    """Advance the full three-domain system by one dt (see module docstring)."""
    if len(state.domains) != N_DOMAINS:
        raise ConfigurationError(
            f"state must have exactly {N_DOMAINS} domains, got {len(state.domains)}"
        )
    dt = params.dt
    t_next = state.t + dt
    v_h_new = state.v_h + params.rho_v * dt

    ds = [_capped_delegation(dom.s, dom.c, params) for dom in state.domains]
    us = [usage_indicator(d, params.theta_use) for d in ds]
    spills = [
        sum(params.coupling[i][j] * ds[j] for j in range(N_DOMAINS) if j != i)
        for i in range(N_DOMAINS)
    ]
    domains = tuple(
        _advance_domain(dom, ds[i], us[i], spills[i], v_h_new, params, t_next, dt, i)
        for i, dom in enumerate(state.domains)
    )
    return SystemState(t=t_next, domains=domains, v_h=v_h_new)


def single_domain_step(
    c: float,
    s: float,
    v_e: float,
    v_h: float,
    params: ModelParams,
    t: float,
    domain: int = 0,
) -> tuple[float, float, float, float, float, int]:
    """One step of a lone domain (no spillover): (c', s', v_e', v_h', d, u).

    Uses the identical arithmetic as system_step with zero coupling, so a
    three-domain run with W = 0 matches three of these runs bit for bit.
    """
    dt = params.dt
    v_h_new = v_h + params.rho_v * dt
    d = _capped_delegation(s, c, params)
    u = usage_indicator(d, params.theta_use)
    c_next = capacity_step(c, d, u, 0.0, params, dt)
    v_e_next = value_step(v_e, v_h_new, c, params, dt)
    gap = abs(v_h_new - v_e)
    s_next = salience_step(s, gap, params, t + dt, dt, domain)
    return c_next, s_next, v_e_next, v_h_new, d, u


def _divergences(state: SystemState, params: ModelParams) -> tuple[float, float, float]:
    return tuple(
        welfare_divergence(dom.v_e, state.v_h, params.sigma_w) for dom in state.domains
    )  # type: ignore[return-value]


def _step_count(horizon_years: float, dt: float) -> int:
    if not horizon_years > 0:
        raise ConfigurationError(f"horizon_years must be > 0, got {horizon_years!r}")
    n = horizon_years / dt
    if abs(n - round(n)) > 1e-9 * max(1.0, abs(n)):
        raise ConfigurationError(
            f"horizon_years={horizon_years!r} is not divisible by dt={dt!r}"
        )
    return int(round(n))


def simulate(
    initial: SystemState,
    params: ModelParams,
    interventions=None,
    horizon_years: float = 60.0,
) -> Trajectory:
    """Integrate the system over the horizon; deterministic for identical inputs.

    Interventions (an InterventionSet or None) are compiled into
    effective parameters at each step's start time before stepping; an
    empty set leaves the trajectory bit-identical to a raw-params run.
    Returns horizon/dt + 1 samples, the first being ``initial`` itself.
    """
    params.validate()
    initial.validate()
    n_steps = _step_count(horizon_years, params.dt)

    if interventions is None:
        from .interventions import InterventionSet

        interventions = InterventionSet()
    interventions.validate()

    eff_cache: dict[object, ModelParams] = {}

    def effective_at(t: float) -> ModelParams:
        key = interventions.active_key(t)
        eff = eff_cache.get(key)
        if eff is None:
            eff = interventions.effective_params(params, t)
            eff.validate()
            eff_cache[key] = eff
        return eff

    state = initial
    samples = [TrajectorySample(state.t, state, _divergences(state, params))]
    t0 = initial.t
    for i in range(n_steps):
        eff = effective_at(t0 + i * params.dt)
        state = system_step(state, eff)
        samples.append(TrajectorySample(state.t, state, _divergences(state, eff)))
    return Trajectory(samples=tuple(samples), params_used=params)

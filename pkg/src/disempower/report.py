"""Serialization: scenario configs, trajectory CSV, summary JSON, SVG charts.

Formats are frozen so outputs can be golden-file tested:

* scenario config: strict JSON, top-level keys ``id, description,
  params, interventions, initial, horizon_years, c_bar_ref``; ``params``
  keys mirror the ModelParams field names exactly; unknown or duplicate
  keys are rejected with the offending key named.
* trajectory CSV: header ``t,domain,c,s,d,u,v_e,v_h,divergence``, one
  row per (sample, domain), 9 significant digits, byte-deterministic.
* summary JSON: compact, schema-versioned (``schema: 1``), stable key
  order, "none within horizon" encoded as a null plus a reason string.
* charts: standalone deterministic SVG, 960x540 viewBox, no plotting
  library.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from .analysis import BandResult, SweepResult, ThresholdReport
from .errors import (
    ConfigurationError,
    OutOfRangeError,
    ScenarioFormatError,
    UnknownKeyError,
)
from .interventions import (
    DecoupledStreams,
    Firewalls,
    InterventionSet,
    IrreducibleDeliberation,
    NestedForums,
    StdMitigation,
)
from .model import (
    DOMAIN_NAMES,
    DomainState,
    ModelParams,
    SalienceSchedule,
    SystemState,
    Trajectory,
    usage_indicator,
)
from .model import delegation_fraction

__all__ = [
    "ScenarioConfig",
    "parse_scenario",
    "write_scenario",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_sweep_csv",
    "write_summary_json",
    "parse_summary_json",
    "report_dict",
    "scenario_run_report",
    "compare_report",
    "ChartSeries",
    "ChartSpec",
    "render_svg_chart",
    "capacity_chart",
    "divergence_chart",
]

SUMMARY_SCHEMA = 1
NO_CROSSING_REASON = "none within horizon"


# ---------------------------------------------------------------------------
# Scenario configs


@dataclass(frozen=True)
class ScenarioConfig:
    """A complete, runnable experiment: parameters, policy set, start state."""

    id: str
    params: ModelParams
    interventions: InterventionSet = field(default_factory=InterventionSet)
    initial: Optional[SystemState] = None
    horizon_years: float = 60.0
    c_bar_ref: Optional[float] = None
    description: str = ""

    def resolved_initial(self) -> SystemState:
        if self.initial is not None:
            return self.initial
        return default_initial_state(self.params)


def default_initial_state(params: ModelParams) -> SystemState:
    """Unit capacity everywhere, schedule-level salience, aligned values."""
    domains = []
    for i in range(3):
        s = params.salience_schedule.level(0.0, i)
        d = min(delegation_fraction(s, 1.0, params.gamma), params.d_cap)
        domains.append(DomainState(c=1.0, s=s, d=d, u=usage_indicator(d, params.theta_use)))
    return SystemState(t=0.0, domains=tuple(domains), v_h=0.0)


def _reject_duplicates(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise ConfigurationError(f"duplicate key {key!r}")
        seen[key] = value
    return seen


def _num(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigurationError(f"{where}: expected a finite number, got {value!r}")
    return value


def _obj(value: Any, where: str, allowed: Sequence[str]) -> dict:
    if not isinstance(value, dict):
        raise ConfigurationError(f"{where}: expected an object, got {type(value).__name__}")
    for key in value:
        if key not in allowed:
            raise UnknownKeyError(key, where)
    return value


_PARAM_KEYS = (
    "delta",
    "alpha",
    "gamma",
    "theta_use",
    "kappa_L",
    "rho_r",
    "a_dec",
    "c_max",
    "coupling",
    "rho_v",
    "mu",
    "m_forum",
    "sigma_w",
    "d_cap",
    "salience_schedule",
    "dt",
)


def _parse_schedule(value: Any, where: str) -> SalienceSchedule:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return SalienceSchedule.constant(_num(value, where))
    if isinstance(value, list):
        if len(value) != 3:
            raise ConfigurationError(f"{where}: per-domain form needs 3 levels")
        return SalienceSchedule.constant([_num(v, where) for v in value])
    spec = _obj(value, where, ("start_year", "values", "hold_last"))
    if "values" not in spec:
        raise ConfigurationError(f"{where}: table form requires 'values'")
    rows = spec["values"]
    if not isinstance(rows, list) or not rows:
        raise ConfigurationError(f"{where}: 'values' must be a non-empty list")
    parsed_rows = []
    for k, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != 3:
            raise ConfigurationError(f"{where}: row {k} must list 3 per-domain levels")
        parsed_rows.append([_num(v, f"{where}[{k}]") for v in row])
    start = spec.get("start_year", 0)
    if isinstance(start, bool) or not isinstance(start, int):
        raise ConfigurationError(f"{where}: start_year must be an integer")
    hold = spec.get("hold_last", True)
    if not isinstance(hold, bool):
        raise ConfigurationError(f"{where}: hold_last must be a boolean")
    return SalienceSchedule.table(parsed_rows, start_year=start, hold_last=hold)


def _parse_params(value: Any) -> ModelParams:
    spec = _obj(value, "params", _PARAM_KEYS)
    kwargs: dict[str, Any] = {}
    for key in _PARAM_KEYS:
        if key not in spec:
            continue
        if key == "coupling":
            matrix = spec[key]
            if not isinstance(matrix, list) or len(matrix) != 3:
                raise ConfigurationError("params.coupling: expected a 3x3 matrix")
            rows = []
            for i, row in enumerate(matrix):
                if not isinstance(row, list) or len(row) != 3:
                    raise ConfigurationError("params.coupling: expected a 3x3 matrix")
                rows.append(tuple(_num(w, f"params.coupling[{i}]") for w in row))
            kwargs[key] = tuple(rows)
        elif key == "salience_schedule":
            kwargs[key] = _parse_schedule(spec[key], "params.salience_schedule")
        else:
            kwargs[key] = _num(spec[key], f"params.{key}")
    params = ModelParams(**kwargs)
    params.validate()
    return params


_MECHANISM_KEYS = {
    "std_mitigation": ("active_from", "delta_factor"),
    "decoupled_streams": ("active_from", "a_dec"),
    "irreducible_deliberation": ("active_from", "d_cap", "alpha_factor"),
    "nested_forums": ("active_from", "m_forum"),
    "firewalls": ("active_from",),
}


def _parse_interventions(value: Any) -> InterventionSet:
    spec = _obj(value, "interventions", tuple(_MECHANISM_KEYS))
    kwargs: dict[str, Any] = {}
    for name, fields in _MECHANISM_KEYS.items():
        if name not in spec:
            continue
        entry = _obj(spec[name], f"interventions.{name}", fields)
        if "active_from" not in entry:
            raise ConfigurationError(f"interventions.{name}: requires 'active_from'")
        vals = {k: _num(v, f"interventions.{name}.{k}") for k, v in entry.items()}
        if name == "std_mitigation":
            kwargs[name] = StdMitigation(**vals)
        elif name == "decoupled_streams":
            if "a_dec" not in vals:
                raise ConfigurationError("interventions.decoupled_streams: requires 'a_dec'")
            kwargs[name] = DecoupledStreams(**vals)
        elif name == "irreducible_deliberation":
            if "d_cap" not in vals:
                raise ConfigurationError(
                    "interventions.irreducible_deliberation: requires 'd_cap'"
                )
            kwargs[name] = IrreducibleDeliberation(**vals)
        elif name == "nested_forums":
            if "m_forum" not in vals:
                raise ConfigurationError("interventions.nested_forums: requires 'm_forum'")
            kwargs[name] = NestedForums(**vals)
        else:
            kwargs[name] = Firewalls(**vals)
    iset = InterventionSet(**kwargs)
    iset.validate()
    return iset


def _parse_initial(value: Any, params: ModelParams) -> SystemState:
    spec = _obj(value, "initial", ("t", "v_h", "domains"))
    t = _num(spec.get("t", 0.0), "initial.t")
    v_h = _num(spec.get("v_h", 0.0), "initial.v_h")
    domains_spec = spec.get("domains")
    domains = []
    if domains_spec is None:
        domains_spec = [{}, {}, {}]
    if not isinstance(domains_spec, list) or len(domains_spec) != 3:
        raise ConfigurationError("initial.domains: expected exactly 3 entries")
    for i, dom in enumerate(domains_spec):
        entry = _obj(dom, f"initial.domains[{i}]", ("c", "s", "d", "u", "v_e"))
        c = _num(entry.get("c", 1.0), f"initial.domains[{i}].c")
        s = entry.get("s")
        s = params.salience_schedule.level(t, i) if s is None else _num(s, f"initial.domains[{i}].s")
        v_e = _num(entry.get("v_e", 0.0), f"initial.domains[{i}].v_e")
        if "d" in entry:
            d = _num(entry["d"], f"initial.domains[{i}].d")
        else:
            d = min(delegation_fraction(s, c, params.gamma), params.d_cap)
        if "u" in entry:
            u_raw = entry["u"]
            if u_raw not in (0, 1) or isinstance(u_raw, bool):
                raise ConfigurationError(f"initial.domains[{i}].u: must be 0 or 1")
            u = int(u_raw)
        else:
            u = usage_indicator(d, params.theta_use)
        domains.append(DomainState(c=c, s=s, d=d, u=u, v_e=v_e))
    state = SystemState(t=t, domains=tuple(domains), v_h=v_h)
    state.validate()
    return state


_TOP_KEYS = ("id", "description", "params", "interventions", "initial", "horizon_years", "c_bar_ref")


def parse_scenario(text: str) -> ScenarioConfig:
    """Strictly parse a scenario config document.

    Errors are distinct and named: syntax errors carry line/column,
    unknown keys name the key, out-of-range values name the field.
    """
    try:
        raw = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(exc.msg, exc.lineno, exc.colno) from None
    top = _obj(raw, "scenario", _TOP_KEYS)
    if "id" not in top or not isinstance(top["id"], str) or not top["id"]:
        raise ConfigurationError("scenario: requires a non-empty string 'id'")
    description = top.get("description", "")
    if not isinstance(description, str):
        raise ConfigurationError("description: expected a string")
    params = _parse_params(top.get("params", {}))
    interventions = _parse_interventions(top.get("interventions", {}))
    initial = _parse_initial(top.get("initial", {}), params)
    horizon = _num(top.get("horizon_years", 60.0), "horizon_years")
    if horizon <= 0:
        raise OutOfRangeError("horizon_years", f"must be > 0, got {horizon!r}")
    c_bar_ref = top.get("c_bar_ref")
    if c_bar_ref is not None:
        c_bar_ref = _num(c_bar_ref, "c_bar_ref")
        if c_bar_ref <= 0:
            raise OutOfRangeError("c_bar_ref", f"must be > 0, got {c_bar_ref!r}")
    return ScenarioConfig(
        id=top["id"],
        description=description,
        params=params,
        interventions=interventions,
        initial=initial,
        horizon_years=horizon,
        c_bar_ref=c_bar_ref,
    )


def _schedule_to_json(schedule: SalienceSchedule) -> Any:
    if not schedule.is_table:
        a, b, c = schedule.levels
        if a == b == c:
            return a
        return [a, b, c]
    return {
        "start_year": schedule.start_year,
        "values": [list(row) for row in schedule.rows],
        "hold_last": schedule.hold_last,
    }


def _params_to_json(params: ModelParams) -> dict:
    return {
        "delta": params.delta,
        "alpha": params.alpha,
        "gamma": params.gamma,
        "theta_use": params.theta_use,
        "kappa_L": params.kappa_L,
        "rho_r": params.rho_r,
        "a_dec": params.a_dec,
        "c_max": params.c_max,
        "coupling": [list(row) for row in params.coupling],
        "rho_v": params.rho_v,
        "mu": params.mu,
        "m_forum": params.m_forum,
        "sigma_w": params.sigma_w,
        "d_cap": params.d_cap,
        "salience_schedule": _schedule_to_json(params.salience_schedule),
        "dt": params.dt,
    }


def _interventions_to_json(iset: InterventionSet) -> dict:
    out: dict[str, Any] = {}
    if iset.std_mitigation is not None:
        m = iset.std_mitigation
        out["std_mitigation"] = {"active_from": m.active_from, "delta_factor": m.delta_factor}
    if iset.decoupled_streams is not None:
        m = iset.decoupled_streams
        out["decoupled_streams"] = {"active_from": m.active_from, "a_dec": m.a_dec}
    if iset.irreducible_deliberation is not None:
        m = iset.irreducible_deliberation
        out["irreducible_deliberation"] = {
            "active_from": m.active_from,
            "d_cap": m.d_cap,
            "alpha_factor": m.alpha_factor,
        }
    if iset.nested_forums is not None:
        m = iset.nested_forums
        out["nested_forums"] = {"active_from": m.active_from, "m_forum": m.m_forum}
    if iset.firewalls is not None:
        out["firewalls"] = {"active_from": iset.firewalls.active_from}
    return out


def write_scenario(config: ScenarioConfig) -> str:
    """Canonical scenario JSON; parse(write(x)) == x."""
    initial = config.resolved_initial()
    doc = {
        "id": config.id,
        "description": config.description,
        "params": _params_to_json(config.params),
        "interventions": _interventions_to_json(config.interventions),
        "initial": {
            "t": initial.t,
            "v_h": initial.v_h,
            "domains": [
                {"c": d.c, "s": d.s, "d": d.d, "u": d.u, "v_e": d.v_e}
                for d in initial.domains
            ],
        },
        "horizon_years": config.horizon_years,
        "c_bar_ref": config.c_bar_ref,
    }
    return json.dumps(doc, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Trajectory CSV

TRAJECTORY_HEADER = "t,domain,c,s,d,u,v_e,v_h,divergence"


def _g9(x: float) -> str:
    return format(x, ".9g")


def write_trajectory_csv(traj: Trajectory) -> str:
    """One row per (sample, domain), ordered by t then domain index."""
    if not traj.samples:
        raise ConfigurationError("trajectory is empty")
    out = io.StringIO()
    out.write(TRAJECTORY_HEADER + "\n")
    for sample in traj.samples:
        state = sample.state
        for i, name in enumerate(DOMAIN_NAMES):
            dom = state.domains[i]
            out.write(
                ",".join(
                    (
                        _g9(sample.t),
                        name,
                        _g9(dom.c),
                        _g9(dom.s),
                        _g9(dom.d),
                        str(dom.u),
                        _g9(dom.v_e),
                        _g9(state.v_h),
                        _g9(sample.divergence[i]),
                    )
                )
                + "\n"
            )
    return out.getvalue()


def read_trajectory_csv(text: str) -> list[dict]:
    """Rows of the trajectory CSV as dicts (numbers parsed back)."""
    lines = text.strip().split("\n")
    if not lines or lines[0] != TRAJECTORY_HEADER:
        raise ConfigurationError("trajectory CSV: unexpected header")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 9:
            raise ConfigurationError(f"trajectory CSV: malformed row {line!r}")
        rows.append(
            {
                "t": float(parts[0]),
                "domain": parts[1],
                "c": float(parts[2]),
                "s": float(parts[3]),
                "d": float(parts[4]),
                "u": int(parts[5]),
                "v_e": float(parts[6]),
                "v_h": float(parts[7]),
                "divergence": float(parts[8]),
            }
        )
    return rows


def write_sweep_csv(result: SweepResult) -> str:
    """delta,alpha,crossing_year rows, row-major; blank year means no crossing."""
    out = io.StringIO()
    out.write("delta,alpha,crossing_year\n")
    for i, d in enumerate(result.delta_values):
        for j, a in enumerate(result.alpha_values):
            year = result.crossing_years[i][j]
            out.write(f"{_g9(d)},{_g9(a)},{'' if year is None else _g9(year)}\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# Summary JSON


def report_dict(report: Any) -> dict:
    """Normalize a report object into its stable summary-JSON dict."""
    if isinstance(report, dict):
        return report
    if isinstance(report, ThresholdReport):
        out = {
            "type": "threshold",
            "scenario": report.scenario,
            "c_bar": report.c_bar,
            "basin_low": report.basin_low,
            "basin_high": report.basin_high,
            "method": report.method,
            "tolerance": report.tolerance,
            "probe_horizon": report.probe_horizon,
            "eps": report.eps,
            "monostable": report.monostable,
            "fate": report.fate,
        }
        if report.c_bar is None:
            out["reason"] = f"monostable: every probe {report.fate}"
        return out
    if isinstance(report, BandResult):
        out = {
            "type": "band",
            "scenario": report.scenario,
            "n": report.n,
            "seed": report.seed,
            "mean": report.mean,
            "sd": report.sd,
            "min": report.min,
            "max": report.max,
            "crossed": report.crossed,
            "rejections": report.rejections,
            "horizon_years": report.horizon_years,
            "intervals": [list(iv) for iv in report.intervals],
        }
        if report.mean is None:
            out["reason"] = NO_CROSSING_REASON
        return out
    if isinstance(report, SweepResult):
        return {
            "type": "sweep",
            "scenario": report.scenario,
            "delta_values": list(report.delta_values),
            "alpha_values": list(report.alpha_values),
            "crossing_years": [list(row) for row in report.crossing_years],
            "c_bar_ref": report.c_bar_ref,
            "horizon_years": report.horizon_years,
        }
    raise ConfigurationError(f"cannot serialize report of type {type(report).__name__}")


def scenario_run_report(config: ScenarioConfig, traj: Trajectory) -> dict:
    """Per-run summary: crossing years and end-state per domain."""
    last = traj.samples[-1]
    crossing: list[Optional[float]] = list(traj.crossing_year or (None, None, None))
    out: dict[str, Any] = {
        "type": "scenario",
        "scenario": config.id,
        "horizon_years": config.horizon_years,
        "dt": traj.params_used.dt,
        "c_bar_ref": config.c_bar_ref,
        "crossing_year": {name: crossing[i] for i, name in enumerate(DOMAIN_NAMES)},
        "final_capacity": {
            name: last.state.domains[i].c for i, name in enumerate(DOMAIN_NAMES)
        },
        "final_divergence": {
            name: last.divergence[i] for i, name in enumerate(DOMAIN_NAMES)
        },
    }
    if any(c is None for c in crossing):
        out["reason"] = NO_CROSSING_REASON
    return out


def compare_report(scenario_ids: Sequence[str], crossings: Sequence[Optional[float]]) -> dict:
    out: dict[str, Any] = {
        "type": "compare",
        "scenarios": list(scenario_ids),
        "crossing_years": list(crossings),
    }
    if any(c is None for c in crossings):
        out["reason"] = NO_CROSSING_REASON
    return out


def write_summary_json(reports: Sequence[Any]) -> str:
    """Compact schema-versioned summary; byte-deterministic for equal inputs."""
    doc = {"schema": SUMMARY_SCHEMA, "reports": [report_dict(r) for r in reports]}
    return json.dumps(doc, separators=(",", ":"), allow_nan=False)


def parse_summary_json(text: str) -> dict:
    try:
        doc = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict) or doc.get("schema") != SUMMARY_SCHEMA:
        raise ConfigurationError("summary JSON: missing or unsupported schema")
    if "reports" not in doc or not isinstance(doc["reports"], list):
        raise ConfigurationError("summary JSON: missing reports list")
    for key in doc:
        if key not in ("schema", "reports"):
            raise UnknownKeyError(key, "summary")
    return doc


# ---------------------------------------------------------------------------
# SVG charts

_PALETTE = ("#1f6fb4", "#d1495b", "#2e8b57", "#8e5ba6", "#c87f1e", "#4b4b4b")

_VIEW_W = 960
_VIEW_H = 540
_MARGIN_L = 72
_MARGIN_R = 24
_MARGIN_T = 48
_MARGIN_B = 56


@dataclass(frozen=True)
class ChartSeries:
    label: str
    points: tuple[tuple[float, float], ...]
    style: int = 0


@dataclass(frozen=True)
class ChartSpec:
    """A titled line chart: labelled series plus an optional reference line."""

    title: str
    x_label: str
    y_label: str
    series: tuple[ChartSeries, ...]
    x_range: Optional[tuple[float, float]] = None
    y_range: Optional[tuple[float, float]] = None
    ref_line: Optional[float] = None
    ref_label: str = ""


def _nice_step(span: float, target: int = 6) -> float:
    if span <= 0:
        return 1.0
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if mult * mag >= raw:
            return mult * mag
    return 10.0 * mag


def _ticks(lo: float, hi: float) -> list[float]:
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    value = first
    while value <= hi + 1e-9 * max(1.0, abs(hi)):
        ticks.append(0.0 if abs(value) < step * 1e-9 else value)
        value += step
    return ticks


def _fmt_tick(v: float) -> str:
    return format(round(v, 10), "g")


def _expand(lo: float, hi: float) -> tuple[float, float]:
    if lo == hi:
        pad = 1.0 if lo == 0 else abs(lo) * 0.1
        return lo - pad, hi + pad
    return lo, hi


def render_svg_chart(spec: ChartSpec) -> str:
    """Standalone SVG line chart, one polyline per series, deterministic text."""
    if not spec.series:
        raise ConfigurationError("chart needs at least one series")
    for series in spec.series:
        if not series.points:
            raise ConfigurationError(f"series {series.label!r} has no points")

    xs = [p[0] for s in spec.series for p in s.points]
    ys = [p[1] for s in spec.series for p in s.points]
    if spec.ref_line is not None:
        ys.append(spec.ref_line)
    x_lo, x_hi = spec.x_range if spec.x_range else (min(xs), max(xs))
    y_lo, y_hi = spec.y_range if spec.y_range else (min(ys), max(ys))
    # Auto-expand so every series stays inside the axis ranges.
    x_lo, x_hi = _expand(min(x_lo, min(xs)), max(x_hi, max(xs)))
    y_lo, y_hi = _expand(min(y_lo, min(ys)), max(y_hi, max(ys)))

    plot_w = _VIEW_W - _MARGIN_L - _MARGIN_R
    plot_h = _VIEW_H - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    def f(v: float) -> str:
        return format(v, ".2f")

    lines = []
    add = lines.append
    add(
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_VIEW_W} {_VIEW_H}" '
        f'font-family="Helvetica, Arial, sans-serif" font-size="14">'
    )
    add(f'<rect width="{_VIEW_W}" height="{_VIEW_H}" fill="white"/>')
    add(
        f'<text x="{_VIEW_W / 2:.0f}" y="28" text-anchor="middle" font-size="18">'
        f"{_esc(spec.title)}</text>"
    )
    # Axes box
    add(
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333" stroke-width="1"/>'
    )
    for tick in _ticks(x_lo, x_hi):
        x = px(tick)
        add(
            f'<line x1="{f(x)}" y1="{_MARGIN_T + plot_h}" x2="{f(x)}" '
            f'y2="{_MARGIN_T + plot_h + 6}" stroke="#333"/>'
        )
        add(
            f'<text x="{f(x)}" y="{_MARGIN_T + plot_h + 22}" text-anchor="middle">'
            f"{_fmt_tick(tick)}</text>"
        )
        add(
            f'<line x1="{f(x)}" y1="{_MARGIN_T}" x2="{f(x)}" y2="{_MARGIN_T + plot_h}" '
            f'stroke="#ddd" stroke-width="0.5"/>'
        )
    for tick in _ticks(y_lo, y_hi):
        y = py(tick)
        add(f'<line x1="{_MARGIN_L - 6}" y1="{f(y)}" x2="{_MARGIN_L}" y2="{f(y)}" stroke="#333"/>')
        add(
            f'<text x="{_MARGIN_L - 10}" y="{f(y + 5)}" text-anchor="end">'
            f"{_fmt_tick(tick)}</text>"
        )
        add(
            f'<line x1="{_MARGIN_L}" y1="{f(y)}" x2="{_MARGIN_L + plot_w}" y2="{f(y)}" '
            f'stroke="#ddd" stroke-width="0.5"/>'
        )
    add(
        f'<text x="{_MARGIN_L + plot_w / 2:.0f}" y="{_VIEW_H - 14}" text-anchor="middle">'
        f"{_esc(spec.x_label)}</text>"
    )
    add(
        f'<text x="20" y="{_MARGIN_T + plot_h / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {_MARGIN_T + plot_h / 2:.0f})">{_esc(spec.y_label)}</text>'
    )
    if spec.ref_line is not None:
        y = py(spec.ref_line)
        add(
            f'<line x1="{_MARGIN_L}" y1="{f(y)}" x2="{_MARGIN_L + plot_w}" y2="{f(y)}" '
            f'stroke="#888" stroke-width="1.5" stroke-dasharray="8 4"/>'
        )
        if spec.ref_label:
            add(
                f'<text x="{_MARGIN_L + plot_w - 6}" y="{f(y - 6)}" text-anchor="end" '
                f'fill="#555">{_esc(spec.ref_label)}</text>'
            )
    for series in spec.series:
        color = _PALETTE[series.style % len(_PALETTE)]
        coords = " ".join(f"{f(px(x))},{f(py(y))}" for x, y in series.points)
        add(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>'
        )
    # Legend: one entry per series, upper right inside the plot.
    legend_x = _MARGIN_L + plot_w - 210
    legend_y = _MARGIN_T + 12
    for k, series in enumerate(spec.series):
        color = _PALETTE[series.style % len(_PALETTE)]
        y = legend_y + 20 * k
        add(
            f'<line x1="{legend_x}" y1="{y}" x2="{legend_x + 26}" y2="{y}" '
            f'stroke="{color}" stroke-width="3"/>'
        )
        add(f'<text x="{legend_x + 32}" y="{y + 5}">{_esc(series.label)}</text>')
    add("</svg>")
    return "\n".join(lines) + "\n"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def capacity_chart(
    labelled_trajectories: Sequence[tuple[str, Trajectory]],
    c_bar_ref: Optional[float] = None,
    title: str = "Institutional capacity",
    domain: int = 0,
) -> ChartSpec:
    series = tuple(
        ChartSeries(
            label=label,
            points=tuple((s.t, s.state.domains[domain].c) for s in traj.samples),
            style=k,
        )
        for k, (label, traj) in enumerate(labelled_trajectories)
    )
    return ChartSpec(
        title=title,
        x_label="years",
        y_label="capacity",
        series=series,
        ref_line=c_bar_ref,
        ref_label="reversibility threshold" if c_bar_ref is not None else "",
    )


def divergence_chart(
    labelled_trajectories: Sequence[tuple[str, Trajectory]],
    title: str = "Welfare divergence",
    domain: int = 0,
) -> ChartSpec:
    series = tuple(
        ChartSeries(
            label=label,
            points=tuple((s.t, s.divergence[domain]) for s in traj.samples),
            style=k,
        )
        for k, (label, traj) in enumerate(labelled_trajectories)
    )
    return ChartSpec(
        title=title,
        x_label="years",
        y_label="divergence",
        series=series,
        y_range=(0.0, 1.0),
    )

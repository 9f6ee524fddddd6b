"""Governance mechanisms as time-activated transforms on model parameters.

Five mechanisms, each mapped to the single parameter it most directly
targets:

* standard mitigation (contestability registers, impact floors) scales
  the delegation erosion rate ``delta``;
* decoupled capacity streams add a protected recovery flow ``a_dec``
  that does not depend on remaining capacity;
* irreducible deliberation caps delegation at ``d_cap`` and scales the
  disuse atrophy rate ``alpha``;
* nested value forums multiply the value re-alignment gain by
  ``m_forum``;
* isolation firewalls zero the cross-domain coupling matrix.

A mechanism activates at a year boundary and stays on. An absent
mechanism is the identity transform; an empty set returns the base
parameter object unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .errors import ConfigurationError, OutOfRangeError
from .model import ModelParams

__all__ = [
    "StdMitigation",
    "DecoupledStreams",
    "IrreducibleDeliberation",
    "NestedForums",
    "Firewalls",
    "InterventionSet",
    "effective_params",
    "delegation_cap",
]


def _check_year(name: str, year: float) -> None:
    if not math.isfinite(year) or year < 0:
        raise OutOfRangeError(name, f"active_from must be >= 0, got {year!r}")


@dataclass(frozen=True)
class StdMitigation:
    active_from: float
    delta_factor: float = 0.7

    def validate(self) -> None:
        _check_year("std_mitigation.active_from", self.active_from)
        if not 0.0 < self.delta_factor <= 1.0:
            raise OutOfRangeError(
                "std_mitigation.delta_factor",
                f"must be in (0,1], got {self.delta_factor!r}",
            )


@dataclass(frozen=True)
class DecoupledStreams:
    active_from: float
    a_dec: float

    def validate(self) -> None:
        _check_year("decoupled_streams.active_from", self.active_from)
        if not math.isfinite(self.a_dec) or self.a_dec < 0:
            raise OutOfRangeError(
                "decoupled_streams.a_dec", f"must be >= 0, got {self.a_dec!r}"
            )


@dataclass(frozen=True)
class IrreducibleDeliberation:
    active_from: float
    d_cap: float
    alpha_factor: float = 1.0

    def validate(self) -> None:
        _check_year("irreducible_deliberation.active_from", self.active_from)
        if not 0.0 < self.d_cap < 1.0:
            raise OutOfRangeError(
                "irreducible_deliberation.d_cap", f"must be in (0,1), got {self.d_cap!r}"
            )
        if not 0.0 < self.alpha_factor <= 1.0:
            raise OutOfRangeError(
                "irreducible_deliberation.alpha_factor",
                f"must be in (0,1], got {self.alpha_factor!r}",
            )


@dataclass(frozen=True)
class NestedForums:
    active_from: float
    m_forum: float

    def validate(self) -> None:
        _check_year("nested_forums.active_from", self.active_from)
        if not math.isfinite(self.m_forum) or self.m_forum < 1.0:
            raise OutOfRangeError(
                "nested_forums.m_forum", f"must be >= 1, got {self.m_forum!r}"
            )


@dataclass(frozen=True)
class Firewalls:
    active_from: float

    def validate(self) -> None:
        _check_year("firewalls.active_from", self.active_from)


_ZERO_COUPLING = ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))


@dataclass(frozen=True)
class InterventionSet:
    """Activation times and magnitudes for the five policy mechanisms."""

    std_mitigation: Optional[StdMitigation] = None
    decoupled_streams: Optional[DecoupledStreams] = None
    irreducible_deliberation: Optional[IrreducibleDeliberation] = None
    nested_forums: Optional[NestedForums] = None
    firewalls: Optional[Firewalls] = None

    def validate(self) -> "InterventionSet":
        for mech in self._mechanisms():
            if mech is not None:
                mech.validate()
        return self

    def _mechanisms(self):
        return (
            self.std_mitigation,
            self.decoupled_streams,
            self.irreducible_deliberation,
            self.nested_forums,
            self.firewalls,
        )

    def is_empty(self) -> bool:
        return all(m is None for m in self._mechanisms())

    def earliest_activation(self) -> Optional[float]:
        times = [m.active_from for m in self._mechanisms() if m is not None]
        return min(times) if times else None

    def active_key(self, t: float) -> tuple[bool, ...]:
        """Which mechanisms are on at time t; usable as a cache key."""
        return tuple(m is not None and t >= m.active_from for m in self._mechanisms())

    def effective_params(self, base: ModelParams, t: float) -> ModelParams:
        """Apply every mechanism active at time t; the base is never mutated.

        Transforms touch disjoint fields except delta and alpha, which are
        only multiplied, so the application order does not matter.
        """
        if self.is_empty():
            return base
        changes: dict = {}
        sm = self.std_mitigation
        if sm is not None and t >= sm.active_from:
            changes["delta"] = base.delta * sm.delta_factor
        dc = self.decoupled_streams
        if dc is not None and t >= dc.active_from:
            changes["a_dec"] = dc.a_dec
        ir = self.irreducible_deliberation
        if ir is not None and t >= ir.active_from:
            changes["d_cap"] = ir.d_cap
            changes["alpha"] = base.alpha * ir.alpha_factor
        nf = self.nested_forums
        if nf is not None and t >= nf.active_from:
            changes["m_forum"] = nf.m_forum
        fw = self.firewalls
        if fw is not None and t >= fw.active_from:
            changes["coupling"] = _ZERO_COUPLING
        if not changes:
            return base
        return replace(base, **changes)


def effective_params(base: ModelParams, iset: InterventionSet, t: float) -> ModelParams:
    """Compile the intervention set into effective parameters at time t."""
    iset.validate()
    return iset.effective_params(base, t)


def delegation_cap(d_raw: float, params: ModelParams) -> float:
    """Clamp raw delegation at the irreducible-deliberation ceiling."""
    if not 0.0 <= d_raw <= 1.0:
        raise ConfigurationError(f"d_raw must be in [0,1], got {d_raw!r}")
    return min(d_raw, params.d_cap)

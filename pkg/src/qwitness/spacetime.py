"""Agents on a line, timestamped events, and light-cone validation.

All protocol rounds run in one agreed frame with c = 1, positions in
light-seconds. Each party has two agents; the near pairs (A1, B1) and
(A2, B2) sit a short distance apart while the pairs themselves are
separated by a much larger distance, so that a message between the
pairs cannot arrive before the commitment rounds close. Information
flow is checked structurally: every event declares the earlier events
its payload depends on, and validation confirms each declared
dependency lies in the past light cone.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum

from .errors import ConfigurationError

# Operationalizes "much smaller than": short distances and step times
# must not exceed a tenth of the inter-pair separation.
SEPARATION_FACTOR = 10.0
TIME_TOL = 1e-9


class AgentId(Enum):
    A1 = "A1"
    A2 = "A2"
    B1 = "B1"
    B2 = "B2"


class EventKind(Enum):
    SEND = "send"
    RECEIVE = "receive"
    COMMIT_INITIATE = "commit-initiate"
    COMMIT_SUSTAIN = "commit-sustain"
    UNVEIL = "unveil"
    ANNOUNCE = "announce"
    MEASURE = "measure"


@dataclass(frozen=True)
class AgentSite:
    """An agent pinned to a fixed 1-D position for the whole run."""

    agent_id: AgentId
    position: float


@dataclass(frozen=True)
class SpacetimeEvent:
    event_id: int
    time: float
    site: AgentSite
    kind: EventKind
    payload: dict
    depends_on: tuple[int, ...] = ()
    window: tuple[float, float] | None = None

    @property
    def position(self) -> float:
        return self.site.position

    def payload_digest(self) -> str:
        blob = json.dumps(self.payload, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_record(self) -> dict:
        return {
            "time": self.time,
            "agent": self.site.agent_id.value,
            "position": self.position,
            "kind": self.kind.value,
            "payload_digest": self.payload_digest(),
        }


@dataclass(frozen=True)
class TimingConfig:
    """Distances and step times for the standard two-pair layout.

    ``d_small`` is the intra-pair gap, ``D`` the inter-pair separation,
    ``delta`` and ``delta_prime`` the report and unveil step times.
    """

    d_small: float = 0.01
    D: float = 1.0
    delta: float = 0.02
    delta_prime: float = 0.05

    def __post_init__(self) -> None:
        if self.d_small <= 0 or self.D <= 0:
            raise ConfigurationError("distances must be positive")
        if self.d_small > self.D / SEPARATION_FACTOR:
            raise ConfigurationError(
                f"d_small {self.d_small} must be <= D / {SEPARATION_FACTOR}"
            )
        if not (0 < self.delta < self.delta_prime):
            raise ConfigurationError("need 0 < delta < delta_prime")
        if self.delta_prime > self.D / SEPARATION_FACTOR:
            raise ConfigurationError(
                f"delta_prime {self.delta_prime} must be <= D / {SEPARATION_FACTOR}"
            )


def standard_configuration(cfg: TimingConfig) -> dict[AgentId, AgentSite]:
    """Place the four agents: A1, B1 near the origin; B2, A2 near x = D."""
    return {
        AgentId.A1: AgentSite(AgentId.A1, 0.0),
        AgentId.B1: AgentSite(AgentId.B1, cfg.d_small),
        AgentId.B2: AgentSite(AgentId.B2, cfg.D),
        AgentId.A2: AgentSite(AgentId.A2, cfg.D + cfg.d_small),
    }


def causally_precedes(e1: SpacetimeEvent, e2: SpacetimeEvent) -> bool:
    """True iff e2 lies in the closed future light cone of e1 (c = 1)."""
    return e2.time - e1.time >= abs(e2.position - e1.position) - TIME_TOL


@dataclass(frozen=True)
class Violation:
    kind: str
    event_id: int
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_transcript(events: list[SpacetimeEvent] | tuple[SpacetimeEvent, ...]) -> ValidationReport:
    """Check causal consistency and step windows of a time-ordered log.

    Flags receive events without a causally valid matching send (or
    announce or unveil), any declared dependency outside the past light
    cone, and any event outside its declared time window. Violations
    are report entries, never exceptions.
    """
    by_id = {e.event_id: e for e in events}
    found: list[Violation] = []
    previous_time = float("-inf")
    for e in events:
        if e.time < previous_time - TIME_TOL:
            found.append(Violation("ordering", e.event_id, "events not sorted by time"))
        previous_time = max(previous_time, e.time)
        for dep_id in e.depends_on:
            dep = by_id.get(dep_id)
            if dep is None:
                found.append(
                    Violation("missing-dependency", e.event_id, f"unknown event {dep_id}")
                )
            elif not causally_precedes(dep, e):
                found.append(
                    Violation(
                        "causality",
                        e.event_id,
                        f"depends on event {dep_id} outside its past light cone",
                    )
                )
        if e.kind is EventKind.RECEIVE:
            sources = [
                by_id[i]
                for i in e.depends_on
                if i in by_id
                and by_id[i].kind in (EventKind.SEND, EventKind.ANNOUNCE, EventKind.UNVEIL)
            ]
            if not any(causally_precedes(s, e) for s in sources):
                found.append(
                    Violation("unmatched-receive", e.event_id, "no causally valid send")
                )
        if e.window is not None:
            lo, hi = e.window
            if e.time < lo - TIME_TOL or e.time > hi + TIME_TOL:
                found.append(
                    Violation(
                        "window",
                        e.event_id,
                        f"time {e.time} outside declared window [{lo}, {hi}]",
                    )
                )
    return ValidationReport(tuple(found))


@dataclass
class Transcript:
    """Append-only event log owned by a single protocol run."""

    events: list[SpacetimeEvent] = field(default_factory=list)
    _next_id: int = 0
    _next_handle: int = 0

    def new_handle(self) -> int:
        handle = self._next_handle
        self._next_handle += 1
        return handle

    def emit(
        self,
        time: float,
        site: AgentSite,
        kind: EventKind,
        payload: dict | None = None,
        depends_on: tuple[int, ...] = (),
        window: tuple[float, float] | None = None,
    ) -> SpacetimeEvent:
        if window is None:
            window = (time, time)
        event = SpacetimeEvent(
            self._next_id, time, site, kind, payload or {}, depends_on, window
        )
        self._next_id += 1
        self.events.append(event)
        return event

    def validate(self) -> ValidationReport:
        ordered = sorted(self.events, key=lambda e: e.time)
        return validate_transcript(ordered)

    def to_jsonl(self) -> str:
        lines = [json.dumps(e.to_record(), sort_keys=True) for e in self.events]
        return "\n".join(lines) + ("\n" if lines else "")

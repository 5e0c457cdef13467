"""Layout arithmetic, light cones, and transcript validation."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwitness.errors import ConfigurationError
from qwitness.spacetime import (
    AgentId,
    AgentSite,
    EventKind,
    SpacetimeEvent,
    TimingConfig,
    Transcript,
    causally_precedes,
    standard_configuration,
    validate_transcript,
)

A1 = AgentSite(AgentId.A1, 0.0)
B1 = AgentSite(AgentId.B1, 0.01)
A2 = AgentSite(AgentId.A2, 1.01)


def event(eid, time, site, kind=EventKind.ANNOUNCE, deps=(), window=None):
    return SpacetimeEvent(eid, time, site, kind, {}, deps, window)


# ---------------------------------------------------------------------------
# configuration


def test_standard_configuration_positions():
    cfg = TimingConfig(d_small=0.001, D=1.0, delta=0.002, delta_prime=0.005)
    layout = standard_configuration(cfg)
    assert layout[AgentId.A1].position == 0.0
    assert layout[AgentId.B1].position == 0.001
    assert layout[AgentId.B2].position == 1.0
    assert layout[AgentId.A2].position == 1.001
    # Near pairs are d_small apart; the cross pairs roughly D apart.
    assert abs(layout[AgentId.A2].position - layout[AgentId.B2].position) == pytest.approx(0.001)
    assert abs(layout[AgentId.A1].position - layout[AgentId.B2].position) == pytest.approx(1.0)


def test_standard_configuration_rejects_wide_pairs():
    with pytest.raises(ConfigurationError):
        TimingConfig(d_small=0.2, D=1.0)


def test_standard_configuration_large_separation():
    cfg = TimingConfig(d_small=0.01, D=100.0, delta=0.02, delta_prime=0.05)
    layout = standard_configuration(cfg)
    assert layout[AgentId.B2].position == 100.0


def test_timing_rejects_bad_step_order():
    with pytest.raises(ConfigurationError):
        TimingConfig(delta=0.05, delta_prime=0.02)
    with pytest.raises(ConfigurationError):
        TimingConfig(delta=0.02, delta_prime=0.5)  # delta_prime > D / 10


# ---------------------------------------------------------------------------
# light cone


def test_causally_precedes_same_position():
    assert causally_precedes(event(0, 0.0, A1), event(1, 1.0, A1))


def test_causally_precedes_reflexive_at_zero_separation():
    e = event(0, 0.5, A1)
    assert causally_precedes(e, e)


def test_causally_precedes_outside_cone():
    far = AgentSite(AgentId.B2, 1.0)
    assert not causally_precedes(event(0, 0.0, A1), event(1, 0.5, far))


def test_causally_precedes_null_separation():
    far = AgentSite(AgentId.B2, 1.0)
    assert causally_precedes(event(0, 0.0, A1), event(1, 1.0, far))


grid = st.integers(min_value=-64, max_value=64).map(lambda k: k / 16.0)


@given(t1=grid, x1=grid, t2=grid, x2=grid)
def test_causally_precedes_antisymmetric_for_timelike(t1, x1, t2, x2):
    e1 = event(0, t1, AgentSite(AgentId.A1, x1))
    e2 = event(1, t2, AgentSite(AgentId.B1, x2))
    if abs(t2 - t1) > abs(x2 - x1):  # strictly timelike
        assert causally_precedes(e1, e2) != causally_precedes(e2, e1)


@settings(max_examples=300)
@given(t1=grid, x1=grid, t2=grid, x2=grid, t3=grid, x3=grid)
def test_causally_precedes_transitive(t1, x1, t2, x2, t3, x3):
    e1 = event(0, t1, AgentSite(AgentId.A1, x1))
    e2 = event(1, t2, AgentSite(AgentId.B1, x2))
    e3 = event(2, t3, AgentSite(AgentId.A2, x3))
    if causally_precedes(e1, e2) and causally_precedes(e2, e3):
        assert causally_precedes(e1, e3)


# ---------------------------------------------------------------------------
# transcript validation


def test_empty_transcript_valid():
    assert validate_transcript([]).ok


def test_honest_exchange_valid():
    tr = Transcript()
    sent = tr.emit(0.0, A1, EventKind.SEND, {"m": 1})
    tr.emit(0.01, B1, EventKind.RECEIVE, {"m": 1}, depends_on=(sent.event_id,))
    assert tr.validate().ok


def test_receive_without_send_flagged():
    events = [event(0, 0.0, B1, EventKind.RECEIVE)]
    report = validate_transcript(events)
    assert not report.ok
    assert report.violations[0].kind == "unmatched-receive"


def test_superluminal_receive_flagged():
    far = AgentSite(AgentId.B2, 1.0)
    events = [
        event(0, 0.0, A1, EventKind.SEND),
        event(1, 0.5, far, EventKind.RECEIVE, deps=(0,)),
    ]
    report = validate_transcript(events)
    kinds = {v.kind for v in report.violations}
    assert "causality" in kinds


def test_sustain_depending_on_distant_announce_flagged():
    # A2's sustain at the same coordinate time cannot depend on B1's
    # announcement across the large separation.
    cfg = TimingConfig()
    layout = standard_configuration(cfg)
    events = [
        event(0, cfg.delta, layout[AgentId.B1], EventKind.ANNOUNCE),
        event(
            1,
            cfg.delta,
            layout[AgentId.A2],
            EventKind.COMMIT_SUSTAIN,
            deps=(0,),
        ),
    ]
    report = validate_transcript(events)
    assert any(v.kind == "causality" and v.event_id == 1 for v in report.violations)


def test_event_outside_window_flagged():
    events = [event(0, 0.07, A1, EventKind.COMMIT_SUSTAIN, window=(0.02, 0.02))]
    report = validate_transcript(events)
    assert any(v.kind == "window" for v in report.violations)


def test_unsorted_transcript_flagged():
    events = [event(0, 1.0, A1), event(1, 0.0, A1)]
    report = validate_transcript(events)
    assert any(v.kind == "ordering" for v in report.violations)


def test_unknown_dependency_flagged():
    report = validate_transcript([event(0, 0.0, A1, deps=(99,))])
    assert any(v.kind == "missing-dependency" for v in report.violations)


# ---------------------------------------------------------------------------
# export


def test_jsonl_schema():
    tr = Transcript()
    sent = tr.emit(0.0, A1, EventKind.SEND, {"value": 3})
    tr.emit(0.01, B1, EventKind.RECEIVE, {}, depends_on=(sent.event_id,))
    lines = tr.to_jsonl().splitlines()
    assert len(lines) == 2
    for line in lines:
        record = json.loads(line)
        assert set(record) == {"time", "agent", "position", "kind", "payload_digest"}
    assert json.loads(lines[0])["kind"] == "send"


def test_payload_digest_stable_and_value_sensitive():
    a = event(0, 0.0, A1)
    b = SpacetimeEvent(0, 0.0, A1, EventKind.ANNOUNCE, {"x": 1})
    c = SpacetimeEvent(0, 0.0, A1, EventKind.ANNOUNCE, {"x": 2})
    assert a.payload_digest() == event(1, 1.0, B1).payload_digest()
    assert b.payload_digest() != c.payload_digest()

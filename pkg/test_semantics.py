"""
运行语义测试
"""
from fractions import Fraction

import pytest

from tca.core.exceptions import InternalError, TraceError
from tca.models.contract import ActionLabel, TimedEvent, TimedTrace
from tca.services.documents import load_automaton, parse_automaton
from tca.services.semantics import (
    conflict_at, deontic_step, initial_configuration, run_trace, step, temporal_step,
)
from tca.services.zones import guard_contains, valuation_shift
from tca.tasks.oracle import GenParams, gen_automaton, gen_trace


def trace(*events):
    return TimedTrace(tuple(
        TimedEvent(ActionLabel(party, action, attempted), Fraction(at))
        for party, action, at, *rest in events
        for attempted in [bool(rest and rest[0])]
    ))


def ids(norms):
    return sorted(n.id for n in norms)


def test_initial_configuration(resource):
    c = initial_configuration(resource)
    assert c.state == "q1"
    assert c.now == 0
    assert all(v == 0 for v in c.valuation.values())
    assert c.persistent == frozenset()
    assert c.ephemeral == frozenset()


def test_resource_trace_conflicts_in_q4(resource, resource_trace):
    """get@1, request@2, start@3 进入 q4 后出现 (O_release, F_release)"""
    report = run_trace(resource, resource_trace)
    assert not report.violated
    assert report.conflicts == [2]
    last = report.outcomes[2]
    assert last.configuration.state == "q4"
    assert [n.id for n in last.conflict] == ["O_release", "F_release"]
    assert last.configuration.valuation["t"] == 1
    assert last.configuration.now == 3


def test_late_release_is_violation(resource, late_release_trace):
    report = run_trace(resource, late_release_trace)
    assert report.violated
    assert len(report.outcomes) == 5
    assert ids(report.outcomes[-1].violated) == ["O_release"]
    assert report.final is None


def test_release_in_time_discharges_obligation(resource):
    report = run_trace(resource, trace(("A", "get", 1), ("B", "request", 2), ("A", "release", 11)))
    assert not report.violated
    assert report.conflicts == []
    final = report.final
    assert final.state == "q1"
    assert final.persistent == frozenset()
    assert final.valuation["t"] == 9


def test_obligation_deadline_violation(resource):
    report = run_trace(resource, trace(("A", "get", 1), ("B", "request", 2), ("A", "end", 18)))
    assert report.violated
    assert ids(report.outcomes[-1].violated) == ["O_release"]


def test_unmatched_label_stays(resource):
    report = run_trace(resource, trace(("A", "end", 1), ("C", "zz", 2)))
    assert [o.configuration.state for o in report.outcomes] == ["q1", "q1"]
    assert report.final.valuation["t"] == 2


def test_attempted_label_never_fires(resource):
    report = run_trace(resource, trace(("A", "get", 1, True)))
    assert report.final.state == "q1"


def test_attempted_release_does_not_discharge(resource):
    report = run_trace(resource, trace(("A", "get", 1), ("B", "request", 2), ("A", "release", 5, True)))
    final = report.final
    assert final.state == "q3"
    assert ids(final.persistent) == ["O_release"]


def test_deontic_step_keeps_valuation(resource):
    c = initial_configuration(resource)
    outcome = deontic_step(c, TimedEvent(ActionLabel("A", "get"), Fraction(4)))
    assert outcome.configuration.valuation == c.valuation


def test_temporal_step_resets_clock(resource):
    c = initial_configuration(resource)
    c = step(resource, c, TimedEvent(ActionLabel("A", "get"), Fraction(1))).configuration
    after = temporal_step(resource, c, TimedEvent(ActionLabel("B", "request"), Fraction(2)))
    assert after.state == "q3"
    assert after.valuation["t"] == 0
    assert after.now == 2
    assert ids(after.persistent) == ["O_release"]


def test_permission_violated_by_attempt():
    m = parse_automaton("""
    {"clocks": ["t"], "parties": ["A"], "actions": ["a"], "initial": "q0",
     "states": [{"id": "q0", "pers": [
        {"id": "P_a", "modality": "P", "party": "A", "action": "a", "guard": [[["t", "<=", "5"]]]}]}]}
    """)
    report = run_trace(m, trace(("A", "a", 2, True)))
    assert report.violated
    assert ids(report.outcomes[0].violated) == ["P_a"]

    late = run_trace(m, trace(("A", "a", 7, True)))
    assert not late.violated
    assert late.final.persistent == frozenset()


def test_prohibition_violated_by_action(resource):
    c = initial_configuration(resource)
    for event in trace(("A", "get", 1), ("B", "request", 2), ("A", "start", 3)):
        c = step(resource, c, event).configuration
    outcome = step(resource, c, TimedEvent(ActionLabel("A", "release"), Fraction(4)))
    assert outcome.is_violation
    assert ids(outcome.violated) == ["F_release"]


def test_conflict_at_outside_window(resource):
    c = initial_configuration(resource)
    for event in trace(("A", "get", 1), ("B", "request", 2), ("A", "start", 3)):
        c = step(resource, c, event).configuration
    assert conflict_at(c.norms, c.valuation) is not None
    assert conflict_at(c.persistent, c.valuation) is None


def test_decreasing_timestamps_rejected():
    with pytest.raises(TraceError):
        trace(("A", "get", 3), ("A", "get", 2))
    with pytest.raises(TraceError):
        trace(("A", "get", 1), ("A", "get", 1))


def test_step_before_current_time_rejected(resource):
    c = initial_configuration(resource)
    c = step(resource, c, TimedEvent(ActionLabel("A", "get"), Fraction(5))).configuration
    with pytest.raises(TraceError):
        step(resource, c, TimedEvent(ActionLabel("A", "release"), Fraction(4)))


def test_nondeterministic_firing_is_internal_error(data_dir):
    m = load_automaton(data_dir / "nondeterministic.json")
    with pytest.raises(InternalError):
        run_trace(m, trace(("A", "a", 1)))


def test_empty_trace(resource):
    report = run_trace(resource, TimedTrace())
    assert report.outcomes == []
    assert report.final == report.initial
    assert not report.violated
    assert report.conflicts == []


def test_logged_run_with_foreign_label_and_violation(resource, late_release_trace):
    """调试级日志下，字母表外标签与违反都正常返回报告"""
    from tca.core.logging import setup_logging

    setup_logging("DEBUG")
    foreign = run_trace(resource, trace(("C", "zz", 1), ("A", "get", 2)), run_id="foreign")
    assert not foreign.violated
    assert foreign.final.state == "q2"

    report = run_trace(resource, late_release_trace, run_id="late")
    assert report.violated
    assert ids(report.outcomes[-1].violated) == ["O_release"]


def test_run_invariants_on_random_contracts():
    """随机合约与轨迹上：全局时钟等于事件时间、重复执行结果一致、规范集合受状态约束"""
    base = GenParams.from_settings(0)
    for seed in range(40):
        p = base.with_seed(seed)
        m = gen_automaton(p)
        persistent_pool = m.all_persistent()
        for index in range(10):
            events = gen_trace(m, p, index)
            report = run_trace(m, events)
            assert report.outcomes == run_trace(m, events).outcomes, (seed, index)

            previous = report.initial
            assert previous.persistent <= persistent_pool
            assert previous.ephemeral <= m.eph_of(previous.state)
            for outcome in report.outcomes:
                if outcome.is_violation:
                    break
                c = outcome.configuration
                assert c.now == outcome.event.timestamp, (seed, index)
                assert c.persistent <= persistent_pool, (seed, index)
                assert c.ephemeral <= m.eph_of(c.state), (seed, index)

                shifted = valuation_shift(previous.valuation, outcome.event.timestamp - previous.now)
                fired = any(guard_contains(t.guard, shifted)
                            for t in m.outgoing_on(previous.state, outcome.event.label))
                if fired:
                    assert c.ephemeral == m.eph_of(c.state), (seed, index)
                else:
                    assert c.state == previous.state
                previous = c

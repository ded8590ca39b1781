"""
随机生成器、差分检查与性质套件测试
"""
from fractions import Fraction

import pytest

from tca.models.contract import ActionLabel, TimedTrace
from tca.services.contract import validate_wellformed
from tca.services.semantics import run_trace
from tca.services.zones import guard_from_constraints, guard_true
from tca.tasks.fuzz_tasks import SUITES, run_suite
from tca.tasks.oracle import (
    GenParams, check_soundness, check_theorem1, delta_interval_constraints, delta_interval_oracle,
    eval_constraints, gen_automaton, gen_trace, lockstep_mismatch,
)

T = ("t",)


def test_gen_params_from_settings(monkeypatch):
    from tca.core.config import get_settings

    monkeypatch.setenv("TCA_GEN_MAX_STATES", "3")
    get_settings.cache_clear()
    p = GenParams.from_settings(5, max_norms=1)
    assert (p.seed, p.max_states, p.max_norms, p.max_constant) == (5, 3, 1, 10)
    assert p.with_seed(9).seed == 9
    assert p.with_seed(9).max_states == 3


def test_gen_automaton_is_reproducible():
    p = GenParams.from_settings(11)
    first, second = gen_automaton(p), gen_automaton(p)
    assert first == second
    assert sorted(n.id for n in first.norms) == sorted(n.id for n in second.norms)


def test_generated_automata_respect_bounds():
    p = GenParams.from_settings(0)
    for seed in range(60):
        m = gen_automaton(p.with_seed(seed))
        assert validate_wellformed(m).valid, seed
        assert 1 <= len(m.states) <= p.max_states
        assert 1 <= len(m.user_clocks) <= p.max_clocks
        assert m.clocks[0] == "gamma"
        assert len(m.norms) <= p.max_norms
        for q in m.states:
            assert len(m.pers_of(q)) + len(m.eph_of(q)) <= p.max_norms_per_state


def test_generated_traces(resource):
    p = GenParams.from_settings(3)
    alphabet = set(resource.alphabet)
    for index in range(30):
        trace = gen_trace(resource, p, index)
        assert len(trace) <= p.trace_length
        stamps = [e.timestamp for e in trace]
        assert stamps == sorted(set(stamps))
        assert all(0 <= s <= p.max_timestamp and (2 * s).denominator == 1 for s in stamps)
        assert all(e.label.base in alphabet for e in trace)
    assert gen_trace(resource, p, 4) == gen_trace(resource, p, 4)


def test_eval_constraints():
    v = {"x": Fraction(3), "y": Fraction(1)}
    assert eval_constraints([[("x", "<=", "3"), ("x-y", ">", "1")]], v)
    assert not eval_constraints([[("x", "<", "3")]], v)
    assert eval_constraints([[("x", "<", "3")], [("y", "=", "1")]], v)
    assert eval_constraints([[]], v)
    assert not eval_constraints([], v)


def test_delta_interval_constraints():
    v = {"x": Fraction(3), "y": Fraction(1)}
    assert delta_interval_constraints([[("x", ">=", "5")]], v) == 2
    assert delta_interval_constraints([[("x", "<", "3")]], v) is None
    # 差分约束不随时间改变
    assert delta_interval_constraints([[("x-y", ">=", "3")]], v) is None
    witness = delta_interval_constraints([[("x", ">", "4"), ("x", "<", "5")]], v)
    assert 1 < witness < 2


def test_delta_interval_oracle_on_guards():
    upper = guard_from_constraints(T, [[("t", "<=", "15")]])
    assert delta_interval_oracle(upper, {"t": Fraction(15)}) == 0
    assert delta_interval_oracle(upper, {"t": Fraction(31, 2)}) is None
    assert delta_interval_oracle(guard_true(T), {"t": Fraction(100)}) == 0


def test_lockstep_on_case_study(resource, resource_trace, late_release_trace):
    assert check_theorem1(resource, resource_trace)
    assert check_theorem1(resource, late_release_trace)
    assert check_theorem1(resource, TimedTrace())
    assert lockstep_mismatch(resource, resource_trace) is None


def test_lockstep_on_random_traces(resource):
    p = GenParams.from_settings(21)
    for index in range(40):
        assert lockstep_mismatch(resource, gen_trace(resource, p, index)) is None


def test_soundness_on_fixed_contract(resource_fixed):
    assert check_soundness(resource_fixed, 200, GenParams.from_settings(2))


@pytest.mark.parametrize("suite", sorted(SUITES))
def test_every_suite_runs(suite):
    traces = {"theorem1": 5, "soundness": 20}.get(suite)
    result = run_suite(suite, seed=0, count=4, traces=traces)
    assert result.suite == suite
    assert result.failed == 0, result.messages
    assert result.passed == 4


def test_run_suite_with_workers():
    result = run_suite("lemma2", seed=100, count=6, workers=2)
    assert result.passed + result.failed == 6
    assert result.failed == 0


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope")


# 完整规模的验收套件(耗时较长，需 --runslow)

@pytest.mark.slow
@pytest.mark.parametrize("suite", ["lemma1", "lemma2", "lemma3", "determinism"])
def test_flattening_properties_full(suite):
    result = run_suite(suite, seed=0, count=1000)
    assert result.failed == 0, result.messages


@pytest.mark.slow
def test_lockstep_full():
    result = run_suite("theorem1", seed=0, count=200, traces=50)
    assert result.failed == 0, result.messages


@pytest.mark.slow
def test_soundness_full():
    result = run_suite("soundness", seed=0, count=150, traces=1000)
    assert result.failed == 0, result.messages
    assert result.passed - result.vacuous >= 50


@pytest.mark.slow
def test_zone_algebra_full():
    result = run_suite("zones", seed=0, count=1000)
    assert result.failed == 0, result.messages


@pytest.mark.slow
def test_fixed_contract_blocks_every_conflict(resource, resource_fixed):
    """原合约中出现冲突的轨迹，在修正合约中于同一步或更早因 A:start 被违反"""
    p = GenParams.from_settings(7)
    start = ActionLabel("A", "start")
    hits = 0
    for index in range(1000):
        trace = gen_trace(resource, p, index)
        original = run_trace(resource, trace)
        fixed = run_trace(resource_fixed, trace)
        assert fixed.conflicts == []
        if not original.conflicts:
            continue
        hits += 1
        first = original.conflicts[0]
        assert fixed.violated
        where = len(fixed.outcomes) - 1
        assert where <= first
        assert fixed.outcomes[where].event.label == start
    assert hits > 0

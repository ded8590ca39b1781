"""
展平与剪枝测试
"""
import pytest

from tca.core.exceptions import FlattenLimitError, PreconditionError, WellFormednessError
from tca.models.contract import ActionLabel, Modality, Norm, TimedContractAutomaton, Transition
from tca.services.documents import load_automaton
from tca.services.flatten import (
    active_alpha, check_determinism, flatten, migrated_states, prune_unsat, subset_variant_bound, tc,
    timing_condition_T,
)
from tca.services.zones import guard_from_constraints, guard_true, render_guard

CLOCKS = ("gamma", "t")
RELEASE = ActionLabel("A", "release")
START = ActionLabel("A", "start")


def window(*constraints):
    return guard_from_constraints(CLOCKS, [list(constraints)])


O_REL = Norm(Modality.OBLIGATION, "A", "release", window(("t", "<=", "15")), id="O_release")
F_REL = Norm(Modality.PROHIBITION, "A", "release", window(("t", "<=", "10")), id="F_release")
P_START = Norm(Modality.PERMISSION, "A", "start", window(("t", "<=", "4")), id="P_start")

PRUNED_IDS = {
    "q1|E={}|P={}",
    "q2|E={}|P={}",
    "q3|E={}|P={O_release}",
    "q4|E={F_release,F_request}|P={O_release}",
    "q5|E={}|P={O_release}",
}


def test_tc():
    assert tc(O_REL) == O_REL.guard
    assert render_guard(tc(F_REL)) == "t>10"
    assert tc(Norm(Modality.PROHIBITION, "A", "a", guard_true(CLOCKS))).is_false


def test_guard_caches_are_bounded():
    """长时间套件运行下缓存不会无限增长"""
    from tca.services.flatten import non_violation
    from tca.services.zones import guard_and, guard_not, time_predecessor

    for cached in (tc, non_violation, guard_and, guard_not, time_predecessor):
        assert cached.cache_info().maxsize is not None


def test_active_alpha():
    family = active_alpha({O_REL, P_START}, START)
    # 义务不能被 A:start 履行，必须保留
    assert sorted(len(s) for s in family) == [1, 2]
    assert all(O_REL in s for s in family)

    family = active_alpha({O_REL, P_START}, RELEASE)
    assert len(family) == 4
    assert frozenset() in family

    assert active_alpha(set(), RELEASE) == [frozenset()]
    assert active_alpha({O_REL}, RELEASE.attempt()) == [frozenset({O_REL})]


def test_timing_condition_T():
    assert timing_condition_T(RELEASE, {O_REL}, set(), CLOCKS) == O_REL.guard
    assert render_guard(timing_condition_T(RELEASE, set(), {O_REL}, CLOCKS)) == "t>15"
    # 其他标签上保留的义务不限制守卫
    assert timing_condition_T(START, set(), {O_REL}, CLOCKS).is_true
    assert render_guard(timing_condition_T(START, {P_START}, set(), CLOCKS)) == "t>4"
    assert render_guard(timing_condition_T(START, set(), {P_START}, CLOCKS)) == "t<=4"
    assert timing_condition_T(START, set(), set(), CLOCKS).is_true


def test_timing_condition_rejects_foreign_obligation():
    with pytest.raises(PreconditionError):
        timing_condition_T(START, {O_REL}, set(), CLOCKS)


def test_release_from_q3_splits_on_deadline(resource):
    flat = flatten(resource)
    source = "q3|E={}|P={O_release}"
    guards = {
        t.target: render_guard(t.guard)
        for t in flat.automaton.transitions
        if t.source == source and t.label == RELEASE and t.target.startswith("q1")
    }
    assert guards == {"q1|E={}|P={}": "t<=15", "q1|E={}|P={O_release}": "t>15"}


def test_flattened_automaton_has_no_persistent_norms(resource):
    flat = flatten(resource)
    m = flat.automaton
    assert m.kind == "flattened"
    assert not any(m.pers.values())
    assert flat.initial.id == "q1|E={}|P={}"
    for sid, fs in flat.flat_states.items():
        assert m.eph_of(sid) == fs.norms


def test_pruned_case_study(resource):
    pruned = prune_unsat(flatten(resource))
    assert set(pruned.flat_states) == PRUNED_IDS
    assert {fs.base for fs in migrated_states(pruned)} == {"q4", "q5"}
    assert pruned.stats["pruned_states"] > 0
    assert pruned.pruned


def test_pruning_removes_release_loops_on_q4(resource):
    pruned = prune_unsat(flatten(resource))
    q4 = "q4|E={F_release,F_request}|P={O_release}"
    loops = [t for t in pruned.automaton.transitions
             if t.source == q4 and t.target == q4 and t.label == RELEASE]
    assert loops == []


def test_pruned_transitions_are_satisfiable(resource):
    pruned = prune_unsat(flatten(resource))
    assert all(not t.guard.is_false for t in pruned.automaton.transitions)
    assert set(pruned.automaton.states) == set(pruned.flat_states)


def test_flattening_is_deterministic(resource):
    flat = flatten(resource)
    assert check_determinism(flat)
    assert check_determinism(prune_unsat(flat))


def test_determinism_check_detects_overlap():
    label = ActionLabel("A", "a")
    m = TimedContractAutomaton(
        states=("q0", "q1", "q2"),
        initial="q0",
        transitions=(
            Transition("q0", label, window(("t", "<=", "5")), (), "q1"),
            Transition("q0", label, window(("t", ">=", "3")), (), "q2"),
        ),
        pers={}, eph={}, clocks=CLOCKS, parties=("A",), actions=("a",),
    )
    assert not check_determinism(m)


def test_flatten_without_norms(no_norms):
    flat = flatten(no_norms)
    assert set(flat.flat_states) == {"idle|E={}|P={}", "busy|E={}|P={}"}
    assert migrated_states(flat) == []


def test_stress_hits_subset_bound(stress):
    flat = flatten(stress)
    assert subset_variant_bound(stress) == 64
    assert len(flat.flat_states) == 64


def test_flatten_limit(stress):
    with pytest.raises(FlattenLimitError):
        flatten(stress, max_states=10)


def test_flatten_rejects_ill_formed(data_dir):
    with pytest.raises(WellFormednessError):
        flatten(load_automaton(data_dir / "gamma-reset.json"))


def test_flatten_rejects_flattened_input(resource):
    with pytest.raises(WellFormednessError):
        flatten(flatten(resource).automaton)

"""
合约模型测试：良构性、可达性与 vio/sat/active
"""
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from tca.models.contract import ActionLabel, Modality, Norm, TimedContractAutomaton, Transition
from tca.services.contract import active, reachable_states, sat, validate_wellformed, vio
from tca.services.documents import load_automaton
from tca.services.zones import ClockValuation, guard_from_constraints, guard_true

CLOCKS = ("gamma", "t")

RELEASE = ActionLabel("A", "release")
START = ActionLabel("A", "start")
REQUEST = ActionLabel("B", "request")


def norm(modality, party, action, *constraints, id=""):
    zones = [list(constraints)]
    return Norm(Modality(modality), party, action, guard_from_constraints(CLOCKS, zones), id=id)


def at(t, gamma=None):
    return ClockValuation({"gamma": Fraction(gamma if gamma is not None else t), "t": Fraction(t)})


O_REL = norm("O", "A", "release", ("t", "<=", "15"), id="O_release")
F_REL = norm("F", "A", "release", id="F_release")


def test_resource_is_wellformed(resource):
    report = validate_wellformed(resource)
    assert report.valid
    assert report.violations == []


def test_gamma_reset_rejected(data_dir):
    report = validate_wellformed(load_automaton(data_dir / "gamma-reset.json"))
    assert not report.valid
    assert "global-clock-reset" in {v.kind for v in report.violations}


def test_overlapping_guards_rejected(data_dir):
    report = validate_wellformed(load_automaton(data_dir / "nondeterministic.json"))
    assert not report.valid
    assert [v.kind for v in report.violations] == ["nondeterminism"]


def test_same_target_and_reset_is_deterministic():
    t1 = Transition("q0", ActionLabel("A", "a"), guard_true(CLOCKS), (), "q1")
    t2 = Transition("q0", ActionLabel("A", "a"), guard_from_constraints(CLOCKS, [[("t", "<", "3")]]), (), "q1")
    m = TimedContractAutomaton(("q0", "q1"), "q0", (t1, t2), {}, {}, CLOCKS, ("A",), ("a",))
    assert validate_wellformed(m).valid


def test_dangling_references_reported():
    t = Transition("q0", ActionLabel("C", "zz"), guard_true(CLOCKS), (("u", Fraction(0)),), "q9")
    m = TimedContractAutomaton(("q0",), "q0", (t,), {}, {}, CLOCKS, ("A",), ("a",))
    kinds = {v.kind for v in validate_wellformed(m).violations}
    assert {"unknown-state", "unknown-label", "unknown-clock"} <= kinds


def test_attempted_label_on_contract_transition_rejected():
    t = Transition("q0", ActionLabel("A", "a", True), guard_true(CLOCKS), (), "q0")
    m = TimedContractAutomaton(("q0",), "q0", (t,), {}, {}, CLOCKS, ("A",), ("a",))
    assert "attempted-transition" in {v.kind for v in validate_wellformed(m).violations}


def test_reachable_states(resource):
    assert reachable_states(resource) == {"q1", "q2", "q3", "q4", "q5"}
    single = TimedContractAutomaton(("q0",), "q0", (), {}, {}, CLOCKS, ("A",), ("a",))
    assert reachable_states(single) == {"q0"}
    isolated = TimedContractAutomaton(("q0", "q9"), "q0", (), {}, {}, CLOCKS, ("A",), ("a",))
    assert reachable_states(isolated) == {"q0"}


def test_vio_examples():
    assert vio(F_REL, RELEASE, at(3))
    assert vio(O_REL, REQUEST, at(16))
    permission = norm("P", "A", "a", ("t", "<=", "5"))
    assert not vio(permission, ActionLabel("A", "a"), at(2))
    assert vio(permission, ActionLabel("A", "a", True), at(2))


def test_sat_examples():
    assert sat(O_REL, RELEASE, at(9))
    assert not sat(O_REL, RELEASE.attempt(), at(9))
    assert not sat(F_REL, RELEASE, at(100))
    permission = norm("P", "B", "b", ("t", "<=", "5"))
    assert sat(permission, ActionLabel("A", "a"), at(7))


def test_active_examples():
    assert active({O_REL}, RELEASE, at(9)) == frozenset()
    assert active({O_REL}, START, at(9)) == frozenset({O_REL})
    assert active(set(), RELEASE, at(1)) == frozenset()


def test_norm_identity_is_structural():
    assert norm("F", "A", "release", id="x") == norm("F", "A", "release", id="y")
    assert len({norm("F", "A", "release", id="x"), norm("F", "A", "release", id="y")}) == 1


# 性质测试

constraint = st.tuples(st.just("t"), st.sampled_from(["<", "<=", ">=", ">"]), st.integers(0, 10).map(str))
norms = st.builds(
    lambda modality, party, action, cs: norm(modality, party, action, *cs),
    st.sampled_from("OPF"), st.sampled_from("AB"), st.sampled_from(["a", "b"]),
    st.lists(constraint, max_size=2),
)
labels = st.builds(ActionLabel, st.sampled_from("AB"), st.sampled_from(["a", "b"]), st.booleans())
valuations = st.integers(0, 24).map(lambda k: at(Fraction(k, 2)))


@settings(max_examples=300, deadline=None)
@given(norms, labels, valuations)
def test_vio_and_sat_are_exclusive(n, label, v):
    assert not (vio(n, label, v) and sat(n, label, v))


@settings(max_examples=200, deadline=None)
@given(st.frozensets(norms, max_size=4), st.frozensets(norms, max_size=4), labels, valuations)
def test_active_is_distributive_and_shrinking(e, p, label, v):
    assert active(e | p, label, v) == active(e, label, v) | active(p, label, v)
    result = active(e | p, label, v)
    assert result <= e | p
    for n in e | p:
        if n.modality is Modality.OBLIGATION and (n.party, n.action) != (label.party, label.action):
            assert n in result

from collections import deque
from itertools import combinations
from typing import FrozenSet, Iterable, List, Mapping, Set

import structlog

from tca.models.contract import (
    ActionLabel, Modality, Norm, TimedContractAutomaton, sorted_norms,
)
from tca.models.document import ValidationReport, ViolationEntry
from tca.services.zones import GLOBAL_CLOCK, exceeds, guard_and, guard_contains

logger = structlog.get_logger(__name__)


def _check_references(m: TimedContractAutomaton, violations: List[ViolationEntry]) -> None:
    states = set(m.states)
    parties = set(m.parties)
    actions = set(m.actions)

    if GLOBAL_CLOCK not in m.clocks:
        violations.append(ViolationEntry(
            kind="missing-global-clock",
            message=f"Clock set must contain the global clock {GLOBAL_CLOCK}",
        ))
    if m.initial not in states:
        violations.append(ViolationEntry(
            kind="unknown-state", message=f"Initial state {m.initial} is not declared",
            location="initial",
        ))

    seen_ids = {}
    for mapping, where in ((m.pers, "pers"), (m.eph, "eph")):
        for state, norms in mapping.items():
            if state not in states:
                violations.append(ViolationEntry(
                    kind="unknown-state", message=f"Norms attached to undeclared state {state}",
                    location=f"{state}.{where}",
                ))
            for n in norms:
                location = f"{state}.{where}.{n.id}"
                if n.party not in parties:
                    violations.append(ViolationEntry(
                        kind="unknown-party", message=f"Norm {n.id} names undeclared party {n.party}",
                        location=location,
                    ))
                if n.action not in actions:
                    violations.append(ViolationEntry(
                        kind="unknown-action", message=f"Norm {n.id} names undeclared action {n.action}",
                        location=location,
                    ))
                if n.guard.clocks != m.clocks:
                    violations.append(ViolationEntry(
                        kind="clock-mismatch", message=f"Norm {n.id} guard is over {n.guard.clocks}",
                        location=location,
                    ))
                previous = seen_ids.get(n.id)
                if previous is not None and previous != n:
                    violations.append(ViolationEntry(
                        kind="duplicate-norm-id", message=f"Norm id {n.id} names two different norms",
                        location=location,
                    ))
                seen_ids.setdefault(n.id, n)

    if m.kind == "flattened" and any(m.pers.values()):
        violations.append(ViolationEntry(
            kind="persistent-in-flattened",
            message="A flattened automaton carries no persistent norms",
        ))

    for index, t in enumerate(m.transitions):
        location = f"transitions[{index}]"
        for endpoint in (t.source, t.target):
            if endpoint not in states:
                violations.append(ViolationEntry(
                    kind="unknown-state", message=f"Transition refers to undeclared state {endpoint}",
                    location=location,
                ))
        if t.label.party not in parties or t.label.action not in actions:
            violations.append(ViolationEntry(
                kind="unknown-label", message=f"Transition label {t.label} is not in the declared alphabet",
                location=location,
            ))
        if t.label.attempted and m.kind != "flattened":
            violations.append(ViolationEntry(
                kind="attempted-transition",
                message=f"Attempted action {t.label} cannot label an explicit transition",
                location=location,
            ))
        if t.guard.clocks != m.clocks:
            violations.append(ViolationEntry(
                kind="clock-mismatch", message=f"Transition guard is over {t.guard.clocks}",
                location=location,
            ))
        for clock, _ in t.reset:
            if clock == GLOBAL_CLOCK:
                violations.append(ViolationEntry(
                    kind="global-clock-reset", message="The global clock is never reset",
                    location=location,
                ))
            elif clock not in m.clocks:
                violations.append(ViolationEntry(
                    kind="unknown-clock", message=f"Transition resets undeclared clock {clock}",
                    location=location,
                ))


def overlapping_pairs(m: TimedContractAutomaton):
    """同一状态同一标签上守卫相交且(目标, 重置)不同的迁移对"""
    groups = {}
    for t in m.transitions:
        groups.setdefault((t.source, t.label), []).append(t)
    for ts in groups.values():
        for t1, t2 in combinations(ts, 2):
            if t1.target == t2.target and t1.reset == t2.reset:
                continue
            if t1.guard.clocks != t2.guard.clocks:
                continue
            if not guard_and(t1.guard, t2.guard).is_false:
                yield t1, t2


def validate_wellformed(m: TimedContractAutomaton) -> ValidationReport:
    """检查全局时钟不被重置以及确定性"""
    violations: List[ViolationEntry] = []
    _check_references(m, violations)

    for t1, t2 in overlapping_pairs(m):
        violations.append(ViolationEntry(
            kind="nondeterminism",
            message=(f"Transitions from {t1.source} on {t1.label} to {t1.target} and {t2.target} "
                     f"have overlapping guards {t1.guard} and {t2.guard}"),
            location=t1.source,
        ))

    if violations:
        logger.info("Automaton is not well-formed", violations=len(violations))
        return ValidationReport(
            valid=False,
            message=f"{len(violations)} well-formedness violation(s)",
            violations=violations,
        )
    return ValidationReport(valid=True, message="Automaton is well-formed")


def reachable_states(m: TimedContractAutomaton) -> Set[str]:
    """忽略守卫的语法可达性"""
    seen = {m.initial}
    queue = deque([m.initial])
    while queue:
        state = queue.popleft()
        for t in m.outgoing(state):
            if t.target not in seen:
                seen.add(t.target)
                queue.append(t.target)
    return seen


def vio(n: Norm, label: ActionLabel, valuation: Mapping) -> bool:
    if n.modality is Modality.PERMISSION:
        return label.attempted and label.over(n.party, n.action) and guard_contains(n.guard, valuation)
    if n.modality is Modality.PROHIBITION:
        return (not label.attempted) and label.over(n.party, n.action) and guard_contains(n.guard, valuation)
    return exceeds(valuation, n.guard)


def sat(n: Norm, label: ActionLabel, valuation: Mapping) -> bool:
    if n.modality is Modality.OBLIGATION:
        return (not label.attempted) and label.over(n.party, n.action) and guard_contains(n.guard, valuation)
    return exceeds(valuation, n.guard)


def active(norms: Iterable[Norm], label: ActionLabel, valuation: Mapping) -> FrozenSet[Norm]:
    """去掉被 (label, v) 满足的规范"""
    return frozenset(n for n in norms if not sat(n, label, valuation))


def violated_norms(norms: Iterable[Norm], label: ActionLabel, valuation: Mapping) -> List[Norm]:
    return [n for n in sorted_norms(norms) if vio(n, label, valuation)]


def obligation_over(n: Norm, label: ActionLabel) -> bool:
    """义务只能被精确的非尝试标签履行"""
    return n.modality is Modality.OBLIGATION and not label.attempted and label.over(n.party, n.action)

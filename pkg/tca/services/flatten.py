"""持久规范到瞬时规范的展平变换"""
import time
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import structlog

from tca.core.config import get_settings
from tca.core.exceptions import FlattenLimitError, PreconditionError, WellFormednessError
from tca.models.contract import (
    ActionLabel, Modality, Norm, TimedContractAutomaton, Transition, norm_ids, sorted_norms,
)
from tca.services.contract import obligation_over, validate_wellformed
from tca.services.zones import (
    Guard, guard_and, guard_any, guard_not, guard_true, time_predecessor,
)

logger = structlog.get_logger(__name__)

NormSet = FrozenSet[Norm]


@dataclass(frozen=True)
class FlatState:
    """展平状态 (q, E, P)，按结构比较"""
    base: str
    ephemeral: NormSet
    persistent: NormSet

    @property
    def norms(self) -> NormSet:
        return self.ephemeral | self.persistent

    @property
    def id(self) -> str:
        return f"{self.base}|E={{{norm_ids(self.ephemeral)}}}|P={{{norm_ids(self.persistent)}}}"


@dataclass
class FlattenedAutomaton:
    """展平自动机以及展平状态ID到 (q, E, P) 的映射"""
    automaton: TimedContractAutomaton
    flat_states: Dict[str, FlatState]
    source: TimedContractAutomaton
    pruned: bool = False
    stats: Dict[str, int] = field(default_factory=dict)

    @property
    def initial(self) -> FlatState:
        return self.flat_states[self.automaton.initial]


@lru_cache(maxsize=200_000)
def tc(n: Norm) -> Guard:
    """履行规范所需的时间条件"""
    if n.modality is Modality.OBLIGATION:
        return n.guard
    # 窗口永久关闭的赋值集合，单时钟上界时即 v > max(guard)
    return guard_not(time_predecessor(n.guard))


def active_alpha(norms: Iterable[Norm], label: ActionLabel) -> List[NormSet]:
    """N 的所有子集，其中必须包含不能被 label 履行的义务"""
    norms = frozenset(norms)
    mandatory = frozenset(
        n for n in norms if n.modality is Modality.OBLIGATION and not obligation_over(n, label)
    )
    optional = sorted_norms(norms - mandatory)
    family = []
    for mask in range(1 << len(optional)):
        chosen = [n for bit, n in enumerate(optional) if mask & (1 << bit)]
        family.append(mandatory | frozenset(chosen))
    return family


def _relevant_label(label: ActionLabel, norms: NormSet) -> Optional[ActionLabel]:
    # T 只通过对 label 的义务依赖于 label
    if any(obligation_over(n, label) for n in norms):
        return label
    return None


@lru_cache(maxsize=200_000)
def _timing_condition(label: Optional[ActionLabel], n_sat: NormSet, n_unsat: NormSet,
                      clocks: Tuple[str, ...]) -> Guard:
    result = guard_true(clocks)
    for n in sorted_norms(n_sat):
        result = guard_and(result, tc(n))
        if result.is_false:
            return result
    retained = [
        tc(n) for n in sorted_norms(n_unsat)
        if n.modality is not Modality.OBLIGATION or (label is not None and obligation_over(n, label))
    ]
    if retained:
        result = guard_and(result, guard_not(guard_any(clocks, retained)))
    return result


def timing_condition_T(label: ActionLabel, n_sat: Iterable[Norm], n_unsat: Iterable[Norm],
                       clocks: Tuple[str, ...]) -> Guard:
    """恰好 n_sat 被履行、n_unsat 保留时的守卫"""
    n_sat = frozenset(n_sat)
    n_unsat = frozenset(n_unsat)
    foreign = [n for n in n_sat if n.modality is Modality.OBLIGATION and not obligation_over(n, label)]
    if foreign:
        raise PreconditionError(
            f"Obligations {[n.id for n in foreign]} cannot be discharged by {label}"
        )
    return _timing_condition(_relevant_label(label, n_sat | n_unsat), n_sat, n_unsat, tuple(clocks))


def _labels(m: TimedContractAutomaton) -> List[ActionLabel]:
    labels = []
    for label in m.alphabet:
        labels.append(label)
        labels.append(label.attempt())
    return labels


class _Builder:
    """工作表构造，只展开经新增迁移可达的展平状态"""

    def __init__(self, m: TimedContractAutomaton, max_states: int):
        self.m = m
        self.max_states = max_states
        self.ids: Dict[FlatState, str] = {}
        self.states: Dict[str, FlatState] = {}
        self.queue: deque = deque()
        self.transitions: List[Transition] = []

    def intern(self, fs: FlatState) -> str:
        existing = self.ids.get(fs)
        if existing is not None:
            return existing
        if len(self.ids) >= self.max_states:
            raise FlattenLimitError(f"Flattening exceeds {self.max_states} flat states")
        state_id = fs.id
        suffix = 1
        while state_id in self.states:
            suffix += 1
            state_id = f"{fs.id}#{suffix}"
        self.ids[fs] = state_id
        self.states[state_id] = fs
        self.queue.append(fs)
        return state_id

    def add(self, source: FlatState, label: ActionLabel, guard: Guard,
            reset: Tuple, target: FlatState) -> None:
        self.transitions.append(Transition(
            source=self.ids[source], label=label, guard=guard, reset=reset, target=self.intern(target),
        ))

    def expand(self, fs: FlatState) -> None:
        m = self.m
        clocks = m.clocks
        q, E, P = fs.base, fs.ephemeral, fs.persistent

        # 显式迁移
        for t in m.outgoing(q):
            for kept in active_alpha(P, t.label):
                guard = guard_and(t.guard, timing_condition_T(t.label, P - kept, kept, clocks))
                target = FlatState(t.target, m.eph_of(t.target), kept | m.pers_of(t.target))
                self.add(fs, t.label, guard, t.reset, target)

        # 隐式自环(不重新激活 eph(q))
        for label in _labels(m):
            explicit = [t.guard for t in m.outgoing_on(q, label)]
            stay = guard_not(guard_any(clocks, explicit)) if explicit else guard_true(clocks)
            for kept_e in active_alpha(E, label):
                guard_e = guard_and(stay, timing_condition_T(label, E - kept_e, kept_e, clocks))
                for kept_p in active_alpha(P, label):
                    guard = guard_and(guard_e, timing_condition_T(label, P - kept_p, kept_p, clocks))
                    self.add(fs, label, guard, (), FlatState(q, kept_e, kept_p))


def _assemble(m: TimedContractAutomaton, initial_id: str, states: Dict[str, FlatState],
              transitions: List[Transition]) -> TimedContractAutomaton:
    return TimedContractAutomaton(
        states=tuple(states),
        initial=initial_id,
        transitions=tuple(transitions),
        pers={},
        eph={sid: fs.norms for sid, fs in states.items() if fs.norms},
        clocks=m.clocks,
        parties=m.parties,
        actions=m.actions,
        kind="flattened",
    )


def flatten(m: TimedContractAutomaton, max_states: Optional[int] = None) -> FlattenedAutomaton:
    """构造只含瞬时规范的展平自动机，初始状态为 (q0, eph(q0), pers(q0))"""
    report = validate_wellformed(m)
    if not report.valid:
        raise WellFormednessError(report.message, report)
    if m.kind == "flattened":
        raise WellFormednessError("Automaton is already flattened")

    started = time.perf_counter()
    builder = _Builder(m, max_states or get_settings().MAX_FLAT_STATES)
    initial = FlatState(m.initial, m.eph_of(m.initial), m.pers_of(m.initial))
    initial_id = builder.intern(initial)
    while builder.queue:
        builder.expand(builder.queue.popleft())

    flat = FlattenedAutomaton(
        automaton=_assemble(m, initial_id, builder.states, builder.transitions),
        flat_states=dict(builder.states),
        source=m,
        stats={"states": len(builder.states), "transitions": len(builder.transitions)},
    )
    logger.info("Flattened automaton", states=len(builder.states),
                transitions=len(builder.transitions),
                elapsed=round(time.perf_counter() - started, 4))
    return flat


@lru_cache(maxsize=200_000)
def non_violation(label: ActionLabel, norms: NormSet, clocks: Tuple[str, ...]) -> Guard:
    """在 label 事件上 norms 中没有规范被违反的赋值集合"""
    result = guard_true(clocks)
    for n in sorted_norms(norms):
        if n.modality is Modality.OBLIGATION:
            result = guard_and(result, time_predecessor(n.guard))
        elif label.over(n.party, n.action) and (
            (n.modality is Modality.PROHIBITION and not label.attempted)
            or (n.modality is Modality.PERMISSION and label.attempted)
        ):
            result = guard_and(result, guard_not(n.guard))
        if result.is_false:
            break
    return result


def firable(flat: FlattenedAutomaton, t: Transition) -> Guard:
    """迁移在源状态规范不被违反时可触发的区域"""
    clocks = flat.automaton.clocks
    norms = flat.flat_states[t.source].norms
    return guard_and(t.guard, non_violation(t.label, frozenset(norms), clocks))


def prune_unsat(flat: FlattenedAutomaton) -> FlattenedAutomaton:
    """剪除不可满足(或必然伴随违反)的迁移以及由此不可达的状态"""
    m = flat.automaton
    kept = [t for t in m.transitions if not firable(flat, t).is_false]

    outgoing: Dict[str, List[Transition]] = {}
    for t in kept:
        outgoing.setdefault(t.source, []).append(t)
    reachable = {m.initial}
    queue = deque([m.initial])
    while queue:
        sid = queue.popleft()
        for t in outgoing.get(sid, []):
            if t.target not in reachable:
                reachable.add(t.target)
                queue.append(t.target)

    states = {sid: fs for sid, fs in flat.flat_states.items() if sid in reachable}
    transitions = [t for t in kept if t.source in reachable]
    stats = dict(flat.stats)
    stats.update({
        "pruned_states": len(flat.flat_states) - len(states),
        "pruned_transitions": len(m.transitions) - len(transitions),
        "states_after_pruning": len(states),
        "transitions_after_pruning": len(transitions),
    })
    logger.info("Pruned flattening", removed_states=stats["pruned_states"],
                removed_transitions=stats["pruned_transitions"])
    return FlattenedAutomaton(
        automaton=_assemble(flat.source, m.initial, states, transitions),
        flat_states=states,
        source=flat.source,
        pruned=True,
        stats=stats,
    )


def check_determinism(m) -> bool:
    """同一状态同一标签上任意两条迁移的守卫不相交(或目标与重置相同)"""
    automaton = m.automaton if isinstance(m, FlattenedAutomaton) else m
    groups: Dict[Tuple[str, ActionLabel], List[Transition]] = {}
    for t in automaton.transitions:
        if t.guard.is_false:
            continue
        groups.setdefault((t.source, t.label), []).append(t)
    for ts in groups.values():
        for t1, t2 in combinations(ts, 2):
            if (t1.target, t1.reset) == (t2.target, t2.reset):
                continue
            if not guard_and(t1.guard, t2.guard).is_false:
                return False
    return True


def migrated_states(flat: FlattenedAutomaton) -> List[FlatState]:
    """标注与原状态不同的展平状态"""
    source = flat.source
    changed = []
    for fs in flat.flat_states.values():
        original = source.pers_of(fs.base) | source.eph_of(fs.base)
        if fs.norms != original:
            changed.append(fs)
    return sorted(changed, key=lambda fs: fs.id)


def subset_variant_bound(m: TimedContractAutomaton) -> int:
    """可达展平状态数上界：各状态 2^|eph(q)| · 2^|全部持久规范| 之和"""
    persistent = len(m.all_persistent())
    return sum((1 << len(m.eph_of(q))) * (1 << persistent) for q in m.states)

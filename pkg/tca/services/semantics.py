from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Mapping, Optional, Tuple

from tca.core.exceptions import InternalError, TraceError
from tca.core.logging import get_run_logger
from tca.models.contract import (
    Modality, Norm, TimedContractAutomaton, TimedEvent, TimedTrace, sorted_norms,
)
from tca.services.contract import active, violated_norms
from tca.services.zones import (
    GLOBAL_CLOCK, ClockValuation, guard_contains, valuation_override, valuation_shift,
)

NormPair = Tuple[Norm, Norm]


@dataclass(frozen=True)
class Configuration:
    """(q, v, P, E)"""
    state: str
    valuation: ClockValuation
    persistent: FrozenSet[Norm]
    ephemeral: FrozenSet[Norm]

    @property
    def norms(self) -> FrozenSet[Norm]:
        return self.persistent | self.ephemeral

    @property
    def now(self):
        return self.valuation[GLOBAL_CLOCK]


@dataclass(frozen=True)
class StepOutcome:
    """单步结果：后继配置或 ⊥(违反)，以及后继配置上的冲突见证"""
    event: TimedEvent
    configuration: Optional[Configuration] = None
    violated: Tuple[Norm, ...] = ()
    conflict: Optional[NormPair] = None

    @property
    def is_violation(self) -> bool:
        return self.configuration is None


@dataclass
class RunReport:
    initial: Configuration
    initial_conflict: Optional[NormPair]
    outcomes: List[StepOutcome] = field(default_factory=list)

    @property
    def violated(self) -> bool:
        return bool(self.outcomes) and self.outcomes[-1].is_violation

    @property
    def conflicts(self) -> List[int]:
        """出现冲突的步序号，-1 表示初始配置"""
        flagged = [-1] if self.initial_conflict else []
        flagged.extend(i for i, o in enumerate(self.outcomes) if o.conflict is not None)
        return flagged

    @property
    def final(self) -> Optional[Configuration]:
        if not self.outcomes:
            return self.initial
        return self.outcomes[-1].configuration


def initial_configuration(m: TimedContractAutomaton) -> Configuration:
    """初始配置：初始状态、全零赋值及其规范"""
    return Configuration(
        state=m.initial,
        valuation=ClockValuation.zero(m.clocks),
        persistent=m.pers_of(m.initial),
        ephemeral=m.eph_of(m.initial),
    )


def _delay(c: Configuration, e: TimedEvent):
    delta = e.timestamp - c.now
    if delta < 0:
        raise TraceError(f"Event {e} happens before the current time {c.now}")
    return delta


def deontic_step(c: Configuration, e: TimedEvent) -> StepOutcome:
    """规范步：检查违反，否则移除已满足的规范(赋值不前移)"""
    shifted = valuation_shift(c.valuation, _delay(c, e))
    violated = violated_norms(c.norms, e.label, shifted)
    if violated:
        return StepOutcome(event=e, violated=tuple(violated))
    return StepOutcome(
        event=e,
        configuration=Configuration(
            state=c.state,
            valuation=c.valuation,
            persistent=active(c.persistent, e.label, shifted),
            ephemeral=active(c.ephemeral, e.label, shifted),
        ),
    )


def temporal_step(m: TimedContractAutomaton, c: Configuration, e: TimedEvent) -> Configuration:
    """时间步：触发显式迁移，否则停留在原状态"""
    shifted = valuation_shift(c.valuation, _delay(c, e))
    firing = [t for t in m.outgoing_on(c.state, e.label) if guard_contains(t.guard, shifted)]
    if not firing:
        return Configuration(c.state, shifted, c.persistent, c.ephemeral)

    chosen = firing[0]
    for other in firing[1:]:
        if (other.target, other.reset) != (chosen.target, chosen.reset):
            raise InternalError(
                f"Nondeterministic firing from {c.state} on {e.label}: {chosen.target} and {other.target}"
            )
    return Configuration(
        state=chosen.target,
        valuation=valuation_override(shifted, chosen.reset_map),
        persistent=c.persistent | m.pers_of(chosen.target),
        ephemeral=m.eph_of(chosen.target),
    )


def conflict_at(norms: Iterable[Norm], valuation: Mapping) -> Optional[NormPair]:
    """同一 p:a 上同时生效的 (O,F) 或 (P,F)"""
    ordered = sorted_norms(norms)
    prohibitions = [n for n in ordered if n.modality is Modality.PROHIBITION]
    if not prohibitions:
        return None
    for first in ordered:
        if first.modality is Modality.PROHIBITION:
            continue
        for second in prohibitions:
            if (first.party, first.action) != (second.party, second.action):
                continue
            if guard_contains(first.guard, valuation) and guard_contains(second.guard, valuation):
                return first, second
    return None


def step(m: TimedContractAutomaton, c: Configuration, e: TimedEvent) -> StepOutcome:
    """先规范步再时间步，最后在后继配置上检查冲突"""
    deontic = deontic_step(c, e)
    if deontic.is_violation:
        return deontic
    after = temporal_step(m, deontic.configuration, e)
    return StepOutcome(
        event=e,
        configuration=after,
        conflict=conflict_at(after.norms, after.valuation),
    )


def run_trace(m: TimedContractAutomaton, trace: TimedTrace, run_id: str = "run") -> RunReport:
    """从初始配置执行轨迹，遇到第一次违反即停止"""
    run_logger = get_run_logger(run_id)
    known = set(m.alphabet)
    start = initial_configuration(m)
    report = RunReport(initial=start, initial_conflict=conflict_at(start.norms, start.valuation))

    current = start
    for index, event in enumerate(trace.events):
        if event.label.base not in known:
            run_logger.warning("Event outside the declared alphabet", index=index, trace_event=str(event))
        outcome = step(m, current, event)
        report.outcomes.append(outcome)
        if outcome.is_violation:
            run_logger.info("Run violated", index=index, trace_event=str(event),
                            norms=[n.id for n in outcome.violated])
            break
        if outcome.conflict is not None:
            run_logger.info("Conflicting configuration", index=index, state=outcome.configuration.state,
                            pair=[n.id for n in outcome.conflict])
        current = outcome.configuration

    run_logger.debug("Run finished", events=len(report.outcomes), violated=report.violated)
    return report

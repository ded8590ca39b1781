from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Tuple

from tca.core.exceptions import TraceError
from tca.services.zones import GLOBAL_CLOCK, Guard, format_rational


class Modality(str, Enum):
    OBLIGATION = "O"
    PERMISSION = "P"
    PROHIBITION = "F"


@dataclass(frozen=True, order=True)
class ActionLabel:
    """参与方:动作 标签；attempted 表示尝试动作"""
    party: str
    action: str
    attempted: bool = False

    @property
    def base(self) -> "ActionLabel":
        return ActionLabel(self.party, self.action) if self.attempted else self

    def attempt(self) -> "ActionLabel":
        return ActionLabel(self.party, self.action, True)

    def over(self, party: str, action: str) -> bool:
        return self.party == party and self.action == action

    def __str__(self) -> str:
        return f"{self.party}:{'~' if self.attempted else ''}{self.action}"


@dataclass(frozen=True)
class TimedEvent:
    label: ActionLabel
    timestamp: Fraction

    def __str__(self) -> str:
        return f"{self.label}@{format_rational(self.timestamp)}"


@dataclass(frozen=True)
class TimedTrace:
    events: Tuple[TimedEvent, ...] = ()

    def __post_init__(self):
        previous = None
        for index, event in enumerate(self.events):
            if event.timestamp < 0:
                raise TraceError(f"Event {index} has negative timestamp {event.timestamp}")
            if previous is not None and event.timestamp <= previous:
                raise TraceError(
                    f"Timestamps must be strictly increasing: event {index} at "
                    f"{format_rational(event.timestamp)} after {format_rational(previous)}"
                )
            previous = event.timestamp

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)


@dataclass(frozen=True)
class Norm:
    """规范：模态 + 参与方 + 动作 + 时间窗口；按结构比较，id仅用于报告"""
    modality: Modality
    party: str
    action: str
    guard: Guard
    id: str = field(default="", compare=False)

    def sort_key(self) -> tuple:
        return (self.id, self.modality.value, self.party, self.action,
                tuple(z.sort_key() for z in self.guard.zones))

    def __str__(self) -> str:
        return f"{self.modality.value}({self.party}:{self.action} | {self.guard})"


def sorted_norms(norms: Iterable[Norm]) -> List[Norm]:
    return sorted(norms, key=Norm.sort_key)


def norm_ids(norms: Iterable[Norm]) -> str:
    return ",".join(n.id for n in sorted_norms(norms))


@dataclass(frozen=True)
class Transition:
    source: str
    label: ActionLabel
    guard: Guard
    reset: Tuple[Tuple[str, Fraction], ...]
    target: str

    @property
    def reset_map(self) -> Dict[str, Fraction]:
        return dict(self.reset)

    def __str__(self) -> str:
        text = f"{self.label} | {self.guard}"
        if self.reset:
            text += " ↦ " + ", ".join(f"reset({c})" for c, _ in self.reset)
        return text


@dataclass(frozen=True)
class TimedContractAutomaton:
    """合约自动机：状态、迁移与各状态的持久/瞬时规范，附带时钟集合与声明的字母表"""
    states: Tuple[str, ...]
    initial: str
    transitions: Tuple[Transition, ...]
    pers: Mapping[str, FrozenSet[Norm]]
    eph: Mapping[str, FrozenSet[Norm]]
    clocks: Tuple[str, ...]
    parties: Tuple[str, ...]
    actions: Tuple[str, ...]
    kind: str = "contract"

    def pers_of(self, state: str) -> FrozenSet[Norm]:
        return self.pers.get(state, frozenset())

    def eph_of(self, state: str) -> FrozenSet[Norm]:
        return self.eph.get(state, frozenset())

    @property
    def user_clocks(self) -> Tuple[str, ...]:
        return tuple(c for c in self.clocks if c != GLOBAL_CLOCK)

    @cached_property
    def alphabet(self) -> Tuple[ActionLabel, ...]:
        return tuple(ActionLabel(p, a) for p in self.parties for a in self.actions)

    @cached_property
    def _outgoing(self) -> Dict[str, List[Transition]]:
        index: Dict[str, List[Transition]] = {s: [] for s in self.states}
        for t in self.transitions:
            index.setdefault(t.source, []).append(t)
        return index

    @cached_property
    def _outgoing_by_label(self) -> Dict[Tuple[str, ActionLabel], List[Transition]]:
        index: Dict[Tuple[str, ActionLabel], List[Transition]] = {}
        for t in self.transitions:
            index.setdefault((t.source, t.label), []).append(t)
        return index

    def outgoing(self, state: str) -> List[Transition]:
        return self._outgoing.get(state, [])

    def outgoing_on(self, state: str, label: ActionLabel) -> List[Transition]:
        return self._outgoing_by_label.get((state, label), [])

    @cached_property
    def norms(self) -> FrozenSet[Norm]:
        collected = set()
        for mapping in (self.pers, self.eph):
            for ns in mapping.values():
                collected.update(ns)
        return frozenset(collected)

    def all_persistent(self) -> FrozenSet[Norm]:
        collected = set()
        for ns in self.pers.values():
            collected.update(ns)
        return frozenset(collected)

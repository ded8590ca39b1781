"""随机实例生成与差分检查：展平性质、逐步对应、分析可靠性以及区域代数"""
import random
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import structlog
from pydantic import BaseModel, Field

from tca.core.config import get_settings
from tca.core.exceptions import TCAError
from tca.models.contract import (
    ActionLabel, Modality, Norm, TimedContractAutomaton, TimedEvent, TimedTrace, Transition,
)
from tca.services.analysis import analyze
from tca.services.flatten import FlattenedAutomaton, flatten
from tca.services.semantics import initial_configuration, run_trace, step, conflict_at
from tca.services.zones import (
    COMPARATORS, GLOBAL_CLOCK, ClockValuation, Guard, guard_from_constraints, zone_constraints,
)

logger = structlog.get_logger(__name__)

RawGuard = List[List[Tuple[str, str, str]]]

HALF = Fraction(1, 2)


class GenParams(BaseModel):
    """随机生成参数"""
    seed: int = Field(0, ge=0, description="随机种子")
    max_states: int = Field(5, ge=1, description="最大状态数")
    max_clocks: int = Field(2, ge=1, description="最大用户时钟数(不含gamma)")
    max_norms: int = Field(4, ge=0, description="自动机中的最大规范数")
    max_norms_per_state: int = Field(2, ge=1, description="单个状态上的最大规范数")
    max_constant: int = Field(10, ge=1, description="守卫常数上界")
    alphabet_size: int = Field(4, ge=1, description="参与方×动作 的规模")
    trace_length: int = Field(8, ge=0, description="最大轨迹长度")
    max_timestamp: int = Field(20, ge=1, description="最大时间戳")

    @classmethod
    def from_settings(cls, seed: int = 0, **overrides) -> "GenParams":
        settings = get_settings()
        values = {
            "seed": seed,
            "max_states": settings.GEN_MAX_STATES,
            "max_clocks": settings.GEN_MAX_CLOCKS,
            "max_norms": settings.GEN_MAX_NORMS,
            "max_constant": settings.GEN_MAX_CONSTANT,
            "alphabet_size": settings.GEN_ALPHABET_SIZE,
            "trace_length": settings.GEN_TRACE_LENGTH,
            "max_timestamp": settings.GEN_MAX_TIMESTAMP,
        }
        values.update(overrides)
        return cls(**values)

    def with_seed(self, seed: int) -> "GenParams":
        return self.model_copy(update={"seed": seed})


def _alphabet(size: int) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
    parties = ("A", "B") if size >= 2 else ("A",)
    actions = tuple(f"a{i}" for i in range(max(1, size // len(parties))))
    return parties, actions


def gen_constraint(rng: random.Random, clocks: Sequence[str], max_constant: int) -> Tuple[str, str, str]:
    if len(clocks) > 1 and rng.random() < 0.15:
        x, y = rng.sample(list(clocks), 2)
        return (f"{x}-{y}", rng.choice(COMPARATORS), str(rng.randint(-max_constant, max_constant)))
    return (rng.choice(list(clocks)), rng.choice(COMPARATORS), str(rng.randint(0, max_constant)))


def gen_raw_guard(rng: random.Random, clocks: Sequence[str], max_constant: int,
                  max_zones: int = 2, max_constraints: int = 2) -> RawGuard:
    """区域列表形式的随机守卫"""
    if rng.random() < 0.15:
        return [[]]
    zones = 1 if max_zones < 2 or rng.random() < 0.8 else rng.randint(2, max_zones)
    return [
        [gen_constraint(rng, clocks, max_constant) for _ in range(rng.randint(1, max_constraints))]
        for _ in range(zones)
    ]


def gen_norm(rng: random.Random, clocks: Sequence[str], labels: Sequence[ActionLabel],
             max_constant: int, norm_id: str) -> Norm:
    label = rng.choice(list(labels))
    return Norm(
        modality=rng.choice(list(Modality)),
        party=label.party,
        action=label.action,
        guard=guard_from_constraints(clocks, gen_raw_guard(rng, clocks, max_constant)),
        id=norm_id,
    )


def _partition(rng: random.Random, clock: str, pieces: int, max_constant: int) -> List[List[tuple]]:
    # 在单个时钟上把 [0,∞) 切成互不相交的区间
    cuts = sorted(rng.sample(range(1, max_constant + 1), min(pieces - 1, max_constant)))
    closed_below = [rng.random() < 0.5 for _ in cuts]
    intervals = []
    for i in range(len(cuts) + 1):
        zone = []
        if i > 0:
            zone.append((clock, ">" if closed_below[i - 1] else ">=", str(cuts[i - 1])))
        if i < len(cuts):
            zone.append((clock, "<=" if closed_below[i] else "<", str(cuts[i])))
        intervals.append(zone)
    return intervals


def gen_automaton(p: GenParams) -> TimedContractAutomaton:
    """可由种子复现的良构自动机；同标签兄弟迁移的守卫划分一个区间"""
    rng = random.Random(p.seed)
    states = tuple(f"q{i}" for i in range(rng.randint(1, p.max_states)))
    user_clocks = tuple(f"c{i}" for i in range(1, rng.randint(1, p.max_clocks) + 1))
    clocks = (GLOBAL_CLOCK,) + user_clocks
    parties, actions = _alphabet(p.alphabet_size)
    labels = [ActionLabel(party, action) for party in parties for action in actions]

    transitions = []
    for q in states:
        for label in rng.sample(labels, rng.randint(0, min(3, len(labels)))):
            pieces = rng.randint(1, 3)
            if pieces == 1:
                zones = gen_raw_guard(rng, clocks, p.max_constant, max_zones=1)
            else:
                zones = _partition(rng, rng.choice(clocks), pieces, p.max_constant)
                if len(zones) > 1 and rng.random() < 0.3:
                    zones.pop(rng.randrange(len(zones)))
            for zone in zones:
                if zone and rng.random() < 0.3:
                    zone = zone + [gen_constraint(rng, clocks, p.max_constant)]
                reset = tuple((c, Fraction(0)) for c in user_clocks if rng.random() < 0.3)
                transitions.append(Transition(
                    source=q,
                    label=label,
                    guard=guard_from_constraints(clocks, [zone]),
                    reset=reset,
                    target=rng.choice(states),
                ))

    pers: Dict[str, set] = {}
    eph: Dict[str, set] = {}
    per_state: Dict[str, int] = {}
    for index in range(rng.randint(0, p.max_norms)):
        q = rng.choice(states)
        if per_state.get(q, 0) >= p.max_norms_per_state:
            continue
        per_state[q] = per_state.get(q, 0) + 1
        norm = gen_norm(rng, clocks, labels, p.max_constant, f"n{index}")
        (pers if rng.random() < 0.5 else eph).setdefault(q, set()).add(norm)

    return TimedContractAutomaton(
        states=states,
        initial=states[0],
        transitions=tuple(transitions),
        pers={q: frozenset(ns) for q, ns in pers.items()},
        eph={q: frozenset(ns) for q, ns in eph.items()},
        clocks=clocks,
        parties=parties,
        actions=actions,
    )


def gen_trace(m: TimedContractAutomaton, p: GenParams, index: int = 0) -> TimedTrace:
    """字母表(含尝试动作)上的随机轨迹，时间戳取半整数网格且严格递增"""
    rng = random.Random(p.seed * 1_000_003 + index)
    grid = 2 * p.max_timestamp + 1
    length = min(rng.randint(0, p.trace_length), grid)
    stamps = sorted(rng.sample(range(grid), length))
    labels = list(m.alphabet)
    events = []
    for stamp in stamps:
        label = rng.choice(labels)
        if rng.random() < 0.2:
            label = label.attempt()
        events.append(TimedEvent(label, Fraction(stamp, 2)))
    return TimedTrace(tuple(events))


def random_valuation(rng: random.Random, clocks: Sequence[str], max_constant: int,
                     step: Fraction = HALF) -> ClockValuation:
    """网格上的随机赋值，覆盖 [0, max_constant+1]"""
    slots = int((max_constant + 1) / step)
    return ClockValuation({c: rng.randint(0, slots) * step for c in clocks})


def _lhs_value(lhs: str, v: Mapping[str, Fraction]) -> Tuple[Fraction, bool]:
    # 返回 (当前值, 是否随时间推进)
    if "-" in lhs:
        x, y = (part.strip() for part in lhs.split("-", 1))
        return v[x] - v[y], False
    return v[lhs.strip()], True


def _holds(value: Fraction, op: str, constant: Fraction) -> bool:
    return {
        "<": value < constant,
        "<=": value <= constant,
        "=": value == constant,
        ">=": value >= constant,
        ">": value > constant,
    }[op]


def eval_constraints(zones: Sequence[Sequence[Sequence]], v: Mapping[str, Fraction]) -> bool:
    """直接对约束列表求值，不经过 DBM"""
    for zone in zones:
        ok = True
        for lhs, op, constant in zone:
            value, _ = _lhs_value(lhs, v)
            if not _holds(value, op, Fraction(constant)):
                ok = False
                break
        if ok and all(x >= 0 for x in v.values()):
            return True
    return False


def delta_interval_constraints(zones: Sequence[Sequence[Sequence]],
                               v: Mapping[str, Fraction]) -> Optional[Fraction]:
    """逐约束求解 δ 区间，区域内取交、区域间取并；返回最小见证 δ 或 None"""
    best = None
    for zone in zones:
        lo, lo_strict, hi, hi_strict = Fraction(0), False, None, False
        feasible = True
        for lhs, op, constant in zone:
            value, moves = _lhs_value(lhs, v)
            constant = Fraction(constant)
            if not moves:
                if not _holds(value, op, constant):
                    feasible = False
                    break
                continue
            edge = constant - value
            if op in ("<", "<=", "="):
                strict = op == "<"
                if hi is None or edge < hi or (edge == hi and strict):
                    hi, hi_strict = edge, strict
            if op in (">", ">=", "="):
                strict = op == ">"
                if edge > lo or (edge == lo and strict):
                    lo, lo_strict = edge, strict
        if not feasible:
            continue
        if hi is not None and (hi < lo or (hi == lo and (lo_strict or hi_strict))):
            continue
        if not lo_strict:
            witness = lo
        elif hi is None:
            witness = lo + 1
        else:
            witness = (lo + hi) / 2
        if best is None or witness < best:
            best = witness
    return best


def delta_interval_oracle(g: Guard, v: Mapping[str, Fraction]) -> Optional[Fraction]:
    """time_predecessor/exceeds 的独立判定：存在 δ≥0 使 v+δ ∈ g 时返回 δ"""
    return delta_interval_constraints([zone_constraints(z) for z in g.zones], v)


def lockstep_mismatch(m: TimedContractAutomaton, trace: TimedTrace,
                      flat: Optional[FlattenedAutomaton] = None) -> Optional[str]:
    """原自动机与展平自动机同步执行，返回第一处不对应的描述"""
    flat = flat or flatten(m)
    plus = flat.automaton

    def correspond(c, c_plus) -> Optional[str]:
        fs = flat.flat_states.get(c_plus.state)
        if fs is None:
            return f"unknown flat state {c_plus.state}"
        if (fs.base, fs.ephemeral, fs.persistent) != (c.state, c.ephemeral, c.persistent):
            return f"flat state {c_plus.state} does not match ({c.state}, E, P)"
        if c.valuation != c_plus.valuation:
            return f"valuations differ: {c.valuation!r} vs {c_plus.valuation!r}"
        if c_plus.persistent:
            return "flattened configuration carries persistent norms"
        if c_plus.ephemeral != c.norms:
            return "flattened ephemeral set differs from E ∪ P"
        return None

    c, c_plus = initial_configuration(m), initial_configuration(plus)
    problem = correspond(c, c_plus)
    if problem:
        return f"initial: {problem}"
    if (conflict_at(c.norms, c.valuation) is None) != (conflict_at(c_plus.norms, c_plus.valuation) is None):
        return "initial: conflict flags differ"

    for index, event in enumerate(trace.events):
        try:
            outcome = step(m, c, event)
            outcome_plus = step(plus, c_plus, event)
        except TCAError as e:
            return f"step {index} ({event}): {e}"
        if outcome.is_violation != outcome_plus.is_violation:
            return f"step {index} ({event}): violation in only one automaton"
        if outcome.is_violation:
            return None
        c, c_plus = outcome.configuration, outcome_plus.configuration
        problem = correspond(c, c_plus)
        if problem:
            return f"step {index} ({event}): {problem}"
        if (outcome.conflict is None) != (outcome_plus.conflict is None):
            return f"step {index} ({event}): conflict flags differ"
    return None


def check_theorem1(m: TimedContractAutomaton, trace: TimedTrace,
                   flat: Optional[FlattenedAutomaton] = None) -> bool:
    return lockstep_mismatch(m, trace, flat) is None


def soundness_sample(m: TimedContractAutomaton, num_traces: int, params: GenParams):
    """分析结论与冲突标记轨迹数；结论非 ConflictFree 时不运行轨迹"""
    verdict = analyze(m)
    if not verdict.conflict_free:
        return verdict, 0
    flagged = 0
    for index in range(num_traces):
        report = run_trace(m, gen_trace(m, params, index), run_id=f"{params.seed}:{index}")
        if report.conflicts:
            flagged += 1
    return verdict, flagged


def check_soundness(m: TimedContractAutomaton, num_traces: int, params: Optional[GenParams] = None) -> bool:
    _, flagged = soundness_sample(m, num_traces, params or GenParams.from_settings())
    return flagged == 0

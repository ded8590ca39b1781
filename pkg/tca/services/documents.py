"""自动机与轨迹的 JSON 读写、报告转换以及 DOT 导出"""
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Sequence, Union

import structlog
from pydantic import ValidationError

from tca.core.exceptions import DocumentError, ZoneError
from tca.models.contract import (
    ActionLabel, Norm, TimedContractAutomaton, TimedEvent, TimedTrace, Transition, sorted_norms,
)
from tca.models.document import (
    AutomatonDocument, ConfigurationReport, NormSpec, RunReportSchema, StateSpec, StepReport,
    TraceDocument, TraceEventSpec, TransitionSpec,
)
from tca.services.zones import (
    GLOBAL_CLOCK, Guard, format_rational, guard_constraints, guard_from_constraints, parse_rational,
)

logger = structlog.get_logger(__name__)

PathLike = Union[str, Path]


def _json_path(loc: Sequence[Any]) -> str:
    path = "$"
    for part in loc:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def _load_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(e.msg, line=e.lineno, column=e.colno)


def _schema_error(e: ValidationError) -> DocumentError:
    first = e.errors()[0]
    return DocumentError(first["msg"], path=_json_path(first["loc"]))


def _read(path: PathLike) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DocumentError(f"Cannot read {path}: {e.strerror or e}")


def _guard(clocks, spec, path: str) -> Guard:
    try:
        return guard_from_constraints(clocks, spec)
    except ZoneError as e:
        raise DocumentError(str(e), path=path)


def _norms(clocks, state: str, where: str, specs: List[NormSpec]) -> FrozenSet[Norm]:
    norms = []
    for index, spec in enumerate(specs):
        norms.append(Norm(
            modality=spec.modality,
            party=spec.party,
            action=spec.action,
            guard=_guard(clocks, spec.guard, f"$.states[{state}].{where}[{index}].guard"),
            id=spec.id or f"{state}.{where}{index}",
        ))
    return frozenset(norms)


def document_to_automaton(doc: AutomatonDocument) -> TimedContractAutomaton:
    """文档模型到自动机；全局时钟总在首位"""
    clocks = (GLOBAL_CLOCK,) + tuple(dict.fromkeys(c for c in doc.clocks if c != GLOBAL_CLOCK))

    states: List[str] = []
    pers: Dict[str, FrozenSet[Norm]] = {}
    eph: Dict[str, FrozenSet[Norm]] = {}
    for spec in doc.states:
        if spec.id in states:
            raise DocumentError(f"Duplicate state id {spec.id}", path=f"$.states[{len(states)}].id")
        states.append(spec.id)
        p = _norms(clocks, spec.id, "pers", spec.pers)
        e = _norms(clocks, spec.id, "eph", spec.eph)
        if p:
            pers[spec.id] = p
        if e:
            eph[spec.id] = e

    transitions = []
    for index, spec in enumerate(doc.transitions):
        transitions.append(Transition(
            source=spec.source,
            label=ActionLabel(spec.party, spec.action, spec.attempted),
            guard=_guard(clocks, spec.guard, f"$.transitions[{index}].guard"),
            reset=tuple((c, Fraction(0)) for c in dict.fromkeys(spec.reset)),
            target=spec.target,
        ))

    return TimedContractAutomaton(
        states=tuple(states),
        initial=doc.initial,
        transitions=tuple(transitions),
        pers=pers,
        eph=eph,
        clocks=clocks,
        parties=tuple(doc.parties),
        actions=tuple(doc.actions),
        kind=doc.kind,
    )


def parse_automaton(text: str) -> TimedContractAutomaton:
    data = _load_json(text)
    try:
        doc = AutomatonDocument.model_validate(data)
    except ValidationError as e:
        raise _schema_error(e)
    return document_to_automaton(doc)


def load_automaton(path: PathLike) -> TimedContractAutomaton:
    """从文件读取自动机"""
    m = parse_automaton(_read(path))
    logger.debug("Loaded automaton", path=str(path), states=len(m.states),
                 transitions=len(m.transitions))
    return m


def guard_to_spec(g: Guard) -> List[List[tuple]]:
    return [[(lhs, op, format_rational(value)) for lhs, op, value in zone]
            for zone in guard_constraints(g)]


def _norm_spec(n: Norm) -> NormSpec:
    return NormSpec(id=n.id, modality=n.modality, party=n.party, action=n.action,
                    guard=guard_to_spec(n.guard))


def automaton_to_document(m: TimedContractAutomaton) -> AutomatonDocument:
    return AutomatonDocument(
        version="1",
        kind=m.kind,
        clocks=list(m.user_clocks),
        parties=list(m.parties),
        actions=list(m.actions),
        initial=m.initial,
        states=[
            StateSpec(
                id=q,
                pers=[_norm_spec(n) for n in sorted_norms(m.pers_of(q))],
                eph=[_norm_spec(n) for n in sorted_norms(m.eph_of(q))],
            )
            for q in m.states
        ],
        transitions=[
            TransitionSpec(
                source=t.source,
                party=t.label.party,
                action=t.label.action,
                attempted=t.label.attempted,
                guard=guard_to_spec(t.guard),
                reset=[c for c, _ in t.reset],
                target=t.target,
            )
            for t in m.transitions
        ],
    )


def dump_automaton(m: TimedContractAutomaton) -> str:
    doc = automaton_to_document(m)
    return json.dumps(doc.model_dump(mode="json"), indent=2, ensure_ascii=False) + "\n"


def parse_trace(text: str) -> TimedTrace:
    data = _load_json(text)
    try:
        doc = TraceDocument.model_validate(data)
    except ValidationError as e:
        raise _schema_error(e)
    events = []
    for index, spec in enumerate(doc.root):
        try:
            at = parse_rational(spec.at)
        except ZoneError as e:
            raise DocumentError(str(e), path=f"$[{index}].at")
        events.append(TimedEvent(ActionLabel(spec.party, spec.action, spec.attempted), at))
    return TimedTrace(tuple(events))


def load_trace(path: PathLike) -> TimedTrace:
    return parse_trace(_read(path))


def trace_to_document(trace: TimedTrace) -> TraceDocument:
    return TraceDocument([
        TraceEventSpec(party=e.label.party, action=e.label.action,
                       attempted=e.label.attempted, at=format_rational(e.timestamp))
        for e in trace.events
    ])


def configuration_to_report(c) -> ConfigurationReport:
    return ConfigurationReport(
        state=c.state,
        valuation=c.valuation.to_dict(),
        persistent=[n.id for n in sorted_norms(c.persistent)],
        ephemeral=[n.id for n in sorted_norms(c.ephemeral)],
    )


def _pair_ids(pair) -> Optional[tuple]:
    return None if pair is None else (pair[0].id, pair[1].id)


def run_report_to_schema(report) -> RunReportSchema:
    steps = []
    for index, outcome in enumerate(report.outcomes):
        steps.append(StepReport(
            index=index,
            event=str(outcome.event),
            configuration=None if outcome.is_violation else configuration_to_report(outcome.configuration),
            violated=[n.id for n in outcome.violated] if outcome.is_violation else None,
            conflict=_pair_ids(outcome.conflict),
        ))
    return RunReportSchema(
        initial=configuration_to_report(report.initial),
        initial_conflict=_pair_ids(report.initial_conflict),
        steps=steps,
        violated=report.violated,
        conflicts=report.conflicts,
    )


def _gvquote(s: str) -> str:
    return '"{}"'.format(s.replace("\\", "\\\\").replace('"', r'\"').replace("\n", r"\n"))


def _norm_line(n: Norm) -> str:
    text = f"{n.modality.value} {n.party}:{n.action}"
    if not n.guard.is_true:
        text += f" [{n.guard}]"
    return text


def export_dot(m: TimedContractAutomaton) -> Iterator[str]:
    """以可迭代字符串形式生成 DOT 图，节点按声明顺序输出"""
    yield "digraph {\n"
    yield "  rankdir=LR;\n"
    yield '  __start [shape=point label=""];\n'
    for q in m.states:
        lines = [q]
        lines.extend(f"pers: {_norm_line(n)}" for n in sorted_norms(m.pers_of(q)))
        lines.extend(_norm_line(n) for n in sorted_norms(m.eph_of(q)))
        shape = "doublecircle" if q == m.initial else "box"
        yield "  {} [shape={} label={}];\n".format(_gvquote(q), shape, _gvquote("\n".join(lines)))
    yield "  __start -> {};\n".format(_gvquote(m.initial))
    for t in m.transitions:
        yield "  {} -> {} [label={}];\n".format(_gvquote(t.source), _gvquote(t.target), _gvquote(str(t)))
    yield "}\n"

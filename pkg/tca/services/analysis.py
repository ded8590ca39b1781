"""基于展平自动机的可靠冲突分析"""
import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import psutil
import structlog

from tca.core.config import get_settings
from tca.core.exceptions import WellFormednessError
from tca.models.contract import Modality, Norm, TimedContractAutomaton, sorted_norms
from tca.models.document import AnalysisReport, FindingReport, StatsReport, Verdict
from tca.services.flatten import FlatState, FlattenedAutomaton, flatten, prune_unsat
from tca.services.contract import validate_wellformed
from tca.services.zones import (
    ClockValuation, Guard, format_rational, guard_and, guard_constraints, guard_or, sample_point,
)


@dataclass(frozen=True)
class LocalConflict:
    """一个规范集合内的冲突对及其见证区域"""
    pair: Tuple[Norm, Norm]
    witness: Guard
    sample: ClockValuation


@dataclass(frozen=True)
class ConflictFinding:
    """按 (原状态, 规范对) 去重后的冲突发现"""
    state: str
    flat_states: Tuple[FlatState, ...]
    pair: Tuple[Norm, Norm]
    witness: Guard
    sample: ClockValuation

    @property
    def sort_key(self) -> tuple:
        return (self.state, self.pair[0].id, self.pair[1].id)


@dataclass
class AnalysisVerdict:
    findings: List[ConflictFinding] = field(default_factory=list)
    stats: Dict[str, float] = field(default_factory=dict)
    flattened: Optional[FlattenedAutomaton] = None

    @property
    def verdict(self) -> Verdict:
        return Verdict.POTENTIAL_CONFLICTS if self.findings else Verdict.CONFLICT_FREE

    @property
    def conflict_free(self) -> bool:
        return not self.findings


def local_conflict(norms: Iterable[Norm]) -> List[LocalConflict]:
    """同一 p:a 上窗口可同时满足的 (O,F) 与 (P,F) 对"""
    ordered = sorted_norms(norms)
    prohibitions = [n for n in ordered if n.modality is Modality.PROHIBITION]
    found = []
    for first in ordered:
        if first.modality is Modality.PROHIBITION:
            continue
        for second in prohibitions:
            if (first.party, first.action) != (second.party, second.action):
                continue
            witness = guard_and(first.guard, second.guard)
            if witness.is_false:
                continue
            found.append(LocalConflict(pair=(first, second), witness=witness,
                                       sample=sample_point(witness.zones[0])))
    return found


class ConflictAnalyzer:
    """对展平自动机的每个状态检查 E ∪ P 的局部冲突"""

    def __init__(self, prune: Optional[bool] = None, max_states: Optional[int] = None):
        settings = get_settings()
        self.prune = settings.PRUNE_BY_DEFAULT if prune is None else prune
        self.max_states = max_states
        self.logger = structlog.get_logger(__name__)

    def analyze(self, m: TimedContractAutomaton) -> AnalysisVerdict:
        report = validate_wellformed(m)
        if not report.valid:
            raise WellFormednessError(report.message, report)

        started = time.perf_counter()
        flat = flatten(m, max_states=self.max_states)
        if self.prune:
            flat = prune_unsat(flat)

        grouped: Dict[tuple, dict] = {}
        for fs in sorted(flat.flat_states.values(), key=lambda s: s.id):
            for conflict in local_conflict(fs.norms):
                key = (fs.base, conflict.pair)
                entry = grouped.get(key)
                if entry is None:
                    grouped[key] = {"states": [fs], "witness": conflict.witness}
                else:
                    entry["states"].append(fs)
                    entry["witness"] = guard_or(entry["witness"], conflict.witness)

        findings = []
        for (base, pair), entry in grouped.items():
            witness = entry["witness"]
            findings.append(ConflictFinding(
                state=base,
                flat_states=tuple(entry["states"]),
                pair=pair,
                witness=witness,
                sample=sample_point(witness.zones[0]),
            ))
        findings.sort(key=lambda f: f.sort_key)

        stats: Dict[str, float] = {
            "states": flat.stats.get("states", len(flat.flat_states)),
            "transitions": flat.stats.get("transitions", len(flat.automaton.transitions)),
            "pruned_states": flat.stats.get("pruned_states", 0),
            "pruned_transitions": flat.stats.get("pruned_transitions", 0),
            "elapsed_seconds": round(time.perf_counter() - started, 6),
            "rss_megabytes": round(psutil.Process().memory_info().rss / (1024 * 1024), 2),
        }
        self.logger.info("Conflict analysis finished", findings=len(findings),
                         pruned=self.prune, **stats)
        return AnalysisVerdict(findings=findings, stats=stats, flattened=flat)


def analyze(m: TimedContractAutomaton, prune: Optional[bool] = None) -> AnalysisVerdict:
    return ConflictAnalyzer(prune=prune).analyze(m)


def finding_to_report(finding: ConflictFinding) -> FindingReport:
    first, second = finding.pair
    return FindingReport(
        state=finding.state,
        flat_states=[fs.id for fs in finding.flat_states],
        pair=(first.id, second.id),
        modalities=(first.modality.value, second.modality.value),
        party=first.party,
        action=first.action,
        witness=[
            [(lhs, op, format_rational(value)) for lhs, op, value in zone]
            for zone in guard_constraints(finding.witness)
        ],
        sample=finding.sample.to_dict(),
    )


def verdict_to_report(result: AnalysisVerdict) -> AnalysisReport:
    stats = result.stats
    return AnalysisReport(
        verdict=result.verdict,
        findings=[finding_to_report(f) for f in result.findings],
        stats=StatsReport(
            states=int(stats["states"]),
            transitions=int(stats["transitions"]),
            pruned_states=int(stats["pruned_states"]),
            pruned_transitions=int(stats["pruned_transitions"]),
            elapsed_seconds=float(stats["elapsed_seconds"]),
            rss_megabytes=stats.get("rss_megabytes"),
        ),
    )

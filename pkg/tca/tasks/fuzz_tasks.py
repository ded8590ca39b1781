"""按种子运行的性质检查套件"""
import random
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from itertools import combinations
from typing import Callable, Dict, Optional, Tuple

import structlog

from tca.core.config import get_settings
from tca.core.logging import get_suite_logger
from tca.models.document import SuiteResult
from tca.services.contract import active, sat
from tca.services.flatten import (
    active_alpha, check_determinism, flatten, tc, timing_condition_T,
)
from tca.services.zones import (
    Guard, exceeds, guard_and, guard_contains, guard_from_constraints, guard_not, guard_or,
    sample_point, time_predecessor,
)
from tca.tasks.oracle import (
    GenParams, delta_interval_constraints, eval_constraints, gen_automaton, gen_raw_guard,
    gen_trace, lockstep_mismatch, random_valuation, soundness_sample,
)

logger = structlog.get_logger(__name__)

# (通过, 空真, 失败信息)
CheckResult = Tuple[bool, bool, Optional[str]]

VALUATIONS_PER_INSTANCE = 5
GRID_SAMPLES = 40

DEFAULT_TRACES = {"theorem1": 50, "soundness": 1000}


def _instance(p: GenParams):
    rng = random.Random(p.seed ^ 0x5EED)
    m = gen_automaton(p)
    norms = sorted(m.norms, key=lambda n: n.id)
    labels = list(m.alphabet) + [label.attempt() for label in m.alphabet]
    return rng, m, frozenset(norms), labels


def check_lemma1(p: GenParams, traces: int = 0) -> CheckResult:
    """具体的 active 结果属于 active_alpha 族"""
    rng, m, norms, labels = _instance(p)
    for _ in range(VALUATIONS_PER_INSTANCE):
        label = rng.choice(labels)
        v = random_valuation(rng, m.clocks, p.max_constant)
        concrete = active(norms, label, v)
        if concrete not in active_alpha(norms, label):
            return False, False, f"active set {sorted(n.id for n in concrete)} missing for {label} at {v!r}"
    return True, not norms, None


def check_lemma2(p: GenParams, traces: int = 0) -> CheckResult:
    """active_alpha 中不同成员的 T 守卫两两不相交"""
    rng, m, norms, labels = _instance(p)
    label = rng.choice(labels)
    family = active_alpha(norms, label)
    for n1, n2 in combinations(family, 2):
        g1 = timing_condition_T(label, norms - n1, n1, m.clocks)
        g2 = timing_condition_T(label, norms - n2, n2, m.clocks)
        overlap = guard_and(g1, g2)
        if not overlap.is_false:
            return False, False, f"T guards overlap on {label}: {overlap}"
    return True, len(family) < 2, None


def check_lemma3(p: GenParams, traces: int = 0) -> CheckResult:
    """sat(n, ℓ, v) 蕴含 tc(n)(v)"""
    rng, m, norms, labels = _instance(p)
    hits = 0
    for _ in range(VALUATIONS_PER_INSTANCE):
        label = rng.choice(labels)
        v = random_valuation(rng, m.clocks, p.max_constant)
        for n in norms:
            if sat(n, label, v):
                hits += 1
                if not guard_contains(tc(n), v):
                    return False, False, f"{n.id} satisfied at {v!r} outside tc"
    return True, hits == 0, None


def check_flat_determinism(p: GenParams, traces: int = 0) -> CheckResult:
    m = gen_automaton(p)
    if not check_determinism(flatten(m)):
        return False, False, "flattened automaton is nondeterministic"
    return True, False, None


def check_lockstep(p: GenParams, traces: int = 50) -> CheckResult:
    m = gen_automaton(p)
    flat = flatten(m)
    for index in range(traces):
        problem = lockstep_mismatch(m, gen_trace(m, p, index), flat)
        if problem:
            return False, False, f"trace {index}: {problem}"
    return True, False, None


def check_runtime_soundness(p: GenParams, traces: int = 1000) -> CheckResult:
    m = gen_automaton(p)
    verdict, flagged = soundness_sample(m, traces, p)
    if not verdict.conflict_free:
        return True, True, None
    if flagged:
        return False, False, f"{flagged} trace(s) flagged a conflict after a ConflictFree verdict"
    return True, False, None


def _zone_clocks(rng: random.Random) -> Tuple[str, ...]:
    return ("x",) if rng.random() < 0.4 else ("x", "y")


def _grid_points(rng: random.Random, clocks, max_constant: int, count: int):
    step = Fraction(1, 2 * len(clocks))
    return [random_valuation(rng, clocks, max_constant, step) for _ in range(count)]


def _full_grid(clocks, max_constant: int):
    step = Fraction(1, 2 * len(clocks))
    slots = int((max_constant + 1) / step)
    points = [{}]
    for c in clocks:
        points = [dict(p, **{c: k * step}) for p in points for k in range(slots + 1)]
    return points


def check_zone_algebra(p: GenParams, traces: int = 0) -> CheckResult:
    """区域运算与直接求值、δ 区间解法一致"""
    rng = random.Random(p.seed)
    clocks = _zone_clocks(rng)
    raw_g = gen_raw_guard(rng, clocks, p.max_constant, max_zones=2, max_constraints=3)
    raw_h = gen_raw_guard(rng, clocks, p.max_constant, max_zones=2, max_constraints=3)
    g = guard_from_constraints(clocks, raw_g)
    h = guard_from_constraints(clocks, raw_h)
    negated = guard_not(g)
    results: Dict[str, Guard] = {
        "and": guard_and(g, h), "or": guard_or(g, h), "not": negated,
        "tp": time_predecessor(g),
    }
    for name, result in results.items():
        if any(z.empty for z in result.zones):
            return False, False, f"{name} kept an empty zone"

    if g.is_false:
        for point in _full_grid(clocks, p.max_constant):
            if eval_constraints(raw_g, point):
                return False, False, f"empty guard satisfied at {point}"
    for zone in g.zones:
        if not eval_constraints(raw_g, sample_point(zone)):
            return False, False, "sample point outside the constraint system"

    points = _grid_points(rng, clocks, p.max_constant, GRID_SAMPLES)
    for guard in (g, h, negated):
        points.extend(sample_point(z) for z in guard.zones)
    for v in points:
        in_g = eval_constraints(raw_g, v)
        in_h = eval_constraints(raw_h, v)
        delta = delta_interval_constraints(raw_g, v)
        checks = [
            ("contains", guard_contains(g, v), in_g),
            ("and", guard_contains(results["and"], v), in_g and in_h),
            ("or", guard_contains(results["or"], v), in_g or in_h),
            ("not", guard_contains(negated, v), not in_g),
            ("time_predecessor", guard_contains(results["tp"], v), delta is not None),
            ("exceeds", exceeds(v, g), delta is None),
        ]
        for name, got, expected in checks:
            if got != expected:
                return False, False, f"{name} disagrees at {dict(v)} for {raw_g} / {raw_h}"
    return True, False, None


SUITES: Dict[str, Callable[..., CheckResult]] = {
    "lemma1": check_lemma1,
    "lemma2": check_lemma2,
    "lemma3": check_lemma3,
    "determinism": check_flat_determinism,
    "theorem1": check_lockstep,
    "soundness": check_runtime_soundness,
    "zones": check_zone_algebra,
}


def run_instance(suite: str, params: dict, traces: int) -> Tuple[int, CheckResult]:
    """单个种子实例，进程池中执行"""
    p = GenParams(**params)
    check = SUITES[suite]
    try:
        return p.seed, check(p, traces)
    except Exception as e:
        get_suite_logger(suite, p.seed).exception("Instance crashed")
        return p.seed, (False, False, f"{type(e).__name__}: {e}")


def run_suite(suite: str, seed: int = 0, count: int = 100, workers: Optional[int] = None,
              traces: Optional[int] = None, params: Optional[GenParams] = None) -> SuiteResult:
    """运行种子 seed..seed+count-1，结果按种子顺序合并"""
    if suite not in SUITES:
        raise ValueError(f"Unknown suite: {suite}")
    workers = workers or get_settings().FUZZ_WORKERS
    traces = DEFAULT_TRACES.get(suite, 0) if traces is None else traces
    base = params or GenParams.from_settings()
    jobs = [base.with_seed(s).model_dump() for s in range(seed, seed + count)]

    started = time.perf_counter()
    logger.info("Starting suite", suite=suite, seed=seed, count=count, workers=workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_instance, [suite] * count, jobs, [traces] * count,
                                     chunksize=max(1, count // (workers * 4))))
    else:
        outcomes = [run_instance(suite, job, traces) for job in jobs]

    result = SuiteResult(suite=suite)
    for instance_seed, (passed, vacuous, message) in sorted(outcomes, key=lambda o: o[0]):
        if passed:
            result.passed += 1
            result.vacuous += int(vacuous)
        else:
            result.failed += 1
            result.failing_seeds.append(instance_seed)
            result.messages[instance_seed] = message or "failed"
    result.elapsed_seconds = round(time.perf_counter() - started, 3)
    logger.info("Suite finished", suite=suite, passed=result.passed, failed=result.failed,
                vacuous=result.vacuous, elapsed=result.elapsed_seconds)
    return result

"""时钟区域代数：差分界矩阵(DBM)与区域并集守卫"""
from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from tca.core.exceptions import WellFormednessError, ZoneError

GLOBAL_CLOCK = "gamma"

COMPARATORS = ("<", "<=", "=", ">=", ">")
_COMPARATOR_ALIASES = {"≤": "<=", "≥": ">=", "==": "="}
_LHS_PATTERN = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:-\s*([A-Za-z_]\w*))?\s*$")

Constraint = Tuple[str, str, Fraction]


def parse_rational(value: Any) -> Fraction:
    """把十进制字符串或整数解析为精确有理数"""
    if isinstance(value, bool) or isinstance(value, float):
        raise ZoneError(f"Rational constants must be decimal strings, got {value!r}")
    try:
        return Fraction(value)
    except (ValueError, TypeError, ZeroDivisionError):
        raise ZoneError(f"Invalid rational constant: {value!r}")


def format_rational(value: Fraction) -> str:
    """有理数的十进制字符串表示(无法有限表示时写成 p/q)"""
    if value.denominator == 1:
        return str(value.numerator)
    d = value.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d != 1:
        return f"{value.numerator}/{value.denominator}"
    return format(Decimal(value.numerator) / Decimal(value.denominator), "f")


@dataclass(frozen=True, slots=True)
class Bound:
    """原子比较 x_i - x_j ≺ value；value 为 None 表示无穷"""
    value: Optional[Fraction]
    strict: bool = False

    @property
    def infinite(self) -> bool:
        return self.value is None

    def __add__(self, other: "Bound") -> "Bound":
        if self.value is None or other.value is None:
            return INF
        return Bound(self.value + other.value, self.strict or other.strict)

    def __lt__(self, other: "Bound") -> bool:
        if other.value is None:
            return self.value is not None
        if self.value is None:
            return False
        if self.value != other.value:
            return self.value < other.value
        return self.strict and not other.strict

    def __le__(self, other: "Bound") -> bool:
        return self == other or self < other

    def negated(self) -> "Bound":
        # ¬(d ≤ m) 即 -d < -m；¬(d < m) 即 -d ≤ -m
        if self.value is None:
            raise ZoneError("Cannot negate an infinite bound")
        return Bound(-self.value, not self.strict)

    def holds(self, diff: Fraction) -> bool:
        if self.value is None:
            return True
        return diff < self.value if self.strict else diff <= self.value

    def sort_key(self) -> tuple:
        return (self.value is None, self.value or Fraction(0), self.strict)


INF = Bound(None, False)
LE_ZERO = Bound(Fraction(0), False)

Matrix = Tuple[Tuple[Bound, ...], ...]


def _close(rows: List[List[Bound]]) -> Optional[List[List[Bound]]]:
    """最短路闭包(Floyd-Warshall)；出现负环时返回 None"""
    n = len(rows)
    for k in range(n):
        row_k = rows[k]
        for i in range(n):
            d_ik = rows[i][k]
            if d_ik.value is None:
                continue
            row_i = rows[i]
            for j in range(n):
                candidate = d_ik + row_k[j]
                if candidate < row_i[j]:
                    row_i[j] = candidate
        if rows[k][k] < LE_ZERO:
            return None
    for i in range(n):
        if rows[i][i] < LE_ZERO:
            return None
    return rows


@dataclass(frozen=True)
class ConvexZone:
    """规范形式的凸时钟区域；索引0为恒零参考时钟"""
    clocks: Tuple[str, ...]
    matrix: Matrix

    @property
    def empty(self) -> bool:
        return not self.matrix

    def index(self, clock: str) -> int:
        try:
            return self.clocks.index(clock) + 1
        except ValueError:
            raise ZoneError(f"Unknown clock: {clock}")

    def sort_key(self) -> tuple:
        return tuple(b.sort_key() for row in self.matrix for b in row)


def _universe_rows(clocks: Sequence[str]) -> List[List[Bound]]:
    n = len(clocks) + 1
    rows = [[INF] * n for _ in range(n)]
    for i in range(n):
        rows[i][i] = LE_ZERO
        rows[0][i] = LE_ZERO
    return rows


def _make_zone(clocks: Tuple[str, ...], rows: List[List[Bound]]) -> ConvexZone:
    closed = _close(rows)
    if closed is None:
        return ConvexZone(clocks, ())
    return ConvexZone(clocks, tuple(tuple(row) for row in closed))


def universal_zone(clocks: Sequence[str]) -> ConvexZone:
    clocks = tuple(clocks)
    return _make_zone(clocks, _universe_rows(clocks))


def _normalize_comparator(op: str) -> str:
    op = _COMPARATOR_ALIASES.get(op, op)
    if op not in COMPARATORS:
        raise ZoneError(f"Unknown comparator: {op!r}")
    return op


def _resolve_lhs(clocks: Tuple[str, ...], lhs: str) -> Tuple[int, int]:
    match = _LHS_PATTERN.match(lhs)
    if not match:
        raise ZoneError(f"Malformed constraint left-hand side: {lhs!r}")
    left, right = match.group(1), match.group(2)

    def idx(name: str) -> int:
        if name not in clocks:
            raise ZoneError(f"Unknown clock: {name}")
        return clocks.index(name) + 1

    return idx(left), (idx(right) if right else 0)


def _tighten(rows: List[List[Bound]], i: int, j: int, bound: Bound) -> None:
    if bound < rows[i][j]:
        rows[i][j] = bound


def _apply_constraint(rows: List[List[Bound]], clocks: Tuple[str, ...],
                      constraint: Sequence[Any]) -> None:
    if len(constraint) != 3:
        raise ZoneError(f"Constraint must be a (lhs, comparator, constant) triple: {constraint!r}")
    lhs, op, raw = constraint
    op = _normalize_comparator(op)
    value = raw if isinstance(raw, Fraction) else parse_rational(raw)
    i, j = _resolve_lhs(clocks, lhs)
    # x_i - x_j op value
    if op in ("<", "<="):
        _tighten(rows, i, j, Bound(value, op == "<"))
    elif op in (">", ">="):
        _tighten(rows, j, i, Bound(-value, op == ">"))
    else:
        _tighten(rows, i, j, Bound(value, False))
        _tighten(rows, j, i, Bound(-value, False))


def zone_from_constraints(clocks: Sequence[str], constraints: Iterable[Sequence[Any]]) -> ConvexZone:
    """由约束三元组构造规范区域，隐含所有时钟非负"""
    clocks = tuple(clocks)
    rows = _universe_rows(clocks)
    for constraint in constraints:
        _apply_constraint(rows, clocks, constraint)
    return _make_zone(clocks, rows)


def is_empty(zone: ConvexZone) -> bool:
    return zone.empty


def zone_intersect(a: ConvexZone, b: ConvexZone) -> ConvexZone:
    if a.clocks != b.clocks:
        raise ZoneError(f"Clock lists differ: {a.clocks} vs {b.clocks}")
    if a.empty or b.empty:
        return ConvexZone(a.clocks, ())
    rows = [[min(x, y) for x, y in zip(ra, rb)] for ra, rb in zip(a.matrix, b.matrix)]
    return _make_zone(a.clocks, rows)


def zone_subset(a: ConvexZone, b: ConvexZone) -> bool:
    """a ⊆ b(两者均为规范形式)"""
    if a.empty:
        return True
    if b.empty:
        return False
    return all(x <= y for ra, rb in zip(a.matrix, b.matrix) for x, y in zip(ra, rb))


def zone_contains(zone: ConvexZone, valuation: Mapping[str, Fraction]) -> bool:
    if zone.empty:
        return False
    try:
        values = [Fraction(0)] + [valuation[c] for c in zone.clocks]
    except KeyError as e:
        raise ZoneError(f"Valuation does not cover clock {e.args[0]}")
    for i, row in enumerate(zone.matrix):
        vi = values[i]
        for j, bound in enumerate(row):
            if i != j and not bound.holds(vi - values[j]):
                return False
    return True


def zone_down(zone: ConvexZone) -> ConvexZone:
    """时间前驱：去掉时钟下界后重新闭包"""
    if zone.empty:
        return zone
    rows = [list(row) for row in zone.matrix]
    for i in range(1, len(rows)):
        rows[0][i] = LE_ZERO
    return _make_zone(zone.clocks, rows)


@lru_cache(maxsize=65536)
def minimal_entries(zone: ConvexZone) -> Tuple[Tuple[int, int], ...]:
    """贪心去除冗余约束，得到与规范DBM等价的最小约束集"""
    if zone.empty:
        return ()
    n = len(zone.matrix)
    entries = [
        (i, j) for i in range(n) for j in range(n)
        if i != j and not zone.matrix[i][j].infinite
        and not (i == 0 and zone.matrix[0][j] == LE_ZERO)
    ]
    # 先尝试删除差分约束，尽量保留单时钟界
    order = sorted(entries, key=lambda e: (e[0] == 0 or e[1] == 0, e))
    kept = set(entries)
    for entry in order:
        trial = kept - {entry}
        rows = _universe_rows(zone.clocks)
        for (i, j) in trial:
            _tighten(rows, i, j, zone.matrix[i][j])
        closed = _close(rows)
        if closed is not None and tuple(tuple(r) for r in closed) == zone.matrix:
            kept = trial
    return tuple(sorted(kept))


def zone_complement(zone: ConvexZone) -> List[ConvexZone]:
    """区域补集(相对于非负全域)，表示为半空间区域的并"""
    if zone.empty:
        return [universal_zone(zone.clocks)]
    pieces = []
    for (i, j) in minimal_entries(zone):
        rows = _universe_rows(zone.clocks)
        _tighten(rows, j, i, zone.matrix[i][j].negated())
        piece = _make_zone(zone.clocks, rows)
        if not piece.empty:
            pieces.append(piece)
    return pieces


def _zone_name(zone: ConvexZone, index: int) -> str:
    return zone.clocks[index - 1]


def _entry_order(entry: Tuple[int, int]) -> tuple:
    i, j = entry
    # 单时钟约束在前(同一时钟先下界后上界)，差分约束在后
    if i == 0:
        return (0, j, 0)
    if j == 0:
        return (0, i, 1)
    return (1, i, j)


def zone_constraints(zone: ConvexZone) -> List[Constraint]:
    """区域的最小约束三元组，相等的上下界合并为 ="""
    entries = set(minimal_entries(zone))
    result: List[Constraint] = []
    done = set()
    for (i, j) in sorted(entries, key=_entry_order):
        if (i, j) in done:
            continue
        bound = zone.matrix[i][j]
        mirror = zone.matrix[j][i]
        if (j, i) in entries and not bound.strict and not mirror.strict \
                and mirror.value == -bound.value:
            done.update({(i, j), (j, i)})
            if j == 0:
                result.append((_zone_name(zone, i), "=", bound.value))
            elif i == 0:
                result.append((_zone_name(zone, j), "=", -bound.value))
            else:
                result.append((f"{_zone_name(zone, i)}-{_zone_name(zone, j)}", "=", bound.value))
            continue
        done.add((i, j))
        if j == 0:
            result.append((_zone_name(zone, i), "<" if bound.strict else "<=", bound.value))
        elif i == 0:
            result.append((_zone_name(zone, j), ">" if bound.strict else ">=", -bound.value))
        else:
            result.append((f"{_zone_name(zone, i)}-{_zone_name(zone, j)}",
                           "<" if bound.strict else "<=", bound.value))
    return result


@dataclass(frozen=True)
class Guard:
    """凸区域的有限并；空集为 FALSE"""
    clocks: Tuple[str, ...]
    zones: Tuple[ConvexZone, ...]

    @classmethod
    def of(cls, clocks: Sequence[str], zones: Iterable[ConvexZone]) -> "Guard":
        clocks = tuple(clocks)
        members: List[ConvexZone] = []
        for zone in zones:
            if zone.clocks != clocks:
                raise ZoneError(f"Clock lists differ: {zone.clocks} vs {clocks}")
            if zone.empty:
                continue
            if any(zone_subset(zone, kept) for kept in members):
                continue
            members = [kept for kept in members if not zone_subset(kept, zone)]
            members.append(zone)
        members.sort(key=ConvexZone.sort_key)
        return cls(clocks, tuple(members))

    @property
    def is_false(self) -> bool:
        return not self.zones

    @property
    def is_true(self) -> bool:
        universe = universal_zone(self.clocks)
        return any(zone_subset(universe, z) for z in self.zones)

    def __iter__(self) -> Iterator[ConvexZone]:
        return iter(self.zones)

    def __str__(self) -> str:
        return render_guard(self)


def guard_true(clocks: Sequence[str]) -> Guard:
    return Guard.of(clocks, [universal_zone(clocks)])


def guard_false(clocks: Sequence[str]) -> Guard:
    return Guard(tuple(clocks), ())


def guard_from_constraints(clocks: Sequence[str],
                           zones: Iterable[Iterable[Sequence[Any]]]) -> Guard:
    """由序列化形式(区域列表，每个区域为约束列表)构造守卫"""
    return Guard.of(clocks, [zone_from_constraints(clocks, z) for z in zones])


def _check_clocks(g1: Guard, g2: Guard) -> None:
    if g1.clocks != g2.clocks:
        raise ZoneError(f"Clock lists differ: {g1.clocks} vs {g2.clocks}")


@lru_cache(maxsize=131072)
def guard_and(g1: Guard, g2: Guard) -> Guard:
    _check_clocks(g1, g2)
    return Guard.of(g1.clocks, [zone_intersect(a, b) for a in g1.zones for b in g2.zones])


def guard_or(g1: Guard, g2: Guard) -> Guard:
    _check_clocks(g1, g2)
    return Guard.of(g1.clocks, g1.zones + g2.zones)


@lru_cache(maxsize=65536)
def guard_not(g: Guard) -> Guard:
    """补集：逐区域取补后做合取"""
    result = [universal_zone(g.clocks)]
    for zone in g.zones:
        pieces = zone_complement(zone)
        result = list(Guard.of(g.clocks, [zone_intersect(a, b) for a in result for b in pieces]).zones)
        if not result:
            break
    return Guard.of(g.clocks, result)


def guard_any(clocks: Sequence[str], guards: Iterable[Guard]) -> Guard:
    result = guard_false(clocks)
    for g in guards:
        result = guard_or(result, g)
    return result


@lru_cache(maxsize=65536)
def time_predecessor(g: Guard) -> Guard:
    """{v | ∃δ≥0 · v+δ ∈ g}"""
    return Guard.of(g.clocks, [zone_down(z) for z in g.zones])


def guard_contains(g: Guard, valuation: Mapping[str, Fraction]) -> bool:
    return any(zone_contains(z, valuation) for z in g.zones)


def exceeds(valuation: Mapping[str, Fraction], g: Guard) -> bool:
    """任何非负延迟都无法再进入 g"""
    return not guard_contains(time_predecessor(g), valuation)


def guard_constraints(g: Guard) -> List[List[Constraint]]:
    return [zone_constraints(z) for z in g.zones]


def render_constraint(constraint: Constraint) -> str:
    lhs, op, value = constraint
    return f"{lhs}{op}{format_rational(value)}"


def render_guard(g: Guard) -> str:
    if g.is_false:
        return "false"
    parts = []
    for zone in g.zones:
        constraints = zone_constraints(zone)
        if not constraints:
            return "true"
        parts.append(" && ".join(render_constraint(c) for c in constraints))
    if len(parts) == 1:
        return parts[0]
    return " || ".join(f"({p})" for p in parts)


class ClockValuation(Mapping[str, Fraction]):
    """时钟赋值：时钟到非负有理数的全映射，不可变"""
    __slots__ = ("_values", "_hash")

    def __init__(self, values: Mapping[str, Any]):
        converted: Dict[str, Fraction] = {}
        for clock, raw in values.items():
            value = raw if isinstance(raw, Fraction) else Fraction(raw)
            if value < 0:
                raise ZoneError(f"Clock {clock} has negative value {value}")
            converted[clock] = value
        self._values = converted
        self._hash = None

    @classmethod
    def zero(cls, clocks: Iterable[str]) -> "ClockValuation":
        return cls({c: Fraction(0) for c in clocks})

    def __getitem__(self, clock: str) -> Fraction:
        return self._values[clock]

    def __iter__(self):
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._values.items()))
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(f"{c}={format_rational(v)}" for c, v in self._values.items())
        return f"ClockValuation({inner})"

    def to_dict(self) -> Dict[str, str]:
        return {c: format_rational(v) for c, v in self._values.items()}


def valuation_shift(valuation: ClockValuation, delta: Fraction) -> ClockValuation:
    delta = Fraction(delta)
    if delta < 0:
        raise ZoneError(f"Cannot delay by a negative amount: {delta}")
    if delta == 0:
        return valuation
    return ClockValuation({c: x + delta for c, x in valuation.items()})


def valuation_override(valuation: ClockValuation, reset: Mapping[str, Fraction]) -> ClockValuation:
    if GLOBAL_CLOCK in reset:
        raise WellFormednessError("The global clock is never reset")
    unknown = set(reset) - set(valuation)
    if unknown:
        raise ZoneError(f"Reset touches unknown clocks: {sorted(unknown)}")
    if not reset:
        return valuation
    merged = dict(valuation.items())
    merged.update(reset)
    return ClockValuation(merged)


def sample_point(zone: ConvexZone) -> ClockValuation:
    """区域中字典序最小的角点，严格下界处偏移 1/2"""
    if zone.empty:
        raise ZoneError("Cannot sample an empty zone")
    half = Fraction(1, 2)
    current = zone
    for idx, clock in enumerate(zone.clocks, start=1):
        lower_bound = current.matrix[0][idx]
        upper_bound = current.matrix[idx][0]
        lower = -lower_bound.value
        if not lower_bound.strict:
            value = lower
        else:
            value = lower + half
            if not upper_bound.holds(value):
                value = (lower + upper_bound.value) / 2
        current = zone_intersect(current, zone_from_constraints(zone.clocks, [(clock, "=", value)]))
        if current.empty:
            raise ZoneError(f"Zone sampling failed at clock {clock}")
    return ClockValuation({c: -current.matrix[0][i].value for i, c in enumerate(zone.clocks, start=1)})

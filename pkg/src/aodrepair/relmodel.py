"""Relations, aggregate order dependencies and exact aggregate evaluation.

Aggregate values are kept exact throughout. Internally every aggregate is a
*raw key*: a plain ``int`` for max/min/sum/count/countd, the doubled median as
an ``int`` (so half-integers stay integral), and a ``Fraction`` for averages.
Raw keys produced by one aggregate function are totally ordered by the native
Python comparison, which is what the dynamic programs rely on. ``AggValue``
wraps a raw key with its kind for the public API and for reporting.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence, Union

from .errors import EmptyBag

RawKey = Union[int, Fraction]


class Alpha(str, enum.Enum):
    MAX = "max"
    MIN = "min"
    COUNT = "count"
    COUNTD = "countd"
    MEDIAN = "median"
    SUM = "sum"
    AVG = "avg"

    def __str__(self):
        return self.value


class Direction(str, enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"

    def __str__(self):
        return self.value


_KIND = {
    Alpha.MAX: "int",
    Alpha.MIN: "int",
    Alpha.SUM: "int",
    Alpha.COUNT: "count",
    Alpha.COUNTD: "count",
    Alpha.MEDIAN: "half",
    Alpha.AVG: "ratio",
}


def kind_of(alpha) -> str:
    return _KIND[Alpha(alpha)]


class AggValue(NamedTuple):
    """An exact aggregate result.

    ``key`` is the raw key: the value itself for ``int``/``count``, twice the
    median for ``half`` and a normalized ``Fraction`` for ``ratio``.
    """

    kind: str
    key: RawKey

    @classmethod
    def Int(cls, k: int) -> "AggValue":
        return cls("int", int(k))

    @classmethod
    def Count(cls, k: int) -> "AggValue":
        return cls("count", int(k))

    @classmethod
    def Half(cls, doubled: int) -> "AggValue":
        return cls("half", int(doubled))

    @classmethod
    def Ratio(cls, num: int, den: int = 1) -> "AggValue":
        return cls("ratio", Fraction(num, den))

    def as_fraction(self) -> Fraction:
        return to_fraction(self.kind, self.key)

    def __str__(self):
        return format_exact(self.as_fraction(), self.kind)


def to_fraction(kind: str, key: RawKey) -> Fraction:
    if kind == "half":
        return Fraction(key, 2)
    return Fraction(key)


def format_exact(value: Fraction, kind: str = "ratio") -> str:
    """Exact string form used in reports: ``"5"`` for integer kinds, ``"p/q"`` otherwise."""
    value = Fraction(value)
    if kind in ("int", "count"):
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def agg_key(values: Sequence[int], alpha) -> RawKey:
    """Raw key of ``alpha`` over a non-empty bag of integers."""
    if not values:
        raise EmptyBag("aggregate of an empty bag is undefined")
    alpha = Alpha(alpha)
    if alpha is Alpha.MAX:
        return max(values)
    if alpha is Alpha.MIN:
        return min(values)
    if alpha is Alpha.SUM:
        return sum(values)
    if alpha is Alpha.COUNT:
        return len(values)
    if alpha is Alpha.COUNTD:
        return len(set(values))
    if alpha is Alpha.AVG:
        return Fraction(sum(values), len(values))
    ordered = sorted(values)
    n = len(ordered)
    if n % 2:
        return 2 * ordered[n // 2]
    return ordered[n // 2 - 1] + ordered[n // 2]


def evaluate_aggregate(values: Sequence[int], alpha) -> AggValue:
    return AggValue(kind_of(alpha), agg_key(list(values), alpha))


class Row(NamedTuple):
    """One tuple of the relation: unique id, group key, aggregate attribute."""

    id: int
    g: int
    a: int


class Group(NamedTuple):
    key: int
    rows: tuple


class Relation:
    """An immutable bag of rows partitioned into groups ordered by key.

    ``descending=True`` flips the group order; every algorithm consumes
    ``groups`` in the order given, which is how decreasing dependencies are
    reduced to increasing ones.
    """

    def __init__(self, rows: Iterable[Row] = (), descending: bool = False):
        self.rows = tuple(Row(*r) for r in rows)
        self.descending = bool(descending)
        ids = [r.id for r in self.rows]
        if len(set(ids)) != len(ids):
            raise ValueError("row ids must be unique within a relation")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple]) -> "Relation":
        """Build a relation from ``(g, a)`` pairs, numbering ids from 0."""
        return cls(Row(i, int(g), int(a)) for i, (g, a) in enumerate(pairs))

    @classmethod
    def from_groups(cls, groups: dict) -> "Relation":
        """Build from ``{g: [a, ...]}``; ids follow insertion order."""
        return cls.from_pairs((g, a) for g, values in groups.items() for a in values)

    @cached_property
    def groups(self) -> tuple:
        by_key: dict = {}
        for r in self.rows:
            by_key.setdefault(r.g, []).append(r)
        keys = sorted(by_key, reverse=self.descending)
        return tuple(Group(k, tuple(by_key[k])) for k in keys)

    @cached_property
    def ids(self) -> frozenset:
        return frozenset(r.id for r in self.rows)

    def subset(self, ids) -> "Relation":
        keep = set(ids)
        return Relation((r for r in self.rows if r.id in keep), self.descending)

    def without(self, ids) -> "Relation":
        drop = set(ids)
        return Relation((r for r in self.rows if r.id not in drop), self.descending)

    def reversed(self) -> "Relation":
        return Relation(self.rows, not self.descending)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __eq__(self, other):
        if not isinstance(other, Relation):
            return NotImplemented
        return self.rows == other.rows and self.descending == other.descending

    def __hash__(self):
        return hash((self.rows, self.descending))

    def __repr__(self):
        order = "desc" if self.descending else "asc"
        return f"Relation({len(self.rows)} rows, {len(self.groups)} groups, {order})"


@dataclass(frozen=True)
class Aod:
    """``G ↗ alpha(A)`` (increasing) or ``G ↘ alpha(A)`` (decreasing)."""

    alpha: Alpha
    direction: Direction = Direction.INCREASING
    group_col: str | None = None
    agg_col: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", Alpha(self.alpha))
        object.__setattr__(self, "direction", Direction(self.direction))

    @property
    def kind(self) -> str:
        return kind_of(self.alpha)

    def __str__(self):
        arrow = "↗" if self.direction is Direction.INCREASING else "↘"
        g = self.group_col or "G"
        a = self.agg_col or "A"
        return f"{g}{arrow}{self.alpha.value}({a})"


@dataclass(frozen=True)
class ViolationProfile:
    mvi: tuple
    s_mvi: Fraction
    satisfied: bool
    group_keys: tuple = field(default=())
    aggregates: tuple = field(default=())


def apply_direction(relation: Relation, aod: Aod) -> Relation:
    """Return the relation ordered so that ``aod`` reads as an increasing dependency."""
    if aod.direction is Direction.INCREASING:
        return relation
    return relation.reversed()


def mvi_terms(keys: Sequence[RawKey], kind: str) -> list:
    """Violation magnitudes between consecutive aggregates, as Fractions."""
    out = []
    for left, right in zip(keys, keys[1:]):
        diff = left - right
        out.append(to_fraction(kind, diff) if diff > 0 else Fraction(0))
    return out


def group_keys_of(relation: Relation, alpha) -> list:
    return [agg_key([r.a for r in grp.rows], alpha) for grp in relation.groups]


def check_aod(relation: Relation, aod: Aod) -> ViolationProfile:
    ordered = apply_direction(relation, aod)
    keys = group_keys_of(ordered, aod.alpha)
    mvi = mvi_terms(keys, aod.kind)
    total = sum(mvi, Fraction(0))
    return ViolationProfile(
        mvi=tuple(mvi),
        s_mvi=total,
        satisfied=total == 0,
        group_keys=tuple(grp.key for grp in ordered.groups),
        aggregates=tuple(AggValue(aod.kind, k) for k in keys),
    )


def satisfies(relation: Relation, aod: Aod) -> bool:
    return check_aod(relation, aod).satisfied


def value_histogram(values: Iterable[int]) -> list:
    """Ascending ``(value, count)`` pairs."""
    return sorted(Counter(values).items())

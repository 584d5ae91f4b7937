"""Repair outcome shared by the exact, greedy and brute-force engines."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .relmodel import Aod, AggValue, Relation, apply_direction, agg_key, check_aod


@dataclass
class GroupOutcome:
    key: int
    before: AggValue
    after: AggValue | None  # None when every tuple of the group was removed
    removed: int


@dataclass
class RepairResult:
    kept_ids: tuple
    removed_ids: tuple
    aod: Aod
    per_group: list
    s_mvi_before: Fraction
    s_mvi_after: Fraction
    metadata: dict = field(default_factory=dict)

    @property
    def kept_count(self) -> int:
        return len(self.kept_ids)

    @property
    def removed_count(self) -> int:
        return len(self.removed_ids)

    def kept(self, relation: Relation) -> Relation:
        return relation.subset(self.kept_ids)


def build_result(relation: Relation, aod: Aod, kept_ids, metadata=None) -> RepairResult:
    kept = set(kept_ids)
    ordered = apply_direction(relation, aod)
    per_group = []
    for grp in ordered.groups:
        vals = [r.a for r in grp.rows]
        left = [r.a for r in grp.rows if r.id in kept]
        after = AggValue(aod.kind, agg_key(left, aod.alpha)) if left else None
        per_group.append(
            GroupOutcome(grp.key, AggValue(aod.kind, agg_key(vals, aod.alpha)), after, len(vals) - len(left))
        )
    before = check_aod(relation, aod).s_mvi
    after = check_aod(relation.subset(kept), aod).s_mvi
    return RepairResult(
        kept_ids=tuple(sorted(kept)),
        removed_ids=tuple(sorted(relation.ids - kept)),
        aod=aod,
        per_group=per_group,
        s_mvi_before=before,
        s_mvi_after=after,
        metadata=dict(metadata or {}),
    )

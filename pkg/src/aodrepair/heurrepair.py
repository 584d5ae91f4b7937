"""Greedy repair: repeatedly delete the tuple (or batch) that most reduces the total violation.

Two paths are provided. The reference path scores every tuple by recomputing
all aggregates with that tuple left out. The optimized path only looks at
groups involved in a violation, scores whole batches whose members share an
impact, and derives the new aggregate from cached per-group statistics.
Impacts are exact fractions in the units of the aggregate.
"""

from __future__ import annotations

import time
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .relmodel import (
    Aod,
    Alpha,
    Relation,
    ViolationProfile,
    AggValue,
    agg_key,
    apply_direction,
    check_aod,
    mvi_terms,
    to_fraction,
)
from .result import RepairResult, build_result

# removing a tuple can only lower these aggregates (sum: for non-negative values)
_SHRINKING = (Alpha.MAX, Alpha.COUNT, Alpha.COUNTD, Alpha.SUM)


class GroupState:
    """Surviving tuples of one group with cached statistics."""

    def __init__(self, rows):
        self.sorted = sorted((r.a, r.id) for r in rows)
        self.total = sum(r.a for r in rows)
        self.hist = Counter(r.a for r in rows)

    def __len__(self):
        return len(self.sorted)

    def remove(self, row_id, value):
        del self.sorted[bisect_left(self.sorted, (value, row_id))]
        self.total -= value
        self.hist[value] -= 1
        if not self.hist[value]:
            del self.hist[value]

    def ids_with(self, value) -> list:
        lo = bisect_left(self.sorted, (value, -float("inf")))
        out = []
        while lo < len(self.sorted) and self.sorted[lo][0] == value:
            out.append(self.sorted[lo][1])
            lo += 1
        return out

    def key(self, alpha):
        """Raw aggregate key of the surviving tuples, None when the group is empty."""
        if not isinstance(alpha, Alpha):
            alpha = Alpha(alpha)
        n = len(self.sorted)
        if not n:
            return None
        if alpha is Alpha.MAX:
            return self.sorted[-1][0]
        if alpha is Alpha.MIN:
            return self.sorted[0][0]
        if alpha is Alpha.COUNT:
            return n
        if alpha is Alpha.COUNTD:
            return len(self.hist)
        if alpha is Alpha.SUM:
            return self.total
        if alpha is Alpha.AVG:
            return Fraction(self.total, n)
        if n % 2:
            return 2 * self.sorted[n // 2][0]
        return self.sorted[n // 2 - 1][0] + self.sorted[n // 2][0]

    def values(self) -> list:
        return [a for a, _ in self.sorted]


@dataclass
class Candidate:
    """A batch of tuples from one group deleted together, scored by its exact impact."""

    batch: tuple
    impact: Fraction
    group: int
    value: int

    @property
    def rank(self):
        # larger is better: per-tuple impact, then low group index, high value, low id
        return (Fraction(self.impact) / len(self.batch), -self.group, self.value, -min(self.batch))


def compute_mvi(keys, aod: Aod) -> ViolationProfile:
    """Violation profile from the aggregates of the non-empty groups, in dependency order."""
    keys = [k for k in keys if k is not None]
    terms = mvi_terms(keys, aod.kind)
    total = sum(terms, Fraction(0))
    return ViolationProfile(tuple(terms), total, total == 0, (), tuple(AggValue(aod.kind, k) for k in keys))


def _raw_sum(keys) -> Fraction:
    total = Fraction(0)
    prev = None
    for k in keys:
        if k is None:
            continue
        if prev is not None and prev > k:
            total += prev - k
        prev = k
    return total


def _local_delta(keys, gi, new_key):
    """Change in raw violation when group ``gi`` takes ``new_key`` (None = vanishes)."""
    left = next((keys[j] for j in range(gi - 1, -1, -1) if keys[j] is not None), None)
    right = next((keys[j] for j in range(gi + 1, len(keys)) if keys[j] is not None), None)

    def pair(a, b):
        return a - b if a is not None and b is not None and a > b else 0

    old = pair(left, keys[gi]) + pair(keys[gi], right)
    if new_key is None:
        new = pair(left, right)
    else:
        new = pair(left, new_key) + pair(new_key, right)
    return old - new


def _median_after(state: GroupState):
    """(representative position, new doubled median) for each position class."""
    vals = state.sorted
    n = len(vals)
    if n == 1:
        return [(0, None)]
    if n % 2 == 0:
        m = n // 2
        return [(m - 1, 2 * vals[m][0]), (n - 1, 2 * vals[m - 1][0])]
    m = (n - 1) // 2
    out = []
    if m > 0:
        out.append((m - 1, vals[m][0] + vals[m + 1][0]))
    out.append((m, vals[m - 1][0] + vals[m + 1][0]))
    out.append((n - 1, vals[m - 1][0] + vals[m][0]))
    return out


def _group_candidates(state: GroupState, alpha, kind, keys, gi) -> list:
    out = []
    vals = state.sorted
    n = len(vals)

    def add(batch, new_key, value):
        out.append(Candidate(tuple(batch), to_fraction(kind, _local_delta(keys, gi, new_key)), gi, value))

    if alpha in (Alpha.MAX, Alpha.MIN):
        v = vals[-1][0] if alpha is Alpha.MAX else vals[0][0]
        batch = state.ids_with(v)
        rest = n - len(batch)
        if not rest:
            new = None
        elif alpha is Alpha.MAX:
            new = vals[rest - 1][0]
        else:
            new = vals[len(batch)][0]
        add(batch, new, v)
    elif alpha is Alpha.COUNT:
        v, rid = max(vals, key=lambda t: (t[0], -t[1]))
        add([rid], n - 1 if n > 1 else None, v)
    elif alpha is Alpha.COUNTD:
        v = min(state.hist, key=lambda x: (state.hist[x], -x))
        d = len(state.hist)
        add(state.ids_with(v), d - 1 if d > 1 else None, v)
    elif alpha in (Alpha.SUM, Alpha.AVG):
        for v in state.hist:
            if n == 1:
                new = None
            elif alpha is Alpha.SUM:
                new = state.total - v
            else:
                new = Fraction(state.total - v, n - 1)
            add([state.ids_with(v)[0]], new, v)
    else:
        for pos, new in _median_after(state):
            v = vals[pos][0]
            add([state.ids_with(v)[0]], new, v)
    return out


def candidate_set(states, aod: Aod, optimized: bool = True, shrinking_sum: bool = True) -> list:
    """Scored deletion candidates for the current state (groups in dependency order)."""
    alpha = aod.alpha
    keys = [s.key(alpha) for s in states]
    if not optimized:
        return _reference_candidates(states, aod, keys)
    alive = [i for i, k in enumerate(keys) if k is not None]
    left_only = alpha in _SHRINKING and (alpha is not Alpha.SUM or shrinking_sum)
    picked = set()
    for a, b in zip(alive, alive[1:]):
        if keys[a] > keys[b]:
            picked.add(a)
            if not left_only:
                picked.add(b)
    out = []
    for gi in sorted(picked):
        out.extend(_group_candidates(states[gi], alpha, aod.kind, keys, gi))
    return out


def _reference_candidates(states, aod, keys) -> list:
    """One candidate per (group, value); members of such a class have identical impact."""
    base = _raw_sum(keys)
    out = []
    for gi, state in enumerate(states):
        vals = state.values()
        for v in sorted(state.hist):
            rest = list(vals)
            rest.remove(v)
            trial = list(keys)
            trial[gi] = agg_key(rest, aod.alpha) if rest else None
            impact = to_fraction(aod.kind, base - _raw_sum(trial))
            out.append(Candidate((state.ids_with(v)[0],), impact, gi, v))
    return out


def heur_repair(relation: Relation, aod: Aod, optimized: bool = True) -> RepairResult:
    started = time.perf_counter()
    ordered = apply_direction(relation, aod)
    states = [GroupState(g.rows) for g in ordered.groups]
    value_of = {r.id: r.a for r in relation}
    group_of = {}
    for gi, g in enumerate(ordered.groups):
        for r in g.rows:
            group_of[r.id] = gi
    shrinking_sum = all(r.a >= 0 for r in relation)
    alpha = aod.alpha
    order = []
    rounds = 0
    while _raw_sum([s.key(alpha) for s in states]) > 0:
        cands = candidate_set(states, aod, optimized, shrinking_sum)
        best = max(cands, key=lambda c: c.rank)
        for rid in best.batch:
            states[group_of[rid]].remove(rid, value_of[rid])
            order.append(rid)
        rounds += 1
    removed = set(order)
    kept = [r.id for r in relation if r.id not in removed]
    if not check_aod(relation.subset(kept), aod).satisfied:
        raise AssertionError("greedy repair ended in a violating state")
    meta = {
        "algorithm": "heur",
        "optimized": optimized,
        "removal_order": order,
        "rounds": rounds,
        "runtime_s": time.perf_counter() - started,
    }
    return build_result(relation, aod, kept, meta)

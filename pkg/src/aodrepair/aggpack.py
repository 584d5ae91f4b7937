"""Per-group aggregation packing.

For a single group and an aggregate function, a packing answers: for each
value ``x`` the aggregate can take on some subset, how large can that subset
be, and which tuples does it keep? ``PackTable`` holds the answer for all
feasible ``x`` at once. Keys are raw keys (see :mod:`aodrepair.relmodel`).

Two families live here: the direct definitions (``pack_*`` for one value,
``wholepack_naive`` / ``naive_*`` for whole tables) and the optimized whole
table builders (``wholepack_median``, ``wholepack_sum``, ``wholepack_avg``)
that iterate over distinct values and accept a removal bound ``h``.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import InfeasibleValue, NonPositiveValue, UnsupportedCombination
from .relmodel import AggValue, Alpha, Row, kind_of, value_histogram


def as_rows(group) -> list:
    """Accept a sequence of ``Row`` or plain ints (ids become positions)."""
    rows = list(group)
    if rows and not isinstance(rows[0], Row):
        if isinstance(rows[0], tuple) and len(rows[0]) == 3:
            return [Row(*r) for r in rows]
        return [Row(i, 0, int(a)) for i, a in enumerate(rows)]
    return rows


def _raw(x):
    return x.key if isinstance(x, AggValue) else x


def _sorted_rows(rows):
    return sorted(rows, key=lambda r: (r.a, r.id))


def canonical_ids(rows, ids) -> list:
    """Same value multiset as ``ids``, keeping the latest copies of each value.

    Every packer routes its answer through here so that duplicates are always
    resolved the same way: the earliest copies are the ones removed.
    """
    idset = set(ids)
    chosen = Counter(r.a for r in rows if r.id in idset)
    out = []
    for v, pool in _by_value(rows).items():
        k = chosen.get(v, 0)
        if k:
            out.extend(pool[len(pool) - k :])
    return sorted(out)


def _by_value(rows) -> dict:
    """value -> ids ascending."""
    out = defaultdict(list)
    for r in sorted(rows, key=lambda r: r.id):
        out[r.a].append(r.id)
    return out


class PackTable:
    """Max subset size per feasible aggregate value of one group.

    Keys are raw keys held in ascending order next to their sizes; ``sizes``
    offers the same data as a dict. ``reconstruct(key)`` returns kept ids.
    """

    def __init__(self, kind: str, keys, counts, group_size: int, recon: Callable = None, rows=None):
        self.kind = kind
        self.key_list = list(keys)
        self.counts = list(counts)
        self.group_size = group_size
        self._recon = recon
        self.rows = rows

    @classmethod
    def from_sizes(cls, kind, sizes: dict, group_size, recon=None, rows=None) -> "PackTable":
        keys = sorted(sizes)
        return cls(kind, keys, [sizes[k] for k in keys], group_size, recon, rows)

    @cached_property
    def sizes(self) -> dict:
        return dict(zip(self.key_list, self.counts))

    def _find(self, key):
        i = bisect_left(self.key_list, key)
        if i < len(self.key_list) and self.key_list[i] == key:
            return i
        return None

    def reconstruct(self, key) -> list:
        key = _raw(key)
        if self._find(key) is None:
            raise InfeasibleValue(f"{key!r} is not a feasible value of this group")
        ids = self._recon(key)
        return canonical_ids(self.rows, ids) if self.rows is not None else sorted(ids)

    def entries(self) -> dict:
        return {AggValue(self.kind, k): v for k, v in zip(self.key_list, self.counts)}

    def keys(self) -> list:
        return list(self.key_list)

    def restrict(self, h) -> "PackTable":
        """Drop entries that need more than ``h`` removals."""
        if h is None:
            return self
        floor = self.group_size - h
        pairs = [(k, c) for k, c in zip(self.key_list, self.counts) if c >= floor]
        return PackTable(
            self.kind, [k for k, _ in pairs], [c for _, c in pairs], self.group_size, self._recon, self.rows
        )

    def __len__(self):
        return len(self.key_list)

    def __contains__(self, key):
        return self._find(_raw(key)) is not None

    def __getitem__(self, key):
        i = self._find(_raw(key))
        if i is None:
            raise KeyError(key)
        return self.counts[i]

    def __repr__(self):
        return f"PackTable({self.kind}, {len(self)} keys, group of {self.group_size})"


# -- direct single-value packings -------------------------------------------


def pack_max(group, x) -> list:
    rows = as_rows(group)
    x = _raw(x)
    if not any(r.a == x for r in rows):
        raise InfeasibleValue(f"max {x} does not occur in the group")
    return sorted(r.id for r in rows if r.a <= x)


def pack_min(group, x) -> list:
    rows = as_rows(group)
    x = _raw(x)
    if not any(r.a == x for r in rows):
        raise InfeasibleValue(f"min {x} does not occur in the group")
    return sorted(r.id for r in rows if r.a >= x)


def pack_count(group, x) -> list:
    rows = as_rows(group)
    x = _raw(x)
    if not 1 <= x <= len(rows):
        raise InfeasibleValue(f"count {x} not in 1..{len(rows)}")
    return sorted(r.id for r in rows)[:x]


def _countd_order(rows) -> list:
    """Distinct values by decreasing frequency, ties by smaller value."""
    freq = Counter(r.a for r in rows)
    return sorted(freq, key=lambda v: (-freq[v], v))


def pack_countd(group, x) -> list:
    rows = as_rows(group)
    x = _raw(x)
    order = _countd_order(rows)
    if not 1 <= x <= len(order):
        raise InfeasibleValue(f"countd {x} not in 1..{len(order)}")
    keep = set(order[:x])
    return sorted(r.id for r in rows if r.a in keep)


def _median_include(vals, doubled):
    """Largest sorted window with an odd-or-even middle equal to ``x``.

    Returns (start, stop) into ``vals`` or None. Copies of ``x`` can sit on
    either side of the middle, so up to ``n_eq - 1`` of them offset an
    imbalance between the smaller and larger values.
    """
    if doubled % 2:
        return None
    x = doubled // 2
    lo = bisect_left(vals, x)
    hi = bisect_right(vals, x)
    n_lt, n_eq, n_gt = lo, hi - lo, len(vals) - hi
    if n_eq == 0:
        return None
    take_lt = min(n_lt, n_gt + n_eq - 1)
    take_gt = min(n_gt, n_lt + n_eq - 1)
    return lo - take_lt, hi + take_gt


def _median_exclude(vals, doubled):
    """Best balanced window around a pair (i, j), i < j, with vals[i] + vals[j] == 2x."""
    n = len(vals)
    best = None
    pos = defaultdict(list)
    for idx, v in enumerate(vals):
        pos[v].append(idx)
    for i, v in enumerate(vals):
        partner = doubled - v
        if partner < v:
            continue
        cands = pos.get(partner)
        if not cands:
            continue
        # smallest j > i with the partner value keeps the most room on the right
        k = bisect_right(cands, i)
        if k == len(cands):
            continue
        j = cands[k]
        width = min(i, n - 1 - j)
        if best is None or width > best[2]:
            best = (i, j, width)
    return best


def pack_median_naive(group, x) -> list:
    """Max subset whose median is ``x`` (``x`` given doubled, or as ``AggValue``)."""
    rows = _sorted_rows(as_rows(group))
    doubled = _raw(x)
    vals = [r.a for r in rows]
    inc = _median_include(vals, doubled)
    exc = _median_exclude(vals, doubled)
    inc_size = inc[1] - inc[0] if inc else 0
    exc_size = 2 * exc[2] + 2 if exc else 0
    if not inc_size and not exc_size:
        raise InfeasibleValue(f"median {doubled}/2 is not attainable")
    if inc_size >= exc_size:
        chosen = rows[inc[0] : inc[1]]
    else:
        i, j, w = exc
        chosen = rows[i - w : i + 1] + rows[j : j + w + 1]
    return canonical_ids(rows, [r.id for r in chosen])


# -- simple whole tables ----------------------------------------------------


def _simple_table(rows, alpha) -> PackTable:
    n = len(rows)
    alpha = Alpha(alpha)
    hist = value_histogram(r.a for r in rows)
    sizes = {}
    if alpha is Alpha.MAX:
        running = 0
        for v, c in hist:
            running += c
            sizes[v] = running
        recon = lambda x: pack_max(rows, x)
    elif alpha is Alpha.MIN:
        running = 0
        for v, c in reversed(hist):
            running += c
            sizes[v] = running
        recon = lambda x: pack_min(rows, x)
    elif alpha is Alpha.COUNT:
        sizes = {k: k for k in range(1, n + 1)}
        recon = lambda x: pack_count(rows, x)
    elif alpha is Alpha.COUNTD:
        freq = dict(hist)
        running = 0
        for k, v in enumerate(_countd_order(rows), start=1):
            running += freq[v]
            sizes[k] = running
        recon = lambda x: pack_countd(rows, x)
    else:
        raise ValueError(f"no direct table for {alpha}")
    return PackTable.from_sizes(kind_of(alpha), sizes, n, recon, rows)


# -- median -----------------------------------------------------------------


def _median_recon(sorted_rows, plans):
    def recon(key):
        plan = plans[key]
        tag = plan[0]
        if tag == "single":
            _, i, k = plan
            chosen = sorted_rows[i - k : i + k + 1]
        elif tag == "pair":
            _, i, j, k = plan
            chosen = sorted_rows[i - k : i + 1] + sorted_rows[j : j + k + 1]
        else:
            raise AssertionError(plan)
        return [r.id for r in chosen]

    return recon


def wholepack_median(group, h=None) -> PackTable:
    """All feasible medians with their max subset sizes, iterating distinct values.

    Pivot positions are restricted to a window around the middle that can
    still keep ``n - h`` tuples; entries needing more than ``h`` removals are
    dropped.
    """
    rows = _sorted_rows(as_rows(group))
    vals = [r.a for r in rows]
    n = len(vals)
    if h is None or h >= n:
        start, end, floor = 0, n, None
    else:
        start = max(0, (n - h - 2) // 2)
        end = min(n, (n + h + 2) // 2)
        floor = n - h
    best: dict = {}
    plans: dict = {}

    for i in range(start, end):
        k = min(i, n - 1 - i)
        count = 2 * k + 1
        key = 2 * vals[i]
        if best.get(key, -1) < count:
            best[key] = count
            plans[key] = ("single", i, k)

    for i in range(start, min(end, n - 1)):
        k = min(i, n - i - 2)
        count = 2 * k + 2
        key = vals[i] + vals[i + 1]
        if best.get(key, -1) < count:
            best[key] = count
            plans[key] = ("pair", i, i + 1, k)

    hist = value_histogram(vals)
    k_left = 0
    for i, (vi, ci) in enumerate(hist):
        k_left += ci
        k_right = n - k_left
        if floor is not None and 2 * k_left < floor:
            continue
        last_i = k_left - 1
        for vj, cj in hist[i + 1 :]:
            if floor is not None and 2 * k_right < floor:
                break
            m = min(k_left, k_right)
            key = vi + vj
            if best.get(key, -1) < 2 * m:
                best[key] = 2 * m
                plans[key] = ("pair", last_i, n - k_right, m - 1)
            k_right -= cj

    table = PackTable.from_sizes("half", best, n, _median_recon(rows, plans), rows)
    return table.restrict(h)


def naive_median_table(group, h=None) -> PackTable:
    """Every tuple and every tuple pair as the middle of a balanced subset."""
    rows = _sorted_rows(as_rows(group))
    vals = [r.a for r in rows]
    n = len(vals)
    best: dict = {}
    plans: dict = {}
    for i in range(n):
        k = min(i, n - 1 - i)
        key = 2 * vals[i]
        if best.get(key, -1) < 2 * k + 1:
            best[key] = 2 * k + 1
            plans[key] = ("single", i, k)
    for i in range(n):
        vi = vals[i]
        for j in range(i + 1, n):
            k = min(i, n - 1 - j)
            key = vi + vals[j]
            if best.get(key, -1) < 2 * k + 2:
                best[key] = 2 * k + 2
                plans[key] = ("pair", i, j, k)
    return PackTable.from_sizes("half", best, n, _median_recon(rows, plans), rows).restrict(h)


# -- sum --------------------------------------------------------------------


@dataclass
class SumDp:
    """State of the histogram knapsack: sizes ``M``, copy counts ``D`` per distinct value."""

    M: np.ndarray
    D: np.ndarray
    hist: list
    total: int
    lemma_violations: int = 0

    def used(self, j, s) -> int:
        return int(self.D[j, s])


def sum_dp(values: Sequence[int], check: bool = False) -> SumDp:
    from ._kernels import sum_pack_kernel

    values = list(values)
    if any(v <= 0 for v in values):
        raise NonPositiveValue("histogram sum packing requires strictly positive values")
    hist = value_histogram(values)
    total = sum(values)
    vs = np.array([v for v, _ in hist], dtype=np.int64)
    cs = np.array([c for _, c in hist], dtype=np.int64)
    M, D, bad = sum_pack_kernel(vs, cs, total, check)
    dp = SumDp(M, D, hist, total, int(bad))
    if check and bad:
        raise AssertionError(f"incremental copy update disagreed with a full rescan in {bad} cells")
    return dp


def wholepack_sum(group, check: bool = False) -> PackTable:
    rows = as_rows(group)
    dp = sum_dp([r.a for r in rows], check=check)
    reachable = np.nonzero(dp.M > 0)[0]
    sizes = {int(s): int(dp.M[s]) for s in reachable}
    ids_by_value = _by_value(rows)

    def recon(s):
        kept = []
        for j in range(len(dp.hist) - 1, -1, -1):
            k = int(dp.D[j, s])
            if k:
                v = dp.hist[j][0]
                kept.extend(ids_by_value[v][:k])
                s -= k * v
        assert s == 0, "sum reconstruction did not reach zero"
        return kept

    return PackTable.from_sizes("int", sizes, len(rows), recon, rows)


def naive_sum_dp(group) -> PackTable:
    """Tuple-by-tuple knapsack over the full sum range (negatives allowed)."""
    rows = sorted(as_rows(group), key=lambda r: r.id)
    vals = [r.a for r in rows]
    lo = sum(v for v in vals if v < 0)
    hi = sum(v for v in vals if v > 0)
    width = hi - lo + 1
    M = np.full(width, -1, dtype=np.int64)
    M[-lo] = 0
    take = np.zeros((len(vals), width), dtype=bool)
    for j, a in enumerate(vals):
        cand = np.full(width, -1, dtype=np.int64)
        if a >= 0:
            src = M[: width - a]
            cand[a:] = np.where(src >= 0, src + 1, -1)
        else:
            src = M[-a:]
            cand[: width + a] = np.where(src >= 0, src + 1, -1)
        better = cand > M
        take[j] = better
        M = np.where(better, cand, M)
    sizes = {int(i) + lo: int(M[i]) for i in np.nonzero(M > 0)[0]}

    def recon(s):
        idx = s - lo
        kept = []
        for j in range(len(vals) - 1, -1, -1):
            if take[j, idx]:
                kept.append(rows[j].id)
                idx -= vals[j]
        assert idx == -lo
        return kept

    return PackTable.from_sizes("int", sizes, len(rows), recon, rows)


# -- avg --------------------------------------------------------------------


def _avg_table(rows, states, kept_ids_for) -> PackTable:
    """Build the avg table from (kept_sum, kept_size) pairs."""
    sizes: dict = {}
    where: dict = {}
    for s, c in sorted(states):
        if c <= 0:
            continue
        x = Fraction(s, c)
        if sizes.get(x, 0) < c:
            sizes[x] = c
            where[x] = (s, c)
    return PackTable.from_sizes("ratio", sizes, len(rows), lambda x: kept_ids_for(*where[x]), rows)


def _ratio_order(p, q):
    """Ascending order of the distinct reduced ratios p/q, checked exactly."""
    order = np.argsort(p / q, kind="stable")
    ps, qs = p[order], q[order]
    bound = int(np.abs(p).max(initial=0)) * int(q.max(initial=1))
    if bound < 2**62:
        if np.all(ps[:-1] * qs[1:] < ps[1:] * qs[:-1]):
            return order
    return sorted(range(len(p)), key=lambda i: Fraction(int(p[i]), int(q[i])))


def _shift_view(arr, rows, cols):
    """Destination and source views for moving ``arr`` down ``rows`` and right ``cols``."""
    R, C = arr.shape
    if cols >= 0:
        return (slice(rows, R), slice(cols, C)), (slice(0, R - rows), slice(0, C - cols))
    return (slice(rows, R), slice(0, C + cols)), (slice(0, R - rows), slice(-cols, C))


def wholepack_avg(group, h=None) -> PackTable:
    """Reachable (removed count, removed sum) pairs built value by value, with at most ``h`` removals.

    For each distinct value ``v`` with ``c`` copies, every reachable pair may
    additionally drop ``k <= c`` copies. Each cell remembers the value and
    copy count that first reached it, which is enough to rebuild the subset.
    """
    rows = as_rows(group)
    n = len(rows)
    bound = n if h is None else min(h, n)
    hist = value_histogram(r.a for r in rows)
    total = sum(r.a for r in rows)
    lo = sum(v * c for v, c in hist if v < 0)
    hi = sum(v * c for v, c in hist if v > 0)
    reach = np.zeros((bound + 1, hi - lo + 1), dtype=bool)
    reach[0, -lo] = True
    src_j = np.full(reach.shape, -1, dtype=np.int32)
    src_k = np.zeros(reach.shape, dtype=np.int32)
    for j, (v, c) in enumerate(hist):
        old = reach.copy()
        for k in range(1, min(c, bound) + 1):
            dst, src = _shift_view(reach, k, k * v)
            fresh = old[src] & ~reach[dst]
            if fresh.any():
                reach[dst] |= fresh
                src_j[dst][fresh] = j
                src_k[dst][fresh] = k

    ls, idx = np.nonzero(reach[: min(bound, n - 1) + 1])
    kept = n - ls
    sums = total - (idx + lo)
    g = np.gcd(sums, kept)
    # row-major order lists fewer removals first, so a ratio's first cell is its largest subset
    pq = np.stack([sums // g, kept // g], axis=1)
    pq, first = np.unique(pq, axis=0, return_index=True)
    order = _ratio_order(pq[:, 0], pq[:, 1])
    first = first[order]
    keys = [Fraction(int(a), int(b)) for a, b in pq[order].tolist()]
    counts = kept[first].tolist()
    cells = list(zip(ls[first].tolist(), idx[first].tolist()))

    def recon(x):
        l, i = cells[bisect_left(keys, x)]
        removed = Counter()
        while l:
            j, k = int(src_j[l, i]), int(src_k[l, i])
            v = hist[j][0]
            removed[v] += k
            l -= k
            i -= k * v
        out = []
        for v, ids in _by_value(rows).items():
            out.extend(ids[: len(ids) - removed[v]])
        return out

    return PackTable("ratio", keys, counts, n, recon, rows)


def naive_avg_dp(group) -> PackTable:
    """Boolean (size, sum) reachability over tuples, one tuple at a time."""
    rows = sorted(as_rows(group), key=lambda r: r.id)
    reach = {(0, 0)}
    parent: dict = {}
    for j, r in enumerate(rows):
        fresh = []
        for l, s in reach:
            state = (l + 1, s + r.a)
            if state not in reach and state not in parent:
                parent[state] = (j, (l, s))
                fresh.append(state)
        reach.update(fresh)

    def kept_ids(s, c):
        state = (c, s)
        out = []
        while state != (0, 0):
            j, state = parent[state]
            out.append(rows[j].id)
        return out

    return _avg_table(rows, [(s, l) for l, s in reach], kept_ids)


# -- removal-count tables ---------------------------------------------------


def bounded_removal_tables(group, alpha, h) -> PackTable:
    """Sum/avg tables tracked by how many tuples were removed, capped at ``h``."""
    alpha = Alpha(alpha)
    rows = sorted(as_rows(group), key=lambda r: r.id)
    n = len(rows)
    total = sum(r.a for r in rows)
    if alpha is Alpha.SUM:
        return _bounded_sum(rows, n, total, h)
    if alpha is Alpha.AVG:
        return _bounded_avg(rows, n, total, h)
    raise UnsupportedCombination(f"removal-count tables exist only for sum and avg, not {alpha}")


def _bounded_sum(rows, n, total, h):
    best = {total: 0}
    history = {total: [(-1, 0, None)]}
    for j, r in enumerate(rows):
        updates = {}
        for s, c in best.items():
            if c + 1 > h:
                continue
            s2 = s - r.a
            have = min(best.get(s2, n + 1), updates.get(s2, (n + 1,))[0])
            if c + 1 < have:
                updates[s2] = (c + 1, s)
        for s2, (c2, src) in updates.items():
            best[s2] = c2
            history.setdefault(s2, []).append((j, c2, src))

    def recon(s):
        removed = set()
        jcur = n - 1
        while True:
            recs = history[s]
            rec = max((x for x in recs if x[0] <= jcur), key=lambda x: x[0])
            j, _, src = rec
            if src is None:
                break
            removed.add(rows[j].id)
            s, jcur = src, j - 1
        return [r.id for r in rows if r.id not in removed]

    sizes = {s: n - c for s, c in best.items() if n - c >= 1}
    return PackTable.from_sizes("int", sizes, n, recon, rows)


def _bounded_avg(rows, n, total, h):
    reach = {(0, total)}
    parent: dict = {}
    for j, r in enumerate(rows):
        fresh = []
        for l, s in reach:
            if l + 1 > h:
                continue
            state = (l + 1, s - r.a)
            if state not in reach and state not in parent:
                parent[state] = (j, (l, s))
                fresh.append(state)
        reach.update(fresh)

    def kept_ids(s, c):
        state = (n - c, s)
        removed = set()
        while state != (0, total):
            j, state = parent[state]
            removed.add(rows[j].id)
        return [r.id for r in rows if r.id not in removed]

    return _avg_table(rows, [(s, n - l) for l, s in reach], kept_ids)


# -- dispatchers ------------------------------------------------------------


def wholepack_naive(group, alpha, h=None) -> PackTable:
    """Reference table for any aggregate, built from the direct definitions."""
    rows = as_rows(group)
    alpha = Alpha(alpha)
    if alpha in (Alpha.MAX, Alpha.MIN, Alpha.COUNT, Alpha.COUNTD):
        return _simple_table(rows, alpha).restrict(h)
    if alpha is Alpha.MEDIAN:
        return naive_median_table(rows, h)
    if h is not None:
        return bounded_removal_tables(rows, alpha, h)
    if alpha is Alpha.SUM:
        return naive_sum_dp(rows)
    return naive_avg_dp(rows)


def pack_table(group, alpha, packer="optimized", h=None, fallback=True) -> PackTable:
    """The table the repair engine uses for one group."""
    alpha = Alpha(alpha)
    rows = as_rows(group)
    if packer == "naive":
        return wholepack_naive(rows, alpha, h)
    if packer != "optimized":
        raise ValueError(f"unknown packer {packer!r}")
    if alpha in (Alpha.MAX, Alpha.MIN, Alpha.COUNT, Alpha.COUNTD):
        return _simple_table(rows, alpha).restrict(h)
    if alpha is Alpha.MEDIAN:
        return wholepack_median(rows, h)
    if alpha is Alpha.AVG:
        return wholepack_avg(rows, h)
    if all(r.a > 0 for r in rows):
        return wholepack_sum(rows).restrict(h)
    if not fallback:
        raise UnsupportedCombination("optimized sum packing needs strictly positive values")
    if h is not None:
        return bounded_removal_tables(rows, alpha, h)
    return naive_sum_dp(rows)

"""Exact cardinality repair: a dynamic program over groups in dependency order.

The solution dictionary maps an aggregate value ``x`` to the best monotonic
subset of the groups processed so far whose rightmost non-empty group has
aggregate exactly ``x``. Each group contributes its packing table; the
candidate for ``x`` is the table size plus the best dictionary entry with key
``<= x`` (or nothing, meaning every earlier group is dropped). Keys the
group cannot produce keep their old entries, which models deleting the whole
group.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .aggpack import pack_table
from .errors import BoundTooTight, CorruptBacktrace, InvalidParams
from .relmodel import Aod, Relation, apply_direction, check_aod
from .result import RepairResult, build_result

PACKERS = ("naive", "optimized")
PRUNINGS = ("none", "dominated", "bound", "both")


@dataclass(frozen=True)
class RepairOptions:
    """``h_bound``: None, ``"heuristic"`` (run the greedy repair first) or a removal count.

    ``fallback`` lets the optimized sum packer fall back to the general
    knapsack when a group holds zero or negative values.
    """

    packer: str = "optimized"
    h_bound: object = None
    dict_pruning: str = "none"
    fallback: bool = True

    def __post_init__(self):
        if self.packer not in PACKERS:
            raise InvalidParams(f"packer must be one of {PACKERS}")
        if self.dict_pruning not in PRUNINGS:
            raise InvalidParams(f"dict_pruning must be one of {PRUNINGS}")
        h = self.h_bound
        if h is not None and h != "heuristic":
            if isinstance(h, bool) or not isinstance(h, int) or h < 0:
                raise InvalidParams("explicit h_bound must be a non-negative integer")

    @property
    def prune_dominated(self) -> bool:
        return self.dict_pruning in ("dominated", "both")

    @property
    def prune_bound(self) -> bool:
        return self.dict_pruning in ("bound", "both")


class Node(NamedTuple):
    """Dictionary entry: total kept size and the back-pointer chain."""

    size: int
    group: int
    key: object
    prev: Optional["Node"]


class SolutionDict:
    """Ordered map from aggregate raw key to ``Node``, kept as two sorted parallel lists.

    Group steps merge a sorted packing table into it in one linear pass, so
    keys are never hashed or re-sorted.
    """

    __slots__ = ("keys", "nodes")

    def __init__(self, keys=(), nodes=()):
        self.keys = list(keys)
        self.nodes = list(nodes)

    def __len__(self):
        return len(self.keys)

    def items(self):
        return zip(self.keys, self.nodes)

    def as_dict(self) -> dict:
        return dict(zip(self.keys, self.nodes))

    def best(self) -> Node | None:
        return max(self.nodes, key=lambda node: node.size, default=None)


def _size(node) -> int:
    return node.size if isinstance(node, Node) else node


def _sweep_dominated(keys, nodes):
    out_k, out_n = [], []
    best = -1
    for k, node in zip(keys, nodes):
        size = _size(node)
        if size > best:
            out_k.append(k)
            out_n.append(node)
            best = size
    return out_k, out_n


def _sweep_bound(keys, nodes, h, n):
    pairs = [(k, node) for k, node in zip(keys, nodes) if n - _size(node) <= h]
    return [k for k, _ in pairs], [node for _, node in pairs]


def prune_dominated(entries):
    """Keep an entry only if it is strictly larger than every entry with a smaller key.

    Accepts a ``SolutionDict`` or a plain mapping of key to size (or ``Node``).
    """
    if isinstance(entries, SolutionDict):
        return SolutionDict(*_sweep_dominated(entries.keys, entries.nodes))
    keys = sorted(entries)
    return dict(zip(*_sweep_dominated(keys, [entries[k] for k in keys])))


def prune_by_bound(entries, h: int, n: int):
    """Drop entries that already imply more than ``h`` removals out of the ``n`` tuples seen."""
    if isinstance(entries, SolutionDict):
        return SolutionDict(*_sweep_bound(entries.keys, entries.nodes, h, n))
    keys = sorted(entries)
    return dict(zip(*_sweep_bound(keys, [entries[k] for k in keys], h, n)))


def _advance(sd: SolutionDict, tkeys, tcounts, gi: int) -> SolutionDict:
    """One group step: merge the group's table into the pre-update dictionary."""
    old_k, old_n = sd.keys, sd.nodes
    m = len(old_k)
    p = 0
    best_size, best_node = 0, None
    out_k, out_n = [], []
    for x, cnt in zip(tkeys, tcounts):
        while p < m and old_k[p] < x:
            node = old_n[p]
            if node.size > best_size:
                best_size, best_node = node.size, node
            out_k.append(old_k[p])
            out_n.append(node)
            p += 1
        cur = None
        if p < m and old_k[p] == x:
            cur = old_n[p]
            if cur.size > best_size:
                best_size, best_node = cur.size, cur
            p += 1
        cand = cnt + best_size
        out_k.append(x)
        out_n.append(Node(cand, gi, x, best_node) if cur is None or cand > cur.size else cur)
    out_k.extend(old_k[p:])
    out_n.extend(old_n[p:])
    return SolutionDict(out_k, out_n)


def _resolve_bound(relation, aod, options):
    if options.h_bound is None:
        return None, None
    if options.h_bound == "heuristic":
        from .heurrepair import heur_repair

        heur = heur_repair(relation, aod, optimized=True)
        return heur.removed_count, heur
    return int(options.h_bound), None


def card_repair(relation: Relation, aod: Aod, options: RepairOptions | None = None) -> RepairResult:
    options = options or RepairOptions()
    started = time.perf_counter()
    h, heur = _resolve_bound(relation, aod, options)
    ordered = apply_direction(relation, aod)
    groups = ordered.groups

    entries = SolutionDict()
    seen = 0
    peak = 0
    for gi, grp in enumerate(groups):
        table = pack_table(grp.rows, aod.alpha, options.packer, h, options.fallback)
        entries = _advance(entries, table.key_list, table.counts, gi)
        seen += len(grp.rows)
        if options.prune_dominated:
            entries = prune_dominated(entries)
        if h is not None and options.prune_bound:
            entries = prune_by_bound(entries, h, seen)
        peak = max(peak, len(entries))

    final = entries.best()
    if final is None and len(relation) and h is not None:
        raise BoundTooTight(f"no monotonic subset removes at most {h} tuples")

    kept = reconstruct(final, ordered, aod, options, h)
    if h is not None and len(relation) - len(kept) > h:
        raise BoundTooTight(f"no monotonic subset removes at most {h} tuples")
    meta = {
        "algorithm": "exact",
        "packer": options.packer,
        "dict_pruning": options.dict_pruning,
        "h_bound": options.h_bound,
        "heuristic_bound_used": h,
        "peak_dict_size": peak,
        "runtime_s": time.perf_counter() - started,
    }
    if heur is not None:
        meta["heuristic_runtime_s"] = heur.metadata.get("runtime_s")
    return build_result(relation, aod, kept, meta)


def reconstruct(final: Node | None, ordered: Relation, aod: Aod, options: RepairOptions, h=None) -> list:
    """Follow back-pointers and re-derive each chosen group's subset with its packer."""
    if final is None:
        return []
    kept = []
    node = final
    last_group = None
    last_key = None
    while node is not None:
        if last_group is not None and not (node.group < last_group and node.key <= last_key):
            raise CorruptBacktrace("back-pointer chain is not ordered")
        grp = ordered.groups[node.group]
        table = pack_table(grp.rows, aod.alpha, options.packer, h, options.fallback)
        ids = table.reconstruct(node.key)
        kept.extend(ids)
        last_group, last_key = node.group, node.key
        node = node.prev
    if len(kept) != final.size:
        raise CorruptBacktrace(f"reconstructed {len(kept)} tuples, expected {final.size}")
    if not check_aod(ordered.subset(kept), Aod(aod.alpha)).satisfied:
        raise CorruptBacktrace("reconstructed subset violates the dependency")
    return sorted(kept)

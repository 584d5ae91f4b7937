"""Exhaustive repair oracle and the synthetic workload generator."""

from __future__ import annotations

import csv
import itertools
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidParams, TooLarge
from .relmodel import Aod, Relation, Row, agg_key, apply_direction
from .result import RepairResult, build_result

DEFAULT_CAP = 20


def brute_force_repair(relation: Relation, aod: Aod, cap: int = DEFAULT_CAP) -> RepairResult:
    """Largest satisfying subset by enumeration; ties go to the lexicographically smallest id set.

    Works on tuple ids only, independent of any packing logic.
    """
    n = len(relation)
    if n > cap:
        raise TooLarge(f"{n} tuples exceeds the enumeration cap of {cap}")
    ids = sorted(relation.ids)
    groups = [[(r.id, r.a) for r in g.rows] for g in apply_direction(relation, aod).groups]

    def monotone(keep):
        prev = None
        for grp in groups:
            vals = [a for i, a in grp if i in keep]
            if vals:
                k = agg_key(vals, aod.alpha)
                if prev is not None and prev > k:
                    return False
                prev = k
        return True

    for size in range(n, -1, -1):
        for combo in itertools.combinations(ids, size):
            if monotone(set(combo)):
                return build_result(relation, aod, combo, {"algorithm": "brute_force"})
    raise AssertionError("the empty subset always satisfies the dependency")


@dataclass(frozen=True)
class GenParams:
    n: int
    groups: int = 10
    noise_frac: float = 0.0
    violating_groups: int = 4
    seed: int = 0

    def validate(self):
        if self.n < 0:
            raise InvalidParams("n must be non-negative")
        if self.groups < 1:
            raise InvalidParams("groups must be at least 1")
        if not 0 <= self.violating_groups <= self.groups:
            raise InvalidParams("violating_groups must lie in 0..groups")
        if not 0 <= self.noise_frac <= 1:
            raise InvalidParams("noise_frac must lie in [0, 1]")
        if self.noise_frac > 0 and self.violating_groups == 0 and round(self.n * self.noise_frac):
            raise InvalidParams("noise tuples need at least one violating group")
        if not 0 <= self.seed < 2**64:
            raise InvalidParams("seed must be a 64-bit unsigned integer")


CLEAN_RANGE = (1, 100)
NOISE_RANGE = (101, 120)


def generate(params: GenParams) -> Relation:
    """Clean values uniform in 1..100 over all groups, noise in 101..120 over the first groups.

    Group keys run 1..groups; each tuple picks its group independently.
    """
    params.validate()
    rng = np.random.default_rng(params.seed)
    noise = int(round(params.n * params.noise_frac))
    clean = params.n - noise
    c_groups = rng.integers(1, params.groups + 1, size=clean)
    c_vals = rng.integers(CLEAN_RANGE[0], CLEAN_RANGE[1] + 1, size=clean)
    n_groups = rng.integers(1, params.violating_groups + 1, size=noise) if noise else np.empty(0, int)
    n_vals = rng.integers(NOISE_RANGE[0], NOISE_RANGE[1] + 1, size=noise)
    pairs = list(zip(c_groups.tolist(), c_vals.tolist())) + list(zip(n_groups.tolist(), n_vals.tolist()))
    return Relation(Row(i, g, a) for i, (g, a) in enumerate(pairs))


def generator_metadata(params: GenParams) -> dict:
    meta = asdict(params)
    meta.update(
        prng="numpy.random.default_rng (PCG64)",
        group_assignment="independent uniform per tuple",
        clean_values=list(CLEAN_RANGE),
        noise_values=list(NOISE_RANGE),
    )
    return meta


def write_csv(relation: Relation, path, group_col: str = "g", agg_col: str = "a"):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([group_col, agg_col])
        for r in sorted(relation.rows, key=lambda r: r.id):
            w.writerow([r.g, r.a])

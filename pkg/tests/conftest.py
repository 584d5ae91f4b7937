import itertools

import pytest

from aodrepair.relmodel import Relation, agg_key

TABLE1 = [
    ("Ashley", 1, 1),
    ("Brandon", 1, 2),
    ("Chloe", 2, 2),
    ("Daniel", 2, 5),
    ("Emily", 2, 6),
    ("Faith", 2, 5),
    ("Gavin", 2, 2),
    ("Hanna", 3, 8),
    ("Isaac", 3, 4),
    ("Jerry", 3, 3),
    ("Katie", 3, 2),
    ("Larry", 3, 2),
    ("Marie", 3, 1),
    ("Nathan", 3, 1),
]
NAMES = [name for name, _, _ in TABLE1]

# Example relation for the greedy max walkthrough; ids 0..6
EX4_PAIRS = [(1, 3), (1, 4), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2)]


@pytest.fixture
def table1():
    return Relation.from_pairs((g, a) for _, g, a in TABLE1)


@pytest.fixture
def table1_csv(tmp_path):
    path = tmp_path / "people.csv"
    lines = ["person,edu,income"] + [f"{n},{g},{a}" for n, g, a in TABLE1]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def ex4():
    return Relation.from_pairs(EX4_PAIRS)


def brute_table(values, alpha, h=None):
    """Max sub-bag size per aggregate key, by enumerating every sub-bag."""
    n = len(values)
    best = {}
    for r in range(1, n + 1):
        if h is not None and n - r > h:
            continue
        for combo in itertools.combinations(values, r):
            k = agg_key(list(combo), alpha)
            if best.get(k, 0) < r:
                best[k] = r
    return best

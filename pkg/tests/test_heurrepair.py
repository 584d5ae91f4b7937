import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from aodrepair.heurrepair import GroupState, candidate_set, compute_mvi, heur_repair
from aodrepair.relmodel import Aod, Relation, Row, check_aod

ALL = ["max", "min", "count", "countd", "median", "sum", "avg"]


def pairs_of(rel, ids):
    by_id = {r.id: r for r in rel}
    return [(by_id[i].g, by_id[i].a) for i in ids]


def test_reference_path_removal_order(ex4):
    res = heur_repair(ex4, Aod("max"), optimized=False)
    assert pairs_of(ex4, res.metadata["removal_order"]) == [(1, 4), (2, 4), (1, 3), (2, 3)]
    assert res.metadata["rounds"] == 4


def test_optimized_path_same_removed_set(ex4):
    res = heur_repair(ex4, Aod("max"))
    assert sorted(pairs_of(ex4, res.removed_ids)) == [(1, 3), (1, 4), (2, 3), (2, 4)]


def test_median_pitfall_clears_first_group():
    rel = Relation.from_groups({1: [7, 8, 9, 10, 11], 2: [1, 5, 5, 5, 10]})
    res = heur_repair(rel, Aod("median"))
    assert {pair[0] for pair in pairs_of(rel, res.removed_ids)} == {1}
    assert res.removed_count == 5


def test_satisfied_input_untouched(table1):
    res = heur_repair(table1, Aod("sum"))
    assert res.removed_ids == ()
    assert res.metadata["rounds"] == 0


def test_compute_mvi_units():
    prof = compute_mvi([10, 9], Aod("median"))
    assert prof.s_mvi == Fraction(1, 2)
    assert not prof.satisfied


def test_group_state_keys():
    st_ = GroupState([Row(0, 1, 4), Row(1, 1, 2), Row(2, 1, 4)])
    assert st_.key("max") == 4
    assert st_.key("countd") == 2
    st_.remove(0, 4)
    assert st_.ids_with(4) == [2]
    assert st_.key("median") == 6  # doubled: median of [2, 4] is 3


def test_candidates_cover_violations(ex4):
    states = [GroupState(g.rows) for g in ex4.groups]
    cands = candidate_set(states, Aod("max"))
    assert cands
    assert {c.group for c in cands} <= {0, 1}
    # every single deletion leaves S_MVI at 2 here, so the tie rules decide
    best = max(cands, key=lambda c: c.rank)
    assert best.impact == 0
    assert best.batch == (4,)


@pytest.mark.parametrize("alpha", ALL)
@pytest.mark.parametrize("optimized", [True, False])
def test_always_ends_monotone(alpha, optimized):
    rng = random.Random(len(alpha))
    for _ in range(60):
        n = rng.randint(0, 25)
        rel = Relation.from_pairs((rng.randint(1, 5), rng.randint(-3, 9)) for _ in range(n))
        for direction in ("increasing", "decreasing"):
            aod = Aod(alpha, direction)
            res = heur_repair(rel, aod, optimized=optimized)
            assert check_aod(res.kept(rel), aod).satisfied
            assert len(res.metadata["removal_order"]) == res.removed_count


@given(st.lists(st.tuples(st.integers(1, 4), st.integers(1, 9)), max_size=20), st.sampled_from(ALL))
@settings(max_examples=100, deadline=None)
def test_deterministic(pairs, alpha):
    rel = Relation.from_pairs(pairs)
    a = heur_repair(rel, Aod(alpha))
    b = heur_repair(rel, Aod(alpha))
    assert a.metadata["removal_order"] == b.metadata["removal_order"]

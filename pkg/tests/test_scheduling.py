
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rcof.errors import InstanceTooLarge
from rcof.scheduling import (
    SelectionInstance,
    brute_force_select,
    greedy_select,
    linear_matroid,
    matroid_check,
    random_select,
)


def random_instance(rng, p=None):
    L = int(rng.integers(1, 5))
    K = int(rng.integers(L, 11))
    p = p or int(rng.choice([2, 5, 17]))
    q = rng.integers(0, p, size=(K, L))
    # repeated variances make ties common
    s2 = rng.choice([0.25, 0.5, 1.0, 2.0, 4.0], size=K) if rng.random() < 0.5 else rng.uniform(0.1, 5, K)
    return SelectionInstance(q, s2, p)


def test_square_full_rank_selects_everyone():
    inst = SelectionInstance(np.eye(3, dtype=int), [3.0, 1.0, 2.0], 5)
    assert greedy_select(inst).chosen == (0, 1, 2)
    assert brute_force_select(inst).chosen == (0, 1, 2)


def test_three_user_example():
    inst = SelectionInstance([[1, 0], [0, 1], [1, 1]], [0.5, 1.0, 0.25], 2)
    assert inst.weights.tolist() == [2.0, 1.0, 4.0]
    g = greedy_select(inst)
    assert g.chosen == (0, 2)
    assert g.objective == 0.5
    assert brute_force_select(inst) == g


def test_equal_rows_infeasible():
    inst = SelectionInstance([[1, 2]] * 4, [1.0, 2.0, 3.0, 4.0], 5)
    for res in (greedy_select(inst), brute_force_select(inst)):
        assert not res.feasible
        assert res.objective == np.inf


def test_brute_force_guard():
    inst = SelectionInstance(np.ones((21, 1), dtype=int), np.ones(21), 5)
    with pytest.raises(InstanceTooLarge):
        brute_force_select(inst)


def test_greedy_matches_brute_force_500():
    rng = np.random.default_rng(2024)
    done = 0
    while done < 500:
        inst = random_instance(rng)
        if not inst.feasible:
            continue
        g, b = greedy_select(inst), brute_force_select(inst)
        assert g.feasible and b.feasible
        assert g.objective == b.objective
        done += 1


def test_greedy_over_rationals():
    rng = np.random.default_rng(1)
    for _ in range(100):
        q = rng.integers(-3, 4, size=(6, 3))
        inst = SelectionInstance(q, rng.uniform(0.1, 3, 6), None)
        if inst.feasible:
            assert greedy_select(inst).objective == brute_force_select(inst).objective


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_greedy_output_independent(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng)
    res = greedy_select(inst)
    assert inst.rank(res.chosen) == len(res.chosen)
    assert res.feasible == inst.feasible


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_tied_permutation_keeps_objective(seed):
    rng = np.random.default_rng(seed)
    L, K = 2, 6
    q = rng.integers(0, 5, size=(K, L))
    s2 = rng.choice([1.0, 2.0], size=K)
    perm = rng.permutation(K)
    a = greedy_select(SelectionInstance(q, s2, 5))
    b = greedy_select(SelectionInstance(q[perm], s2[perm], 5))
    assert a.objective == b.objective
    # chosen sets agree on the strictly better weight class
    best = s2.min()
    strict_a = {tuple(q[k]) for k in a.chosen if s2[k] < best + 1e-12}
    strict_b = {tuple(q[perm][k]) for k in b.chosen if s2[perm][k] < best + 1e-12}
    assert len(strict_a) == len(strict_b)


def test_random_select_size():
    inst = SelectionInstance(np.eye(4, dtype=int)[[0, 1, 2, 3, 0, 1]], np.ones(6), 5)
    res = random_select(inst, np.random.default_rng(0))
    assert len(res.chosen) == 4


def test_linear_matroid_axioms():
    rows = np.random.default_rng(5).integers(0, 5, size=(6, 3))
    assert matroid_check(6, linear_matroid(rows, 5))
    assert matroid_check(5, linear_matroid(np.random.default_rng(6).integers(-2, 3, size=(5, 2))))


def test_non_matroids_rejected():
    assert not matroid_check(2, lambda s: len(s) == 1)  # empty set missing
    fam = {frozenset(), frozenset({0}), frozenset({1}), frozenset({0, 1}), frozenset({2})}
    assert not matroid_check(3, lambda s: s in fam)
    # not downward closed
    assert not matroid_check(2, lambda s: s in {frozenset(), frozenset({0, 1})})


def test_matroid_check_guard():
    with pytest.raises(InstanceTooLarge):
        matroid_check(13, lambda s: True)

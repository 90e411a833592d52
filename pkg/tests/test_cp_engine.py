import random
from itertools import combinations

import pytest

from dpcp import (
    AdapterFailure,
    Disjunctive,
    DomainStore,
    FiniteSet,
    INFINITY,
    Interval,
    PrecedenceLe,
    VarDuration,
    ect_envelope,
    edge_finding_disjunctive,
    propagate_fixpoint,
    propagate_once,
    sum_le,
    time_table_cumulative,
)

from conftest import MICRO_FAMILIES, check_micro_model, domain_values


# --- domains ---------------------------------------------------------------

def test_interval_basics():
    store = DomainStore([Interval(2, 9)])
    assert store.lb(0) == 2 and store.ub(0) == 9
    store.set_lb(0, 4)
    store.set_ub(0, 7)
    assert (store.lb(0), store.ub(0)) == (4, 7)
    store.set_lb(0, 3)  # weaker: no-op
    assert store.lb(0) == 4
    store.set_lb(0, 7)
    assert not store.infeasible
    store.set_lb(0, 8)
    assert store.infeasible


def test_finite_set_ops():
    store = DomainStore([FiniteSet([7, 1, 4, 4])])
    assert domain_values(store.domain(0)) == [1, 4, 7]
    assert store.contains(0, 4) and not store.contains(0, 5)
    store.remove_value(0, 4)
    assert domain_values(store.domain(0)) == [1, 7]
    store.set_lb(0, 2)
    assert domain_values(store.domain(0)) == [7]
    store.set_ub(0, 6)
    assert store.infeasible


def test_interval_interior_removal_is_dropped():
    store = DomainStore([Interval(0, 5)])
    store.remove_value(0, 3)
    assert (store.lb(0), store.ub(0)) == (0, 5)
    store.remove_value(0, 0)
    store.remove_value(0, 5)
    assert (store.lb(0), store.ub(0)) == (1, 4)


def test_empty_domain_at_construction_flags_store():
    assert DomainStore([Interval(4, 3)]).infeasible
    assert DomainStore([FiniteSet([])]).infeasible


def test_infeasibility_is_sticky():
    store = DomainStore([Interval(0, 1), Interval(0, 9)])
    store.set_lb(0, 5)
    assert store.infeasible
    store.set_ub(1, 3)  # ignored once infeasible
    assert store.domain(1).ub == 9


def test_bad_variable_id_raises_adapter_failure():
    store = DomainStore([Interval(0, 1)])
    with pytest.raises(AdapterFailure):
        store.lb(3)


# --- propagators: pinned examples -------------------------------------------

def test_propagate_once_empty_list_identity():
    store = DomainStore([Interval(0, 9)])
    before = store.revision
    propagate_once(store, [])
    assert store.revision == before


def test_precedence_single_application():
    store = DomainStore([Interval(0, 10), Interval(0, 10)])
    propagate_once(store, [PrecedenceLe(0, 4, 1)])
    assert (store.lb(1), store.ub(1)) == (4, 10)
    assert (store.lb(0), store.ub(0)) == (0, 6)


def test_precedence_infeasible():
    store = DomainStore([Interval(8, 10), Interval(0, 5)])
    propagate_once(store, [PrecedenceLe(0, 4, 1)])
    assert store.infeasible


def test_precedence_chain_fixpoint():
    store = DomainStore([Interval(0, 10) for _ in range(3)])
    propagate_fixpoint(store, [PrecedenceLe(0, 1, 1), PrecedenceLe(1, 1, 2)])
    assert (store.lb(0), store.ub(0)) == (0, 8)
    assert (store.lb(1), store.ub(1)) == (1, 9)
    assert (store.lb(2), store.ub(2)) == (2, 10)


def test_fixpoint_noop_when_already_stable():
    store = DomainStore([Interval(0, 8), Interval(1, 9), Interval(2, 10)])
    props = [PrecedenceLe(0, 1, 1), PrecedenceLe(1, 1, 2)]
    propagate_fixpoint(store, props)
    rev = store.revision
    propagate_fixpoint(store, props)
    assert store.revision == rev


def test_edge_finding_lifts_competing_job():
    store = DomainStore([Interval(0, 10), Interval(1, 2)])
    edge_finding_disjunctive(store, [(0, 5), (1, 3)])
    assert store.lb(0) == 4
    assert (store.lb(1), store.ub(1)) == (1, 2)


def test_edge_finding_single_job_unchanged():
    store = DomainStore([Interval(3, 7)])
    edge_finding_disjunctive(store, [(0, 2)])
    assert (store.lb(0), store.ub(0)) == (3, 7)


def test_edge_finding_overload_infeasible():
    store = DomainStore([Interval(0, 0), Interval(0, 0)])
    edge_finding_disjunctive(store, [(0, 5), (1, 3)])
    assert store.infeasible


def test_edge_finding_matches_once_and_fixpoint():
    def fresh():
        return DomainStore([Interval(0, 10), Interval(1, 2)])

    props = [Disjunctive([(0, 5), (1, 3)])]
    once = propagate_once(fresh(), props)
    fixed = propagate_fixpoint(fresh(), props)
    for x in range(2):
        assert (once.lb(x), once.ub(x)) == (fixed.lb(x), fixed.ub(x))


def test_edge_finding_variable_durations_use_lower_bound():
    # Duration of job 1 is a variable in {3, 6}; only the 3 is assumed.
    store = DomainStore([Interval(0, 10), Interval(1, 2), FiniteSet([3, 6])])
    edge_finding_disjunctive(store, [(0, 5), (1, VarDuration(2))])
    assert store.lb(0) == 4


def test_time_table_lifts_past_compulsory_block():
    store = DomainStore([Interval(2, 2), Interval(0, 8)])
    time_table_cumulative(store, [(0, 4, 2), (1, 3, 1)], 2)
    assert (store.lb(1), store.ub(1)) == (6, 8)


def test_time_table_usage_exceeds_capacity():
    store = DomainStore([Interval(0, 5)])
    time_table_cumulative(store, [(0, 2, 3)], 2)
    assert store.infeasible


def test_time_table_no_compulsory_parts_unchanged():
    store = DomainStore([Interval(0, 20), Interval(0, 20)])
    time_table_cumulative(store, [(0, 3, 2), (1, 4, 2)], 2)
    assert (store.lb(0), store.ub(0)) == (0, 20)
    assert (store.lb(1), store.ub(1)) == (0, 20)


def test_sum_le_examples():
    store = DomainStore([FiniteSet([2, 5, 9]), FiniteSet([3, 4])])
    sum_le(store, [0, 1], 9)
    assert domain_values(store.domain(0)) == [2, 5]
    assert domain_values(store.domain(1)) == [3, 4]

    store = DomainStore([Interval(4, 9), Interval(6, 9)])
    sum_le(store, [0, 1], 9)
    assert store.infeasible

    store = DomainStore([FiniteSet([2, 5, 9])])
    sum_le(store, [0], INFINITY)
    assert domain_values(store.domain(0)) == [2, 5, 9]


def test_ect_envelope_examples():
    assert ect_envelope([(0, 3, 2)], 2) == 3
    assert ect_envelope([(0, 3, 2), (4, 2, 2)], 2) == 6
    assert ect_envelope([], 2) == 0


def brute_force_envelope(tasks, capacity):
    best = 0
    for k in range(1, len(tasks) + 1):
        for subset in combinations(tasks, k):
            energy = sum(u * p for _lb, p, u in subset)
            lo = min(lb for lb, _p, _u in subset)
            best = max(best, lo + -(-energy // capacity))
    return best


def test_ect_envelope_against_subset_brute_force():
    rng = random.Random(5)
    for _ in range(200):
        k = rng.randint(1, 8)
        tasks = [(rng.randint(0, 20), rng.randint(1, 6), rng.randint(0, 4)) for _ in range(k)]
        cap = rng.randint(1, 4)
        assert ect_envelope(tasks, cap) == brute_force_envelope(tasks, cap)


# --- propagator soundness & drivers -----------------------------------------

@pytest.mark.parametrize("family", sorted(MICRO_FAMILIES))
def test_micro_model_soundness(family):
    rng = random.Random(hash(family) % (2**32))
    build = MICRO_FAMILIES[family]
    for _ in range(120):
        check_micro_model(*build(rng))


def test_fixpoint_is_idempotent_for_every_propagator():
    rng = random.Random(99)
    for family, build in sorted(MICRO_FAMILIES.items()):
        for _ in range(40):
            domains, props, _check = build(rng)
            store = DomainStore([d.copy() for d in domains])
            propagate_fixpoint(store, props)
            if store.infeasible:
                continue
            rev = store.revision
            for p in props:
                p.propagate(store)
            assert store.revision == rev, f"{family} not at fixed point"


def test_monotone_shrink_under_all_propagators():
    rng = random.Random(123)
    for _family, build in sorted(MICRO_FAMILIES.items()):
        for _ in range(40):
            domains, props, _check = build(rng)
            before = [set(domain_values(d)) for d in domains]
            store = DomainStore([d.copy() for d in domains])
            propagate_once(store, props)
            if store.infeasible:
                continue
            for x, prior in enumerate(before):
                assert set(domain_values(store.domain(x))) <= prior

"""Shared test helpers: seeded instance generators and micro-model checks."""

from __future__ import annotations

import random
from itertools import product

from dpcp import (
    Cumulative,
    Disjunctive,
    DomainStore,
    FiniteSet,
    Interval,
    PrecedenceLe,
    PropagationMode,
    SumLe,
    VarDuration,
    astar,
    cabs,
    propagate_fixpoint,
    propagate_once,
)
from dpcp import rcpsp, smswt, tsptw

SMS_TAUS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
SMS_RHOS = (0.05, 0.25, 0.5)
SMS_PHIS = (0.9, 1.05, 1.2, 1.35, 1.5)


def random_sms_instance(rng: random.Random, n: int) -> smswt.SmsInstance:
    config = smswt.SmsGeneratorConfig(
        n=n,
        tau=rng.choice(SMS_TAUS),
        rho=rng.choice(SMS_RHOS),
        phi=rng.choice(SMS_PHIS),
        seed=rng.randrange(2**30),
        count=1,
    )
    return smswt.generate_instances(config)[0]


def random_tsptw_instance(rng: random.Random, n: int) -> tsptw.TsptwInstance:
    # Calibrated so that roughly a quarter of sampled instances have no
    # window-feasible tour.  Travel times are strictly positive.
    travel = [[None if i == j else rng.randint(1, 20) for j in range(n)] for i in range(n)]
    windows = [(0, 600)]
    span = 11 * (n - 1)
    for _ in range(1, n):
        r = rng.randint(0, span)
        windows.append((r, r + rng.randint(8, 30)))
    return tsptw.TsptwInstance(travel, windows)


def random_rcpsp_instance(rng: random.Random, max_tasks: int = 8) -> rcpsp.RcpspInstance:
    n = rng.randint(2, max_tasks)
    n_res = rng.randint(1, 2)
    capacities = tuple(rng.randint(2, 4) for _ in range(n_res))
    tasks = [
        rcpsp.RcpspTask(
            rng.randint(1, 6),
            tuple(rng.randint(0, capacities[r]) for r in range(n_res)),
        )
        for _ in range(n)
    ]
    precedences = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.3:
                precedences.append((i, j))
    return rcpsp.RcpspInstance(tasks, capacities, precedences)


ALL_MODES = (PropagationMode.OFF, PropagationMode.ONCE, PropagationMode.FIXPOINT)


def solve_all_modes(model, adapter, limits=None):
    """All (algo, mode) results for one model, keyed for comparison."""
    out = {}
    for mode in ALL_MODES:
        use = None if mode is PropagationMode.OFF else adapter
        out[("astar", mode)] = astar(model, use, limits=limits, mode=mode)
        out[("cabs", mode)] = cabs(model, use, limits=limits, mode=mode)
    return out


# --- micro-models for propagator soundness -------------------------------

def domain_values(domain):
    if isinstance(domain, Interval):
        return list(range(domain.lb, domain.ub + 1))
    return list(domain.values)


def random_domain(rng: random.Random, max_value: int = 11, max_size: int = 12):
    if rng.random() < 0.5:
        lo = rng.randint(0, max_value)
        hi = min(max_value, lo + rng.randint(0, max_size - 1))
        return Interval(lo, hi)
    size = rng.randint(1, min(max_size, max_value + 1))
    return FiniteSet(rng.sample(range(max_value + 1), size))


def micro_disjunctive(rng: random.Random):
    k = rng.randint(1, 4)
    domains = [random_domain(rng) for _ in range(k)]
    durations = [rng.randint(1, 4) for _ in range(k)]
    props = [Disjunctive([(i, durations[i]) for i in range(k)])]

    def check(vals):
        for i in range(k):
            for j in range(i + 1, k):
                a, b = vals[i], vals[j]
                if not (a + durations[i] <= b or b + durations[j] <= a):
                    return False
        return True

    return domains, props, check


def micro_disjunctive_vardur(rng: random.Random):
    k = rng.randint(1, 3)
    starts = [random_domain(rng) for _ in range(k)]
    dur_domains = [
        FiniteSet(rng.sample(range(1, 5), rng.randint(1, 3))) for _ in range(k)
    ]
    domains = starts + dur_domains
    props = [Disjunctive([(i, VarDuration(k + i)) for i in range(k)])]

    def check(vals):
        for i in range(k):
            for j in range(i + 1, k):
                a, pa = vals[i], vals[k + i]
                b, pb = vals[j], vals[k + j]
                if not (a + pa <= b or b + pb <= a):
                    return False
        return True

    return domains, props, check


def micro_cumulative(rng: random.Random):
    k = rng.randint(1, 4)
    cap = rng.randint(1, 4)
    domains = [random_domain(rng) for _ in range(k)]
    durations = [rng.randint(1, 4) for _ in range(k)]
    usages = [rng.randint(1, cap + 1) for _ in range(k)]  # may exceed cap
    props = [Cumulative([(i, durations[i], usages[i]) for i in range(k)], cap)]

    def check(vals):
        hi = max(vals[i] + durations[i] for i in range(k))
        for t in range(hi):
            load = sum(
                usages[i] for i in range(k) if vals[i] <= t < vals[i] + durations[i]
            )
            if load > cap:
                return False
        return True

    return domains, props, check


def micro_precedence(rng: random.Random):
    k = rng.randint(2, 5)
    domains = [random_domain(rng) for _ in range(k)]
    pairs = []
    for _ in range(rng.randint(1, 3)):
        i, j = rng.sample(range(k), 2)
        pairs.append(PrecedenceLe(i, rng.randint(0, 4), j))

    def check(vals):
        return all(vals[p.i] + p.offset <= vals[p.j] for p in pairs)

    return domains, list(pairs), check


def micro_sumle(rng: random.Random):
    k = rng.randint(1, 5)
    domains = [random_domain(rng) for _ in range(k)]
    cap = rng.randint(0, 11 * k)
    props = [SumLe(tuple(range(k)), cap)]

    def check(vals):
        return sum(vals) <= cap

    return domains, props, check


MICRO_FAMILIES = {
    "disjunctive": micro_disjunctive,
    "disjunctive_vardur": micro_disjunctive_vardur,
    "cumulative": micro_cumulative,
    "precedence": micro_precedence,
    "sumle": micro_sumle,
}


def check_micro_model(domains, props, check) -> None:
    """Assert propagation never prunes a solution value or falsely flags
    infeasibility, for both the single-pass and fixed-point drivers."""
    originals = [domain_values(d) for d in domains]
    solutions = [vals for vals in product(*originals) if check(vals)]
    support = [set(col) for col in zip(*solutions)] if solutions else [set() for _ in domains]
    for driver in (propagate_once, propagate_fixpoint):
        store = DomainStore([d.copy() for d in domains])
        driver(store, props)
        if store.infeasible:
            assert not solutions, "false infeasibility report"
            continue
        for x, before in enumerate(originals):
            after = set(domain_values(store.domain(x)))
            assert after <= set(before), "domain grew"
            removed = set(before) - after
            assert not (removed & support[x]), (
                f"pruned supported values {removed & support[x]} of var {x}"
            )

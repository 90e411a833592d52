"""Best-first and anytime-beam solvers over the model contract.

Both drivers keep a registry of encountered states per signature bucket and
admit a successor only if no registered state dominates it at no larger
path cost; admission also requires ``f <= primal``.  With propagation
enabled, successor generation is wrapped: the expanded state's CP model is
built and propagated once (or to a fixed point), the state can be pruned
outright by infeasibility or by its CP dual bound against the incumbent,
surviving successors are filtered individually, and their heuristic values
are strengthened by the CP dual bound evaluated under the parent's
propagated domains (which remain valid for every successor).
"""

from __future__ import annotations

import enum
import itertools
import time
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Callable, List, Optional, Tuple

from .core import DpModel, SolveLimits, SolveResult, SolveStatus
from .cost import Cost, INFINITY, add
from .cp_engine import PropagationAdapter, propagate_fixpoint, propagate_once
from .metrics import RunMetrics, optimality_gap

# Fixed per-node bookkeeping estimate used for the memory limit.
NODE_ESTIMATE_BYTES = 512


class PropagationMode(enum.Enum):
    OFF = "off"
    ONCE = "once"
    FIXPOINT = "fixpoint"


@dataclass(frozen=True)
class BeamConfig:
    """Width schedule for the anytime beam driver."""

    initial_width: int = 1
    growth_factor: int = 2

    def __post_init__(self):
        if self.initial_width < 1:
            raise ValueError("initial_width must be >= 1")
        if self.growth_factor < 2:
            raise ValueError("growth_factor must be >= 2")


class SearchNode:
    """Open-list node: state plus path cost, heuristic, and parent link."""

    __slots__ = ("state", "g", "h", "f", "parent", "label", "seq", "stale")

    def __init__(self, state, g: Cost, h: Cost, parent=None, label=None, seq: int = 0):
        self.state = state
        self.g = g
        self.h = h
        self.f = add(g, h)
        self.parent = parent
        self.label = label
        self.seq = seq
        self.stale = False

    def path_labels(self) -> Tuple[int, ...]:
        labels = []
        node = self
        while node.parent is not None:
            labels.append(node.label)
            node = node.parent
        labels.reverse()
        return tuple(labels)


class _Entry:
    __slots__ = ("state", "g", "node")

    def __init__(self, state, g, node):
        self.state = state
        self.g = g
        self.node = node


class Registry:
    """Dominance-aware duplicate detection, bucketed by state signature.

    ``register`` admits a state unless some stored entry dominates it at no
    larger path cost; on admission it evicts stored entries that the new
    state dominates at no larger cost, marking their open-list nodes stale
    so they are skipped lazily on pop.
    """

    def __init__(self):
        self._buckets = {}
        self.size = 0

    def register(self, model: DpModel, state, g: Cost, node: Optional[SearchNode] = None) -> bool:
        sig = model.state_signature(state)
        bucket = self._buckets.get(sig)
        if bucket is None:
            self._buckets[sig] = [_Entry(state, g, node)]
            self.size += 1
            return True
        for e in bucket:
            if e.g <= g and model.dominates(e.state, state):
                return False
        kept = []
        for e in bucket:
            if g <= e.g and model.dominates(state, e.state):
                if e.node is not None:
                    e.node.stale = True
                self.size -= 1
            else:
                kept.append(e)
        kept.append(_Entry(state, g, node))
        self._buckets[sig] = kept
        self.size += 1
        return True

    def rejection_violations(self, model: DpModel) -> int:
        """Pairs of stored entries that should have rejected each other."""
        bad = 0
        for bucket in self._buckets.values():
            for a in bucket:
                for b in bucket:
                    if a is not b and a.g <= b.g and model.dominates(a.state, b.state):
                        bad += 1
        return bad


def register(reg: Registry, model: DpModel, state, g: Cost, node=None) -> bool:
    """Functional form of ``Registry.register``."""
    return reg.register(model, state, g, node)


def _resolve_mode(mode: Optional[PropagationMode], adapter) -> PropagationMode:
    if mode is None:
        return PropagationMode.ONCE if adapter is not None else PropagationMode.OFF
    if mode is not PropagationMode.OFF and adapter is None:
        raise ValueError(f"propagation mode {mode.value} requires an adapter")
    return mode


def _gen_succ_cp(model, adapter, state, g, primal, mode, metrics):
    """Propagation-wrapped successor generation.

    Returns ``(successors, cp_dual, expanded)`` where successors are
    ``(weight, label, state, succ_cp_dual)`` and ``expanded`` is False when
    the state was pruned before its successors were enumerated.
    """
    started = time.perf_counter()
    store, props = adapter.build(state, g, primal)
    if not store.infeasible:
        if mode is PropagationMode.FIXPOINT:
            propagate_fixpoint(store, props)
        else:
            propagate_once(store, props)
    if metrics is not None:
        metrics.propagation_calls += 1
        metrics.propagation_time += time.perf_counter() - started
    if adapter.is_infeasible(state, store):
        return [], INFINITY, False
    cp_dual = adapter.dual_cp(state, store)
    if add(g, cp_dual) >= primal:
        return [], cp_dual, False
    out = []
    for weight, label, succ in model.successors(state):
        if adapter.is_succ_infeasible(label, state, store):
            if metrics is not None:
                metrics.pruned_by_cp += 1
            continue
        out.append((weight, label, succ, adapter.dual_cp(succ, store)))
    return out, cp_dual, True


def gen_succ_propagation(
    model: DpModel,
    adapter: PropagationAdapter,
    state,
    g: Cost,
    primal: Cost,
    mode: PropagationMode = PropagationMode.ONCE,
    metrics: Optional[RunMetrics] = None,
):
    """Generate successors of ``state`` under constraint propagation.

    Builds and propagates the state's CP model, returns ``([], cp_dual)``
    when the state is infeasible or cannot beat the incumbent, and
    otherwise returns the surviving successors.  Each survivor carries the
    CP dual bound evaluated for it under the parent's propagated domains,
    so callers can set ``h = max(model dual, CP dual)``.
    """
    if mode is PropagationMode.OFF:
        raise ValueError("propagation mode is off")
    succs, cp_dual, _ = _gen_succ_cp(model, adapter, state, g, primal, mode, metrics)
    return succs, cp_dual


class _SolveContext:
    """State shared by the two drivers for one solve."""

    def __init__(self, model, adapter, limits, mode, observer):
        self.model = model
        self.adapter = adapter
        self.limits = limits
        self.mode = mode
        self.observer = observer
        self.metrics = RunMetrics()
        self.primal: Cost = INFINITY
        self.incumbent: Optional[SearchNode] = None
        self.best_dual: Optional[Cost] = None
        self.counter = itertools.count()
        self.started = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self.started

    def limit_status(self, registry: Registry, open_count: int = 0) -> Optional[SolveStatus]:
        lim = self.limits
        if lim.expansion_cap is not None and self.metrics.expansions >= lim.expansion_cap:
            return SolveStatus.EXPANSION_LIMIT
        if lim.time_limit is not None and self.elapsed() >= lim.time_limit:
            return SolveStatus.TIME_LIMIT
        if lim.memory_limit is not None:
            estimate = (registry.size + open_count) * NODE_ESTIMATE_BYTES
            if estimate > lim.memory_limit:
                return SolveStatus.MEMORY_LIMIT
        return None

    def make_root(self) -> SearchNode:
        target = self.model.target_state()
        g0 = self.model.root_cost()
        root = SearchNode(target, g0, self.model.dual(target), seq=next(self.counter))
        self.note_dual(root.f)
        return root

    def note_dual(self, value: Cost) -> None:
        if self.best_dual is None or value > self.best_dual:
            self.best_dual = value
            self.metrics.dual_trace.append((self.elapsed(), value))

    def offer_incumbent(self, node: SearchNode) -> bool:
        """Record a popped base node; True when it improved the incumbent."""
        total = add(node.g, self.model.base_cost(node.state))
        if total < self.primal:
            self.primal = total
            self.incumbent = node
            self.metrics.incumbent_trace.append((self.elapsed(), total))
            return True
        return False

    def expand(self, node: SearchNode):
        """Successors of a popped node, or None if propagation pruned it.

        Counts the expansion only when the model's successor enumeration
        actually runs; propagation-pruned pops count toward
        ``pruned_by_cp`` instead.
        """
        if self.mode is PropagationMode.OFF:
            self.metrics.expansions += 1
            if self.observer is not None:
                self.observer(node.state, node.g, node.h)
            return [(w, lbl, s, None) for w, lbl, s in self.model.successors(node.state)]
        succs, cp_dual, expanded = _gen_succ_cp(
            self.model, self.adapter, node.state, node.g, self.primal, self.mode, self.metrics
        )
        if node.parent is None:
            # Only at the root is g + CP dual a bound on the global optimum.
            self.note_dual(add(node.g, cp_dual))
        if not expanded:
            self.metrics.pruned_by_cp += 1
            return None
        self.metrics.expansions += 1
        if self.observer is not None:
            self.observer(node.state, node.g, node.h)
        return succs

    def child(self, node: SearchNode, weight: Cost, label, state, h_cp) -> SearchNode:
        g = add(node.g, weight)
        h = self.model.dual(state)
        if h_cp is not None and h_cp > h:
            h = h_cp
        return SearchNode(state, g, h, parent=node, label=label, seq=next(self.counter))

    def finish(self, status: SolveStatus) -> SolveResult:
        m = self.metrics
        if status is SolveStatus.OPTIMAL:
            self.note_dual(self.primal)
            m.final_gap = 0.0
        elif status is SolveStatus.INFEASIBLE:
            m.final_gap = 0.0
        else:
            primal = self.primal if self.incumbent is not None else None
            m.final_gap = optimality_gap(primal, self.best_dual)
        incumbent = None
        if self.incumbent is not None:
            incumbent = (self.primal, self.incumbent.path_labels())
        if status is SolveStatus.INFEASIBLE:
            incumbent = None
        return SolveResult(
            status=status, incumbent=incumbent, root_dual=self.best_dual, metrics=m
        )


def astar(
    model: DpModel,
    adapter: Optional[PropagationAdapter] = None,
    limits: Optional[SolveLimits] = None,
    mode: Optional[PropagationMode] = None,
    observer: Optional[Callable] = None,
) -> SolveResult:
    """Best-first search; pops minimum f, ties broken by larger g then FIFO.

    Returns the proven optimum (or infeasibility) unless a limit fires.
    Optimality is declared when a popped node cannot beat the incumbent
    (``f >= primal``) or the open list empties.
    """
    mode = _resolve_mode(mode, adapter)
    ctx = _SolveContext(model, adapter, limits or SolveLimits(), mode, observer)
    registry = Registry()
    root = ctx.make_root()
    registry.register(model, root.state, root.g, node=root)
    heap = [(root.f, -root.g, root.seq, root)]
    status = None
    while status is None:
        if not heap:
            status = SolveStatus.OPTIMAL if ctx.incumbent else SolveStatus.INFEASIBLE
            break
        f, _neg_g, _seq, node = heappop(heap)
        if node.stale:
            ctx.metrics.stale_skips += 1
            continue
        if ctx.incumbent is not None and f >= ctx.primal:
            status = SolveStatus.OPTIMAL
            break
        ctx.note_dual(min(ctx.primal, f))
        if model.is_base(node.state):
            ctx.metrics.base_pops += 1
            ctx.offer_incumbent(node)
            continue
        status = ctx.limit_status(registry, len(heap))
        if status is not None:
            break
        succs = ctx.expand(node)
        if succs is None:
            continue
        for weight, label, state, h_cp in succs:
            child = ctx.child(node, weight, label, state, h_cp)
            ctx.metrics.generated += 1
            if child.f <= ctx.primal and registry.register(model, state, child.g, node=child):
                heappush(heap, (child.f, -child.g, child.seq, child))
    return ctx.finish(status)


def cabs(
    model: DpModel,
    adapter: Optional[PropagationAdapter] = None,
    limits: Optional[SolveLimits] = None,
    beam: Optional[BeamConfig] = None,
    mode: Optional[PropagationMode] = None,
    observer: Optional[Callable] = None,
) -> SolveResult:
    """Complete anytime beam search with geometrically growing width.

    Runs repeated layered beam passes; each layer keeps the ``width`` best
    nodes by (f, larger g, insertion order).  The incumbent persists across
    passes while duplicate detection restarts per pass.  A pass that never
    discards a node at the width cut and does not improve the incumbent is
    exhaustive, proving the incumbent optimal or the instance infeasible.
    Expansion counts accumulate across passes.
    """
    mode = _resolve_mode(mode, adapter)
    beam = beam or BeamConfig()
    ctx = _SolveContext(model, adapter, limits or SolveLimits(), mode, observer)
    width = beam.initial_width
    status = None
    while status is None:
        ctx.metrics.beam_widths.append(width)
        registry = Registry()
        root = ctx.make_root()
        registry.register(model, root.state, root.g, node=root)
        layer: List[SearchNode] = [root]
        discarded = False
        improved = False
        while layer and status is None:
            candidates: List[SearchNode] = []
            for node in layer:
                if status is not None:
                    break
                if node.stale:
                    ctx.metrics.stale_skips += 1
                    continue
                if model.is_base(node.state):
                    ctx.metrics.base_pops += 1
                    if ctx.offer_incumbent(node):
                        improved = True
                    continue
                status = ctx.limit_status(registry, len(layer) + len(candidates))
                if status is not None:
                    break
                succs = ctx.expand(node)
                if succs is None:
                    continue
                for weight, label, state, h_cp in succs:
                    child = ctx.child(node, weight, label, state, h_cp)
                    ctx.metrics.generated += 1
                    if child.f <= ctx.primal and registry.register(
                        model, state, child.g, node=child
                    ):
                        candidates.append(child)
            if status is not None:
                break
            candidates.sort(key=lambda n: (n.f, -n.g, n.seq))
            if len(candidates) > width:
                discarded = True
                candidates = candidates[:width]
            layer = candidates
        if status is not None:
            break
        if not discarded and not improved:
            status = SolveStatus.OPTIMAL if ctx.incumbent else SolveStatus.INFEASIBLE
        else:
            width *= beam.growth_factor
    return ctx.finish(status)

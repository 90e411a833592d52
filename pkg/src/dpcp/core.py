"""Model contract for state-transition dynamic programs.

A model describes a minimisation problem as a state-transition system: a
solution is a sequence of labelled transitions from the target state to a
base state, and its cost is the sum of transition weights plus the base
cost.  Models also supply a dominance relation (used for duplicate
detection) and an admissible dual bound (used as the search heuristic).

This module holds the abstract contract, replay validation of solutions,
and a memoized exhaustive recursion used as a verification oracle by the
test suites.
"""

from __future__ import annotations

import enum
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Hashable, List, Optional, Sequence, Tuple

from .cost import Cost, INFINITY, add

# Transition labels are problem-specific small integers (job/task/location
# index); they must be stable across a solve so solutions can be replayed.
Label = int


class InvalidTransition(Exception):
    """A replayed label is not applicable at its step."""

    def __init__(self, step: int, label=None):
        self.step = step
        self.label = label
        super().__init__(f"label {label!r} not applicable at step {step}")


class NotBase(Exception):
    """A replayed sequence ended on a non-base state."""


class DepthExceeded(Exception):
    """The exhaustive oracle hit its recursion cap; instance too large."""

    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"exhaustive recursion exceeded depth cap {cap}")


class DpModel(ABC):
    """Contract a problem model implements for the solvers.

    States must be immutable and hashable.  ``successors`` must never yield
    a state equal to its input, ``dominates`` must be reflexive and
    transitive among states with equal signature, and ``dual`` must never
    exceed the true optimal remaining cost of a reachable state.
    """

    @abstractmethod
    def target_state(self) -> Any:
        """Initial state of the recursion."""

    @abstractmethod
    def is_base(self, state) -> bool:
        """True when the recursion terminates at ``state``."""

    @abstractmethod
    def base_cost(self, state) -> Cost:
        """Terminal cost of a base state (may be infinite)."""

    @abstractmethod
    def successors(self, state) -> List[Tuple[Cost, Label, Any]]:
        """Ordered ``(weight, label, state)`` transitions out of ``state``.

        An empty list marks a dead end (no solution through ``state``).
        """

    @abstractmethod
    def dominates(self, a, b) -> bool:
        """True when ``a`` provably solves at least as cheaply as ``b``.

        Only called for states with equal ``state_signature``.
        """

    @abstractmethod
    def dual(self, state) -> Cost:
        """Admissible lower bound on the optimal remaining cost."""

    @abstractmethod
    def state_signature(self, state) -> Hashable:
        """Bucket key; dominance is only checked within one bucket."""

    def root_cost(self) -> Cost:
        """Path cost charged to the target state before any transition.

        Zero for most models; a model whose weights telescope against a
        nonzero initial estimate charges that estimate here so reported
        costs equal the natural objective.
        """
        return 0


class SolveStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    TIME_LIMIT = "TimeLimit"
    MEMORY_LIMIT = "MemoryLimit"
    EXPANSION_LIMIT = "ExpansionLimit"


@dataclass(frozen=True)
class SolveLimits:
    """Resource limits for one solve.

    ``memory_limit`` is in bytes and is enforced against a fixed per-node
    estimate of solver bookkeeping, not real process memory.  An
    ``expansion_cap`` of 0 is allowed and forbids any expansion.
    """

    time_limit: Optional[float] = None
    memory_limit: Optional[int] = None
    expansion_cap: Optional[int] = None

    def __post_init__(self):
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.memory_limit is not None and self.memory_limit <= 0:
            raise ValueError("memory_limit must be positive")
        if self.expansion_cap is not None and self.expansion_cap < 0:
            raise ValueError("expansion_cap must be >= 0")


@dataclass
class SolveResult:
    """Outcome of a solve.

    ``incumbent`` is ``(cost, labels)`` for the best solution found; its
    label sequence replays from the target state to a base state with a
    total cost equal to the reported cost.  ``root_dual`` is the best dual
    bound established for the target state.
    """

    status: SolveStatus
    incumbent: Optional[Tuple[Cost, Tuple[Label, ...]]]
    root_dual: Cost
    metrics: Any = None

    @property
    def cost(self) -> Optional[Cost]:
        return self.incumbent[0] if self.incumbent is not None else None

    @property
    def solution(self) -> Optional[Tuple[Label, ...]]:
        return self.incumbent[1] if self.incumbent is not None else None


def evaluate_solution(model: DpModel, seq: Sequence[Label]) -> Cost:
    """Replay ``seq`` from the target state and return its exact cost.

    Each label must appear among the successors of the current state
    (otherwise ``InvalidTransition``), and the final state must be a base
    state (otherwise ``NotBase``).  The returned cost includes the model's
    root charge, all transition weights, and the base cost, so it is
    directly comparable to solver-reported incumbent costs.
    """
    state = model.target_state()
    total: Cost = model.root_cost()
    for step, label in enumerate(seq):
        if model.is_base(state):
            raise InvalidTransition(step, label)
        match = None
        for weight, lbl, succ in model.successors(state):
            if lbl == label:
                match = (weight, succ)
                break
        if match is None:
            raise InvalidTransition(step, label)
        total = add(total, match[0])
        state = match[1]
    if not model.is_base(state):
        raise NotBase("replayed sequence did not reach a base state")
    return add(total, model.base_cost(state))


def brute_force_value(model: DpModel, state, depth_cap: int = 64) -> Cost:
    """Exact optimal remaining cost of ``state`` by exhaustive recursion.

    Memoizes on exact state equality.  Returns ``INFINITY`` when no base
    state is reachable.  Raises ``DepthExceeded`` if any path needs more
    than ``depth_cap`` transitions, signalling the instance is too large
    for this oracle.  Does not include the model's root charge.
    """
    memo: dict = {}

    def rec(s, depth: int) -> Cost:
        if model.is_base(s):
            return model.base_cost(s)
        cached = memo.get(s)
        if cached is not None:
            return cached
        if depth >= depth_cap:
            raise DepthExceeded(depth_cap)
        best: Cost = INFINITY
        for weight, _label, succ in model.successors(s):
            value = add(weight, rec(succ, depth + 1))
            if value < best:
                best = value
        memo[s] = best
        return best

    return rec(state, 0)


def enumerate_state_values(model: DpModel, depth_cap: int = 64):
    """All states reachable from the target with their exact values.

    Returns ``{state: value}`` including base states.  Used by invariant
    suites that check dual bounds and dominance against the oracle.
    """
    values: dict = {}

    def rec(s, depth: int) -> Cost:
        if s in values:
            return values[s]
        if model.is_base(s):
            values[s] = model.base_cost(s)
            return values[s]
        if depth >= depth_cap:
            raise DepthExceeded(depth_cap)
        best: Cost = INFINITY
        # Mark before recursing; successors never revisit their input, and
        # models here are acyclic, so the placeholder is never read.
        for weight, _label, succ in model.successors(s):
            value = add(weight, rec(succ, depth + 1))
            if value < best:
                best = value
        values[s] = best
        return best

    rec(model.target_state(), 0)
    return values

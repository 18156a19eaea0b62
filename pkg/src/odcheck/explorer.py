"""Stateless exhaustive exploration of iterations.

An iteration is one concrete execution: a choice of initial high-variable
values crossed with one maximal feasible thread schedule. High assignments
are enumerated lexicographically (by variable id, then the order values
appear in the domain); schedules are enumerated depth first, always trying
the smallest enabled thread index first, so the "first iteration" of a
category is reproducible.

No visited state is ever kept: backtracking re-executes the schedule prefix
from the initial state, so memory use is bounded by the depth of the
current execution, not by how many iterations have been visited.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Callable, Iterator, Optional

from .errors import CategoryError, CheckerError, InfeasibleScheduleError
from .executor import (
    ExecState,
    Granularity,
    RunOutcome,
    RunResult,
    StepEvent,
    enabled,
    initial_state,
    run_schedule,
    step,
)
from .lang import INT64_MAX, INT64_MIN, Program, SecurityLabel


@dataclass(frozen=True)
class Category:
    """One equivalence class of initial stores: a fixed low store plus a
    finite domain of initial values for every high variable."""

    name: str
    low_init: dict[int, int]
    high_domains: dict[int, tuple[int, ...]]

    @classmethod
    def from_names(
        cls,
        program: Program,
        name: str = "default",
        low: Optional[dict[str, int]] = None,
        high_domains: Optional[dict[str, list[int]]] = None,
    ) -> "Category":
        """Build a category from variable names; omitted low variables keep
        their declared initial values and omitted high domains default to
        the singleton of the declared value."""
        low = dict(low or {})
        high_domains = dict(high_domains or {})
        low_init: dict[int, int] = {}
        domains: dict[int, tuple[int, ...]] = {}
        for decl in program.decls:
            if decl.label is SecurityLabel.LOW:
                low_init[decl.var_id] = low.pop(decl.name, decl.init)
            else:
                domain = high_domains.pop(decl.name, [decl.init])
                domains[decl.var_id] = tuple(domain)
        if low:
            raise CategoryError(f"low values given for unknown low variables: {sorted(low)}")
        if high_domains:
            raise CategoryError(
                f"high domains given for unknown high variables: {sorted(high_domains)}"
            )
        cat = cls(name, low_init, domains)
        validate_category(program, cat)
        return cat

    def initial_low_store(self, program: Program) -> tuple[int, ...]:
        return tuple(self.low_init[i] for i in program.low_ids)


def validate_category(program: Program, cat: Category) -> None:
    if set(cat.low_init) != set(program.low_ids):
        raise CategoryError(
            f"category {cat.name!r}: low values must cover exactly the low variables"
        )
    if set(cat.high_domains) != set(program.high_ids):
        raise CategoryError(
            f"category {cat.name!r}: high domains must cover exactly the high variables"
        )
    for var_id, domain in cat.high_domains.items():
        if not domain:
            raise CategoryError(
                f"category {cat.name!r}: empty domain for variable id {var_id}"
            )
        for v in domain:
            if not INT64_MIN <= v <= INT64_MAX:
                raise CategoryError(f"category {cat.name!r}: value {v} outside 64-bit range")
    for v in cat.low_init.values():
        if not INT64_MIN <= v <= INT64_MAX:
            raise CategoryError(f"category {cat.name!r}: value {v} outside 64-bit range")


@dataclass(frozen=True)
class Iteration:
    """Identifies one execution: the high assignment it started from, the
    schedule it followed, and its 1-based position in enumeration order."""

    high_assignment: dict[int, int]
    schedule: tuple[int, ...]
    ordinal: int


class IterationOutcome(Enum):
    COMPLETED = "completed"
    DEPTH_EXCEEDED = "depth-exceeded"


@dataclass
class ExplorationStats:
    completed: int = 0
    depth_exceeded: int = 0
    pruned: int = 0  # prefixes abandoned because fairness left no extension

    @property
    def iterations(self) -> int:
        return self.completed + self.depth_exceeded


# Visitor gets (iteration, its full event list, outcome); returning False
# aborts the exploration, anything else continues it.
Visitor = Callable[[Iteration, list[StepEvent], IterationOutcome], Optional[bool]]


def high_assignments(cat: Category) -> Iterator[dict[int, int]]:
    """All high assignments of a category in enumeration order."""
    ids = sorted(cat.high_domains)
    for values in product(*(cat.high_domains[i] for i in ids)):
        yield dict(zip(ids, values))


def _fair_choices(en: list[int], starve: list[int], bound: int) -> list[int]:
    # A choice must not leave any other enabled thread starved past bound.
    starving = [t for t in en if starve[t] >= bound]
    if not starving:
        return en
    if len(starving) == 1:
        return starving
    return []  # scheduling either starving thread abandons the other


def explore(
    program: Program,
    cat: Category,
    depth_bound: int,
    granularity: Granularity = Granularity.STMT,
    fairness: Optional[int] = None,
    visitor: Optional[Visitor] = None,
) -> ExplorationStats:
    """Visit every iteration of a category exactly once.

    Every feasible maximal schedule is visited per high assignment; an
    execution reaching ``depth_bound`` steps with threads still enabled is
    delivered with outcome DEPTH_EXCEEDED instead. With ``fairness`` set to
    K, extensions that would leave a continuously enabled thread unscheduled
    for more than K consecutive steps are pruned.
    """
    if depth_bound < 1:
        raise CheckerError("depth bound must be at least 1")
    if fairness is not None and fairness < 1:
        raise CheckerError("fairness bound must be at least 1")
    validate_category(program, cat)

    stats = ExplorationStats()
    nthreads = len(program.threads)
    ordinal = 0

    for high in high_assignments(cat):
        overrides = {**cat.low_init, **high}
        # Choice stack for the current schedule prefix: [tid, alternatives].
        frames: list[list] = []
        while True:
            state = initial_state(program, overrides, granularity)
            events: list[StepEvent] = []
            starve = [0] * nthreads if fairness is not None else None

            for frame in frames:  # stateless replay of the prefix
                if starve is not None:
                    _advance_starve(starve, state, frame[0])
                events.append(step(state, frame[0]))

            dead_end = False
            while True:
                en = enabled(state)
                if not en:
                    outcome = IterationOutcome.COMPLETED
                    break
                if state.steps >= depth_bound:
                    outcome = IterationOutcome.DEPTH_EXCEEDED
                    break
                choices = en if starve is None else _fair_choices(en, starve, fairness)
                if not choices:
                    dead_end = True
                    break
                tid = choices[0]
                frames.append([tid, choices[1:] or None])
                if starve is not None:
                    _advance_starve(starve, state, tid)
                events.append(step(state, tid))

            if dead_end:
                stats.pruned += 1
            else:
                ordinal += 1
                if outcome is IterationOutcome.COMPLETED:
                    stats.completed += 1
                else:
                    stats.depth_exceeded += 1
                if visitor is not None:
                    iteration = Iteration(dict(high), tuple(f[0] for f in frames), ordinal)
                    if visitor(iteration, events, outcome) is False:
                        return stats

            # Backtrack to the deepest choice point with an untried sibling.
            while frames and not frames[-1][1]:
                frames.pop()
            if not frames:
                break
            last = frames[-1]
            alts = last[1]
            last[0] = alts.pop(0)
            if not alts:
                last[1] = None
    return stats


def _advance_starve(starve: list[int], state: ExecState, chosen: int) -> None:
    for t, stack in enumerate(state.control):
        if not stack:
            continue
        starve[t] = 0 if t == chosen else starve[t] + 1


def replay(
    program: Program,
    cat: Category,
    iteration: Iteration,
    granularity: Granularity = Granularity.STMT,
    sink: Optional[Callable[[StepEvent], None]] = None,
) -> RunResult:
    """Re-execute one iteration, streaming the identical event sequence the
    exploration produced for it. Raises InfeasibleScheduleError when the
    schedule does not fit the program (e.g. the source changed)."""
    validate_category(program, cat)
    overrides = {**cat.low_init, **iteration.high_assignment}
    result = run_schedule(program, overrides, iteration.schedule, sink, granularity)
    if result.outcome is RunOutcome.INFEASIBLE:
        raise InfeasibleScheduleError(
            f"schedule infeasible at position {result.position}"
        )
    return result

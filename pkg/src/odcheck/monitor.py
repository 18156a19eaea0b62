"""Projection of executions onto low-store traces.

The low store is the tuple of current low-variable values ordered by id
(lows are ids 1..|L|). A trace starts at the initial low store and gains an
element whenever a write actually changes a low variable; writes to high
variables and writes that leave the value unchanged are invisible.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple

from .errors import ValidationError
from .executor import StepEvent
from .lang import Program

LowStore = tuple[int, ...]


class ChangeEvent(NamedTuple):
    """One observed change of the low store: the how-manieth change this is
    within its execution, the low variable that moved, and its new value."""

    num: int
    var_id: int
    value: int


def low_store_of(program: Program, store: dict[int, int]) -> LowStore:
    """Project a full store onto the low-variable tuple."""
    return tuple(store[i] for i in program.low_ids)


def low_equivalent(program: Program, s1: dict[int, int], s2: dict[int, int]) -> bool:
    """True iff the two stores agree on every low variable."""
    declared = set(program.by_id)
    if set(s1) != declared or set(s2) != declared:
        raise ValidationError("store domain does not match the declared variables")
    return all(s1[i] == s2[i] for i in program.low_ids)


def observe(
    program: Program,
    initial: LowStore,
    events: Iterable[StepEvent],
) -> tuple[list[ChangeEvent], list[LowStore]]:
    """Fold one execution's step events into change events and a low trace.

    Returns the change events numbered 1.. and the low-store trace, which is
    the initial store followed by the store after each change; its length is
    always 1 + len(changes).
    """
    low_count = program.low_count
    if len(initial) != low_count:
        raise ValidationError(
            f"initial low store has arity {len(initial)}, program has {low_count} lows"
        )
    current = list(initial)
    trace: list[LowStore] = [tuple(current)]
    changes: list[ChangeEvent] = []
    for event in events:
        w = event.write
        if w is None:
            continue
        var_id, _, new = w
        if var_id > low_count or current[var_id - 1] == new:
            continue
        current[var_id - 1] = new
        changes.append(ChangeEvent(len(changes) + 1, var_id, new))
        trace.append(tuple(current))
    return changes, trace

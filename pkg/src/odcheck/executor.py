"""Deterministic small-step execution of parsed programs.

One step runs exactly one atomic unit of one thread and writes at most one
variable. Under the default ``stmt`` granularity the atomic units are skip,
assignment, and a single guard evaluation of if/while (the cursor then
enters the chosen branch or loop body). Under ``branch-atomic`` an entire
if, guard plus the selected branch, runs as one step; that mode statically
requires every branch to be loop-free and contain at most one assignment so
the single-write guarantee still holds.

Values are signed 64-bit integers; any intermediate result outside that
range raises EvalOverflowError rather than wrapping.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .errors import EvalOverflowError, NotEnabledError, ValidationError
from .lang import (
    INT64_MAX,
    INT64_MIN,
    Assign,
    Binary,
    Expr,
    If,
    IntLit,
    Program,
    Skip,
    Stmt,
    Unary,
    Var,
    While,
)


class Granularity(Enum):
    STMT = "stmt"
    BRANCH_ATOMIC = "branch-atomic"


@dataclass(slots=True, frozen=True)
class StepEvent:
    """Observable effect of one atomic step: the thread that ran and, when
    the step assigned a variable, the (var_id, old, new) triple."""

    tid: int
    write: Optional[tuple[int, int, int]] = None


class RunOutcome(Enum):
    COMPLETED = "completed"      # schedule applied, no thread left enabled
    INCOMPLETE = "incomplete"    # schedule applied, threads still enabled
    INFEASIBLE = "infeasible"    # schedule picked a non-enabled thread
    OVERFLOW = "overflow"        # arithmetic left the 64-bit range


@dataclass(slots=True, frozen=True)
class RunResult:
    outcome: RunOutcome
    position: Optional[int] = None  # 1-based schedule position of the failure


class ExecState:
    """Mutable execution state: shared store, per-thread cursor stacks and a
    step counter. ``step`` advances it in place; use ``clone`` to branch."""

    __slots__ = ("program", "store", "control", "steps", "granularity")

    def __init__(
        self,
        program: Program,
        store: dict[int, int],
        control: list[list[Stmt]],
        steps: int,
        granularity: Granularity,
    ):
        self.program = program
        self.store = store
        self.control = control
        self.steps = steps
        self.granularity = granularity

    def clone(self) -> "ExecState":
        return ExecState(
            self.program,
            dict(self.store),
            [list(stack) for stack in self.control],
            self.steps,
            self.granularity,
        )


def _check_branch_atomic(program: Program) -> None:
    def count_assigns(stmts: tuple[Stmt, ...]) -> int:
        total = 0
        for s in stmts:
            if isinstance(s, Assign):
                total += 1
            elif isinstance(s, If):
                check_branches(s)
                total += count_assigns(s.then_body) + count_assigns(s.else_body)
            elif isinstance(s, While):
                raise ValidationError(
                    f"branch-atomic mode forbids loops inside conditional branches (at {s.pos})"
                )
        return total

    def check_branches(stmt: If) -> None:
        for branch in (stmt.then_body, stmt.else_body):
            if count_assigns(branch) > 1:
                raise ValidationError(
                    "branch-atomic mode allows at most one assignment per conditional"
                    f" branch (at {stmt.pos})"
                )

    def scan(stmts: tuple[Stmt, ...]) -> None:
        for s in stmts:
            if isinstance(s, If):
                check_branches(s)
            elif isinstance(s, While):
                scan(s.body)

    for thread in program.threads:
        scan(thread)


def initial_state(
    program: Program,
    overrides: Optional[dict[int, int]] = None,
    granularity: Granularity = Granularity.STMT,
) -> ExecState:
    """Fresh state: declared initial values plus overrides, every thread
    cursor at its first statement, step counter zero."""
    store = program.declared_store()
    if overrides:
        for var_id, value in overrides.items():
            if var_id not in store:
                raise ValidationError(f"override of undeclared variable id {var_id}")
            store[var_id] = value
    if granularity is Granularity.BRANCH_ATOMIC:
        _check_branch_atomic(program)
    control = [list(reversed(thread)) for thread in program.threads]
    return ExecState(program, store, control, 0, granularity)


def enabled(state: ExecState) -> list[int]:
    """Indices of non-terminated threads, ascending. The language has no
    blocking constructs, so enabledness is just non-termination."""
    return [tid for tid, stack in enumerate(state.control) if stack]


def _eval(e: Expr, store: dict[int, int], by_name) -> int:
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, Var):
        return store[by_name[e.name].var_id]
    if isinstance(e, Binary):
        op = e.op
        if op == "&&":
            if _eval(e.left, store, by_name) == 0:
                return 0
            return 1 if _eval(e.right, store, by_name) != 0 else 0
        if op == "||":
            if _eval(e.left, store, by_name) != 0:
                return 1
            return 1 if _eval(e.right, store, by_name) != 0 else 0
        left = _eval(e.left, store, by_name)
        right = _eval(e.right, store, by_name)
        if op == "+":
            value = left + right
        elif op == "-":
            value = left - right
        elif op == "*":
            value = left * right
        elif op == "==":
            return 1 if left == right else 0
        elif op == "!=":
            return 1 if left != right else 0
        elif op == "<":
            return 1 if left < right else 0
        else:  # "<="
            return 1 if left <= right else 0
        if value < INT64_MIN or value > INT64_MAX:
            raise EvalOverflowError(f"{left} {op} {right} leaves the 64-bit signed range")
        return value
    assert isinstance(e, Unary)
    operand = _eval(e.operand, store, by_name)
    if e.op == "!":
        return 1 if operand == 0 else 0
    value = -operand
    if value < INT64_MIN or value > INT64_MAX:
        raise EvalOverflowError(f"negating {operand} leaves the 64-bit signed range")
    return value


def step(state: ExecState, tid: int) -> StepEvent:
    """Execute one atomic unit of thread ``tid`` in place and report it.

    Deterministic: equal states and tid always produce equal successor
    states and events. Only tid's cursor moves and at most the one variable
    named in the event changes.
    """
    if tid < 0 or tid >= len(state.control) or not state.control[tid]:
        raise NotEnabledError(f"thread {tid} is not enabled")
    stack = state.control[tid]
    store = state.store
    by_name = state.program.by_name
    stmt = stack.pop()
    write: Optional[tuple[int, int, int]] = None

    if isinstance(stmt, Assign):
        var_id = by_name[stmt.target].var_id
        new = _eval(stmt.rhs, store, by_name)
        write = (var_id, store[var_id], new)
        store[var_id] = new
    elif isinstance(stmt, Skip):
        pass
    elif isinstance(stmt, If):
        branch = stmt.then_body if _eval(stmt.guard, store, by_name) != 0 else stmt.else_body
        if state.granularity is Granularity.BRANCH_ATOMIC:
            write = _run_branch(branch, store, by_name)
        else:
            stack.extend(reversed(branch))
    else:
        assert isinstance(stmt, While)
        if _eval(stmt.guard, store, by_name) != 0:
            stack.append(stmt)  # re-test the guard after the body
            stack.extend(reversed(stmt.body))

    state.steps += 1
    return StepEvent(tid, write)


def _run_branch(branch: tuple[Stmt, ...], store, by_name) -> Optional[tuple[int, int, int]]:
    # Whole selected branch as one atomic unit; the static check in
    # initial_state guarantees at most one assignment is reached.
    write: Optional[tuple[int, int, int]] = None
    for s in branch:
        if isinstance(s, Skip):
            continue
        if isinstance(s, Assign):
            var_id = by_name[s.target].var_id
            new = _eval(s.rhs, store, by_name)
            assert write is None, "branch-atomic step produced a second write"
            write = (var_id, store[var_id], new)
            store[var_id] = new
        else:
            assert isinstance(s, If)
            chosen = s.then_body if _eval(s.guard, store, by_name) != 0 else s.else_body
            nested = _run_branch(chosen, store, by_name)
            if nested is not None:
                assert write is None, "branch-atomic step produced a second write"
                write = nested
    return write


def run_schedule(
    program: Program,
    overrides: Optional[dict[int, int]],
    schedule,
    sink: Optional[Callable[[StepEvent], None]] = None,
    granularity: Granularity = Granularity.STMT,
) -> RunResult:
    """Replay a schedule from the initial state, forwarding every event.

    Failures come back as outcome values: INFEASIBLE when the schedule picks
    a thread that is not enabled (position is the 1-based offending index),
    OVERFLOW when evaluation overflows. Replay is deterministic: identical
    inputs yield identical event sequences.
    """
    state = initial_state(program, overrides, granularity)
    for i, tid in enumerate(schedule):
        if tid < 0 or tid >= len(state.control) or not state.control[tid]:
            return RunResult(RunOutcome.INFEASIBLE, i + 1)
        try:
            event = step(state, tid)
        except EvalOverflowError:
            return RunResult(RunOutcome.OVERFLOW, i + 1)
        if sink is not None:
            sink(event)
    if enabled(state):
        return RunResult(RunOutcome.INCOMPLETE)
    return RunResult(RunOutcome.COMPLETED)

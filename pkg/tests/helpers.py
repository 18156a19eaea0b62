"""Independent test oracles and generators shared across the suite.

Nothing in here reuses the code paths it is meant to check: schedules are
enumerated by plain recursion with cloned states, and stutter equivalence
is decided by exhaustive word-sequence search straight from its language
definition.
"""

from __future__ import annotations

import random

from odcheck import Category, Granularity, enabled, initial_state, parse, step
from odcheck.sigstore import ChangeRecord, Signature


# ---------------------------------------------------------------------------
# Independent schedule enumeration (cross-check for the explorer's DFS)
# ---------------------------------------------------------------------------

def maximal_schedules(program, overrides, granularity=Granularity.STMT, cap=100_000):
    """All maximal feasible schedules, by recursion over cloned states."""
    out: list[tuple[int, ...]] = []

    def rec(state, sched):
        running = enabled(state)
        if not running:
            out.append(tuple(sched))
            return
        if state.steps >= cap:
            raise RuntimeError("program too long for exhaustive enumeration")
        for tid in running:
            branch = state.clone()
            step(branch, tid)
            rec(branch, sched + [tid])

    rec(initial_state(program, overrides, granularity), [])
    return out


# ---------------------------------------------------------------------------
# Exhaustive stutter-equivalence decision, straight from the definition:
# two traces are equivalent iff some single word sequence A0..An matches
# both, where matching means splitting the trace into n+1 constant blocks.
# ---------------------------------------------------------------------------

def word_decompositions(trace) -> frozenset:
    """Every word sequence whose expression A0+..An+ the trace belongs to."""
    n = len(trace)
    out: set[tuple] = set()

    def rec(i, words):
        if i == n:
            out.add(tuple(words))
            return
        value = trace[i]
        j = i
        while j < n and trace[j] == value:
            j += 1
            rec(j, words + [value])

    rec(0, [])
    return frozenset(out)


def equivalent_by_definition(t1, t2) -> bool:
    return not word_decompositions(t1).isdisjoint(word_decompositions(t2))


# ---------------------------------------------------------------------------
# Random traces
# ---------------------------------------------------------------------------

def random_trace(rng: random.Random, arity: int, max_len: int, values=(0, 1, 2)):
    length = rng.randint(1, max_len)
    return tuple(
        tuple(rng.choice(values) for _ in range(arity)) for _ in range(length)
    )


def pump_stutters(rng: random.Random, trace, p: float = 0.4):
    """Insert random repeats; the result is stutter equivalent to the input."""
    out = []
    for element in trace:
        out.append(element)
        while rng.random() < p:
            out.append(element)
    return tuple(out)


# ---------------------------------------------------------------------------
# Random loop-free programs (small step budget keeps enumeration cheap)
# ---------------------------------------------------------------------------

_BIN_OPS = ("+", "-", "==", "!=", "<", "<=", "&&", "||")  # no *: keeps values tiny


def _random_expr(rng: random.Random, names, depth=0) -> str:
    r = rng.random()
    if depth >= 2 or r < 0.40 or not names:
        return str(rng.randint(0, 3))
    if r < 0.65:
        return rng.choice(names)
    lhs = _random_expr(rng, names, depth + 1)
    rhs = _random_expr(rng, names, depth + 1)
    return f"({lhs} {rng.choice(_BIN_OPS)} {rhs})"


def _random_simple(rng: random.Random, names) -> str:
    if rng.random() < 0.2:
        return "skip;"
    return f"{rng.choice(names)} := {_random_expr(rng, names)};"


def _random_stmt(rng: random.Random, names, budget: int) -> tuple[str, int]:
    """One statement and its worst-case step cost."""
    if budget >= 2 and rng.random() < 0.3:
        n_then = rng.randint(0, min(2, budget - 1))
        n_else = rng.randint(0, min(2, budget - 1))
        then_body = " ".join(_random_simple(rng, names) for _ in range(n_then))
        else_body = " ".join(_random_simple(rng, names) for _ in range(n_else))
        text = f"if ({_random_expr(rng, names)}) {{ {then_body} }}"
        if else_body:
            text += f" else {{ {else_body} }}"
        return text, 1 + max(n_then, n_else)
    return _random_simple(rng, names), 1


def random_program_source(rng: random.Random, max_total_steps: int = 8) -> str:
    """Loop-free program: <=3 threads, <=4 statements each, <=3 low and <=2
    high variables, literals in 0..3. The total worst-case step count stays
    under ``max_total_steps`` so exhaustive enumeration stays cheap."""
    n_low = rng.randint(1, 3)
    n_high = rng.randint(0, 2)
    lows = [f"l{i}" for i in range(1, n_low + 1)]
    highs = [f"h{i}" for i in range(1, n_high + 1)]
    names = lows + highs
    lines = [f"low {v} = {rng.randint(0, 3)};" for v in lows]
    lines += [f"high {v} = {rng.randint(0, 3)};" for v in highs]

    n_threads = rng.randint(1, 3)
    budget = rng.randint(n_threads, max_total_steps)
    for t in range(n_threads):
        remaining_threads = n_threads - t - 1
        thread_budget = (
            budget - remaining_threads if remaining_threads == 0
            else rng.randint(1, max(1, budget - remaining_threads))
        )
        budget -= thread_budget
        stmts = []
        while thread_budget > 0 and len(stmts) < 4:
            text, cost = _random_stmt(rng, names, thread_budget)
            stmts.append(text)
            thread_budget -= cost
        lines.append("thread { " + " ".join(stmts) + " }")
    return "\n".join(lines) + "\n"


def random_checkable_program(rng: random.Random):
    """A parsed random program plus one category giving every high variable
    the domain {0, 1}."""
    program = parse(random_program_source(rng))
    high_domains = {
        d.name: [0, 1] for d in program.decls if d.label.value == "high"
    }
    category = Category.from_names(program, high_domains=high_domains)
    return program, category


# ---------------------------------------------------------------------------
# Random signatures
# ---------------------------------------------------------------------------

def random_signature(rng: random.Random) -> Signature:
    name = "".join(rng.choice("abcdefghijklmnopqrstuvwxyz_-.") for _ in range(rng.randint(1, 10)))
    n = rng.randint(0, 12)
    records = [
        ChangeRecord(k, rng.randint(1, 4), rng.randint(-9, 9)) for k in range(1, n + 1)
    ]
    return Signature(name, records, n)

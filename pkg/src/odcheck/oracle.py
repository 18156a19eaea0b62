"""Brute-force observational-determinism check, used to cross-validate the
signature-based verifier.

Traces are collected by plain recursion over enabled threads with cloned
states, a deliberately different mechanism from the explorer's stateless
replay, and compared by direct stutter equivalence. Intended for tiny
programs only (around ten atomic steps); the recursion refuses to produce a
partial answer when an execution runs past the depth bound.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

from .errors import BoundExceededError, ValidationError
from .executor import ExecState, Granularity, enabled, initial_state, step
from .explorer import Category, validate_category
from .lang import Program
from .monitor import LowStore, low_store_of

CollapsedTrace = tuple[LowStore, ...]


def stutter_collapse(trace: Sequence[LowStore]) -> CollapsedTrace:
    """Drop consecutive duplicates; the canonical form for stutter
    equivalence. Idempotent and never longer than its input."""
    if not trace:
        raise ValidationError("cannot collapse an empty trace")
    out = [trace[0]]
    for element in trace[1:]:
        if element != out[-1]:
            out.append(element)
    return tuple(out)


def stutter_equivalent(t1: Sequence[LowStore], t2: Sequence[LowStore]) -> bool:
    """True iff both traces match one common expression A0+ A1+ ... An+,
    decided via the collapsed canonical form."""
    if not t1 or not t2:
        raise ValidationError("cannot compare empty traces")
    if len(t1[0]) != len(t2[0]):
        raise ValidationError(
            f"low-store arity mismatch: {len(t1[0])} vs {len(t2[0])}"
        )
    return stutter_collapse(t1) == stutter_collapse(t2)


def all_low_traces(
    program: Program,
    cat: Category,
    depth_bound: int,
    granularity: Granularity = Granularity.STMT,
) -> Counter:
    """Multiset of collapsed low traces over every (high assignment, maximal
    schedule) pair of the category.

    The low store is sampled after every step and collapsed at the end, so
    stutter steps are observed and then canonicalized. Raises
    BoundExceededError if any execution fails to terminate within the bound;
    a partial census would be useless as an oracle.
    """
    validate_category(program, cat)
    census: Counter = Counter()
    ids = sorted(cat.high_domains)
    for values in product(*(cat.high_domains[i] for i in ids)):
        overrides = dict(cat.low_init)
        overrides.update(zip(ids, values))
        state = initial_state(program, overrides, granularity)
        trace = [low_store_of(program, state.store)]
        _collect(program, state, trace, depth_bound, census)
    return census


def _collect(
    program: Program,
    state: ExecState,
    trace: list[LowStore],
    depth_bound: int,
    census: Counter,
) -> None:
    running = enabled(state)
    if not running:
        census[stutter_collapse(trace)] += 1
        return
    if state.steps >= depth_bound:
        raise BoundExceededError(
            f"an execution exceeded {depth_bound} steps; raise the bound"
        )
    for tid in running:
        branch = state.clone()
        step(branch, tid)
        trace.append(low_store_of(program, branch.store))
        _collect(program, branch, trace, depth_bound, census)
        trace.pop()


@dataclass
class OracleCategoryResult:
    name: str
    secure: bool
    traces: Counter


@dataclass
class OracleReport:
    categories: list[OracleCategoryResult]
    secure: bool


def check_program(
    program: Program,
    categories: Iterable[Category],
    depth_bound: int,
    granularity: Granularity = Granularity.STMT,
) -> OracleReport:
    """Direct decision of observational determinism: a category passes iff
    all of its collapsed traces are equal, i.e. the census has one key."""
    results = []
    for cat in categories:
        census = all_low_traces(program, cat, depth_bound, granularity)
        results.append(OracleCategoryResult(cat.name, len(census) == 1, census))
    return OracleReport(results, all(r.secure for r in results))

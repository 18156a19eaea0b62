"""Signature-based verification of observational determinism.

Per category, the first completed iteration's low-store changes are frozen
into a signature; every later completed iteration is then checked against
it with one record fetch per observed change. A single divergence, an
extra change, a different variable or value, or a change-count mismatch at
the end of the iteration, is a security violation and aborts exploration
with a replayable witness. Iterations abandoned at the depth bound are
skipped but cap the category verdict at secure-up-to-bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .errors import CategoryError, SignatureError, VerificationError
from .explorer import (
    Category,
    ExplorationStats,
    Iteration,
    IterationOutcome,
    explore,
)
from .executor import Granularity
from .lang import Program
from .monitor import ChangeEvent, LowStore, observe
from .sigstore import ChangeRecord, Signature, SignatureStore


class ViolationKind(Enum):
    EXCESS_CHANGE = "excess-change"      # more changes than the signature holds
    VALUE_MISMATCH = "value-mismatch"    # change k hit a different id or value
    COUNT_MISMATCH = "count-mismatch"    # iteration ended with fewer changes


@dataclass(frozen=True)
class ViolationDetail:
    kind: ViolationKind
    position: Optional[int]  # 1-based change ordinal, None = end of iteration
    expected: Optional[ChangeRecord]
    observed: Union[ChangeEvent, int, None]  # event, or the final change count


@dataclass(frozen=True)
class ViolationWitness:
    """Everything needed to reproduce a violation: the iteration that built
    the signature and the iteration that diverged from it."""

    category: str
    reference: Iteration
    violating: Iteration
    detail: ViolationDetail


class CategoryVerdict(Enum):
    SECURE = "secure"
    VIOLATION = "violation"
    SECURE_UP_TO_BOUND = "secure-up-to-bound"


@dataclass
class CategoryResult:
    category: Category
    verdict: CategoryVerdict
    signature: Optional[Signature]
    iterations_checked: int
    stats: ExplorationStats
    witness: Optional[ViolationWitness] = None

    @property
    def name(self) -> str:
        return self.category.name


class Verdict(Enum):
    SECURE = "SECURE"
    INSECURE = "INSECURE"
    SECURE_UP_TO_BOUND = "SECURE_UP_TO_BOUND"


@dataclass
class SecurityReport:
    verdict: Verdict
    categories: list[CategoryResult]
    program: Program = field(repr=False, compare=False, default=None)

    @property
    def totals(self) -> dict[str, int]:
        agg = {"iterations": 0, "completed": 0, "abandoned": 0, "pruned": 0, "checked": 0}
        for c in self.categories:
            agg["iterations"] += c.stats.iterations
            agg["completed"] += c.stats.completed
            agg["abandoned"] += c.stats.depth_exceeded
            agg["pruned"] += c.stats.pruned
            agg["checked"] += c.iterations_checked
        return agg


def build_signature(store: SignatureStore, changes: Iterable[ChangeEvent]) -> Signature:
    """Persist the reference iteration's change stream: one record per
    change, keys 1..n, then freeze the count."""
    n = 0
    for ev in changes:
        n += 1
        store.put_record(ChangeRecord(ev.num, ev.var_id, ev.value))
    store.set_count(n)
    return store.signature


def check_iteration(
    store: SignatureStore, changes: Iterable[ChangeEvent]
) -> Optional[ViolationDetail]:
    """Compare one iteration's change stream against the frozen signature.

    Exactly one record fetch per consumed change event; returns None when
    the iteration conforms, otherwise the first divergence found.
    """
    expected_count = store.get_count()
    if expected_count is None:
        raise SignatureError("signature not frozen; set the count before checking")
    seen = 0
    for ev in changes:
        record = store.get_record(seen + 1)
        if record is None:
            return ViolationDetail(ViolationKind.EXCESS_CHANGE, seen + 1, None, ev)
        if record.var_id != ev.var_id or record.value != ev.value:
            return ViolationDetail(ViolationKind.VALUE_MISMATCH, seen + 1, record, ev)
        seen += 1
    if seen != expected_count:
        return ViolationDetail(ViolationKind.COUNT_MISMATCH, None, None, seen)
    return None


def reconstruct_pattern(sig: Signature, initial: LowStore) -> list[LowStore]:
    """Expand a signature into the word sequence A0..An of the category's
    secure pattern A0+ A1+ ... An+, starting from the initial low store."""
    if sig.change_count is None or sig.change_count != len(sig.records):
        raise SignatureError("signature is not frozen consistently")
    current = list(initial)
    words: list[LowStore] = [tuple(current)]
    for k, rec in enumerate(sig.records, start=1):
        if rec.num != k:
            raise SignatureError(f"record {k} carries key {rec.num}")
        if not 1 <= rec.var_id <= len(current):
            raise SignatureError(f"record {k} names unknown low variable id {rec.var_id}")
        if current[rec.var_id - 1] == rec.value:
            raise SignatureError(
                f"record {k} does not change the low store (corrupt signature)"
            )
        current[rec.var_id - 1] = rec.value
        words.append(tuple(current))
    return words


def verify_category(
    program: Program,
    cat: Category,
    depth_bound: int,
    granularity: Granularity = Granularity.STMT,
    fairness: Optional[int] = None,
    store: Optional[SignatureStore] = None,
) -> CategoryResult:
    """Run one category: build the signature from its first completed
    iteration, check every later completed one, stop early on violation."""
    if store is None:
        store = SignatureStore(cat.name)
    initial_low = cat.initial_low_store(program)

    reference: Optional[Iteration] = None
    witness: Optional[ViolationWitness] = None
    checked = 0

    def visit(iteration: Iteration, events, outcome) -> Optional[bool]:
        nonlocal reference, witness, checked
        if outcome is IterationOutcome.DEPTH_EXCEEDED:
            return None  # counted by the explorer; nothing to check
        changes, _ = observe(program, initial_low, events)
        if reference is None:
            build_signature(store, changes)
            reference = iteration
            return None
        detail = check_iteration(store, changes)
        if detail is None:
            checked += 1
            return None
        witness = ViolationWitness(cat.name, reference, iteration, detail)
        return False  # abort exploration

    stats = explore(program, cat, depth_bound, granularity, fairness, visit)

    if witness is not None:
        return CategoryResult(
            cat, CategoryVerdict.VIOLATION, store.signature, checked, stats, witness
        )
    if reference is None:
        if stats.depth_exceeded:
            # Nothing ever completed: nothing checkable, but not a violation.
            return CategoryResult(cat, CategoryVerdict.SECURE_UP_TO_BOUND, None, 0, stats)
        raise VerificationError(
            f"category {cat.name!r}: exploration produced no iterations"
        )
    verdict = (
        CategoryVerdict.SECURE_UP_TO_BOUND
        if stats.depth_exceeded or stats.pruned
        else CategoryVerdict.SECURE
    )
    return CategoryResult(cat, verdict, store.signature, checked, stats)


def verify_program(
    program: Program,
    categories: Sequence[Category],
    depth_bound: int,
    granularity: Granularity = Granularity.STMT,
    fairness: Optional[int] = None,
    sig_dir: Optional[Union[str, Path]] = None,
) -> SecurityReport:
    """Check every category, short-circuiting on the first violation.

    The overall verdict is INSECURE iff some category violated, SECURE only
    when every category is fully secure, and SECURE_UP_TO_BOUND when any
    executions were abandoned (or pruned by fairness) without a violation.
    """
    categories = list(categories)
    if not categories:
        raise CategoryError("at least one category is required")
    seen_lows: dict[tuple, str] = {}
    for cat in categories:
        key = tuple(sorted(cat.low_init.items()))
        if key in seen_lows:
            raise CategoryError(
                f"categories {seen_lows[key]!r} and {cat.name!r} share one initial low"
                " store; merge them"
            )
        seen_lows[key] = cat.name
    names = [c.name for c in categories]
    if len(set(names)) != len(names):
        raise CategoryError("category names must be unique")

    results: list[CategoryResult] = []
    for cat in categories:
        store = None
        if sig_dir is not None:
            path = Path(sig_dir)
            path.mkdir(parents=True, exist_ok=True)
            store = SignatureStore.create(path / f"{cat.name}.odsig", cat.name)
        result = verify_category(program, cat, depth_bound, granularity, fairness, store)
        results.append(result)
        if result.verdict is CategoryVerdict.VIOLATION:
            break  # remaining categories are not explored

    if any(r.verdict is CategoryVerdict.VIOLATION for r in results):
        verdict = Verdict.INSECURE
    elif all(r.verdict is CategoryVerdict.SECURE for r in results):
        verdict = Verdict.SECURE
    else:
        verdict = Verdict.SECURE_UP_TO_BOUND
    return SecurityReport(verdict, results, program)


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def _record_dict(rec: Optional[ChangeRecord]) -> Optional[dict]:
    if rec is None:
        return None
    return {"num": rec.num, "id": rec.var_id, "val": rec.value}


def _iteration_dict(it: Iteration, program: Program) -> dict:
    names = {vid: program.by_id[vid].name for vid in it.high_assignment}
    return {
        "highs": {names[vid]: val for vid, val in sorted(it.high_assignment.items())},
        "schedule": list(it.schedule),
        "ordinal": it.ordinal,
    }


def _witness_dict(w: ViolationWitness, program: Program) -> dict:
    detail = w.detail
    if isinstance(detail.observed, ChangeEvent):
        observed = {
            "num": detail.observed.num,
            "id": detail.observed.var_id,
            "val": detail.observed.value,
        }
    elif isinstance(detail.observed, int):
        observed = {"count": detail.observed}
    else:
        observed = None
    return {
        "kind": detail.kind.value,
        "position": detail.position,
        "expected": _record_dict(detail.expected),
        "observed": observed,
        "reference": _iteration_dict(w.reference, program),
        "violating": _iteration_dict(w.violating, program),
    }


def report_to_dict(report: SecurityReport) -> dict:
    """Serializable form of a report, including everything a replay needs:
    category definitions (by variable name) and witness iterations."""
    program = report.program
    categories = []
    for r in report.categories:
        cat = r.category
        low = {
            program.by_id[vid].name: val for vid, val in sorted(cat.low_init.items())
        }
        highs = {
            program.by_id[vid].name: list(dom)
            for vid, dom in sorted(cat.high_domains.items())
        }
        entry = {
            "name": cat.name,
            "low": low,
            "high_domains": highs,
            "result": r.verdict.value,
            "iterations": {
                "completed": r.stats.completed,
                "abandoned": r.stats.depth_exceeded,
                "pruned": r.stats.pruned,
                "checked": r.iterations_checked,
            },
            "signature": None,
            "witness": None,
        }
        if r.signature is not None and r.signature.change_count is not None:
            entry["signature"] = {
                "lssc": r.signature.change_count,
                "records": [_record_dict(rec) for rec in r.signature.records],
            }
        if r.witness is not None:
            entry["witness"] = _witness_dict(r.witness, program)
        categories.append(entry)
    return {
        "verdict": report.verdict.value,
        "categories": categories,
        "stats": report.totals,
    }

"""Disk-backed keyed record store for low-store change signatures.

File format (text, line oriented, newline-terminated, bit exact):

    ODSIG 1
    category <name>
    lssc <N>
    rec <num> <id> <val>     (exactly N lines, num = 1..N in order)

``lssc`` is the low-store state-change count; every integer is decimal.
Loading validates the whole structure and raises CorruptSignatureError on
any deviation, including a missing final newline. Writers fill records with
dense keys 1, 2, ... and freeze the signature by setting the count, after
which it may be read concurrently but never modified.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Union

from .errors import CorruptSignatureError, SignatureError
from .lang import INT64_MAX, INT64_MIN

FORMAT_HEADER = "ODSIG 1"

_NAME_RE = re.compile(r"[A-Za-z0-9_.\-]+\Z")


class ChangeRecord(NamedTuple):
    """Stored counterpart of a monitor ChangeEvent."""

    num: int
    var_id: int
    value: int


@dataclass
class Signature:
    """Ordered change records of one category's reference execution plus the
    total change count; the compact encoding of its secure trace pattern."""

    category: str
    records: list[ChangeRecord] = field(default_factory=list)
    change_count: Optional[int] = None


class SignatureStore:
    """Keyed access to one category's Signature, optionally file backed.

    Records are stored under their 1-based change number; ``get_record``
    counts fetches so callers can assert the linear-work property of the
    checking pass.
    """

    def __init__(self, category: str, path: Optional[Union[str, Path]] = None):
        if not _NAME_RE.match(category):
            raise SignatureError(f"invalid category name {category!r}")
        self.path = Path(path) if path is not None else None
        self.signature = Signature(category)
        self.fetch_count = 0

    @classmethod
    def open(cls, path: Union[str, Path], category: str) -> "SignatureStore":
        """Open a store at ``path``: loads and validates an existing file,
        otherwise starts empty."""
        store = cls(category, path)
        p = Path(path)
        if p.exists():
            loaded = load_signature(p)
            if loaded.category != category:
                raise CorruptSignatureError(
                    f"{p}: holds category {loaded.category!r}, expected {category!r}"
                )
            store.signature = loaded
        return store

    @classmethod
    def create(cls, path: Union[str, Path], category: str) -> "SignatureStore":
        """Open a fresh store at ``path``, discarding any existing file."""
        Path(path).unlink(missing_ok=True)
        return cls(category, path)

    @property
    def frozen(self) -> bool:
        return self.signature.change_count is not None

    def put_record(self, record: ChangeRecord) -> None:
        if self.frozen:
            raise SignatureError("signature is frozen; no further records accepted")
        expected = len(self.signature.records) + 1
        if record.num < expected:
            raise SignatureError(f"duplicate record key {record.num}")
        if record.num > expected:
            raise SignatureError(f"non-dense record key {record.num}, expected {expected}")
        self.signature.records.append(record)

    def get_record(self, num: int) -> Optional[ChangeRecord]:
        """Record stored under ``num``, or None when past the stored count."""
        self.fetch_count += 1
        records = self.signature.records
        if 1 <= num <= len(records):
            return records[num - 1]
        return None

    def set_count(self, count: int) -> None:
        """Freeze the signature; saves to disk when the store has a path."""
        if self.frozen:
            raise SignatureError("change count already set")
        if count != len(self.signature.records):
            raise SignatureError(
                f"change count {count} does not match {len(self.signature.records)} stored records"
            )
        self.signature.change_count = count
        if self.path is not None:
            self.save()

    def get_count(self) -> Optional[int]:
        return self.signature.change_count

    def save(self) -> None:
        if self.path is None:
            raise SignatureError("store has no backing path")
        save_signature(self.signature, self.path)


def save_signature(sig: Signature, path: Union[str, Path]) -> None:
    """Write a frozen signature in the ODSIG text format."""
    if sig.change_count is None:
        raise SignatureError("cannot save a signature before its count is set")
    if sig.change_count != len(sig.records):
        raise SignatureError("change count disagrees with the record list")
    if not _NAME_RE.match(sig.category):
        raise SignatureError(f"invalid category name {sig.category!r}")
    lines = [FORMAT_HEADER, f"category {sig.category}", f"lssc {sig.change_count}"]
    for rec in sig.records:
        lines.append(f"rec {rec.num} {rec.var_id} {rec.value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _int_field(text: str, what: str, path: Path) -> int:
    if not re.match(r"-?[0-9]+\Z", text):
        raise CorruptSignatureError(f"{path}: malformed {what} {text!r}")
    value = int(text)
    if not INT64_MIN <= value <= INT64_MAX:
        raise CorruptSignatureError(f"{path}: {what} {value} outside the 64-bit range")
    return value


def load_signature(path: Union[str, Path]) -> Signature:
    """Parse and validate an ODSIG file; raises CorruptSignatureError on any
    structural problem, never repairing silently."""
    p = Path(path)
    try:
        data = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorruptSignatureError(f"{p}: unreadable ({exc})") from exc
    if not data.endswith("\n"):
        raise CorruptSignatureError(f"{p}: truncated (missing final newline)")
    lines = data.split("\n")[:-1]
    if len(lines) < 3:
        raise CorruptSignatureError(f"{p}: missing header lines")
    if lines[0] != FORMAT_HEADER:
        raise CorruptSignatureError(f"{p}: bad header {lines[0]!r}")
    if not lines[1].startswith("category "):
        raise CorruptSignatureError(f"{p}: expected category line, got {lines[1]!r}")
    category = lines[1][len("category "):]
    if not _NAME_RE.match(category):
        raise CorruptSignatureError(f"{p}: invalid category name {category!r}")
    if not lines[2].startswith("lssc "):
        raise CorruptSignatureError(f"{p}: expected lssc line, got {lines[2]!r}")
    count = _int_field(lines[2][len("lssc "):], "change count", p)
    if count < 0:
        raise CorruptSignatureError(f"{p}: negative change count {count}")

    records: list[ChangeRecord] = []
    for line in lines[3:]:
        parts = line.split(" ")
        if len(parts) != 4 or parts[0] != "rec":
            raise CorruptSignatureError(f"{p}: malformed record line {line!r}")
        num = _int_field(parts[1], "record number", p)
        var_id = _int_field(parts[2], "variable id", p)
        value = _int_field(parts[3], "value", p)
        if num != len(records) + 1:
            raise CorruptSignatureError(f"{p}: record key {num} breaks the dense 1..n order")
        if var_id < 1:
            raise CorruptSignatureError(f"{p}: variable id {var_id} must be positive")
        records.append(ChangeRecord(num, var_id, value))
    if len(records) != count:
        raise CorruptSignatureError(
            f"{p}: lssc says {count} records but file holds {len(records)}"
        )
    return Signature(category, records, count)

"""Canonical correlator keys and the memoizing invariant store.

A key holds the base moduli cycle plus one (descendent level, basis class)
pair per mark.  Nonzero levels are only meaningful over the fundamental base
cycle, where they encode a cotangent-line cycle; the level data stays with
the insertions so that permutation symmetry and dimension bookkeeping live
in one place.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional

from .moduli import (
    ClassExpr,
    FixedCurve,
    Fund,
    Mu,
    PointClass,
    Theta,
    Witten,
    format_sexpr,
    parse_sexpr,
    real_codim,
)
from .target import CurveClass, TargetModel


class StoreError(ValueError):
    pass


Insertion = tuple[int, int]  # (descendent level, basis index)


@dataclass(frozen=True)
class CorrelatorKey:
    target: str
    g: int
    A: CurveClass
    moduli: ClassExpr
    insertions: tuple[Insertion, ...]

    def __post_init__(self) -> None:
        if 2 * self.g + len(self.insertions) < 3:
            raise StoreError("2g + k >= 3 required")
        if len(self.insertions) != self.moduli.k:
            raise StoreError("one insertion per mark required")
        if self.g != self.moduli.g:
            raise StoreError("genus of moduli class and key disagree")
        if any(d < 0 for d, _ in self.insertions):
            raise StoreError("descendent levels must be nonnegative")
        if any(d > 0 for d, _ in self.insertions) and not isinstance(self.moduli, Fund):
            raise StoreError("descendent levels require the fundamental base cycle")

    @property
    def k(self) -> int:
        return len(self.insertions)

    @property
    def total_level(self) -> int:
        return sum(d for d, _ in self.insertions)


def canonicalize(key: CorrelatorKey) -> CorrelatorKey:
    """Sort insertions as far as the base cycle's symmetry allows.

    Fundamental, point and cotangent-line cycles are symmetric under
    permuting marks (any point of a connected space is homologous to any
    other); fixed-curve cycles are symmetric within the frozen block and
    within the free block separately.  Gluing classes are left alone.
    """
    ins = key.insertions
    m = key.moduli
    if isinstance(m, (Fund, PointClass, Witten)):
        ins = tuple(sorted(ins))
    elif isinstance(m, FixedCurve):
        frozen = tuple(sorted(ins[: m.k_fixed]))
        free = tuple(sorted(ins[m.k_fixed:]))
        ins = frozen + free
    else:
        return key
    if isinstance(m, Witten):
        # level data lives in the insertions; normalize the base to Fund
        m = Fund(key.g, key.k)
        ins = tuple(sorted(ins))
    if ins == key.insertions and m == key.moduli:
        return key
    return CorrelatorKey(key.target, key.g, key.A, m, ins)


def dimension_check(target: TargetModel, key: CorrelatorKey) -> bool:
    """Degree balance: insertions plus cycle codimension match the index."""
    lhs = sum(2 * d + target.cod(a) for d, a in key.insertions)
    lhs += real_codim(key.moduli)
    n = target.complex_dim
    rhs = 2 * target.c1(key.A) + 2 * (3 - n) * (key.g - 1) + 2 * key.k
    return lhs == rhs


def key_sort_string(target: TargetModel, key: CorrelatorKey) -> str:
    ins = ",".join(f"{d}:{target.basis[a].label}" for d, a in key.insertions)
    deg = ",".join(str(d) for d in key.A.degrees)
    return f"{key.target}|g={key.g}|A={deg}|{format_sexpr(key.moduli)}|{ins}"


@dataclass
class StoredValue:
    value: Fraction
    provenance: str  # "computed" or "ingested" (seeds export as computed)


class InvariantStore:
    """Memoizing table of exact correlator values with provenance tags."""

    def __init__(self, target: TargetModel):
        self.target = target
        self._table: dict[CorrelatorKey, StoredValue] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._table)

    def lookup(self, key: CorrelatorKey) -> Optional[StoredValue]:
        return self._table.get(canonicalize(key))

    def record(self, key: CorrelatorKey, value: Fraction, provenance: str = "computed") -> None:
        key = canonicalize(key)
        if not dimension_check(self.target, key) and value != 0:
            raise StoreError("refusing to store a nonzero dimension-violating value")
        with self._lock:
            existing = self._table.get(key)
            if existing is not None and existing.value != value:
                raise StoreError(
                    f"conflicting values for {key_sort_string(self.target, key)}: "
                    f"{existing.value} ({existing.provenance}) vs {value} ({provenance})"
                )
            if existing is None:
                self._table[key] = StoredValue(value, provenance)

    def evaluate(self, key: CorrelatorKey, engine: "Callable[[CorrelatorKey], Optional[Fraction]]") -> Optional[Fraction]:
        """Memoized evaluation; vanishing rules come first, then the engine."""
        key = canonicalize(key)
        target = self.target
        if target.omega(key.A) < 0 or not target.is_effective(key.A):
            return Fraction(0)
        n = target.complex_dim
        # The index criterion concerns the nonconstant sector; the constant
        # sector (A = 0) carries the classical values and is exempt.
        if not key.A.is_zero and target.c1(key.A) + (3 - n) * (key.g - 1) < 0:
            return Fraction(0)
        if not dimension_check(target, key):
            return Fraction(0)
        hit = self.lookup(key)
        if hit is not None:
            return hit.value
        value = engine(key)
        if value is not None:
            self.record(key, value)
        return value

    # -- flat-file interface -------------------------------------------------

    def ingest(self, records: Iterable[dict]) -> int:
        count = 0
        for rec in records:
            key, value, provenance = record_to_entry(self.target, rec)
            existing = self._table.get(canonicalize(key))
            if existing is not None and existing.value != value:
                raise StoreError(
                    f"ingest conflicts with existing entry "
                    f"{key_sort_string(self.target, key)}: "
                    f"{existing.value} vs {value}"
                )
            self.record(key, value, provenance)
            count += 1
        return count

    def export(self, predicate: Optional[Callable[[CorrelatorKey], bool]] = None) -> list[dict]:
        rows = []
        for key, stored in self._table.items():
            if predicate is not None and not predicate(key):
                continue
            rows.append((key_sort_string(self.target, key), entry_to_record(self.target, key, stored)))
        rows.sort(key=lambda pair: pair[0])
        return [rec for _, rec in rows]


def entry_to_record(target: TargetModel, key: CorrelatorKey, stored: StoredValue) -> dict:
    provenance = "computed" if stored.provenance == "seed" else stored.provenance
    return {
        "target": key.target,
        "g": key.g,
        "A": list(key.A.degrees),
        "moduli": format_sexpr(key.moduli),
        "insertions": [[d, target.basis[a].label] for d, a in key.insertions],
        "value": f"{stored.value.numerator}/{stored.value.denominator}",
        "provenance": provenance,
    }


def record_to_entry(target: TargetModel, rec: dict) -> tuple[CorrelatorKey, Fraction, str]:
    if rec.get("target") != target.name:
        raise StoreError(f"record target {rec.get('target')!r} != {target.name!r}")
    summands = parse_sexpr(rec["moduli"])
    if len(summands) != 1 or summands[0][0] != 1:
        raise StoreError("record moduli must be a plain class")
    moduli = summands[0][1]
    insertions = tuple((int(d), target.index_of(label)) for d, label in rec["insertions"])
    if isinstance(moduli, Witten):
        if tuple(d for d, _ in insertions) != moduli.levels and any(
            d for d, _ in insertions
        ):
            raise StoreError("witten levels disagree with insertion levels")
        insertions = tuple((lvl, a) for lvl, (_, a) in zip(moduli.levels, insertions))
        moduli = Fund(moduli.g, moduli.k)
    key = CorrelatorKey(
        target=rec["target"],
        g=int(rec["g"]),
        A=CurveClass(tuple(int(x) for x in rec["A"])),
        moduli=moduli,
        insertions=insertions,
    )
    value = Fraction(rec["value"])
    provenance = rec.get("provenance", "ingested")
    if provenance not in ("computed", "ingested"):
        raise StoreError(f"unknown provenance {provenance!r}")
    return key, value, provenance


def dump_jsonl(records: Iterable[dict]) -> str:
    return "\n".join(json.dumps(rec, sort_keys=True) for rec in records)


def load_jsonl(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]

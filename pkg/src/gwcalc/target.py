"""Homology ring data of the target manifold.

Everything downstream needs only a small amount of classical topology of the
target: a graded basis of even homology, the intersection pairing and its
inverse, the pairing of the first Chern class and of the symplectic form with
curve classes, and the Euler characteristic.  All numbers are exact rationals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


class TargetError(ValueError):
    """Raised when target data violates a structural invariant."""


@dataclass(frozen=True)
class BasisClass:
    label: str
    cod: int  # real codimension, even


@dataclass(frozen=True)
class CurveClass:
    """Element of H_2 of the target, as a degree vector over a fixed basis.

    For projective space the vector has a single entry d.
    """

    degrees: tuple[int, ...]

    def __add__(self, other: "CurveClass") -> "CurveClass":
        return CurveClass(tuple(a + b for a, b in zip(self.degrees, other.degrees)))

    def __sub__(self, other: "CurveClass") -> "CurveClass":
        return CurveClass(tuple(a - b for a, b in zip(self.degrees, other.degrees)))

    @property
    def is_zero(self) -> bool:
        return all(d == 0 for d in self.degrees)


def _invert(matrix: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    """Exact Gauss-Jordan inverse; raises TargetError on a singular matrix."""
    n = len(matrix)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise TargetError("intersection pairing is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = Fraction(1) / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


@dataclass(frozen=True)
class TargetModel:
    """Immutable (co)homology ring data of the target.

    Only even-codimension classes are supported; odd classes (and with them
    the supersymmetry sign rule) are rejected at construction.
    """

    name: str
    complex_dim: int
    basis: tuple[BasisClass, ...]
    eta: tuple[tuple[Fraction, ...], ...]
    c1_on_h2: tuple[int, ...]
    omega_on_h2: tuple[Fraction, ...]
    euler_char: int

    def __post_init__(self) -> None:
        n = self.complex_dim
        if n < 1:
            raise TargetError("complex dimension must be positive")
        cods = [b.cod for b in self.basis]
        for c in cods:
            if c % 2 or c < 0 or c > 2 * n:
                raise TargetError(f"codimension {c} out of range or odd")
        if cods.count(0) != 1:
            raise TargetError("exactly one basis class must have codimension 0")
        L = len(self.basis)
        if len(self.eta) != L or any(len(row) != L for row in self.eta):
            raise TargetError("eta has wrong shape")
        for a in range(L):
            for b in range(L):
                if self.eta[a][b] != self.eta[b][a]:
                    raise TargetError("eta must be symmetric")
                if cods[a] + cods[b] != 2 * n and self.eta[a][b] != 0:
                    raise TargetError("eta nonzero off complementary codimension")
        if any(w <= 0 for w in self.omega_on_h2):
            raise TargetError("omega pairing must be positive on the H_2 basis")
        # Forces invertibility; cached by pairing_data().
        _invert(self.eta)

    # -- basic lookups ----------------------------------------------------

    @property
    def fundamental_index(self) -> int:
        return next(i for i, b in enumerate(self.basis) if b.cod == 0)

    def index_of(self, label: str) -> int:
        for i, b in enumerate(self.basis):
            if b.label == label:
                return i
        raise TargetError(f"unknown basis class {label!r}")

    def cod(self, a: int) -> int:
        return self.basis[a].cod

    def c1(self, A: CurveClass) -> int:
        return sum(c * d for c, d in zip(self.c1_on_h2, A.degrees))

    def omega(self, A: CurveClass) -> Fraction:
        return sum((w * d for w, d in zip(self.omega_on_h2, A.degrees)), Fraction(0))

    def is_effective(self, A: CurveClass) -> bool:
        """Effectivity: A = 0 or omega(A) > 0 with the cone constraint d >= 0."""
        return all(d >= 0 for d in A.degrees)

    def curve(self, *degrees: int) -> CurveClass:
        if len(degrees) != len(self.c1_on_h2):
            raise TargetError("degree vector has wrong length")
        return CurveClass(tuple(degrees))

    def zero_curve(self) -> CurveClass:
        return CurveClass(tuple(0 for _ in self.c1_on_h2))

    # -- pairing data ------------------------------------------------------

    def pairing_data(self) -> tuple[
        tuple[tuple[Fraction, ...], ...],
        tuple[tuple[Fraction, ...], ...],
        tuple[tuple[int, int, Fraction], ...],
    ]:
        """(eta, eta inverse, diagonal terms of eq. [delta] = sum eta^{ab} b_a x b_b)."""
        inv = _invert(self.eta)
        diagonal = tuple(
            (a, b, inv[a][b])
            for a in range(len(self.basis))
            for b in range(len(self.basis))
            if inv[a][b] != 0
        )
        return self.eta, tuple(tuple(row) for row in inv), diagonal

    def eta_inverse(self) -> tuple[tuple[Fraction, ...], ...]:
        return self.pairing_data()[1]

    def diagonal_pairs(self) -> tuple[tuple[int, int, Fraction], ...]:
        return self.pairing_data()[2]

    # -- classical intersection numbers ------------------------------------

    def triple_intersection(self, a: int, b: int, c: int) -> Fraction:
        """Classical cup-product evaluation of three basis duals on [V].

        Zero unless the codimensions add to 2n.  Base case of every
        degree-zero three-point invariant.
        """
        return self._triple_tensor()[a][b][c]

    def _triple_tensor(self):
        cached = getattr(self, "_triples", None)
        if cached is not None:
            return cached
        L = len(self.basis)
        n = self.complex_dim
        tensor = [[[Fraction(0)] * L for _ in range(L)] for _ in range(L)]
        for a in range(L):
            for b in range(L):
                for c in range(L):
                    if self.cod(a) + self.cod(b) + self.cod(c) == 2 * n:
                        tensor[a][b][c] = self._triple_value(a, b, c)
        object.__setattr__(self, "_triples", tensor)
        return tensor

    def _triple_value(self, a: int, b: int, c: int) -> Fraction:
        # With a fundamental class present the triple degenerates to eta.
        fund = self.fundamental_index
        if a == fund:
            return self.eta[b][c]
        if b == fund:
            return self.eta[a][c]
        if c == fund:
            return self.eta[a][b]
        # Projective space: H^i cup H^j cup H^k integrates to 1 when i+j+k = n.
        if self.name.startswith("P"):
            return Fraction(1)
        raise TargetError("triple intersections beyond P^n need explicit data")

    def cup_basis_index(self, a: int, b: int) -> int | None:
        """Index c with beta_a^* cup beta_b^* = beta_c^*, or None if the cup is 0.

        Valid for targets whose cohomology is one-dimensional per degree (P^n).
        """
        cod = self.cod(a) + self.cod(b)
        if cod > 2 * self.complex_dim:
            return None
        for c, cls in enumerate(self.basis):
            if cls.cod == cod:
                return c
        return None

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "n": self.complex_dim,
            "basis": [{"label": b.label, "cod": b.cod} for b in self.basis],
            "eta": [[str(x) for x in row] for row in self.eta],
            "c1": list(self.c1_on_h2),
            "omega": [str(x) for x in self.omega_on_h2],
            "chi": self.euler_char,
        }

    @staticmethod
    def from_json(data: Mapping) -> "TargetModel":
        return TargetModel(
            name=data["name"],
            complex_dim=data["n"],
            basis=tuple(BasisClass(b["label"], b["cod"]) for b in data["basis"]),
            eta=tuple(tuple(Fraction(x) for x in row) for row in data["eta"]),
            c1_on_h2=tuple(data["c1"]),
            omega_on_h2=tuple(Fraction(x) for x in data["omega"]),
            euler_char=data["chi"],
        )


class CohElement(dict):
    """Finitely supported map basis index -> rational coefficient."""

    def __init__(self, items: Iterable[tuple[int, Fraction]] = ()):  # noqa: D107
        super().__init__()
        for idx, coeff in items:
            self.add(idx, coeff)

    def add(self, idx: int, coeff: Fraction) -> None:
        new = self.get(idx, Fraction(0)) + coeff
        if new == 0:
            self.pop(idx, None)
        else:
            self[idx] = new

    def scaled(self, factor: Fraction) -> "CohElement":
        return CohElement((i, c * factor) for i, c in self.items())

    def __add__(self, other: "CohElement") -> "CohElement":
        out = CohElement(self.items())
        for i, c in other.items():
            out.add(i, c)
        return out


def make_projective_space(n: int) -> TargetModel:
    """Ring data of P^n: basis H^0..H^n, antidiagonal pairing, c1 = (n+1)H."""
    if n < 1:
        raise TargetError("P^0 is a degenerate target")
    basis = tuple(BasisClass(f"H{i}", 2 * i) for i in range(n + 1))
    eta = tuple(
        tuple(Fraction(1) if i + j == n else Fraction(0) for j in range(n + 1))
        for i in range(n + 1)
    )
    return TargetModel(
        name=f"P{n}",
        complex_dim=n,
        basis=basis,
        eta=eta,
        c1_on_h2=(n + 1,),
        omega_on_h2=(Fraction(1),),
        euler_char=n + 1,
    )


_BUILTINS = {"P1": 1, "P2": 2, "P3": 3}


def builtin_target(name: str) -> TargetModel:
    if name not in _BUILTINS:
        raise TargetError(f"unknown builtin target {name!r} (have P1, P2, P3)")
    return make_projective_space(_BUILTINS[name])


def resolve_insertion_label(target: TargetModel, label: str) -> int:
    """Map a CLI label to a basis index.  Accepts H0..Hn plus common aliases."""
    label = label.strip()
    aliases = {
        "1": 0, "V": 0, "[V]": 0,
        "H": 1, "h": 1,
        "pt": target.complex_dim, "[pt]": target.complex_dim, "point": target.complex_dim,
    }
    if label in aliases:
        return aliases[label]
    return target.index_of(label)


def load_target(spec: str) -> TargetModel:
    """Resolve a builtin name or a path to a JSON target record."""
    if spec in _BUILTINS:
        return builtin_target(spec)
    with open(spec, "r", encoding="utf-8") as handle:
        return TargetModel.from_json(json.load(handle))

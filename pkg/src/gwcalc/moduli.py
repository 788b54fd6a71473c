"""Symbolic rational homology classes of the Deligne-Mumford spaces.

The calculus never touches actual cycle geometry.  A class is a small
expression tree; the only facts used about the underlying spaces are

* codimension bookkeeping,
* a generic point of a connected space is homologous to any other point,
  in particular to a boundary point (which licenses rewriting point classes
  into boundary pushforwards),
* the comparison of cotangent-line classes under the forgetful map,
  ``L = pull(L') + D`` with ``L . D = 0``, and
* top intersection numbers of cotangent-line classes in genus 0 and 1.

Pullbacks of genus-0 point classes under forgetful maps expand exactly into
sums of boundary classes; the analogous genus-1 identity carries an unknown
normalization and is left to the caller (see the solver's candidate
handling).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence, Union


class ModuliError(ValueError):
    """Structural error in a moduli class expression."""


EXCEPTIONAL_PAIRS = {(0, 3), (1, 1)}  # forgetful map undefined


def _require_stable(g: int, k: int) -> None:
    if g < 0 or k < 0 or 2 * g + k < 3:
        raise ModuliError(f"unstable pair (g,k)=({g},{k})")


def ambient_dim(g: int, k: int) -> int:
    return 6 * g - 6 + 2 * k


@dataclass(frozen=True)
class Fund:
    g: int
    k: int

    def __post_init__(self) -> None:
        _require_stable(self.g, self.k)


@dataclass(frozen=True)
class PointClass:
    g: int
    k: int

    def __post_init__(self) -> None:
        _require_stable(self.g, self.k)


@dataclass(frozen=True)
class Witten:
    """Poincare dual of a product of cotangent-line classes, one power per slot."""

    g: int
    k: int
    levels: tuple[int, ...]

    def __post_init__(self) -> None:
        _require_stable(self.g, self.k)
        if len(self.levels) != self.k or any(d < 0 for d in self.levels):
            raise ModuliError("witten levels must be nonnegative, one per mark")


@dataclass(frozen=True)
class FixedCurve:
    """K_{k,l}: closure of the locus with the first k marks and the curve frozen.

    Lives in the space with k + l marks; the l trailing marks move freely.
    """

    g: int
    k_fixed: int
    l_free: int

    def __post_init__(self) -> None:
        _require_stable(self.g, self.k_fixed)
        if self.l_free < 0:
            raise ModuliError("free mark count must be nonnegative")

    @property
    def k(self) -> int:
        return self.k_fixed + self.l_free


@dataclass(frozen=True)
class Theta:
    """Pushforward along the boundary gluing of two marked curves.

    ``left_marks`` lists the ambient mark indices (0-based) carried by the
    left factor.  Slot order inside the left factor is the listed order with
    the node last; inside the right factor the node comes first.
    """

    g1: int
    g2: int
    k: int
    left_marks: tuple[int, ...]
    left: "ClassExpr"
    right: "ClassExpr"

    def __post_init__(self) -> None:
        k1 = len(self.left_marks)
        k2 = self.k - k1
        if sorted(set(self.left_marks)) != sorted(self.left_marks):
            raise ModuliError("duplicate marks on the left factor")
        if any(i < 0 or i >= self.k for i in self.left_marks):
            raise ModuliError("left mark index out of range")
        if 2 * self.g1 + (k1 + 1) < 3 or 2 * self.g2 + (k2 + 1) < 3:
            raise ModuliError("unstable side of a boundary gluing")
        if (self.left.g, self.left.k) != (self.g1, k1 + 1):
            raise ModuliError("left factor has wrong type")
        if (self.right.g, self.right.k) != (self.g2, k2 + 1):
            raise ModuliError("right factor has wrong type")

    @property
    def g(self) -> int:
        return self.g1 + self.g2

    @property
    def right_marks(self) -> tuple[int, ...]:
        left = set(self.left_marks)
        return tuple(i for i in range(self.k) if i not in left)


@dataclass(frozen=True)
class Mu:
    """Pushforward along gluing the last two marks (genus raises by one)."""

    inner: "ClassExpr"

    def __post_init__(self) -> None:
        if self.inner.k < 2:
            raise ModuliError("mu needs two marks to glue")
        _require_stable(self.g, self.k)

    @property
    def g(self) -> int:
        return self.inner.g + 1

    @property
    def k(self) -> int:
        return self.inner.k - 2


@dataclass(frozen=True)
class ForgetPull:
    """Preimage under the forgetful map; the new mark is the last slot."""

    inner: "ClassExpr"

    def __post_init__(self) -> None:
        _require_stable(self.inner.g, self.inner.k)

    @property
    def g(self) -> int:
        return self.inner.g

    @property
    def k(self) -> int:
        return self.inner.k + 1


@dataclass(frozen=True)
class ForgetPush:
    """Homological pushforward along forgetting the last mark."""

    inner: "ClassExpr"

    def __post_init__(self) -> None:
        if (self.inner.g, self.inner.k) in EXCEPTIONAL_PAIRS:
            raise ModuliError("forgetful map undefined on (0,3) and (1,1)")
        _require_stable(self.inner.g, self.inner.k - 1)

    @property
    def g(self) -> int:
        return self.inner.g

    @property
    def k(self) -> int:
        return self.inner.k - 1


ClassExpr = Union[Fund, PointClass, Witten, FixedCurve, Theta, Mu, ForgetPull, ForgetPush]

# A formal rational combination of class expressions; [] is the zero class.
FormalSum = list[tuple[Fraction, ClassExpr]]


def real_codim(expr: ClassExpr) -> int:
    """Real codimension of the class inside its ambient space."""
    if isinstance(expr, Fund):
        return 0
    if isinstance(expr, PointClass):
        return ambient_dim(expr.g, expr.k)
    if isinstance(expr, Witten):
        return 2 * sum(expr.levels)
    if isinstance(expr, FixedCurve):
        return ambient_dim(expr.g, expr.k_fixed)
    if isinstance(expr, Theta):
        return real_codim(expr.left) + real_codim(expr.right) + 2
    if isinstance(expr, Mu):
        return real_codim(expr.inner) + 2
    if isinstance(expr, ForgetPull):
        return real_codim(expr.inner)
    if isinstance(expr, ForgetPush):
        return real_codim(expr.inner) + 2
    raise ModuliError(f"unknown expression {expr!r}")


def is_zero_class(expr: ClassExpr) -> bool:
    """True when the class vanishes for trivial dimension reasons."""
    if isinstance(expr, Witten):
        return real_codim(expr) > ambient_dim(expr.g, expr.k)
    if isinstance(expr, (Theta, Mu, ForgetPull, ForgetPush)):
        return real_codim(expr) > ambient_dim(expr.g, expr.k)
    return False


def forget_transfer(expr: ClassExpr, direction: str) -> FormalSum:
    """Transfer a class along the forgetful map (eq. style: push or pull).

    push: the map forgets the last mark of the ambient space of ``expr``;
    refused on the exceptional pairs.  Pushing the fundamental class, or any
    class swept out by the free marks of a fixed-curve cycle, collapses
    dimension and gives the zero class.
    """
    if direction == "pull":
        if isinstance(expr, Fund):
            return [(Fraction(1), Fund(expr.g, expr.k + 1))]
        if isinstance(expr, PointClass):
            return [(Fraction(1), FixedCurve(expr.g, expr.k, 1))]
        if isinstance(expr, FixedCurve):
            return [(Fraction(1), FixedCurve(expr.g, expr.k_fixed, expr.l_free + 1))]
        return [(Fraction(1), ForgetPull(expr))]
    if direction == "push":
        if (expr.g, expr.k) in EXCEPTIONAL_PAIRS:
            raise ModuliError("forgetful map undefined on (0,3) and (1,1)")
        if isinstance(expr, Fund):
            return []
        if isinstance(expr, PointClass):
            return [(Fraction(1), PointClass(expr.g, expr.k - 1))]
        if isinstance(expr, FixedCurve):
            if expr.l_free >= 1:
                # The free-mark fibre has positive dimension, so the
                # homological pushforward vanishes (image drops dimension).
                return []
            return [(Fraction(1), PointClass(expr.g, expr.k_fixed - 1))]
        raise ModuliError(f"no pushforward rule for {type(expr).__name__}")
    raise ModuliError("direction must be 'push' or 'pull'")


def boundary_representation(
    expr: ClassExpr, split: Optional[Sequence[int]] = None
) -> FormalSum:
    """Rewrite a point-type class as a homologous boundary pushforward.

    Genus 0 points split along a chosen two-sided partition of the marks
    (canonically marks 1,2 against the rest); genus 1 points are the glued
    image of a genus-0 point.  No identity is available for genus >= 2.
    """
    if isinstance(expr, PointClass):
        g, k = expr.g, expr.k
        if g == 0:
            if k == 3:
                return [(Fraction(1), Fund(0, 3))]
            left = tuple(split) if split is not None else (0, 1)
            if len(left) < 2 or k - len(left) < 2:
                raise ModuliError("each side of a genus-0 split needs two marks")
            right = tuple(i for i in range(k) if i not in set(left))
            return [(
                Fraction(1),
                Theta(
                    0, 0, k, left,
                    PointClass(0, len(left) + 1),
                    PointClass(0, len(right) + 1),
                ),
            )]
        if g == 1:
            return [(Fraction(1), Mu(PointClass(0, k + 2)))]
        raise ModuliError("no boundary identity for genus >= 2 points")
    if isinstance(expr, FixedCurve) and expr.g == 0:
        return expand_fixed_genus0(expr, split)
    raise ModuliError(f"no boundary representation for {type(expr).__name__}")


def expand_fixed_genus0(expr: FixedCurve, split: Optional[Sequence[int]] = None) -> FormalSum:
    """Expand a genus-0 fixed-curve class into boundary classes.

    K_{k,l} is the preimage of a point of the k-marked space under the map
    forgetting the l free marks.  For k = 3 that point is the whole space, so
    the class is fundamental; otherwise the point splits into a boundary
    gluing and the free marks distribute over the two sides.
    """
    if expr.g != 0:
        raise ModuliError("expansion only valid in genus 0")
    fixed = tuple(range(expr.k_fixed))
    free = tuple(range(expr.k_fixed, expr.k))
    first = tuple(split) if split is not None else None
    return expand_k0_marks(fixed, free, first)


def expand_k0_marks(
    fixed: tuple[int, ...],
    free: tuple[int, ...],
    split: Optional[tuple[int, ...]] = None,
) -> FormalSum:
    """Genus-0 fixed-locus class with explicit frozen/free slot indices.

    The slot indices partition ``range(len(fixed) + len(free))``; the result
    is a sum of nested gluing classes whose leaves are fundamental classes.
    Mark indices inside nested factors are relative to that factor's slots,
    with the node first on right factors and last on left factors.
    """
    total = len(fixed) + len(free)
    if sorted(fixed + free) != list(range(total)):
        raise ModuliError("fixed and free slots must partition the marks")
    if len(fixed) < 3:
        raise ModuliError("a fixed-curve class needs at least three frozen marks")
    if len(fixed) == 3:
        return [(Fraction(1), Fund(0, total))]
    left_fixed = split if split is not None else tuple(sorted(fixed)[:2])
    if len(left_fixed) != 2 or any(i not in fixed for i in left_fixed):
        raise ModuliError("split must pick two frozen marks for the left side")
    out: FormalSum = []
    for assignment in range(1 << len(free)):
        lf = tuple(m for b, m in enumerate(free) if assignment >> b & 1)
        rf = tuple(m for b, m in enumerate(free) if not assignment >> b & 1)
        left_marks = tuple(sorted(left_fixed + lf))
        # Two frozen marks plus the node freeze the left side completely,
        # so with any number of extra moving marks its class is fundamental.
        left_expr = Fund(0, len(left_marks) + 1)
        right_marks = tuple(i for i in range(total) if i not in set(left_marks))
        # Right-side slots: node first, then right_marks in order.  The node
        # joins the frozen set; free slots keep their relative positions.
        pos = {mark: slot + 1 for slot, mark in enumerate(right_marks)}
        sub_fixed = (0,) + tuple(sorted(pos[i] for i in fixed if i in pos))
        sub_free = tuple(sorted(pos[i] for i in rf))
        for coeff, right_expr in expand_k0_marks(sub_fixed, sub_free, None):
            out.append((
                coeff,
                Theta(0, 0, total, left_marks, left_expr, right_expr),
            ))
    return out


@lru_cache(maxsize=None)
def psi_intersection(g: int, levels: tuple[int, ...]) -> Fraction:
    """Top intersection number of cotangent-line classes, genus 0 or 1.

    Genus 0 is the closed multinomial form; genus 1 is fixed by the string
    and dilaton recursions from the value 1/24 on the one-marked space.
    """
    levels = tuple(sorted(levels, reverse=True))
    k = len(levels)
    s = sum(levels)
    if g == 0:
        if k < 3 or s != k - 3:
            return Fraction(0)
        out = Fraction(1)
        remaining = k - 3
        for d in levels:
            out *= Fraction(_binom(remaining, d))
            remaining -= d
        return out
    if g == 1:
        if k < 1 or s != k:
            return Fraction(0)
        if levels == (1,):
            return Fraction(1, 24)
        if levels[-1] == 0:
            body = levels[:-1]
            total = Fraction(0)
            for j, d in enumerate(body):
                if d >= 1:
                    lowered = body[:j] + (d - 1,) + body[j + 1:]
                    total += psi_intersection(1, lowered)
            return total
        # all levels >= 1 and they sum to k, hence all equal 1
        return Fraction(k - 1) * psi_intersection(1, levels[:-1])
    raise ModuliError("psi intersection numbers implemented for genus <= 1 only")


def _binom(n: int, r: int) -> int:
    if r < 0 or r > n:
        return 0
    out = 1
    for i in range(r):
        out = out * (n - i) // (i + 1)
    return out


# ---------------------------------------------------------------------------
# textual syntax


def parse_sexpr(text: str) -> FormalSum:
    """Parse the CLI syntax, e.g. ``(mu (point 0 5))`` or ``(witten 1 1 (1))``."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    tree, rest = _parse_tokens(tokens)
    if rest:
        raise ModuliError(f"trailing tokens {rest!r}")
    return _build(tree)


def _parse_tokens(tokens: list[str]):
    if not tokens:
        raise ModuliError("unexpected end of input")
    head, rest = tokens[0], tokens[1:]
    if head == "(":
        items = []
        while rest and rest[0] != ")":
            item, rest = _parse_tokens(rest)
            items.append(item)
        if not rest:
            raise ModuliError("missing closing parenthesis")
        return items, rest[1:]
    if head == ")":
        raise ModuliError("unexpected closing parenthesis")
    return head, rest


def _as_int(tok) -> int:
    try:
        return int(tok)
    except (TypeError, ValueError):
        raise ModuliError(f"expected integer, got {tok!r}") from None


def _single(summands: FormalSum) -> ClassExpr:
    if len(summands) != 1 or summands[0][0] != 1:
        raise ModuliError("nested expression must be a plain class")
    return summands[0][1]


def _build(tree) -> FormalSum:
    if not isinstance(tree, list) or not tree:
        raise ModuliError(f"bad expression {tree!r}")
    op = tree[0]
    if op == "fund":
        return [(Fraction(1), Fund(_as_int(tree[1]), _as_int(tree[2])))]
    if op == "point":
        return [(Fraction(1), PointClass(_as_int(tree[1]), _as_int(tree[2])))]
    if op == "witten":
        g, k = _as_int(tree[1]), _as_int(tree[2])
        levels = tuple(_as_int(t) for t in tree[3])
        return [(Fraction(1), Witten(g, k, levels))]
    if op == "kfix":
        return [(Fraction(1), FixedCurve(_as_int(tree[1]), _as_int(tree[2]), _as_int(tree[3])))]
    if op == "mu":
        return [(Fraction(1), Mu(_single(_build(tree[1]))))]
    if op == "pull":
        return forget_transfer(_single(_build(tree[1])), "pull")
    if op == "push":
        return forget_transfer(_single(_build(tree[1])), "push")
    if op == "theta":
        marks = tuple(_as_int(t) - 1 for t in tree[1])  # 1-based on the CLI
        left = _single(_build(tree[2]))
        right = _single(_build(tree[3]))
        k = (left.k - 1) + (right.k - 1)
        return [(Fraction(1), Theta(left.g, right.g, k, marks, left, right))]
    if op == "scale":
        coeff = Fraction(tree[1])
        return [(coeff * c, e) for c, e in _build(tree[2])]
    raise ModuliError(f"unknown class constructor {op!r}")


def format_sexpr(expr: ClassExpr) -> str:
    if isinstance(expr, Fund):
        return f"(fund {expr.g} {expr.k})"
    if isinstance(expr, PointClass):
        return f"(point {expr.g} {expr.k})"
    if isinstance(expr, Witten):
        return f"(witten {expr.g} {expr.k} ({' '.join(map(str, expr.levels))}))"
    if isinstance(expr, FixedCurve):
        return f"(kfix {expr.g} {expr.k_fixed} {expr.l_free})"
    if isinstance(expr, Mu):
        return f"(mu {format_sexpr(expr.inner)})"
    if isinstance(expr, ForgetPull):
        return f"(pull {format_sexpr(expr.inner)})"
    if isinstance(expr, ForgetPush):
        return f"(push {format_sexpr(expr.inner)})"
    if isinstance(expr, Theta):
        marks = " ".join(str(i + 1) for i in expr.left_marks)
        return f"(theta ({marks}) {format_sexpr(expr.left)} {format_sexpr(expr.right)})"
    raise ModuliError(f"unknown expression {expr!r}")

"""The correlator identities as rewrite rules.

Every rule maps a key to a rational-weighted list of strictly simpler keys
(plus, for two of them, a closed rational term).  Rules raise RuleMismatch
when their precondition fails; the solver owns the dispatch order.

Level-lowering sums drop terms whose reduced mark count falls below the
stability bound: the generating function has no two-mark coefficients, and
the exceptional contributions are exactly the closed eta and chi/24 terms.
"""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple

from .moduli import (
    EXCEPTIONAL_PAIRS,
    FixedCurve,
    Fund,
    Mu,
    PointClass,
    Theta,
    Witten,
    forget_transfer,
)
from .store import CorrelatorKey, canonicalize
from .target import TargetModel


class RuleMismatch(ValueError):
    pass


class Rewrite(NamedTuple):
    terms: list[tuple[Fraction, CorrelatorKey]]
    constant: Fraction


def _key_without(key: CorrelatorKey, slot: int, moduli) -> CorrelatorKey:
    ins = key.insertions[:slot] + key.insertions[slot + 1:]
    return CorrelatorKey(key.target, key.g, key.A, moduli, ins)


def _find_slot(key: CorrelatorKey, level: int, basis_index: int) -> int | None:
    for i, (d, a) in enumerate(key.insertions):
        if d == level and a == basis_index:
            return i
    return None


def base_values(target: TargetModel, key: CorrelatorKey) -> Fraction | None:
    """Closed values: degree-zero three-point, and the one-marked torus cases."""
    fund = target.fundamental_index
    g, k = key.g, key.k
    if g == 0 and k == 3 and key.A.is_zero and isinstance(key.moduli, Fund) \
            and all(d == 0 for d, _ in key.insertions):
        a, b, c = (a for _, a in key.insertions)
        return target.triple_intersection(a, b, c)
    if g == 1 and k == 1:
        (d, a), = key.insertions
        if isinstance(key.moduli, Fund) and (d, a) == (0, fund):
            return Fraction(0)
        if key.A.is_zero and a == fund:
            if isinstance(key.moduli, PointClass) and d == 0:
                return Fraction(target.euler_char)
            if isinstance(key.moduli, Fund) and d == 1:
                return Fraction(target.euler_char, 24)
    return None


def reduce_fundamental(target: TargetModel, key: CorrelatorKey) -> Rewrite:
    """Drop a fundamental-class insertion and push the cycle forward."""
    if any(d for d, _ in key.insertions):
        raise RuleMismatch("level data present; use the string rule")
    slot = _find_slot(key, 0, target.fundamental_index)
    if slot is None:
        raise RuleMismatch("no fundamental-class insertion")
    if (key.g, key.k) in EXCEPTIONAL_PAIRS:
        raise RuleMismatch("forgetful map undefined here")
    pushed = forget_transfer(key.moduli, "push")
    terms = [(coeff, _key_without(key, slot, m)) for coeff, m in pushed]
    return Rewrite(terms, Fraction(0))


def reduce_divisor(target: TargetModel, key: CorrelatorKey) -> Rewrite:
    """Trade a divisor insertion for its pairing with the curve class.

    Valid only on cycles pulled back along the forgetful map: the
    fundamental class, or the free marks of a fixed-curve cycle.
    """
    if any(d for d, _ in key.insertions):
        raise RuleMismatch("level data present")
    m = key.moduli
    if isinstance(m, Fund):
        if 2 * key.g + key.k - 1 < 3:
            raise RuleMismatch("reduced key would be unstable")
        slot = next((i for i, (d, a) in enumerate(key.insertions)
                     if d == 0 and target.cod(a) == 2), None)
        if slot is None:
            raise RuleMismatch("no divisor insertion")
        reduced = Fund(key.g, key.k - 1)
    elif isinstance(m, FixedCurve) and m.l_free >= 1:
        slot = next((i for i, (d, a) in enumerate(key.insertions)
                     if i >= m.k_fixed and d == 0 and target.cod(a) == 2), None)
        if slot is None:
            raise RuleMismatch("no divisor insertion on a free mark")
        if m.l_free == 1:
            reduced = PointClass(m.g, m.k_fixed)
        else:
            reduced = FixedCurve(m.g, m.k_fixed, m.l_free - 1)
    else:
        raise RuleMismatch("cycle is not of pullback type")
    _, a = key.insertions[slot]
    pairing = divisor_pairing(target, a, key.A)
    return Rewrite([(pairing, _key_without(key, slot, reduced))], Fraction(0))


def divisor_pairing(target: TargetModel, a: int, A) -> Fraction:
    """Pairing of the dual of a codimension-two basis class with a curve class."""
    if target.cod(a) != 2:
        raise RuleMismatch("insertion is not a divisor class")
    if target.name.startswith("P"):
        # single H_2 generator, hyperplane pairs to the plain degree
        return Fraction(A.degrees[0])
    raise RuleMismatch("divisor pairing needs explicit data beyond P^n")


def reduce_string(target: TargetModel, key: CorrelatorKey) -> Rewrite:
    """Remove a level-zero fundamental insertion, lowering one level elsewhere.

    The exceptional closed term is the intersection pairing, contributed
    exactly by the degree-zero genus-zero three-point case.
    """
    if not isinstance(key.moduli, Fund):
        raise RuleMismatch("string rule needs a cotangent-line or fundamental cycle")
    slot = _find_slot(key, 0, target.fundamental_index)
    if slot is None:
        raise RuleMismatch("no string insertion")
    rest = key.insertions[:slot] + key.insertions[slot + 1:]
    terms: list[tuple[Fraction, CorrelatorKey]] = []
    if 2 * key.g + (key.k - 1) >= 3:
        for j, (d, a) in enumerate(rest):
            if d >= 1:
                lowered = rest[:j] + ((d - 1, a),) + rest[j + 1:]
                terms.append((
                    Fraction(1),
                    CorrelatorKey(key.target, key.g, key.A, Fund(key.g, key.k - 1), lowered),
                ))
    constant = Fraction(0)
    if key.g == 0 and key.k == 3 and key.A.is_zero and all(d == 0 for d, _ in rest):
        (_, a1), (_, a2) = rest
        constant = target.eta[a1][a2]
    return Rewrite(terms, constant)


def reduce_dilaton(target: TargetModel, key: CorrelatorKey) -> Rewrite:
    """Remove a level-one fundamental insertion against the factor 2g - 2 + k.

    The exceptional closed term is chi/24 from the one-marked torus.
    """
    if not isinstance(key.moduli, Fund):
        raise RuleMismatch("dilaton rule needs a cotangent-line cycle")
    slot = _find_slot(key, 1, target.fundamental_index)
    if slot is None:
        raise RuleMismatch("no dilaton insertion")
    rest = key.insertions[:slot] + key.insertions[slot + 1:]
    factor = Fraction(2 * key.g - 2 + (key.k - 1))
    terms: list[tuple[Fraction, CorrelatorKey]] = []
    if factor != 0 and 2 * key.g + (key.k - 1) >= 3:
        terms.append((
            factor,
            CorrelatorKey(key.target, key.g, key.A, Fund(key.g, key.k - 1), rest),
        ))
    constant = Fraction(0)
    if key.g == 1 and key.k == 1 and key.A.is_zero:
        constant = Fraction(target.euler_char, 24)
    return Rewrite(terms, constant)


class SplitTerm(NamedTuple):
    weight: Fraction
    left: CorrelatorKey
    right: CorrelatorKey


class BoundarySplit(NamedTuple):
    pair_terms: list[SplitTerm]  # two-sided gluings: weight * left * right
    terms: list[tuple[Fraction, CorrelatorKey]]  # self-gluings: weight * key


def split_boundary(target: TargetModel, key: CorrelatorKey) -> BoundarySplit:
    """Composition law on a boundary pushforward cycle.

    A two-sided gluing distributes insertions per the mark split and sums
    diagonal classes over effective degree splittings; a self-gluing lowers
    the genus and appends the diagonal pair at the glued slots.
    """
    m = key.moduli
    diagonal = target.diagonal_pairs()
    if isinstance(m, Theta):
        pair_terms: list[SplitTerm] = []
        left_levels, left_base = _side_levels(m.left)
        right_levels, right_base = _side_levels(m.right)
        for A1, A2 in _degree_splits(target, key.A):
            for a, b, w in diagonal:
                left_ins = tuple(
                    (left_levels[t], key.insertions[i][1])
                    for t, i in enumerate(m.left_marks)
                ) + ((left_levels[-1], a),)
                right_ins = ((right_levels[0], b),) + tuple(
                    (right_levels[t + 1], key.insertions[j][1])
                    for t, j in enumerate(m.right_marks)
                )
                pair_terms.append(SplitTerm(
                    w,
                    CorrelatorKey(key.target, m.g1, A1, left_base, left_ins),
                    CorrelatorKey(key.target, m.g2, A2, right_base, right_ins),
                ))
        return BoundarySplit(pair_terms, [])
    if isinstance(m, Mu):
        terms: list[tuple[Fraction, CorrelatorKey]] = []
        inner_levels, inner_base = _side_levels(m.inner)
        for a, b, w in diagonal:
            ins = tuple(
                (inner_levels[t], key.insertions[t][1]) for t in range(key.k)
            ) + ((inner_levels[-2], a), (inner_levels[-1], b))
            terms.append((
                w,
                CorrelatorKey(key.target, key.g - 1, key.A, inner_base, ins),
            ))
        return BoundarySplit([], terms)
    raise RuleMismatch("cycle is not a boundary pushforward")


def _side_levels(expr) -> tuple[tuple[int, ...], object]:
    if isinstance(expr, Witten):
        return expr.levels, Fund(expr.g, expr.k)
    return tuple(0 for _ in range(expr.k)), expr


def _degree_splits(target: TargetModel, A) -> list[tuple]:
    """All splittings A = A1 + A2 into effective halves."""
    import itertools

    from .target import CurveClass

    splits = []
    for combo in itertools.product(*[range(d + 1) for d in A.degrees]):
        A1 = CurveClass(tuple(combo))
        A2 = CurveClass(tuple(d - c for d, c in zip(A.degrees, combo)))
        if target.is_effective(A1) and target.is_effective(A2):
            splits.append((A1, A2))
    return splits

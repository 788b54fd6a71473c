"""Truncated multivariate formal series and the generating-function checks.

Variables are indexed by (level, basis class); monomials also carry a
Novikov degree.  Every series tracks the largest total order through which
its coefficients are complete, so derivative and product bookkeeping stays
honest: identities are only asserted on the completely known part.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .moduli import Fund
from .solver import Engine
from .store import key_sort_string, canonicalize
from .target import TargetModel


class BoundError(ValueError):
    pass


class AssemblyError(RuntimeError):
    def __init__(self, key_string: str):
        super().__init__(f"unknown correlator inside bounds: {key_string}")
        self.key_string = key_string


Var = tuple[int, int]  # (level r, basis index a)
Monomial = tuple[tuple[Var, int], ...]  # sorted ((var, exponent), ...)


def _mono_order(mono: Monomial) -> int:
    return sum(e for _, e in mono)


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    acc: dict[Var, int] = dict(m1)
    for v, e in m2:
        acc[v] = acc.get(v, 0) + e
    return tuple(sorted(acc.items()))


@dataclass
class TruncatedSeries:
    t_order: int  # complete through this total order in the t variables
    q_order: int  # complete through this Novikov degree
    data: dict[tuple[Monomial, int], Fraction]

    @staticmethod
    def zero(t_order: int, q_order: int) -> "TruncatedSeries":
        return TruncatedSeries(t_order, q_order, {})

    def _set(self, mono: Monomial, q: int, value: Fraction) -> None:
        if value == 0:
            self.data.pop((mono, q), None)
        else:
            self.data[(mono, q)] = value

    def add_term(self, mono: Monomial, q: int, value: Fraction) -> None:
        if _mono_order(mono) > self.t_order or q > self.q_order:
            return
        self._set(mono, q, self.data.get((mono, q), Fraction(0)) + value)

    def coefficient(self, mono: Monomial, q: int) -> Fraction:
        return self.data.get((tuple(sorted(mono)), q), Fraction(0))

    def truncated(self, t_order: int, q_order: int) -> "TruncatedSeries":
        t_order = min(t_order, self.t_order)
        q_order = min(q_order, self.q_order)
        out = TruncatedSeries.zero(t_order, q_order)
        for (mono, q), val in self.data.items():
            out.add_term(mono, q, val)
        return out

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        out = self.truncated(min(self.t_order, other.t_order),
                             min(self.q_order, other.q_order))
        for (mono, q), val in other.data.items():
            out.add_term(mono, q, val)
        return out

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return self + other.scaled(Fraction(-1))

    def scaled(self, factor: Fraction) -> "TruncatedSeries":
        out = TruncatedSeries.zero(self.t_order, self.q_order)
        for (mono, q), val in self.data.items():
            out.add_term(mono, q, factor * val)
        return out

    def __mul__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        out = TruncatedSeries.zero(min(self.t_order, other.t_order),
                                   min(self.q_order, other.q_order))
        for (m1, q1), v1 in self.data.items():
            for (m2, q2), v2 in other.data.items():
                q = q1 + q2
                mono = _mono_mul(m1, m2)
                out.add_term(mono, q, v1 * v2)
        return out

    def times_var(self, var: Var) -> "TruncatedSeries":
        """Multiply by a single variable; completeness rises with the order."""
        out = TruncatedSeries.zero(min(self.t_order + 1, self.t_order + 1), self.q_order)
        out.t_order = self.t_order + 1
        for (mono, q), val in self.data.items():
            out.add_term(_mono_mul(mono, ((var, 1),)), q, val)
        return out

    def derivative(self, var: Var) -> "TruncatedSeries":
        out = TruncatedSeries.zero(self.t_order - 1, self.q_order)
        for (mono, q), val in self.data.items():
            exps = dict(mono)
            e = exps.get(var, 0)
            if not e:
                continue
            exps[var] = e - 1
            if exps[var] == 0:
                del exps[var]
            out.add_term(tuple(sorted(exps.items())), q, val * e)
        return out

    def is_zero(self) -> bool:
        return not self.data

    def support(self) -> list[tuple[Monomial, int]]:
        return sorted(self.data, key=lambda mq: (mq[1], _mono_order(mq[0]), mq[0]))

    def to_json(self, target: TargetModel) -> list[dict]:
        rows = []
        for mono, q in self.support():
            entry: dict = {}
            for (r, a), e in mono:
                entry[f"t[{r},{target.basis[a].label}]"] = e
            if q:
                entry["q"] = q
            value = self.data[(mono, q)]
            rows.append({"monomial": entry, "value": f"{value.numerator}/{value.denominator}"})
        return rows


def balanced_profiles(target: TargetModel, g: int, d: int, k: int) -> Iterable[tuple]:
    """Dimension-balanced insertion multisets of size k at Novikov degree d."""
    n = target.complex_dim
    need = 2 * target.c1(target.curve(d)) + 2 * (3 - n) * (g - 1) + 2 * k
    max_level = 3 * g - 3 + k  # cotangent-line cycles vanish beyond this
    alphabet = [
        (r, a)
        for r in range(max_level + 1)
        for a in range(len(target.basis))
    ]
    for profile in itertools.combinations_with_replacement(alphabet, k):
        if sum(r for r, _ in profile) > max_level:
            continue
        if sum(2 * r + target.cod(a) for r, a in profile) == need:
            yield profile


def assemble_potential(engine: Engine, g: int, t_order: int, q_order: int) -> TruncatedSeries:
    """Genus-g generating function from the store, exact through the bounds.

    Every dimension-balanced profile within bounds must evaluate; an unknown
    aborts assembly naming the offending key.
    """
    target = engine.target
    series = TruncatedSeries.zero(t_order, q_order)
    k_min = max(1, 3 - 2 * g)
    for d in range(q_order + 1):
        for k in range(k_min, t_order + 1):
            for profile in balanced_profiles(target, g, d, k):
                key = engine.key(g, target.curve(d), Fund(g, k),
                                 tuple(profile))
                value = engine.eval(key)
                if value is None:
                    raise AssemblyError(key_sort_string(target, canonicalize(key)))
                if value == 0:
                    continue
                counts: dict[Var, int] = {}
                for var in profile:
                    counts[var] = counts.get(var, 0) + 1
                denom = 1
                for e in counts.values():
                    for i in range(2, e + 1):
                        denom *= i
                mono = tuple(sorted(counts.items()))
                series.add_term(mono, d, value / denom)
    return series


def check_pde(
    target: TargetModel,
    F: TruncatedSeries,
    g: int,
    which: str,
    params: Optional[tuple] = None,
) -> TruncatedSeries:
    """Residual (left minus right) of a named identity, on the complete part."""
    fund = target.fundamental_index
    if which == "string":
        if F.t_order < 2:
            raise BoundError("string check needs order two")
        lhs = F.derivative((0, fund))
        rhs = TruncatedSeries.zero(F.t_order - 1, F.q_order)
        if g == 0:
            for a in range(len(target.basis)):
                for b in range(len(target.basis)):
                    if target.eta[a][b]:
                        mono = _mono_mul((((0, a), 1),), (((0, b), 1),))
                        rhs.add_term(mono, 0, Fraction(1, 2) * target.eta[a][b])
        for (r, a) in _vars_in(F):
            rhs = rhs + F.derivative((r, a)).times_var((r + 1, a)).truncated(
                F.t_order - 1, F.q_order)
        return (lhs - rhs).truncated(F.t_order - 1, F.q_order)
    if which == "dilaton":
        if F.t_order < 2:
            raise BoundError("dilaton check needs order two")
        lhs = F.derivative((1, fund))
        rhs = F.scaled(Fraction(2 * g - 2)).truncated(F.t_order - 1, F.q_order)
        for (r, a) in _vars_in(F):
            rhs = rhs + F.derivative((r, a)).times_var((r, a)).truncated(
                F.t_order - 1, F.q_order)
        if g == 1:
            rhs.add_term((), 0, Fraction(target.euler_char, 24))
        return (lhs - rhs).truncated(F.t_order - 1, F.q_order)
    if which == "euler":
        n = target.complex_dim
        residual = TruncatedSeries.zero(F.t_order, F.q_order)
        for (mono, q), val in F.data.items():
            weight = sum(
                e * (r - 1 + target.cod(a) // 2) for (r, a), e in mono
            ) - target.c1(target.curve(q)) - (3 - n) * (g - 1)
            residual.add_term(mono, q, val * weight)
        return residual
    if which == "trr0":
        if params is None or len(params) != 6:
            raise BoundError("trr0 needs (d1,a1,d2,a2,d3,a3)")
        d1, a1, d2, a2, d3, a3 = params
        if d1 < 1:
            raise BoundError("first slot must carry a level")
        if F.t_order < 3:
            raise BoundError("trr0 check needs order three")
        lhs = F.derivative((d1, a1)).derivative((d2, a2)).derivative((d3, a3))
        bound_t, bound_q = F.t_order - 3, F.q_order
        rhs = TruncatedSeries.zero(bound_t, bound_q)
        inv = target.eta_inverse()
        for a in range(len(target.basis)):
            for b in range(len(target.basis)):
                if inv[a][b] == 0:
                    continue
                two = F.derivative((d1 - 1, a1)).derivative((0, a))
                three = F.derivative((0, b)).derivative((d2, a2)).derivative((d3, a3))
                rhs = rhs + (two * three).scaled(inv[a][b]).truncated(bound_t, bound_q)
        return (lhs - rhs).truncated(bound_t, bound_q)
    raise BoundError(f"unknown identity {which!r}")


def _vars_in(F: TruncatedSeries) -> list[Var]:
    """Variables that can matter for the identity checks within bounds."""
    seen: set[Var] = set()
    for (mono, _q) in F.data:
        for var, _e in mono:
            seen.add(var)
    # include one level above anything present (string shifts levels by one)
    extra = {(r + 1, a) for (r, a) in seen} | {(r - 1, a) for (r, a) in seen if r}
    return sorted(seen | extra)


@dataclass(frozen=True)
class UFunction:
    series: TruncatedSeries
    degree: int


def compute_U(
    target: TargetModel, F: TruncatedSeries, sigma: int, level: int
) -> UFunction:
    """Mixed derivative tower in the string direction, graded by the level."""
    if F.t_order < level + 2:
        raise BoundError("insufficient order for the requested derivative tower")
    fund = target.fundamental_index
    out = F
    for _ in range(level + 1):
        out = out.derivative((0, fund))
    out = out.derivative((0, sigma))
    return UFunction(out, level)

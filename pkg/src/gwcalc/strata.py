"""Combinatorial degeneration types and the dimension audit.

A type records principal components (the components of the underlying
stable curve), rational bubble components, and the intersection pattern.
Only reduced types are enumerated: every bubble carries a nonzero class
(ghost bubbles are collapsed away), and meeting points may join more than
two branches.  Marked points live on components or at meeting points (the
latter happens when a ghost carrying a mark collapses).

The audit evaluates the combinatorial dimension defect lambda, the Euler
relation of the contracted type, the defect inequality against the
contracted type, and the codimension-two criterion for boundary strata.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .target import TargetModel


class StrataError(ValueError):
    pass


Slot = tuple[str, int]  # ("P", i) or ("B", j)


@dataclass(frozen=True)
class DegenerationType:
    """One combinatorial degeneration stratum.

    points: each meeting point is a sorted tuple of incident slots; a
    principal may appear twice at a point (a self-node, counted twice),
    bubbles at most once.
    mark_location: per labeled mark 0..k-1, a slot or ("Z", point index).
    same_image: optional identification data, kept only for the reduction
    operation; enumeration produces types with none.
    """

    principal_genera: tuple[int, ...]
    principal_classes: tuple[int, ...]
    bubble_classes: tuple[int, ...]
    points: tuple[tuple[Slot, ...], ...]
    mark_location: tuple[tuple[str, int], ...]
    same_image: tuple = ()

    # -- derived counts -----------------------------------------------------

    @property
    def o(self) -> int:
        return len(self.principal_genera)

    @property
    def p(self) -> int:
        return len(self.bubble_classes)

    @property
    def t(self) -> int:
        return len(self.points)

    @property
    def h(self) -> int:
        return sum(len(z) for z in self.points)

    def slots_of(self, kind: str, index: int) -> int:
        return sum(1 for z in self.points for s in z if s == (kind, index))

    def interior_marks(self, kind: str, index: int) -> int:
        return sum(1 for loc in self.mark_location if loc == (kind, index))

    def total_class(self) -> int:
        return sum(self.principal_classes) + sum(self.bubble_classes)

    # -- structural validation ------------------------------------------------

    def validate(self, genus: int) -> None:
        for z in self.points:
            if len(z) < 2:
                raise StrataError("a meeting point needs at least two branches")
            bubbles = [s for s in z if s[0] == "B"]
            if len(set(bubbles)) != len(bubbles):
                raise StrataError("bubbles do not self-intersect")
        for j in range(self.p):
            if self.bubble_classes[j] < 1:
                raise StrataError("bubble classes are positive (no ghosts)")
            if self.slots_of("B", j) < 1:
                raise StrataError("disconnected bubble")
            if self.interior_marks("B", j) > 1:
                raise StrataError("a bubble carries at most one mark")
        for s, count in _point_mark_counts(self).items():
            if count > 1:
                raise StrataError("at most one mark per meeting point")
        self._validate_clusters()
        for i, gi in enumerate(self.principal_genera):
            special = self.slots_of("P", i) + self.interior_marks("P", i)
            if gi == 0 and special < 3:
                raise StrataError("unstable rational principal component")
            if gi == 1 and special < 1:
                raise StrataError("unstable torus component")
        if not _connected(self):
            raise StrataError("disconnected type")
        if _graph_genus(self) != genus:
            raise StrataError("genus bookkeeping fails")

    def _validate_clusters(self) -> None:
        """Bubble trees sit at former marks, bubble chains replace nodes.

        Contracting a bubble cluster must recover a point of the underlying
        stable curve: one principal branch means the cluster is a tree hung
        at a marked point (so it carries exactly that one mark); two
        principal branches mean a chain inserted at a node (no marks).
        Pure principal meeting points are honest nodes: two branches, no
        marks (marks of a stable curve avoid its nodes).
        """
        clusters = _bubble_clusters(self)
        clustered_points = {s for _, members in clusters for s in members}
        for s, z in enumerate(self.points):
            if s in clustered_points:
                continue
            if len(z) != 2:
                raise StrataError("a node of the stable curve has two branches")
            if _point_mark_counts(self).get(s, 0):
                raise StrataError("marks avoid the nodes of the stable curve")
        for bubbles, members in clusters:
            principal_slots = sum(
                1 for s in members for slot in self.points[s] if slot[0] == "P"
            )
            marks = sum(self.interior_marks("B", j) for j in bubbles)
            marks += sum(_point_mark_counts(self).get(s, 0) for s in members)
            if principal_slots == 1:
                if marks != 1:
                    raise StrataError("a bubble tree carries exactly its mark")
            elif principal_slots == 2:
                if marks != 0:
                    raise StrataError("bubble chains at nodes carry no marks")
            else:
                raise StrataError("bubble cluster contracts to a bad point")


def _point_mark_counts(D: DegenerationType) -> dict[int, int]:
    out: dict[int, int] = {}
    for loc in D.mark_location:
        if loc[0] == "Z":
            out[loc[1]] = out.get(loc[1], 0) + 1
    return out


def _bubble_clusters(D: DegenerationType) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Connected groups of meeting points linked through bubbles.

    Returns (bubble indices, point indices) per cluster; points without any
    bubble branch belong to no cluster.
    """
    parent: dict = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for j in range(D.p):
        parent[("B", j)] = ("B", j)
    for s, z in enumerate(D.points):
        if any(slot[0] == "B" for slot in z):
            parent[("Z", s)] = ("Z", s)
    for s, z in enumerate(D.points):
        for slot in z:
            if slot[0] == "B":
                union(("Z", s), slot)
    groups: dict = {}
    for node in parent:
        groups.setdefault(find(node), []).append(node)
    out = []
    for members in groups.values():
        bubbles = tuple(sorted(i for kind, i in members if kind == "B"))
        points = tuple(sorted(i for kind, i in members if kind == "Z"))
        out.append((bubbles, points))
    return sorted(out)


def _connected(D: DegenerationType) -> bool:
    nodes = [("P", i) for i in range(D.o)] + [("B", j) for j in range(D.p)]
    if not nodes:
        return False
    adj: dict = {n: set() for n in nodes}
    for z in D.points:
        comps = set(z)
        for a in comps:
            for b in comps:
                if a != b:
                    adj[a].add(b)
        # a self-node keeps its component connected trivially
    seen = {nodes[0]}
    frontier = [nodes[0]]
    while frontier:
        cur = frontier.pop()
        for nxt in adj[cur]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return len(seen) == len(nodes)


def _graph_genus(D: DegenerationType) -> int:
    """Arithmetic genus: component genera plus first Betti number."""
    V = D.o + D.p + D.t
    E = D.h
    return sum(D.principal_genera) + (E - V + 1)


def lambda_defect(n: int, p: int, h: int, t: int) -> int:
    return (2 * n - 6) * p + 2 * h - 2 * n * (h - t)


def contracted_stats(D: DegenerationType) -> tuple[int, int]:
    """(t, h) of the contracted type, in normal-crossing equivalents.

    Bubbles collapse: meeting points connected through bubbles merge, and a
    merged point with m principal branches counts as m - 1 nodes.
    """
    parent = list(range(D.t))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for j in range(D.p):
        incident = [s for s, z in enumerate(D.points) if ("B", j) in z]
        for a, b in zip(incident, incident[1:]):
            union(a, b)
    clusters: dict[int, list[int]] = {}
    for s in range(D.t):
        clusters.setdefault(find(s), []).append(s)
    t_sigma = 0
    for members in clusters.values():
        branches = sum(
            1 for s in members for slot in D.points[s] if slot[0] == "P"
        )
        t_sigma += max(branches - 1, 0)
    return t_sigma, 2 * t_sigma


def is_admissible(D: DegenerationType, degree: int) -> tuple[bool, Optional[tuple[int, ...]]]:
    """Positive bubble multiplicities matching the total class, with witness."""
    remaining = degree - sum(D.principal_classes)
    if D.p == 0:
        return (remaining == 0, () if remaining == 0 else None)
    base = sum(D.bubble_classes)
    excess = remaining - base
    if excess < 0:
        return False, None
    # distribute the excess over bubble classes (bounded brute force)
    for extra in itertools.product(*[range(excess // c + 1) for c in D.bubble_classes]):
        if sum(e * c for e, c in zip(extra, D.bubble_classes)) == excess:
            witness = tuple(1 + e for e in extra)
            return True, witness
    return False, None


def canonical_form(D: DegenerationType) -> tuple:
    """Canonical representation up to relabeling components and points.

    Marks are labeled; only components with identical (genus, class, marks)
    profiles may be permuted, so the search space stays tiny.
    """
    def encode(p_perm: tuple[int, ...], b_perm: tuple[int, ...]) -> tuple:
        pmap = {old: new for new, old in enumerate(p_perm)}
        bmap = {old: new for new, old in enumerate(b_perm)}

        def m(slot: Slot) -> Slot:
            return (slot[0], pmap[slot[1]] if slot[0] == "P" else bmap[slot[1]])

        points = tuple(sorted(tuple(sorted(m(s) for s in z)) for z in D.points))
        zindex = {z: i for i, z in enumerate(points)}
        # mark locations: point references must follow the new point order;
        # ambiguous only if two identical points exist, resolved by sorting
        old_points = [tuple(sorted(m(s) for s in z)) for z in D.points]
        marks = []
        used: dict[tuple, int] = {}
        for loc in D.mark_location:
            if loc[0] == "Z":
                z = old_points[loc[1]]
                start = used.get(z, points.index(z))
                marks.append(("Z", start))
                used[z] = start + 1
            else:
                marks.append(m(loc))
        genera = tuple(D.principal_genera[i] for i in p_perm)
        pcls = tuple(D.principal_classes[i] for i in p_perm)
        bcls = tuple(D.bubble_classes[j] for j in b_perm)
        return (genera, pcls, bcls, points, tuple(marks))

    best = None
    for p_perm in _profile_permutations(
        [(D.principal_genera[i], D.principal_classes[i],
          tuple(sorted(m for m, loc in enumerate(D.mark_location) if loc == ("P", i))))
         for i in range(D.o)]
    ):
        for b_perm in _profile_permutations(
            [(D.bubble_classes[j],
              tuple(sorted(m for m, loc in enumerate(D.mark_location) if loc == ("B", j))))
             for j in range(D.p)]
        ):
            candidate = encode(p_perm, b_perm)
            if best is None or candidate < best:
                best = candidate
    return best


def _profile_permutations(profiles: list) -> Iterable[tuple[int, ...]]:
    """Permutations respecting equality classes of the profiles."""
    groups: dict = {}
    for idx, prof in enumerate(profiles):
        groups.setdefault(prof, []).append(idx)
    keys = sorted(groups, key=lambda x: (str(x)))
    pools = [itertools.permutations(groups[key]) for key in keys]
    for combo in itertools.product(*pools):
        perm: list[int] = []
        for block in combo:
            perm.extend(block)
        yield tuple(perm)


@dataclass(frozen=True)
class EnumerationBounds:
    max_principals: int = 4
    max_bubbles: int = 4
    max_points: int = 5
    max_branches: int = 4
    max_types: int = 200_000


def enumerate_types(
    target: TargetModel,
    degree: int,
    genus: int,
    k: int,
    bounds: EnumerationBounds = EnumerationBounds(),
) -> list[DegenerationType]:
    """All reduced boundary degeneration types, duplicate-free.

    Effectivity: principal classes are nonnegative, bubble classes positive;
    admissibility ties the classes to the total degree through positive
    bubble multiplicities.  Boundary means at least one meeting point or
    bubble.
    """
    if genus not in (0, 1):
        raise StrataError("enumeration implemented for genus 0 and 1")
    out: dict[tuple, DegenerationType] = {}
    for o in range(1, bounds.max_principals + 1):
        for genera in _genus_vectors(genus, o):
            for p in range(0, bounds.max_bubbles + 1):
                if o == 1 and p == 0:
                    pass  # may still have self-nodes
                for pcls in itertools.product(range(degree + 1), repeat=o):
                    for bcls in itertools.product(range(1, degree + 1), repeat=p):
                        if sum(pcls) + sum(bcls) > degree:
                            continue
                        for D in _patterns(genera, pcls, bcls, genus, k, bounds):
                            if len(out) > bounds.max_types:
                                raise StrataError("type budget exceeded; raise the bounds")
                            admissible, _ = is_admissible(D, degree)
                            if not admissible:
                                continue
                            out.setdefault(canonical_form(D), D)
    return [out[c] for c in sorted(out)]


def _genus_vectors(genus: int, o: int) -> list[tuple[int, ...]]:
    if genus == 0:
        return [tuple(0 for _ in range(o))]
    vectors = [tuple(0 for _ in range(o))]  # genus carried by a graph cycle
    for i in range(o):
        vectors.append(tuple(1 if j == i else 0 for j in range(o)))
    return sorted(set(vectors))


def _patterns(genera, pcls, bcls, genus, k, bounds) -> Iterable[DegenerationType]:
    o, p = len(genera), len(bcls)
    comps: list[Slot] = [("P", i) for i in range(o)] + [("B", j) for j in range(p)]
    cycle = genus - sum(genera)  # first Betti number of the incidence graph
    if cycle < 0:
        return
    # A bubble must meet something, so boundary types have a meeting point
    # unless there are no bubbles at all; t = 0 with one principal and no
    # bubbles is the interior stratum, which is excluded.
    for t in range(1, bounds.max_points + 1):
        # connectivity fixes the slot total: E - (o + p + t) + 1 = cycle
        E = cycle + o + p + t - 1
        if E < 2 * t or E > t * bounds.max_branches:
            continue
        for point_shape in _point_sets(comps, t, E, bounds.max_branches):
            base = DegenerationType(
                principal_genera=tuple(genera),
                principal_classes=tuple(pcls),
                bubble_classes=tuple(bcls),
                points=point_shape,
                mark_location=tuple(),
            )
            if not _connected(base):
                continue
            for marks in _mark_assignments(base, k):
                D = replace(base, mark_location=marks)
                try:
                    D.validate(genus)
                except StrataError:
                    continue
                yield D


def _point_sets(comps: list[Slot], t: int, total_slots: int, max_branches: int) -> Iterable[tuple]:
    """Non-decreasing t-tuples of meeting points with the prescribed slot total."""
    options: list[tuple[Slot, ...]] = []
    for size in range(2, max_branches + 1):
        for combo in itertools.combinations_with_replacement(sorted(comps), size):
            bubbles = [s for s in combo if s[0] == "B"]
            if len(set(bubbles)) != len(bubbles):
                continue
            options.append(tuple(combo))
    options.sort()

    def rec(remaining_points: int, remaining_slots: int, start: int):
        if remaining_points == 0:
            if remaining_slots == 0:
                yield ()
            return
        for idx in range(start, len(options)):
            z = options[idx]
            size = len(z)
            rest_slots = remaining_slots - size
            if rest_slots < 2 * (remaining_points - 1):
                continue
            if rest_slots > (remaining_points - 1) * max_branches:
                continue
            for rest in rec(remaining_points - 1, rest_slots, idx):
                yield (z,) + rest

    yield from rec(t, total_slots, 0)


def _mark_assignments(D: DegenerationType, k: int) -> Iterable[tuple]:
    locations: list[tuple[str, int]] = (
        [("P", i) for i in range(D.o)]
        + [("B", j) for j in range(D.p)]
        + [("Z", s) for s in range(D.t)]
    )
    for assignment in itertools.product(locations, repeat=k):
        ok = True
        for j in range(D.p):
            if sum(1 for loc in assignment if loc == ("B", j)) > 1:
                ok = False
        for s in range(D.t):
            if sum(1 for loc in assignment if loc == ("Z", s)) > 1:
                ok = False
        if ok:
            yield tuple(assignment)


def reduce_same_image(D: DegenerationType) -> DegenerationType:
    """Apply the stored identification data: merge bubbles and their points.

    Identification groups are (kind, members) pairs with kind "B" (bubble
    groups, identical classes) or "Z" (meeting-point groups).  Each merged
    point keeps one slot for the merged bubble.
    """
    if not D.same_image:
        return D
    bubble_map = {j: j for j in range(D.p)}
    point_groups: list[tuple[int, ...]] = []
    for kind, members in D.same_image:
        if kind == "B":
            rep = min(members)
            for m in members:
                bubble_map[m] = rep
        elif kind == "Z":
            point_groups.append(tuple(sorted(members)))
        else:
            raise StrataError("identification groups are bubbles or points")
    merged_points: list[tuple[Slot, ...]] = []
    consumed: set[int] = set()
    for group in point_groups:
        slots: list[Slot] = []
        seen_bubbles: set[int] = set()
        for s in group:
            consumed.add(s)
            for slot in D.points[s]:
                if slot[0] == "B":
                    rep = bubble_map[slot[1]]
                    if rep in seen_bubbles:
                        continue
                    seen_bubbles.add(rep)
                    slots.append(("B", rep))
                else:
                    slots.append(slot)
        merged_points.append(tuple(sorted(slots)))
    for s in range(D.t):
        if s not in consumed:
            merged_points.append(tuple(sorted(
                (sl[0], bubble_map[sl[1]]) if sl[0] == "B" else sl
                for sl in D.points[s]
            )))
    kept = sorted(set(bubble_map.values()))
    index = {old: new for new, old in enumerate(kept)}
    points = tuple(sorted(
        tuple(sorted((sl[0], index[sl[1]]) if sl[0] == "B" else sl for sl in z))
        for z in merged_points
    ))
    return DegenerationType(
        principal_genera=D.principal_genera,
        principal_classes=D.principal_classes,
        bubble_classes=tuple(D.bubble_classes[j] for j in kept),
        points=points,
        mark_location=D.mark_location,  # point references may dangle; audit-only
        same_image=(),
    )


def audit_dimensions(
    target: TargetModel,
    degree: int,
    genus: int,
    k: int,
    types: list[DegenerationType],
) -> dict:
    """Per-type dimension report and the codimension-two summary."""
    n = target.complex_dim
    A = target.curve(degree)
    main_dim = 2 * target.c1(A) + 2 * (3 - n) * (genus - 1) + 2 * k
    rows = []
    all_ok = True
    for D in types:
        lam = lambda_defect(n, D.p, D.h, D.t)
        t_sigma, h_sigma = contracted_stats(D)
        lam_sigma = lambda_defect(n, 0, h_sigma, t_sigma)
        euler_ok = (D.o - t_sigma - sum(D.principal_genera)) == 1 - genus
        ineq_ok = lam <= lam_sigma - 2 * D.p
        dim_sigma = 2 * k + sum(6 * gi - 6 for gi in D.principal_genera) + 2 * h_sigma
        bound = 2 * target.c1(A) + 2 * n * (1 - genus) + dim_sigma - 2 * D.p
        flag = bound <= main_dim - 2
        marks_ok = _marks_on_components(D) <= 2 * k
        ok = euler_ok and ineq_ok and flag and marks_ok
        all_ok = all_ok and ok
        rows.append({
            "graph": _graph_string(D),
            "lambda": lam,
            "lambda_contracted": lam_sigma,
            "euler_ok": euler_ok,
            "ineq_ok": ineq_ok,
            "bound": bound,
            "flag": flag,
            "marks_ok": marks_ok,
        })
    return {
        "target": target.name,
        "degree": degree,
        "genus": genus,
        "marks": k,
        "main_dimension": main_dim,
        "types": rows,
        "count": len(rows),
        "all_ok": all_ok,
    }


def _marks_on_components(D: DegenerationType) -> int:
    return sum(1 for loc in D.mark_location if loc[0] != "Z")


def _graph_string(D: DegenerationType) -> str:
    parts = []
    for i in range(D.o):
        parts.append(f"P{i}(g={D.principal_genera[i]},d={D.principal_classes[i]})")
    for j in range(D.p):
        parts.append(f"B{j}(d={D.bubble_classes[j]})")
    zs = ";".join(
        ",".join(f"{kind}{idx}" for kind, idx in z) for z in D.points
    )
    marks = ",".join(f"x{m}@{loc[0]}{loc[1]}" for m, loc in enumerate(D.mark_location))
    return " ".join(parts) + (f" [{zs}]" if zs else "") + (f" {{{marks}}}" if marks else "")

"""Permutation groups with cached closure, orbits, stabilizers and a
conjugacy-class subgroup enumerator for small symmetric groups.

The subgroup enumerator works breadth-first from the trivial group, adding
one generator at a time and closing; every subgroup is a chain of such
one-generator extensions, so the sweep is exhaustive.  Class deduplication
goes through cheap invariants first and an explicit conjugation search only
on collisions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial

from .perm import Perm, all_perms, bits_of, render_subset

CLOSURE_CAP = 10 ** 6
FULL_CLOSURE_DEGREE_CAP = 12
SUBGROUP_ENUM_DEGREE_CAP = 8


class BoundExceededError(RuntimeError):
    """A configured search or closure bound was exceeded."""


class DegreeMismatchError(ValueError):
    pass


def close_generators(generators, degree, cap=CLOSURE_CAP):
    """The group generated by `generators` as a frozenset of Perm."""
    identity = Perm.identity(degree)
    elements = {identity}
    frontier = []
    for g in generators:
        if g not in elements:
            elements.add(g)
            frontier.append(g)
    gens = list(dict.fromkeys(generators))
    while frontier:
        new_frontier = []
        for g in gens:
            for h in frontier:
                p = g * h
                if p not in elements:
                    elements.add(p)
                    new_frontier.append(p)
                    if len(elements) > cap:
                        raise BoundExceededError(
                            f"group closure exceeded cap {cap}")
        frontier = new_frontier
    return frozenset(elements)


@lru_cache(maxsize=None)
def symmetric_elements(degree):
    return frozenset(all_perms(degree))


@lru_cache(maxsize=None)
def alternating_elements(degree):
    return frozenset(p for p in all_perms(degree) if _is_even(p))


def _is_even(p):
    return sum(len(c) - 1 for c in p.cycles()) % 2 == 0


def close_with_sym_shortcut(generators, degree):
    """Closure that bails out to the precomputed Alt/Sym element set as soon
    as the partial closure forces index < degree (only Alt and Sym remain
    possible, for degree >= 5)."""
    if degree < 5:
        return close_generators(generators, degree)
    threshold = factorial(degree - 1)
    identity = Perm.identity(degree)
    elements = {identity}
    frontier = [g for g in generators if g not in elements]
    for g in frontier:
        elements.add(g)
    gens = list(dict.fromkeys(generators))
    while frontier:
        new_frontier = []
        for g in gens:
            for h in frontier:
                p = g * h
                if p not in elements:
                    elements.add(p)
                    new_frontier.append(p)
                    if len(elements) > threshold:
                        if any(not _is_even(x) for x in gens):
                            return symmetric_elements(degree)
                        return alternating_elements(degree)
        frontier = new_frontier
    return frozenset(elements)


@dataclass(frozen=True)
class PermGroup:
    degree: int
    generators: tuple
    elements: frozenset
    order: int = field(default=0)

    def __post_init__(self):
        if self.order == 0:
            object.__setattr__(self, "order", len(self.elements))

    @classmethod
    def from_elements(cls, elements, degree, generators=None):
        elements = frozenset(elements)
        if generators is None:
            generators = tuple(sorted(e for e in elements if not e.is_identity()))
        return cls(degree, tuple(generators), elements)

    @classmethod
    def trivial(cls, degree):
        return cls(degree, (), frozenset({Perm.identity(degree)}))

    def __contains__(self, perm):
        return perm in self.elements

    def is_subgroup_of(self, other):
        return self.elements <= other.elements

    def fixed_points(self):
        """Points fixed by every element (equivalently by every generator)."""
        fixed = set(range(self.degree))
        for g in self.generators:
            fixed &= {i for i in fixed if g(i) == i}
        return sorted(fixed)

    def is_fixed_point_free(self):
        return not self.fixed_points()

    def cycle_type_multiset(self):
        return tuple(sorted(e.cycle_type() for e in self.elements))

    def orbit_partition(self):
        """Orbits on the full domain, as sorted tuples of sorted tuples."""
        parent = list(range(self.degree))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for g in self.generators:
            for i in range(self.degree):
                a, b = find(i), find(g(i))
                if a != b:
                    parent[a] = b
        buckets = {}
        for i in range(self.degree):
            buckets.setdefault(find(i), []).append(i)
        return tuple(sorted(tuple(b) for b in buckets.values()))

    def describe(self):
        gens = " ".join(g.to_cycle_string() for g in self.generators) or "()"
        return f"<order {self.order}, gens {gens}>"


def group_closure(generators, degree=None, cap=CLOSURE_CAP):
    """Generate the group with cached closure; generators must share a degree.

    Full closure is guarded to degree <= 12.
    """
    generators = list(generators)
    if degree is None:
        if not generators:
            raise DegreeMismatchError("empty generator list needs an explicit degree")
        degree = generators[0].degree
    for g in generators:
        if g.degree != degree:
            raise DegreeMismatchError(
                f"generator degree {g.degree} != {degree}")
    if degree > FULL_CLOSURE_DEGREE_CAP:
        raise BoundExceededError(
            f"full closure guarded to degree {FULL_CLOSURE_DEGREE_CAP}, got {degree}")
    elements = close_generators(generators, degree, cap=cap)
    return PermGroup(degree, tuple(generators), elements)


def orbit_of_subset(group, mask):
    """The set {pi(L) : pi in group} computed over the generators."""
    _check_mask(group, mask)
    seen = {mask}
    frontier = [mask]
    while frontier:
        nxt = []
        for m in frontier:
            for g in group.generators:
                im = g.apply_mask(m)
                if im not in seen:
                    seen.add(im)
                    nxt.append(im)
        frontier = nxt
    return seen


def setwise_stabilizer(group, mask):
    """The subgroup {pi in group : pi(L) = L}."""
    _check_mask(group, mask)
    elements = frozenset(g for g in group.elements if g.apply_mask(mask) == mask)
    return PermGroup.from_elements(elements, group.degree)


def orbits_on_points(group, mask):
    """Orbit partition of the points of L under a group that maps L to L.

    Blocks come back as masks, sorted by their lexicographic rendering.
    """
    _check_mask(group, mask)
    for g in group.generators:
        if g.apply_mask(mask) != mask:
            raise DomainActionError(
                f"generator {g.to_cycle_string()} moves {render_subset(mask)} off itself")
    points = bits_of(mask)
    parent = {p: p for p in points}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in group.generators:
        for p in points:
            a, b = find(p), find(g(p))
            if a != b:
                parent[a] = b
    buckets = {}
    for p in points:
        buckets.setdefault(find(p), 0)
        buckets[find(p)] |= 1 << p
    return sorted(buckets.values())


class DomainActionError(ValueError):
    pass


def _check_mask(group, mask):
    if mask >> group.degree:
        raise DegreeMismatchError(
            f"subset {render_subset(mask)} outside degree {group.degree}")


# ---------------------------------------------------------------------------
# subgroup enumeration up to conjugacy

def _conjugate(sigma, g):
    return (sigma * g) * sigma.inverse()


def _conjugacy_equal(g1, g2, degree):
    if g1.order != g2.order:
        return False
    gens = g1.generators if g1.generators else (Perm.identity(degree),)
    for sigma in all_perms(degree):
        if all(_conjugate(sigma, g) in g2.elements for g in gens):
            return True
    return False


class _ClassRegistry:
    """Conjugacy classes of subgroups, deduplicated by cheap invariants
    plus an explicit conjugation search on collisions."""

    def __init__(self, degree):
        self.degree = degree
        self.classes = []
        self._by_invariant = {}
        self._exact = {}

    def add(self, group):
        """Returns (class_index, is_new)."""
        key = group.elements
        if key in self._exact:
            return self._exact[key], False
        inv = (group.order, group.cycle_type_multiset())
        for idx in self._by_invariant.get(inv, ()):
            if _conjugacy_equal(group, self.classes[idx], self.degree):
                self._exact[key] = idx
                return idx, False
        idx = len(self.classes)
        self.classes.append(group)
        self._by_invariant.setdefault(inv, []).append(idx)
        self._exact[key] = idx
        return idx, True


def _double_coset_reps(group, degree):
    """One representative per H\\S_n/H double coset (extension candidates)."""
    perms = all_perms(degree)
    seen = set()
    reps = []
    helems = list(group.elements)
    for g in perms:
        if g in seen or g in group.elements:
            continue
        reps.append(g)
        for h1 in helems:
            left = h1 * g
            for h2 in helems:
                seen.add(left * h2)
    return reps


def iter_subgroup_classes(degree, stop_at_fixed_point_free=False):
    """Breadth-first stream of subgroup conjugacy class representatives.

    With `stop_at_fixed_point_free`, groups without a global fixed point are
    yielded but not extended further; this still reaches every minimal
    fixed-point-free class, since any fixed-point-free group that strictly
    contains another one is not minimal.
    """
    if degree > SUBGROUP_ENUM_DEGREE_CAP:
        raise BoundExceededError(
            f"subgroup enumeration guarded to degree {SUBGROUP_ENUM_DEGREE_CAP}")
    registry = _ClassRegistry(degree)
    trivial = PermGroup.trivial(degree)
    registry.add(trivial)
    yield trivial
    frontier = [trivial]
    while frontier:
        next_frontier = []
        for group in frontier:
            if stop_at_fixed_point_free and group.is_fixed_point_free():
                continue
            for g in _double_coset_reps(group, degree):
                gens = tuple(group.generators) + (g,)
                elements = close_with_sym_shortcut(gens, degree)
                new = PermGroup(degree, gens, elements)
                _, is_new = registry.add(new)
                if is_new:
                    yield new
                    next_frontier.append(new)
        frontier = next_frontier


def _proper_subgroup_has_no_fixed_point(group):
    """True iff some proper subgroup of `group` is fixed-point-free."""
    degree = group.degree
    registry = _ClassRegistry(degree)
    # BFS inside `group` only; conjugacy collapsing is only an optimization
    # here, and classes fused under S_n still witness the same fixed-point
    # pattern up to relabeling of the whole domain -- but fixed-point-freeness
    # is not conjugation-sensitive, so exact dedup is enough.
    seen = {frozenset({Perm.identity(degree)})}
    trivial = PermGroup.trivial(degree)
    frontier = [trivial]
    while frontier:
        nxt = []
        for sub in frontier:
            for g in group.elements:
                if g in sub.elements:
                    continue
                elements = close_generators(tuple(sub.generators) + (g,), degree)
                if elements == group.elements:
                    continue
                if elements in seen:
                    continue
                seen.add(elements)
                new = PermGroup.from_elements(elements, degree)
                if new.is_fixed_point_free():
                    return True
                nxt.append(new)
        frontier = nxt
    return False


def enumerate_subgroups(degree, mode="all"):
    """Conjugacy class representatives of subgroups of S_degree.

    mode: "all" | "fixed_point_free" | "minimal_fixed_point_free"
    """
    if mode not in ("all", "fixed_point_free", "minimal_fixed_point_free"):
        raise ValueError(f"unknown mode {mode!r}")
    out = []
    for group in iter_subgroup_classes(degree):
        if mode == "all":
            out.append(group)
        elif group.is_fixed_point_free():
            if mode == "fixed_point_free":
                out.append(group)
            elif not _proper_subgroup_has_no_fixed_point(group):
                out.append(group)
    return out


def fixed_point_free_cyclic_classes(degree):
    """One cyclic group per partition of `degree` with no part 1
    (the fixed-point-free cycle types), in lexicographic partition order."""
    out = []
    for part in _partitions_no_ones(degree):
        images = []
        start = 0
        cycles = []
        for size in part:
            cycles.append(tuple(range(start, start + size)))
            start += size
        gen = Perm.from_cycles([list(c) for c in cycles], degree)
        out.append(group_closure([gen], degree))
    return out


def cyclic_classes(degree, include_fixed_points=True):
    """One cyclic group per nontrivial cycle type of degree `degree`."""
    out = []
    for part in _partitions(degree):
        if all(p == 1 for p in part):
            continue
        if not include_fixed_points and 1 in part:
            continue
        start = 0
        cycles = []
        for size in part:
            if size > 1:
                cycles.append(list(range(start, start + size)))
            start += size
        gen = Perm.from_cycles(cycles, degree)
        out.append(group_closure([gen], degree))
    return out


def _partitions(n, maxpart=None):
    if maxpart is None:
        maxpart = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, maxpart), 0, -1):
        for rest in _partitions(n - first, first):
            yield (first,) + rest


def _partitions_no_ones(n):
    for part in _partitions(n):
        if 1 not in part:
            yield part

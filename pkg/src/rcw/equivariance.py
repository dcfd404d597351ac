"""Equivariant selection structures: existence criterion, constructor,
equivariant single choice and arity composition.

The criterion reduces per subset-orbit to a subset-sum over the point-orbit
sizes of the setwise stabilizer; a group-equivariant selection exists iff
every orbit representative admits a stabilizer-invariant subset of the
target arity.  Propagation along a transversal is well defined because the
chosen representative value is stabilizer-invariant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .perm import bits_of, popcount, render_subset
from .groups import (BoundExceededError, PermGroup, orbits_on_points,
                     setwise_stabilizer)
from .selection import SelectionStructure

EQUIVARIANCE_DEGREE_CAP = 24


class EquivariantSelError(ValueError):
    """Raised when a construction is requested although existence fails."""

    def __init__(self, failing_mask):
        self.failing_mask = failing_mask
        super().__init__(
            f"no invariant subset for orbit representative {render_subset(failing_mask)}")


@dataclass(frozen=True)
class OrbitCertificate:
    """Per-orbit outcome of the existence criterion."""
    arity: int
    orbit_reps: tuple = ()  # (rep_mask, orbit_sizes tuple, chosen_blocks tuple or None)
    failing: int | None = None

    @property
    def ok(self):
        return self.failing is None

    def to_jsonable(self):
        return {
            "arity": self.arity,
            "orbit_reps": [
                {
                    "subset": bits_of(rep),
                    "stabilizer_orbit_sizes": list(sizes),
                    "chosen_blocks": list(chosen) if chosen is not None else None,
                }
                for rep, sizes, chosen in self.orbit_reps
            ],
            "failing": bits_of(self.failing) if self.failing is not None else None,
        }


def invariant_ksubset_exists(group: PermGroup, mask: int, k: int):
    """(exists, witness): is some union of point-orbit blocks of size exactly
    k available inside L?  Witness is the lexicographically least such union.
    """
    size = popcount(mask)
    if not 0 < k < size:
        raise ValueError(f"need 0 < k < |L|, got k={k}, |L|={size}")
    blocks = orbits_on_points(group, mask)
    best = None
    for r in range(1, len(blocks) + 1):
        for combo in itertools.combinations(blocks, r):
            total = sum(popcount(b) for b in combo)
            if total == k:
                union = 0
                for b in combo:
                    union |= b
                if best is None or union < best:
                    best = union
    return (best is not None), best


def subset_orbit_reps(group: PermGroup, min_size=0, max_size=None):
    """Lexicographically least representative per group-orbit of subsets."""
    degree = group.degree
    if degree > EQUIVARIANCE_DEGREE_CAP:
        raise BoundExceededError(
            f"subset-orbit sweep guarded to degree {EQUIVARIANCE_DEGREE_CAP}")
    if max_size is None:
        max_size = degree
    seen = set()
    reps = []
    for mask in range(1 << degree):
        if mask in seen:
            continue
        size = popcount(mask)
        orbit = {mask}
        frontier = [mask]
        while frontier:
            nxt = []
            for m in frontier:
                for g in group.generators:
                    im = g.apply_mask(m)
                    if im not in orbit:
                        orbit.add(im)
                        nxt.append(im)
            frontier = nxt
        seen |= orbit
        if min_size <= size <= max_size:
            reps.append((mask, orbit))
    return reps


def equivariant_sel_exists(group: PermGroup, arity: int):
    """(exists, certificate) for a group-equivariant selection structure of
    the given arity on the group's domain.  Degrees not exceeding the arity
    are vacuously positive (empty table)."""
    entries = []
    if group.degree <= arity:
        return True, OrbitCertificate(arity=arity)
    for rep, _orbit in subset_orbit_reps(group, min_size=arity + 1):
        stab = setwise_stabilizer(group, rep)
        blocks = orbits_on_points(stab, rep)
        sizes = tuple(sorted(popcount(b) for b in blocks))
        ok, witness = invariant_ksubset_exists(stab, rep, arity)
        if not ok:
            entries.append((rep, sizes, None))
            return False, OrbitCertificate(arity=arity,
                                           orbit_reps=tuple(entries),
                                           failing=rep)
        chosen = tuple(sorted(popcount(b) for b in blocks if b & witness == b))
        entries.append((rep, sizes, chosen))
    return True, OrbitCertificate(arity=arity, orbit_reps=tuple(entries))


def build_equivariant_sel(group: PermGroup, arity: int,
                          transversal="forward") -> SelectionStructure:
    """A total selection structure preserved by every element of the group.

    The representative of each subset-orbit gets the lexicographically least
    stabilizer-invariant subset; the value propagates along a breadth-first
    transversal (generator order reversed when transversal="reversed").
    """
    degree = group.degree
    gens = list(group.generators)
    if transversal == "reversed":
        gens = gens[::-1]
    table = {}
    for rep, _orbit in subset_orbit_reps(group, min_size=arity + 1):
        stab = setwise_stabilizer(group, rep)
        ok, witness = invariant_ksubset_exists(stab, rep, arity)
        if not ok:
            raise EquivariantSelError(rep)
        table[rep] = witness
        frontier = [(rep, witness)]
        while frontier:
            nxt = []
            for mask, value in frontier:
                for g in gens:
                    im = g.apply_mask(mask)
                    if im not in table:
                        table[im] = g.apply_mask(value)
                        nxt.append((im, table[im]))
            frontier = nxt
    return SelectionStructure.from_mapping(degree, arity, table)


def equivariant_choice_exists(group: PermGroup, m: int):
    """Can one element be chosen equivariantly from every m-subset?

    True iff every m-subset (one per orbit) contains a point fixed by its
    setwise stabilizer; on failure the lexicographically least failing
    representative comes back.
    """
    if m > group.degree:
        raise ValueError(f"m={m} exceeds degree {group.degree}")
    for rep, _orbit in subset_orbit_reps(group, min_size=m, max_size=m):
        stab = setwise_stabilizer(group, rep)
        if not any(all(g(p) == p for g in stab.generators) for p in bits_of(rep)):
            return False, rep
    return True, None


def compose_sel(struct: SelectionStructure, k: int) -> SelectionStructure:
    """Iterate the selection k times and take the union: an arity n structure
    yields an arity k*n structure on subsets larger than k*n.

    Every automorphism of the input preserves the result.
    """
    n = struct.arity
    target = k * n
    if target > struct.domain_size - 1:
        raise ValueError(
            f"target arity {target} too large for domain {struct.domain_size}")
    from .perm import mask_of

    mapping = struct.mapping()
    out = {}
    for size in range(target + 1, struct.domain_size + 1):
        for combo in itertools.combinations(range(struct.domain_size), size):
            subset = mask_of(combo)
            rest = subset
            union = 0
            for _ in range(k):
                sel = mapping[rest]
                union |= sel
                rest &= ~sel
            out[subset] = union
    return SelectionStructure.from_mapping(struct.domain_size, target, out)

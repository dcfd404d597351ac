"""Total selection structures: a table assigning to every subset L of the
domain with |L| > arity an arity-sized subset of L.

Canonical labeling is a brute minimization over relabelings, acceptable at
the guarded domain sizes; automorphism search prunes with per-point
signatures before the definitional check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .perm import (DOMAIN_CAP, Perm, all_perms, bits_of, ksubsets, mask_of,
                   popcount, render_subset)
from .groups import BoundExceededError, PermGroup

STRUCTURE_DOMAIN_CAP = 10
ENUMERATION_CAP = 10 ** 7


class InvalidStructureError(ValueError):
    pass


@dataclass(frozen=True)
class SelectionStructure:
    domain_size: int
    arity: int
    table: tuple  # sorted tuple of (subset_mask, value_mask)

    @classmethod
    def from_mapping(cls, domain_size, arity, mapping):
        table = tuple(sorted(mapping.items()))
        struct = cls(domain_size, arity, table)
        struct.validate()
        return struct

    def mapping(self):
        return dict(self.table)

    def validate(self):
        if self.domain_size > DOMAIN_CAP:
            raise InvalidStructureError(
                f"domain {self.domain_size} exceeds cap {DOMAIN_CAP}")
        full = (1 << self.domain_size) - 1
        seen = set()
        for subset, value in self.table:
            if subset & ~full:
                raise InvalidStructureError("table key outside domain")
            if popcount(subset) <= self.arity:
                raise InvalidStructureError(
                    f"table key {render_subset(subset)} not larger than arity")
            if value & ~subset:
                raise InvalidStructureError(
                    f"value {render_subset(value)} not inside {render_subset(subset)}")
            if popcount(value) != self.arity:
                raise InvalidStructureError(
                    f"value {render_subset(value)} has wrong size")
            seen.add(subset)
        for size in range(self.arity + 1, self.domain_size + 1):
            for subset in itertools.combinations(range(self.domain_size), size):
                if mask_of(subset) not in seen:
                    raise InvalidStructureError(
                        f"table not total: missing {subset}")

    def value(self, subset_mask):
        m = dict(self.table)
        return m[subset_mask]

    def relabel(self, perm: Perm):
        """The structure pi . m with table(pi L) = pi(table(L))."""
        mapping = {perm.apply_mask(s): perm.apply_mask(v) for s, v in self.table}
        return SelectionStructure(self.domain_size, self.arity,
                                  tuple(sorted(mapping.items())))

    def is_preserved_by(self, perm: Perm):
        mapping = dict(self.table)
        for subset, value in self.table:
            if mapping[perm.apply_mask(subset)] != perm.apply_mask(value):
                return False
        return True


def _point_signatures(struct):
    """Per-point invariant: how often the point sits in a selected value,
    bucketed by subset size.  Preserved by every automorphism."""
    sigs = [dict() for _ in range(struct.domain_size)]
    for subset, value in struct.table:
        size = popcount(subset)
        for p in bits_of(value):
            sigs[p][size] = sigs[p].get(size, 0) + 1
        for p in bits_of(subset):
            sigs[p][-size] = sigs[p].get(-size, 0) + 1
    return [tuple(sorted(s.items())) for s in sigs]


def automorphism_group(struct: SelectionStructure) -> PermGroup:
    """All permutations pi with pi(table(L)) = table(pi L) for every L."""
    n = struct.domain_size
    if n > STRUCTURE_DOMAIN_CAP:
        raise BoundExceededError(
            f"automorphism search guarded to domain {STRUCTURE_DOMAIN_CAP}")
    sigs = _point_signatures(struct)
    candidates_by_point = [
        [q for q in range(n) if sigs[q] == sigs[p]] for p in range(n)
    ]
    autos = []
    for perm in all_perms(n):
        images = perm.images
        if any(images[p] not in candidates_by_point[p] for p in range(n)):
            continue
        if struct.is_preserved_by(perm):
            autos.append(perm)
    return PermGroup.from_elements(autos, n)


def canonical_form(struct: SelectionStructure):
    """A canonically labeled copy plus a relabeling taking the input to it.

    Isomorphic inputs produce identical canonical tables; ties between
    minimizing relabelings are irrelevant to the output structure.
    """
    n = struct.domain_size
    if n > STRUCTURE_DOMAIN_CAP:
        raise BoundExceededError(
            f"canonical labeling guarded to domain {STRUCTURE_DOMAIN_CAP}")
    best = None
    best_perm = None
    for perm in all_perms(n):
        candidate = struct.relabel(perm)
        if best is None or candidate.table < best.table:
            best = candidate
            best_perm = perm
    return best, best_perm


def enumerate_structures(domain_size, arity):
    """Every total selection structure on the domain, exactly once.

    Guarded by the product of per-subset choice counts (<= 1e7).
    """
    keys = []
    for size in range(arity + 1, domain_size + 1):
        for subset in itertools.combinations(range(domain_size), size):
            keys.append(mask_of(subset))
    keys.sort()
    if not keys:
        return
    choice_lists = [ksubsets(k, arity) for k in keys]
    count = 1
    for choices in choice_lists:
        count *= len(choices)
        if count > ENUMERATION_CAP:
            raise BoundExceededError(
                f"structure enumeration would exceed {ENUMERATION_CAP}")
    for values in itertools.product(*choice_lists):
        yield SelectionStructure(domain_size, arity,
                                 tuple(zip(keys, values)))


def count_structures(domain_size, arity):
    count = 1
    for size in range(arity + 1, domain_size + 1):
        per = len(list(itertools.combinations(range(size), arity)))
        n_subsets = len(list(itertools.combinations(range(domain_size), size)))
        count *= per ** n_subsets
    return count

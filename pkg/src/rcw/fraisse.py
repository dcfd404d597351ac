"""Staged construction of the generic selection model: atoms are created by
realizing every one-point extension of every small subset of the previous
stage, and the selection table is the "n biggest elements" rule everywhere
except on the creation sets, which carry the value imposed by their
representative structure.

Atoms are plain naturals; subsets are arbitrary-size int bitmasks (stages
can exceed 64 atoms, so the fixed-domain structure type is not used for the
stage table).  The table is stored as the exception dictionary plus the
default rule, which keeps 200-atom stages workable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .perm import bits_of, mask_of, popcount
from .selection import SelectionStructure, canonical_form, enumerate_structures


class StageError(ValueError):
    pass


class StageCapError(StageError):
    """Atom cap hit mid-stage; carries the resumable partial stage."""

    def __init__(self, partial):
        self.partial = partial
        super().__init__(
            f"atom cap reached at {partial.atom_count} atoms; stage "
            f"{partial.stage_index} is partial and resumable")


class NotRealizableError(StageError):
    pass


@dataclass(frozen=True)
class FraisseStage:
    arity: int
    stage_index: int
    atom_count: int
    prev_atom_count: int  # atoms present when this stage started
    grounds: tuple  # per atom: mask of its creation set
    provenance: tuple  # per atom: (rk_index, embedding_index)
    exceptions: tuple  # sorted ((subset_mask, value_mask), ...)
    cursor: int | None = None  # creation-set index reached; None = complete

    @property
    def partial(self):
        return self.cursor is not None

    def atoms(self):
        return range(self.atom_count)

    def exception_map(self):
        return dict(self.exceptions)


def empty_stage(arity):
    return FraisseStage(arity, 0, 0, 0, (), (), ())


def sel(stage: FraisseStage, mask: int) -> int:
    """The selection value of any subset of the stage: the stored exception
    if the subset is a creation set, the arity biggest atoms otherwise."""
    n = stage.arity
    if popcount(mask) <= n:
        raise StageError("selection is defined above the arity only")
    if mask >> stage.atom_count:
        raise StageError("subset outside the stage")
    exc = stage.exception_map().get(mask)
    if exc is not None:
        return exc
    out = 0
    left = n
    bit = stage.atom_count - 1
    while left:
        if mask >> bit & 1:
            out |= 1 << bit
            left -= 1
        bit -= 1
    return out


def ground(stage: FraisseStage, atom: int) -> int:
    if not 0 <= atom < stage.atom_count:
        raise StageError(f"unknown atom {atom}")
    return stage.grounds[atom]


@lru_cache(maxsize=None)
def _representatives(size, arity):
    """Canonical representatives of all isomorphism classes of selection
    structures on the given domain size."""
    if size > arity + 2:
        raise StageError(f"representative cache capped at size {arity + 2}")
    seen = {}
    if size <= arity:
        # no table entries: a single trivial class
        return (SelectionStructure(size, arity, ()),)
    for struct in enumerate_structures(size, arity):
        canon, _ = canonical_form(struct)
        seen.setdefault(canon.table, canon)
    return tuple(seen[k] for k in sorted(seen))


def _creation_sets(prev_atoms):
    """[F_s]^{<= n} in deterministic order: by size, then lexicographically."""
    def order(n):
        for size in range(n + 1):
            yield from itertools.combinations(range(prev_atoms), size)
    return order


def _embeddings(base_size, rep_size):
    """Injective maps from a base of the given size into the representative
    domain, in lexicographic image order.  The induced structure on any
    base of size <= arity is empty, so every injection embeds."""
    return sorted(itertools.permutations(range(rep_size), base_size))


def build_stage(prev: FraisseStage, arity: int, atom_cap: int = 64):
    """The next stage: one fresh atom per (creation set, representative,
    embedding) triple, enumerated deterministically.  Raises StageCapError
    with a resumable partial stage when the cap is hit; passing a partial
    stage continues where it stopped."""
    if prev.arity != arity:
        raise StageError("arity mismatch")
    n = arity
    if prev.partial:
        base_atoms = prev.prev_atom_count
        stage_index = prev.stage_index
        start_cursor = prev.cursor
        grounds = list(prev.grounds)
        provenance = list(prev.provenance)
        exceptions = dict(prev.exceptions)
        atom = prev.atom_count
    else:
        base_atoms = prev.atom_count
        stage_index = prev.stage_index + 1
        start_cursor = 0
        grounds = list(prev.grounds)
        provenance = list(prev.provenance)
        exceptions = dict(prev.exceptions)
        atom = prev.atom_count

    sets = list(_creation_sets(base_atoms)(n))
    for idx in range(start_cursor, len(sets)):
        base = sets[idx]
        size = len(base)
        reps = [r for r in _representatives(size + 1, n)]
        new_here = []
        for rk_index, rep in enumerate(reps):
            for emb_index, emb in enumerate(_embeddings(size, size + 1)):
                new_here.append((rk_index, emb_index, rep, emb))
        if atom + len(new_here) > atom_cap:
            partial = FraisseStage(
                n, stage_index, atom, base_atoms,
                tuple(grounds), tuple(provenance),
                tuple(sorted(exceptions.items())), cursor=idx)
            raise StageCapError(partial)
        for rk_index, emb_index, rep, emb in new_here:
            grounds.append(mask_of(base))
            provenance.append((rk_index, emb_index))
            if size == n:
                # the creation set carries the representative's imposed value
                missing = next(p for p in range(size + 1) if p not in emb)
                to_atom = {emb[i]: base[i] for i in range(size)}
                to_atom[missing] = atom
                value = rep.value((1 << (size + 1)) - 1)
                exceptions[mask_of(base) | (1 << atom)] = mask_of(
                    to_atom[p] for p in bits_of(value))
            atom += 1
    return FraisseStage(n, stage_index, atom, base_atoms,
                        tuple(grounds), tuple(provenance),
                        tuple(sorted(exceptions.items())), cursor=None)


def build_model(arity, stages, atom_cap=64):
    """Stages up to the requested index or the atom cap, whichever first;
    the last stage may be partial."""
    out = [empty_stage(arity)]
    for _ in range(stages):
        try:
            out.append(build_stage(out[-1], arity, atom_cap))
        except StageCapError as exc:
            out.append(exc.partial)
            break
    return out


def build_to_atoms(arity, atom_target):
    """Stages until the atom count reaches the target; the final stage is
    built partially up to the target."""
    stage = empty_stage(arity)
    out = [stage]
    cap = atom_target
    while stage.atom_count < atom_target:
        try:
            stage = build_stage(stage, arity, atom_cap=cap)
            out.append(stage)
        except StageCapError as exc:
            stage = exc.partial
            if stage.atom_count >= atom_target:
                out.append(stage)
                break
            cap += 64  # batch granularity overshoot; resume the partial stage
    return out


def dump_stage(stage: FraisseStage, path):
    """Re-loadable text dump: atoms, grounds, provenance, and the selection
    table as its exception entries plus the default rule (the explicit table
    is exponential in the atom count)."""
    import json

    data = {
        "arity": stage.arity,
        "stage_index": stage.stage_index,
        "atom_count": stage.atom_count,
        "prev_atom_count": stage.prev_atom_count,
        "cursor": stage.cursor,
        "default_rule": "n_biggest",
        "grounds": [sorted(bits_of(g)) for g in stage.grounds],
        "provenance": [list(p) for p in stage.provenance],
        "exceptions": sorted(
            [sorted(bits_of(s)), sorted(bits_of(v))]
            for s, v in stage.exceptions),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, indent=0)
        fh.write("\n")


def load_stage(path) -> FraisseStage:
    import json

    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("default_rule") != "n_biggest":
        raise StageError("unknown default rule in dump")
    return FraisseStage(
        data["arity"], data["stage_index"], data["atom_count"],
        data["prev_atom_count"],
        tuple(mask_of(g) for g in data["grounds"]),
        tuple(tuple(p) for p in data["provenance"]),
        tuple(sorted((mask_of(s), mask_of(v))
                     for s, v in data["exceptions"])),
        cursor=data["cursor"])


# ---------------------------------------------------------------------------
# checks

def extension_types(base, arity):
    """The possible selection values on base | {fresh}: for small bases the
    single trivial type (None); at |base| = arity, the base itself or any
    swap of one base atom for the fresh one."""
    if len(base) < arity:
        return [None]
    out = [frozenset(base)]
    for x in base:
        out.append(frozenset(set(base) - {x} | {"fresh"}))
    return out


def check_extension_property(stage: FraisseStage, arity: int):
    """Per creation set of the previous stage: which one-point extension
    types are realized by an atom grounded there.  Misses are reported; the
    horizon excludes creation sets beyond a partial stage's cursor."""
    n = arity
    sets = list(_creation_sets(stage.prev_atom_count)(n))
    horizon = stage.cursor if stage.partial else len(sets)
    by_ground = {}
    for a in range(stage.prev_atom_count, stage.atom_count):
        by_ground.setdefault(stage.grounds[a], []).append(a)
    misses = []
    checked = 0
    for base in sets[:horizon]:
        gmask = mask_of(base)
        atoms_here = by_ground.get(gmask, [])
        realized = set()
        for a in atoms_here:
            if len(base) < n:
                realized.add(None)
            else:
                value = stage.exception_map()[gmask | (1 << a)]
                named = frozenset(
                    "fresh" if p == a else p for p in bits_of(value))
                realized.add(named)
        for t in extension_types(base, n):
            checked += 1
            if t not in realized:
                misses.append((base, t))
    return {"checked": checked, "misses": misses,
            "horizon_sets": horizon, "total_sets": len(sets)}


def scan_totality(stage: FraisseStage, max_size=None, sample=None):
    """Direct verification that sel() answers on every subset above the
    arity (up to a size bound; optionally a deterministic sample) and that
    non-exception subsets obey the n-biggest rule."""
    n = stage.arity
    atoms = stage.atom_count
    exc = stage.exception_map()
    if max_size is None:
        max_size = min(atoms, n + 2)
    count = 0
    for size in range(n + 1, max_size + 1):
        combos = itertools.combinations(range(atoms), size)
        if sample is not None:
            combos = itertools.islice(combos, sample)
        for combo in combos:
            mask = mask_of(combo)
            value = sel(stage, mask)
            if popcount(value) != n or value & ~mask:
                return False, combo
            if mask not in exc and value != mask_of(sorted(combo)[-n:]):
                return False, combo
            count += 1
    return True, count


# ---------------------------------------------------------------------------
# back-and-forth

def _is_partial_iso(stage, mapping):
    """mapping: dict atom -> atom, injective, selection-preserving on every
    subset of its domain above the arity."""
    n = stage.arity
    dom = sorted(mapping)
    if len(set(mapping.values())) != len(dom):
        return False
    for size in range(n + 1, len(dom) + 1):
        for combo in itertools.combinations(dom, size):
            image = [mapping[a] for a in combo]
            if sel(stage, mask_of(image)) != mask_of(
                    mapping[a] for a in bits_of(sel(stage, mask_of(combo)))):
                return False
    return True


def extend_isomorphism(stage: FraisseStage, iso: dict, steps: int):
    """Alternating least-unmatched-atom extension of a partial isomorphism.
    Returns (mapping, report); report notes exhausted horizons when no atom
    of the built stage can serve as an image."""
    mapping = dict(iso)
    if not _is_partial_iso(stage, mapping):
        raise StageError("input is not a partial isomorphism")
    rounds_done = 0
    exhausted = False
    for _ in range(steps):
        progressed = False
        fwd = next((a for a in stage.atoms() if a not in mapping), None)
        if fwd is not None:
            used = set(mapping.values())
            for c in stage.atoms():
                if c in used:
                    continue
                trial = dict(mapping)
                trial[fwd] = c
                if _is_partial_iso(stage, trial):
                    mapping = trial
                    progressed = True
                    break
            else:
                exhausted = True
        inv = {v: k for k, v in mapping.items()}
        bwd = next((b for b in stage.atoms() if b not in inv), None)
        if bwd is not None:
            for c in stage.atoms():
                if c in mapping:
                    continue
                trial = dict(mapping)
                trial[c] = bwd
                if _is_partial_iso(stage, trial):
                    mapping = trial
                    progressed = True
                    break
            else:
                exhausted = True
        if not progressed:
            break
        rounds_done += 1
    return mapping, {"rounds": rounds_done, "horizon_exhausted": exhausted,
                     "size": len(mapping)}


def acf_demo(stage: FraisseStage, member: int, arity: int, support: int = 0):
    """A finite demonstration of choice-by-reference-set: an n-set R and a
    member atom a0 with sel(R | {a}) == R for every other member atom a,
    while sel(R | {a0}) swaps a0 in; plus the atoms that behave like a0
    (same ground, same imposed swap)."""
    n = arity
    if member & support:
        raise StageError("member must be disjoint from the declared support")
    exc = stage.exception_map()
    member_atoms = bits_of(member)
    for a0 in member_atoms:
        g = stage.grounds[a0] if a0 < len(stage.grounds) else 0
        if popcount(g) != n:
            continue
        key = g | (1 << a0)
        value = exc.get(key)
        if value is None or not value & (1 << a0):
            continue
        # R = ground plus nothing: need the swapped-out ground atom as r0
        r0_mask = g & ~value
        if popcount(r0_mask) != 1:
            continue
        if g & support or g & member:
            continue
        ok = True
        for a in member_atoms:
            if a == a0:
                continue
            if sel(stage, g | (1 << a)) != g:
                ok = False
                break
        if not ok:
            continue
        copies = []
        for b in range(stage.atom_count):
            if b == a0 or (1 << b) & (member | g | support):
                continue
            v = exc.get(g | (1 << b))
            if v is not None and v == (value & ~(1 << a0)) | (1 << b):
                copies.append(b)
        if copies:
            return {"reference": g, "r0": bits_of(r0_mask)[0],
                    "distinguished": a0, "copies": copies}
    raise NotRealizableError(
        "no reference configuration realizable at this stage")

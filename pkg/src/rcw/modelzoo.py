"""Finite approximations of block-structured permutation models: prime
blocks with one full cycle each, one fully symmetric block, and multi-line
powers of a single size, with principle evaluators.

Atom counts exceed the explicit subset-sweep range, so evaluation reduces
per block: a subset's setwise stabilizer factors through the blocks, and
each block contributes an orbit-size multiset determined only by the trace
size and its exact rotation period.  The evaluators search over these
block profiles instead of over subsets.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from math import comb, gcd

from .perm import Perm, mask_of
from .groups import PermGroup, group_closure
from .deciders import Certificate, Verdict
from .reductions import PartialSelection

ZOO_ATOM_CAP = 64

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class ZooError(ValueError):
    pass


@dataclass(frozen=True)
class Block:
    start: int
    size: int
    kind: str  # "cyclic" | "sym"
    line: int | None = None  # inert line index, recorded for fidelity

    @property
    def atoms(self):
        return range(self.start, self.start + self.size)


@dataclass(frozen=True)
class ZooModel:
    name: str
    params: tuple
    blocks: tuple
    atom_count: int
    support: int  # mask of the declared excluded set E

    def fixed_blocks(self):
        """Blocks whose generator is dropped because the support touches
        them (the group must fix E pointwise)."""
        out = set()
        for i, b in enumerate(self.blocks):
            if b.kind == "cyclic" and any(
                    self.support >> a & 1 for a in b.atoms):
                out.add(i)
        return out

    def explicit_group(self) -> PermGroup:
        """The actual permutation group, for cross-validation at small atom
        counts only."""
        gens = []
        fixed = self.fixed_blocks()
        for i, b in enumerate(self.blocks):
            if b.kind == "cyclic":
                if i not in fixed:
                    gens.append(Perm.from_cycles([list(b.atoms)],
                                                 self.atom_count))
            else:
                free = [a for a in b.atoms if not self.support >> a & 1]
                for x, y in zip(free, free[1:]):
                    gens.append(Perm.from_cycles([[x, y]], self.atom_count))
        if not gens:
            gens = [Perm.identity(self.atom_count)]
        return group_closure(gens, self.atom_count)


def make_model(name, params, bound=ZOO_ATOM_CAP, support=()):
    """vfin(l): the first l prime-sized blocks, one cycle each; bfm(m): one
    symmetric block of m atoms; vlines(sizes, per_line): per line a row of
    equal-size cyclic blocks.  Blocks are instantiated up to the atom cap."""
    if bound > ZOO_ATOM_CAP:
        raise ZooError(f"atom cap {bound} exceeds {ZOO_ATOM_CAP}")
    blocks = []
    pos = 0
    if name == "vfin":
        (count,) = params if isinstance(params, tuple) else (params,)
        for i in range(count):
            size = _PRIMES[i]
            if pos + size > bound:
                break
            blocks.append(Block(pos, size, "cyclic"))
            pos += size
    elif name == "bfm":
        (count,) = params if isinstance(params, tuple) else (params,)
        if count > bound:
            raise ZooError("bfm atom count exceeds the cap")
        blocks.append(Block(pos, count, "sym"))
        pos += count
    elif name == "vlines":
        sizes, per_line = params
        for line, size in enumerate(sizes):
            for _ in range(per_line):
                if pos + size > bound:
                    break
                blocks.append(Block(pos, size, "cyclic", line=line))
                pos += size
    else:
        raise ZooError(f"unknown model {name!r}")
    if not blocks:
        raise ZooError("no block fits under the atom cap")
    return ZooModel(name, tuple(params) if isinstance(params, tuple)
                    else (params,), tuple(blocks), pos, mask_of(support))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return make_model(data["name"], tuple(data["params"]),
                      data.get("bound", ZOO_ATOM_CAP),
                      data.get("support", ()))


# ---------------------------------------------------------------------------
# block profiles

def _cyclic_options(size):
    """(trace size, orbit multiset) options realizable inside one cyclic
    block: a size-t trace with exact rotation period o (o | gcd(t, size))
    splits into t/o orbits of size o; t in {0, size} are forced."""
    out = [(0, ()), (size, (size,))]
    for t in range(1, size):
        for o in _divisors(gcd(t, size)):
            out.append((t, (o,) * (t // o)))
    return out


def _fixed_options(size):
    return [(t, (1,) * t) for t in range(size + 1)]


def _sym_options(free, fixed):
    """One symmetric block with a pointwise-fixed part: the free trace is a
    single stabilizer orbit, fixed atoms are singletons."""
    out = []
    for tf in range(free + 1):
        for te in range(fixed + 1):
            orbits = ((1,) * te) + ((tf,) if tf else ())
            out.append((tf + te, orbits))
    return out


def _divisors(x):
    return [d for d in range(1, x + 1) if x % d == 0]


def _bad_nrc_config(option_lists, n):
    """A per-block option choice with total trace above n whose combined
    orbit sizes admit no subset-sum equal to n; None if impossible.

    DFS with memo over (block index, achievable-sum set, capped total)."""
    full = (1 << (n + 1)) - 1

    def apply(sums, total, option):
        t, orbits = option
        for o in orbits:
            if o <= n:
                sums |= (sums << o) & full
        return sums, min(total + t, n + 1)

    memo = {}

    def dfs(i, sums, total):
        if i == len(option_lists):
            return [] if (total > n and not sums >> n & 1) else None
        key = (i, sums, total)
        if key in memo:
            return memo[key]
        out = None
        for option in option_lists[i]:
            s2, t2 = apply(sums, total, option)
            rest = dfs(i + 1, s2, t2)
            if rest is not None:
                out = [option] + rest
                break
        memo[key] = out
        return out

    return dfs(0, 1, 0)


def _bad_choice_config(option_lists, n):
    """A per-block choice with total trace exactly n and no singleton orbit
    anywhere (no stabilizer-fixed point in the n-set); None if impossible."""
    def dfs(i, total):
        if total > n:
            return None
        if i == len(option_lists):
            return [] if total == n else None
        for option in option_lists[i]:
            t, orbits = option
            if any(o == 1 for o in orbits):
                continue
            rest = dfs(i + 1, total + t)
            if rest is not None:
                return [option] + rest
        return None

    return dfs(0, 0)


def _support_candidates(model: ZooModel, e_max):
    """Support choices, block-aligned: one atom fixes a whole cyclic block
    (its generator is dropped), and sym-block budget fixes atoms one by
    one.  Yields (fixed cyclic block set, per-sym-block fixed counts)."""
    cyclic = [i for i, b in enumerate(model.blocks) if b.kind == "cyclic"]
    syms = [i for i, b in enumerate(model.blocks) if b.kind == "sym"]
    for r in range(min(e_max, len(cyclic)) + 1):
        for chosen in itertools.combinations(cyclic, r):
            budget = e_max - r
            if not syms:
                yield frozenset(chosen), {}
                continue
            sizes = [min(budget, model.blocks[i].size) for i in syms]
            for alloc in itertools.product(
                    *[range(s + 1) for s in sizes]):
                if sum(alloc) <= budget:
                    yield frozenset(chosen), dict(zip(syms, alloc))


def _options_for(model, fixed_cyclic, sym_alloc):
    lists = []
    for i, b in enumerate(model.blocks):
        if b.kind == "sym":
            e = sym_alloc.get(i, 0)
            lists.append(_sym_options(b.size - e, e))
        elif i in fixed_cyclic:
            lists.append(_fixed_options(b.size))
        else:
            lists.append(_cyclic_options(b.size))
    return lists


def _witness_certificate(model, config, n, principle):
    """An explicit small-domain certificate for a bad configuration: the
    involved blocks relabeled to a fresh domain, one generator per cyclic
    block, transpositions on the involved symmetric part."""
    gens = []
    target = []
    pos = 0
    for block, (t, orbits) in zip(model.blocks, config):
        if t == 0:
            continue
        if block.kind == "sym":
            # t atoms in one symmetric orbit: use t atoms with full symmetry
            atoms = list(range(pos, pos + t))
            for x, y in zip(atoms, atoms[1:]):
                gens.append((x, y))
            target.extend(atoms)
            pos += t
        else:
            s = len(list(block.atoms))
            atoms = list(range(pos, pos + s))
            gens.append(tuple(atoms))
            o = orbits[0] if orbits else 1
            m = s // o
            c = t // o
            target.extend(pos + i for i in range(s) if i % m < c)
            pos += s
    degree = pos
    perms = [Perm.from_cycles([list(g)], degree) for g in gens]
    gen_strings = tuple(p.to_cycle_string() for p in perms)
    return Certificate(
        claim={"kind": "zoo_failure", "model": model.name,
               "principle": principle, "n": n},
        domain_size=degree,
        group_generators=gen_strings,
        sel_table=None,
        orbit_certificate=None,
        target_set=tuple(sorted(target)),
    )


def evaluate(model: ZooModel, principle: str, n: int,
             support_budget: int = 0) -> Verdict:
    """holds_at_bound iff some support within the budget makes the
    principle's equivariant object exist on the approximation; fails with a
    small explicit witness certificate otherwise."""
    if principle not in ("nrc_fin", "c_n", "rc", "ncfin_minus"):
        raise ZooError(f"unknown principle {principle!r}")
    if principle == "ncfin_minus":
        return _evaluate_ncfin(model, n, support_budget)
    report = []
    first_bad = None
    for fixed_cyclic, sym_alloc in _support_candidates(model, support_budget):
        lists = _options_for(model, fixed_cyclic, sym_alloc)
        if principle == "nrc_fin":
            bad = _bad_nrc_config(lists, n)
        else:
            bad = _bad_choice_config(lists, n)
        label = (f"E: blocks {sorted(fixed_cyclic)} sym {sym_alloc}"
                 if (fixed_cyclic or sym_alloc) else "E: empty")
        if bad is None:
            report.append(f"{label}: no bad configuration")
            return Verdict("holds_at_bound", bound=support_budget,
                           mode="zoo", scan_report=tuple(report))
        report.append(f"{label}: bad profile {bad}")
        if first_bad is None:
            first_bad = bad
    witness = _witness_certificate(model, first_bad, n,
                                   principle)
    return Verdict("fails", bound=support_budget, mode="zoo",
                   witness=witness, scan_report=tuple(report))


def _good_count(model, fixed_cyclic, sym_alloc, n):
    """How many n-subsets of the atoms contain a stabilizer-fixed point,
    counted block by block (complement of the all-orbits-above-1 count)."""
    bad_ways = [1] + [0] * n  # per trace total
    for i, b in enumerate(model.blocks):
        if b.kind == "sym":
            e = sym_alloc.get(i, 0)
            per = [0] * (n + 1)
            for t in range(min(b.size - e, n) + 1):
                if t != 1:
                    per[t] += comb(b.size - e, t)
            # any fixed atom in the trace is a fixed point: te must be 0
        elif i in fixed_cyclic:
            per = [0] * (n + 1)
            per[0] = 1
        else:
            per = [0] * (n + 1)
            for t in range(min(b.size, n) + 1):
                per[t] = comb(b.size, t) - _aperiodic_count(b.size, t)
                if t == 0:
                    per[t] = 1
        nxt = [0] * (n + 1)
        for tot in range(n + 1):
            if not bad_ways[tot]:
                continue
            for t in range(n + 1 - tot):
                if per[t]:
                    nxt[tot + t] += bad_ways[tot] * per[t]
        bad_ways = nxt
    return comb(model.atom_count, n) - bad_ways[n]


@lru_cache(maxsize=None)
def _aperiodic_count(size, t):
    """Traces of exact period 1 in a cyclic block, by Moebius inversion."""
    if t == 0:
        return 1
    total = 0
    for d in _divisors(gcd(size, t)):
        total += _moebius(d) * comb(size // d, t // d)
    return total


def _moebius(x):
    out = 1
    d = 2
    while d * d <= x:
        if x % d == 0:
            x //= d
            if x % d == 0:
                return 0
            out = -out
        d += 1
    if x > 1:
        out = -out
    return out


def _grown_model(model: ZooModel):
    if model.name == "vfin":
        return make_model("vfin", (model.params[0] + 1,), ZOO_ATOM_CAP)
    if model.name == "bfm":
        return make_model("bfm", (model.params[0] + 4,), ZOO_ATOM_CAP)
    sizes, per_line = model.params
    return make_model("vlines", (sizes, per_line + 1), ZOO_ATOM_CAP)


def _evaluate_ncfin(model, n, support_budget):
    """Finite proxy for the some-infinite-subfamily quantifier: the count
    of n-sets admitting an invariant choice must grow strictly when the
    approximation grows by one block."""
    bigger = _grown_model(model)
    report = []

    def best(m):
        return max(_good_count(m, fc, sa, n)
                   for fc, sa in _support_candidates(m, support_budget))

    small_count = best(model)
    big_count = best(bigger)
    report.append(f"invariant-choice count {small_count} -> {big_count} "
                  f"at {model.atom_count} -> {bigger.atom_count} atoms")
    if big_count > small_count:
        return Verdict("holds_at_bound", bound=support_budget, mode="zoo",
                       scan_report=tuple(report))
    lists = _options_for(model, frozenset(), {})
    bad = _bad_choice_config(lists, n) or _bad_nrc_config(lists, n)
    witness = _witness_certificate(model, bad, n, "ncfin_minus")
    return Verdict("fails", bound=support_budget, mode="zoo",
                   witness=witness, scan_report=tuple(report))


def bfm_partial_choice(model: ZooModel, family, support_budget):
    """Invariant choice on every member whose stabilizer leaves a fixed
    point: members meeting the support, and singletons."""
    if model.name != "bfm":
        raise ZooError("partial choice analysis is for the symmetric model")
    block = model.blocks[0]
    e_atoms = set(list(block.atoms)[:support_budget])
    assignments = {}
    for i, member in enumerate(family):
        member = frozenset(member)
        hit = member & e_atoms
        if hit:
            assignments[i] = frozenset([min(hit)])
        elif len(member) == 1:
            assignments[i] = frozenset(member)
    sel = PartialSelection(assignments)
    return sel, len(assignments)

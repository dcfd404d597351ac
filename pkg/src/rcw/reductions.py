"""Executable finite versions of the reduction arguments that turn an
arity-n selection oracle into a partial n-selection on a disjoint family.

Every "infinitely many" branch of the original arguments is finitized as
"the residual class of maximum cardinality, ties broken lexicographically";
the oracle is an injected callable so validity can be tested uniformly over
adversarial oracles.  All oracle calls are logged for replay.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field


class FamilyError(ValueError):
    pass


class FamilyTooSmallError(FamilyError):
    pass


class SubsumError(ValueError):
    pass


class TraceProfileError(ValueError):
    pass


@dataclass
class OracleFamily:
    """Pairwise disjoint finite int-sets plus a selection oracle: a total
    callable taking any finite int-set of size > arity to an arity-subset."""
    members: tuple  # of frozensets
    arity: int
    oracle: object  # callable
    log: list = field(default_factory=list)

    def __post_init__(self):
        self.members = tuple(frozenset(m) for m in self.members)
        seen = set()
        for m in self.members:
            if seen & m:
                raise FamilyError("members must be pairwise disjoint")
            seen |= m

    def ask(self, atoms):
        atoms = frozenset(atoms)
        if len(atoms) <= self.arity:
            raise FamilyError(
                f"oracle domain starts above size {self.arity}")
        answer = frozenset(self.oracle(atoms))
        if not answer <= atoms or len(answer) != self.arity:
            raise FamilyError(
                f"oracle returned {sorted(answer)} on {sorted(atoms)}")
        self.log.append((tuple(sorted(atoms)), tuple(sorted(answer))))
        return answer


@dataclass
class PartialSelection:
    assignments: dict  # member index -> frozenset

    def validate(self, family: OracleFamily, k: int):
        for i, chosen in self.assignments.items():
            if not 0 <= i < len(family.members):
                raise FamilyError(f"assignment index {i} out of range")
            if len(chosen) != k:
                raise FamilyError(
                    f"assignment for member {i} has size {len(chosen)}, not {k}")
            if not chosen <= family.members[i]:
                raise FamilyError(
                    f"assignment for member {i} not inside the member")
        return True


def make_seeded_oracle(seed, arity):
    """A deterministic pseudo-random oracle; the seed and the queried set
    fully determine the answer (stable across runs and platforms)."""
    def oracle(atoms):
        key = f"{seed}:{arity}:{tuple(sorted(atoms))}"
        rng = random.Random(key)
        return frozenset(rng.sample(sorted(atoms), arity))
    return oracle


def make_lex_oracle(arity):
    def oracle(atoms):
        return frozenset(sorted(atoms)[:arity])
    return oracle


def make_replay_oracle(log):
    table = {tuple(sorted(q)): frozenset(a) for q, a in log}

    def oracle(atoms):
        key = tuple(sorted(atoms))
        if key not in table:
            raise FamilyError(f"replay log has no entry for {key}")
        return table[key]
    return oracle


def load_family(path, seed=0):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    members = [frozenset(m) for m in data["members"]]
    arity = data["arity"]
    return OracleFamily(tuple(members), arity,
                        make_seeded_oracle(seed, arity))


def dump_family(family, path):
    data = {"arity": family.arity,
            "members": [sorted(m) for m in family.members]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# standalone lemmas

def subsum_divisors(p, k, sizes):
    """From a multiset of divisors of p^k with sum exceeding p^k, a
    sub-multiset summing exactly to p^k, greedily largest-first.

    Greed is exact here: after taking divisors d1 >= d2 >= ..., the residual
    target stays divisible by every remaining candidate.
    """
    target = p ** k
    sizes = sorted(sizes, reverse=True)
    if any(target % a for a in sizes):
        raise SubsumError(f"every size must divide {target}")
    if sum(sizes) <= target:
        raise SubsumError(f"total must exceed {target}")
    picked = []
    remaining = target
    for a in sizes:
        if a <= remaining:
            picked.append(a)
            remaining -= a
    if remaining:
        raise SubsumError(f"greedy missed the target by {remaining}")
    return picked


def outdegree_bound_check(vertex_count, max_outdegree):
    """True iff a digraph on the given vertices with at least one edge per
    unordered pair cannot have all outdegrees within the bound."""
    if vertex_count < 0 or max_outdegree < 0:
        raise ValueError("counts must be non-negative")
    return vertex_count * (vertex_count - 1) // 2 > vertex_count * max_outdegree


# ---------------------------------------------------------------------------
# helpers shared by the branch analyses

def _largest_class(classes):
    """The class of maximum cardinality, ties broken by the lexicographic
    order of the sorted class contents."""
    return max(classes, key=lambda c: (len(c), [-x for x in sorted(c)]))


def _to_ksubset(member, element, k):
    """A deterministic k-subset of the member containing the distinguished
    element: the element plus the lexicographically least complement."""
    rest = sorted(member - {element})
    return frozenset([element] + rest[:k - 1])


def _edge_between(fam, traces, i, j):
    """The distinguished (index, element) the oracle yields on the union of
    two traces.  The selected arity-n set cannot contain both traces, so one
    side always loses an element."""
    bi, bj = traces[i], traces[j]
    g = fam.ask(bi | bj)
    if not bj <= g:
        return j, min(bj - g)
    return i, min(bi - g)


def digraph_select(fam, traces):
    """The outdegree-partition kernel: builds the digraph with an edge
    (i, j) whenever the oracle's pick on trace_i | trace_j misses part of
    trace_j, partitions indices by outdegree, extracts representatives per
    class, and distinguishes one element of some trace per class."""
    idx = sorted(traces)
    if len(idx) < 5:
        raise FamilyTooSmallError(
            "digraph kernel needs at least 5 members (2k'+3 with k'=1)")
    edges = set()
    for i, j in itertools.permutations(idx, 2):
        g = fam.ask(traces[i] | traces[j])
        if not traces[j] <= g:
            edges.add((i, j))
    outdeg = {i: sum(1 for j in idx if (i, j) in edges) for i in idx}
    classes = {}
    for i in idx:
        classes.setdefault(outdeg[i], []).append(i)
    ordered_classes = [sorted(classes[k]) for k in sorted(classes)]
    # representative extraction per class: oracle on the members' least atoms
    extracted = []
    for cls in ordered_classes:
        if len(cls) <= fam.arity:
            extracted.append(cls)
        else:
            anchors = {min(traces[i]): i for i in cls}
            picked = fam.ask(frozenset(anchors))
            extracted.append(sorted(anchors[a] for a in picked))
    distinguished = {}
    singles = []
    for rep in extracted:
        if len(rep) >= 2:
            jj, e = _edge_between(fam, traces, rep[0], rep[1])
            distinguished[jj] = e
        else:
            singles.append(rep[0])
    for a, b in zip(singles[0::2], singles[1::2]):
        jj, e = _edge_between(fam, traces, a, b)
        distinguished[jj] = e
    if len(singles) % 2:
        a = singles[-1]
        other = next(i for i in idx if i != a)
        jj, e = _edge_between(fam, traces, a, other)
        distinguished[jj] = e
    return distinguished


# ---------------------------------------------------------------------------
# the main reductions

def reduce(n, fam: OracleFamily, trace_sets):
    """A valid non-empty partial n-selection from the family, following the
    case analysis for n in {2, 3, 4, 6}.

    trace_sets maps member index -> tuple of traces (the member's
    intersections with the externally produced sets, in order).
    """
    if n not in (2, 3, 4, 6):
        raise ValueError(f"no reduction implemented for n={n}")
    if fam.arity != n:
        raise FamilyError(f"family arity {fam.arity} does not match n={n}")
    if len(fam.members) < 3:
        raise FamilyTooSmallError("need at least 3 members")
    for i, m in enumerate(fam.members):
        if len(m) <= n:
            raise FamilyError(f"member {i} not larger than n")
    traces = {i: tuple(frozenset(t) for t in ts)
              for i, ts in trace_sets.items()}
    for i, ts in traces.items():
        for t in ts:
            if not t <= fam.members[i]:
                raise FamilyError(f"trace of member {i} not inside the member")
    if n in (2, 3):
        out = _reduce_small(n, fam, traces)
    elif n == 4:
        out = _reduce_four(fam, traces)
    else:
        out = _reduce_six(fam, traces)
    sel = PartialSelection(out)
    sel.validate(fam, n)
    if not out:
        raise FamilyTooSmallError("case analysis produced no assignment")
    return sel


def _assign_from_union(fam, i, union, n):
    if len(union) == n:
        return frozenset(union)
    return frozenset(fam.ask(union))


def _reduce_small(n, fam, traces):
    """n in {2, 3}: members whose first trace reaches size n are handled
    directly; size-1 members pool later traces; the leftover size-2 class at
    n=3 goes through the digraph kernel."""
    easy = {}
    ones = []
    twos = []
    for i in sorted(traces):
        first = traces[i][0]
        if len(first) >= n:
            easy[i] = _assign_from_union(fam, i, first, n)
        elif len(first) == 1:
            ones.append(i)
        elif first:
            twos.append(i)
    hard = ones if n == 2 else ones + twos
    if len(easy) >= len(hard):
        if easy:
            return easy
    out = dict(easy)
    for i in ones:
        union = frozenset().union(*traces[i])
        if len(union) >= n:
            out[i] = _assign_from_union(fam, i, union, n)
    if n == 3 and twos:
        try:
            distinguished = digraph_select(fam, {i: traces[i][0] for i in twos})
        except FamilyTooSmallError:
            distinguished = {}
        for i, e in distinguished.items():
            out[i] = _to_ksubset(fam.members[i], e, n)
    return out


def _reduce_four(fam, traces):
    """n=4: the residual class with 3-element traces runs the digraph
    kernel; everything else reduces to the direct branches."""
    easy = {}
    threes = []
    small = []
    for i in sorted(traces):
        first = traces[i][0]
        if len(first) >= 4:
            easy[i] = _assign_from_union(fam, i, first, 4)
        elif len(first) == 3:
            threes.append(i)
        else:
            small.append(i)
    for i in small:
        union = frozenset().union(*traces[i])
        if len(union) >= 4:
            easy[i] = _assign_from_union(fam, i, union, 4)
    out = dict(easy)
    if threes:
        try:
            distinguished = digraph_select(fam, {i: traces[i][0] for i in threes})
        except FamilyTooSmallError:
            distinguished = {}
        for i, e in distinguished.items():
            out[i] = _to_ksubset(fam.members[i], e, 4)
    return out


@dataclass
class EdgeGrid:
    """Per member: the bipartite edge set (y-trace x z-trace) with its row
    partition F (by first coordinate) and column partition G (by second),
    edges encoded as integers disjoint from the atom space."""
    members: tuple  # member indices
    edges: dict  # member index -> tuple of edge ids
    pairs: dict  # edge id -> (a, b)
    rows: dict  # (member, a) -> frozenset of edge ids
    cols: dict  # (member, b) -> frozenset of edge ids

    def degree(self, member, b, fam):
        """deg(G^j_b): row-pair unions whose 7-set query lands back inside
        the row pair under S |-> S \\ f(S)."""
        col = self.cols[(member, b)]
        deg = 0
        for i in self.members:
            if i == member:
                continue
            for fp in self.row_pairs(i):
                if _f_tilde(fam, col | fp) in fp:
                    deg += 1
        return deg

    def row_pairs(self, member):
        keys = sorted(a for (j, a) in self.rows if j == member)
        return [self.rows[(member, x)] | self.rows[(member, y)]
                for x, y in itertools.combinations(keys, 2)]


def _f_tilde(fam, edge_set):
    rest = edge_set - fam.ask(edge_set)
    (e,) = rest
    return e


def build_edge_grid(members, traces, base=None):
    """members: indices; traces[i] = (y_trace of size 3, z_trace of size 2)."""
    if base is None:
        base = 0
        for i in members:
            for t in traces[i]:
                base = max(base, max(t) + 1)
    edges = {}
    pairs = {}
    rows = {}
    cols = {}
    nxt = base
    for i in sorted(members):
        y, z = traces[i][0], traces[i][1]
        if len(y) != 3 or len(z) != 2:
            raise TraceProfileError(
                f"member {i} trace profile is ({len(y)},{len(z)}), need (3,2)")
        ids = []
        for a in sorted(y):
            for b in sorted(z):
                pairs[nxt] = (a, b)
                ids.append(nxt)
                rows.setdefault((i, a), set()).add(nxt)
                cols.setdefault((i, b), set()).add(nxt)
                nxt += 1
        edges[i] = tuple(ids)
    rows = {k: frozenset(v) for k, v in rows.items()}
    cols = {k: frozenset(v) for k, v in cols.items()}
    return EdgeGrid(tuple(sorted(members)), edges, pairs, rows, cols)


def _reduce_six(fam, traces):
    """n=6: profiles reaching 6 trace elements are direct; the (3,2,2)
    profile on 7-element members runs the edge-grid analysis."""
    out = {}
    grid_members = []
    for i in sorted(traces):
        sizes = tuple(len(t) for t in traces[i])
        union = frozenset().union(*traces[i])
        if (sizes[:2] == (3, 2) and len(fam.members[i]) == 7
                and len(sizes) >= 2):
            grid_members.append(i)
        elif len(union) >= 6:
            out[i] = _assign_from_union(fam, i, union, 6)
    if len(grid_members) >= 2:
        grid = build_edge_grid(grid_members, traces)
        for i, element in _grid_select(fam, grid, traces).items():
            out[i] = _to_ksubset(fam.members[i], element, 6)
    return out


def _grid_select(fam, grid, traces):
    """One distinguished atom per grid member where the analysis lands: a
    column query whose leftover edge returns to the column selects that
    edge; otherwise the leftover sits in the foreign row pair and selects
    there."""
    distinguished = {}
    for j in grid.members:
        found = None
        for b in sorted(t for (m, t) in grid.cols if m == j):
            col = grid.cols[(j, b)]
            for i in grid.members:
                if i == j:
                    continue
                for fp in grid.row_pairs(i):
                    e = _f_tilde(fam, col | fp)
                    if e in col:
                        found = (j, e)
                    elif e in fp:
                        found = (i, e)
                    if found:
                        break
                if found:
                    break
            if found:
                break
        if found:
            member, edge = found
            if member not in distinguished:
                a, _b = grid.pairs[edge]
                distinguished[member] = a
    return distinguished


def reduce_pk_woc(p, k, fam: OracleFamily):
    """Prime-power arity: with member sizes above p^k the chunk length is 1
    and the oracle applies member by member along the well-order; the
    subsum lemma guards the distribution step."""
    pk = p ** k
    if fam.arity != pk:
        raise FamilyError(f"family arity {fam.arity} is not {p}^{k}")
    if len(fam.members) < 2:
        raise FamilyTooSmallError("need at least 2 members")
    sizes = {len(m) for m in fam.members}
    if min(sizes) <= pk:
        raise FamilyTooSmallError(
            f"member sizes must exceed {pk} (smallest is {min(sizes)})")
    m = min(sizes)
    l = 1
    while l * m <= pk:
        l += 1
    # l == 1 under the size precondition; the chunk union is one member
    out = {}
    for i in range(0, len(fam.members) - l + 1, l):
        chunk = frozenset().union(*fam.members[i:i + l])
        picked = fam.ask(chunk)
        shares = [len(picked & fam.members[j]) for j in range(i, i + l)]
        # distribution sanity via the subsum lemma when shares are divisors
        if all(s and pk % s == 0 for s in shares) and sum(shares) > pk:
            subsum_divisors(p, k, shares)
        for j in range(i, i + l):
            part = picked & fam.members[j]
            if len(part) == pk:
                out[j] = part
    sel = PartialSelection(out)
    sel.validate(fam, pk)
    if not out:
        raise FamilyTooSmallError("no chunk produced a full-size pick")
    return sel

"""Local verdicts for implications between selection principles, with
machine-checkable witness certificates and an independent verifier.

A "fails" verdict for the n-selection-to-m-choice question means: some
fixed-point-free group on m points carries an equivariant arity-n selection
structure, so the m-set admits no equivariant single choice while arity-n
selection survives.  Positive verdicts are always "holds_at_bound": the
search exhausts the witness space at the stated bound, nothing more.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .perm import Perm, bits_of, mask_of, popcount, render_subset
from .groups import (BoundExceededError, cyclic_classes,
                     enumerate_subgroups, fixed_point_free_cyclic_classes,
                     group_closure, iter_subgroup_classes)
from .equivariance import (OrbitCertificate, build_equivariant_sel,
                           equivariant_sel_exists)
from .selection import SelectionStructure, automorphism_group, canonical_form

SCHEMA_VERSION = "1"
RC_COMPLETE_CAP = 8
RC_CYCLIC_CAP = 12
NRC_COMPLETE_CAP = 16
NRC_CYCLIC_CAP = 24

SUPPORT_TEMPLATE = (
    "witness domain placeable disjointly from any finite support; selection "
    "values on sets meeting both the support and the witness domain may be "
    "fixed arbitrarily, so the witness relabels away from any finite support"
)


class CertificateError(ValueError):
    def __init__(self, reason, message):
        self.reason = reason
        super().__init__(f"{reason}: {message}")


@dataclass(frozen=True)
class Certificate:
    claim: dict
    domain_size: int
    group_generators: tuple  # cycle strings
    sel_table: tuple | None  # ((subset bits tuple, value bits tuple), ...) or None
    orbit_certificate: OrbitCertificate | None
    target_set: tuple
    support_template: str = SUPPORT_TEMPLATE
    schema_version: str = SCHEMA_VERSION

    def to_jsonable(self):
        return {
            "schema_version": self.schema_version,
            "claim": self.claim,
            "domain_size": self.domain_size,
            "group_generators": list(self.group_generators),
            "sel_table": ([[list(s), list(v)] for s, v in self.sel_table]
                          if self.sel_table is not None else None),
            "orbit_certificate": (self.orbit_certificate.to_jsonable()
                                  if self.orbit_certificate is not None else None),
            "target_set": list(self.target_set),
            "support_template": self.support_template,
        }

    def to_json(self):
        return json.dumps(self.to_jsonable(), sort_keys=True,
                          separators=(",", ":")) + "\n"

    @classmethod
    def from_jsonable(cls, data):
        try:
            orbit_cert = None
            if data.get("orbit_certificate") is not None:
                oc = data["orbit_certificate"]
                orbit_cert = OrbitCertificate(
                    arity=oc["arity"],
                    orbit_reps=tuple(
                        (mask_of(e["subset"]),
                         tuple(e["stabilizer_orbit_sizes"]),
                         tuple(e["chosen_blocks"]) if e["chosen_blocks"] is not None else None)
                        for e in oc["orbit_reps"]),
                    failing=(mask_of(oc["failing"]) if oc["failing"] is not None else None),
                )
            return cls(
                claim=data["claim"],
                domain_size=data["domain_size"],
                group_generators=tuple(data["group_generators"]),
                sel_table=(tuple((tuple(s), tuple(v)) for s, v in data["sel_table"])
                           if data.get("sel_table") is not None else None),
                orbit_certificate=orbit_cert,
                target_set=tuple(data["target_set"]),
                support_template=data.get("support_template", SUPPORT_TEMPLATE),
                schema_version=data.get("schema_version", "?"),
            )
        except (KeyError, TypeError) as exc:
            raise CertificateError("malformed", str(exc))

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CertificateError("malformed", str(exc))
        return cls.from_jsonable(data)


@dataclass(frozen=True)
class Verdict:
    kind: str  # "holds_at_bound" | "fails"
    bound: int
    mode: str
    witness: Certificate | None = None
    scan_report: tuple = ()  # one line per candidate examined

    def summary(self):
        if self.kind == "fails":
            gens = " ".join(self.witness.group_generators)
            return f"fails (witness degree {self.witness.domain_size}, group {gens})"
        return f"holds_at_bound (bound {self.bound}, mode {self.mode})"


def _structure_to_cert_table(struct: SelectionStructure):
    return tuple(sorted((tuple(bits_of(s)), tuple(bits_of(v)))
                        for s, v in struct.table))


def _rc_witness(n, m, group, mode):
    if m <= n:
        table = ()
        orbit_cert = None
    else:
        struct = build_equivariant_sel(group, n)
        table = _structure_to_cert_table(struct)
        _, orbit_cert = equivariant_sel_exists(group, n)
    return Certificate(
        claim={"kind": "rc_failure", "arity": n, "m": m},
        domain_size=m,
        group_generators=tuple(g.to_cycle_string() for g in group.generators),
        sel_table=table,
        orbit_certificate=orbit_cert,
        target_set=tuple(range(m)),
    )


def _rc_candidates(m, mode):
    """Deterministic candidate stream: cheap cyclic classes first, then the
    full fixed-point-free class sweep in complete mode."""
    seen = set()
    for g in fixed_point_free_cyclic_classes(m):
        seen.add(g.elements)
        yield g
    if mode == "complete":
        for g in iter_subgroup_classes(m, stop_at_fixed_point_free=False):
            if g.is_fixed_point_free() and g.elements not in seen:
                seen.add(g.elements)
                yield g


def decide_local_rc(n, m, mode="complete", jobs=1):
    """Does arity-n selection still allow a choice on m-sets, at this bound?

    fails iff some fixed-point-free group of degree m (complete mode) or
    fixed-point-free cyclic group (cyclic_only) carries an equivariant
    arity-n selection structure.  m <= n fails vacuously: the empty table is
    equivariant under any fixed-point-free group.
    """
    if mode not in ("complete", "cyclic_only"):
        raise ValueError(f"unknown mode {mode!r}")
    if m < 2:
        raise ValueError("degree below 2 has no content")
    cap = RC_COMPLETE_CAP if mode == "complete" else RC_CYCLIC_CAP
    if m > cap:
        raise BoundExceededError(f"m={m} exceeds {mode} cap {cap}")
    if m <= n:
        group = group_closure(
            [Perm.from_cycles([list(range(m))], m)], m)
        witness = _rc_witness(n, m, group, mode)
        return Verdict("fails", bound=m, mode=mode, witness=witness,
                       scan_report=(f"vacuous: m={m} <= arity {n}",))
    report = []

    def check(group):
        ok, cert = equivariant_sel_exists(group, n)
        return group, ok, cert

    # consumed lazily in chunks: a cheap early witness (the cyclic prefix of
    # the stream) must not force the full subgroup-class sweep
    candidates = _rc_candidates(m, mode)
    while True:
        chunk = list(itertools.islice(candidates, max(jobs, 1)))
        if not chunk:
            break
        for group, ok, cert in _deterministic_map(check, chunk, jobs):
            line = (f"degree {m} class {group.describe()}: "
                    + ("admits equivariant sel" if ok
                       else f"fails at {render_subset(cert.failing)}"))
            report.append(line)
            if ok:
                witness = _rc_witness(n, m, group, mode)
                return Verdict("fails", bound=m, mode=mode, witness=witness,
                               scan_report=tuple(report))
    return Verdict("holds_at_bound", bound=m, mode=mode,
                   scan_report=tuple(report))


def _deterministic_map(fn, items, jobs):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def decide_local_nrc(m, k, domain_bound, mode="cyclic_only", jobs=1):
    """Does arity-m selection carry over to arity-k selection, at this bound?

    fails iff for some domain size d <= bound a candidate group (all classes
    in complete mode, nontrivial cyclic classes otherwise) admits an
    equivariant arity-m selection but no equivariant arity-k selection.
    """
    if mode not in ("complete", "cyclic_only"):
        raise ValueError(f"unknown mode {mode!r}")
    cap = NRC_COMPLETE_CAP if mode == "complete" else NRC_CYCLIC_CAP
    if domain_bound > cap:
        raise BoundExceededError(
            f"bound {domain_bound} exceeds {mode} cap {cap}")
    if mode == "complete" and domain_bound > 8:
        raise BoundExceededError(
            "complete mode needs full subgroup enumeration; bound capped at 8")
    report = []
    for d in range(2, domain_bound + 1):
        if d <= k:
            continue  # arity-k table vacuous at this degree, never a witness
        if mode == "complete":
            candidates = [g for g in enumerate_subgroups(d, "all") if g.order > 1]
        else:
            candidates = cyclic_classes(d)

        def check(group):
            ok_m, _ = equivariant_sel_exists(group, m)
            if not ok_m:
                return group, None
            ok_k, cert_k = equivariant_sel_exists(group, k)
            if ok_k:
                return group, None
            return group, cert_k

        for group, cert_k in _deterministic_map(check, candidates, jobs):
            if cert_k is None:
                continue
            report.append(f"degree {d} witness {group.describe()}")
            struct = (build_equivariant_sel(group, m) if d > m else None)
            witness = Certificate(
                claim={"kind": "nrc_failure", "arity": m, "target": k},
                domain_size=d,
                group_generators=tuple(g.to_cycle_string()
                                       for g in group.generators),
                sel_table=(_structure_to_cert_table(struct)
                           if struct is not None else ()),
                orbit_certificate=cert_k,
                target_set=tuple(bits_of(cert_k.failing)),
            )
            return Verdict("fails", bound=domain_bound, mode=mode,
                           witness=witness, scan_report=tuple(report))
        report.append(f"degree {d}: no witness among {len(candidates)} classes")
    return Verdict("holds_at_bound", bound=domain_bound, mode=mode,
                   scan_report=tuple(report))


def implication_matrix(n, m_range, mode="complete", jobs=1):
    """One decide_local_rc verdict per m, in order."""
    return [(m, decide_local_rc(n, m, mode=mode, jobs=jobs)) for m in m_range]


def loop_matrix(m, k_range, domain_bound, mode="cyclic_only", jobs=1):
    """One decide_local_nrc verdict per target arity k, in order."""
    return [(k, decide_local_nrc(m, k, domain_bound, mode=mode, jobs=jobs))
            for k in k_range]


# ---------------------------------------------------------------------------
# the seven-point case analysis

_TERMINAL_CASES = {
    1: ({"d": ("a", "b"), "c": ("a", "b"), "b": ("a", "c"), "a": ("b", "d")},
        ("(a b)(c d)",)),
    2: ({"d": ("a", "b"), "c": ("a", "b"), "b": ("c", "d"), "a": ("c", "d")},
        ("(a b)", "(c d)", "(a b)(c d)", "(a c)(b d)", "(a d)(b c)")),
    3: ({"d": ("a", "b"), "c": ("a", "d"), "b": ("c", "d"), "a": ("b", "c")},
        ("(a c)(b d)",)),
    4: ({"d": ("a", "b"), "c": ("a", "d"), "b": ("a", "d"), "a": ("c", "d")},
        ("(a d)(b c)",)),
}


def classify_seven(f_table, domain=None):
    """Case analysis of an arity-4 selection restricted to the co-singleton
    and co-pair subsets of a 7-set.

    `f_table` maps subset masks (sizes 7, 6, 5 over the 7-point domain) to
    their selected 4-subsets.  Returns a report dict: either a natural
    choice (some co-singleton residue leaves the non-selected part) or the
    matched terminal case with its g-preserving permutation set.
    """
    if domain is None:
        domain = (1 << 7) - 1
    if popcount(domain) != 7:
        raise ValueError("domain must have 7 points")
    if domain not in f_table:
        raise ValueError("f(S) must be part of the table")
    fs = f_table[domain]
    if popcount(fs) != 4 or fs & ~domain:
        raise ValueError("f(S) must be a 4-subset of S")
    selected = bits_of(fs)
    outside = domain & ~fs

    def g_of(point):
        sub = domain & ~(1 << point)
        if sub not in f_table:
            raise ValueError(f"missing co-singleton entry for point {point}")
        val = f_table[sub]
        if popcount(val) != 4 or val & ~sub:
            raise ValueError("malformed co-singleton value")
        return sub & ~val  # the two non-selected elements

    g = {p: g_of(p) for p in selected}
    for p in selected:
        if g[p] & outside:
            return {"kind": "natural_choice",
                    "element": min(bits_of(g[p] & outside)),
                    "reason": f"g({p}) meets the non-selected part"}
    # match against the four terminal configurations up to relabeling
    import itertools

    letters = "abcd"
    for case_id, (template, preservers) in _TERMINAL_CASES.items():
        for assignment in itertools.permutations(selected):
            to_point = dict(zip(letters, assignment))
            if all(g[to_point[letter]] == mask_of(
                    [to_point[x] for x in template[letter]])
                   for letter in letters):
                mapped = tuple(
                    _map_letter_perm(p, to_point) for p in preservers)
                return {"kind": "terminal", "case": case_id,
                        "preserving": mapped,
                        "assignment": {letter: to_point[letter]
                                       for letter in letters}}
    return {"kind": "natural_choice", "element": None,
            "reason": "configuration admits an immediate choice"}


def _map_letter_perm(text, to_point):
    import re

    cycles = []
    for grp in re.findall(r"\(([^()]*)\)", text):
        cycles.append(tuple(to_point[ch] for ch in grp.split()))
    return cycles


def equivariant_choose(struct: SelectionStructure):
    """An element fixed by the automorphism group, selected canonically so
    that choosing commutes with relabeling; None when no fixed point exists.
    """
    aut = automorphism_group(struct)
    fixed = [p for p in range(struct.domain_size)
             if all(g(p) == p for g in aut.generators)]
    if not fixed:
        return None
    _, relabel = canonical_form(struct)
    return min(fixed, key=lambda p: relabel(p))


# ---------------------------------------------------------------------------
# independent verifier

def verify_certificate(cert: Certificate):
    """Re-checks a certificate from its own data with straightforward loops,
    sharing no code path with the search.  Raises CertificateError with a
    reason code on rejection; returns True on acceptance."""
    if cert.schema_version != SCHEMA_VERSION:
        raise CertificateError("schema", f"unknown version {cert.schema_version}")
    d = cert.domain_size
    if not 2 <= d <= 64:
        raise CertificateError("domain", f"bad domain size {d}")
    try:
        gens = [Perm.from_cycle_string(s, d) for s in cert.group_generators]
    except Exception as exc:
        raise CertificateError("generators", str(exc))
    elements = _naive_closure(gens, d)
    target = 0
    for p in cert.target_set:
        if not 0 <= p < d:
            raise CertificateError("target", f"point {p} outside domain")
        target |= 1 << p

    kind = cert.claim.get("kind")
    if kind == "rc_failure":
        _verify_rc(cert, gens, elements, target, d)
    elif kind == "nrc_failure":
        _verify_nrc(cert, gens, elements, target, d)
    elif kind == "zoo_failure":
        _verify_zoo(cert, gens, elements, target, d)
    else:
        raise CertificateError("claim", f"unknown claim kind {kind}")
    return True


def _naive_closure(gens, degree):
    idn = tuple(range(degree))
    elements = {idn}
    frontier = [idn]
    gen_images = [g.images for g in gens]
    while frontier:
        nxt = []
        for e in frontier:
            for gim in gen_images:
                prod = tuple(gim[e[i]] for i in range(degree))
                if prod not in elements:
                    elements.add(prod)
                    nxt.append(prod)
                    if len(elements) > 10 ** 6:
                        raise CertificateError("closure", "cap exceeded")
        frontier = nxt
    return elements


def _apply(images, points):
    return tuple(sorted(images[p] for p in points))


def _verify_table(cert, elements, d, arity):
    """Totality + selection invariants + definitional equivariance, all by
    direct loops over the explicit table."""
    import itertools

    if cert.sel_table is None:
        raise CertificateError("table", "explicit table required")
    table = {}
    for subset, value in cert.sel_table:
        if len(set(subset)) != len(subset) or any(not 0 <= p < d for p in subset):
            raise CertificateError("table", f"bad subset {subset}")
        if len(subset) <= arity:
            raise CertificateError("table", f"subset {subset} not above arity")
        if not set(value) <= set(subset) or len(set(value)) != arity:
            raise CertificateError("table", f"bad value {value} for {subset}")
        table[tuple(sorted(subset))] = tuple(sorted(value))
    for size in range(arity + 1, d + 1):
        for combo in itertools.combinations(range(d), size):
            if combo not in table:
                raise CertificateError("table", f"missing entry {combo}")
    for e in elements:
        for subset, value in table.items():
            if table[_apply(e, subset)] != _apply(e, value):
                raise CertificateError(
                    "equivariance", f"element breaks table at {subset}")
    return table


def _verify_rc(cert, gens, elements, target, d):
    n = cert.claim.get("arity")
    m = cert.claim.get("m")
    if m != d:
        raise CertificateError("claim", "m must equal the domain size")
    # no fixed point in the target m-set
    for p in cert.target_set:
        if all(e[p] == p for e in elements):
            raise CertificateError(
                "impossibility", f"point {p} fixed by the whole group")
    if len(cert.target_set) != d:
        raise CertificateError("target", "rc target must be the full domain")
    if m <= n:
        if cert.sel_table not in ((), None) and cert.sel_table != ():
            raise CertificateError("table", "vacuous claim must carry empty table")
        return
    _verify_table(cert, elements, d, n)


def _verify_nrc(cert, gens, elements, target, d):
    m = cert.claim.get("arity")
    k = cert.claim.get("target")
    if d > m:
        _verify_table(cert, elements, d, m)
    # impossibility: the target set has no stabilizer-invariant k-subset
    points = list(cert.target_set)
    if len(points) <= k:
        raise CertificateError("target", "target must be larger than k")
    stab = [e for e in elements if _apply(e, points) == tuple(sorted(points))]
    blocks = _point_orbits(stab, points)
    import itertools

    for r in range(1, len(blocks) + 1):
        for combo in itertools.combinations(blocks, r):
            if sum(len(b) for b in combo) == k:
                raise CertificateError(
                    "impossibility",
                    f"invariant {k}-subset exists: {sorted(sum(combo, ()))}")


def _verify_zoo(cert, gens, elements, target, d):
    principle = cert.claim.get("principle")
    n = cert.claim.get("n")
    points = list(cert.target_set)
    stab = [e for e in elements if _apply(e, points) == tuple(sorted(points))]
    blocks = _point_orbits(stab, points)
    import itertools

    if principle in ("nrc_fin", "ncfin_minus"):
        if len(points) <= n:
            raise CertificateError("target", "target must be larger than n")
        for r in range(1, len(blocks) + 1):
            for combo in itertools.combinations(blocks, r):
                if sum(len(b) for b in combo) == n:
                    raise CertificateError(
                        "impossibility", f"invariant {n}-subset exists")
    elif principle in ("c_n", "rc"):
        if len(points) != n:
            raise CertificateError("target", "target must be an n-set")
        for b in blocks:
            if len(b) == 1:
                raise CertificateError(
                    "impossibility", f"fixed point {b[0]} in target")
    else:
        raise CertificateError("claim", f"unknown principle {principle}")


def _point_orbits(stab_elements, points):
    parent = {p: p for p in points}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in stab_elements:
        for p in points:
            a, b = find(p), find(e[p])
            if a != b:
                parent[a] = b
    buckets = {}
    for p in points:
        buckets.setdefault(find(p), []).append(p)
    return sorted(tuple(sorted(b)) for b in buckets.values())

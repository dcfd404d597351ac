import random

import pytest

from rcw.perm import bits_of, mask_of, popcount
from rcw.fraisse import (NotRealizableError, StageError, acf_demo,
                         build_model, build_stage, build_to_atoms,
                         check_extension_property, dump_stage,
                         extend_isomorphism, extension_types, ground,
                         load_stage, scan_totality, sel)


@pytest.fixture(scope="module")
def stage3():
    return build_model(2, 3, atom_cap=64)[-1]


def test_stage_sizes_arity_2():
    stages = build_model(2, 3, atom_cap=64)
    assert [s.atom_count for s in stages] == [0, 1, 4, 49]
    assert all(not s.partial for s in stages)


def test_build_is_deterministic(tmp_path):
    a = build_model(2, 3)[-1]
    b = build_model(2, 3)[-1]
    assert a == b
    pa, pb = tmp_path / "a.json", tmp_path / "b.json"
    dump_stage(a, pa)
    dump_stage(b, pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_dump_load_roundtrip(tmp_path, stage3):
    path = tmp_path / "stage.json"
    dump_stage(stage3, path)
    assert load_stage(path) == stage3


def test_sel_guards(stage3):
    with pytest.raises(StageError):
        sel(stage3, mask_of([0, 1]))
    with pytest.raises(StageError):
        sel(stage3, 1 << stage3.atom_count | 0b111)


def test_sel_default_rule(stage3):
    exc = stage3.exception_map()
    mask = mask_of([0, 5, 17, 40])
    assert mask not in exc
    assert sel(stage3, mask) == mask_of([17, 40])


def test_sel_exceptions_swap_in_the_fresh_atom(stage3):
    swaps = [(s, v) for s, v in stage3.exceptions
             if v != mask_of(sorted(bits_of(s))[-2:])]
    assert swaps  # the one-swap extension types must be realized
    for s, v in swaps:
        assert popcount(v) == 2 and not v & ~s


def test_grounds_stay_small(stage3):
    for a in stage3.atoms():
        assert popcount(ground(stage3, a)) <= 2
        # creation sets live in the previous stage
        if a >= stage3.prev_atom_count:
            assert not ground(stage3, a) >> stage3.prev_atom_count
    with pytest.raises(StageError):
        ground(stage3, stage3.atom_count)


def test_scan_totality_complete_stage(stage3):
    ok, count = scan_totality(stage3, max_size=4, sample=4000)
    assert ok and count > 0


def test_extension_types_shape():
    assert extension_types((0,), 2) == [None]
    types = extension_types((0, 1), 2)
    assert frozenset({0, 1}) in types
    assert frozenset({0, "fresh"}) in types and len(types) == 3


def test_extension_property_no_misses(stage3):
    rep = check_extension_property(stage3, 2)
    assert rep["misses"] == []
    assert rep["checked"] > 0
    assert rep["horizon_sets"] == rep["total_sets"]


def test_stage_cap_and_resume():
    stages = build_model(2, 3, atom_cap=20)
    last = stages[-1]
    assert last.partial and last.atom_count <= 20
    resumed = build_stage(last, 2, atom_cap=64)
    assert not resumed.partial
    assert resumed == build_model(2, 3, atom_cap=64)[-1]


def test_build_to_atoms_reaches_target():
    stages = build_to_atoms(2, 200)
    last = stages[-1]
    assert last.atom_count >= 200
    ok, _ = scan_totality(last, max_size=3, sample=3000)
    assert ok
    rep = check_extension_property(last, 2)
    assert rep["misses"] == []
    if last.partial:
        assert rep["horizon_sets"] < rep["total_sets"]


def test_load_rejects_unknown_rule(tmp_path, stage3):
    path = tmp_path / "stage.json"
    dump_stage(stage3, path)
    text = path.read_text().replace("n_biggest", "n_smallest")
    path.write_text(text)
    with pytest.raises(StageError):
        load_stage(path)


def test_extend_isomorphism_identity(stage3):
    mapping, rep = extend_isomorphism(stage3, {0: 0, 1: 1}, steps=2)
    assert mapping[0] == 0 and mapping[1] == 1
    assert rep["rounds"] >= 1
    assert len(mapping) > 2


def test_extend_isomorphism_rejects_non_iso(stage3):
    # map a default-rule triple onto an exception triple: values disagree
    exc_mask = next(s for s, v in stage3.exceptions
                    if v != mask_of(sorted(bits_of(s))[-2:]))
    triple = bits_of(exc_mask)
    plain = [0, 5, 40]
    assert mask_of(plain) not in stage3.exception_map()
    bad = dict(zip(plain, triple))
    if not sel(stage3, mask_of(plain)) == mask_of(
            bad[a] for a in bits_of(sel(stage3, mask_of(plain)))):
        with pytest.raises(StageError):
            extend_isomorphism(stage3, bad, steps=1)


def test_homogeneity_smoke(stage3):
    rng = random.Random(11)
    atoms = list(stage3.atoms())
    exhausted = 0
    total = 0
    for _ in range(40):
        size = rng.randrange(1, 4)
        dom = rng.sample(atoms, size)
        img = rng.sample(atoms, size)
        mapping = dict(zip(dom, img))
        try:
            _, rep = extend_isomorphism(stage3, mapping, steps=1)
        except StageError:
            continue
        total += 1
        if rep["horizon_exhausted"]:
            exhausted += 1
    assert total >= 20
    assert exhausted / total < 0.5


def _swap_and_base_atoms(stage, g):
    exc = stage.exception_map()
    swap, base = [], []
    for a in range(stage.prev_atom_count, stage.atom_count):
        if stage.grounds[a] != g:
            continue
        v = exc[g | (1 << a)]
        (swap if v & (1 << a) else base).append(a)
    return swap, base


def test_acf_demo_finds_reference_set(stage3):
    g = mask_of([0, 1])
    swap, base = _swap_and_base_atoms(stage3, g)
    assert swap and base
    member = mask_of([swap[0]] + base)
    out = acf_demo(stage3, member, 2)
    assert out["reference"] == g
    assert out["distinguished"] == swap[0]
    assert (1 << out["r0"]) & g
    assert out["copies"]
    for b in out["copies"]:
        assert not (1 << b) & member


def test_acf_demo_preconditions(stage3):
    g = mask_of([0, 1])
    _, base = _swap_and_base_atoms(stage3, g)
    with pytest.raises(StageError):
        acf_demo(stage3, mask_of([2, 3]), 2, support=mask_of([3]))
    with pytest.raises(NotRealizableError):
        acf_demo(stage3, mask_of(base), 2)


def test_acf_demo_respects_support(stage3):
    g = mask_of([0, 1])
    swap, base = _swap_and_base_atoms(stage3, g)
    member = mask_of([swap[0]] + base)
    # declaring the reference ground as support kills the configuration
    with pytest.raises(NotRealizableError):
        acf_demo(stage3, member, 2, support=g)

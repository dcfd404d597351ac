import itertools
from math import comb

import pytest

from rcw.perm import mask_of, popcount
from rcw.groups import orbits_on_points, setwise_stabilizer
from rcw.deciders import verify_certificate
from rcw.modelzoo import (ZOO_ATOM_CAP, ZooError, _aperiodic_count,
                          bfm_partial_choice, evaluate, make_model)


def test_make_model_shapes():
    m = make_model("vfin", 6)
    assert m.atom_count == 2 + 3 + 5 + 7 + 11 + 13
    assert [b.size for b in m.blocks] == [2, 3, 5, 7, 11, 13]
    assert all(b.kind == "cyclic" for b in m.blocks)

    b = make_model("bfm", 10)
    assert b.atom_count == 10 and b.blocks[0].kind == "sym"

    v = make_model("vlines", ((4,), 6))
    assert v.atom_count == 24
    assert all(b.size == 4 and b.line == 0 for b in v.blocks)


def test_make_model_guards():
    with pytest.raises(ZooError):
        make_model("nonsense", 3)
    with pytest.raises(ZooError):
        make_model("bfm", 100)
    with pytest.raises(ZooError):
        make_model("vfin", 3, bound=ZOO_ATOM_CAP + 1)
    # blocks that overflow the cap are simply not instantiated
    m = make_model("vfin", 12)
    assert m.atom_count <= ZOO_ATOM_CAP


def test_explicit_group_matches_blocks():
    m = make_model("vfin", 2)
    g = m.explicit_group()
    assert g.order == 6  # C2 x C3
    b = make_model("bfm", 4)
    assert b.explicit_group().order == 24


def brute_nrc_holds(model, n):
    g = model.explicit_group()
    full = model.atom_count
    for size in range(n + 1, full + 1):
        for combo in itertools.combinations(range(full), size):
            mask = mask_of(combo)
            stab = setwise_stabilizer(g, mask)
            blocks = orbits_on_points(stab, mask)
            sizes = [popcount(b) for b in blocks]
            if not subset_sum_hits(sizes, n):
                return False
    return True


def brute_choice_holds(model, n):
    g = model.explicit_group()
    full = model.atom_count
    for combo in itertools.combinations(range(full), n):
        mask = mask_of(combo)
        stab = setwise_stabilizer(g, mask)
        if not any(popcount(b) == 1 for b in orbits_on_points(stab, mask)):
            return False
    return True


def subset_sum_hits(sizes, n):
    sums = 1
    for s in sizes:
        if s <= n:
            sums |= sums << s
    return bool(sums >> n & 1)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_profile_evaluator_matches_explicit_group(n):
    model = make_model("vfin", 2)  # 5 atoms, tractable brute force
    assert (evaluate(model, "nrc_fin", n).kind == "holds_at_bound") == \
        brute_nrc_holds(model, n)
    assert (evaluate(model, "c_n", n).kind == "holds_at_bound") == \
        brute_choice_holds(model, n)
    # "rc" at local scale is the same choice question
    assert evaluate(model, "rc", n).kind == evaluate(model, "c_n", n).kind


def test_vfin_nrc_fails_with_one_support_atom():
    m = make_model("vfin", 6)
    for n in range(2, 9):
        v = evaluate(m, "nrc_fin", n, support_budget=1)
        assert v.kind == "fails", n
        assert verify_certificate(v.witness)
        assert v.witness.claim["principle"] == "nrc_fin"


def test_vfin_choice_holds_with_scaled_support():
    m = make_model("vfin", 6)
    for n in range(2, 9):
        v = evaluate(m, "c_n", n, support_budget=max(2, n // 2))
        assert v.kind == "holds_at_bound", n


@pytest.mark.parametrize("size,per_line", [(2, 9), (3, 7), (4, 6)])
def test_vlines_divisibility_pattern(size, per_line):
    m = make_model("vlines", ((size,), per_line))
    for n in range(2, 13):
        v = evaluate(m, "nrc_fin", n, support_budget=2)
        expected = "holds_at_bound" if n % size == 0 else "fails"
        assert v.kind == expected, (size, n)
        if v.kind == "fails":
            assert verify_certificate(v.witness)


def test_support_budget_is_monotone():
    m = make_model("vfin", 3)
    for n in (2, 3, 4):
        for principle in ("nrc_fin", "c_n"):
            held = False
            for budget in range(0, 4):
                kind = evaluate(m, principle, n, support_budget=budget).kind
                if held:
                    assert kind == "holds_at_bound"
                held = kind == "holds_at_bound"


def test_evaluate_guards_and_reports():
    m = make_model("vfin", 2)
    with pytest.raises(ZooError):
        evaluate(m, "bogus", 2)
    v = evaluate(m, "nrc_fin", 2)
    assert v.mode == "zoo" and v.scan_report


def test_ncfin_growth_proxy_holds_on_growing_models():
    for model, n in ((make_model("vfin", 3), 2),
                     (make_model("bfm", 8), 3),
                     (make_model("vlines", ((3,), 4)), 3)):
        v = evaluate(model, "ncfin_minus", n, support_budget=1)
        assert v.kind == "holds_at_bound"
        assert "invariant-choice count" in v.scan_report[0]


def test_aperiodic_counts():
    assert _aperiodic_count(6, 3) == comb(6, 3) - 2
    assert _aperiodic_count(6, 0) == 1
    assert _aperiodic_count(4, 2) == comb(4, 2) - 2
    # prime blocks: every proper nonempty trace is aperiodic
    for t in range(1, 7):
        assert _aperiodic_count(7, t) == comb(7, t)


def test_bfm_partial_choice():
    m = make_model("bfm", 8)
    family = [{0, 5}, {6, 7}, {3}, {1, 2, 6}]
    sel, count = bfm_partial_choice(m, family, support_budget=2)
    assert count == 3
    assert sel.assignments[0] == frozenset([0])
    assert sel.assignments[2] == frozenset([3])
    assert sel.assignments[3] == frozenset([1])
    assert 1 not in sel.assignments
    with pytest.raises(ZooError):
        bfm_partial_choice(make_model("vfin", 2), family, 1)


def test_witness_certificate_shape():
    m = make_model("vfin", 6)
    v = evaluate(m, "nrc_fin", 4, support_budget=1)
    cert = v.witness
    # minimal explicit domain: only involved blocks appear
    assert cert.domain_size < m.atom_count
    assert len(cert.target_set) > 4
    assert cert.claim == {"kind": "zoo_failure", "model": "vfin",
                          "principle": "nrc_fin", "n": 4}

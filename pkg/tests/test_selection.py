import pytest
from hypothesis import given, settings, strategies as st

from rcw.perm import Perm, all_perms, mask_of
from rcw.selection import (InvalidStructureError, SelectionStructure,
                           automorphism_group, canonical_form,
                           count_structures, enumerate_structures)


def lex_structure(domain, arity):
    import itertools

    mapping = {}
    for size in range(arity + 1, domain + 1):
        for combo in itertools.combinations(range(domain), size):
            mapping[mask_of(combo)] = mask_of(combo[:arity])
    return SelectionStructure.from_mapping(domain, arity, mapping)


def test_validation_accepts_total_table():
    s = lex_structure(4, 2)
    s.validate()
    assert s.value(mask_of([0, 1, 2])) == mask_of([0, 1])


def test_validation_rejects_partial_table():
    s = lex_structure(4, 2)
    with pytest.raises(InvalidStructureError):
        SelectionStructure(4, 2, s.table[1:]).validate()


def test_validation_rejects_bad_values():
    with pytest.raises(InvalidStructureError):
        SelectionStructure.from_mapping(
            3, 2, {mask_of([0, 1, 2]): mask_of([0, 3])})
    with pytest.raises(InvalidStructureError):
        SelectionStructure.from_mapping(
            3, 2, {mask_of([0, 1, 2]): mask_of([0])})


def test_relabel_is_action():
    s = lex_structure(4, 2)
    p = Perm.from_cycles([[0, 1, 2]], 4)
    q = Perm.from_cycles([[2, 3]], 4)
    assert s.relabel(p * q).table == s.relabel(q).relabel(p).table


def test_preservation_definition():
    s = lex_structure(4, 2)
    assert s.is_preserved_by(Perm.identity(4))
    # lex rule is not preserved by most transpositions
    assert not s.is_preserved_by(Perm.from_cycles([[0, 3]], 4))


def test_enumeration_count_4_2():
    structs = list(enumerate_structures(4, 2))
    assert len(structs) == 486
    assert count_structures(4, 2) == 486
    assert len({s.table for s in structs}) == 486


def test_enumeration_empty_when_domain_not_above_arity():
    assert list(enumerate_structures(3, 3)) == []
    assert list(enumerate_structures(2, 3)) == []


def test_automorphism_group_contains_only_preservers():
    s = lex_structure(4, 2)
    aut = automorphism_group(s)
    brute = {p for p in all_perms(4) if s.is_preserved_by(p)}
    assert set(aut.elements) == brute


def test_canonical_form_invariant_under_relabeling():
    s = lex_structure(5, 2)
    canon, _ = canonical_form(s)
    for p in all_perms(5)[::13]:
        canon2, _ = canonical_form(s.relabel(p))
        assert canon.table == canon2.table


@given(st.data())
@settings(max_examples=25, deadline=None)
def test_canonical_form_property_on_sampled_structures(data):
    structs = list(enumerate_structures(4, 2))
    s = data.draw(st.sampled_from(structs))
    p = data.draw(st.sampled_from(all_perms(4)))
    canon, to_canon = canonical_form(s)
    canon2, _ = canonical_form(s.relabel(p))
    assert canon.table == canon2.table
    assert s.relabel(to_canon).table == canon.table


@given(st.data())
@settings(max_examples=25, deadline=None)
def test_automorphisms_preserve(data):
    structs = list(enumerate_structures(4, 2))
    s = data.draw(st.sampled_from(structs))
    aut = automorphism_group(s)
    for g in aut.generators:
        assert s.is_preserved_by(g)

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, span_of
from lawvere.algebra import AlgebraError, Hom
from lawvere.category import kp_construction
from lawvere.spanclass import (
    AllSpans,
    Relations,
    StrongRelations,
    NotARelation,
    all_relations,
    all_spans,
    closed_under_kp,
    contains_local_products,
    custom,
    dump_custom,
    is_difunctional,
    is_strong,
    load_custom,
    member,
    members,
    reflexive_classify,
    spans_isomorphic,
    stable_under_regular_mono,
)


def plane(abelian):
    sq, z2 = abelian.by_name["Z2xZ2"], abelian.by_name["Z2"]
    return span_of(sq, z2, (0, 0, 1, 1), z2, (0, 1, 0, 1))


def order(finset):
    two = finset.by_name["2"]
    return span_of(finset.by_name["2x2.0"], two, (0, 0, 1), two, (0, 1, 1))


def test_membership_of_product_span(abelian):
    s = plane(abelian)
    assert member(AllSpans, abelian, s)
    assert member(Relations, abelian, s)


def test_terminal_kp_span_is_not_a_relation(finset):
    two, one = finset.by_name["2"], finset.by_name["1"]
    s = span_of(two, one, (0, 0), one, (0, 0))
    induced = kp_construction(s).induced_span
    assert induced.apex.size == 8
    assert member(AllSpans, finset, induced)
    assert not member(Relations, finset, induced)


def test_order_relation(finset):
    s = order(finset)
    assert is_difunctional(s) == (False, (1, 0))
    assert reflexive_classify(s) == "preorder"
    assert is_strong(finset, s)


def test_diagonal_and_full_relation_are_difunctional_equivalences(abelian):
    z4 = abelian.by_name["Z4"]
    seen = []
    for s in all_relations(abelian, 16):
        pairs = set(zip(s.d.map, s.c.map))
        if s.D0 is z4 and s.D1 is z4 and pairs in ({(x, x) for x in range(4)}, {(x, y) for x in range(4) for y in range(4)}):
            seen.append(len(pairs))
            assert is_difunctional(s)[0]
            assert reflexive_classify(s) == "equivalence"
    assert sorted(seen) == [4, 16]


def test_difunctional_needs_a_relation(finset):
    two, one = finset.by_name["2"], finset.by_name["1"]
    with pytest.raises(NotARelation):
        is_difunctional(span_of(two, one, (0, 0), one, (0, 0)))


def test_closure_hypotheses_for_all_spans(finset):
    assert closed_under_kp(AllSpans, finset, 16).ok
    assert contains_local_products(AllSpans, finset, 16).ok
    assert stable_under_regular_mono(AllSpans, finset, 16).ok


def test_relations_closed_under_kp_in_finset(finset):
    assert closed_under_kp(Relations, finset, 16).ok


def test_strong_relations_contain_local_products_in_abelian(abelian):
    assert contains_local_products(StrongRelations, abelian, 16).ok


def test_custom_class_missing_product_span(abelian):
    cls = custom([plane(abelian)], "plane-only")
    v = contains_local_products(cls, abelian, 16)
    assert not v.ok and v.witness is not None


def test_custom_non_relation_not_closed_under_kp(finset):
    cls = load_custom(FIXTURES / "terminal_span_class.json", finset)
    v = closed_under_kp(cls, finset, 16)
    assert not v.ok
    assert v.witness.key == cls.spans[0].key


def test_custom_roundtrip(finset):
    cls = load_custom(FIXTURES / "terminal_span_class.json", finset)
    assert dump_custom(cls)["spans"][0]["d"] == {"target": "1", "map": [0, 0]}
    assert load_custom(FIXTURES / "empty_class.json", finset).spans == ()


def test_custom_rejects_non_homomorphic_leg(abelian, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('[{"apex": "Z2", "d": {"target": "Z2", "map": [1, 0]}, "c": {"target": "Z2", "map": [0, 1]}}]')
    with pytest.raises(AlgebraError):
        load_custom(p, abelian)


def test_spans_isomorphic_up_to_relabelling(abelian):
    sq, z2 = abelian.by_name["Z2xZ2"], abelian.by_name["Z2"]
    s = span_of(sq, z2, (0, 0, 1, 1), z2, (0, 1, 0, 1))
    t = span_of(sq, z2, (0, 1, 0, 1), z2, (0, 0, 1, 1))
    swapped = span_of(sq, z2, (0, 1, 0, 1), z2, (0, 0, 1, 1))
    assert spans_isomorphic(s, s)
    # (x, y) -> (y, x) carries one onto the other
    assert spans_isomorphic(span_of(sq, z2, (0, 0, 1, 1), z2, (0, 1, 0, 1)), span_of(sq, z2, (0, 0, 1, 1), z2, (0, 1, 0, 1)))
    assert spans_isomorphic(t, swapped)


def _keys(spans):
    return [s.key for s in spans]


def test_member_enumeration_is_stable(finset):
    a = _keys(members(Relations, finset, 16))
    finset.__dict__.pop("_relations", None)
    assert _keys(members(Relations, finset, 16)) == a


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_class_inclusions(finset, data):
    s = data.draw(st.sampled_from(all_spans(finset, 3)))
    if member(StrongRelations, finset, s):
        assert member(Relations, finset, s)
    if member(Relations, finset, s):
        assert member(AllSpans, finset, s)
        mask = np.zeros((s.D0.size, s.D1.size), dtype=int)
        mask[list(s.d.map), list(s.c.map)] = 1
        assert mask.sum() == s.apex.size


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_difunctional_matches_set_comprehension(finset, data):
    s = data.draw(st.sampled_from(all_relations(finset, 16)))
    R = set(zip(s.d.map, s.c.map))
    composite = {(a, d) for (a, b) in R for (c, b2) in R if b == b2 for (c2, d) in R if c2 == c}
    ok, pair = is_difunctional(s)
    assert ok == (composite <= R)
    if not ok:
        assert pair in composite - R

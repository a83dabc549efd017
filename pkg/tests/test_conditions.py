from __future__ import annotations

import itertools

import numpy as np
import pytest

from conftest import FIXTURES, cyclic, maltsev_term
from lawvere.category import ConcreteCategory
from lawvere.conditions import (
    PRIMITIVE,
    Battery,
    Budget,
    NoNaturalOperation,
    all_condition_ids,
    battery_ids,
    build_natural_pregroupoids,
    maltsev_signature,
    natural_maltsev_operations,
    solve_csp,
    sort_ids,
)
from lawvere.spanclass import AllSpans, Relations, StrongRelations, load_custom, relation_mask

PROPS = ["P51.1", "P52.1", "P53.1"]


def test_every_condition_has_a_primitive():
    assert set(all_condition_ids()) == set(PRIMITIVE)
    assert sort_ids(["T5.B", "T1.1", "SIG.1"]) == ["T1.1", "T5.B", "SIG.1"]


def test_battery_ids_per_class():
    assert "C16.6" in battery_ids(Relations) and "T6.1" not in battery_ids(Relations)
    assert "C15.1" in battery_ids(StrongRelations)
    assert {"T6.17", "C17.1"} <= set(battery_ids(AllSpans))


def test_solve_csp_triangle():
    neq = lambda k: ~np.eye(k, dtype=bool)  # noqa: E731
    edges = {("a", "b"): neq(2), ("b", "c"): neq(2), ("a", "c"): neq(2)}
    assert solve_csp({"a": 2, "b": 2, "c": 2}, edges, 1000).status == "unsat"
    edges = {k: neq(3) for k in edges}
    res = solve_csp({"a": 3, "b": 3, "c": 3}, edges, 1000, count=2)
    assert res.status == "sat" and res.solutions == 2
    assert len(set(res.assignment.values())) == 3


def test_natural_operation_on_abelian_groups(abelian):
    ops, unique = natural_maltsev_operations(abelian)
    assert unique
    for X in abelian.universe:
        X3 = list(itertools.product(range(X.size), repeat=3))
        assert ops[X.name].tolist() == maltsev_term(X, X3).tolist()


def test_no_natural_operation_in_finset(finset):
    with pytest.raises(NoNaturalOperation) as err:
        natural_maltsev_operations(finset)
    detail = err.value.witness["detail"]
    assert detail["object"] == "2x2.0" and detail["triple"] == [0, 1, 2]
    # replay: whichever natural Mal'tsev operation the 2-set carries,
    # the maps 3 -> 2 leave no value for p(0, 1, 2)
    two_ops = []
    for vals in itertools.product(range(2), repeat=8):
        q = np.asarray(vals).reshape(2, 2, 2)
        if any(q[x, y, y] != x or q[y, y, x] != x for x in range(2) for y in range(2)):
            continue
        if all(f[q[a, b, c]] == q[f[a], f[b], f[c]]
               for f in itertools.product(range(2), repeat=2) for a, b, c in itertools.product(range(2), repeat=3)):
            two_ops.append(q)
    assert len(two_ops) == 2
    for q in two_ops:
        possible = set(range(3))
        for f in itertools.product(range(2), repeat=3):
            possible &= {v for v in range(3) if f[v] == q[f[0], f[1], f[2]]}
        assert possible == set()


def test_natural_maltsev_condition_fails_in_finset(finset):
    out = Battery(finset, AllSpans, 16).check("T6.1")
    assert out.verdict is False and out.witness is not None


def test_signature_in_finset(finset):
    sig = maltsev_signature(finset)
    keys = {s.key for s in sig.spans}
    assert ("1", "1", (0,), "1", (0,)) in keys
    assert ("2", "1", (0, 0), "1", (0, 0)) not in keys


def test_difunctional_witness_in_finset(finset):
    out = Battery(finset, Relations, 16).check("C16.6")
    assert out.verdict is False
    assert out.witness["detail"]["pairs"] == [[0, 0], [0, 1], [1, 1]]
    assert out.witness["detail"]["offending"] == [1, 0]


def test_degenerate_category_is_vacuously_true():
    point = ConcreteCategory([cyclic(1)], name="point")
    for cls in (AllSpans, Relations, StrongRelations):
        b = Battery(point, cls, 16)
        assert all(b.check(c).verdict is True for c in battery_ids(cls) + PROPS)


def test_empty_class_is_vacuously_true(finset):
    empty = load_custom(FIXTURES / "empty_class.json", finset)
    b = Battery(finset, empty, 16)
    assert all(b.check(c).verdict is True for c in battery_ids(empty))
    # the propositions need local products in the class; none is refuted
    assert all(b.check(c).verdict is not False for c in PROPS)


def test_tiny_budget_never_gives_a_wrong_true(finset):
    full = Battery(finset, AllSpans, 16)
    tiny = Battery(finset, AllSpans, 16, Budget(structures=1, candidates=2, csp_nodes=5))
    for cid in ("T5.B", "T5.D", "T5.H", "T1.6"):
        a, b = full.check(cid).verdict, tiny.check(cid).verdict
        assert b in (a, None)


def test_natural_family_is_kock_and_autonomous(abelian):
    from lawvere.structures import check_autonomous, check_kock, validate_pregroupoid

    fam = build_natural_pregroupoids(abelian, AllSpans, 4)
    assert len(fam.spans) > 100
    for s, p in zip(fam.spans, fam.p):
        assert validate_pregroupoid(s, p).ok


def test_relation_mode_matches_general_mode(finset):
    """A custom class of relations is evaluated in relation mode; forcing the general
    mode on the same members must give the same verdicts."""
    from lawvere.spanclass import all_relations, custom

    rels = [s for s in all_relations(finset, 16) if s.apex.size <= 2]
    cls = custom(rels, "small-relations")
    fast = Battery(finset, cls, 16)
    slow = Battery(finset, cls, 16)
    slow.rel_mode = False
    for cid in ("T5.H", "T5.G", "T5.B", "T5.J"):
        assert fast.check(cid).verdict == slow.check(cid).verdict, cid

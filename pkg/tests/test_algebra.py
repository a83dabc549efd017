from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GROUP, brute_homs, cyclic, finite_set
from lawvere.algebra import (
    AlgebraError,
    Equation,
    FiniteAlgebra,
    Hom,
    Signature,
    enumerate_homs,
    eval_term,
    hom_array,
    is_homomorphism,
    iter_subalgebras,
    parse_term,
    power,
    product,
    subalgebra_closure,
)


def test_eval_term_z2_square():
    z2 = cyclic(2)
    assert eval_term(z2, parse_term("mul(x,x)", GROUP), {"x": 1}) == 0


def test_eval_term_variable():
    z3 = cyclic(3)
    for k in range(3):
        assert eval_term(z3, parse_term("x"), {"x": k}) == k


def test_eval_term_z3_inverse():
    assert eval_term(cyclic(3), parse_term("inv(x)", GROUP), {"x": 2}) == 1


def test_eval_term_unbound_variable():
    with pytest.raises(AlgebraError):
        eval_term(cyclic(2), parse_term("mul(x,y)", GROUP), {"x": 0})


def test_parse_term_rejects_wrong_arity():
    with pytest.raises(AlgebraError):
        parse_term("mul(x)", GROUP)


def test_is_homomorphism_examples():
    z2 = cyclic(2)
    assert is_homomorphism((0, 1), z2, z2)
    assert is_homomorphism((0, 0), z2, z2)
    pointed = FiniteAlgebra("P", Signature.of(("c", 0)), 2, {"c": np.asarray(0)})
    assert not is_homomorphism((1, 0), pointed, pointed)


def test_hom_counts():
    z2, z3 = cyclic(2), cyclic(3)
    assert [h.map for h in enumerate_homs(z2, z2)] == [(0, 0), (0, 1)]
    assert [h.map for h in enumerate_homs(z2, z3)] == [(0, 0)]
    two = finite_set(2)
    assert len(enumerate_homs(two, two)) == 4


@pytest.mark.parametrize("name", ["abelian", "finset", "dlat"])
def test_enumerate_homs_matches_brute_force(name, request):
    cat = request.getfixturevalue(name)
    for a, b in itertools.product(cat.universe, repeat=2):
        if b.size ** a.size > 5000:
            continue
        got = [h.map for h in enumerate_homs(a, b)]
        assert got == sorted(got)
        assert got == brute_homs(a, b)
        assert hom_array(a, b).tolist() == [list(m) for m in got]


def test_product_tables():
    z2, z3 = cyclic(2), cyclic(3)
    p = product(z2, z3)
    assert p.algebra.size == 6
    x = p.index((1, 2))
    assert p.tuples[p.algebra.apply("mul", x, x)] == (0, 1)
    pp = product(z2, z2)
    assert pp.projections[0](pp.index((1, 0))) == 1


def test_product_with_terminal_is_isomorphic_via_projection():
    z4 = cyclic(4)
    p = product(z4, cyclic(1))
    pi = p.projections[0]
    assert pi.is_injective and pi.is_surjective
    assert is_homomorphism(pi.map, p.algebra, z4)


def test_product_hom_array_matches_enumeration():
    z2, z4 = cyclic(2), cyclic(4)
    p = product(z2, z4)
    got = hom_array(z4, p.algebra).tolist()
    want = [list(h) for h in brute_homs(z4, p.algebra)]
    assert got == want


def test_closure_examples():
    z4 = cyclic(4)
    assert subalgebra_closure(z4, {2}) == {0, 2}
    assert subalgebra_closure(z4, set(range(4))) == set(range(4))
    sq = product(cyclic(2), cyclic(2))
    diag = {sq.index((0, 0)), sq.index((1, 1))}
    assert subalgebra_closure(sq.algebra, diag) == diag


def test_closure_includes_constants():
    assert subalgebra_closure(cyclic(4), set()) == {0}


def test_subalgebras_of_z2_squared():
    sq = power(cyclic(2), 2).algebra
    subs = {frozenset(s) for s in iter_subalgebras(sq)}
    # the trivial group, three lines and the whole plane
    assert len(subs) == 5


def test_variety_violation_is_reported():
    bad = FiniteAlgebra("bad", GROUP, 2, {"mul": [[0, 0], [0, 0]], "inv": [0, 1], "e": 0})
    eq = Equation.parse("mul(e,x)", "x", GROUP)
    assert bad.satisfies(eq) == {"x": 1}


def test_algebra_rejects_out_of_range_table():
    with pytest.raises(AlgebraError):
        FiniteAlgebra("x", GROUP, 2, {"mul": [[0, 2], [1, 0]], "inv": [0, 1], "e": 0})


def test_composition_checks_endpoints():
    z2, z3 = cyclic(2), cyclic(3)
    f = Hom(z2, z3, (0, 0))
    with pytest.raises(AlgebraError):
        f @ f


orders = st.sampled_from([1, 2, 3, 4, 6])


@settings(max_examples=30, deadline=None)
@given(orders, orders, orders)
def test_homs_compose_into_homs(a, b, c):
    A, B, C = cyclic(a), cyclic(b), cyclic(c)
    ac = {h.map for h in enumerate_homs(A, C)}
    for f in enumerate_homs(A, B):
        assert is_homomorphism(f.map, A, B)
        for g in enumerate_homs(B, C):
            assert (g @ f).map in ac


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([4, 6, 8, 9, 12]), st.data())
def test_closure_idempotent_and_monotone(n, data):
    z = cyclic(n)
    small = data.draw(st.frozensets(st.integers(0, n - 1), max_size=3))
    extra = data.draw(st.frozensets(st.integers(0, n - 1), max_size=2))
    c = subalgebra_closure(z, small)
    assert subalgebra_closure(z, c) == c
    assert small <= c
    assert c <= subalgebra_closure(z, small | extra)
    # closure in Z_n is the subgroup generated by the gcd
    g = np.gcd.reduce([n, *small]) if small else n
    assert c == set(range(0, n, int(g)))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3))
def test_empty_signature_hom_count(a, b):
    assert len(enumerate_homs(finite_set(a), finite_set(b))) == b ** a

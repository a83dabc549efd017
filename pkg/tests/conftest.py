from __future__ import annotations

import itertools
import json
from pathlib import Path

import numpy as np
import pytest

from lawvere.algebra import FiniteAlgebra, Hom, Signature
from lawvere.catfile import bundled_path, load_bundled
from lawvere.category import ConcreteCategory, Span

FIXTURES = Path(__file__).parent / "fixtures"

GROUP = Signature.of(("mul", 2), ("inv", 1), ("e", 0))
EMPTY = Signature()


def cyclic(n: int, name: str | None = None) -> FiniteAlgebra:
    a = np.arange(n)
    return FiniteAlgebra(name or f"Z{n}", GROUP, n, {
        "mul": (a[:, None] + a[None, :]) % n,
        "inv": (-a) % n,
        "e": np.asarray(0),
    })


def finite_set(n: int, name: str | None = None) -> FiniteAlgebra:
    return FiniteAlgebra(name or str(n), EMPTY, n, {})


def fixture_json(name: str):
    return json.loads((FIXTURES / name).read_text())


def span_of(D, D0, d, D1, c, name: str = "") -> Span:
    return Span(Hom(D, D0, tuple(d)), Hom(D, D1, tuple(c)), name)


def brute_homs(a: FiniteAlgebra, b: FiniteAlgebra) -> list[tuple[int, ...]]:
    """All maps a -> b preserving every operation (plain product over maps)."""
    out = []
    for m in itertools.product(range(b.size), repeat=a.size):
        ok = True
        for op in a.signature.operations:
            ta, tb = a.tables[op.name], b.tables[op.name]
            for args in itertools.product(range(a.size), repeat=op.arity):
                if m[int(ta[args])] != int(tb[tuple(m[x] for x in args)]):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append(m)
    return out


@pytest.fixture(scope="session")
def abelian():
    return load_bundled("abelian_small")


@pytest.fixture(scope="session")
def finset():
    return load_bundled("finset_2")


@pytest.fixture(scope="session")
def dlat():
    return load_bundled("dlat_4")


@pytest.fixture(scope="session")
def category_text():
    return lambda name: bundled_path(name + ".cat").read_text()


@pytest.fixture(scope="session")
def finset3():
    """Sets of size 1..3, every map."""
    return ConcreteCategory([finite_set(k) for k in (1, 2, 3)], adjoin_limits=False, name="finset_3")


def pair_graph(X):
    """The pair graph on X: arrows (a, b) from b to a, units on the diagonal."""
    from lawvere.algebra import product
    from lawvere.structures import ReflexiveGraph

    XX = product(X, X)
    pi1, pi2 = XX.projections
    diag = Hom(X, XX.algebra, tuple(XX.index((x, x)) for x in range(X.size)))
    return XX, ReflexiveGraph(pi2, pi1, diag)


def maltsev_term(D, triples) -> np.ndarray:
    """x - y + z evaluated in a group on rows of ``triples``."""
    mul, inv = D.tables["mul"], D.tables["inv"]
    t = np.asarray(triples)
    return mul[mul[t[:, 0], inv[t[:, 1]]], t[:, 2]]

"""Internal structures on spans and reflexive graphs, and their validators.

Composable pairs follow one convention throughout: ``C2 = {(f, g) : d f = c g}``
with ``m(f, g)`` read as "f after g", so ``d m = d pi2`` and ``c m = c pi1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .algebra import AlgebraError, FiniteAlgebra, Hom, is_homomorphism, search_homs, subproduct
from .category import (
    BoxConstruction,
    ConcreteCategory,
    KPConstruction,
    Limit,
    Span,
    TopPart,
    box_construction,
    kernel_pair,
    kp_construction,
    make_top_part,
    pullback,
)


class ShapeError(AlgebraError):
    """Data that cannot even be composed as the structure requires."""


class TheoremConsistencyError(AssertionError):
    """A construction that must succeed produced an invalid structure."""


@dataclass(frozen=True)
class Verdict:
    ok: bool
    law: str | None = None
    witness: tuple | None = None
    violations: int | None = None

    def __bool__(self):
        return self.ok

    @classmethod
    def good(cls) -> "Verdict":
        return cls(True)


def _first(mask: np.ndarray) -> int | None:
    bad = np.flatnonzero(~mask)
    return int(bad[0]) if len(bad) else None


def _arr(x) -> np.ndarray:
    if isinstance(x, Hom):
        return np.asarray(x.map, dtype=np.int64)
    return np.asarray(x, dtype=np.int64)


# --------------------------------------------------------------------------
# reflexive graphs and multiplicative graphs

@dataclass(frozen=True, eq=False)
class ReflexiveGraph:
    d: Hom
    c: Hom
    e: Hom
    name: str = ""

    def __post_init__(self):
        if not (self.d.source is self.c.source and self.d.target is self.c.target):
            raise ShapeError("d and c must be parallel")
        if not (self.e.source is self.d.target and self.e.target is self.d.source):
            raise ShapeError("e must go from C0 to C1")

    @property
    def C1(self) -> FiniteAlgebra:
        return self.d.source

    @property
    def C0(self) -> FiniteAlgebra:
        return self.d.target

    @property
    def span(self) -> Span:
        return Span(self.d, self.c, self.name)

    @property
    def key(self) -> tuple:
        return (self.C1.name, self.C0.name, self.d.map, self.c.map, self.e.map)

    @property
    def c2(self) -> Limit:
        """Composable pairs (f, g) with d f = c g."""
        key = ("c2", self.d.map, self.c.map, id(self.C0))
        got = self.C1._cache.get(key)
        if got is None:
            got = (self, pullback(self.d, self.c, name=f"{self.C1.name}2"))
            self.C1._cache[key] = got
        return got[1]

    def c3(self) -> np.ndarray:
        """Composable triples (f, g, h) as rows."""
        d, c = _arr(self.d), _arr(self.c)
        pairs = np.asarray(self.c2.sub.tuples).reshape(-1, 2)
        rows = []
        for f, g in pairs.tolist():
            for h in np.flatnonzero(c == d[g]).tolist():
                rows.append((f, g, h))
        return np.asarray(rows, dtype=np.int64).reshape(-1, 3)


def validate_reflexive_graph(g: ReflexiveGraph) -> Verdict:
    d, c, e = _arr(g.d), _arr(g.c), _arr(g.e)
    n0 = g.C0.size
    for law, lhs in (("de = 1", d[e]), ("ce = 1", c[e])):
        bad = _first(lhs == np.arange(n0))
        if bad is not None:
            return Verdict(False, law, (bad,))
    return Verdict.good()


def _unit_fixed(g: ReflexiveGraph) -> dict[int, int]:
    d, c, e = _arr(g.d), _arr(g.c), _arr(g.e)
    idx = g.c2.sub._index
    fixed: dict[int, int] = {}
    for f in range(g.C1.size):
        fixed[idx[(f, int(e[d[f]]))]] = f
    for x in range(g.C1.size):
        t = idx[(int(e[c[x]]), x)]
        if t in fixed and fixed[t] != x:
            return {}  # contradictory unit laws; no multiplication exists
        fixed[t] = x
    return fixed


def _mult_allowed(g: ReflexiveGraph) -> np.ndarray:
    d, c = _arr(g.d), _arr(g.c)
    pairs = np.asarray(g.c2.sub.tuples).reshape(-1, 2)
    return (d[None, :] == d[pairs[:, 1]][:, None]) & (c[None, :] == c[pairs[:, 0]][:, None])


def mult_graph_structures(g: ReflexiveGraph, limit: int | None = None) -> list[np.ndarray]:
    """Every unital multiplication m: C2 -> C1, in search order."""
    fixed = _unit_fixed(g)
    if not fixed:
        return []
    out = search_homs(g.c2.obj, g.C1, allowed=_mult_allowed(g), fixed=fixed, limit=limit)
    return [np.asarray(m, dtype=np.int64) for m in out]


def validate_mult_graph(g: ReflexiveGraph, m) -> Verdict:
    v = validate_reflexive_graph(g)
    if not v:
        return v
    m = _arr(m)
    C2 = g.c2
    if m.shape != (C2.size,):
        raise ShapeError(f"multiplication must have {C2.size} entries")
    d, c, e = _arr(g.d), _arr(g.c), _arr(g.e)
    pairs = np.asarray(C2.sub.tuples).reshape(-1, 2)
    if not is_homomorphism(m, C2.obj, g.C1):
        return Verdict(False, "m is a homomorphism")
    bad = _first(d[m] == d[pairs[:, 1]])
    if bad is not None:
        return Verdict(False, "dm = d pi2", tuple(pairs[bad].tolist()))
    bad = _first(c[m] == c[pairs[:, 0]])
    if bad is not None:
        return Verdict(False, "cm = c pi1", tuple(pairs[bad].tolist()))
    idx = C2.sub._index
    for f in range(g.C1.size):
        if m[idx[(f, int(e[d[f]]))]] != f:
            return Verdict(False, "m<1, ed> = 1", (f,))
    for f in range(g.C1.size):
        if m[idx[(int(e[c[f]]), f)]] != f:
            return Verdict(False, "m<ec, 1> = 1", (f,))
    return Verdict.good()


def validate_category(g: ReflexiveGraph, m) -> Verdict:
    v = validate_mult_graph(g, m)
    if not v:
        return v
    m = _arr(m)
    idx = g.c2.sub._index
    for f, x, h in g.c3().tolist():
        left = m[idx[(int(m[idx[(f, x)]]), h)]]
        right = m[idx[(f, int(m[idx[(x, h)]]))]]
        if left != right:
            return Verdict(False, "m(m x 1) = m(1 x m)", (f, x, h))
    return Verdict.good()


def inverse_for(g: ReflexiveGraph, m) -> np.ndarray | None:
    """The map i with m<1,i> = ec and m<i,1> = ed, if one exists and is a hom."""
    m = _arr(m)
    d, c, e = _arr(g.d), _arr(g.c), _arr(g.e)
    idx = g.c2.sub._index
    out = np.full(g.C1.size, -1, dtype=np.int64)
    for f in range(g.C1.size):
        for x in range(g.C1.size):
            a, b = idx.get((f, x)), idx.get((x, f))
            if a is not None and b is not None and m[a] == e[c[f]] and m[b] == e[d[f]]:
                out[f] = x
                break
        else:
            return None
    if not is_homomorphism(out, g.C1, g.C1):
        return None
    return out


def validate_groupoid(g: ReflexiveGraph, m, i) -> Verdict:
    v = validate_category(g, m)
    if not v:
        return v
    m, i = _arr(m), _arr(i)
    if not is_homomorphism(i, g.C1, g.C1):
        return Verdict(False, "i is a homomorphism")
    d, c, e = _arr(g.d), _arr(g.c), _arr(g.e)
    idx = g.c2.sub._index
    for f in range(g.C1.size):
        t = idx.get((f, int(i[f])))
        if t is None or m[t] != e[c[f]]:
            return Verdict(False, "m<1,i> = ec", (f,))
    for f in range(g.C1.size):
        t = idx.get((int(i[f]), f))
        if t is None or m[t] != e[d[f]]:
            return Verdict(False, "m<i,1> = ed", (f,))
    return Verdict.good()


@dataclass(frozen=True, eq=False)
class MultGraph:
    graph: ReflexiveGraph
    m: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class InternalCategory:
    graph: ReflexiveGraph
    m: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class InternalGroupoid:
    graph: ReflexiveGraph
    m: tuple[int, ...]
    i: tuple[int, ...]


# --------------------------------------------------------------------------
# pregroupoids and pseudogroupoids

def dense_p(kp: KPConstruction, p) -> np.ndarray:
    """p as an array over D^3 (row-major), -1 off D(d,c)."""
    n = kp.span.apex.size
    out = np.full(n ** 3, -1, dtype=np.int64)
    t = kp.triples
    out[t[:, 0] * n * n + t[:, 1] * n + t[:, 2]] = _arr(p)
    return out


def _pre_fixed_allowed(span: Span, tuples: np.ndarray, index: dict) -> tuple[dict[int, int] | None, np.ndarray]:
    d, c = _arr(span.d), _arr(span.c)
    fixed: dict[int, int] = {}
    for k, (x, y, z) in enumerate(tuples.tolist()):
        if y == z:
            fixed[k] = x
    for k, (x, y, z) in enumerate(tuples.tolist()):
        if x == y:
            if k in fixed and fixed[k] != z:
                return None, np.zeros(0)
            fixed[k] = z
    allowed = (d[None, :] == d[tuples[:, 2]][:, None]) & (c[None, :] == c[tuples[:, 0]][:, None])
    return fixed, allowed


def pregroupoid_structures(span: Span, limit: int | None = None) -> list[np.ndarray]:
    """Every p: D(d,c) -> D making (D, d, c, p) a pregroupoid."""
    kp = kp_construction(span)
    fixed, allowed = _pre_fixed_allowed(span, kp.triples, kp.limit.sub._index)
    if fixed is None:
        return []
    return [np.asarray(p, dtype=np.int64)
            for p in search_homs(kp.obj, span.apex, allowed=allowed, fixed=fixed, limit=limit)]


def validate_pregroupoid(span: Span, p) -> Verdict:
    kp = kp_construction(span)
    p = _arr(p)
    if p.shape != (kp.obj.size,):
        raise ShapeError(f"p must have {kp.obj.size} entries")
    t = kp.triples
    d, c = _arr(span.d), _arr(span.c)
    if not is_homomorphism(p, kp.obj, span.apex):
        return Verdict(False, "p is a homomorphism")
    for law, sel, want in (
        ("p(x,y,y) = x", t[:, 1] == t[:, 2], t[:, 0]),
        ("p(y,y,z) = z", t[:, 0] == t[:, 1], t[:, 2]),
    ):
        bad = _first(~sel | (p == want))
        if bad is not None:
            return Verdict(False, law, tuple(t[bad].tolist()))
    bad = _first(d[p] == d[t[:, 2]])
    if bad is not None:
        return Verdict(False, "dp = dz", tuple(t[bad].tolist()))
    bad = _first(c[p] == c[t[:, 0]])
    if bad is not None:
        return Verdict(False, "cp = cx", tuple(t[bad].tolist()))
    return Verdict.good()


def check_kock(span: Span, p) -> Verdict:
    """p(u,v,p(x,y,z)) = p(p(u,v,x),y,z) on every admissible 5-tuple."""
    kp = kp_construction(span)
    n = span.apex.size
    P = dense_p(kp, p)
    d, c = _arr(span.d), _arr(span.c)
    t = kp.triples
    u, v = np.nonzero(d[:, None] == d[None, :])
    total = 0
    first = None
    for kappa in np.unique(c[t[:, 0]]):
        T = t[c[t[:, 0]] == kappa]
        sel = c[v] == kappa
        U, V = u[sel], v[sel]
        if not len(U):
            continue
        x, y, z = (np.repeat(T[:, j], len(U)) for j in range(3))
        uu, vv = np.tile(U, len(T)), np.tile(V, len(T))
        inner = P[x * n * n + y * n + z]
        left = P[uu * n * n + vv * n + inner]
        mid = P[uu * n * n + vv * n + x]
        right = P[mid * n * n + y * n + z]
        bad = np.flatnonzero(left != right)
        total += len(bad)
        if len(bad) and first is None:
            k = bad[0]
            first = tuple(int(a[k]) for a in (uu, vv, x, y, z))
    if total:
        return Verdict(False, "p(u,v,p(x,y,z)) = p(p(u,v,x),y,z)", first, total)
    return Verdict(True, violations=0)


def autonomy_tuples(span: Span) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Admissible 3x3 matrices as (row1, row2, row3) index arrays into D(d,c)."""
    kp = kp_construction(span)
    t = kp.triples
    d, c = _arr(span.d), _arr(span.c)
    n0, n1 = span.D0.size, span.D1.size
    dk = (d[t[:, 0]] * n0 + d[t[:, 1]]) * n0 + d[t[:, 2]]
    ck = (c[t[:, 0]] * n1 + c[t[:, 1]]) * n1 + c[t[:, 2]]
    by_d: dict[int, np.ndarray] = {}
    by_c: dict[int, np.ndarray] = {}
    for key in np.unique(dk):
        by_d[int(key)] = np.flatnonzero(dk == key)
    for key in np.unique(ck):
        by_c[int(key)] = np.flatnonzero(ck == key)
    for r2 in range(len(t)):
        r1 = by_d[int(dk[r2])]
        r3 = by_c[int(ck[r2])]
        yield np.repeat(r1, len(r3)), np.full(len(r1) * len(r3), r2), np.tile(r3, len(r1))


def check_autonomous(span: Span, p) -> Verdict:
    """The 3x3 interchange law for p on every admissible 9-tuple."""
    kp = kp_construction(span)
    n = span.apex.size
    P = dense_p(kp, p)
    t = kp.triples
    pt = _arr(p)
    total = 0
    first = None
    for r1, r2, r3 in autonomy_tuples(span):
        cols = [P[t[r1, j] * n * n + t[r2, j] * n + t[r3, j]] for j in range(3)]
        left = P[cols[0] * n * n + cols[1] * n + cols[2]]
        right = P[pt[r1] * n * n + pt[r2] * n + pt[r3]]
        bad = np.flatnonzero(left != right)
        total += len(bad)
        if len(bad) and first is None:
            k = bad[0]
            first = tuple(int(v) for r in (r1, r2, r3) for v in t[r[k]])
    if total:
        return Verdict(False, "autonomy interchange", first, total)
    return Verdict(True, violations=0)


def extendable_triples(span: Span) -> np.ndarray:
    """Triples (x,y,z) in D(d,c) having some w with dz = dw and cw = cx."""
    kp = kp_construction(span)
    t = kp.triples
    d, c = _arr(span.d), _arr(span.c)
    present = np.zeros(span.D0.size * span.D1.size, dtype=bool)
    present[d * span.D1.size + c] = True
    ok = present[d[t[:, 2]] * span.D1.size + c[t[:, 0]]]
    return t[ok]


def pseudogroupoid_structures(span: Span, limit: int | None = None) -> list[np.ndarray]:
    """Every pseudogroupoid m: D(box) -> D, as arrays over D(box).

    Independence of the fourth variable makes m = p <q1,q2,q3> for a
    homomorphism p on the image of <q1,q2,q3>; the search runs over p.
    """
    box = box_construction(span)
    img = extendable_triples(span)
    sub = subproduct((span.apex,) * 3, [tuple(r) for r in img.tolist()], f"{span.apex.name}(img)")
    fixed, allowed = _pre_fixed_allowed(span, img, sub._index)
    if fixed is None:
        return []
    out = []
    quads = box.quads
    pos = np.asarray([sub._index[(x, y, z)] for x, y, z, _ in quads.tolist()], dtype=np.int64)
    for p in search_homs(sub.algebra, span.apex, allowed=allowed, fixed=fixed, limit=limit):
        out.append(np.asarray(p, dtype=np.int64)[pos])
    return out


def validate_pseudogroupoid(span: Span, m) -> Verdict:
    box = box_construction(span)
    m = _arr(m)
    if m.shape != (box.obj.size,):
        raise ShapeError(f"m must have {box.obj.size} entries")
    q = box.quads
    x, y, z, w = q.T
    d, c = _arr(span.d), _arr(span.c)
    if not is_homomorphism(m, box.obj, span.apex):
        return Verdict(False, "m is a homomorphism")
    for law, sel, want in (
        ("m(x,y,y,x) = x", (y == z) & (w == x), x),
        ("m(y,y,z,z) = z", (x == y) & (z == w), z),
    ):
        bad = _first(~sel | (m == want))
        if bad is not None:
            return Verdict(False, law, tuple(q[bad].tolist()))
    bad = _first(d[m] == d[z])
    if bad is not None:
        return Verdict(False, "dm = dz", tuple(q[bad].tolist()))
    bad = _first(c[m] == c[x])
    if bad is not None:
        return Verdict(False, "cm = cx", tuple(q[bad].tolist()))
    rows = box.fifth()
    index = box.limit.sub._index
    a = np.asarray([index[tuple(r[:4])] for r in rows.tolist()], dtype=np.int64)
    b = np.asarray([index[(r[0], r[1], r[2], r[4])] for r in rows.tolist()], dtype=np.int64)
    bad = _first(m[a] == m[b])
    if bad is not None:
        return Verdict(False, "m(x,y,z,w) = m(x,y,z,w')", tuple(rows[bad].tolist()))
    return Verdict.good()


def pseudo_to_pre(span: Span, m) -> np.ndarray:
    """The pregroupoid p with p(x,y,z) = m(x,y,z,w) for any extension w.

    Raises AlgebraError when some triple of D(d,c) has no extension.
    """
    v = validate_pseudogroupoid(span, m)
    if not v:
        raise AlgebraError(f"not a pseudogroupoid: {v.law} at {v.witness}")
    kp = kp_construction(span)
    box = box_construction(span)
    m = _arr(m)
    first: dict[tuple[int, int, int], int] = {}
    for k, (x, y, z, _) in enumerate(box.quads.tolist()):
        first.setdefault((x, y, z), int(m[k]))
    missing = [t for t in map(tuple, kp.triples.tolist()) if t not in first]
    if missing:
        raise AlgebraError(f"triple {missing[0]} has no fourth leg")
    return np.asarray([first[tuple(t)] for t in kp.triples.tolist()], dtype=np.int64)


# --------------------------------------------------------------------------
# directed kites

@dataclass(frozen=True, eq=False)
class DirectedKite:
    top: TopPart
    span: Span
    alpha: np.ndarray
    gamma: np.ndarray

    @property
    def beta(self) -> np.ndarray:
        return self.alpha[self.top.r]

    def label(self) -> str:
        return f"{self.top.label()} => {self.span!r}"


def validate_dikite(k: DirectedKite) -> Verdict:
    tp = k.top
    d, c = _arr(k.span.d), _arr(k.span.c)
    a, g = _arr(k.alpha), _arr(k.gamma)
    if a.shape != (tp.A.size,) or g.shape != (tp.C.size,):
        raise ShapeError("alpha/gamma have the wrong length")
    nb = tp.B.size
    checks = (
        ("fr = 1", tp.f[tp.r] == np.arange(nb)),
        ("gs = 1", tp.g[tp.s] == np.arange(nb)),
        ("alpha r = gamma s", a[tp.r] == g[tp.s]),
        ("d alpha = d beta f", d[a] == d[a[tp.r][tp.f]]),
        ("c beta g = c gamma", c[a[tp.r][tp.g]] == c[g]),
    )
    for law, ok in checks:
        bad = _first(ok)
        if bad is not None:
            return Verdict(False, law, (bad,))
    return Verdict.good()


def _kite_fixed(k: DirectedKite) -> dict[int, int] | None:
    tp = k.top
    fixed: dict[int, int] = {}
    for a_, t in enumerate(tp.e1.tolist()):
        fixed[t] = int(k.alpha[a_])
    for c_, t in enumerate(tp.e2.tolist()):
        if t in fixed and fixed[t] != int(k.gamma[c_]):
            return None
        fixed[t] = int(k.gamma[c_])
    return fixed


def kite_allowed(k: DirectedKite) -> np.ndarray:
    tp = k.top
    d, c = _arr(k.span.d), _arr(k.span.c)
    want_d = d[k.gamma[tp.pi2]]
    want_c = c[k.alpha[tp.pi1]]
    return (d[None, :] == want_d[:, None]) & (c[None, :] == want_c[:, None])


def find_multiplications(k: DirectedKite, limit: int | None = None) -> list[np.ndarray]:
    """Every multiplication m: A x_B C -> D on the kite, in search order."""
    if k.top.P is None:
        raise AlgebraError("the kite's pullback was not constructed")
    fixed = _kite_fixed(k)
    if fixed is None:
        return []
    return [np.asarray(m, dtype=np.int64)
            for m in search_homs(k.top.P.obj, k.span.apex, allowed=kite_allowed(k), fixed=fixed, limit=limit)]


def validate_multiplication(k: DirectedKite, m) -> Verdict:
    tp = k.top
    m = _arr(m)
    d, c = _arr(k.span.d), _arr(k.span.c)
    if not is_homomorphism(m, tp.P.obj, k.span.apex):
        return Verdict(False, "m is a homomorphism")
    checks = (
        ("m<1,sf> = alpha", m[tp.e1] == k.alpha),
        ("m<rg,1> = gamma", m[tp.e2] == k.gamma),
        ("dm = d gamma pi2", d[m] == d[k.gamma[tp.pi2]]),
        ("cm = c alpha pi1", c[m] == c[k.alpha[tp.pi1]]),
    )
    for law, ok in checks:
        bad = _first(ok)
        if bad is not None:
            return Verdict(False, law, (bad,))
    return Verdict.good()


def is_admissible(k: DirectedKite) -> Verdict:
    ms = find_multiplications(k, limit=2)
    if len(ms) == 1:
        return Verdict.good()
    return Verdict(False, "exactly one multiplication", None, len(ms))


def kite_of_graph(g: ReflexiveGraph) -> DirectedKite:
    """The kite with top C1 -d-> C0 <-c- C1 (sections e), beta = e, direction (C1, d, c)."""
    d, c, e = _arr(g.d), _arr(g.c), _arr(g.e)
    tp = make_top_part(g.C1, g.C0, g.C1, d, e, c, e)
    ident = np.arange(g.C1.size)
    return DirectedKite(tp, g.span, ident, ident.copy())


def morphism_kite(g: ReflexiveGraph, h: ReflexiveGraph, f1) -> DirectedKite:
    """The kite of a graph morphism (f1, f0): top as for ``g``, direction ``h``."""
    d, c, e = _arr(g.d), _arr(g.c), _arr(g.e)
    f1 = _arr(f1)
    tp = make_top_part(g.C1, g.C0, g.C1, d, e, c, e)
    return DirectedKite(tp, h.span, f1, f1.copy())


def _graph_sections(g: ReflexiveGraph) -> tuple[np.ndarray, np.ndarray]:
    """e1 = <1, ed> and e2 = <ec, 1> as maps C1 -> C2."""
    d, c, e = _arr(g.d), _arr(g.c), _arr(g.e)
    idx = g.c2.sub._index
    e1 = np.asarray([idx[(f, int(e[d[f]]))] for f in range(g.C1.size)], dtype=np.int64)
    e2 = np.asarray([idx[(int(e[c[f]]), f)] for f in range(g.C1.size)], dtype=np.int64)
    return e1, e2


def kites_of_multgraph(g: ReflexiveGraph, m) -> tuple[DirectedKite, DirectedKite]:
    """The two kites whose admissibility encodes associativity and inverses."""
    m = _arr(m)
    e1, e2 = _graph_sections(g)
    C2 = g.c2
    pi1 = np.asarray(C2.sub.projections[0].map, dtype=np.int64)
    pi2 = np.asarray(C2.sub.projections[1].map, dtype=np.int64)
    assoc_top = make_top_part(C2.obj, g.C1, C2.obj, pi2, e2, pi1, e1)
    assoc = DirectedKite(assoc_top, g.span, m, m.copy())
    inv_top = make_top_part(C2.obj, g.C1, C2.obj, m, e2, m, e1)
    inv = DirectedKite(inv_top, g.span, pi2, pi1)
    return assoc, inv


def kite_of_span(span: Span) -> DirectedKite:
    """Top D(d) -d2-> D <-c1- D(c) split by diagonals; alpha = d1, gamma = c2."""
    kd = kernel_pair(span.d)
    kc = kernel_pair(span.c)
    D = span.apex
    d1, d2 = (np.asarray(h.map, dtype=np.int64) for h in kd.legs)
    c1, c2 = (np.asarray(h.map, dtype=np.int64) for h in kc.legs)
    diag_d = np.asarray([kd.sub.index((w, w)) for w in range(D.size)], dtype=np.int64)
    diag_c = np.asarray([kc.sub.index((w, w)) for w in range(D.size)], dtype=np.int64)
    tp = make_top_part(kd.obj, D, kc.obj, d2, diag_d, c1, diag_c)
    return DirectedKite(tp, span, d1, c2)


def kite_multiplication_to_p(span: Span, m) -> np.ndarray:
    """Read a multiplication on kite_of_span as a map on D(d,c)."""
    k = kite_of_span(span)
    m = _arr(m)
    tp = k.top
    kp = kp_construction(span)
    out = np.empty(kp.obj.size, dtype=np.int64)
    a_tuples = kernel_pair(span.d).sub.tuples
    c_tuples = kernel_pair(span.c).sub.tuples
    lookup = {}
    for idx, (ia, ic) in enumerate(tp.P.sub.tuples):
        x, y = a_tuples[ia]
        _, z = c_tuples[ic]
        lookup[(x, y, z)] = int(m[idx])
    for k_, t in enumerate(kp.limit.sub.tuples):
        out[k_] = lookup[t]
    return out


# --------------------------------------------------------------------------
# constructions from the proofs

def groupoid_from_pregroupoid(g: ReflexiveGraph, p) -> InternalGroupoid:
    """m(f, h) = p(f, e d f, h); the inverse is the unique valid i, seeded by p(ed, 1, ec)."""
    span = g.span
    kp = kp_construction(span)
    p = _arr(p)
    v = validate_pregroupoid(span, p)
    if not v:
        raise AlgebraError(f"not a pregroupoid: {v.law} at {v.witness}")
    d, c, e = _arr(g.d), _arr(g.c), _arr(g.e)
    index = kp.limit.sub._index
    pairs = g.c2.sub.tuples
    m = np.asarray([p[index[(f, int(e[d[f]]), h)]] for f, h in pairs], dtype=np.int64)
    seed = np.asarray([p[index[(int(e[d[f]]), f, int(e[c[f]]))]] for f in range(g.C1.size)],
                      dtype=np.int64)
    if not validate_groupoid(g, m, seed):
        alt = inverse_for(g, m)
        if alt is None:
            raise TheoremConsistencyError("pregroupoid did not yield a groupoid")
        seed = alt
    v = validate_groupoid(g, m, seed)
    if not v:
        raise TheoremConsistencyError(f"constructed groupoid fails {v.law} at {v.witness}")
    return InternalGroupoid(g, tuple(m.tolist()), tuple(seed.tolist()))


def inverse_candidates(g: ReflexiveGraph, m) -> list[np.ndarray]:
    """Every hom i: C1 -> C1 satisfying both inverse laws (brute-force search)."""
    m = _arr(m)
    d, c, e = _arr(g.d), _arr(g.c), _arr(g.e)
    idx = g.c2.sub._index
    n = g.C1.size
    allowed = np.zeros((n, n), dtype=bool)
    for f in range(n):
        for x in range(n):
            a, b = idx.get((f, x)), idx.get((x, f))
            allowed[f, x] = a is not None and b is not None and m[a] == e[c[f]] and m[b] == e[d[f]]
    return [np.asarray(i, dtype=np.int64) for i in search_homs(g.C1, g.C1, allowed=allowed)]


def swapped_kp_graph(span: Span) -> ReflexiveGraph:
    """(D(c,d), cod, dom, diagonal): triples with cx = cy and dy = dz."""
    swapped = Span(span.c, span.d)
    kp = kp_construction(swapped)
    return ReflexiveGraph(kp.cod, kp.dom, kp.diagonal, name=f"{span.apex.name}(c,d)")


@dataclass(frozen=True, eq=False)
class CompatConfig:
    """A configuration (E, p1, p2, e1, e2, alpha, gamma) over a direction span.

    p1: E -> A and p2: E -> C with sections e1, e2.
    """

    A: FiniteAlgebra
    C: FiniteAlgebra
    E: FiniteAlgebra
    p1: np.ndarray
    p2: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    span: Span
    alpha: np.ndarray
    gamma: np.ndarray

    def own(self) -> "CompatConfig":
        """E over its own span (E, p2, p1), with alpha = e1 and gamma = e2."""
        espan = Span(Hom(self.E, self.C, tuple(self.p2.tolist())), Hom(self.E, self.A, tuple(self.p1.tolist())))
        return CompatConfig(self.A, self.C, self.E, self.p1, self.p2, self.e1, self.e2, espan, self.e1, self.e2)


def config_of_kite(k: DirectedKite) -> CompatConfig:
    tp = k.top
    return CompatConfig(tp.A, tp.C, tp.P.obj, tp.pi1, tp.pi2, tp.e1, tp.e2, k.span, k.alpha, k.gamma)


def theorem31_multiplication(cfg: CompatConfig, mu=None) -> np.ndarray:
    """m = mid . mu . theta, with mu the unique multiplication on D(c,d).

    theta = <<a p1, a p1, a p1 e2 p2>, <g p2 e1 p1, g p2, g p2>>.
    """
    G = swapped_kp_graph(cfg.span)
    if mu is None:
        mus = mult_graph_structures(G, limit=2)
        if len(mus) != 1:
            raise AlgebraError(f"D(c,d) carries {len(mus)} multiplications, need exactly one")
        mu = mus[0]
    mu = _arr(mu)
    kp = kp_construction(Span(cfg.span.c, cfg.span.d))
    tindex = kp.limit.sub._index
    c2index = G.c2.sub._index
    mid = np.asarray(kp.mid.map, dtype=np.int64)
    a, g = cfg.alpha, cfg.gamma
    ap1 = a[cfg.p1]
    ap1e2p2 = a[cfg.p1[cfg.e2[cfg.p2]]]
    gp2e1p1 = g[cfg.p2[cfg.e1[cfg.p1]]]
    gp2 = g[cfg.p2]
    out = np.empty(cfg.E.size, dtype=np.int64)
    for t in range(cfg.E.size):
        first = tindex[(int(ap1[t]), int(ap1[t]), int(ap1e2p2[t]))]
        second = tindex[(int(gp2e1p1[t]), int(gp2[t]), int(gp2[t]))]
        out[t] = mid[mu[c2index[(first, second)]]]
    return out


def delta_roundtrip(cfg: CompatConfig) -> bool:
    """The construction applied to E over its own span gives the identity."""
    return bool(np.array_equal(theorem31_multiplication(cfg.own()), np.arange(cfg.E.size)))


# --------------------------------------------------------------------------
# morphisms

def graph_morphisms(cat: ConcreteCategory, g: ReflexiveGraph, h: ReflexiveGraph) -> list[np.ndarray]:
    """Every f1: C1 -> C1' with f0 = d' f1 e commuting with d, c and e."""
    F = cat.hom_array(g.C1, h.C1)
    if not len(F):
        return []
    d, c, e = _arr(g.d), _arr(g.c), _arr(g.e)
    d2, c2, e2 = _arr(h.d), _arr(h.c), _arr(h.e)
    f0 = d2[F[:, e]]  # (k, |C0|)
    ok = (d2[F] == np.take_along_axis(f0, np.broadcast_to(d, F.shape), axis=1)).all(axis=1)
    ok &= (c2[F] == np.take_along_axis(f0, np.broadcast_to(c, F.shape), axis=1)).all(axis=1)
    ok &= (F[:, e] == e2[f0]).all(axis=1)
    return [row for row in F[ok]]


def check_graph_morphism(g: ReflexiveGraph, h: ReflexiveGraph, f1, m=None, m2=None) -> Verdict:
    """Square checks for (f1, f0); with m, m2 also m2 (f1 x f1) = f1 m."""
    f1 = _arr(f1)
    d, c, e = _arr(g.d), _arr(g.c), _arr(g.e)
    d2, c2, e2 = _arr(h.d), _arr(h.c), _arr(h.e)
    f0 = d2[f1[e]]
    for law, ok in (("f0 d = d' f1", f0[d] == d2[f1]), ("f0 c = c' f1", f0[c] == c2[f1]),
                    ("f1 e = e' f0", f1[e] == e2[f0])):
        bad = _first(ok)
        if bad is not None:
            return Verdict(False, law, (bad,))
    if m is not None:
        m, m2 = _arr(m), _arr(m2)
        idx2 = h.c2.sub._index
        for k, (a, b) in enumerate(g.c2.sub.tuples):
            if f1[m[k]] != m2[idx2[(int(f1[a]), int(f1[b]))]]:
                return Verdict(False, "m' (f1 x f1) = f1 m", (a, b))
    return Verdict.good()


def leg_factor(cat: ConcreteCategory, leg: Hom, leg2: Hom, f) -> np.ndarray | None:
    """Some hom f0 with f0 leg = leg2 f, or None."""
    f = _arr(f)
    H = cat.hom_array(leg.target, leg2.target)
    if not len(H):
        return None
    ok = (H[:, _arr(leg)] == _arr(leg2)[f]).all(axis=1)
    hits = np.flatnonzero(ok)
    return H[hits[0]] if len(hits) else None


def check_span_morphism(cat: ConcreteCategory, s: Span, t: Span, f, p=None, p2=None) -> Verdict:
    """Commuting squares for f: D -> D'; with p, p2 also f p = p2 f^3."""
    f = _arr(f)
    if leg_factor(cat, s.d, t.d, f) is None:
        return Verdict(False, "f0 d = d' f")
    if leg_factor(cat, s.c, t.c, f) is None:
        return Verdict(False, "f1 c = c' f")
    if p is not None:
        kp, kp2 = kp_construction(s), kp_construction(t)
        p, p2 = _arr(p), _arr(p2)
        idx2 = kp2.limit.sub._index
        for k, (x, y, z) in enumerate(kp.limit.sub.tuples):
            if f[p[k]] != p2[idx2[(int(f[x]), int(f[y]), int(f[z]))]]:
                return Verdict(False, "f p = p' f^3", (x, y, z))
    return Verdict.good()


def check_kite_morphism(cat: ConcreteCategory, k: DirectedKite, k2: DirectedKite, hA, hB, hC, hD,
                        m=None, m2=None) -> Verdict:
    hA, hB, hC, hD = (_arr(v) for v in (hA, hB, hC, hD))
    t, t2 = k.top, k2.top
    checks = (
        ("hB f = f' hA", hB[t.f] == t2.f[hA]),
        ("hA r = r' hB", hA[t.r] == t2.r[hB]),
        ("hB g = g' hC", hB[t.g] == t2.g[hC]),
        ("hC s = s' hB", hC[t.s] == t2.s[hB]),
        ("hD alpha = alpha' hA", hD[k.alpha] == k2.alpha[hA]),
        ("hD gamma = gamma' hC", hD[k.gamma] == k2.gamma[hC]),
    )
    for law, ok in checks:
        bad = _first(ok)
        if bad is not None:
            return Verdict(False, law, (bad,))
    if leg_factor(cat, k.span.d, k2.span.d, hD) is None:
        return Verdict(False, "h0 d = d' hD")
    if leg_factor(cat, k.span.c, k2.span.c, hD) is None:
        return Verdict(False, "h1 c = c' hD")
    if m is not None:
        m, m2 = _arr(m), _arr(m2)
        idx2 = t2.P.sub._index
        for q, (a, c) in enumerate(t.P.sub.tuples):
            if hD[m[q]] != m2[idx2[(int(hA[a]), int(hC[c]))]]:
                return Verdict(False, "hD m = m' (hA x hC)", (a, c))
    return Verdict.good()


build_groupoid_from_pregroupoid = groupoid_from_pregroupoid

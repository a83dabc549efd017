"""Finite concrete categories, spans and the limit constructions on them."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .algebra import (
    AlgebraError,
    Equation,
    FiniteAlgebra,
    Hom,
    Subproduct,
    closure_mask,
    enumerate_homs,
    find_isomorphism,
    hom_array,
    iter_subalgebras,
    subproduct,
)


class MissingObject(AlgebraError):
    """A required limit is not available in the category."""


class NotSplitEpi(AlgebraError):
    pass


class CompositionError(AlgebraError):
    """An explicit morphism list is not a subcategory."""


# --------------------------------------------------------------------------
# the category

class ConcreteCategory:
    """Finite algebras with a composition-closed set of homomorphisms.

    ``objects`` are the listed objects.  With ``adjoin_limits`` the
    quantification universe also contains, up to isomorphism, every
    subalgebra of a product of two universe objects with at most
    ``closure_bound`` elements (iterated to a fixed point).  Other limit
    objects are built on demand and never enter the universe.
    """

    def __init__(
        self,
        objects: Sequence[FiniteAlgebra],
        equations: Sequence[Equation] = (),
        morphisms: Iterable[Hom] | None = None,
        adjoin_limits: bool = True,
        bound: int = 16,
        closure_bound: int | None = None,
        name: str = "C",
    ):
        self.name = name
        self.objects = tuple(objects)
        names = [o.name for o in self.objects]
        if len(set(names)) != len(names):
            raise AlgebraError(f"duplicate object names in {names}")
        sigs = {o.signature for o in self.objects}
        if len(sigs) > 1:
            raise AlgebraError("objects have different signatures")
        self.signature = self.objects[0].signature if self.objects else None
        self.equations = tuple(equations)
        for o in self.objects:
            o.validate(self.equations)
        self.adjoin_limits = adjoin_limits
        self.bound = bound
        self.closure_bound = closure_bound
        self._explicit: dict[tuple[int, int], list[Hom]] | None = None
        if morphisms is not None:
            self._set_explicit(list(morphisms))
        self._canon: dict[int, tuple[FiniteAlgebra, str | None]] = {}
        self.universe = self._close_universe()
        self.by_name = {o.name: o for o in self.universe}

    # ---- morphisms

    def _set_explicit(self, homs: list[Hom]) -> None:
        listed = {id(o) for o in self.objects}
        table: dict[tuple[int, int], set[tuple[int, ...]]] = {}
        for h in homs:
            if id(h.source) not in listed or id(h.target) not in listed:
                raise CompositionError("explicit morphisms must join listed objects")
            from .algebra import is_homomorphism

            if not is_homomorphism(h.map, h.source, h.target):
                raise CompositionError(
                    f"map {list(h.map)} from {h.source.name} to {h.target.name} is not a homomorphism"
                )
            table.setdefault((id(h.source), id(h.target)), set()).add(h.map)
        objs = {id(o): o for o in self.objects}
        for o in self.objects:
            ident = tuple(range(o.size))
            if ident not in table.get((id(o), id(o)), set()):
                raise CompositionError(f"identity on {o.name} is missing")
        for (a, b), maps in table.items():
            for (b2, c), maps2 in table.items():
                if b2 != b:
                    continue
                for f in maps:
                    for g in maps2:
                        comp = tuple(g[x] for x in f)
                        if comp not in table.get((a, c), set()):
                            raise CompositionError(
                                f"composite {list(comp)}: {objs[a].name} -> {objs[c].name} "
                                f"of {list(f)} and {list(g)} is missing"
                            )
        self._explicit = {
            k: [Hom(objs[k[0]], objs[k[1]], m) for m in sorted(v)] for k, v in table.items()
        }

    def homs(self, a: FiniteAlgebra, b: FiniteAlgebra) -> list[Hom]:
        if self._explicit is not None:
            listed = {id(o) for o in self.objects}
            if id(a) in listed and id(b) in listed:
                return list(self._explicit.get((id(a), id(b)), []))
        return enumerate_homs(a, b)

    def hom_array(self, a: FiniteAlgebra, b: FiniteAlgebra) -> np.ndarray:
        if self._explicit is not None:
            listed = {id(o) for o in self.objects}
            if id(a) in listed and id(b) in listed:
                key = ("xhomarr", id(b))
                got = a._cache.get(key)
                if got is None:
                    maps = [h.map for h in self.homs(a, b)]
                    arr = np.asarray(maps, dtype=np.int64).reshape(len(maps), a.size)
                    got = (b, arr)
                    a._cache[key] = got
                return got[1]
        return hom_array(a, b)

    @staticmethod
    def identity(a: FiniteAlgebra) -> Hom:
        return Hom.identity(a)

    def sections(self, f: Hom) -> list[Hom]:
        """All r with f r = 1, in hom order."""
        arr = self.hom_array(f.target, f.source)
        if not len(arr):
            return []
        ok = (np.asarray(f.map)[arr] == np.arange(f.target.size)).all(axis=1)
        return [Hom(f.target, f.source, tuple(row.tolist())) for row in arr[ok]]

    def split_pairs(self, a: FiniteAlgebra, b: FiniteAlgebra) -> list[tuple[np.ndarray, np.ndarray]]:
        """All (f, r) with f: a -> b, r: b -> a and f r = 1_b, as arrays."""
        key = ("split", id(self), id(b))
        got = a._cache.get(key)
        if got is not None:
            return got[1]
        F = self.hom_array(a, b)
        R = self.hom_array(b, a)
        out = []
        if len(F) and len(R):
            ok = (F[:, R] == np.arange(b.size)).all(axis=2)
            for i, j in zip(*np.nonzero(ok)):
                out.append((F[i], R[j]))
        a._cache[key] = (b, out)
        return out

    # ---- objects

    def _close_universe(self) -> tuple[FiniteAlgebra, ...]:
        universe = list(self.objects)
        if not self.adjoin_limits or not universe:
            return tuple(universe)
        cap = self.closure_bound
        if cap is None:
            cap = max(o.size for o in universe)
        seen_pairs: set[tuple[str, str]] = set()
        changed = True
        while changed:
            changed = False
            for a, b in itertools.combinations_with_replacement(list(universe), 2):
                if (a.name, b.name) in seen_pairs:
                    continue
                seen_pairs.add((a.name, b.name))
                prod = subproduct((a, b), itertools.product(range(a.size), range(b.size)), "tmp")
                for sub in iter_subalgebras(prod.algebra, max_size=cap):
                    els = sorted(sub)
                    cand = subproduct((a, b), [prod.tuples[e] for e in els], "tmp").algebra
                    if any(find_isomorphism(cand, u) for u in universe):
                        continue
                    name = f"{a.name}x{b.name}.{len([u for u in universe if u.name.startswith(a.name + 'x' + b.name + '.')])}"
                    universe.append(cand.renamed(name))
                    changed = True
        return tuple(universe)

    def canonical_name(self, alg: FiniteAlgebra) -> str | None:
        """Name of the universe object isomorphic to ``alg``, if any."""
        got = self._canon.get(id(alg))
        if got is not None:
            return got[1]
        name = None
        for u in self.universe:
            if u is alg or find_isomorphism(alg, u) is not None:
                name = u.name
                break
        self._canon[id(alg)] = (alg, name)
        return name

    def require(self, alg: FiniteAlgebra) -> None:
        if not self.adjoin_limits and self.canonical_name(alg) is None:
            raise MissingObject(f"limit object {alg.name!r} is not among the category's objects")


# --------------------------------------------------------------------------
# spans and split spans

@dataclass(frozen=True, eq=False)
class Span:
    d: Hom
    c: Hom
    name: str = ""

    def __post_init__(self):
        if self.d.source is not self.c.source:
            raise AlgebraError("span legs must share their source")

    @property
    def apex(self) -> FiniteAlgebra:
        return self.d.source

    @property
    def D0(self) -> FiniteAlgebra:
        return self.d.target

    @property
    def D1(self) -> FiniteAlgebra:
        return self.c.target

    @property
    def key(self) -> tuple:
        return (self.apex.name, self.D0.name, self.d.map, self.D1.name, self.c.map)

    @property
    def jointly_monic(self) -> bool:
        return is_jointly_monic(self.d, self.c)

    def __repr__(self):
        return f"Span({self.name or self.apex.name}: {self.D0.name} <- {self.apex.name} -> {self.D1.name})"


@dataclass(frozen=True, eq=False)
class SplitSpan:
    E: FiniteAlgebra
    e1: Hom
    p1: Hom
    e2: Hom
    p2: Hom

    def __post_init__(self):
        a, c = self.p1.target, self.p2.target
        if not (self.e1.source is a and self.e1.target is self.E and self.p1.source is self.E):
            raise AlgebraError("malformed split span (first leg)")
        if not (self.e2.source is c and self.e2.target is self.E and self.p2.source is self.E):
            raise AlgebraError("malformed split span (second leg)")

    @property
    def is_split(self) -> bool:
        return (self.p1 @ self.e1).map == tuple(range(self.p1.target.size)) and (
            self.p2 @ self.e2
        ).map == tuple(range(self.p2.target.size))

    @property
    def commutative(self) -> bool:
        a = self.e1 @ self.p1
        b = self.e2 @ self.p2
        return (a @ b).map == (b @ a).map


@dataclass(frozen=True, eq=False)
class SplitSquare:
    """The square with E over A and C over B, all legs split."""

    split: SplitSpan
    f: Hom
    r: Hom
    g: Hom
    s: Hom


def is_commutative_split_square(sq: SplitSquare) -> bool:
    ss = sq.split
    ident = lambda x: tuple(range(x.size))  # noqa: E731
    try:
        return (
            (ss.p1 @ ss.e1).map == ident(ss.p1.target)
            and (ss.p2 @ ss.e2).map == ident(ss.p2.target)
            and (sq.f @ sq.r).map == ident(sq.f.target)
            and (sq.g @ sq.s).map == ident(sq.g.target)
            and (sq.g @ ss.p2).map == (sq.f @ ss.p1).map
            and (ss.e1 @ sq.r).map == (ss.e2 @ sq.s).map
            and (ss.p2 @ ss.e1).map == (sq.s @ sq.f).map
            and (ss.p1 @ ss.e2).map == (sq.r @ sq.g).map
        )
    except AlgebraError:
        return False


def is_jointly_monic(p1: Hom, p2: Hom) -> bool:
    if p1.source is not p2.source:
        raise AlgebraError("jointly monic test needs a common source")
    return len(set(zip(p1.map, p2.map))) == p1.source.size


def dominion_separates(cat: ConcreteCategory, E: FiniteAlgebra, mask: np.ndarray) -> bool:
    """True when homs out of E agreeing on ``mask`` are always equal."""
    if mask.all():
        return True
    key = ("dominion", id(cat), mask.tobytes())
    got = E._cache.get(key)
    if got is not None:
        return got
    ok = True
    for Z in cat.universe:
        H = cat.hom_array(E, Z)
        if len(H) < 2:
            continue
        if len(np.unique(H[:, mask], axis=0)) != len(np.unique(H, axis=0)):
            ok = False
            break
    E._cache[key] = ok
    return ok


def is_jointly_epic(cat: ConcreteCategory, e1: Hom, e2: Hom) -> bool:
    """Jointly epic relative to the category's universe.

    The images generating the target settles it at once; otherwise no two
    distinct homs into a universe object may agree on both images.
    """
    if e1.target is not e2.target:
        raise AlgebraError("jointly epic test needs a common target")
    E = e1.target
    seed = np.zeros(E.size, dtype=bool)
    seed[list(e1.map)] = True
    seed[list(e2.map)] = True
    return dominion_separates(cat, E, closure_mask(E, seed))


# --------------------------------------------------------------------------
# limit constructions

@dataclass(frozen=True, eq=False)
class Limit:
    """A constructed limit: the object, its tuple presentation, its legs."""

    sub: Subproduct
    legs: tuple[Hom, ...]
    canonical: str | None = None

    @property
    def obj(self) -> FiniteAlgebra:
        return self.sub.algebra

    @property
    def size(self) -> int:
        return self.sub.algebra.size


def _finish(cat: ConcreteCategory | None, sub: Subproduct, legs: tuple[Hom, ...]) -> Limit:
    canon = None
    if cat is not None:
        cat.require(sub.algebra)
        if not cat.adjoin_limits:
            canon = cat.canonical_name(sub.algebra)
    return Limit(sub, legs, canon)


def _sub(factors, tuples, name):
    tuples = list(tuples)
    if not tuples:
        raise MissingObject(f"limit {name!r} would be empty")
    return subproduct(factors, tuples, name)


def kernel_pair(f: Hom, cat: ConcreteCategory | None = None) -> Limit:
    A = f.source
    m = f.map
    tuples = [(a, b) for a in range(A.size) for b in range(A.size) if m[a] == m[b]]
    sub = _sub((A, A), tuples, f"K({A.name})")
    return _finish(cat, sub, sub.projections)


def pullback(f: Hom, g: Hom, cat: ConcreteCategory | None = None, name: str | None = None) -> Limit:
    """{(a, c) : f a = g c} with its two projections."""
    if f.target is not g.target:
        raise AlgebraError("pullback needs a common codomain")
    A, C = f.source, g.source
    fm, gm = np.asarray(f.map), np.asarray(g.map)
    a, c = np.nonzero(fm[:, None] == gm[None, :])
    sub = _sub((A, C), zip(a.tolist(), c.tolist()), name or f"{A.name}x_{f.target.name}{C.name}")
    return _finish(cat, sub, sub.projections)


def pullback_split(f: Hom, g: Hom, cat: ConcreteCategory) -> Limit:
    if not cat.sections(f) or not cat.sections(g):
        raise NotSplitEpi("pullback_split needs split epimorphisms")
    return pullback(f, g, cat)


def equalizer(u: Hom, v: Hom, cat: ConcreteCategory | None = None) -> Limit:
    if u.source is not v.source or u.target is not v.target:
        raise AlgebraError("equalizer needs parallel morphisms")
    E = u.source
    sub = _sub((E,), [(x,) for x in range(E.size) if u.map[x] == v.map[x]], f"Eq({E.name})")
    return _finish(cat, sub, sub.projections)


@dataclass(frozen=True, eq=False)
class KPConstruction:
    span: Span
    limit: Limit
    dom: Hom
    mid: Hom
    cod: Hom
    diagonal: Hom

    @property
    def obj(self) -> FiniteAlgebra:
        return self.limit.obj

    @property
    def triples(self) -> np.ndarray:
        key = ("triples",)
        got = self.obj._cache.get(key)
        if got is None:
            got = np.asarray(self.limit.sub.tuples, dtype=np.int64).reshape(-1, 3)
            self.obj._cache[key] = got
        return got

    @property
    def induced_span(self) -> Span:
        return Span(self.dom, self.cod, name=f"{self.span.name or self.span.apex.name}(d,c)")

    def index(self, x: int, y: int, z: int) -> int:
        return self.limit.sub.index((x, y, z))


def kp_tuples(span: Span) -> list[tuple[int, int, int]]:
    d, c = np.asarray(span.d.map), np.asarray(span.c.map)
    n = span.apex.size
    x, y, z = np.indices((n, n, n)).reshape(3, -1)
    ok = (d[x] == d[y]) & (c[y] == c[z])
    return list(zip(x[ok].tolist(), y[ok].tolist(), z[ok].tolist()))


def kp_construction(span: Span, cat: ConcreteCategory | None = None) -> KPConstruction:
    D = span.apex
    key = ("kp", span.d.map, span.c.map, id(span.D0), id(span.D1))
    got = D._cache.get(key)
    if got is not None:
        return got[1]
    sub = _sub((D, D, D), kp_tuples(span), f"{D.name}(d,c)")
    lim = _finish(cat, sub, sub.projections)
    diag = Hom(D, sub.algebra, tuple(sub.index((w, w, w)) for w in range(D.size)))
    dom, mid, cod = sub.projections
    kp = KPConstruction(span, lim, dom, mid, cod, diag)
    D._cache[key] = (span, kp)
    return kp


@dataclass(frozen=True, eq=False)
class BoxConstruction:
    span: Span
    limit: Limit
    q: tuple[Hom, Hom, Hom, Hom]

    @property
    def obj(self) -> FiniteAlgebra:
        return self.limit.obj

    @property
    def quads(self) -> np.ndarray:
        return np.asarray(self.limit.sub.tuples, dtype=np.int64).reshape(-1, 4)

    def fifth(self) -> np.ndarray:
        """D(⊡) as rows (x, y, z, w, w') with (x,y,z,w) and (x,y,z,w') in D(□)."""
        quads = self.quads
        groups: dict[tuple[int, int, int], list[int]] = {}
        for x, y, z, w in quads.tolist():
            groups.setdefault((x, y, z), []).append(w)
        rows = [(x, y, z, w, w2) for (x, y, z), ws in sorted(groups.items()) for w in ws for w2 in ws]
        return np.asarray(rows, dtype=np.int64).reshape(-1, 5)

    def kernel_pair_of_q123(self) -> Limit:
        """The kernel pair of <q1,q2,q3> as a subalgebra of D(□)²."""
        sub = self.limit.sub
        rows = self.fifth()
        tuples = [(sub.index((x, y, z, w)), sub.index((x, y, z, w2))) for x, y, z, w, w2 in rows.tolist()]
        k = subproduct((self.obj, self.obj), tuples, f"{self.span.apex.name}(box2)")
        return Limit(k, k.projections)


def box_tuples(span: Span) -> list[tuple[int, int, int, int]]:
    d, c = np.asarray(span.d.map), np.asarray(span.c.map)
    out = []
    for x, y, z in kp_tuples(span):
        for w in np.flatnonzero((d == d[z]) & (c == c[x])).tolist():
            out.append((x, y, z, w))
    return out


def box_construction(span: Span, cat: ConcreteCategory | None = None) -> BoxConstruction:
    D = span.apex
    key = ("box", span.d.map, span.c.map, id(span.D0), id(span.D1))
    got = D._cache.get(key)
    if got is not None:
        return got[1]
    sub = _sub((D, D, D, D), box_tuples(span), f"{D.name}(box)")
    lim = _finish(cat, sub, sub.projections)
    box = BoxConstruction(span, lim, tuple(sub.projections))
    D._cache[key] = (span, box)
    return box


# --------------------------------------------------------------------------
# local products

@dataclass(frozen=True, eq=False)
class TopPart:
    """Split epis f: A -> B <- C: g with sections r, s, and their pullback."""

    A: FiniteAlgebra
    B: FiniteAlgebra
    C: FiniteAlgebra
    f: np.ndarray
    r: np.ndarray
    g: np.ndarray
    s: np.ndarray
    P: Limit | None = None
    e1: np.ndarray | None = None  # <1, sf> as indices into P
    e2: np.ndarray | None = None  # <rg, 1>
    pi1: np.ndarray | None = None
    pi2: np.ndarray | None = None

    @property
    def key(self) -> tuple:
        return (self.A.name, self.B.name, self.C.name, tuple(self.f.tolist()), tuple(self.r.tolist()),
                tuple(self.g.tolist()), tuple(self.s.tolist()))

    def label(self) -> str:
        return f"{self.A.name}->{self.B.name}<-{self.C.name}"


def make_top_part(A, B, C, f, r, g, s, bound: int | None = None) -> TopPart:
    f, r, g, s = (np.asarray(v, dtype=np.int64) for v in (f, r, g, s))
    a, c = np.nonzero(f[:, None] == g[None, :])
    if bound is not None and len(a) > bound:
        return TopPart(A, B, C, f, r, g, s)
    sub = subproduct((A, C), zip(a.tolist(), c.tolist()), f"{A.name}x_{B.name}{C.name}")
    P = Limit(sub, sub.projections)
    index = sub._index
    e1 = np.asarray([index[(x, int(s[f[x]]))] for x in range(A.size)], dtype=np.int64)
    e2 = np.asarray([index[(int(r[g[z]]), z)] for z in range(C.size)], dtype=np.int64)
    pi1 = np.asarray(sub.projections[0].map, dtype=np.int64)
    pi2 = np.asarray(sub.projections[1].map, dtype=np.int64)
    return TopPart(A, B, C, f, r, g, s, P, e1, e2, pi1, pi2)


def top_parts(cat: ConcreteCategory, bound: int | None = None) -> tuple[list[TopPart], int]:
    """Every (A, f, r, B, g, s) over the universe; pullbacks above ``bound`` skipped.

    Returns the parts and the number skipped.
    """
    key = ("topparts", bound)
    got = getattr(cat, "_tp_cache", {}).get(key)
    if got is not None:
        return got
    out, skipped = [], 0
    U = cat.universe
    for B in U:
        pairs = [(A, fr) for A in U for fr in cat.split_pairs(A, B)]
        for (A, (f, r)), (C, (g, s)) in itertools.product(pairs, pairs):
            tp = make_top_part(A, B, C, f, r, g, s, bound)
            if tp.P is None:
                skipped += 1
            else:
                out.append(tp)
    if not hasattr(cat, "_tp_cache"):
        cat._tp_cache = {}
    cat._tp_cache[key] = (out, skipped)
    return out, skipped


@dataclass
class LocalProductVerdict:
    ok: bool
    reason: str = ""
    witness: dict | None = None


def is_local_product(cat: ConcreteCategory, ss: SplitSpan) -> LocalProductVerdict:
    """Search for (B, f, r, g, s) realising ``ss`` as a pullback of split epis."""
    if not ss.is_split:
        return LocalProductVerdict(False, "not split")
    if not ss.commutative:
        return LocalProductVerdict(False, "not commutative")
    if not is_jointly_monic(ss.p1, ss.p2):
        return LocalProductVerdict(False, "projections not jointly monic")
    A, C, E = ss.p1.target, ss.p2.target, ss.E
    p1, p2 = np.asarray(ss.p1.map), np.asarray(ss.p2.map)
    se = np.asarray(ss.p2.map)[list(ss.e1.map)]  # p2 e1 : A -> C, must be s f
    rg = np.asarray(ss.p1.map)[list(ss.e2.map)]  # p1 e2 : C -> A, must be r g
    pairs_in = set(zip(p1.tolist(), p2.tolist()))
    for B in cat.universe:
        for f, r in cat.split_pairs(A, B):
            for g, s in cat.split_pairs(C, B):
                if not (np.array_equal(s[f], se) and np.array_equal(r[g], rg)):
                    continue
                a, c = np.nonzero(f[:, None] == g[None, :])
                if set(zip(a.tolist(), c.tolist())) == pairs_in:
                    return LocalProductVerdict(True, "", {
                        "B": B.name, "f": f.tolist(), "r": r.tolist(), "g": g.tolist(), "s": s.tolist()})
    return LocalProductVerdict(False, "no pullback presentation found")

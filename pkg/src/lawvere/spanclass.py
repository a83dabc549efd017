"""Classes of spans: all spans, relations, strong relations, explicit lists."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .algebra import (
    AlgebraError,
    FiniteAlgebra,
    Hom,
    closure_mask,
    is_homomorphism,
    iter_subalgebras,
    search_homs,
    subproduct,
)
from .category import ConcreteCategory, Span, dominion_separates, kp_construction, top_parts

ALL = "all"
RELATIONS = "relations"
STRONG = "strong-relations"
CUSTOM = "custom"


class NotARelation(AlgebraError):
    pass


@dataclass(frozen=True, eq=False)
class SpanClass:
    kind: str
    name: str = ""
    spans: tuple[Span, ...] = ()

    def __post_init__(self):
        if self.kind not in (ALL, RELATIONS, STRONG, CUSTOM):
            raise AlgebraError(f"unknown span class {self.kind!r}")
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    @property
    def only_relations(self) -> bool:
        """Every member is jointly monic (so structure maps are determined by the legs)."""
        if self.kind in (RELATIONS, STRONG):
            return True
        if self.kind == CUSTOM:
            return all(s.jointly_monic for s in self.spans)
        return False


AllSpans = SpanClass(ALL)
Relations = SpanClass(RELATIONS)
StrongRelations = SpanClass(STRONG)


def custom(spans, name: str = "custom") -> SpanClass:
    return SpanClass(CUSTOM, name, tuple(spans))


@dataclass(frozen=True)
class ClassVerdict:
    ok: bool
    witness: Span | None = None
    checked: int = 0
    skipped: int = 0


# --------------------------------------------------------------------------
# relations as masks

def relation_mask(span: Span) -> np.ndarray:
    mask = np.zeros((span.D0.size, span.D1.size), dtype=bool)
    mask[list(span.d.map), list(span.c.map)] = True
    return mask


def require_relation(span: Span) -> None:
    if not span.jointly_monic:
        raise NotARelation(f"{span!r} is not jointly monic")


def is_difunctional(span: Span) -> tuple[bool, tuple[int, int] | None]:
    """R R° R ⊆ R; returns a pair of R R° R outside R when it fails."""
    require_relation(span)
    R = relation_mask(span).astype(np.int64)
    comp = (R @ R.T @ R) > 0
    bad = np.argwhere(comp & ~R.astype(bool))
    if len(bad):
        return False, (int(bad[0, 0]), int(bad[0, 1]))
    return True, None


def _reflexive_data(span: Span) -> np.ndarray:
    require_relation(span)
    if span.D0 is not span.D1:
        raise NotARelation("reflexivity needs both legs into one object")
    return relation_mask(span)


def is_reflexive(span: Span) -> bool:
    if span.D0 is not span.D1:
        return False
    return bool(np.diagonal(relation_mask(span)).all())


def is_symmetric(span: Span) -> tuple[bool, tuple[int, int] | None]:
    R = _reflexive_data(span)
    bad = np.argwhere(R & ~R.T)
    return (True, None) if not len(bad) else (False, (int(bad[0, 0]), int(bad[0, 1])))


def is_transitive(span: Span) -> tuple[bool, tuple[int, int] | None]:
    R = _reflexive_data(span)
    comp = (R.astype(np.int64) @ R.astype(np.int64)) > 0
    bad = np.argwhere(comp & ~R)
    return (True, None) if not len(bad) else (False, (int(bad[0, 0]), int(bad[0, 1])))


def reflexive_classify(span: Span) -> str:
    """equivalence | preorder | tolerance | none (for non-reflexive relations)."""
    if not is_reflexive(span):
        _reflexive_data(span)
        return "none"
    sym, _ = is_symmetric(span)
    tra, _ = is_transitive(span)
    if sym and tra:
        return "equivalence"
    if tra:
        return "preorder"
    if sym:
        return "tolerance"
    return "none"


# --------------------------------------------------------------------------
# strongness

@dataclass(frozen=True, eq=False)
class StrongTest:
    """An object E with a proper subalgebra T that every hom out of E is determined on."""

    E: FiniteAlgebra
    T: np.ndarray  # bool mask


def _image_masks(cat: ConcreteCategory, E: FiniteAlgebra) -> list[np.ndarray]:
    seen: dict[bytes, np.ndarray] = {}
    for U in cat.universe:
        H = cat.hom_array(U, E)
        for row in H:
            m = np.zeros(E.size, dtype=bool)
            m[row] = True
            seen.setdefault(m.tobytes(), m)
    return [seen[k] for k in sorted(seen)]


def strong_tests(cat: ConcreteCategory, bound: int) -> list[StrongTest]:
    """Lifting problems against jointly epic cospans, deduplicated.

    Targets are the universe objects (cospans from universe objects) and the
    local products within ``bound`` (their canonical cospan).
    """
    cache = cat.__dict__.setdefault("_strong_tests", {})
    if bound in cache:
        return cache[bound]
    tests: list[StrongTest] = []
    for E in cat.universe:
        imgs = _image_masks(cat, E)
        done: set[bytes] = set()
        for a, b in itertools.combinations_with_replacement(imgs, 2):
            T = closure_mask(E, a | b)
            key = T.tobytes()
            if T.all() or key in done:
                continue
            done.add(key)
            if dominion_separates(cat, E, T):
                tests.append(StrongTest(E, T))
    parts, _ = top_parts(cat, bound)
    for tp in parts:
        E = tp.P.obj
        seed = np.zeros(E.size, dtype=bool)
        seed[tp.e1] = True
        seed[tp.e2] = True
        T = closure_mask(E, seed)
        if not T.all() and dominion_separates(cat, E, T):
            tests.append(StrongTest(E, T))
    cache[bound] = tests
    return tests


def strong_violation(cat: ConcreteCategory, masks: np.ndarray, D0: FiniteAlgebra, D1: FiniteAlgebra,
                     tests: list[StrongTest], max_pairs: int | None = None) -> np.ndarray:
    """For stacked relation masks (k, |D0|, |D1|): index of the first failing test, or -1.

    With ``max_pairs`` set, a test needing more hom pairs is not run and the
    surviving relations get -2 (undecided) unless a later test fails them.
    """
    out = np.full(len(masks), -1, dtype=np.int64)
    undecided = np.zeros(len(masks), dtype=bool)
    for ti, t in enumerate(tests):
        alive = np.flatnonzero(out < 0)
        if not len(alive):
            break
        H0 = cat.hom_array(t.E, D0)
        H1 = cat.hom_array(t.E, D1)
        if not len(H0) or not len(H1):
            continue
        if max_pairs is not None and len(H0) * len(H1) > max_pairs:
            undecided[alive] = True
            continue
        sub = masks[alive]
        bad = np.zeros(len(alive), dtype=bool)
        chunk = max(1, 4_000_000 // max(1, len(alive) * len(H1) * t.E.size))
        for lo in range(0, len(H0), chunk):
            vals = sub[:, H0[lo:lo + chunk, None, :], H1[None, :, :]]  # (k, h0, h1, |E|)
            on_T = vals[..., t.T].all(axis=-1)
            on_E = vals.all(axis=-1)
            bad |= (on_T & ~on_E).reshape(len(alive), -1).any(axis=1)
        out[alive[bad]] = ti
    out[(out < 0) & undecided] = -2
    return out


def is_strong(cat: ConcreteCategory, span: Span, bound: int | None = None) -> bool:
    """Jointly strongly monic: jointly monic and lifting against every test cospan."""
    if not span.jointly_monic:
        return False
    tests = strong_tests(cat, cat.bound if bound is None else bound)
    return bool(strong_violation(cat, relation_mask(span)[None], span.D0, span.D1, tests)[0] < 0)


def is_jointly_strongly_monic(cat: ConcreteCategory, p1: Hom, p2: Hom, bound: int | None = None) -> bool:
    return is_strong(cat, Span(p1, p2), bound)


# --------------------------------------------------------------------------
# membership and enumeration

def spans_isomorphic(s: Span, t: Span) -> bool:
    if s.D0 is not t.D0 or s.D1 is not t.D1 or s.apex.size != t.apex.size:
        return False
    if s.key == t.key:
        return True
    # a bijective hom phi with d' phi = d and c' phi = c
    n = s.apex.size
    allowed = np.zeros((n, n), dtype=bool)
    sd, sc = np.asarray(s.d.map), np.asarray(s.c.map)
    td, tc = np.asarray(t.d.map), np.asarray(t.c.map)
    allowed[:] = (sd[:, None] == td[None, :]) & (sc[:, None] == tc[None, :])
    for phi in search_homs(s.apex, t.apex, allowed=allowed):
        if len(set(phi)) == n:
            return True
    return False


def member(cls: SpanClass, cat: ConcreteCategory, span: Span, bound: int | None = None) -> bool:
    if cls.kind == ALL:
        return True
    if cls.kind == RELATIONS:
        return span.jointly_monic
    if cls.kind == STRONG:
        return is_strong(cat, span, bound)
    return any(spans_isomorphic(span, t) for t in cls.spans)


def all_spans(cat: ConcreteCategory, bound: int) -> list[Span]:
    out = []
    for D in cat.universe:
        if D.size > bound:
            continue
        legs = [(X, row) for X in cat.universe for row in cat.hom_array(D, X)]
        for (X, d), (Y, c) in itertools.product(legs, legs):
            out.append(Span(Hom(D, X, tuple(d.tolist())), Hom(D, Y, tuple(c.tolist()))))
    return out


def all_relations(cat: ConcreteCategory, bound: int) -> list[Span]:
    """Every subalgebra R of D0 x D1 (universe objects), |R| <= bound."""
    cache = cat.__dict__.setdefault("_relations", {})
    if bound in cache:
        return cache[bound]
    out = []
    for D0, D1 in itertools.product(cat.universe, cat.universe):
        prod = subproduct((D0, D1), itertools.product(range(D0.size), range(D1.size)), "tmp")
        for k, els in enumerate(iter_subalgebras(prod.algebra, max_size=bound)):
            sub = subproduct((D0, D1), [prod.tuples[e] for e in sorted(els)], f"R{k}[{D0.name},{D1.name}]")
            out.append(Span(sub.projections[0], sub.projections[1], sub.algebra.name))
    cache[bound] = out
    return out


def strong_relations(cat: ConcreteCategory, bound: int) -> list[Span]:
    cache = cat.__dict__.setdefault("_strong", {})
    if bound in cache:
        return cache[bound]
    rels = all_relations(cat, bound)
    tests = strong_tests(cat, bound)
    out = []
    groups: dict[tuple[int, int], list[int]] = {}
    for i, s in enumerate(rels):
        groups.setdefault((id(s.D0), id(s.D1)), []).append(i)
    keep = np.zeros(len(rels), dtype=bool)
    for idx in groups.values():
        s0 = rels[idx[0]]
        masks = np.stack([relation_mask(rels[i]) for i in idx])
        keep[idx] = strong_violation(cat, masks, s0.D0, s0.D1, tests) < 0
    out = [s for s, k in zip(rels, keep) if k]
    cache[bound] = out
    return out


def members(cls: SpanClass, cat: ConcreteCategory, bound: int) -> list[Span]:
    """The enumerated members with apex at most ``bound``, in a fixed order."""
    if cls.kind == ALL:
        return all_spans(cat, bound)
    if cls.kind == RELATIONS:
        return all_relations(cat, bound)
    if cls.kind == STRONG:
        return strong_relations(cat, bound)
    return [s for s in cls.spans if s.apex.size <= bound]


# --------------------------------------------------------------------------
# closure hypotheses

STRONG_SAMPLE = 20


def _checked_members(cls: SpanClass, cat: ConcreteCategory, bound: int, sample: int | None,
                     max_apex: int | None = None) -> tuple[list[Span], int]:
    """Members to test; strong relations are sampled evenly.

    For strong relations both closure properties follow from the strongness of
    the member itself against the same test family, so a sample suffices.
    """
    ms = members(cls, cat, bound)
    if cls.kind != STRONG:
        return ms, 0
    k = STRONG_SAMPLE if sample is None else sample
    total = len(ms)
    if max_apex is not None:
        ms = [s for s in ms if s.apex.size <= max_apex]
    step = max(1, -(-len(ms) // k))
    chosen = ms[::step]
    return chosen, total - len(chosen)


def closed_under_kp(cls: SpanClass, cat: ConcreteCategory, bound: int, sample: int | None = None) -> ClassVerdict:
    if cls.kind == ALL:
        return ClassVerdict(True)
    n = 0
    # the kernel-pair relation lives over the member itself, so keep members small
    todo, skipped = _checked_members(cls, cat, bound, sample or 12, max_apex=8)
    for s in todo:
        kp = kp_construction(s)
        n += 1
        if not member(cls, cat, kp.induced_span, bound):
            return ClassVerdict(False, s, n, skipped)
    return ClassVerdict(True, None, n, skipped)


def contains_local_products(cls: SpanClass, cat: ConcreteCategory, bound: int) -> ClassVerdict:
    if cls.kind == ALL:
        return ClassVerdict(True)
    parts, skipped = top_parts(cat, bound)
    spans = [Span(tp.P.legs[0], tp.P.legs[1], tp.P.obj.name) for tp in parts]
    if cls.kind == STRONG:
        # span parts are relations; test them in batches sharing their feet
        tests = strong_tests(cat, bound)
        groups: dict[tuple[int, int], list[int]] = {}
        for i, sp in enumerate(spans):
            groups.setdefault((id(sp.D0), id(sp.D1)), []).append(i)
        bad = []
        for idx in groups.values():
            sp = spans[idx[0]]
            masks = np.stack([relation_mask(spans[i]) for i in idx])
            viol = strong_violation(cat, masks, sp.D0, sp.D1, tests)
            bad += [i for i, v in zip(idx, viol) if v >= 0]
        if bad:
            return ClassVerdict(False, spans[min(bad)], min(bad) + 1, skipped)
        return ClassVerdict(True, None, len(spans), skipped)
    for n, span in enumerate(spans, 1):
        if not member(cls, cat, span, bound):
            return ClassVerdict(False, span, n, skipped)
    return ClassVerdict(True, None, len(spans), skipped)


def regular_monos(cat: ConcreteCategory, D: FiniteAlgebra) -> list[np.ndarray]:
    """Masks of the proper subalgebras of D that are equalizers of pairs D -> Z."""
    seen: dict[bytes, np.ndarray] = {}
    for Z in cat.universe:
        H = cat.hom_array(D, Z)
        for i in range(len(H)):
            for j in range(i + 1, len(H)):
                m = H[i] == H[j]
                if m.any():
                    seen.setdefault(m.tobytes(), m)
    return [seen[k] for k in sorted(seen)]


def restrict(span: Span, mask: np.ndarray) -> Span:
    els = np.flatnonzero(mask).tolist()
    sub = subproduct((span.apex,), [(e,) for e in els], f"{span.apex.name}|{len(els)}")
    k = sub.projections[0]
    return Span(span.d @ k, span.c @ k)


def stable_under_regular_mono(cls: SpanClass, cat: ConcreteCategory, bound: int,
                              sample: int | None = None) -> ClassVerdict:
    if cls.kind in (ALL, RELATIONS):
        return ClassVerdict(True)
    n = 0
    todo, skipped = _checked_members(cls, cat, bound, sample)
    for s in todo:
        for mask in regular_monos(cat, s.apex):
            n += 1
            r = restrict(s, mask)
            if not member(cls, cat, r, bound):
                return ClassVerdict(False, r, n, skipped)
    return ClassVerdict(True, None, n, skipped)


# --------------------------------------------------------------------------
# custom class files

def load_custom(path: str | Path, cat: ConcreteCategory) -> SpanClass:
    """A JSON list of spans {"apex", "d": {"target", "map"}, "c": {...}} over universe objects."""
    doc = json.loads(Path(path).read_text())
    items = doc["spans"] if isinstance(doc, dict) else doc
    spans = []
    for i, item in enumerate(items):
        try:
            D = cat.by_name[item["apex"]]
            d = Hom(D, cat.by_name[item["d"]["target"]], tuple(int(v) for v in item["d"]["map"]))
            c = Hom(D, cat.by_name[item["c"]["target"]], tuple(int(v) for v in item["c"]["map"]))
        except KeyError as exc:
            raise AlgebraError(f"custom span {i}: unknown object or field {exc}") from None
        for leg in (d, c):
            if not is_homomorphism(leg.map, leg.source, leg.target):
                raise AlgebraError(f"custom span {i}: leg {list(leg.map)} is not a homomorphism")
        spans.append(Span(d, c, item.get("name", f"S{i}")))
    name = doc.get("name", "custom") if isinstance(doc, dict) else "custom"
    return custom(spans, name)


def dump_custom(cls: SpanClass) -> dict:
    return {
        "name": cls.name,
        "spans": [
            {"name": s.name, "apex": s.apex.name,
             "d": {"target": s.D0.name, "map": list(s.d.map)},
             "c": {"target": s.D1.name, "map": list(s.c.map)}}
            for s in cls.spans
        ],
    }

"""The condition battery: each condition reduced to a finite enumeration.

Two evaluation modes share one interface.  When every member of the class
is jointly monic ("relation mode") a structure map into a member is fixed by
its legs, so existence reduces to membership of finitely many pairs and
uniqueness and preservation are automatic.  Otherwise candidate maps are
enumerated and counted ("general mode").
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .algebra import AlgebraError, FiniteAlgebra, Hom, power, product, search_homs
from .category import (
    ConcreteCategory,
    Span,
    SplitSpan,
    TopPart,
    is_jointly_epic,
    is_jointly_monic,
    is_local_product,
    kp_construction,
    make_top_part,
    top_parts,
)
from .diagram import Diagram
from .spanclass import (
    ALL,
    CUSTOM,
    RELATIONS,
    STRONG,
    SpanClass,
    closed_under_kp,
    contains_local_products,
    all_relations,
    custom,
    is_difunctional,
    is_reflexive,
    is_symmetric,
    is_transitive,
    member,
    members,
    relation_mask,
    stable_under_regular_mono,
    strong_tests,
    strong_violation,
)
from .structures import (
    DirectedKite,
    ReflexiveGraph,
    check_autonomous,
    check_kock,
    dense_p,
    find_multiplications,
    inverse_for,
    mult_graph_structures,
    pregroupoid_structures,
    pseudogroupoid_structures,
    validate_category,
)

THEOREMS = {
    "T1": [str(i) for i in range(1, 7)],
    "T5": list("ABCDEFGHIJKLMNO"),
    "T6": [str(i) for i in range(1, 18)],
    "C15": [str(i) for i in range(1, 7)],
    "C16": [str(i) for i in range(1, 7)],
    "C17": [str(i) for i in range(1, 7)],
    "P51": ["1"],
    "P52": ["1"],
    "P53": ["1"],
    "SIG": ["1"],
}

# condition id -> primitive check
PRIMITIVE = {
    "T1.1": "lawvere", "T1.2": "grpd_section", "T1.3": "cat_section", "T1.4": "compat",
    "T1.5": "dikite", "T1.6": "pre_unique_kock",
    "T5.A": "lawvere", "T5.B": "grpd_section", "T5.C": "cat_iso", "T5.D": "cat_section",
    "T5.E": "mg_iso", "T5.F": "mg_section", "T5.G": "compat", "T5.H": "dikite", "T5.I": "pseudo",
    "T5.J": "pre_section", "T5.K": "pre_iso", "T5.L": "kock_section", "T5.M": "kock_iso",
    "T5.N": "mkite_section", "T5.O": "mkite_iso",
    "T6.1": "natural_maltsev", "T6.2": "lawvere", "T6.3": "grpd_section", "T6.4": "cat_iso",
    "T6.5": "cat_section", "T6.6": "mg_iso", "T6.7": "mg_section", "T6.8": "pre_iso",
    "T6.9": "pre_section", "T6.10": "kock_iso", "T6.11": "kock_section", "T6.12": "dikite",
    "T6.13": "compat_free", "T6.14": "pseudo", "T6.15": "comparison_section",
    "T6.16": "local_coproduct", "T6.17": "pre_unique_autonomy",
    "C15.1": "weakly_maltsev", "C15.2": "equivalence", "C15.3": "preorder", "C15.4": "compat",
    "C15.5": "dikite", "C15.6": "difunctional",
    "C16.1": "tolerance", "C16.2": "equivalence", "C16.3": "preorder", "C16.4": "compat",
    "C16.5": "dikite", "C16.6": "difunctional",
    "C17.1": "natural_maltsev", "C17.2": "grpd_section", "C17.3": "cat_section", "C17.4": "compat",
    "C17.5": "dikite", "C17.6": "pre_section",
    "P51.1": "prop51", "P52.1": "prop52", "P53.1": "prop53", "SIG.1": "signature",
}

COROLLARY = {STRONG: "C15", RELATIONS: "C16", ALL: "C17"}


def all_condition_ids() -> list[str]:
    return [f"{t}.{k}" for t, ks in THEOREMS.items() for k in ks]


def battery_ids(cls: SpanClass) -> list[str]:
    """The conditions that must agree for ``cls`` (the shared battery plus the class-specific block)."""
    ids = [f"T1.{k}" for k in THEOREMS["T1"]] + [f"T5.{k}" for k in THEOREMS["T5"]]
    cor = COROLLARY.get(cls.kind)
    if cor:
        ids += [f"{cor}.{k}" for k in THEOREMS[cor]]
    if cls.kind == ALL:
        ids += [f"T6.{k}" for k in THEOREMS["T6"]]
    ids.append("SIG.1")
    return ids


def sort_ids(ids) -> list[str]:
    order = {c: i for i, c in enumerate(all_condition_ids())}
    return sorted(set(ids), key=lambda c: order.get(c, len(order)))


class NoNaturalOperation(AlgebraError):
    def __init__(self, message: str, witness: dict | None = None):
        super().__init__(message)
        self.witness = witness


@dataclass
class Budget:
    """Caps on enumeration; hitting one turns a verdict into ``None`` unless a failure was found."""

    structures: int = 64
    candidates: int = 4096
    csp_nodes: int = 20000
    bar_pairs: int = 20000


@dataclass
class Outcome:
    verdict: bool | None
    witness: dict | None = None
    certificate: dict | None = None
    note: str = ""
    checked: int = 0


def _digest(chunks) -> str:
    h = hashlib.sha256()
    for c in chunks:
        h.update(np.asarray(c, dtype=np.int64).tobytes())
        h.update(b"|")
    return h.hexdigest()[:16]


def _rows_key(rows: np.ndarray) -> list[bytes]:
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    return [r.tobytes() for r in rows]


# --------------------------------------------------------------------------
# constraint satisfaction for section conditions

@dataclass
class CSPResult:
    status: str  # "sat" | "unsat" | "unknown"
    assignment: dict | None = None
    empty: object = None
    solutions: int = 0


def solve_csp(domains: dict, allowed: dict, budget: int, count: int = 1) -> CSPResult:
    """Arc consistency then backtracking; ``allowed[(u, v)]`` is a bool matrix over domain indices.

    Returns at most ``count`` solutions' worth of counting in ``solutions``.
    """
    live = {v: np.ones(n, dtype=bool) for v, n in domains.items()}
    nbrs: dict = {v: [] for v in domains}
    for (u, v) in allowed:
        nbrs[u].append(v)
        if u != v:
            nbrs[v].append(u)
    # unary constraints from self loops
    for (u, v), mat in allowed.items():
        if u == v:
            live[u] &= np.diagonal(mat).astype(bool)
    for v in domains:
        if not live[v].any():
            return CSPResult("unsat", empty=v)

    def revise(u, v) -> bool:
        mat = allowed.get((u, v))
        if mat is not None:
            ok = (mat[:, live[v]]).any(axis=1)
        else:
            ok = (allowed[(v, u)][live[v], :]).any(axis=0)
        new = live[u] & ok
        if not np.array_equal(new, live[u]):
            live[u] = new
            return True
        return False

    queue = [(u, v) for u in domains for v in nbrs[u] if u != v]
    while queue:
        u, v = queue.pop()
        if revise(u, v):
            if not live[u].any():
                return CSPResult("unsat", empty=u)
            queue.extend((w, u) for w in nbrs[u] if w != u)
    order = sorted(domains, key=lambda v: (int(live[v].sum()), str(v)))
    if all(int(live[v].sum()) == 1 for v in domains):
        return CSPResult("sat", {v: int(np.flatnonzero(live[v])[0]) for v in domains}, solutions=1)
    nodes = 0
    found: list[dict] = []

    def consistent(v, a, assign) -> bool:
        for w in nbrs[v]:
            if w in assign:
                b = assign[w]
                if (v, w) in allowed and not allowed[(v, w)][a, b]:
                    return False
                if (w, v) in allowed and not allowed[(w, v)][b, a]:
                    return False
        return True

    def rec(i, assign) -> bool:
        nonlocal nodes
        if len(found) >= count:
            return True
        if i == len(order):
            found.append(dict(assign))
            return len(found) >= count
        v = order[i]
        for a in np.flatnonzero(live[v]).tolist():
            nodes += 1
            if nodes > budget:
                raise TimeoutError
            if consistent(v, a, assign):
                assign[v] = a
                if rec(i + 1, assign):
                    return True
                del assign[v]
        return False

    try:
        rec(0, {})
    except TimeoutError:
        if found:
            return CSPResult("sat", found[0], solutions=len(found))
        return CSPResult("unknown")
    if found:
        return CSPResult("sat", found[0], solutions=len(found))
    return CSPResult("unsat")


# --------------------------------------------------------------------------
# the battery

@dataclass
class _Group:
    """Members sharing an apex (general mode)."""

    apex: FiniteAlgebra
    spans: list[int]
    dlegs: list[tuple[FiniteAlgebra, tuple]]
    clegs: list[tuple[FiniteAlgebra, tuple]]
    pd: np.ndarray
    pc: np.ndarray

    @property
    def Dl(self) -> np.ndarray:
        return np.asarray([m for _, m in self.dlegs], dtype=np.int64).reshape(len(self.dlegs), self.apex.size)

    @property
    def Cl(self) -> np.ndarray:
        return np.asarray([m for _, m in self.clegs], dtype=np.int64).reshape(len(self.clegs), self.apex.size)


@dataclass
class _Feet:
    """Relation members over one pair of feet (relation mode)."""

    D0: FiniteAlgebra
    D1: FiniteAlgebra
    spans: list[int]
    masks: np.ndarray  # (k, n0*n1)


class Battery:
    def __init__(self, cat: ConcreteCategory, cls: SpanClass, bound: int | None = None,
                 budget: Budget | None = None):
        self.cat = cat
        self.cls = cls
        self.bound = cat.bound if bound is None else bound
        self.budget = budget or Budget()
        self.members: list[Span] = members(cls, cat, self.bound)
        self.rel_mode = all(s.jointly_monic for s in self.members)
        self._cache: dict = {}
        self.notes: dict[str, str] = {}

    # ---- shared enumerations

    def parts(self) -> list[TopPart]:
        return top_parts(self.cat, self.bound)[0]

    def skipped_parts(self) -> int:
        return top_parts(self.cat, self.bound)[1]

    def groups(self) -> list[_Group]:
        got = self._cache.get("groups")
        if got is not None:
            return got
        by_apex: dict[int, _Group] = {}
        order = []
        for i, s in enumerate(self.members):
            g = by_apex.get(id(s.apex))
            if g is None:
                g = _Group(s.apex, [], [], [], np.zeros(0, np.int64), np.zeros(0, np.int64))
                by_apex[id(s.apex)] = g
                order.append(g)
            g.spans.append(i)
        for g in order:
            dl: dict = {}
            cl: dict = {}
            pd, pc = [], []
            for i in g.spans:
                s = self.members[i]
                kd = (id(s.D0), s.d.map)
                kc = (id(s.D1), s.c.map)
                if kd not in dl:
                    dl[kd] = len(g.dlegs)
                    g.dlegs.append((s.D0, s.d.map))
                if kc not in cl:
                    cl[kc] = len(g.clegs)
                    g.clegs.append((s.D1, s.c.map))
                pd.append(dl[kd])
                pc.append(cl[kc])
            g.pd = np.asarray(pd, dtype=np.int64)
            g.pc = np.asarray(pc, dtype=np.int64)
        self._cache["groups"] = order
        return order

    def feet(self) -> list[_Feet]:
        got = self._cache.get("feet")
        if got is not None:
            return got
        by: dict[tuple[int, int], _Feet] = {}
        order = []
        for i, s in enumerate(self.members):
            key = (id(s.D0), id(s.D1))
            if key not in by:
                by[key] = _Feet(s.D0, s.D1, [], np.zeros(0))
                order.append(by[key])
            by[key].spans.append(i)
        for f in order:
            f.masks = np.stack([relation_mask(self.members[i]).reshape(-1) for i in f.spans])
        self._cache["feet"] = order
        return order

    # ---- the candidate engine: homs P -> D with prescribed values

    def candidates(self, P: FiniteAlgebra, D: FiniteAlgebra, fixed: dict[int, int]) -> tuple[np.ndarray, bool]:
        key = ("cand", id(P), id(D), tuple(sorted(fixed.items())))
        got = self._cache.get(key)
        if got is not None:
            return got[1], got[2]
        cap = self.budget.candidates
        rows = list(search_homs(P, D, fixed=fixed, limit=cap + 1))
        truncated = len(rows) > cap
        arr = np.asarray(rows[:cap], dtype=np.int64).reshape(-1, P.size)
        self._cache[key] = (P, arr, truncated)
        return arr, truncated

    def _count_exact(self, P, D, fixed, d, c, wd, wc) -> int:
        """Exact count (0, 1 or 2 meaning 'at least two') for one pair of legs."""
        d, c = np.asarray(d), np.asarray(c)
        allowed = (d[None, :] == d[wd][:, None]) & (c[None, :] == c[wc][:, None])
        return len(list(search_homs(P, D, allowed=allowed, fixed=fixed, limit=2)))

    def counts(self, P: FiniteAlgebra, D: FiniteAlgebra, fixed: dict[int, int], Dl: np.ndarray,
               Cl: np.ndarray, pd: np.ndarray, pc: np.ndarray, wd: np.ndarray, wc: np.ndarray) -> np.ndarray:
        """Number of m: P -> D with the fixed values, d m = d wd and c m = c wc, per leg pair.

        Values are capped at 2.
        """
        M, truncated = self.candidates(P, D, fixed)
        if len(M):
            okd = (Dl[:, M] == Dl[:, wd][:, None, :]).all(axis=-1)
            okc = (Cl[:, M] == Cl[:, wc][:, None, :]).all(axis=-1)
            cnt = np.minimum((okd[pd] & okc[pc]).sum(axis=1), 2)
        else:
            cnt = np.zeros(len(pd), dtype=np.int64)
        if truncated:
            for k in np.flatnonzero(cnt < 2):
                cnt[k] = self._count_exact(P, D, fixed, Dl[pd[k]], Cl[pc[k]], wd, wc)
        return cnt

    # ---- witnesses

    def _dikite_witness(self, tp: TopPart, span: Span, alpha, gamma, count: int, kind="dikite") -> dict:
        dg = Diagram(kind)
        dg.mor("f", tp.A, tp.B, tp.f).mor("r", tp.B, tp.A, tp.r)
        dg.mor("g", tp.C, tp.B, tp.g).mor("s", tp.B, tp.C, tp.s)
        dg.mor("alpha", tp.A, span.apex, alpha).mor("gamma", tp.C, span.apex, gamma)
        dg.span(span)
        k = DirectedKite(tp, span, np.asarray(alpha), np.asarray(gamma))
        ms = find_multiplications(k, limit=2)
        dg.note(multiplications=count, pullback=[list(t) for t in tp.P.sub.tuples],
                examples=[m.tolist() for m in ms])
        return dg.to_json()

    def _rel_embed(self, span: Span, m0, m1) -> np.ndarray:
        idx = span.apex  # apex of a relation member is a subproduct
        sub_index = {(a, b): i for i, (a, b) in enumerate(zip(span.d.map, span.c.map))}
        del idx
        return np.asarray([sub_index[(int(x), int(y))] for x, y in zip(m0, m1)], dtype=np.int64)

    # ======================================================================
    # dikites (H), and the signature

    def dikite_scan(self, stop: bool = True) -> tuple[list[dict], np.ndarray, int, str]:
        """Scan every dikite with direction in the class.

        Returns (witnesses, per-member admissible flags, dikites checked, digest).
        """
        key = ("dikite", stop)
        if key in self._cache:
            return self._cache[key]
        if not stop and ("dikite", True) in self._cache and not self._cache[("dikite", True)][0]:
            self._cache[key] = self._cache[("dikite", True)]
            return self._cache[key]
        ok = np.ones(len(self.members), dtype=bool)
        fails: list[dict] = []
        checked = 0
        digest_parts: list = []
        if self.rel_mode:
            scan = self._dikite_scan_rel
        else:
            scan = self._dikite_scan_general
        for w, idx, n in scan(ok, digest_parts):
            checked += n
            if w is not None:
                fails.append(w)
                if stop:
                    break
        out = (fails, ok, checked, _digest(digest_parts))
        self._cache[key] = out
        return out

    def _dikite_scan_general(self, ok, digest_parts) -> Iterator:
        for tp in self.parts():
            for g in self.groups():
                D = g.apex
                HA = self.cat.hom_array(tp.A, D)
                HC = self.cat.hom_array(tp.C, D)
                if not len(HA) or not len(HC):
                    continue
                Dl, Cl = g.Dl, g.Cl
                byC: dict[bytes, list[int]] = {}
                for j, k in enumerate(_rows_key(HC[:, tp.s])):
                    byC.setdefault(k, []).append(j)
                for ai, akey in enumerate(_rows_key(HA[:, tp.r])):
                    alpha = HA[ai]
                    dval = (Dl[:, alpha] == Dl[:, alpha[tp.r][tp.f]]).all(axis=1)
                    for gj in byC.get(akey, []):
                        gamma = HC[gj]
                        cval = (Cl[:, alpha[tp.r][tp.g]] == Cl[:, gamma]).all(axis=1)
                        valid = dval[g.pd] & cval[g.pc]
                        if not valid.any():
                            continue
                        fixed = {int(t): int(alpha[a]) for a, t in enumerate(tp.e1)}
                        clash = False
                        for c_, t in enumerate(tp.e2):
                            if fixed.get(int(t), int(gamma[c_])) != int(gamma[c_]):
                                clash = True
                            fixed[int(t)] = int(gamma[c_])
                        sel = np.flatnonzero(valid)
                        if clash:
                            cnt = np.zeros(len(sel), dtype=np.int64)
                        else:
                            cnt = self.counts(tp.P.obj, D, fixed, Dl, Cl, g.pd[sel], g.pc[sel],
                                              gamma[tp.pi2], alpha[tp.pi1])
                        digest_parts.append(cnt)
                        bad = sel[cnt != 1]
                        if len(bad):
                            for b in bad:
                                ok[g.spans[b]] = False
                            b = bad[0]
                            span = self.members[g.spans[b]]
                            yield (self._dikite_witness(tp, span, alpha, gamma,
                                                        int(cnt[np.flatnonzero(sel == b)[0]])),
                                   g.spans[b], len(sel))
                        else:
                            yield None, None, len(sel)

    def _dikite_scan_rel(self, ok, digest_parts) -> Iterator:
        cat = self.cat
        for tp in self.parts():
            rf = tp.r[tp.f]
            rg = tp.r[tp.g]
            for ft in self.feet():
                D0, D1 = ft.D0, ft.D1
                n1 = D1.size
                HA0 = cat.hom_array(tp.A, D0)
                HA1 = cat.hom_array(tp.A, D1)
                HC0 = cat.hom_array(tp.C, D0)
                if not (len(HA0) and len(HA1) and len(HC0)):
                    continue
                F0 = HA0[(HA0[:, rf] == HA0).all(axis=1)]
                G1 = HA1[:, rg]  # gamma1 = alpha1 r g, one per alpha1
                for a0 in F0:
                    G0 = HC0[(HC0[:, tp.s] == a0[tp.r]).all(axis=1)]
                    if not len(G0):
                        continue
                    needA = a0[None, :] * n1 + HA1  # (h, |A|)
                    hypA = ft.masks[:, needA].all(axis=-1)  # (k, h)
                    needC = G0[:, None, :] * n1 + G1[None, :, :]  # (g, h, |C|)
                    hypC = ft.masks[:, needC].all(axis=-1)  # (k, g, h)
                    req = G0[:, None, tp.pi2] * n1 + HA1[None, :, tp.pi1]  # (g, h, |P|)
                    concl = ft.masks[:, req].all(axis=-1)
                    viol = hypA[:, None, :] & hypC & ~concl
                    n = int((hypA[:, None, :] & hypC).sum())
                    digest_parts.append([n])
                    if viol.any():
                        ks, gs, hs = np.nonzero(viol)
                        for k in np.unique(ks):
                            ok[ft.spans[k]] = False
                        k, gi, hi = int(ks[0]), int(gs[0]), int(hs[0])
                        span = self.members[ft.spans[k]]
                        alpha = self._rel_embed(span, a0, HA1[hi])
                        gamma = self._rel_embed(span, G0[gi], G1[hi])
                        yield self._dikite_witness(tp, span, alpha, gamma, 0), ft.spans[k], n
                    else:
                        yield None, None, n

    def dikite(self) -> Outcome:
        fails, ok, checked, dig = self.dikite_scan(stop=True)
        cert = {"dikites": checked, "top_parts": len(self.parts()), "skipped_top_parts": self.skipped_parts(),
                "digest": dig}
        if fails:
            return Outcome(False, fails[0], cert, checked=checked)
        return Outcome(True, None, cert, "every multiplication is unique", checked)

    def signature(self) -> Outcome:
        fails, ok, checked, _ = self.dikite_scan(stop=False)
        cert = {"members": len(self.members), "in_signature": int(ok.sum()),
                "outside": [self._span_label(i) for i in np.flatnonzero(~ok)[:20]]}
        if fails:
            return Outcome(False, fails[0], cert, checked=checked)
        return Outcome(True, None, cert, checked=checked)

    def signature_members(self) -> list[Span]:
        _, ok, _, _ = self.dikite_scan(stop=False)
        return [s for s, k in zip(self.members, ok) if k]

    def _span_label(self, i: int) -> str:
        s = self.members[i]
        return f"{s.apex.name}:{s.D0.name}{list(s.d.map)},{s.D1.name}{list(s.c.map)}"

    # ======================================================================
    # compatibility (G)

    def e_configs(self, spans: list[Span]) -> Iterator[tuple[Span, np.ndarray, np.ndarray]]:
        """(E-span, e1, e2): sections of p1 and p2 with e1p1 and e2p2 commuting."""
        for s in spans:
            if not s.jointly_monic:
                continue
            E, A, C = s.apex, s.D0, s.D1
            p1, p2 = np.asarray(s.d.map), np.asarray(s.c.map)
            S1 = self.cat.hom_array(A, E)
            S2 = self.cat.hom_array(C, E)
            if not len(S1) or not len(S2):
                continue
            S1 = S1[(p1[S1] == np.arange(A.size)).all(axis=1)]
            S2 = S2[(p2[S2] == np.arange(C.size)).all(axis=1)]
            for e1 in S1:
                q1 = e1[p1]
                for e2 in S2:
                    q2 = e2[p2]
                    if np.array_equal(q1[q2], q2[q1]):
                        yield s, e1, e2

    def compat(self, free: bool = False) -> Outcome:
        key = ("compat", free)
        if key in self._cache:
            return self._cache[key]
        if free and self.cls.kind == ALL:
            out = self.compat(False)
            self._cache[key] = out
            return out
        espans = self.members
        if free or self.cls.kind == ALL:
            # every jointly monic span is isomorphic to a relation
            espans = all_relations(self.cat, self.bound)
        n = 0
        out = None
        scan = self._compat_rel if self.rel_mode else self._compat_general
        for w, k in scan(espans):
            n += k
            if w is not None:
                out = Outcome(False, w, {"configurations": n}, checked=n)
                break
        if out is None:
            out = Outcome(True, None, {"configurations": n}, checked=n)
        self._cache[key] = out
        return out

    def _compat_witness(self, s: Span, e1, e2, span: Span, alpha, gamma, count: int) -> dict:
        dg = Diagram("compatibility")
        dg.mor("p1", s.apex, s.D0, s.d).mor("p2", s.apex, s.D1, s.c)
        dg.mor("e1", s.D0, s.apex, e1).mor("e2", s.D1, s.apex, e2)
        dg.mor("alpha", s.D0, span.apex, alpha).mor("gamma", s.D1, span.apex, gamma)
        dg.span(span)
        dg.note(morphisms=count)
        return dg.to_json()

    def _compat_general(self, espans) -> Iterator:
        for s, e1, e2 in self.e_configs(espans):
            E, A, C = s.apex, s.D0, s.D1
            p1, p2 = np.asarray(s.d.map), np.asarray(s.c.map)
            q12 = p1[e2[p2]]  # p1 e2 p2 : E -> A
            q21 = p2[e1[p1]]  # p2 e1 p1 : E -> C
            for g in self.groups():
                D = g.apex
                HA = self.cat.hom_array(A, D)
                HC = self.cat.hom_array(C, D)
                if not len(HA) or not len(HC):
                    continue
                Dl, Cl = g.Dl, g.Cl
                byC: dict[bytes, list[int]] = {}
                for j, k in enumerate(_rows_key(HC[:, q21])):
                    byC.setdefault(k, []).append(j)
                for ai, akey in enumerate(_rows_key(HA[:, q12])):
                    alpha = HA[ai]
                    dval = (Dl[:, alpha[p1]] == Dl[:, alpha[q12]]).all(axis=1)
                    for gj in byC.get(akey, []):
                        gamma = HC[gj]
                        cval = (Cl[:, gamma[p2]] == Cl[:, gamma[q21]]).all(axis=1)
                        valid = dval[g.pd] & cval[g.pc]
                        if not valid.any():
                            continue
                        fixed = {int(t): int(alpha[a]) for a, t in enumerate(e1)}
                        clash = False
                        for c_, t in enumerate(e2):
                            if fixed.get(int(t), int(gamma[c_])) != int(gamma[c_]):
                                clash = True
                            fixed[int(t)] = int(gamma[c_])
                        sel = np.flatnonzero(valid)
                        if clash:
                            cnt = np.zeros(len(sel), dtype=np.int64)
                        else:
                            cnt = self.counts(E, D, fixed, Dl, Cl, g.pd[sel], g.pc[sel], gamma[p2], alpha[p1])
                        bad = np.flatnonzero(cnt != 1)
                        if len(bad):
                            span = self.members[g.spans[sel[bad[0]]]]
                            yield self._compat_witness(s, e1, e2, span, alpha, gamma, int(cnt[bad[0]])), len(sel)
                            return
                        yield None, len(sel)

    def _compat_rel(self, espans) -> Iterator:
        cat = self.cat
        for s, e1, e2 in self.e_configs(espans):
            E, A, C = s.apex, s.D0, s.D1
            p1, p2 = np.asarray(s.d.map), np.asarray(s.c.map)
            q12 = p1[e2[p2]]
            q21 = p2[e1[p1]]
            for ft in self.feet():
                D0, D1 = ft.D0, ft.D1
                n1 = D1.size
                HA0, HA1 = cat.hom_array(A, D0), cat.hom_array(A, D1)
                HC0, HC1 = cat.hom_array(C, D0), cat.hom_array(C, D1)
                if not (len(HA0) and len(HA1) and len(HC0) and len(HC1)):
                    continue
                A0 = HA0[(HA0[:, p1] == HA0[:, q12]).all(axis=1)]
                C1 = HC1[(HC1[:, p2] == HC1[:, q21]).all(axis=1)]
                for a0 in A0:
                    G0 = HC0[(HC0[:, q21] == a0[q12]).all(axis=1)]
                    if not len(G0):
                        continue
                    for c1 in C1:
                        A1 = HA1[(HA1[:, q12] == c1[q21]).all(axis=1)]
                        if not len(A1):
                            continue
                        needA = a0[None, :] * n1 + A1  # (h, |A|)
                        hypA = ft.masks[:, needA].all(axis=-1)  # (k, h)
                        needC = G0 * n1 + c1[None, :]  # (g, |C|)
                        hypC = ft.masks[:, needC].all(axis=-1)  # (k, g)
                        req = G0[:, None, p2] * n1 + A1[None, :, p1]  # (g, h, |E|)
                        concl = ft.masks[:, req].all(axis=-1)  # (k, g, h)
                        hyp = hypC[:, :, None] & hypA[:, None, :]
                        viol = hyp & ~concl
                        n = int(hyp.sum())
                        if viol.any():
                            k, gi, hi = (int(v[0]) for v in np.nonzero(viol))
                            span = self.members[ft.spans[k]]
                            alpha = self._rel_embed(span, a0, A1[hi])
                            gamma = self._rel_embed(span, G0[gi], c1)
                            yield self._compat_witness(s, e1, e2, span, alpha, gamma, 0), n
                            return
                        yield None, n

    # ======================================================================
    # reflexive graphs and their structures

    def graphs(self) -> list[tuple[int, ReflexiveGraph]]:
        got = self._cache.get("graphs")
        if got is not None:
            return got
        out = []
        for i, s in enumerate(self.members):
            if s.D0 is not s.D1:
                continue
            H = self.cat.hom_array(s.D0, s.apex)
            if not len(H):
                continue
            d, c = np.asarray(s.d.map), np.asarray(s.c.map)
            ident = np.arange(s.D0.size)
            for e in H[(d[H] == ident).all(axis=1) & (c[H] == ident).all(axis=1)]:
                out.append((i, ReflexiveGraph(s.d, s.c, Hom(s.D0, s.apex, tuple(e.tolist())))))
        self._cache["graphs"] = out
        return out

    def graph_structures(self, kind: str) -> list[tuple[list[np.ndarray], bool]]:
        """Per graph: (structures, truncated) for kind in mg | cat | grpd (grpd entries are m)."""
        key = ("gstruct", kind)
        if key in self._cache:
            return self._cache[key]
        cap = self.budget.structures
        out = []
        for _, g in self.graphs():
            if kind == "mg":
                ms = mult_graph_structures(g, limit=cap + 1)
                out.append((ms[:cap], len(ms) > cap))
            else:
                base, trunc = self.graph_structures("mg")[len(out)]
                if kind == "cat":
                    out.append(([m for m in base if validate_category(g, m)], trunc))
                else:
                    cats, _ = self.graph_structures("cat")[len(out)]
                    out.append(([m for m in cats if inverse_for(g, m) is not None], trunc))
        self._cache[key] = out
        return out

    def _graph_witness(self, g: ReflexiveGraph, structures: list, label: str) -> dict:
        dg = Diagram("graph")
        dg.mor("d", g.C1, g.C0, g.d).mor("c", g.C1, g.C0, g.c).mor("e", g.C0, g.C1, g.e)
        dg.note(problem=label, composable=[list(t) for t in g.c2.sub.tuples],
                structures=[np.asarray(m).tolist() for m in structures[:2]])
        return dg.to_json()

    def graph_pairs(self) -> Iterator[tuple[int, int, np.ndarray]]:
        """(source index, target index, graph morphisms f1) for non-monic targets."""
        key = "gpairs"
        if key in self._cache:
            yield from self._cache[key]
            return
        from .structures import graph_morphisms

        out = []
        gs = self.graphs()
        for a, (_, g) in enumerate(gs):
            for b, (_, h) in enumerate(gs):
                if h.span.jointly_monic:
                    continue
                F = graph_morphisms(self.cat, g, h)
                if len(F):
                    out.append((a, b, np.asarray(F)))
        self._cache[key] = out
        yield from out

    @staticmethod
    def _dense_m(g: ReflexiveGraph, m) -> np.ndarray:
        n = g.C1.size
        out = np.full((n, n), -1, dtype=np.int64)
        t = np.asarray(g.c2.sub.tuples).reshape(-1, 2)
        out[t[:, 0], t[:, 1]] = np.asarray(m)
        return out

    def graph_preserve(self, a: int, b: int, F: np.ndarray, ma, mb) -> np.ndarray:
        """For each f1 in F: does it carry ma to mb?"""
        g = self.graphs()[a][1]
        h = self.graphs()[b][1]
        t = np.asarray(g.c2.sub.tuples).reshape(-1, 2)
        dense = self._dense_m(h, mb)
        lhs = F[:, np.asarray(ma)]
        rhs = dense[F[:, t[:, 0]], F[:, t[:, 1]]]
        return (lhs == rhs).all(axis=1)

    def graph_iso(self, kind: str) -> Outcome:
        key = ("giso", kind)
        if key in self._cache:
            return self._cache[key]
        structs = self.graph_structures(kind)
        gs = self.graphs()
        unknown = False
        for (i, g), (ms, trunc) in zip(gs, structs):
            if len(ms) == 0 and not trunc:
                out = Outcome(False, self._graph_witness(g, ms, f"no {kind} structure"), checked=len(gs))
                self._cache[key] = out
                return out
            if len(ms) >= 2:
                out = Outcome(False, self._graph_witness(g, ms, f"{len(ms)}+ {kind} structures"),
                              checked=len(gs))
                self._cache[key] = out
                return out
            if trunc:
                unknown = True
        if unknown:
            out = Outcome(None, None, None, "structure enumeration truncated", len(gs))
            self._cache[key] = out
            return out
        choice = [ms[0] for ms, _ in structs]
        out = self._graph_functorial(choice, kind)
        self._cache[key] = out
        return out

    def _graph_functorial(self, choice: list, kind: str) -> Outcome:
        key = ("gfun", _digest(choice))
        if key in self._cache:
            v, w, n = self._cache[key]
        else:
            v, w, n = True, None, 0
            for a, b, F in self.graph_pairs():
                n += len(F)
                ok = self.graph_preserve(a, b, F, choice[a], choice[b])
                if not ok.all():
                    g, h = self.graphs()[a][1], self.graphs()[b][1]
                    f1 = F[int(np.flatnonzero(~ok)[0])]
                    dg = Diagram("graph-morphism")
                    dg.mor("d", g.C1, g.C0, g.d).mor("c", g.C1, g.C0, g.c).mor("e", g.C0, g.C1, g.e)
                    dg.mor("d'", h.C1, h.C0, h.d).mor("c'", h.C1, h.C0, h.c).mor("e'", h.C0, h.C1, h.e)
                    dg.mor("f1", g.C1, h.C1, f1)
                    dg.note(m=np.asarray(choice[a]).tolist(), m_target=np.asarray(choice[b]).tolist())
                    v, w = False, dg.to_json()
                    break
            self._cache[key] = (v, w, n)
        cert = {"graphs": len(self.graphs()), "morphisms_checked": n,
                "structures": _digest(choice)} if v else None
        return Outcome(v, w, cert, f"{kind} structures preserved" if v else "", n)

    def graph_section(self, kind: str) -> Outcome:
        key = ("gsec", kind)
        if key in self._cache:
            return self._cache[key]
        structs = self.graph_structures(kind)
        gs = self.graphs()
        for (i, g), (ms, trunc) in zip(gs, structs):
            if not ms and not trunc:
                out = Outcome(False, self._graph_witness(g, ms, f"no {kind} structure"), checked=len(gs))
                self._cache[key] = out
                return out
        if all(len(ms) == 1 for ms, _ in structs):
            out = self._graph_functorial([ms[0] for ms, _ in structs], kind)
        else:
            out = self._graph_csp(structs, kind)
        self._cache[key] = out
        return out

    def _graph_csp(self, structs, kind) -> Outcome:
        if any(t for _, t in structs):
            return Outcome(None, note="structure enumeration truncated")
        domains = {a: len(ms) for a, (ms, _) in enumerate(structs)}
        allowed: dict = {}
        for a, b, F in self.graph_pairs():
            mat = np.zeros((domains[a], domains[b]), dtype=bool)
            for i, ma in enumerate(structs[a][0]):
                for j, mb in enumerate(structs[b][0]):
                    mat[i, j] = self.graph_preserve(a, b, F, ma, mb).all()
            if (a, b) in allowed:
                allowed[(a, b)] &= mat
            else:
                allowed[(a, b)] = mat
        res = solve_csp(domains, allowed, self.budget.csp_nodes)
        if res.status == "sat":
            choice = [structs[a][0][res.assignment[a]] for a in range(len(structs))]
            return Outcome(True, None, {"structures": _digest(choice)}, "functorial choice found")
        if res.status == "unsat":
            w = None
            if res.empty is not None:
                g = self.graphs()[res.empty][1]
                w = self._graph_witness(g, structs[res.empty][0], f"no functorial {kind} choice")
            return Outcome(False, w, None, "no functorial choice")
        return Outcome(None, note="section search budget exhausted")

    # ======================================================================
    # spans: pregroupoids, Kock pregroupoids, pseudogroupoids

    def span_structures(self, kind: str) -> list[tuple[list[np.ndarray], bool]]:
        key = ("sstruct", kind)
        if key in self._cache:
            return self._cache[key]
        cap = self.budget.structures
        out = []
        if kind == "pre":
            for s in self.members:
                ps = pregroupoid_structures(s, limit=cap + 1)
                out.append((ps[:cap], len(ps) > cap))
        elif kind == "kock":
            for s, (ps, trunc) in zip(self.members, self.span_structures("pre")):
                out.append(([p for p in ps if check_kock(s, p).ok], trunc))
        elif kind == "pseudo":
            for s in self.members:
                ps = pseudogroupoid_structures(s, limit=cap + 1)
                out.append(([_pseudo_as_p(s, m) for m in ps[:cap]], len(ps) > cap))
        self._cache[key] = out
        return out

    def _span_witness(self, s: Span, structures, label: str) -> dict:
        dg = Diagram("span")
        dg.span(s)
        dg.note(problem=label, structures=[np.asarray(p).tolist() for p in structures[:2]])
        return dg.to_json()

    def leg_compat(self, D: FiniteAlgebra, D2: FiniteAlgebra, F: np.ndarray, legs, legs2) -> np.ndarray:
        """compat[i, j, f]: some h with h legs[i] = legs2[j] f."""
        out = np.zeros((len(legs), len(legs2), len(F)), dtype=bool)
        for i, (X, l) in enumerate(legs):
            l = np.asarray(l)
            for j, (Y, l2) in enumerate(legs2):
                H = self.cat.hom_array(X, Y)
                if not len(H):
                    continue
                ach = {r.tobytes() for r in np.ascontiguousarray(H[:, l])}
                tgt = np.ascontiguousarray(np.asarray(l2)[F])
                out[i, j] = [r.tobytes() in ach for r in tgt]
        return out

    def span_morphism_scan(self, choice: list) -> tuple[bool, dict | None, int]:
        """Does every span morphism between members carry the chosen p to the chosen p?

        Targets that are jointly monic are skipped: the value is forced by the legs.
        """
        key = ("sfun", _digest([np.asarray(c) for c in choice]))
        if key in self._cache:
            return self._cache[key]
        groups = self.groups()
        n = 0
        result = (True, None, 0)
        dense = {}
        for g in groups:
            for i in g.spans:
                if not self.members[i].jointly_monic:
                    dense[i] = dense_p(kp_construction(self.members[i]), choice[i])
        for g in groups:
            D = g.apex
            for g2 in groups:
                D2 = g2.apex
                targets = [j for j in g2.spans if j in dense]
                if not targets:
                    continue
                F = self.cat.hom_array(D, D2)
                if not len(F):
                    continue
                cd = self.leg_compat(D, D2, F, g.dlegs, g2.dlegs)
                cc = self.leg_compat(D, D2, F, g.clegs, g2.clegs)
                tpos = np.asarray([g2.spans.index(j) for j in targets])
                Pstack = np.stack([dense[j] for j in targets])
                n2 = D2.size
                for si_local, i in enumerate(g.spans):
                    s = self.members[i]
                    comp = cd[g.pd[si_local]][g2.pd[tpos]] & cc[g.pc[si_local]][g2.pc[tpos]]  # (T, F)
                    if not comp.any():
                        continue
                    kp = kp_construction(s)
                    t = kp.triples
                    codes = F[:, t[:, 0]] * n2 * n2 + F[:, t[:, 1]] * n2 + F[:, t[:, 2]]  # (F, |T|)
                    lhs = F[:, np.asarray(choice[i])]  # (F, |T|)
                    rhs = Pstack[:, codes]  # (T, F, |T|)
                    good = (rhs == lhs[None]).all(axis=-1)
                    n += int(comp.sum())
                    bad = comp & ~good
                    if bad.any():
                        ti, fi = (int(v[0]) for v in np.nonzero(bad))
                        j = targets[ti]
                        s2 = self.members[j]
                        dg = Diagram("span-morphism")
                        dg.span(s).mor("d'", s2.apex, s2.D0, s2.d).mor("c'", s2.apex, s2.D1, s2.c)
                        dg.mor("f", s.apex, s2.apex, F[fi])
                        k = int(np.flatnonzero((rhs[ti, fi] != lhs[fi]))[0])
                        dg.note(p=np.asarray(choice[i]).tolist(), p_target=np.asarray(choice[j]).tolist(),
                                triple=t[k].tolist())
                        result = (False, dg.to_json(), n)
                        self._cache[key] = result
                        return result
        result = (True, None, n)
        self._cache[key] = result
        return result

    def span_iso(self, kind: str) -> Outcome:
        key = ("siso", kind)
        if key in self._cache:
            return self._cache[key]
        structs = self.span_structures(kind)
        unknown = False
        out = None
        for s, (ps, trunc) in zip(self.members, structs):
            if not ps and not trunc:
                out = Outcome(False, self._span_witness(s, ps, f"no {kind} structure"))
                break
            if len(ps) >= 2:
                out = Outcome(False, self._span_witness(s, ps, f"{len(ps)}+ {kind} structures"))
                break
            if trunc:
                unknown = True
        if out is None and unknown:
            out = Outcome(None, note="structure enumeration truncated")
        if out is None:
            choice = [ps[0] for ps, _ in structs]
            ok, w, n = self.span_morphism_scan(choice)
            cert = {"spans": len(self.members), "morphisms_checked": n, "structures": _digest(choice)}
            out = Outcome(ok, w, cert if ok else None, checked=n)
        self._cache[key] = out
        return out

    def span_section(self, kind: str) -> Outcome:
        key = ("ssec", kind)
        if key in self._cache:
            return self._cache[key]
        structs = self.span_structures(kind)
        out = None
        for s, (ps, trunc) in zip(self.members, structs):
            if not ps and not trunc:
                out = Outcome(False, self._span_witness(s, ps, f"no {kind} structure"))
                break
        if out is None:
            if all(len(ps) == 1 for ps, _ in structs):
                choice = [ps[0] for ps, _ in structs]
                ok, w, n = self.span_morphism_scan(choice)
                out = Outcome(ok, w, {"structures": _digest(choice)} if ok else None, checked=n)
            elif all(s.jointly_monic for s in self.members):
                out = Outcome(True, None, {"structures": "forced by the legs"})
            else:
                out = self._span_csp(structs, kind)
        self._cache[key] = out
        return out

    def _span_csp(self, structs, kind) -> Outcome:
        """Section search: one structure per member, preserved by every span morphism."""
        if any(t for _, t in structs):
            return Outcome(None, note="structure enumeration truncated")
        domains = {i: len(ps) for i, (ps, _) in enumerate(structs)}
        allowed: dict = {}
        groups = self.groups()
        edges = 0
        for g in groups:
            for g2 in groups:
                F = self.cat.hom_array(g.apex, g2.apex)
                if not len(F):
                    continue
                cd = self.leg_compat(g.apex, g2.apex, F, g.dlegs, g2.dlegs)
                cc = self.leg_compat(g.apex, g2.apex, F, g.clegs, g2.clegs)
                n2 = g2.apex.size
                for a, i in enumerate(g.spans):
                    s = self.members[i]
                    t = kp_construction(s).triples
                    codes = F[:, t[:, 0]] * n2 * n2 + F[:, t[:, 1]] * n2 + F[:, t[:, 2]]
                    for b, j in enumerate(g2.spans):
                        s2 = self.members[j]
                        if s2.jointly_monic:
                            continue
                        fs = np.flatnonzero(cd[g.pd[a], g2.pd[b]] & cc[g.pc[a], g2.pc[b]])
                        if not len(fs):
                            continue
                        edges += 1
                        if edges > self.budget.csp_nodes:
                            return Outcome(None, note="section search budget exhausted")
                        kp2 = kp_construction(s2)
                        mat = np.zeros((domains[i], domains[j]), dtype=bool)
                        dens = [dense_p(kp2, q) for q in structs[j][0]]
                        for x, p in enumerate(structs[i][0]):
                            lhs = F[fs][:, np.asarray(p)]
                            for y, dq in enumerate(dens):
                                mat[x, y] = (dq[codes[fs]] == lhs).all()
                        allowed[(i, j)] = allowed[(i, j)] & mat if (i, j) in allowed else mat
        res = solve_csp(domains, allowed, self.budget.csp_nodes)
        if res.status == "sat":
            choice = [structs[i][0][res.assignment[i]] for i in range(len(structs))]
            return Outcome(True, None, {"structures": _digest(choice)}, "functorial choice found")
        if res.status == "unsat":
            w = None
            if res.empty is not None:
                w = self._span_witness(self.members[res.empty], structs[res.empty][0],
                                       f"no functorial {kind} choice")
            return Outcome(False, w, None, "no functorial choice")
        return Outcome(None, note="section search budget exhausted")

    def pre_unique_with(self, extra: str) -> Outcome:
        base = self.span_iso("pre")
        if base.verdict is not True:
            return base
        choice = [ps[0] for ps, _ in self.span_structures("pre")]
        for s, p in zip(self.members, choice):
            v = check_kock(s, p) if extra == "kock" else check_autonomous(s, p)
            if not v.ok:
                w = self._span_witness(s, [p], f"{extra} fails at {list(v.witness)}")
                return Outcome(False, w)
        return Outcome(True, None, base.certificate, f"unique natural p, {extra} holds", base.checked)

    # ======================================================================
    # pseudogroupoids and split squares (I), comparison sections, local coproducts

    def split_squares(self) -> list[tuple[FiniteAlgebra, np.ndarray, np.ndarray, np.ndarray, np.ndarray, TopPart]]:
        """Commutative split squares (E, p1, e1, p2, e2) over a top part, E a universe object.

        Besides the listed equations we require p2 e1 = s f and p1 e2 = r g.
        """
        if "squares" in self._cache:
            return self._cache["squares"]
        by_ac: dict[tuple[int, int], list[TopPart]] = {}
        for tp in self.parts():
            by_ac.setdefault((id(tp.A), id(tp.C)), []).append(tp)
        out = []
        U = self.cat.universe
        for E in U:
            if E.size > self.bound:
                continue
            for A, C in itertools.product(U, U):
                tps = by_ac.get((id(A), id(C)))
                if not tps:
                    continue
                for p1, e1 in self.cat.split_pairs(E, A):
                    for p2, e2 in self.cat.split_pairs(E, C):
                        for tp in tps:
                            if (np.array_equal(tp.g[p2], tp.f[p1]) and np.array_equal(e1[tp.r], e2[tp.s])
                                    and np.array_equal(p2[e1], tp.s[tp.f]) and np.array_equal(p1[e2], tp.r[tp.g])):
                                out.append((E, p1, e1, p2, e2, tp))
        self._cache["squares"] = out
        return out

    def pseudo(self) -> Outcome:
        sec = self.span_section("pseudo")
        if sec.verdict is False:
            return sec
        n = 0
        scan = self._lift_rel if self.rel_mode else self._lift_general
        for w, k in scan():
            n += k
            if w is not None:
                return Outcome(False, w, None, "split-square lifting fails", n)
        if sec.verdict is None:
            return Outcome(None, None, {"liftings": n}, sec.note, n)
        return Outcome(True, None, {"liftings": n, **(sec.certificate or {})}, checked=n)

    def _square_witness(self, sq, span: Span, m, count) -> dict:
        E, p1, e1, p2, e2, tp = sq
        dg = Diagram("split-square")
        dg.mor("p1", E, tp.A, p1).mor("e1", tp.A, E, e1).mor("p2", E, tp.C, p2).mor("e2", tp.C, E, e2)
        dg.mor("f", tp.A, tp.B, tp.f).mor("r", tp.B, tp.A, tp.r)
        dg.mor("g", tp.C, tp.B, tp.g).mor("s", tp.B, tp.C, tp.s)
        dg.mor("m", E, span.apex, m).span(span)
        dg.note(liftings=count)
        return dg.to_json()

    def _lift_general(self) -> Iterator:
        for sq in self.split_squares():
            E, p1, e1, p2, e2, tp = sq
            for g in self.groups():
                D = g.apex
                HE = self.cat.hom_array(E, D)
                if not len(HE):
                    continue
                Dl, Cl = g.Dl, g.Cl
                for m in HE:
                    dval = (Dl[:, m] == Dl[:, m[e2[p2]]]).all(axis=1)
                    cval = (Cl[:, m] == Cl[:, m[e1[p1]]]).all(axis=1)
                    valid = dval[g.pd] & cval[g.pc]
                    if not valid.any():
                        continue
                    alpha, gamma = m[e1], m[e2]
                    fixed = {int(t): int(alpha[a]) for a, t in enumerate(tp.e1)}
                    clash = False
                    for c_, t in enumerate(tp.e2):
                        if fixed.get(int(t), int(gamma[c_])) != int(gamma[c_]):
                            clash = True
                        fixed[int(t)] = int(gamma[c_])
                    sel = np.flatnonzero(valid)
                    if clash:
                        cnt = np.zeros(len(sel), dtype=np.int64)
                    else:
                        cnt = self.counts(tp.P.obj, D, fixed, Dl, Cl, g.pd[sel], g.pc[sel],
                                          gamma[tp.pi2], alpha[tp.pi1])
                    bad = np.flatnonzero(cnt != 1)
                    if len(bad):
                        span = self.members[g.spans[sel[bad[0]]]]
                        yield self._square_witness(sq, span, m, int(cnt[bad[0]])), len(sel)
                        return
                    yield None, len(sel)

    def _lift_rel(self) -> Iterator:
        for sq in self.split_squares():
            E, p1, e1, p2, e2, tp = sq
            q2 = e2[p2]
            q1 = e1[p1]
            for ft in self.feet():
                n1 = ft.D1.size
                H0 = self.cat.hom_array(E, ft.D0)
                H1 = self.cat.hom_array(E, ft.D1)
                if not len(H0) or not len(H1):
                    continue
                M0 = H0[(H0 == H0[:, q2]).all(axis=1)]
                M1 = H1[(H1 == H1[:, q1]).all(axis=1)]
                if not len(M0) or not len(M1):
                    continue
                # mbar = (m0 e2 pi2, m1 e1 pi1) on P; check mbar e1' = m e1 and mbar e2' = m e2
                b0 = M0[:, e2][:, tp.pi2]  # (a, |P|)
                b1 = M1[:, e1][:, tp.pi1]  # (b, |P|)
                id0 = (b0[:, tp.e1] == M0[:, e1]).all(axis=1) & (b0[:, tp.e2] == M0[:, e2]).all(axis=1)
                id1 = (b1[:, tp.e1] == M1[:, e1]).all(axis=1) & (b1[:, tp.e2] == M1[:, e2]).all(axis=1)
                need = M0[:, None, :] * n1 + M1[None, :, :]  # (a, b, |E|)
                hyp = ft.masks[:, need].all(axis=-1)  # (k, a, b)
                req = b0[:, None, :] * n1 + b1[None, :, :]
                concl = ft.masks[:, req].all(axis=-1) & id0[None, :, None] & id1[None, None, :]
                viol = hyp & ~concl
                n = int(hyp.sum())
                if viol.any():
                    k, a, b = (int(v[0]) for v in np.nonzero(viol))
                    span = self.members[ft.spans[k]]
                    m = self._rel_embed(span, M0[a], M1[b])
                    yield self._square_witness(sq, span, m, 0), n
                    return
                yield None, n

    def comparison_section(self) -> Outcome:
        n = 0
        for sq in self.split_squares():
            E, p1, e1, p2, e2, tp = sq
            P = tp.P.obj
            fixed = {int(t): int(e1[a]) for a, t in enumerate(tp.e1)}
            clash = False
            for c_, t in enumerate(tp.e2):
                if fixed.get(int(t), int(e2[c_])) != int(e2[c_]):
                    clash = True
                fixed[int(t)] = int(e2[c_])
            sig = [] if clash else list(search_homs(P, E, fixed=fixed, limit=2))
            n += 1
            comp = np.asarray([tp.P.sub._index[(int(a), int(c))] for a, c in zip(p1, p2)], dtype=np.int64)
            if len(sig) != 1 or not np.array_equal(comp[np.asarray(sig[0])], np.arange(P.size)):
                dg = Diagram("comparison")
                dg.mor("p1", E, tp.A, p1).mor("e1", tp.A, E, e1).mor("p2", E, tp.C, p2).mor("e2", tp.C, E, e2)
                dg.mor("f", tp.A, tp.B, tp.f).mor("r", tp.B, tp.A, tp.r)
                dg.mor("g", tp.C, tp.B, tp.g).mor("s", tp.B, tp.C, tp.s)
                dg.note(sections=[list(x) for x in sig])
                return Outcome(False, dg.to_json(), None, checked=n)
        return Outcome(True, None, {"squares": n}, checked=n)

    def local_coproduct(self) -> Outcome:
        n = 0
        targets = []
        seen = set()
        for s in self.members:
            if id(s.apex) not in seen:
                seen.add(id(s.apex))
                targets.append(s.apex)
        for tp in self.parts():
            P = tp.P.obj
            for Z in targets:
                HA = self.cat.hom_array(tp.A, Z)
                HC = self.cat.hom_array(tp.C, Z)
                if not len(HA) or not len(HC):
                    continue
                byC: dict[bytes, list[int]] = {}
                for j, k in enumerate(_rows_key(HC[:, tp.s])):
                    byC.setdefault(k, []).append(j)
                for ai, akey in enumerate(_rows_key(HA[:, tp.r])):
                    for gj in byC.get(akey, []):
                        alpha, gamma = HA[ai], HC[gj]
                        fixed = {int(t): int(alpha[a]) for a, t in enumerate(tp.e1)}
                        for c_, t in enumerate(tp.e2):
                            fixed[int(t)] = int(gamma[c_])
                        hs = list(search_homs(P, Z, fixed=fixed, limit=2))
                        n += 1
                        if len(hs) != 1:
                            dg = Diagram("local-coproduct")
                            dg.mor("f", tp.A, tp.B, tp.f).mor("r", tp.B, tp.A, tp.r)
                            dg.mor("g", tp.C, tp.B, tp.g).mor("s", tp.B, tp.C, tp.s)
                            dg.mor("alpha", tp.A, Z, alpha).mor("gamma", tp.C, Z, gamma)
                            dg.note(factorizations=len(hs), pullback=[list(t) for t in tp.P.sub.tuples])
                            return Outcome(False, dg.to_json(), None, checked=n)
        return Outcome(True, None, {"cocones": n}, checked=n)

    # ======================================================================
    # dikite-category conditions (N, O): reduced to admissibility

    def mkite_iso(self) -> Outcome:
        h = self.dikite()
        if h.verdict:
            return Outcome(True, None, h.certificate,
                           "unique multiplications; morphisms preserve them because the "
                           "induced dikite on the source top part is admissible", h.checked)
        return Outcome(False, h.witness, None, h.note, h.checked)

    def mkite_section(self) -> Outcome:
        h = self.dikite()
        if h.verdict:
            return self.mkite_iso()
        if h.witness and h.witness["detail"].get("multiplications") == 0:
            return Outcome(False, h.witness, None, "a dikite without multiplication", h.checked)
        fails, _, _, _ = self.dikite_scan(stop=False)
        for w in fails:
            if w["detail"].get("multiplications") == 0:
                return Outcome(False, w, None, "a dikite without multiplication", h.checked)
        return Outcome(None, None, None, "multiplications exist but are not unique; section search not attempted")

    # ======================================================================
    # relations

    def _relation_witness(self, s: Span, label: str, pair) -> dict:
        dg = Diagram("relation")
        dg.span(s)
        dg.note(problem=label, pairs=[[int(a), int(b)] for a, b in zip(s.d.map, s.c.map)],
                offending=list(pair) if pair is not None else None)
        return dg.to_json()

    def _relations_ordered(self) -> list[Span]:
        """Jointly monic members, reflexive ones first, smaller and lexicographically earlier first."""
        uni = {id(u): i for i, u in enumerate(self.cat.universe)}
        rels = [s for s in self.members if s.jointly_monic]

        def key(s: Span):
            pairs = sorted(zip(s.d.map, s.c.map))
            return (0 if is_reflexive(s) else 1, uni.get(id(s.D0), 99), uni.get(id(s.D1), 99), len(pairs), pairs)

        return sorted(rels, key=key)

    def reflexive_property(self, prop: str) -> Outcome:
        n = 0
        for s in self._relations_ordered():
            if not is_reflexive(s):
                continue
            n += 1
            sym, sp = is_symmetric(s)
            tra, tp_ = is_transitive(s)
            if prop == "tolerance" and not sym:
                return Outcome(False, self._relation_witness(s, "reflexive but not symmetric", sp), checked=n)
            if prop == "preorder" and not tra:
                return Outcome(False, self._relation_witness(s, "reflexive but not transitive", tp_), checked=n)
            if prop == "equivalence" and not (sym and tra):
                pair = sp if not sym else tp_
                return Outcome(False, self._relation_witness(s, "reflexive but not an equivalence", pair), checked=n)
        return Outcome(True, None, {"reflexive_relations": n}, checked=n)

    def difunctional(self) -> Outcome:
        n = 0
        for s in self._relations_ordered():
            n += 1
            ok, pair = is_difunctional(s)
            if not ok:
                return Outcome(False, self._relation_witness(s, "not difunctional", pair), checked=n)
        return Outcome(True, None, {"relations": n}, checked=n)

    def weakly_maltsev(self) -> Outcome:
        n = 0
        for tp in self.parts():
            n += 1
            P = tp.P.obj
            if not is_jointly_epic(self.cat, Hom(tp.A, P, tuple(tp.e1.tolist())), Hom(tp.C, P, tuple(tp.e2.tolist()))):
                dg = Diagram("local-product")
                dg.mor("f", tp.A, tp.B, tp.f).mor("r", tp.B, tp.A, tp.r)
                dg.mor("g", tp.C, tp.B, tp.g).mor("s", tp.B, tp.C, tp.s)
                dg.mor("e1", tp.A, P, tp.e1).mor("e2", tp.C, P, tp.e2)
                dg.note(problem="cospan not jointly epic", pullback=[list(t) for t in tp.P.sub.tuples])
                return Outcome(False, dg.to_json(), checked=n)
        return Outcome(True, None, {"local_products": n, "skipped": self.skipped_parts()}, checked=n)

    # ======================================================================
    # natural Mal'tsev operations

    def natural_maltsev(self) -> Outcome:
        try:
            ops, unique = natural_maltsev_operations(self.cat, self.budget)
        except NoNaturalOperation as exc:
            return Outcome(False, exc.witness, None, str(exc))
        except SearchBudgetExceeded as exc:
            return Outcome(None, None, None, str(exc))
        cert = {"operations": {name: op.tolist() for name, op in ops.items()}, "unique": unique}
        return Outcome(True, None, cert)

    # ======================================================================
    # propositions

    def hypotheses(self) -> dict:
        if "hyp" in self._cache:
            return self._cache["hyp"]
        kp = closed_under_kp(self.cls, self.cat, self.bound)
        lp = contains_local_products(self.cls, self.cat, self.bound)
        out = {"closed_under_kp": kp.ok, "contains_local_products": lp.ok}
        if not kp.ok and kp.witness is not None:
            out["kp_witness"] = Diagram("span").span(kp.witness).to_json()
        if not lp.ok and lp.witness is not None:
            out["local_product_witness"] = Diagram("span").span(lp.witness).to_json()
        self._cache["hyp"] = out
        return out

    def prop51(self) -> Outcome:
        hyp = dict(self.hypotheses())
        reg = stable_under_regular_mono(self.cls, self.cat, self.bound)
        hyp["stable_under_regular_mono"] = reg.ok
        law = self.graph_iso("grpd").verdict
        wm = self.weakly_maltsev().verdict
        cert = {"hypotheses": {k: v for k, v in hyp.items() if isinstance(v, bool)},
                "lawvere": law, "weakly_maltsev": wm}
        if not all(v for v in cert["hypotheses"].values()):
            return Outcome(None, None, cert, "hypothesis violation")
        if law is None or wm is None:
            return Outcome(None, None, cert, "inputs undecided")
        ok = (not law) or wm
        strong_only = self.cls.kind == STRONG
        if strong_only:
            ok = ok and (law == wm)
        note = "Lawvere implies weakly Mal'tsev" + ("; converse checked" if strong_only else "")
        return Outcome(ok, None, cert, note)

    def split_spans(self) -> Iterator[SplitSpan]:
        U = self.cat.universe
        for E in U:
            if E.size > self.bound:
                continue
            for A, C in itertools.product(U, U):
                for p1, e1 in self.cat.split_pairs(E, A):
                    for p2, e2 in self.cat.split_pairs(E, C):
                        yield SplitSpan(E, Hom(A, E, tuple(e1.tolist())), Hom(E, A, tuple(p1.tolist())),
                                        Hom(C, E, tuple(e2.tolist())), Hom(E, C, tuple(p2.tolist())))

    def prop52_conditions(self, ss: SplitSpan) -> dict:
        span = Span(ss.p1, ss.p2)
        e1, e2 = np.asarray(ss.e1.map), np.asarray(ss.e2.map)
        meets = bool(np.isin(e1, e2).any())
        return {
            "split": ss.is_split,
            "commutative": ss.commutative,
            "jointly_monic": is_jointly_monic(ss.p1, ss.p2),
            "member": member(self.cls, self.cat, span, self.bound),
            "pullback": meets,
        }

    def _hypotheses_hold(self) -> bool:
        h = self.hypotheses()
        return bool(h["closed_under_kp"]) and bool(h["contains_local_products"])

    def prop52(self) -> Outcome:
        if not self._hypotheses_hold():
            return Outcome(None, None, {"hypotheses": False}, "hypothesis violation")
        law = self.graph_iso("grpd").verdict
        n = agree = positive = 0
        first = None
        for ss in self.split_spans():
            n += 1
            conds = self.prop52_conditions(ss)
            five = all(conds.values())
            lp = is_local_product(self.cat, ss).ok
            positive += lp
            if five == lp:
                agree += 1
            elif first is None:
                dg = Diagram("split-span")
                dg.mor("p1", ss.E, ss.p1.target, ss.p1).mor("e1", ss.e1.source, ss.E, ss.e1)
                dg.mor("p2", ss.E, ss.p2.target, ss.p2).mor("e2", ss.e2.source, ss.E, ss.e2)
                dg.note(conditions=conds, local_product=lp)
                first = dg.to_json()
        cert = {"split_spans": n, "agree": agree, "local_products": positive, "lawvere": law}
        if law is not True:
            return Outcome(None, first, cert, "hypothesis violation: the Lawvere condition is not certified")
        return Outcome(first is None, first, cert, checked=n)

    def bar_members(self) -> np.ndarray:
        """Per member s: is (D(d,c), d-bar, c-bar) in the class (apex within bound)?

        1 yes, 0 no, -1 undecided (strongness test over the squared feet too large).
        """
        if "bar" in self._cache:
            return self._cache["bar"]
        out = np.zeros(len(self.members), dtype=np.int64)
        bars: dict[int, Span] = {}
        for i, s in enumerate(self.members):
            if kp_construction(s).limit.size <= self.bound:
                bars[i] = bar_span(s)
        if self.cls.kind == STRONG:
            tests = strong_tests(self.cat, self.bound)
            groups: dict[tuple[int, int], list[int]] = {}
            for i, b in bars.items():
                if b.jointly_monic:
                    groups.setdefault((id(b.D0), id(b.D1)), []).append(i)
            for idx in groups.values():
                b = bars[idx[0]]
                s0 = self.members[idx[0]]
                # homs into X x X are pairs of homs into X: count before building them
                small = [t for t in tests
                         if (len(self.cat.hom_array(t.E, s0.D0)) * len(self.cat.hom_array(t.E, s0.D1))) ** 2
                         <= self.budget.bar_pairs]
                masks = np.stack([relation_mask(bars[i]) for i in idx])
                v = strong_violation(self.cat, masks, b.D0, b.D1, small)
                decided = len(small) == len(tests)
                out[idx] = np.where(v >= 0, 0, 1 if decided else -1)
        else:
            for i, b in bars.items():
                out[i] = member(self.cls, self.cat, b, self.bound)
        self._cache["bar"] = out
        return out

    def prop53(self) -> Outcome:
        if not self._hypotheses_hold():
            return Outcome(None, None, {"hypotheses": False}, "hypothesis violation")
        law = self.graph_iso("grpd").verdict
        pre = self.span_iso("pre")
        if law is not True or pre.verdict is not True:
            return Outcome(None, None, {"lawvere": law}, "hypothesis violation: the Lawvere condition is not certified")
        choice = [ps[0] for ps, _ in self.span_structures("pre")]
        hyp = self.bar_members()
        auto = 0
        first = None
        for s, p, h in zip(self.members, choice, hyp):
            v = check_autonomous(s, p)
            auto += bool(v.ok)
            if h == 1 and not v.ok and first is None:
                first = self._span_witness(s, [p], f"autonomy fails at {list(v.witness)}")
        cert = {"hypothesis_holds": int((hyp == 1).sum()), "hypothesis_undecided": int((hyp == -1).sum()),
                "autonomous": auto, "members": len(self.members)}
        return Outcome(first is None, first, cert, checked=int((hyp == 1).sum()))

    # ======================================================================
    # dispatch

    def primitive(self, name: str) -> Outcome:
        key = ("prim", name)
        if key in self._cache:
            return self._cache[key]
        fn: dict[str, Callable[[], Outcome]] = {
            "lawvere": lambda: self.graph_iso("grpd"),
            "grpd_section": lambda: self.graph_section("grpd"),
            "cat_iso": lambda: self.graph_iso("cat"),
            "cat_section": lambda: self.graph_section("cat"),
            "mg_iso": lambda: self.graph_iso("mg"),
            "mg_section": lambda: self.graph_section("mg"),
            "compat": lambda: self.compat(False),
            "compat_free": lambda: self.compat(True),
            "dikite": self.dikite,
            "pseudo": self.pseudo,
            "pre_iso": lambda: self.span_iso("pre"),
            "pre_section": lambda: self.span_section("pre"),
            "kock_iso": lambda: self.span_iso("kock"),
            "kock_section": lambda: self.span_section("kock"),
            "mkite_iso": self.mkite_iso,
            "mkite_section": self.mkite_section,
            "pre_unique_kock": lambda: self.pre_unique_with("kock"),
            "pre_unique_autonomy": lambda: self.pre_unique_with("autonomy"),
            "natural_maltsev": self.natural_maltsev,
            "tolerance": lambda: self.reflexive_property("tolerance"),
            "equivalence": lambda: self.reflexive_property("equivalence"),
            "preorder": lambda: self.reflexive_property("preorder"),
            "difunctional": self.difunctional,
            "weakly_maltsev": self.weakly_maltsev,
            "comparison_section": self.comparison_section,
            "local_coproduct": self.local_coproduct,
            "prop51": self.prop51,
            "prop52": self.prop52,
            "prop53": self.prop53,
            "signature": self.signature,
        }
        out = fn[name]()
        self._cache[key] = out
        return out

    def check(self, cid: str) -> Outcome:
        if cid not in PRIMITIVE:
            raise KeyError(f"unknown condition {cid!r}")
        return self.primitive(PRIMITIVE[cid])


def check_condition(cid: str, cat: ConcreteCategory, cls: SpanClass, bound: int | None = None) -> Outcome:
    return Battery(cat, cls, bound).check(cid)


# --------------------------------------------------------------------------
# helpers

def _pseudo_as_p(span: Span, m: np.ndarray) -> np.ndarray:
    """A pseudogroupoid as a map on D(d,c); triples without a fourth leg get -1."""
    from .category import box_construction

    box = box_construction(span)
    kp = kp_construction(span)
    first: dict = {}
    for k, (x, y, z, _) in enumerate(box.quads.tolist()):
        first.setdefault((x, y, z), int(m[k]))
    return np.asarray([first.get(tuple(t), -1) for t in kp.triples.tolist()], dtype=np.int64)


def bar_span(s: Span) -> Span | None:
    """(D(d,c), <d dom, d cod>, <c dom, c cod>) into D0 x D0 and D1 x D1."""
    kp = kp_construction(s)
    P0 = _square(s.D0)
    P1 = _square(s.D1)
    d, c = np.asarray(s.d.map), np.asarray(s.c.map)
    t = kp.triples
    dbar = Hom(kp.obj, P0.algebra, tuple(P0.index((int(a), int(b))) for a, b in zip(d[t[:, 0]], d[t[:, 2]])))
    cbar = Hom(kp.obj, P1.algebra, tuple(P1.index((int(a), int(b))) for a, b in zip(c[t[:, 0]], c[t[:, 2]])))
    return Span(dbar, cbar)


def _square(X: FiniteAlgebra):
    key = ("square",)
    got = X._cache.get(key)
    if got is None:
        got = product(X, X)
        X._cache[key] = got
    return got


class SearchBudgetExceeded(AlgebraError):
    pass


def _cube_codes(X3, F: np.ndarray, n: int) -> np.ndarray:
    """Row-major codes of f^3(t) for every f in F and t in X^3."""
    t = np.asarray(X3.tuples)
    return F[:, t[:, 0]] * n * n + F[:, t[:, 1]] * n + F[:, t[:, 2]]


def maltsev_allowed(X: FiniteAlgebra) -> tuple[object, np.ndarray]:
    """X^3 and the (|X|^3, |X|) mask of values allowed by p(x,y,y) = x and p(y,y,z) = z."""
    got = X._cache.get(("maltsev-allowed",))
    if got is not None:
        return got
    X3 = power(X, 3)
    n = X.size
    allowed = np.ones((X3.algebra.size, n), dtype=bool)
    for x in range(n):
        for y in range(n):
            for t in ((x, y, y), (y, y, x)):
                k = X3.index(t)
                allowed[k] = False
                allowed[k, x] = True
    X._cache[("maltsev-allowed",)] = (X3, allowed)
    return X3, allowed


def natural_maltsev_operations(cat: ConcreteCategory, budget: Budget | None = None
                               ) -> tuple[dict[str, np.ndarray], bool]:
    """A natural Mal'tsev operation on every universe object, and whether it is unique.

    Objects are solved smallest first; naturality against the candidates already
    found on smaller objects prunes the values allowed on each X^3.  Raises
    NoNaturalOperation with the obstruction, or SearchBudgetExceeded.
    """
    budget = budget or Budget()
    U = sorted(cat.universe, key=lambda x: x.size)
    doms: dict[str, list[np.ndarray]] = {}
    for X in U:
        X3, base = maltsev_allowed(X)
        allowed = base.copy()
        n = X.size
        blame: dict[int, dict] = {}
        for Y in U:
            if Y.name not in doms:
                continue
            Q = np.stack(doms[Y.name])  # (q, |Y^3|)
            F = cat.hom_array(X, Y)
            if len(F):
                codes = _cube_codes(X3, F, Y.size)  # (F, |X^3|)
                vals = Q[:, codes]  # (q, F, |X^3|): admissible values of f(p(t))
                for fi, f in enumerate(F):
                    ok = (f[None, None, :] == vals[:, fi, :, None]).any(axis=0)  # (|X^3|, n)
                    emptied = allowed.any(axis=1) & ~(allowed & ok).any(axis=1)
                    for k in np.flatnonzero(emptied):
                        blame.setdefault(int(k), {"target": Y.name, "f": f.tolist()})
                    allowed &= ok
            G = cat.hom_array(Y, X)
            if len(G):
                Y3, _ = maltsev_allowed(Y)
                codes = _cube_codes(Y3, G, n)  # (G, |Y^3|) codes in X^3
                for gi, g in enumerate(G):
                    img = g[Q]  # (q, |Y^3|) values g(p_Y(t))
                    for k in range(codes.shape[1]):
                        ok = np.zeros(n, dtype=bool)
                        ok[img[:, k]] = True
                        row = codes[gi, k]
                        if allowed[row].any() and not (allowed[row] & ok).any():
                            blame.setdefault(int(row), {"source": Y.name, "g": g.tolist()})
                        allowed[row] &= ok
        empty = np.flatnonzero(~allowed.any(axis=1))
        if len(empty):
            k = int(empty[0])
            dg = Diagram("naturality")
            dg.obj(X)
            dg.note(object=X.name, triple=list(X3.tuples[k]), obstruction=blame.get(k, {}))
            raise NoNaturalOperation(f"no natural Mal'tsev operation: no value for p{X3.tuples[k]} on {X.name}",
                                     dg.to_json())
        cap = budget.structures
        cands = list(search_homs(X3.algebra, X, allowed=allowed, limit=cap + 1))
        if len(cands) > cap:
            raise SearchBudgetExceeded(f"more than {cap} natural candidates on {X.name}")
        if not cands:
            dg = Diagram("naturality")
            dg.obj(X)
            dg.note(object=X.name, problem="no homomorphism with the allowed values")
            raise NoNaturalOperation(f"no natural Mal'tsev operation on {X.name}", dg.to_json())
        doms[X.name] = [np.asarray(c, dtype=np.int64) for c in cands]
    # the pruning is only necessary: finish with a joint search over all objects
    allowed_pairs = {}
    for X in U:
        X3, _ = maltsev_allowed(X)
        for Y in U:
            F = cat.hom_array(X, Y)
            if not len(F):
                continue
            codes = _cube_codes(X3, F, Y.size)
            mat = np.zeros((len(doms[X.name]), len(doms[Y.name])), dtype=bool)
            for a, p in enumerate(doms[X.name]):
                lhs = F[:, p]
                for b, q in enumerate(doms[Y.name]):
                    mat[a, b] = bool((q[codes] == lhs).all())
            allowed_pairs[(X.name, Y.name)] = mat
    domains = {X.name: len(doms[X.name]) for X in U}
    res = solve_csp(domains, allowed_pairs, budget.csp_nodes, count=2)
    if res.status == "unsat":
        name = res.empty if res.empty is not None else U[-1].name
        dg = Diagram("naturality")
        dg.obj(cat.by_name[name])
        dg.note(object=name, candidates=[p.tolist() for p in doms[name]])
        raise NoNaturalOperation(f"no natural Mal'tsev operation (object {name})", dg.to_json())
    if res.status == "unknown":
        raise SearchBudgetExceeded("natural operation search exhausted its budget")
    ops = {X.name: doms[X.name][res.assignment[X.name]] for X in cat.universe}
    return ops, res.solutions == 1


@dataclass
class NaturalFamily:
    """p_D = p_X <dom, mid, cod> for members with a universe apex."""

    spans: list[Span]
    p: list[np.ndarray]
    operations: dict[str, np.ndarray]


def build_natural_pregroupoids(cat: ConcreteCategory, cls: SpanClass, bound: int | None = None) -> NaturalFamily:
    ops, _ = natural_maltsev_operations(cat)
    bound = cat.bound if bound is None else bound
    spans, ps = [], []
    for s in members(cls, cat, bound):
        if s.apex.name not in ops or cat.by_name.get(s.apex.name) is not s.apex:
            continue
        X3, _ = maltsev_allowed(s.apex)
        op = ops[s.apex.name]
        kp = kp_construction(s)
        p = np.asarray([op[X3.index(tuple(t))] for t in kp.triples.tolist()], dtype=np.int64)
        spans.append(s)
        ps.append(p)
    return NaturalFamily(spans, ps, ops)


def theorem31_check(k: DirectedKite) -> bool:
    """The formula from the graph multiplication agrees with the unique multiplication."""
    from .structures import config_of_kite, delta_roundtrip, theorem31_multiplication

    ms = find_multiplications(k, limit=2)
    if len(ms) != 1:
        return False
    cfg = config_of_kite(k)
    return bool(np.array_equal(theorem31_multiplication(cfg), ms[0])) and delta_roundtrip(cfg)


def maltsev_signature(cat: ConcreteCategory, bound: int | None = None, budget: Budget | None = None) -> SpanClass:
    """The spans (apex within bound) all of whose dikites are admissible."""
    from .spanclass import AllSpans

    b = Battery(cat, AllSpans, bound, budget)
    return custom(b.signature_members(), "signature")


__all__ = [
    "Battery", "Budget", "Outcome", "NoNaturalOperation", "NaturalFamily", "THEOREMS", "PRIMITIVE",
    "all_condition_ids", "battery_ids", "bar_span", "build_natural_pregroupoids", "check_condition",
    "maltsev_signature", "natural_maltsev_operations", "solve_csp", "sort_ids", "theorem31_check",
]

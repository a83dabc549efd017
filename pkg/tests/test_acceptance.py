"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

from __future__ import annotations

import itertools
import time

import numpy as np
from conftest import maltsev_term, pair_graph, span_of
from lawvere.algebra import Hom, is_homomorphism, search_homs
from lawvere.catfile import bundled_path
from lawvere.category import (
    Span,
    box_construction,
    equalizer,
    is_local_product,
    kernel_pair,
    kp_construction,
    pullback_split,
)
from lawvere.conditions import (
    Battery,
    battery_ids,
    build_natural_pregroupoids,
    natural_maltsev_operations,
    theorem31_check,
)
from lawvere.diagram import rebuild
from lawvere.report import dumps, run_battery
from lawvere.spanclass import AllSpans, Relations, StrongRelations, all_spans, is_difunctional
from lawvere.structures import (
    build_groupoid_from_pregroupoid,
    check_autonomous,
    check_kock,
    find_multiplications,
    inverse_for,
    is_admissible,
    kite_of_graph,
    kite_of_span,
    kites_of_multgraph,
    pregroupoid_structures,
    _mult_allowed,
    pseudo_to_pre,
    validate_category,
    validate_groupoid,
    validate_mult_graph,
    validate_multiplication,
    validate_pseudogroupoid,
)

# pinned limits
RUNTIME_ABELIAN_S = 300.0
RUNTIME_FINSET_S = 10.0
RUNTIME_DLAT_S = 600.0
MIN_THEOREM31_KITES = 20
APEX_BOUND = 16


def verdict_line(capsys, n: int, ok: bool, text: str) -> None:
    with capsys.disabled():
        print(f"\n[acceptance {n:2d}] {'PASS' if ok else 'FAIL'}: {text}")
    assert ok, text


def evaluate(cat, cls, ids, bound=APEX_BOUND):
    b = Battery(cat, cls, bound)
    return b, {cid: b.check(cid) for cid in ids}


PROPS = ["P51.1", "P52.1", "P53.1"]


def test_01_abelian_all_spans_all_true(abelian, capsys):
    t = time.perf_counter()
    b, out = evaluate(abelian, AllSpans, battery_ids(AllSpans) + PROPS)
    ops, unique = natural_maltsev_operations(abelian)
    dt = time.perf_counter() - t
    false = [c for c, o in out.items() if o.verdict is not True]
    term_ok = all(
        ops[X.name].tolist() == maltsev_term(X, list(itertools.product(range(X.size), repeat=3))).tolist()
        for X in abelian.universe)
    ok = not false and unique and term_ok and dt < RUNTIME_ABELIAN_S
    verdict_line(capsys, 1, ok, f"abelian_small/AllSpans {len(out)} conditions true (not true: {false}); "
                 f"x-y+z natural on {len(ops)} objects, unique={unique}; {dt:.1f}s < {RUNTIME_ABELIAN_S:.0f}s")


def test_02_finset_relations_all_false(finset, capsys):
    t = time.perf_counter()
    b, out = evaluate(finset, Relations, battery_ids(Relations))
    dt = time.perf_counter() - t
    c16 = [c for c in out if c.startswith("C16")]
    not_false = [c for c, o in out.items() if o.verdict is not False]
    w = out["C16.6"].witness
    objs, mors = rebuild(w)
    replay = is_difunctional(Span(mors["d"], mors["c"]))
    pairs = sorted(zip(mors["d"].map, mors["c"].map))
    ok = (not not_false and len(c16) == 6 and pairs == [(0, 0), (0, 1), (1, 1)]
          and replay == (False, (1, 0)) and w["detail"]["offending"] == [1, 0] and dt < RUNTIME_FINSET_S)
    verdict_line(capsys, 2, ok, f"finset_2/Relations {len(out)} conditions false (not false: {not_false}); "
                 f"witness {pairs} offending {replay[1]}; {dt:.1f}s < {RUNTIME_FINSET_S:.0f}s")


def _check_limit(lim, factors, expected: set) -> bool:
    """Tuples, projections and componentwise operations against the comprehension."""
    if set(lim.sub.tuples) != expected or len(lim.sub.tuples) != len(expected):
        return False
    E = np.asarray(lim.sub.tuples).reshape(len(expected), len(factors))
    for j, leg in enumerate(lim.sub.projections):
        if list(leg.map) != E[:, j].tolist():
            return False
    A = lim.obj
    for op in A.signature.operations:
        T = np.asarray(A.tables[op.name])
        if op.arity == 0:
            want = [int(f.tables[op.name]) for f in factors]
            if E[int(T)].tolist() != want:
                return False
            continue
        grids = np.indices((len(E),) * op.arity)
        for j, f in enumerate(factors):
            got = E[T, j]
            want = f.tables[op.name][tuple(E[g, j] for g in grids)]
            if not np.array_equal(got, want):
                return False
    return True


def limit_mismatches(cat):
    U = cat.universe
    counts = dict.fromkeys(["kernel_pair", "pullback_split", "equalizer", "kp", "box"], 0)
    bad = []
    for A, B in itertools.product(U, U):
        H = [Hom(A, B, tuple(r)) for r in cat.hom_array(A, B).tolist()]
        for f in H:
            counts["kernel_pair"] += 1
            want = {(a, b) for a in range(A.size) for b in range(A.size) if f(a) == f(b)}
            if not _check_limit(kernel_pair(f), (A, A), want):
                bad.append(("kernel_pair", f))
        for u, v in itertools.product(H, H):
            counts["equalizer"] += 1
            want = {(x,) for x in range(A.size) if u(x) == v(x)}
            if not want:
                continue
            if not _check_limit(equalizer(u, v), (A,), want):
                bad.append(("equalizer", u, v))
    for B in U:
        split = [(A, Hom(A, B, tuple(f.tolist()))) for A in U for f, _ in cat.split_pairs(A, B)]
        for (A, f), (C, g) in itertools.product(split, split):
            counts["pullback_split"] += 1
            want = {(a, c) for a in range(A.size) for c in range(C.size) if f(a) == g(c)}
            if not _check_limit(pullback_split(f, g, cat), (A, C), want):
                bad.append(("pullback_split", f, g))
    for s in all_spans(cat, APEX_BOUND):
        D, d, c = s.apex, s.d, s.c
        n = range(D.size)
        counts["kp"] += 1
        want = {(x, y, z) for x in n for y in n for z in n if d(x) == d(y) and c(y) == c(z)}
        if not _check_limit(kp_construction(s).limit, (D,) * 3, want):
            bad.append(("kp", s))
        counts["box"] += 1
        want = {(x, y, z, w) for x in n for y in n for z in n for w in n
                if d(x) == d(y) and c(y) == c(z) and d(z) == d(w) and c(w) == c(x)}
        if not _check_limit(box_construction(s).limit, (D,) * 4, want):
            bad.append(("box", s))
    return counts, bad


def test_03_limits_match_set_comprehension(abelian, finset, capsys):
    parts, bad = [], []
    for name, cat in (("abelian_small", abelian), ("finset_2", finset)):
        counts, b = limit_mismatches(cat)
        parts.append(f"{name} {counts}")
        bad += b
    verdict_line(capsys, 3, not bad, f"limits vs comprehension: {'; '.join(parts)}; mismatches {len(bad)}")


def test_04_kite_biconditionals(abelian, capsys):
    b = Battery(abelian, AllSpans, APEX_BOUND)
    graphs = [g for _, g in b.graphs() if g.C1.size <= APEX_BOUND]
    tally = {"graph kite": 0, "associativity kite": 0, "inverse kite": 0}
    mismatches = []
    for g in graphs:
        k = kite_of_graph(g)
        cands = [np.asarray(m) for m in search_homs(g.c2.obj, g.C1, allowed=_mult_allowed(g))]
        valid = []
        for m in cands:
            tally["graph kite"] += 1
            v = validate_mult_graph(g, m).ok
            if v != validate_multiplication(k, m).ok:
                mismatches.append(("graph kite", g.key, m.tolist()))
            if v:
                valid.append(m)
        if (len(valid) == 1) != is_admissible(k).ok:
            mismatches.append(("graph kite admissible", g.key))
        for m in valid:
            assoc, inv = kites_of_multgraph(g, m)
            tally["associativity kite"] += 1
            is_cat = validate_category(g, m).ok
            if is_cat != is_admissible(assoc).ok:
                mismatches.append(("associativity kite", g.key, m.tolist()))
            if is_cat:
                tally["inverse kite"] += 1
                i = inverse_for(g, m)
                is_grpd = i is not None and validate_groupoid(g, m, i).ok
                if is_grpd != is_admissible(inv).ok:
                    mismatches.append(("inverse kite", g.key, m.tolist()))
    ok = not mismatches and len(graphs) > 0
    verdict_line(capsys, 4, ok, f"abelian_small {len(graphs)} reflexive graphs, candidates {tally}; "
                 f"discrepancies {len(mismatches)}")


def test_05_groupoid_from_pregroupoid_and_formula(abelian, capsys):
    z2 = abelian.by_name["Z2"]
    XX, g = pair_graph(z2)
    ps = pregroupoid_structures(g.span)
    grp = build_groupoid_from_pregroupoid(g, ps[0])
    arrows = XX.tuples
    m_ok = all(arrows[grp.m[k]] == (arrows[f][0], arrows[h][1]) for k, (f, h) in enumerate(g.c2.sub.tuples))
    i = np.asarray(grp.i)
    inv_ok = np.array_equal(i[i], np.arange(4)) and [arrows[x] for x in i] == [(b, a) for a, b in arrows]
    valid = validate_groupoid(g, grp.m, grp.i).ok
    # brute force over every pair of maps (m: C2 -> C1, i: C1 -> C1)
    n2, n1 = g.c2.size, g.C1.size
    M = np.asarray(list(itertools.product(range(n1), repeat=n2)))
    C2, C1 = g.c2.obj, g.C1
    keep = np.ones(len(M), dtype=bool)
    for op in C2.signature.operations:
        if op.arity == 2:
            x, y = np.indices((n2, n2)).reshape(2, -1)
            keep &= (M[:, C2.tables[op.name][x, y]] == C1.tables[op.name][M[:, x], M[:, y]]).all(axis=1)
        elif op.arity == 1:
            x = np.arange(n2)
            keep &= (M[:, C2.tables[op.name][x]] == C1.tables[op.name][M[:, x]]).all(axis=1)
        else:
            keep &= M[:, int(C2.tables[op.name])] == int(C1.tables[op.name])
    I = list(itertools.product(range(n1), repeat=n1))
    found = [(tuple(m), ii) for m in M[keep] for ii in I
             if is_homomorphism(ii, C1, C1) and validate_groupoid(g, m, ii).ok]
    unique = found == [(tuple(grp.m), tuple(grp.i))]
    checked = agree = 0
    for s in all_spans(abelian, APEX_BOUND):
        if kp_construction(Span(s.c, s.d)).obj.size > APEX_BOUND:
            continue
        k = kite_of_span(s)
        if is_admissible(k).ok:
            checked += 1
            agree += theorem31_check(k)
    for _, gr in Battery(abelian, AllSpans, APEX_BOUND).graphs():
        if kp_construction(Span(gr.c, gr.d)).obj.size > APEX_BOUND:
            continue
        k = kite_of_graph(gr)
        if is_admissible(k).ok:
            checked += 1
            agree += theorem31_check(k)
    ok = m_ok and inv_ok and valid and unique and checked >= MIN_THEOREM31_KITES and agree == checked
    verdict_line(capsys, 5, ok, f"Z2 pair groupoid m=(a,c) {m_ok}, i involutive {inv_ok}, valid {valid}, "
                 f"unique among {int(keep.sum())}x{len(I)} brute-force pairs {unique}; "
                 f"formula agrees on {agree}/{checked} admissible kites (>= {MIN_THEOREM31_KITES})")


def test_06_natural_family_kock_autonomous(abelian, capsys):
    fam = build_natural_pregroupoids(abelian, AllSpans, APEX_BOUND)
    kock = sum(check_kock(s, p).ok for s, p in zip(fam.spans, fam.p))
    auto_direct = [check_autonomous(s, p).ok for s, p in zip(fam.spans, fam.p)]
    b = Battery(abelian, AllSpans, APEX_BOUND)
    members = b.members
    hyp = b.bar_members()
    p53 = b.check("P53.1")
    by_key = {s.key: a for s, a in zip(fam.spans, auto_direct)}
    tested = [(h, by_key[s.key]) for s, h in zip(members, hyp) if h == 1]
    agree = all(a for _, a in tested)
    ok = (kock == len(fam.spans) == sum(auto_direct) == len(members) and agree and p53.verdict is True
          and len(tested) > 0)
    verdict_line(capsys, 6, ok, f"natural family on {len(fam.spans)} spans: Kock {kock}, autonomous "
                 f"{sum(auto_direct)}; bar hypothesis holds on {len(tested)} spans, all autonomous {agree}; "
                 f"P53.1 {p53.verdict}")


def test_07_local_products_five_conditions(abelian, capsys):
    b = Battery(abelian, AllSpans, APEX_BOUND)
    n = agree = positive = 0
    for ss in b.split_spans():
        n += 1
        five = all(b.prop52_conditions(ss).values())
        lp = is_local_product(abelian, ss).ok
        positive += lp
        agree += five == lp
    p52 = b.check("P52.1")
    ok = n > 0 and agree == n and p52.verdict is True and p52.certificate["agree"] == n
    verdict_line(capsys, 7, ok, f"abelian_small {n} split spans, {positive} local products, "
                 f"characterization agrees on {agree}/{n}; P52.1 {p52.verdict}")


def test_08_pseudogroupoid_path(abelian, finset, capsys):
    accepted = recovered = total = 0
    for s in all_spans(abelian, APEX_BOUND):
        total += 1
        q = box_construction(s).quads
        m = maltsev_term(s.apex, q[:, :3])
        accepted += validate_pseudogroupoid(s, m).ok
        recovered += pseudo_to_pre(s, m).tolist() == maltsev_term(s.apex, kp_construction(s).triples).tolist()
    two, one = finset.by_name["2"], finset.by_name["1"]
    s = span_of(two, one, (0, 0), one, (0, 0))
    q = box_construction(s).quads
    x, y, z, w = q.T
    cand = np.where(y == z, x, np.where(x == y, z, w))
    v = validate_pseudogroupoid(s, cand)
    rejected = (not v.ok and v.law == "m(x,y,z,w) = m(x,y,z,w')" and v.witness is not None
                and len(v.witness) == 5)
    if rejected:
        a, b_, c, w1, w2 = v.witness
        idx = box_construction(s).limit.sub._index
        rejected = w1 != w2 and cand[idx[(a, b_, c, w1)]] != cand[idx[(a, b_, c, w2)]]
    ok = accepted == recovered == total and rejected
    verdict_line(capsys, 8, ok, f"x-y+z accepted on {accepted}/{total} spans, pregroupoid recovered on "
                 f"{recovered}; w-dependent candidate rejected at {v.law!r} with witness {v.witness}")


def test_09_reports_independent_of_concurrency(capsys):
    text = bundled_path("finset_2.cat").read_text()
    t = time.perf_counter()
    one = dumps(run_battery(text, AllSpans, "all", jobs=1))
    two = dumps(run_battery(text, AllSpans, "all", jobs=3))
    dt = time.perf_counter() - t
    ok = one == two
    verdict_line(capsys, 9, ok, f"finset_2/AllSpans full battery, jobs=1 vs jobs=3: "
                 f"{len(one)} bytes, identical={ok} ({dt:.1f}s)")


def test_10_distributive_lattices(dlat, capsys):
    t = time.perf_counter()
    _, strong = evaluate(dlat, StrongRelations, battery_ids(StrongRelations))
    _, rel = evaluate(dlat, Relations, battery_ids(Relations))
    dt = time.perf_counter() - t
    strong_bad = [c for c, o in strong.items() if o.verdict is not True]
    rel_bad = [c for c, o in rel.items() if o.verdict is not False]
    w = rel["C16.6"].witness
    _, mors = rebuild(w)
    pairs = sorted(zip(mors["d"].map, mors["c"].map))
    order = pairs == [(0, 0), (0, 1), (1, 1)]
    ok = not strong_bad and not rel_bad and order and dt < RUNTIME_DLAT_S
    verdict_line(capsys, 10, ok, f"dlat_4 StrongRelations {len(strong)} true (bad {strong_bad}); Relations "
                 f"{len(rel)} false (bad {rel_bad}); witness {pairs} offending {w['detail']['offending']}; "
                 f"{dt:.1f}s < {RUNTIME_DLAT_S:.0f}s")

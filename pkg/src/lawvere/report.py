"""Battery runs, deterministic JSON reports and DOT rendering of witnesses."""

from __future__ import annotations

import hashlib
import json
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catfile import parse
from .category import ConcreteCategory
from .conditions import PRIMITIVE, Battery, Budget, Outcome, battery_ids, sort_ids
from .diagram import rebuild, to_ints
from .spanclass import ALL, CUSTOM, RELATIONS, STRONG, SpanClass, custom, dump_custom

TOOL = "lawvere"
from . import __version__ as VERSION
PROPOSITIONS = ("P51.1", "P52.1", "P53.1")

PASS, FAIL, NOT_APPLICABLE = "PASS", "FAIL", "NOT-APPLICABLE"


@dataclass
class ConditionReport:
    condition: str
    verdict: bool | None
    witness: dict | None
    certificate: dict | None
    note: str
    checked: int
    timing_ms: int

    def to_json(self, timing: bool) -> dict:
        out = {
            "condition": self.condition,
            "verdict": self.verdict,
            "witness": self.witness,
            "certificate": self.certificate,
            "note": self.note,
            "checked": self.checked,
        }
        if timing:
            out["timing_ms"] = self.timing_ms
        return to_ints(out)


def resolve_conditions(spec: str | list[str], cls: SpanClass) -> list[str]:
    """'all' or a comma list of condition ids (a bare theorem label such as T5 expands)."""
    if isinstance(spec, str):
        if spec.strip() == "all":
            return sort_ids(battery_ids(cls) + list(PROPOSITIONS))
        spec = [s.strip() for s in spec.split(",") if s.strip()]
    out = []
    for cid in spec:
        if cid in PRIMITIVE:
            out.append(cid)
            continue
        expanded = [c for c in PRIMITIVE if c.split(".")[0] == cid]
        if not expanded:
            raise KeyError(f"unknown condition {cid!r}")
        out += expanded
    return sort_ids(out)


def _class_spec(cls: SpanClass) -> dict:
    if cls.kind == CUSTOM:
        return {"kind": CUSTOM, "custom": dump_custom(cls)}
    return {"kind": cls.kind}


def _class_from_spec(spec: dict, cat: ConcreteCategory) -> SpanClass:
    if spec["kind"] != CUSTOM:
        return {ALL: SpanClass(ALL), RELATIONS: SpanClass(RELATIONS), STRONG: SpanClass(STRONG)}[spec["kind"]]
    from .algebra import Hom
    from .category import Span

    spans = []
    doc = spec["custom"]
    for item in doc["spans"]:
        D = cat.by_name[item["apex"]]
        d = Hom(D, cat.by_name[item["d"]["target"]], tuple(item["d"]["map"]))
        c = Hom(D, cat.by_name[item["c"]["target"]], tuple(item["c"]["map"]))
        spans.append(Span(d, c, item["name"]))
    return custom(spans, doc["name"])


def _evaluate(battery: Battery, cid: str) -> ConditionReport:
    t = time.perf_counter()
    out: Outcome = battery.check(cid)
    ms = int(round((time.perf_counter() - t) * 1000))
    return ConditionReport(cid, out.verdict, out.witness, out.certificate, out.note, int(out.checked), ms)


def _worker(job: dict) -> list[dict]:
    cat = parse(job["category"]).build()
    cls = _class_from_spec(job["class"], cat)
    b = Battery(cat, cls, job["bound"], Budget(**job["budget"]))
    res = []
    for cid in job["conditions"]:
        r = _evaluate(b, cid)
        res.append(r.__dict__)
    if job.get("summary", True):
        res.append({"hypotheses": to_ints(b.hypotheses()), "members": len(b.members)})
    else:
        res.append({})
    return res


def _partition(ids: list[str], jobs: int) -> list[list[str]]:
    """Conditions sharing a primitive check stay together."""
    groups: dict[str, list[str]] = {}
    for cid in ids:
        groups.setdefault(PRIMITIVE[cid], []).append(cid)
    parts: list[list[str]] = [[] for _ in range(jobs)]
    for k, g in enumerate(groups.values()):
        parts[k % jobs].extend(g)
    return [p for p in parts if p]


def oracle(cls: SpanClass, reports: list[ConditionReport], hypotheses: dict) -> dict:
    """Agreement of the battery: every decided verdict equal, and no proposition refuted."""
    battery = set(battery_ids(cls))
    decided = {r.condition: r.verdict for r in reports if r.condition in battery and r.verdict is not None}
    undecided = sorted(r.condition for r in reports if r.condition in battery and r.verdict is None)
    refuted = [r.condition for r in reports if r.condition in PROPOSITIONS and r.verdict is False]
    values = set(decided.values())
    applicable = bool(hypotheses.get("closed_under_kp")) and bool(hypotheses.get("contains_local_products"))
    out = {"decided": len(decided), "undecided": undecided, "refuted_propositions": refuted}
    if not applicable:
        out["verdict"] = NOT_APPLICABLE
        out["reason"] = "the class is not closed under the kernel-pair construction or misses a local product"
        out["common_verdict"] = None
        return out
    if len(values) > 1 or refuted:
        out["verdict"] = FAIL
        out["true"] = sort_ids([c for c, v in decided.items() if v])
        out["false"] = sort_ids([c for c, v in decided.items() if not v])
        out["common_verdict"] = None
    else:
        out["verdict"] = PASS
        out["common_verdict"] = next(iter(values)) if values else None
    return out


def run_battery(
    category_text: str,
    cls: SpanClass | str,
    conditions: str | list[str] = "all",
    bound: int | None = None,
    jobs: int = 1,
    budget: Budget | None = None,
    timing: bool = False,
) -> dict:
    """Evaluate conditions and assemble the report (a JSON-ready dict).

    With ``jobs`` > 1 the conditions are split over worker processes; the
    merged report does not depend on the split.
    """
    cat = parse(category_text).build()
    if isinstance(cls, str):
        cls = SpanClass(cls)
    bound = cat.bound if bound is None else bound
    budget = budget or Budget()
    ids = resolve_conditions(conditions, cls)
    job = {"category": category_text, "class": _class_spec(cls), "bound": bound, "budget": budget.__dict__}
    if jobs <= 1:
        chunks = [_worker({**job, "conditions": ids})]
    else:
        parts = _partition(ids, jobs)
        with ProcessPoolExecutor(max_workers=len(parts)) as ex:
            chunks = list(ex.map(_worker, [{**job, "conditions": p, "summary": k == 0}
                                           for k, p in enumerate(parts)]))
    by_id = {}
    extra = chunks[0][-1]
    for chunk in chunks:
        for r in chunk[:-1]:
            by_id[r["condition"]] = ConditionReport(**r)
    reports = [by_id[c] for c in ids]
    return {
        "tool": TOOL,
        "version": VERSION,
        "input_digest": hashlib.sha256(category_text.encode()).hexdigest(),
        "category": cat.name,
        "universe": [o.name for o in cat.universe],
        "class": {"kind": cls.kind, "name": cls.name, "members": extra["members"]},
        "bounds": {"bound": bound, "closure_bound": cat.closure_bound, **budget.__dict__},
        "hypotheses": extra["hypotheses"],
        "conditions": [r.to_json(timing) for r in reports],
        "oracle": oracle(cls, reports, extra["hypotheses"]),
    }


def dumps(report: dict) -> str:
    return json.dumps(to_ints(report), indent=1, sort_keys=True) + "\n"


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(dumps(report))


def load_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


# --------------------------------------------------------------------------
# DOT

def _node(name: str) -> str:
    return "obj_" + re.sub(r"[^A-Za-z0-9_]", "_", name)


def emit_dot(witness: dict, title: str = "witness") -> str:
    """A witness diagram as a DOT digraph.

    Nodes are ``obj_<name>``; an edge is labelled ``<hom-index>:<map>``, the
    index being the position of the map among all homomorphisms between its
    endpoints.
    """
    objs, _ = rebuild(witness)
    from .algebra import Hom, hom_array

    lines = [f"digraph {json.dumps(title)} {{"]
    for name, a in objs.items():
        lines.append(f'  {_node(name)} [label="{name} ({a.size})"];')
    for m in witness["morphisms"]:
        h = Hom(objs[m["source"]], objs[m["target"]], tuple(m["map"]))
        H = hom_array(h.source, h.target)
        hit = np.flatnonzero((H == np.asarray(h.map)).all(axis=1)) if len(H) else []
        idx = int(hit[0]) if len(hit) else -1
        label = f"{idx}:{list(h.map)}".replace(" ", "")
        lines.append(f'  {_node(m["source"])} -> {_node(m["target"])} [label="{label}", tooltip="{m["name"]}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def witness_of(report: dict, cid: str) -> dict | None:
    for r in report["conditions"]:
        if r["condition"] == cid:
            return r["witness"]
    raise KeyError(f"condition {cid!r} is not in the report")

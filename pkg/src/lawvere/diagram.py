"""Self-contained diagrams (objects with tables, morphisms as maps) for witnesses."""

from __future__ import annotations

from typing import Any

import numpy as np

from .algebra import FiniteAlgebra, Hom
from .category import Span


def algebra_json(a: FiniteAlgebra) -> dict:
    ops = {}
    for name, table in sorted(a.tables.items()):
        ops[name] = table.tolist() if table.ndim else int(table)
    return {"carrier": a.size, "ops": ops}


def to_ints(value: Any) -> Any:
    """Recursively turn numpy scalars/arrays and tuples into plain ints and lists."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, dict):
        return {str(k): to_ints(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_ints(v) for v in value]
    return value


class Diagram:
    """Builder for a witness: named objects and named morphisms between them."""

    def __init__(self, kind: str):
        self.kind = kind
        self.objects: dict[str, dict] = {}
        self._ids: dict[int, str] = {}
        self.morphisms: list[dict] = []
        self.detail: dict[str, Any] = {}

    def obj(self, a: FiniteAlgebra, name: str | None = None) -> str:
        if id(a) in self._ids:
            return self._ids[id(a)]
        base = name or a.name
        label, k = base, 1
        while label in self.objects:
            k += 1
            label = f"{base}_{k}"
        self.objects[label] = algebra_json(a)
        self._ids[id(a)] = label
        return label

    def mor(self, name: str, source: FiniteAlgebra, target: FiniteAlgebra, mapping) -> "Diagram":
        if isinstance(mapping, Hom):
            mapping = mapping.map
        self.morphisms.append({
            "name": name,
            "source": self.obj(source),
            "target": self.obj(target),
            "map": [int(v) for v in np.asarray(mapping).tolist()],
        })
        return self

    def span(self, s: Span, d: str = "d", c: str = "c") -> "Diagram":
        self.mor(d, s.apex, s.D0, s.d)
        self.mor(c, s.apex, s.D1, s.c)
        return self

    def note(self, **kw) -> "Diagram":
        self.detail.update(to_ints(kw))
        return self

    def to_json(self) -> dict:
        return {"kind": self.kind, "objects": self.objects, "morphisms": self.morphisms,
                "detail": self.detail}


def rebuild(witness: dict) -> tuple[dict[str, FiniteAlgebra], dict[str, Hom]]:
    """Objects and morphisms of a serialized diagram, for replaying a witness."""
    from .algebra import Signature

    objs: dict[str, FiniteAlgebra] = {}
    for name, body in witness["objects"].items():
        ops = body["ops"]
        arities = []
        tables = {}
        for op, table in ops.items():
            arr = np.asarray(table, dtype=np.int64)
            arities.append((op, arr.ndim))
            tables[op] = arr
        objs[name] = FiniteAlgebra(name, Signature.of(*arities), body["carrier"], tables)
    # all objects of one witness share a signature; rebuild it once so Homs compose
    if objs:
        sig = next(iter(objs.values())).signature
        objs = {k: FiniteAlgebra(k, sig, v.size, dict(v.tables)) for k, v in objs.items()}
    mors = {m["name"]: Hom(objs[m["source"]], objs[m["target"]], tuple(m["map"])) for m in witness["morphisms"]}
    return objs, mors

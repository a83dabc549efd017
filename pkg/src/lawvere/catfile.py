"""Reading and writing category files (JSON)."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .algebra import AlgebraError, Equation, FiniteAlgebra, Hom, Signature, parse_term
from .category import ConcreteCategory


class ParseError(AlgebraError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


@dataclass
class CategoryFile:
    signature: Signature
    equations: list[Equation]
    algebras: list[FiniteAlgebra]
    objects: list[str]
    morphisms: str | list[dict] = "all-homomorphisms"
    options: dict[str, Any] = field(default_factory=dict)
    digest: str = ""

    def build(self) -> ConcreteCategory:
        by_name = {a.name: a for a in self.algebras}
        missing = [o for o in self.objects if o not in by_name]
        if missing:
            raise ParseError(f"category objects {missing} are not defined algebras")
        objs = [by_name[o] for o in self.objects]
        morphisms = None
        if self.morphisms != "all-homomorphisms":
            morphisms = []
            for i, m in enumerate(self.morphisms):
                try:
                    src, tgt = by_name[m["source"]], by_name[m["target"]]
                except KeyError as exc:
                    raise ParseError(f"morphism {i}: unknown object {exc}") from None
                morphisms.append(Hom(src, tgt, tuple(int(v) for v in m["map"])))
        opts = self.options
        return ConcreteCategory(
            objs,
            self.equations,
            morphisms,
            adjoin_limits=bool(opts.get("adjoin_limits", True)),
            bound=int(opts.get("bound", 16)),
            closure_bound=opts.get("closure_bound"),
            name=str(opts.get("name", "C")),
        )


def _expect(cond: bool, message: str) -> None:
    if not cond:
        raise ParseError(message)


def parse(text: str) -> CategoryFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    _expect(isinstance(doc, dict), "top level must be an object")
    for key in ("signature", "algebras", "category"):
        _expect(key in doc, f"missing top-level key {key!r}")

    ops = []
    for i, op in enumerate(doc["signature"]):
        _expect(isinstance(op, dict) and "name" in op and "arity" in op,
                f"signature[{i}] needs name and arity")
        arity = op["arity"]
        _expect(isinstance(arity, int) and not isinstance(arity, bool) and arity >= 0,
                f"signature[{i}] ({op['name']}): arity must be a non-negative integer, got {arity!r}")
        ops.append((str(op["name"]), arity))
    try:
        sig = Signature.of(*ops)
    except AlgebraError as exc:
        raise ParseError(str(exc)) from None

    equations = []
    for i, eq in enumerate(doc.get("equations", [])):
        _expect(isinstance(eq, dict) and "lhs" in eq and "rhs" in eq, f"equations[{i}] needs lhs and rhs")
        try:
            equations.append(Equation(parse_term(eq["lhs"], sig), parse_term(eq["rhs"], sig)))
        except AlgebraError as exc:
            raise ParseError(f"equations[{i}]: {exc}") from None

    algebras = []
    for i, alg in enumerate(doc["algebras"]):
        _expect(isinstance(alg, dict) and {"name", "carrier"} <= alg.keys(),
                f"algebras[{i}] needs name and carrier")
        n = alg["carrier"]
        _expect(isinstance(n, int) and n >= 1, f"algebras[{i}]: carrier must be a positive integer")
        tables = {}
        for name, table in alg.get("ops", {}).items():
            try:
                arr = np.asarray(table, dtype=np.int64)
            except (ValueError, TypeError):
                raise ParseError(f"algebra {alg['name']!r}: table {name!r} is not rectangular") from None
            tables[name] = arr
        try:
            algebras.append(FiniteAlgebra(str(alg["name"]), sig, n, tables))
        except AlgebraError as exc:
            raise ParseError(str(exc)) from None

    cat = doc["category"]
    _expect(isinstance(cat, dict) and "objects" in cat, "category needs objects")
    morphisms = cat.get("morphisms", "all-homomorphisms")
    _expect(morphisms == "all-homomorphisms" or isinstance(morphisms, list),
            "category.morphisms must be 'all-homomorphisms' or a list")
    options = dict(doc.get("options", {}))
    digest = hashlib.sha256(text.encode()).hexdigest()
    return CategoryFile(sig, equations, algebras, list(cat["objects"]), morphisms, options, digest)


def load(path: str | Path) -> ConcreteCategory:
    return load_file(path).build()


def load_file(path: str | Path) -> CategoryFile:
    return parse(Path(path).read_text())


def _table(arr: np.ndarray):
    return arr.tolist() if arr.ndim else int(arr)


def dumps(cat: ConcreteCategory) -> str:
    """Serialise the listed objects of ``cat`` (the universe is rebuilt on load)."""
    sig = cat.signature
    doc = {
        "signature": [{"name": op.name, "arity": op.arity} for op in sig.operations] if sig else [],
        "equations": [{"lhs": str(e.lhs), "rhs": str(e.rhs)} for e in cat.equations],
        "algebras": [
            {"name": a.name, "carrier": a.size, "ops": {k: _table(v) for k, v in a.tables.items()}}
            for a in cat.objects
        ],
        "category": {"objects": [a.name for a in cat.objects], "morphisms": "all-homomorphisms"},
        "options": {"adjoin_limits": cat.adjoin_limits, "bound": cat.bound},
    }
    if cat._explicit is not None:
        doc["category"]["morphisms"] = [
            {"source": h.source.name, "target": h.target.name, "map": list(h.map)}
            for a in cat.objects for b in cat.objects for h in cat.homs(a, b)
        ]
    if cat.closure_bound is not None:
        doc["options"]["closure_bound"] = cat.closure_bound
    if cat.name != "C":
        doc["options"]["name"] = cat.name
    return json.dumps(doc, indent=1)


def save(cat: ConcreteCategory, path: str | Path) -> None:
    Path(path).write_text(dumps(cat) + "\n")


def bundled_path(name: str) -> Path:
    """Path of a category file shipped with the package."""
    return Path(str(resources.files("lawvere") / "data" / name))


def load_bundled(name: str) -> ConcreteCategory:
    if not name.endswith(".cat"):
        name += ".cat"
    return load(bundled_path(name))

"""Finite universal algebras: signatures, terms, homomorphisms, products.

Elements of an algebra are the dense indices ``0 .. size-1``.  Operation
tables are numpy arrays of shape ``(size,) * arity`` (row-major).
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np


class AlgebraError(ValueError):
    """Malformed algebra, term or signature."""


class VarietyViolation(AlgebraError):
    def __init__(self, algebra: str, equation: "Equation", assignment: dict[str, int]):
        self.algebra = algebra
        self.equation = equation
        self.assignment = assignment
        super().__init__(
            f"algebra {algebra!r} violates {equation} at {assignment}"
        )


# --------------------------------------------------------------------------
# signatures and terms

@dataclass(frozen=True)
class Operation:
    name: str
    arity: int


@dataclass(frozen=True)
class Signature:
    operations: tuple[Operation, ...] = ()

    def __post_init__(self):
        names = [op.name for op in self.operations]
        if len(set(names)) != len(names):
            raise AlgebraError(f"duplicate operation names in {names}")
        for op in self.operations:
            if op.arity < 0:
                raise AlgebraError(f"negative arity for {op.name!r}")

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "Signature":
        return cls(tuple(Operation(n, a) for n, a in pairs))

    def arity(self, name: str) -> int:
        for op in self.operations:
            if op.name == name:
                return op.arity
        raise AlgebraError(f"unknown operation {name!r}")

    def __contains__(self, name: str) -> bool:
        return any(op.name == name for op in self.operations)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class App:
    op: str
    args: tuple["Term", ...] = ()

    def __str__(self):
        if not self.args:
            return self.op
        return f"{self.op}({', '.join(map(str, self.args))})"


Term = Var | App

VARIABLES = ("x", "y", "z", "u", "v", "w")
_TOKEN = re.compile(r"\s*(?:([A-Za-z_][A-Za-z_0-9]*)|(\()|(\))|(,))")


def parse_term(text: str, signature: Signature | None = None) -> Term:
    """Parse a prefix term such as ``mul(x, inv(y))``.

    Identifiers that are operation names of ``signature`` are applications;
    the names in ``VARIABLES`` are variables otherwise.
    """
    tokens: list[str] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise AlgebraError(f"bad character in term {text!r} at {pos}")
        tokens.append(m.group(m.lastindex))
        pos = m.end()

    def parse(i: int) -> tuple[Term, int]:
        if i >= len(tokens) or tokens[i] in "(),":
            raise AlgebraError(f"unexpected token in term {text!r}")
        name = tokens[i]
        is_op = signature is not None and name in signature
        if i + 1 < len(tokens) and tokens[i + 1] == "(":
            args: list[Term] = []
            j = i + 2
            if j < len(tokens) and tokens[j] == ")":
                j += 1
            else:
                while True:
                    arg, j = parse(j)
                    args.append(arg)
                    if j >= len(tokens):
                        raise AlgebraError(f"unclosed parenthesis in {text!r}")
                    if tokens[j] == ",":
                        j += 1
                    elif tokens[j] == ")":
                        j += 1
                        break
                    else:
                        raise AlgebraError(f"unexpected {tokens[j]!r} in {text!r}")
            return App(name, tuple(args)), j
        if is_op or name not in VARIABLES:
            return App(name), i + 1
        return Var(name), i + 1

    term, end = parse(0)
    if end != len(tokens):
        raise AlgebraError(f"trailing tokens in term {text!r}")
    if signature is not None:
        check_term(term, signature)
    return term


def check_term(term: Term, signature: Signature) -> None:
    if isinstance(term, Var):
        return
    arity = signature.arity(term.op)
    if arity != len(term.args):
        raise AlgebraError(
            f"operation {term.op!r} has arity {arity}, got {len(term.args)} arguments"
        )
    for arg in term.args:
        check_term(arg, signature)


def term_variables(term: Term) -> list[str]:
    if isinstance(term, Var):
        return [term.name]
    out: list[str] = []
    for arg in term.args:
        for v in term_variables(arg):
            if v not in out:
                out.append(v)
    return out


@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term

    @classmethod
    def parse(cls, lhs: str, rhs: str, signature: Signature) -> "Equation":
        return cls(parse_term(lhs, signature), parse_term(rhs, signature))

    @property
    def variables(self) -> list[str]:
        out = term_variables(self.lhs)
        out += [v for v in term_variables(self.rhs) if v not in out]
        return out

    def __str__(self):
        return f"{self.lhs} = {self.rhs}"


# --------------------------------------------------------------------------
# algebras

@dataclass(frozen=True, eq=False)
class FiniteAlgebra:
    """A finite algebra; compared by identity."""

    name: str
    signature: Signature
    size: int
    tables: Mapping[str, np.ndarray]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.size < 1:
            raise AlgebraError(f"algebra {self.name!r} must have a positive carrier")
        tables = {}
        for op in self.signature.operations:
            if op.name not in self.tables:
                raise AlgebraError(f"algebra {self.name!r} lacks a table for {op.name!r}")
            t = np.asarray(self.tables[op.name], dtype=np.int64)
            if t.shape != (self.size,) * op.arity:
                raise AlgebraError(
                    f"table {op.name!r} of {self.name!r} has shape {t.shape}, "
                    f"expected {(self.size,) * op.arity}"
                )
            if t.size and (t.min() < 0 or t.max() >= self.size):
                raise AlgebraError(f"table {op.name!r} of {self.name!r} leaves the carrier")
            t.setflags(write=False)
            tables[op.name] = t
        extra = set(self.tables) - set(tables)
        if extra:
            raise AlgebraError(f"algebra {self.name!r} has tables for unknown ops {sorted(extra)}")
        object.__setattr__(self, "tables", tables)

    def __repr__(self):
        return f"FiniteAlgebra({self.name!r}, size={self.size})"

    @property
    def elements(self) -> range:
        return range(self.size)

    def apply(self, op: str, *args: int) -> int:
        return int(self.tables[op][args])

    def satisfies(self, equation: Equation) -> dict[str, int] | None:
        """Return a violating assignment, or None if the equation holds."""
        names = equation.variables
        for values in itertools.product(range(self.size), repeat=len(names)):
            env = dict(zip(names, values))
            if eval_term(self, equation.lhs, env) != eval_term(self, equation.rhs, env):
                return env
        return None

    def validate(self, equations: Iterable[Equation]) -> None:
        for eq in equations:
            bad = self.satisfies(eq)
            if bad is not None:
                raise VarietyViolation(self.name, eq, bad)

    def renamed(self, name: str) -> "FiniteAlgebra":
        return FiniteAlgebra(name, self.signature, self.size, dict(self.tables))


def eval_term(algebra: FiniteAlgebra, term: Term, env: Mapping[str, int]) -> int:
    if isinstance(term, Var):
        try:
            return env[term.name]
        except KeyError:
            raise AlgebraError(f"variable {term.name!r} is unbound") from None
    if term.op not in algebra.tables:
        raise AlgebraError(f"unknown operation {term.op!r}")
    table = algebra.tables[term.op]
    if table.ndim != len(term.args):
        raise AlgebraError(
            f"operation {term.op!r} has arity {table.ndim}, got {len(term.args)} arguments"
        )
    args = tuple(eval_term(algebra, a, env) for a in term.args)
    return int(table[args])


# --------------------------------------------------------------------------
# homomorphisms

@dataclass(frozen=True)
class Hom:
    source: FiniteAlgebra
    target: FiniteAlgebra
    map: tuple[int, ...]

    def __post_init__(self):
        if len(self.map) != self.source.size:
            raise AlgebraError(
                f"map of length {len(self.map)} for source of size {self.source.size}"
            )

    def __call__(self, x: int) -> int:
        return self.map[x]

    def __matmul__(self, other: "Hom") -> "Hom":
        """Composition ``self ∘ other``."""
        if other.target is not self.source:
            raise AlgebraError(
                f"cannot compose {other.source.name}->{other.target.name} "
                f"with {self.source.name}->{self.target.name}"
            )
        m = self.map
        return Hom(other.source, self.target, tuple(m[x] for x in other.map))

    def __repr__(self):
        return f"Hom({self.source.name}->{self.target.name}, {list(self.map)})"

    @classmethod
    def identity(cls, a: FiniteAlgebra) -> "Hom":
        return cls(a, a, tuple(range(a.size)))

    @property
    def is_injective(self) -> bool:
        return len(set(self.map)) == len(self.map)

    @property
    def is_surjective(self) -> bool:
        return len(set(self.map)) == self.target.size

    @property
    def image(self) -> frozenset[int]:
        return frozenset(self.map)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.map, dtype=np.int64)


def constant_hom(source: FiniteAlgebra, target: FiniteAlgebra, value: int) -> Hom:
    return Hom(source, target, (value,) * source.size)


def is_homomorphism(mapping: Sequence[int], source: FiniteAlgebra, target: FiniteAlgebra) -> bool:
    m = np.asarray(mapping, dtype=np.int64)
    if m.shape != (source.size,):
        return False
    if m.size and (m.min() < 0 or m.max() >= target.size):
        return False
    for op in source.signature.operations:
        s = source.tables[op.name]
        t = target.tables[op.name]
        if op.arity == 0:
            if m[s] != t:
                return False
            continue
        lhs = m[s]
        rhs = t[np.ix_(*([m] * op.arity))]
        if not np.array_equal(lhs, rhs):
            return False
    return True


# --------------------------------------------------------------------------
# generation plans and constrained homomorphism search

def _combos(idx: np.ndarray, arity: int) -> np.ndarray:
    """All ``arity``-tuples over ``idx`` as an array of shape (arity, m)."""
    if arity == 0:
        return np.zeros((0, 1), dtype=np.int64)
    grid = np.indices((len(idx),) * arity).reshape(arity, -1)
    return idx[grid]


def _close_layers(algebra: FiniteAlgebra, assigned: np.ndarray) -> list[list[tuple]]:
    """Extend ``assigned`` (in place) to a subalgebra, layer by layer.

    Each layer is a list of ``(op, elements, args)`` where ``args`` has shape
    (len(elements), arity) and only refers to elements of earlier layers.
    """
    layers = []
    ops = [(op.name, op.arity) for op in algebra.signature.operations if op.arity > 0]
    while True:
        have = np.flatnonzero(assigned)
        fresh_mask = np.zeros_like(assigned)
        layer = []
        for name, arity in ops:
            args = _combos(have, arity)
            res = algebra.tables[name][tuple(args)]
            fresh = ~(assigned[res] | fresh_mask[res])
            if not fresh.any():
                continue
            vals, first = np.unique(res[fresh], return_index=True)
            layer.append((name, vals, args[:, fresh][:, first].T.copy()))
            fresh_mask[vals] = True
        if not layer:
            return layers
        assigned |= fresh_mask
        layers.append(layer)


class _Stage:
    __slots__ = ("generator", "layers", "checks")

    def __init__(self, generator):
        self.generator = generator
        self.layers: list[list[tuple]] = []
        # op name -> (args array (arity, m), result array (m,))
        self.checks: dict[str, tuple[np.ndarray, np.ndarray]] = {}


class _Plan:
    """How ``source`` is generated from chosen elements.

    Stage 0 assigns the fixed elements and closes them together with the
    constants; every later stage adds one free generator (the smallest
    unassigned element) and closes again.  Each table entry is checked at
    the first stage where all of its elements are assigned.
    """

    def __init__(self, source: FiniteAlgebra, fixed: tuple[int, ...]):
        n = source.size
        self.fixed = np.asarray(fixed, dtype=np.int64)
        assigned = np.zeros(n, dtype=bool)
        assigned[self.fixed] = True
        stage_of = np.full(n, -1, dtype=np.int64)
        stage_of[self.fixed] = 0
        stage = _Stage(None)
        const = [(op.name, int(source.tables[op.name][()]))
                 for op in source.signature.operations if op.arity == 0]
        layer = []
        for name, v in const:
            if not assigned[v]:
                assigned[v] = True
                layer.append((name, np.asarray([v]), np.zeros((1, 0), dtype=np.int64)))
        if layer:
            stage.layers.append(layer)
        stage.layers += _close_layers(source, assigned)
        stage_of[assigned & (stage_of < 0)] = 0
        stages = [stage]
        while not assigned.all():
            g = int(np.flatnonzero(~assigned)[0])
            stage = _Stage(g)
            assigned[g] = True
            stage.layers = _close_layers(source, assigned)
            stage_of[assigned & (stage_of < 0)] = len(stages)
            stages.append(stage)
        for op in source.signature.operations:
            table = source.tables[op.name]
            args = _combos(np.arange(n), op.arity)
            res = table.reshape(-1)
            when = stage_of[res]
            if op.arity:
                when = np.maximum(stage_of[args].max(axis=0), when)
            for k in np.unique(when):
                sel = when == k
                stages[k].checks[op.name] = (args[:, sel], res[sel])
        self.stages = stages
        self.stage_of = stage_of

    @property
    def generators(self) -> list[int]:
        return [s.generator for s in self.stages[1:]]


def _plan(source: FiniteAlgebra, fixed: Iterable[int]) -> _Plan:
    key = ("plan", tuple(sorted(set(int(x) for x in fixed))))
    plan = source._cache.get(key)
    if plan is None:
        plan = _Plan(source, key[1])
        source._cache[key] = plan
    return plan


def search_homs(
    source: FiniteAlgebra,
    target: FiniteAlgebra,
    allowed: np.ndarray | Sequence[Iterable[int] | None] | None = None,
    fixed: Mapping[int, int] | None = None,
    limit: int | None = None,
) -> Iterator[tuple[int, ...]]:
    """Yield maps ``source -> target`` that are homomorphisms.

    ``fixed`` pins individual values.  ``allowed`` restricts images, either
    as a boolean matrix of shape (source.size, target.size) or as a sequence
    with one set (or None for "anything") per source element.  Maps come
    out in a deterministic order.
    """
    if source.signature != target.signature:
        raise AlgebraError("source and target have different signatures")
    n, t = source.size, target.size
    if allowed is None:
        allow = None
    elif isinstance(allowed, np.ndarray):
        allow = allowed.astype(bool)
    else:
        allow = np.ones((n, t), dtype=bool)
        for x, a in enumerate(allowed):
            if a is not None:
                allow[x] = False
                allow[x, list(a)] = True
    fixed = fixed or {}
    plan = _plan(source, fixed.keys())
    img = np.full(n, -1, dtype=np.int64)
    if len(plan.fixed):
        vals = np.asarray([fixed[int(x)] for x in plan.fixed], dtype=np.int64)
        if vals.min() < 0 or vals.max() >= t:
            return
        if allow is not None and not allow[plan.fixed, vals].all():
            return
        img[plan.fixed] = vals
    tt = target.tables
    stages = plan.stages
    count = 0

    def run(stage: _Stage) -> bool:
        for layer in stage.layers:
            for name, elems, args in layer:
                if args.shape[1]:
                    vals = tt[name][tuple(img[args[:, j]] for j in range(args.shape[1]))]
                else:
                    vals = np.full(len(elems), tt[name][()])
                if allow is not None and not allow[elems, vals].all():
                    return False
                img[elems] = vals
        for name, (args, res) in stage.checks.items():
            lhs = img[res]
            if args.shape[0]:
                rhs = tt[name][tuple(img[args])]
            else:
                rhs = tt[name][()]
            if not np.array_equal(lhs, np.broadcast_to(rhs, lhs.shape)):
                return False
        return True

    def rec(k: int):
        nonlocal count
        if k == len(stages):
            count += 1
            yield tuple(img.tolist())
            return
        stage = stages[k]
        g = stage.generator
        if g is None:
            if run(stage):
                yield from rec(k + 1)
            return
        choices = np.flatnonzero(allow[g]) if allow is not None else range(t)
        for v in choices:
            img[g] = v
            if run(stage):
                yield from rec(k + 1)
                if limit is not None and count >= limit:
                    return

    yield from rec(0)


def enumerate_homs(
    source: FiniteAlgebra,
    target: FiniteAlgebra,
    generators: Sequence[int] | None = None,
) -> list[Hom]:
    """All homomorphisms ``source -> target``, sorted by their maps.

    With ``generators`` the search assigns images to those elements first;
    they must generate ``source``.
    """
    if generators is not None:
        if len(subalgebra_closure(source, generators)) != source.size:
            raise AlgebraError("supplied generators do not generate the source")
        maps: set[tuple[int, ...]] = set()
        for images in itertools.product(range(target.size), repeat=len(generators)):
            maps.update(search_homs(source, target, fixed=dict(zip(generators, images))))
        return [Hom(source, target, m) for m in sorted(maps)]
    key = ("homs", id(target))
    cached = source._cache.get(key)
    if cached is None:
        cached = (target, [Hom(source, target, m) for m in sorted(search_homs(source, target))])
        source._cache[key] = cached
    return list(cached[1])


def hom_array(source: FiniteAlgebra, target: FiniteAlgebra) -> np.ndarray:
    """All homomorphisms as rows of an int array (count, source.size)."""
    key = ("homarr", id(target))
    cached = source._cache.get(key)
    if cached is None:
        factors = target._cache.get(("product-of",))
        if factors is not None:
            # homs into a full product are pairs of homs into the factors
            a, b, grid = factors
            Ha, Hb = hom_array(source, a), hom_array(source, b)
            arr = grid[Ha[:, None, :], Hb[None, :, :]].reshape(-1, source.size)
            arr = arr[np.lexsort(arr.T[::-1])] if len(arr) else arr
        else:
            maps = [h.map for h in enumerate_homs(source, target)]
            arr = np.asarray(maps, dtype=np.int64).reshape(len(maps), source.size)
        arr.setflags(write=False)
        cached = (target, arr)
        source._cache[key] = cached
    return cached[1]


def find_isomorphism(a: FiniteAlgebra, b: FiniteAlgebra) -> Hom | None:
    if a.size != b.size or a.signature != b.signature:
        return None
    if invariant(a) != invariant(b):
        return None
    for m in search_homs(a, b):
        if len(set(m)) == a.size:
            return Hom(a, b, m)
    return None


def invariant(a: FiniteAlgebra) -> tuple:
    """Cheap isomorphism invariant."""
    key = ("invariant",)
    got = a._cache.get(key)
    if got is not None:
        return got
    parts: list = [a.size]
    ar = np.arange(a.size)
    for op in a.signature.operations:
        t = a.tables[op.name]
        if op.arity == 1:
            parts.append(int(np.sum(t == ar)))
            parts.append(tuple(sorted(np.bincount(t, minlength=a.size).tolist())))
        elif op.arity == 2:
            parts.append(int(np.sum(np.diagonal(t) == ar)))
            parts.append(tuple(sorted(np.bincount(t.reshape(-1), minlength=a.size).tolist())))
            parts.append(int(np.sum(t == t.T)))
        elif op.arity >= 3:
            parts.append(tuple(sorted(np.bincount(t.reshape(-1), minlength=a.size).tolist())))
    got = tuple(parts)
    a._cache[key] = got
    return got


# --------------------------------------------------------------------------
# subalgebras and products

def closure_mask(parent: FiniteAlgebra, seed: np.ndarray) -> np.ndarray:
    """Boolean mask of the subalgebra generated by the boolean mask ``seed``."""
    assigned = np.array(seed, dtype=bool, copy=True)
    for op in parent.signature.operations:
        if op.arity == 0:
            assigned[int(parent.tables[op.name][()])] = True
    ops = [(parent.tables[op.name], op.arity) for op in parent.signature.operations if op.arity > 0]
    frontier = assigned.copy()
    while frontier.any():
        have = np.flatnonzero(assigned)
        new = np.zeros_like(assigned)
        for table, arity in ops:
            if arity == 1:
                new[table[np.flatnonzero(frontier)]] = True
            elif arity == 2:
                f = np.flatnonzero(frontier)
                new[table[np.ix_(f, have)].reshape(-1)] = True
                new[table[np.ix_(have, f)].reshape(-1)] = True
            else:
                new[table[tuple(_combos(have, arity))]] = True
        frontier = new & ~assigned
        assigned |= new
    return assigned


def subalgebra_closure(parent: FiniteAlgebra, seed: Iterable[int]) -> frozenset[int]:
    """Least subset containing ``seed`` closed under every operation."""
    mask = np.zeros(parent.size, dtype=bool)
    mask[[int(s) for s in seed]] = True
    return frozenset(np.flatnonzero(closure_mask(parent, mask)).tolist())


def iter_subalgebras(parent: FiniteAlgebra, max_size: int | None = None) -> Iterator[frozenset[int]]:
    """Every nonempty subalgebra, lazily, in lectic order (NextClosure).

    With ``max_size`` larger subalgebras are skipped (but still traversed).
    """
    n = parent.size
    current = closure_mask(parent, np.zeros(n, dtype=bool))
    while True:
        size = int(current.sum())
        if size and (max_size is None or size <= max_size):
            yield frozenset(np.flatnonzero(current).tolist())
        nxt = None
        for i in range(n - 1, -1, -1):
            if current[i]:
                continue
            base = current.copy()
            base[i + 1:] = False
            base[i] = True
            cand = closure_mask(parent, base)
            if np.array_equal(cand[:i], current[:i]):
                nxt = cand
                break
        if nxt is None:
            return
        current = nxt


@dataclass(frozen=True, eq=False)
class Subproduct:
    """An algebra whose elements are tuples of elements of ``factors``."""

    algebra: FiniteAlgebra
    factors: tuple[FiniteAlgebra, ...]
    tuples: tuple[tuple[int, ...], ...]
    projections: tuple[Hom, ...]
    _index: dict = field(repr=False)

    def index(self, tup: Sequence[int]) -> int:
        return self._index[tuple(int(t) for t in tup)]

    def get(self, tup: Sequence[int]) -> int | None:
        return self._index.get(tuple(int(t) for t in tup))

    def __len__(self):
        return len(self.tuples)

    def __contains__(self, tup) -> bool:
        return tuple(tup) in self._index

    def pair(self, source: FiniteAlgebra, components: Sequence[Hom | Sequence[int]]) -> Hom:
        """The induced map ``<h_1, ..., h_k>: source -> self``."""
        maps = [h.map if isinstance(h, Hom) else tuple(h) for h in components]
        out = []
        for x in range(source.size):
            t = tuple(m[x] for m in maps)
            if t not in self._index:
                raise AlgebraError(f"tuple {t} is not an element of {self.algebra.name}")
            out.append(self._index[t])
        return Hom(source, self.algebra, tuple(out))


def subproduct(
    factors: Sequence[FiniteAlgebra],
    tuples: Iterable[Sequence[int]],
    name: str,
) -> Subproduct:
    """Build the subalgebra of the product of ``factors`` on ``tuples``.

    Raises AlgebraError when the tuples are not closed under the operations.
    """
    factors = tuple(factors)
    if not factors:
        raise AlgebraError("need at least one factor")
    sig = factors[0].signature
    elems = sorted(set(tuple(int(v) for v in t) for t in tuples))
    if not elems:
        raise AlgebraError(f"empty limit object {name!r}")
    k = len(factors)
    E = np.asarray(elems, dtype=np.int64).reshape(len(elems), k)
    radix = [f.size for f in factors]
    weights = np.ones(k, dtype=np.int64)
    for j in range(k - 2, -1, -1):
        weights[j] = weights[j + 1] * radix[j + 1]
    keys = E @ weights
    N = len(elems)
    tables = {}
    for op in sig.operations:
        if op.arity == 0:
            comp = np.asarray([int(f.tables[op.name][()]) for f in factors], dtype=np.int64)
            key = int(comp @ weights)
            pos = int(np.searchsorted(keys, key))
            if pos >= N or keys[pos] != key:
                raise AlgebraError(f"{name!r} does not contain the constant {op.name!r}")
            tables[op.name] = np.asarray(pos)
            continue
        grids = np.indices((N,) * op.arity)
        acc = np.zeros((N,) * op.arity, dtype=np.int64)
        for j, f in enumerate(factors):
            col = E[:, j]
            acc += f.tables[op.name][tuple(col[g] for g in grids)] * weights[j]
        pos = np.searchsorted(keys, acc)
        pos = np.minimum(pos, N - 1)
        if not np.array_equal(keys[pos], acc):
            raise AlgebraError(f"{name!r} is not closed under {op.name!r}")
        tables[op.name] = pos
    alg = FiniteAlgebra(name, sig, N, tables)
    projections = tuple(Hom(alg, f, tuple(int(v) for v in E[:, j])) for j, f in enumerate(factors))
    return Subproduct(alg, factors, tuple(elems), projections, {t: i for i, t in enumerate(elems)})


def product(a: FiniteAlgebra, b: FiniteAlgebra, name: str | None = None) -> Subproduct:
    name = name or f"{a.name}x{b.name}"
    sp = subproduct((a, b), itertools.product(range(a.size), range(b.size)), name)
    grid = np.arange(a.size * b.size, dtype=np.int64).reshape(a.size, b.size)
    sp.algebra._cache[("product-of",)] = (a, b, grid)
    return sp


def power(a: FiniteAlgebra, k: int, name: str | None = None) -> Subproduct:
    name = name or f"{a.name}^{k}"
    return subproduct((a,) * k, itertools.product(range(a.size), repeat=k), name)


def subalgebra(parent: FiniteAlgebra, elements: Iterable[int], name: str) -> tuple[FiniteAlgebra, Hom]:
    """The subalgebra on ``elements`` (must be closed) with its inclusion."""
    els = sorted(set(int(e) for e in elements))
    sp = subproduct((parent,), ((e,) for e in els), name)
    return sp.algebra, sp.projections[0]

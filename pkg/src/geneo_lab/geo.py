"""GEOs, GENEOs and the structural maps of the copy-discard category."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .perception import (
    TOL, UNIT, FiniteGroup, PerceptionSpace, StructuralError, induced_group_metric,
    tensor_spaces,
)

EXHAUSTIVE = "exhaustive"


class GeoTypeError(TypeError):
    """Domain/codomain mismatch when composing or evaluating."""


class UnsupportedError(NotImplementedError):
    pass


# --------------------------------------------------------------------------- homomorphisms

class GroupHom:
    """Group homomorphism given by an element-index table ``source -> target``."""

    def __init__(self, source: FiniteGroup, target: FiniteGroup, table, kind: str = "explicit"):
        t = np.asarray(table, dtype=np.int64)
        if t.shape != (source.order,):
            raise StructuralError(f"hom table has shape {t.shape}, expected ({source.order},)")
        if source.order and (t.min() < 0 or t.max() >= target.order):
            raise StructuralError("hom table entry out of range")
        self.source, self.target, self.table, self.kind = source, target, t, kind
        self.table.flags.writeable = False

    @classmethod
    def identity(cls, group: FiniteGroup) -> "GroupHom":
        return cls(group, group, np.arange(group.order), "identity")

    @classmethod
    def annihilator(cls, source: FiniteGroup, target: FiniteGroup) -> "GroupHom":
        return cls(source, target, np.full(source.order, target.identity), "annihilator")

    def __call__(self, g: int) -> int:
        return int(self.table[g])

    def violations(self, max_witnesses: int = 10) -> list:
        """Pairs ``(g1, g2)`` with ``t(g1∘g2) != t(g1)∘t(g2)`` (exhaustive)."""
        s, t, m = self.source.compose, self.target.compose, self.table
        bad = np.argwhere(m[s] != t[m[:, None], m[None, :]])
        return [tuple(map(int, w)) for w in bad[:max_witnesses]]

    def after(self, first: "GroupHom") -> "GroupHom":
        """``self ∘ first``."""
        if not first.target.same_as(self.source):
            raise GeoTypeError("homomorphisms do not compose")
        kinds = {self.kind, first.kind}
        kind = "identity" if kinds == {"identity"} else "annihilator" if "annihilator" in kinds else "explicit"
        return GroupHom(first.source, self.target, self.table[first.table], kind)


def _product_hom(homs: Sequence[GroupHom], source: FiniteGroup, target: FiniteGroup) -> GroupHom:
    """Componentwise hom between direct products (mixed radix, first factor slowest)."""
    src_orders = [h.source.order for h in homs]
    tgt_orders = [h.target.order for h in homs]
    digits = np.unravel_index(np.arange(source.order), src_orders)
    mapped = [h.table[d] for h, d in zip(homs, digits)]
    table = np.ravel_multi_index(mapped, tgt_orders) if homs else np.zeros(source.order, dtype=np.int64)
    kinds = {h.kind for h in homs}
    kind = "identity" if kinds == {"identity"} else "annihilator" if kinds == {"annihilator"} else "explicit"
    return GroupHom(source, target, table, kind)


# --------------------------------------------------------------------------- certificates

@dataclass(frozen=True)
class Validated:
    report: Any


@dataclass(frozen=True)
class Declared:
    reason: str


# --------------------------------------------------------------------------- Geo

class Geo:
    """A data map ``f: dom -> cod`` together with a group homomorphism ``t``.

    Finite-domain Geos are backed by a lookup table of codomain indices (built
    lazily from ``f`` if not given).  ``batch`` optionally maps a stacked array
    of inputs at once.
    """

    def __init__(self, dom: PerceptionSpace, cod: PerceptionSpace, f: Callable | None = None,
                 hom: GroupHom | None = None, table=None, batch: Callable | None = None, name: str = ""):
        if f is None and table is None:
            raise ValueError("a Geo needs a data map or a lookup table")
        if hom is None:
            hom = GroupHom.annihilator(dom.group, cod.group) if cod.group.order == 1 or dom.group.order == 1 \
                else None
            if hom is None:
                raise ValueError("a hom must be given between non-trivial groups")
        if not (hom.source.same_as(dom.group) and hom.target.same_as(cod.group)):
            raise GeoTypeError("hom does not match the groups of dom/cod")
        self.dom, self.cod, self.hom, self.name = dom, cod, hom, name
        self._f = f
        self._batch = batch
        self._table = None
        if table is not None:
            if not dom.is_finite or not cod.is_finite:
                raise GeoTypeError("lookup tables need finite dom and cod")
            t = np.asarray(table, dtype=np.int64)
            if t.shape != (dom.size,):
                raise StructuralError(f"lookup table has {t.shape[0] if t.ndim else 0} entries, dom has {dom.size}")
            if t.min() < 0 or t.max() >= cod.size:
                raise StructuralError("lookup table entry out of range")
            t.flags.writeable = False
            self._table = t

    def __repr__(self):
        return f"Geo({self.name or '?'}: {self.dom.id} -> {self.cod.id})"

    @property
    def table(self) -> np.ndarray:
        if self._table is None:
            if not (self.dom.is_finite and self.cod.is_finite):
                raise GeoTypeError("lookup table requested for a Geo with an intensional carrier")
            t = np.array([self(x) for x in range(self.dom.size)], dtype=np.int64)
            t.flags.writeable = False
            self._table = t
        return self._table

    def _check_in(self, x):
        if self.dom.is_finite:
            if not self.dom.carrier.contains(x):
                raise GeoTypeError(f"{x!r} is not an element of {self.dom.id}")
        elif np.shape(x) != tuple(self.dom.carrier.shape):
            raise GeoTypeError(f"input shape {np.shape(x)} does not match {self.dom.id}")

    def _check_out(self, y):
        if self.cod.is_finite:
            if not self.cod.carrier.contains(y):
                raise GeoTypeError(f"output {y!r} is not an element of {self.cod.id}")
        elif not self.cod.carrier.contains(y):
            raise GeoTypeError(f"output of shape {np.shape(y)} outside the carrier of {self.cod.id}")

    def __call__(self, x):
        self._check_in(x)
        if self._table is not None:
            return int(self._table[x])
        y = self._f(x)
        if self.cod.is_finite:
            y = int(y)
        self._check_out(y)
        return y

    def map_many(self, xs):
        """Evaluate on a sequence (finite: index array; intensional: stacked array)."""
        if self.dom.is_finite and self.cod.is_finite:
            return self.table[np.asarray(xs, dtype=np.int64)]
        if self._batch is not None:
            return self._batch(np.asarray(xs))
        out = [self(x) for x in xs]
        return np.asarray(out) if out and not self.cod.is_finite else np.asarray(out, dtype=np.int64)

    @classmethod
    def lookup(cls, dom, cod, table, hom: GroupHom | None = None, name: str = "") -> "Geo":
        return cls(dom, cod, table=table, hom=hom, name=name)


class Geneo:
    """A Geo carrying a non-expansiveness certificate."""

    def __init__(self, geo: Geo, certificate):
        if not isinstance(certificate, (Validated, Declared)):
            raise TypeError("certificate must be Validated or Declared")
        self.geo, self.certificate = geo, certificate

    dom = property(lambda self: self.geo.dom)
    cod = property(lambda self: self.geo.cod)
    hom = property(lambda self: self.geo.hom)
    name = property(lambda self: self.geo.name)
    table = property(lambda self: self.geo.table)

    def __call__(self, x):
        return self.geo(x)

    def map_many(self, xs):
        return self.geo.map_many(xs)

    def __repr__(self):
        kind = type(self.certificate).__name__
        return f"Geneo({self.geo.name or '?'}: {self.dom.id} -> {self.cod.id}, {kind})"


def as_geo(g) -> Geo:
    return g.geo if isinstance(g, Geneo) else g


def same_space(a: PerceptionSpace, b: PerceptionSpace) -> bool:
    return a is b or a.id == b.id


def extensionally_equal(a, b, probes=None) -> bool:
    a, b = as_geo(a), as_geo(b)
    if not (same_space(a.dom, b.dom) and same_space(a.cod, b.cod)):
        return False
    if a.dom.is_finite and a.cod.is_finite:
        return bool(np.array_equal(a.table, b.table))
    if probes is None:
        raise ValueError("intensional Geos need probes to be compared")
    return all(a.cod.distance(a(x), b(x)) < TOL for x in probes)


# --------------------------------------------------------------------------- checks

@dataclass
class EquivarianceReport:
    ne: list = field(default_factory=list)
    probe_size: int = 0
    exhaustive: bool = False

    @property
    def n_ne(self) -> int:
        return len(self.ne)

    @property
    def ok(self) -> bool:
        return not self.ne


def check_equivariance(geo, sample=EXHAUSTIVE) -> EquivarianceReport:
    """Collect ``NE = {(g, x) : f(g*x) != t(g)*f(x)}`` over a probe or exhaustively.

    ``sample`` is :data:`EXHAUSTIVE` (finite carriers only) or a list of
    ``(group element, data element)`` pairs.  Equality uses the cod metric < 1e-9.
    """
    geo = as_geo(geo)
    dom, cod, t = geo.dom, geo.cod, geo.hom
    if isinstance(sample, str):
        if sample != EXHAUSTIVE:
            raise ValueError(f"unknown sample {sample!r}")
        if not dom.is_finite:
            raise UnsupportedError(f"exhaustive equivariance check on intensional space {dom.id}")
        if cod.is_finite:
            f = geo.table
            A, B = dom.action.table, cod.action.table
            lhs = f[A]                                 # [g, x] -> f(g*x)
            rhs = B[t.table[:, None], f[None, :]]      # t(g)*f(x)
            bad = np.argwhere(cod.distance_matrix[lhs, rhs] >= TOL)
            return EquivarianceReport([tuple(map(int, w)) for w in bad], A.size, True)
        sample = [(g, x) for g in range(dom.group.order) for x in range(dom.size)]
        exhaustive = True
    else:
        exhaustive = False
    ne = []
    for g, x in sample:
        lhs = geo(dom.act(g, x))
        rhs = cod.act(t(g), geo(x))
        if cod.distance(lhs, rhs) >= TOL:
            ne.append((g, x) if dom.is_finite else (g, len(ne)))
    return EquivarianceReport(ne, len(sample), exhaustive)


@dataclass
class NonExpansiveReport:
    data_violations: list = field(default_factory=list)    # (x1, x2, ratio)
    group_violations: list = field(default_factory=list)   # (g1, g2, ratio)
    checked_pairs: int = 0
    exhaustive: bool = False

    @property
    def ok(self) -> bool:
        return not self.data_violations and not self.group_violations


def _ratio(num: float, den: float) -> float:
    return math.inf if den == 0 else num / den


def check_nonexpansive(geo, pair_sample=EXHAUSTIVE, group_budget: int = 4096, seed: int = 0):
    """Return a Validated :class:`Geneo`, or the :class:`NonExpansiveReport` listing violations.

    Checks ``d_Y(f x1, f x2) <= d_X(x1, x2)`` on the sample and
    ``d_K(t g1, t g2) <= d_G(g1, g2)`` on group pairs (all pairs if at most
    ``group_budget``, else a seeded sample).  On intensional spaces the group
    distances are probe-based, using the sampled inputs as probes.
    """
    geo = as_geo(geo)
    dom, cod, t = geo.dom, geo.cod, geo.hom
    rep = NonExpansiveReport()
    if isinstance(pair_sample, str):
        if pair_sample != EXHAUSTIVE:
            raise ValueError(f"unknown sample {pair_sample!r}")
        if not dom.is_finite:
            raise UnsupportedError(f"exhaustive non-expansiveness check on intensional space {dom.id}")
        rep.exhaustive = True
        if cod.is_finite:
            f = geo.table
            dy = cod.distance_matrix[f[:, None], f[None, :]]
            dx = dom.distance_matrix
            bad = np.argwhere(dy > dx + TOL)
            rep.data_violations = [(int(i), int(j), _ratio(dy[i, j], dx[i, j])) for i, j in bad]
            rep.checked_pairs = dx.size
            probes = None
        else:
            pair_sample = [(i, j) for i in range(dom.size) for j in range(dom.size)]
    if not rep.exhaustive or not cod.is_finite:
        probes = []
        for x1, x2 in pair_sample:
            dx = dom.distance(x1, x2)
            dy = cod.distance(geo(x1), geo(x2))
            if dy > dx + TOL:
                rep.data_violations.append((x1, x2, _ratio(dy, dx)) if dom.is_finite
                                           else (len(probes), len(probes) + 1, _ratio(dy, dx)))
            probes += [x1, x2]
            rep.checked_pairs += 1
    rep.group_violations = _group_violations(dom, cod, t, probes, group_budget, seed, geo)
    if rep.ok:
        return Geneo(geo, Validated(rep))
    return rep


def _group_violations(dom, cod, t: GroupHom, probes, budget, seed, geo_f=None):
    if t.kind == "annihilator" or cod.group.order == 1:
        return []                      # d_K(e, e) = 0
    n = dom.group.order
    if n * n <= budget:
        pairs = [(a, b) for a in range(n) for b in range(n)]
    else:
        rng = np.random.default_rng(seed)
        pairs = [tuple(map(int, p)) for p in rng.integers(0, n, size=(budget, 2))]
    # images of the probes: for an equivariant non-expansive f the cod bound is dominated by the dom bound
    cod_probes = None if cod.is_finite or probes is None else [geo_f(p) for p in probes]
    out = []
    for a, b in pairs:
        if a == b:
            continue
        dg = induced_group_metric(dom, a, b, probes if not dom.is_finite else None)
        dk = induced_group_metric(cod, t(a), t(b), cod_probes)
        if float(dk) > float(dg) + TOL:
            out.append((a, b, _ratio(float(dk), float(dg))))
    return out


# --------------------------------------------------------------------------- combinators

def compose(g2, g1) -> Geo:
    """Run ``g1`` then ``g2``."""
    a, b = as_geo(g1), as_geo(g2)
    if not same_space(a.cod, b.dom):
        raise GeoTypeError(f"cannot compose: cod {a.cod.id} != dom {b.dom.id}")
    hom = b.hom.after(a.hom)
    name = f"{a.name or '?'};{b.name or '?'}"
    if a.dom.is_finite and b.cod.is_finite and a.cod.is_finite:
        return Geo(a.dom, b.cod, table=b.table[a.table], hom=hom, name=name)
    batch = None
    if a._batch is not None or b._batch is not None:
        batch = lambda xs: b.map_many(a.map_many(xs))
    return Geo(a.dom, b.cod, f=lambda x: b(a(x)), hom=hom, batch=batch, name=name)


def _is_unit_arrow(g: Geo) -> bool:
    return g.dom is UNIT and g.cod is UNIT


def tensor(g1, g2) -> Geo:
    """Componentwise product ``g1 ⊗ g2`` (finite carriers; unit factors are dropped)."""
    a, b = as_geo(g1), as_geo(g2)
    if _is_unit_arrow(b):
        return a
    if _is_unit_arrow(a):
        return b
    for s in (a.dom, a.cod, b.dom, b.cod):
        if not s.is_finite:
            raise UnsupportedError(f"tensor over intensional space {s.id}")
    dom = tensor_spaces([a.dom, b.dom])
    cod = tensor_spaces([a.cod, b.cod])
    nb_in, nb_out = b.dom.size, b.cod.size
    x = np.arange(dom.size)
    table = a.table[x // nb_in] * nb_out + b.table[x % nb_in]
    hom = _product_hom([a.hom, b.hom], dom.group, cod.group)
    return Geo(dom, cod, table=table, hom=hom, name=f"({a.name or '?'}*{b.name or '?'})")


def identity(space: PerceptionSpace) -> Geneo:
    batch = (lambda xs: xs)
    return Geneo(Geo(space, space, f=lambda x: x, hom=GroupHom.identity(space.group), batch=batch,
                     table=np.arange(space.size) if space.is_finite else None, name=f"id[{space.id}]"),
                 Validated("structural"))


def copy(space: PerceptionSpace) -> Geneo:
    if not space.is_finite:
        raise UnsupportedError(f"copy over intensional space {space.id}")
    cod = tensor_spaces([space, space])
    n = space.size
    table = np.arange(n) * n + np.arange(n)
    order = space.group.order
    hom = GroupHom(space.group, cod.group, np.arange(order) * order + np.arange(order),
                   "identity" if order == 1 else "explicit")
    return Geneo(Geo(space, cod, table=table, hom=hom, name=f"copy[{space.id}]"), Validated("structural"))


def discard(space: PerceptionSpace) -> Geneo:
    hom = GroupHom.annihilator(space.group, UNIT.group)
    table = np.zeros(space.size, dtype=np.int64) if space.is_finite else None
    batch = (lambda xs: np.zeros(len(xs), dtype=np.int64))
    return Geneo(Geo(space, UNIT, f=lambda x: 0, hom=hom, table=table, batch=batch,
                     name=f"discard[{space.id}]"), Validated("structural"))


def swap(a: PerceptionSpace, b: PerceptionSpace) -> Geneo:
    dom = tensor_spaces([a, b])
    cod = tensor_spaces([b, a])
    if dom is UNIT or a is UNIT or b is UNIT:
        return identity(dom)
    for s in (a, b):
        if not s.is_finite:
            raise UnsupportedError(f"swap over intensional space {s.id}")
    x = np.arange(dom.size)
    table = (x % b.size) * a.size + x // b.size
    g = np.arange(dom.group.order)
    ga, gb = a.group.order, b.group.order
    hom = GroupHom(dom.group, cod.group, (g % gb) * ga + g // gb)
    return Geneo(Geo(dom, cod, table=table, hom=hom, name=f"swap[{a.id},{b.id}]"), Validated("structural"))


def constant(dom: PerceptionSpace, cod: PerceptionSpace, value: int, name: str = "") -> Geo:
    return Geo(dom, cod, table=np.full(dom.size, value), hom=GroupHom.annihilator(dom.group, cod.group),
               name=name or f"const{value}")


# --------------------------------------------------------------------------- JSON

def hom_from_json(doc: dict | None, dom: PerceptionSpace, cod: PerceptionSpace) -> GroupHom:
    kind = (doc or {"kind": "annihilator"}).get("kind", "explicit")
    if kind == "identity":
        if not dom.group.same_as(cod.group):
            raise GeoTypeError("identity hom between different groups")
        return GroupHom.identity(dom.group)
    if kind == "annihilator":
        return GroupHom.annihilator(dom.group, cod.group)
    if kind == "explicit":
        return GroupHom(dom.group, cod.group, doc["map"])
    raise ValueError(f"unknown hom kind {kind!r}")


def geo_from_json(doc: dict, spaces: dict) -> Geo:
    """Lookup-table Geo from ``{"dom", "cod", "table", "hom"}``; spaces resolved by id."""
    try:
        dom, cod = spaces[doc["dom"]], spaces[doc["cod"]]
    except KeyError as exc:
        raise KeyError(f"unknown space {exc}") from None
    return Geo(dom, cod, table=doc["table"], hom=hom_from_json(doc.get("hom"), dom, cod),
               name=doc.get("name", ""))


def geo_to_json(geo) -> dict:
    geo = as_geo(geo)
    hom = {"kind": geo.hom.kind}
    if geo.hom.kind == "explicit":
        hom["map"] = geo.hom.table.tolist()
    return {"dom": geo.dom.id, "cod": geo.cod.id, "table": geo.table.tolist(), "hom": hom}

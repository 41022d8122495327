"""Observers, crossed translation pairs and surrogate distances between GEOs."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import geo as G
from .dsl import Signature, TypedDiagram, complexity as diagram_complexity, parse_cost
from .perception import PerceptionSpace, PseudoMetric, TOL, image_space, finite_space, ArrayCarrier


# --------------------------------------------------------------------------- translation categories

@dataclass(frozen=True)
class Arrow:
    id: str
    geneo: G.Geneo
    kind: str = "lookup"

    dom = property(lambda self: self.geneo.dom)
    cod = property(lambda self: self.geneo.cod)


@dataclass
class CategoryReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __str__(self):
        lines = ["closed category" if self.ok else f"{len(self.errors)} error(s)"]
        lines += [f"  error: {e}" for e in self.errors]
        lines += [f"  warning: {w}" for w in self.warnings]
        return "\n".join(lines)


class CategoryError(ValueError):
    def __init__(self, report: CategoryReport):
        self.report = report
        super().__init__(str(report))


class TranslationCategory:
    """A finite list of GENEO arrows between perception spaces, with a declared composition table.

    ``closure`` maps ``(i, j)`` (arrow ids, ``i`` first) to the id of the arrow
    equal to ``j ∘ i``.
    """

    def __init__(self, objects: Sequence[PerceptionSpace], arrows: Sequence[Arrow],
                 closure: Mapping | Sequence | None = None):
        self.objects = list(objects)
        self.arrows = list(arrows)
        self.by_id = {}
        for a in self.arrows:
            if a.id in self.by_id:
                raise ValueError(f"duplicate arrow id {a.id!r}")
            self.by_id[a.id] = a
        if closure is None:
            closure = {}
        elif not isinstance(closure, Mapping):
            closure = {(i, j): k for i, j, k in closure}
        self.closure = dict(closure)

    def arrows_between(self, dom: PerceptionSpace, cod: PerceptionSpace) -> list[Arrow]:
        return [a for a in self.arrows if G.same_space(a.dom, dom) and G.same_space(a.cod, cod)]

    def composable_pairs(self):
        return [(a, b) for a in self.arrows for b in self.arrows if G.same_space(a.cod, b.dom)]

    def subcategory(self, arrow_ids) -> "TranslationCategory":
        keep = [a for a in self.arrows if a.id in set(arrow_ids)]
        ids = {a.id for a in keep}
        closure = {k: v for k, v in self.closure.items() if k[0] in ids and k[1] in ids and v in ids}
        return TranslationCategory(self.objects, keep, closure)

    @classmethod
    def identities(cls, spaces: Sequence[PerceptionSpace]) -> "TranslationCategory":
        arrows = [Arrow(f"id_{s.id}", G.identity(s), "identity") for s in spaces]
        closure = {(a.id, a.id): a.id for a in arrows}
        return cls(spaces, arrows, closure)

    @classmethod
    def closed_under_composition(cls, objects, arrows: Sequence[Arrow], max_arrows: int = 64):
        """Saturate ``arrows`` (finite carriers) by composition, naming new arrows ``b.a``."""
        arrows = list(arrows)
        for s in objects:
            if not any(a.kind == "identity" and G.same_space(a.dom, s) for a in arrows):
                arrows.insert(0, Arrow(f"id_{s.id}", G.identity(s), "identity"))
        closure = {}
        changed = True
        while changed:
            changed = False
            for a, b in [(a, b) for a in arrows for b in arrows if G.same_space(a.cod, b.dom)]:
                if (a.id, b.id) in closure:
                    continue
                if a.kind == "identity" or b.kind == "identity":
                    closure[(a.id, b.id)] = b.id if a.kind == "identity" else a.id
                    continue
                c = G.compose(b.geneo, a.geneo)
                hit = next((x for x in arrows if G.same_space(x.dom, c.dom) and G.same_space(x.cod, c.cod)
                            and np.array_equal(x.geneo.table, c.table)
                            and np.array_equal(x.geneo.hom.table, c.hom.table)), None)
                if hit is None:
                    if len(arrows) >= max_arrows:
                        raise ValueError("composition closure exceeds max_arrows")
                    hit = Arrow(f"{b.id}.{a.id}", G.Geneo(c, _compose_cert(a, b)), "lookup")
                    arrows.append(hit)
                    changed = True
                closure[(a.id, b.id)] = hit.id
        return cls(objects, arrows, closure)

    def validate(self, recheck: bool = True, probes: Mapping | None = None) -> CategoryReport:
        """Closure completeness, typing, units, associativity, extensional correctness, certificates."""
        rep = CategoryReport()
        for s in self.objects:
            if not any(a.kind == "identity" and G.same_space(a.dom, s) and G.same_space(a.cod, s)
                       for a in self.arrows):
                rep.errors.append(f"no identity arrow on {s.id}")
        for (i, j), k in self.closure.items():
            missing = [x for x in (i, j, k) if x not in self.by_id]
            if missing:
                rep.errors.append(f"closure entry ({i}, {j}) -> {k} names unknown arrow(s) {missing}")
        if rep.errors:
            return rep
        for a, b in self.composable_pairs():
            k = self.closure.get((a.id, b.id))
            if k is None:
                rep.errors.append(f"composite {b.id} ∘ {a.id} missing from the closure table")
                continue
            c = self.by_id[k]
            if not (G.same_space(c.dom, a.dom) and G.same_space(c.cod, b.cod)):
                rep.errors.append(f"closure ({a.id}, {b.id}) -> {k} has the wrong type")
                continue
            if a.kind == "identity" and k != b.id:
                rep.errors.append(f"identity {a.id} is not a unit: {b.id} ∘ {a.id} = {k}")
            if b.kind == "identity" and k != a.id:
                rep.errors.append(f"identity {b.id} is not a unit: {b.id} ∘ {a.id} = {k}")
            if a.dom.is_finite and a.cod.is_finite and b.cod.is_finite:
                comp = G.compose(b.geneo, a.geneo)
                if not np.array_equal(comp.table, c.geneo.table):
                    rep.errors.append(f"closure ({a.id}, {b.id}) -> {k} is extensionally wrong")
        for a, b in self.composable_pairs():
            for c in self.arrows:
                if not G.same_space(b.cod, c.dom):
                    continue
                ab, bc = self.closure.get((a.id, b.id)), self.closure.get((b.id, c.id))
                if ab is None or bc is None:
                    continue
                left, right = self.closure.get((ab, c.id)), self.closure.get((a.id, bc))
                if left != right:
                    rep.errors.append(f"closure not associative at ({a.id}, {b.id}, {c.id}): {left} != {right}")
        for a in self.arrows:
            rep.errors += _arrow_errors(a, recheck, (probes or {}).get(a.dom.id))
            rep.warnings += _measure_warnings(a)
        return rep

    def require_valid(self, **kw) -> "TranslationCategory":
        rep = self.validate(**kw)
        if not rep.ok:
            raise CategoryError(rep)
        return self


def _compose_cert(a: Arrow, b: Arrow):
    certs = (a.geneo.certificate, b.geneo.certificate)
    if all(isinstance(c, G.Validated) for c in certs):
        return G.Validated("composite of validated arrows")
    return G.Declared("composite of declared arrows")


def _arrow_errors(a: Arrow, recheck: bool, probes) -> list:
    out = []
    geo = a.geneo.geo
    if geo.hom.violations(1):
        out.append(f"arrow {a.id}: group map is not a homomorphism")
    if not recheck:
        return out
    if a.dom.is_finite:
        eq = G.check_equivariance(geo)
        ne = G.check_nonexpansive(geo)
    else:
        if probes is None:
            rng = np.random.default_rng(0)
            probes = list(a.dom.carrier.random(rng, 4))
        order = a.dom.group.order
        eq = G.check_equivariance(geo, [(g, x) for g in range(0, order, max(1, order // 16)) for x in probes])
        ne = G.check_nonexpansive(geo, list(zip(probes[:-1], probes[1:])) or [(probes[0], probes[0])],
                                  group_budget=64)
    if not eq.ok:
        out.append(f"arrow {a.id}: not equivariant, witness {eq.ne[0]}")
    if isinstance(ne, G.NonExpansiveReport):
        w = (ne.data_violations or ne.group_violations)[0]
        out.append(f"arrow {a.id}: expansive, witness {w[:2]} ratio {w[2]:.4g}")
    return out


def _measure_warnings(a: Arrow) -> list:
    if not (a.dom.is_finite and a.cod.is_finite):
        return [f"arrow {a.id}: measure condition not checked on an intensional carrier"]
    n_dom, n_cod = a.dom.size, a.cod.size
    out = []
    # uniform measures: mu_cod(l(A)) <= mu_dom(A) for all A  iff  |dom| <= |cod|
    if n_dom > n_cod:
        out.append(f"arrow {a.id}: not measure-decreasing under uniform measures ({n_dom} > {n_cod})")
    fibres = np.bincount(a.geneo.table, minlength=n_cod)
    if n_dom == n_cod and not np.all(fibres == 1):
        out.append(f"arrow {a.id}: does not preserve the uniform measure")
    return out


# --------------------------------------------------------------------------- observers

@dataclass
class Observer:
    translations: TranslationCategory
    complexity: dict = field(default_factory=dict)   # generator -> float (inf allowed)

    def cost_of(self, d, sig: Signature | None = None) -> float:
        return diagram_complexity(d, self.complexity, sig)


@dataclass(frozen=True)
class CrossedPair:
    forward: Arrow     # l : dom(alpha) -> dom(beta)
    backward: Arrow    # m : cod(beta) -> cod(alpha)

    @property
    def id(self) -> str:
        return f"{self.forward.id}|{self.backward.id}"


def identity_pair(alpha, beta=None) -> CrossedPair:
    alpha = G.as_geo(alpha)
    return CrossedPair(Arrow("id", G.identity(alpha.dom), "identity"), Arrow("id", G.identity(alpha.cod), "identity"))


@dataclass
class EvaluationSet:
    """Data points of ``dom(alpha)`` plus an optional output metric override.

    ``metric`` is ``None`` (use the codomain metric), ``"discrete"`` (argmax
    class equality for score vectors, index equality otherwise) or ``"linf"``.
    """

    data: Any
    metric: str | None = None

    def __post_init__(self):
        if len(self.data) == 0:
            raise ValueError("evaluation set must be nonempty")

    def __len__(self):
        return len(self.data)

    @classmethod
    def whole(cls, space: PerceptionSpace, metric: str | None = None) -> "EvaluationSet":
        return cls(np.arange(space.size), metric)


def output_gaps(space: PerceptionSpace, ys, ya, metric: str | None = None) -> np.ndarray:
    """Per-point distances between two batches of codomain elements."""
    if space.is_finite:
        ys, ya = np.asarray(ys, dtype=np.int64), np.asarray(ya, dtype=np.int64)
        if metric == "discrete":
            return (ys != ya).astype(np.float64)
        return space.distance_matrix[ys, ya].astype(np.float64)
    ys, ya = np.asarray(ys, dtype=np.float64), np.asarray(ya, dtype=np.float64)
    kind = metric or space.metric.kind
    if kind == "discrete":
        if ys.ndim == 2:   # score vectors: compare predicted classes
            return (ys.argmax(1) != ya.argmax(1)).astype(np.float64)
        return np.array([0.0 if np.array_equal(a, b) else 1.0 for a, b in zip(ys, ya)])
    diff = np.abs(ys - ya).reshape(len(ys), -1)
    if kind == "l1":
        return diff.sum(1)
    if kind == "linf":
        return diff.max(1)
    raise ValueError(f"unsupported output metric {kind!r}")


def _mean(gaps) -> float:
    gaps = np.asarray(gaps, dtype=np.float64)
    if np.isinf(gaps).any():
        return math.inf
    return math.fsum(gaps.tolist()) / len(gaps)


def cost(pair: CrossedPair, alpha, beta, ev: EvaluationSet) -> float:
    """Average output gap ``d((m ∘ f_beta ∘ l)(x), f_alpha(x))`` over the evaluation set."""
    alpha, beta = G.as_geo(alpha), G.as_geo(beta)
    l, m = pair.forward, pair.backward
    if not (G.same_space(l.dom, alpha.dom) and G.same_space(l.cod, beta.dom)
            and G.same_space(m.dom, beta.cod) and G.same_space(m.cod, alpha.cod)):
        raise G.GeoTypeError(f"pair {pair.id} does not connect {alpha!r} and {beta!r}")
    ya = alpha.map_many(ev.data)
    ys = m.geneo.map_many(beta.map_many(l.geneo.map_many(ev.data)))
    return _mean(output_gaps(alpha.cod, ys, ya, ev.metric))


def enumerate_crossed_pairs(obs: Observer | TranslationCategory, alpha, beta) -> list[CrossedPair]:
    cat = obs.translations if isinstance(obs, Observer) else obs
    alpha, beta = G.as_geo(alpha), G.as_geo(beta)
    fwd = cat.arrows_between(alpha.dom, beta.dom)
    bwd = cat.arrows_between(beta.cod, alpha.cod)
    return [CrossedPair(l, m) for l in fwd for m in bwd]


@dataclass
class DistanceResult:
    value: float
    pair: CrossedPair | None
    costs: list = field(default_factory=list)    # (pair id, cost) in enumeration order

    def csv(self) -> str:
        lines = ["pair,cost"] + [f"{pid},{c!r}" for pid, c in self.costs]
        return "\n".join(lines) + "\n"


def surrogate_distance(obs: Observer | TranslationCategory, alpha, beta, ev: EvaluationSet) -> DistanceResult:
    """``h_O(alpha, beta)``: minimum cost over all crossed pairs (``inf`` if there are none).

    Ties go to the first pair in enumeration order.
    """
    alpha, beta = G.as_geo(alpha), G.as_geo(beta)
    pairs = enumerate_crossed_pairs(obs, alpha, beta)
    if not pairs:
        return DistanceResult(math.inf, None, [])
    ya = alpha.map_many(ev.data)
    best, best_pair, costs = math.inf, None, []
    cache: dict = {}
    for p in pairs:
        if p.forward.id not in cache:
            cache[p.forward.id] = beta.map_many(p.forward.geneo.map_many(ev.data))
        ys = p.backward.geneo.map_many(cache[p.forward.id])
        c = _mean(output_gaps(alpha.cod, ys, ya, ev.metric))
        costs.append((p.id, c))
        if best_pair is None or c < best:
            best, best_pair = c, p
    return DistanceResult(best, best_pair, costs)


def symmetric_distance(obs, alpha, beta, ev_alpha: EvaluationSet, ev_beta: EvaluationSet) -> float:
    return max(surrogate_distance(obs, alpha, beta, ev_alpha).value,
               surrogate_distance(obs, beta, alpha, ev_beta).value)


def fidelity(alpha, beta, dataset) -> float:
    """Agreement rate of two classifiers on ``dataset``: one minus the discrete identity-pair cost."""
    alpha, beta = G.as_geo(alpha), G.as_geo(beta)
    if not (G.same_space(alpha.dom, beta.dom) and G.same_space(alpha.cod, beta.cod)):
        raise G.GeoTypeError("fidelity needs Geos on the same spaces")
    ev = dataset if isinstance(dataset, EvaluationSet) else EvaluationSet(dataset)
    return 1.0 - cost(identity_pair(alpha), alpha, beta, EvaluationSet(ev.data, "discrete"))


# --------------------------------------------------------------------------- lower bound

@dataclass
class LowerBound:
    ne: list
    group_order: int
    n_points: int

    @property
    def n_ne(self) -> int:
        return len(self.ne)

    @property
    def count_bound(self) -> float:
        """``|NE| / (2|G|)``: a lower bound on the number of points where the surrogates disagree."""
        return self.n_ne / (2 * self.group_order)

    @property
    def value(self) -> float:
        """``|NE| / (2|G||X|)``: the bound on the averaged (normalized) discrete cost."""
        return self.count_bound / self.n_points


def equivariance_lower_bound(beta, space: PerceptionSpace, data=None) -> LowerBound:
    """Count ``NE = {(g, x) : f_beta(x) != f_beta(g*x)}`` over ``G × X``.

    For any ``G``-invariant ``f_alpha`` and a ``G``-closed ``X``, the discrete
    identity-pair cost between them is at least :attr:`LowerBound.value`.
    """
    beta = G.as_geo(beta)
    if data is None:
        data = np.arange(space.size)
    order = space.group.order
    ne = []
    if space.is_finite and beta.cod.is_finite:
        data = np.asarray(data, dtype=np.int64)
        f = beta.table
        moved = f[space.action.table[:, data]]          # [g, i] -> f(g * x_i)
        same = beta.cod.distance_matrix[moved, f[data][None, :]] < TOL
        ne = [(int(g), int(data[i])) for g, i in np.argwhere(~same)]
        n = len(data)
    else:
        n = len(data)
        for i, x in enumerate(data):
            fx = beta(x)
            for g in range(order):
                if beta.cod.distance(beta(space.act(g, x)), fx) >= TOL:
                    ne.append((g, i))
    return LowerBound(ne, order, n)


# --------------------------------------------------------------------------- explanation

@dataclass
class Verdict:
    h: float
    complexity_alpha: float
    complexity_beta: float
    epsilon: float
    pair: CrossedPair | None = None

    @property
    def explained(self) -> bool:
        return self.h <= self.epsilon and self.complexity_beta <= self.complexity_alpha

    def __bool__(self):
        return self.explained


def explained_at_level(alpha_diagram, beta_diagram, obs: Observer, ev: EvaluationSet, epsilon: float,
                       alpha_geo=None, beta_geo=None, interp=None, sig: Signature | None = None) -> Verdict:
    """Whether beta explains alpha at level epsilon: ``h_O(alpha, beta) <= epsilon`` and ``C(beta) <= C(alpha)``.

    The Geos are taken from ``alpha_geo``/``beta_geo`` when given, else from the
    semantics of the diagrams under ``interp``.
    """
    from .dsl import evaluate_semantics
    if alpha_geo is None:
        alpha_geo = evaluate_semantics(alpha_diagram, interp, sig)
    if beta_geo is None:
        beta_geo = evaluate_semantics(beta_diagram, interp, sig)
    res = surrogate_distance(obs, alpha_geo, beta_geo, ev)
    ca = obs.cost_of(alpha_diagram, sig)
    cb = obs.cost_of(beta_diagram, sig)
    return Verdict(res.value, ca, cb, epsilon, res.pair)


def space_distance(obs: Observer | TranslationCategory, a: PerceptionSpace, b: PerceptionSpace,
                   eval_a: EvaluationSet, eval_b: EvaluationSet) -> float:
    """Symmetric distance between the identity GENEOs of two spaces (average round-trip displacement)."""
    return symmetric_distance(obs, G.identity(a), G.identity(b), eval_a, eval_b)


# --------------------------------------------------------------------------- builtin spaces & JSON

def builtin_spaces() -> dict:
    """Image and label spaces used by the MNIST experiments."""
    from .perception import FiniteCarrier, FiniteGroup
    return {
        "img28": image_space("img28", 28, 28, translations=True),
        "img28_trivial": image_space("img28_trivial", 28, 28, translations=False),
        "img14": image_space("img14", 14, 14, translations=True),
        "img14_trivial": image_space("img14_trivial", 14, 14, translations=False),
        "labels10": finite_space("labels10", 10),
        "scores10": PerceptionSpace("scores10", ArrayCarrier((10,)), PseudoMetric.linf()),
    }


_BUILTINS: dict | None = None


def builtin(name: str) -> PerceptionSpace:
    global _BUILTINS
    if _BUILTINS is None:
        _BUILTINS = builtin_spaces()
    return _BUILTINS[name]


def rescale_arrow(dom: PerceptionSpace, cod: PerceptionSpace, arrow_id: str = "down") -> Arrow:
    from .data import downscale_2x2_max
    geo = G.Geo(dom, cod, f=downscale_2x2_max, batch=downscale_2x2_max,
                hom=G.GroupHom.annihilator(dom.group, cod.group), name=arrow_id)
    return Arrow(arrow_id, G.Geneo(geo, G.Validated("2x2 max is 1-Lipschitz for the sup-norm")),
                 "rescale2x2max")


def upsample_arrow(dom: PerceptionSpace, cod: PerceptionSpace, arrow_id: str = "up") -> Arrow:
    from .data import upsample_nearest
    geo = G.Geo(dom, cod, f=upsample_nearest, batch=upsample_nearest,
                hom=G.GroupHom.annihilator(dom.group, cod.group), name=arrow_id)
    return Arrow(arrow_id, G.Geneo(geo, G.Declared("nearest-neighbour upsampling copies pixels")),
                 "upsample_nn")


def observer_from_json(doc: dict, spaces: Mapping | None = None, recheck: bool = True) -> Observer:
    """Build and validate an observer from its JSON description."""
    registry = dict(builtin_spaces())
    registry.update(spaces or {})
    tr = doc["translations"]
    objects = []
    for o in tr["objects"]:
        if isinstance(o, dict):
            from .perception import space_from_json
            s = space_from_json(o)
            registry[s.id] = s
        else:
            if o not in registry:
                raise KeyError(f"unknown space {o!r}")
            s = registry[o]
        objects.append(s)
    arrows = []
    for a in tr["arrows"]:
        dom, cod = registry[a["dom"]], registry[a["cod"]]
        kind = a.get("kind", "lookup")
        if kind == "identity":
            if dom.id != cod.id:
                raise ValueError(f"identity arrow {a['id']} between different spaces")
            arr = Arrow(a["id"], G.identity(dom), "identity")
        elif kind == "rescale2x2max":
            arr = rescale_arrow(dom, cod, a["id"])
        elif kind == "upsample_nn":
            arr = upsample_arrow(dom, cod, a["id"])
        elif kind == "lookup":
            geo = G.Geo(dom, cod, table=a["table"], hom=G.hom_from_json(a.get("hom"), dom, cod), name=a["id"])
            arr = Arrow(a["id"], G.Geneo(geo, _certificate(a.get("certificate"), geo)), "lookup")
        else:
            raise ValueError(f"unknown arrow kind {kind!r}")
        if kind != "lookup" and isinstance(a.get("certificate"), (str, dict)):
            arr = Arrow(arr.id, G.Geneo(arr.geneo.geo, _certificate(a["certificate"], arr.geneo.geo)), arr.kind)
        arrows.append(arr)
    closure = tr.get("closure")
    if closure is not None:
        ids = [a.id for a in arrows]
        closure = [[ids[v] if isinstance(v, int) else v for v in entry] for entry in closure]
    cat = TranslationCategory(objects, arrows, closure)
    if closure is None:
        cat = TranslationCategory.identities(objects) if all(a.kind == "identity" for a in arrows) else cat
    cat.require_valid(recheck=recheck)
    comp = {k: parse_cost(v) for k, v in doc.get("complexity", {}).items()}
    return Observer(cat, comp)


def _certificate(doc, geo):
    if doc is None or doc == "validated":
        return G.Validated("declared in observer file, re-checked at load")
    if isinstance(doc, dict) and "declared" in doc:
        return G.Declared(str(doc["declared"]))
    if isinstance(doc, str) and doc.startswith("declared"):
        return G.Declared(doc.partition(":")[2].strip() or "declared")
    raise ValueError(f"unknown certificate {doc!r}")

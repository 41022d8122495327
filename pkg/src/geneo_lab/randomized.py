"""Seeded random instances and the brute-force property suites behind ``geneo-lab verify``.

Every suite returns a :class:`SuiteResult`; a failing instance is recorded as
a human-readable counterexample that includes the instance seed.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import dsl as D
from . import geo as G
from .observer import (Arrow, EvaluationSet, TranslationCategory, equivariance_lower_bound,
                       surrogate_distance)
from .perception import FiniteGroup, PseudoMetric, finite_space, validate_space


@dataclass
class SuiteResult:
    name: str
    instances: int
    failures: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = " ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.stats.items())
        return f"{status} {self.name}: {self.instances} instances, {len(self.failures)} failure(s), " \
               f"{self.seconds:.2f}s {extra}".rstrip()


# --------------------------------------------------------------------------- finite building blocks

def random_cyclic_action(n: int, k: int, rng: np.random.Generator, fixed_point: bool = False) -> np.ndarray:
    """Action table ``[g, x] = π^g(x)`` of Z_k on ``n`` points, π a permutation of order dividing k."""
    divisors = [d for d in range(1, k + 1) if k % d == 0]
    perm = np.arange(n)
    pts = list(rng.permutation(n))
    if fixed_point:
        pts = pts[1:]
    while pts:
        lens = [d for d in divisors if d <= len(pts)]
        d = int(rng.choice(lens))
        cyc, pts = pts[:d], pts[d:]
        for i, x in enumerate(cyc):
            perm[x] = cyc[(i + 1) % d]
    table = np.empty((k, n), dtype=np.int64)
    table[0] = np.arange(n)
    for g in range(1, k):
        table[g] = perm[table[g - 1]]
    return table


def invariant_metric(action: np.ndarray, rng: np.random.Generator, discrete: bool = False) -> np.ndarray:
    """Shortest-path metric of a complete graph whose edge weights are constant on orbits of the action."""
    n = action.shape[1]
    if discrete:
        return 1.0 - np.eye(n)
    w = np.zeros((n, n))
    done = np.zeros((n, n), dtype=bool)
    for x in range(n):
        for y in range(x + 1, n):
            if done[x, y]:
                continue
            v = float(rng.integers(1, 5)) / 2
            for g in range(action.shape[0]):
                a, b = action[g, x], action[g, y]
                w[a, b] = w[b, a] = v
                done[min(a, b), max(a, b)] = True
    for m in range(n):
        w = np.minimum(w, w[:, m:m + 1] + w[m:m + 1, :])
    return w


def random_space(name: str, n: int, k: int, rng: np.random.Generator, discrete: bool = False,
                 fixed_point: bool = False):
    action = random_cyclic_action(n, k, rng, fixed_point)
    metric = PseudoMetric.explicit(invariant_metric(action, rng, discrete))
    return finite_space(name, n, metric, FiniteGroup.cyclic(k), action)


def random_equivariant_table(dom, cod, rng: np.random.Generator) -> np.ndarray:
    """A map commuting with two actions of the same cyclic group (identity hom).

    Into a trivial-group codomain this is a map constant on orbits.
    """
    if cod.group.order == 1:
        return invariant_table(dom, cod.size, rng)
    a, b = dom.action.table, cod.action.table
    k = dom.group.order
    table = -np.ones(dom.size, dtype=np.int64)
    for r in range(dom.size):
        if table[r] >= 0:
            continue
        s = next(d for d in range(1, k + 1) if a[d % k, r] == r)
        cands = [y for y in range(cod.size) if b[s % k, y] == y]
        if not cands:
            raise ValueError(f"no equivariant map {dom.id} -> {cod.id}: no point of {cod.id} has a large enough stabilizer")
        y = int(rng.choice(cands))
        for g in range(s):
            table[a[g, r]] = b[g, y]
    return table


def invariant_table(dom, n_out: int, rng: np.random.Generator) -> np.ndarray:
    """A random map constant on the orbits of ``dom``'s action."""
    a = dom.action.table
    table = -np.ones(dom.size, dtype=np.int64)
    for r in range(dom.size):
        if table[r] < 0:
            table[a[:, r]] = rng.integers(n_out)
    return table


def _hom(dom, cod):
    if dom.group.order == cod.group.order and dom.group.order > 1:
        return G.GroupHom.identity(dom.group) if dom.group.same_as(cod.group) else None
    return G.GroupHom.annihilator(dom.group, cod.group)


def lookup_arrow(arrow_id: str, dom, cod, table) -> Arrow | None:
    """The arrow if the table is a GENEO (checked exhaustively), else None."""
    geo = G.Geo.lookup(dom, cod, table, hom=_hom(dom, cod), name=arrow_id)
    if not G.check_equivariance(geo).ok:
        return None
    res = G.check_nonexpansive(geo)
    return Arrow(arrow_id, res, "lookup") if isinstance(res, G.Geneo) else None


@dataclass
class FiniteInstance:
    seed: int
    X: object
    Y: object
    category: TranslationCategory
    geos: list
    generators: list

    def describe(self) -> str:
        ids = ", ".join(a.id for a in self.category.arrows)
        tables = "; ".join(f"{g.name}={g.table.tolist()}" for g in self.geos)
        return (f"seed {self.seed}: |X|={self.X.size} |G|={self.X.group.order} |Y|={self.Y.size} "
                f"arrows [{ids}] {tables}")


def _arrow_generators(X, Y, rng, n_fwd: int, n_bwd: int) -> list:
    gens = []
    seen = {(X.id, np.arange(X.size).tobytes()), (Y.id, np.arange(Y.size).tobytes())}

    def fresh(a):
        key = (a.dom.id, a.geneo.table.tobytes())
        if key in seen:
            return False
        seen.add(key)
        return True

    for g in rng.permutation(np.arange(1, X.group.order))[:n_fwd]:
        a = lookup_arrow(f"t{g}", X, X, X.action.table[g])
        if a is not None and fresh(a):
            gens.append(a)
    tries = 0
    while sum(a.dom is Y for a in gens) < n_bwd and tries < 40:
        tries += 1
        a = lookup_arrow(f"m{tries}", Y, Y, random_equivariant_table(Y, Y, rng))
        if a is not None and fresh(a):
            gens.append(a)
    return gens


def random_finite_instance(seed: int, n_geos: int = 3, max_arrows: int = 8, inject_expansive: bool = False,
                           discrete_output: bool | None = None) -> FiniteInstance:
    """One input space X (|X| <= 6, |G| <= 4), one output space Y, GEOs X -> Y and a closed category.

    Forward arrows are translations by group elements, hence measure-preserving
    isometries; backward arrows are random non-expansive equivariant maps on Y.
    """
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 5))
    X = random_space(f"X{seed}", int(rng.integers(2, 7)), k, rng, discrete=bool(rng.integers(2)))
    if discrete_output is None:
        discrete_output = bool(rng.integers(2))
    Y = random_space(f"Y{seed}", int(rng.integers(2, 5)), k, rng, discrete=discrete_output, fixed_point=True)
    if inject_expansive:
        # a path metric on a line, so some map stretches a pair
        n = int(rng.integers(3, 5))
        line = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).astype(float)
        Y = finite_space(f"Y{seed}", n, PseudoMetric.explicit(line))
    for n_fwd, n_bwd in ((2, 2), (1, 1), (1, 0), (0, 0)):
        gens = _arrow_generators(X, Y, rng, n_fwd, n_bwd)
        try:
            cat = TranslationCategory.closed_under_composition([X, Y], gens, max_arrows=max_arrows)
        except ValueError:
            continue
        break
    if inject_expansive:
        cat = TranslationCategory.closed_under_composition([X, Y], gens + [_expansive_arrow(Y, rng)],
                                                           max_arrows=64)
    geos = [G.Geo.lookup(X, Y, random_equivariant_table(X, Y, rng), hom=_hom(X, Y), name=f"f{i}")
            for i in range(n_geos)]
    return FiniteInstance(seed, X, Y, cat, geos, gens)


def _expansive_arrow(Y, rng) -> Arrow:
    """A map on Y that stretches some pair (certificate forged as Declared)."""
    d = Y.distance_matrix
    table = np.arange(Y.size)
    x, y = np.unravel_index(np.argmin(np.where(d > 0, d, np.inf)), d.shape)
    far = np.unravel_index(np.argmax(d), d.shape)
    table = np.array([far[0] if i == x else far[1] if i == y else i for i in range(Y.size)])
    geo = G.Geo(Y, Y, table=table, name="stretch")
    return Arrow("stretch", G.Geneo(geo, G.Declared("injected")), "lookup")


# --------------------------------------------------------------------------- metric suites

def _h(cat, a, b, X) -> float:
    return surrogate_distance(cat, a, b, EvaluationSet.whole(X)).value


def suite_hemi_metric(instances: int = 200, seed: int = 0, tol: float = 1e-9,
                      inject_expansive: bool = False) -> SuiteResult:
    res = SuiteResult("hemi-metric", instances)
    worst = -math.inf
    t0 = time.perf_counter()
    for i in range(instances):
        inst = random_finite_instance(seed * 100_003 + i, inject_expansive=inject_expansive)
        rep = inst.category.validate()
        if not rep.ok:
            res.failures.append(f"category validation failed for {inst.describe()}\n{rep}")
            continue
        a, b, c = inst.geos
        for f in inst.geos:
            h = _h(inst.category, f, f, inst.X)
            if h != 0.0:
                res.failures.append(f"h(f, f) = {h!r} != 0 for {f.name} in {inst.describe()}")
        hab, hbc, hac = (_h(inst.category, a, b, inst.X), _h(inst.category, b, c, inst.X),
                         _h(inst.category, a, c, inst.X))
        slack = hac - (hab + hbc)
        worst = max(worst, slack)
        if slack > tol:
            res.failures.append(f"triangle: h(a,c)={hac!r} > h(a,b)+h(b,c)={hab + hbc!r} in {inst.describe()}")
    res.stats["max_triangle_slack"] = worst
    res.seconds = time.perf_counter() - t0
    return res


def suite_monotonicity(instances: int = 100, seed: int = 0, tol: float = 1e-12) -> SuiteResult:
    res = SuiteResult("monotonicity", instances)
    t0 = time.perf_counter()
    least = math.inf
    for i in range(instances):
        inst = random_finite_instance(seed * 100_003 + i, n_geos=2)
        rng = np.random.default_rng(seed * 7 + i)
        keep = [g for g in inst.generators if rng.integers(2)]
        sub = TranslationCategory.closed_under_composition([inst.X, inst.Y], keep)
        sup_tables = {(a.dom.id, a.cod.id, a.geneo.table.tobytes()) for a in inst.category.arrows}
        if any((a.dom.id, a.cod.id, a.geneo.table.tobytes()) not in sup_tables for a in sub.arrows):
            res.failures.append(f"generated subcategory is not contained in the category: {inst.describe()}")
            continue
        a, b = inst.geos
        h_sub, h_sup = _h(sub, a, b, inst.X), _h(inst.category, a, b, inst.X)
        least = min(least, h_sub - h_sup)
        if h_sub < h_sup - tol:
            res.failures.append(f"h_sub={h_sub!r} < h_sup={h_sup!r} keeping {[g.id for g in keep]} "
                                f"in {inst.describe()}")
    res.stats["min_sub_minus_sup"] = least
    res.seconds = time.perf_counter() - t0
    return res


def suite_lower_bound(instances: int = 100, seed: int = 0, tol: float = 1e-12) -> SuiteResult:
    """Discrete output metric, identity translations only, G-invariant reference map."""
    res = SuiteResult("lower-bound", instances)
    t0 = time.perf_counter()
    gap_max, gap_min = -math.inf, math.inf
    for i in range(instances):
        rng = np.random.default_rng(seed * 100_003 + i)
        k = int(rng.integers(1, 5))
        X = random_space(f"X{i}", int(rng.integers(2, 7)), k, rng, discrete=bool(rng.integers(2)))
        m = int(rng.integers(2, 5))
        Y = finite_space(f"L{i}", m)
        alpha = G.Geo.lookup(X, Y, invariant_table(X, m, rng), name="alpha")
        beta = G.Geo.lookup(X, Y, rng.integers(m, size=X.size), name="beta")
        cat = TranslationCategory.identities([X, Y])
        h = surrogate_distance(cat, alpha, beta, EvaluationSet.whole(X)).value
        lb = equivariance_lower_bound(beta, X)
        gap = h - lb.value
        gap_max, gap_min = max(gap_max, gap), min(gap_min, gap)
        if gap < -tol:
            res.failures.append(f"seed {seed * 100_003 + i}: h={h!r} < |NE|/(2|G||X|)={lb.value!r} "
                                f"(|NE|={lb.n_ne}, |G|={k}, |X|={X.size}, alpha={alpha.table.tolist()}, "
                                f"beta={beta.table.tolist()})")
    res.stats["max_gap"] = gap_max
    res.stats["min_gap"] = gap_min
    res.seconds = time.perf_counter() - t0
    return res


# --------------------------------------------------------------------------- functor laws

_COSTS = (0.0, 1.0, 2.5, 0.1, 0.2, 7.0, 1e-3)


@dataclass
class DiagramWorld:
    sig: D.Signature
    interp: D.Interpretation
    costs: dict

    def gens_from(self, word) -> list:
        return [g for g in self.sig.generators.values() if g.arity == word]


def random_world(rng: np.random.Generator, n_sorts: int = 3, n_gens: int = 8) -> DiagramWorld:
    sig = D.Signature()
    sorts = {}
    for s in "ABC"[:n_sorts]:
        sig.add_sort(s)
        n = int(rng.integers(1, 6))
        sorts[s] = finite_space(f"{s}", n, PseudoMetric.discrete())
    names = list(sorts)
    interp = D.Interpretation(sorts, {})
    costs = {}
    for i in range(n_gens):
        ar = tuple(rng.choice(names, size=int(rng.integers(0, 3))))
        co = tuple(rng.choice(names, size=int(rng.integers(1, 3))))
        name = f"g{i}"
        dom, cod = interp.space(ar), interp.space(co)
        table = rng.integers(cod.size, size=dom.size)
        interp.generators[name] = G.Geo.lookup(dom, cod, table, name=name)
        costs[name] = float(rng.choice(_COSTS))
        sig.add_gen(D.GenDecl(name, ar, co, costs[name]))
    return DiagramWorld(sig, interp, costs)


def _ids(word) -> D.Node:
    if not word:
        return D.Empty()
    node = D.Id(word[0])
    for s in word[1:]:
        node = D.Par(node, D.Id(s))
    return node


def random_diagram(world: DiagramWorld, word: tuple, rng: np.random.Generator, depth: int = 3,
                   max_len: int = 3):
    """A random well-typed diagram with input ``word``; returns ``(node, output word)``."""
    r = rng.random()
    if depth <= 0 or r < 0.25:
        opts = [g for g in world.gens_from(word) if len(g.coarity) <= max_len]
        if opts and rng.random() < 0.8:
            g = opts[int(rng.integers(len(opts)))]
            return D.Gen(g.name), g.coarity
        if len(word) == 1:
            pick = rng.integers(3) if len(word) < max_len else rng.integers(2) * 2
            if pick == 1:
                return D.Copy(word[0]), (word[0], word[0])
            if pick == 2:
                return D.Discard(word[0]), ()
        if len(word) == 2 and rng.random() < 0.5:
            return D.Swap(word[0], word[1]), (word[1], word[0])
        return _ids(word), word
    if r < 0.65 or len(word) < 2:
        n1, w1 = random_diagram(world, word, rng, depth - 1, max_len)
        n2, w2 = random_diagram(world, w1, rng, depth - 1, max_len)
        return D.Seq(n1, n2), w2
    cut = int(rng.integers(1, len(word)))
    n1, w1 = random_diagram(world, word[:cut], rng, depth - 1, max_len)
    n2, w2 = random_diagram(world, word[cut:], rng, depth - 1, max_len)
    if len(w1) + len(w2) > max_len:
        return _ids(word), word
    return D.Par(n1, n2), w1 + w2


def _random_word(world, rng, max_len=2) -> tuple:
    return tuple(rng.choice(world.sig.sorts, size=int(rng.integers(1, max_len + 1))))


def _sem(world, node):
    return D.evaluate_semantics(node, world.interp, world.sig)


def _cost(world, node) -> float:
    return D.complexity(node, world.costs, world.sig)


def suite_functor_laws(instances: int = 100, seed: int = 0) -> SuiteResult:
    res = SuiteResult("functor-law", instances)
    t0 = time.perf_counter()
    checks = 0
    for i in range(instances):
        s = seed * 100_003 + i
        rng = np.random.default_rng(s)
        world = random_world(rng)
        w0 = _random_word(world, rng)
        a, w1 = random_diagram(world, w0, rng, max_len=2)
        b, w2 = random_diagram(world, w1, rng, max_len=2)
        c, w3 = random_diagram(world, w2, rng, max_len=2)
        e, _ = random_diagram(world, _random_word(world, rng, 1), rng, depth=2, max_len=1)
        f, _ = random_diagram(world, _random_word(world, rng, 1), rng, depth=2, max_len=1)
        pairs = [
            ("seq-assoc", D.Seq(D.Seq(a, b), c), D.Seq(a, D.Seq(b, c))),
            ("par-assoc", D.Par(D.Par(a, e), f), D.Par(a, D.Par(e, f))),
            ("seq-unit-left", D.Seq(_ids(w0), a), a),
            ("seq-unit-right", D.Seq(a, _ids(w1)), a),
            ("par-unit", D.Par(D.Empty(), a), a),
            ("interchange", D.Seq(D.Par(a, e), D.Par(b, _ids(_typ(world, e)))), D.Par(D.Seq(a, b), e)),
        ]
        for law, lhs, rhs in pairs:
            checks += 1
            try:
                tl, tr = D.typecheck(lhs, world.sig), D.typecheck(rhs, world.sig)
            except D.DslError as exc:
                res.failures.append(f"seed {s} {law}: typecheck failed: {exc}\n  {D.to_source(lhs)}")
                continue
            if (tl.input, tl.output) != (tr.input, tr.output):
                res.failures.append(f"seed {s} {law}: types differ {tl} vs {tr}")
                continue
            gl, gr = _sem(world, lhs), _sem(world, rhs)
            if not G.extensionally_equal(gl, gr):
                res.failures.append(f"seed {s} {law}: semantics differ\n  lhs {D.to_source(lhs)}\n"
                                    f"  rhs {D.to_source(rhs)}\n  {gl.table.tolist()} vs {gr.table.tolist()}")
            cl, cr = _cost(world, lhs), _cost(world, rhs)
            if cl != cr:
                res.failures.append(f"seed {s} {law}: complexity {cl!r} != {cr!r}")
        for op, node, parts in (("seq", D.Seq(a, b), (a, b)), ("par", D.Par(a, e), (a, e))):
            checks += 1
            total, split = _cost(world, node), math.fsum(_cost(world, p) for p in parts)
            if not math.isclose(total, split, rel_tol=1e-12, abs_tol=1e-15):
                res.failures.append(f"seed {s}: complexity not additive over {op}: {total!r} vs {split!r}")
    res.stats["checks"] = checks
    res.seconds = time.perf_counter() - t0
    return res


def _typ(world, node) -> tuple:
    return D.typecheck(node, world.sig).output


# --------------------------------------------------------------------------- learning suites

def synthetic_digits(n: int, rng: np.random.Generator, shape=(28, 28)) -> np.ndarray:
    """Sparse random byte images (strokes on a black background)."""
    h, w = shape
    out = np.zeros((n, h, w), dtype=np.uint8)
    for i in range(n):
        for _ in range(int(rng.integers(2, 5))):
            r, c = rng.integers(2, h - 2), rng.integers(2, w - 2)
            dr, dc = rng.integers(-1, 2, size=2)
            for t in range(int(rng.integers(4, 10))):
                out[i, (r + t * dr) % h, (c + t * dc) % w] = rng.integers(64, 256)
    return out


def _image_source(n: int, rng: np.random.Generator, data=None):
    if data is not None:
        raw, labels = data
        idx = rng.choice(len(raw), size=n, replace=False)
        return raw[idx], labels[idx]
    return synthetic_digits(n, rng), rng.integers(10, size=n)


def suite_gradient_check(instances: int = 20, seed: int = 0, tol: float = 1e-4, data=None,
                         architectures=("geo1", "geo2", "mlp", "cnn")) -> SuiteResult:
    """Central differences (step 1e-4, float64) vs backprop on fresh parameters and batches."""
    from .models import CnnModel, Geo1Model, Geo2Model, MlpModel, gradient_check
    from .patterns import sample_patterns
    res = SuiteResult("gradient-check", instances * len(architectures))
    t0 = time.perf_counter()
    for arch in architectures:
        worst = 0.0
        for i in range(instances):
            rng = np.random.default_rng([seed, i, len(arch)])
            imgs, labels = _image_source(3, rng, data)
            if arch == "geo1":
                m = Geo1Model(sample_patterns(imgs, 8, seed=i), seed=i, dtype=np.float64)
            elif arch == "geo2":
                m = Geo2Model(sample_patterns(imgs, 6, seed=i), seed=i, dtype=np.float64)
            elif arch == "mlp":
                m = MlpModel([imgs[0].size, int(rng.integers(3, 9)), 10], seed=i, dtype=np.float64)
            else:
                m = CnnModel(seed=i, dtype=np.float64)
                imgs, labels = imgs[:2], labels[:2]
            err = gradient_check(m, m.prepare(imgs), labels, rng, n_coords=6 if arch == "cnn" else 12)
            worst = max(worst, err)
            if not err <= tol:
                res.failures.append(f"{arch} draw {i} (seed {seed}): relative error {err:.3e} > {tol:g}")
        res.stats[f"{arch}_max_rel_err"] = worst
    res.seconds = time.perf_counter() - t0
    return res


def suite_invariance(instances: int = 50, seed: int = 0, tol: float = 1e-6, data=None, model=None,
                     patterns: int = 20) -> SuiteResult:
    """GEO1 scores and predictions under every torus shift of each image."""
    from .models import Geo1Model
    from .patterns import sample_patterns
    res = SuiteResult("invariance", instances)
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    imgs, _ = _image_source(instances, rng, data)
    if model is None:
        model = Geo1Model(sample_patterns(imgs, patterns, seed=seed), seed=seed)
    h, w = imgs.shape[1:]
    worst = 0.0
    for j, img in enumerate(imgs):
        shifted = np.stack([np.roll(img, (a, b), axis=(0, 1)) for a in range(h) for b in range(w)])
        scores = model.scores_images(shifted)
        base = scores[0]
        dev = float(np.abs(scores - base).max())
        worst = max(worst, dev)
        flips = np.nonzero(scores.argmax(1) != base.argmax())[0]
        if dev > tol or len(flips):
            res.failures.append(f"image {j}: max score deviation {dev:.3e}, prediction changes at shifts "
                                f"{[divmod(int(s), w) for s in flips[:5]]}")
    res.stats["max_score_dev"] = worst
    res.stats["shifts"] = h * w
    res.seconds = time.perf_counter() - t0
    return res


SUITES = {
    "hemi-metric": suite_hemi_metric,
    "monotonicity": suite_monotonicity,
    "lower-bound": suite_lower_bound,
    "functor-law": suite_functor_laws,
    "gradient-check": suite_gradient_check,
    "invariance": suite_invariance,
}

DEFAULT_INSTANCES = {"hemi-metric": 200, "monotonicity": 100, "lower-bound": 100, "functor-law": 100,
                     "gradient-check": 20, "invariance": 50}


def run_suite(name: str, instances: int | None = None, seed: int = 0, **kw) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](instances or DEFAULT_INSTANCES[name], seed, **kw)

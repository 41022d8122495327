"""Perception spaces: pseudo-metric carriers with an isometric finite-group action.

Finite carriers are handled extensionally (element indices ``0..n-1`` with a
precomputed distance matrix); image carriers are intensional and every check on
them is probe-based.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Sequence

import numpy as np

INF = math.inf
TOL = 1e-9


class StructuralError(ValueError):
    """Malformed tables (shapes, index ranges) detected before any axiom check."""


class MetricAxiomError(ValueError):
    pass


class ProbeBound(float):
    """A distance obtained as a max over a finite probe set: a lower bound of the true sup."""

    is_lower_bound = True

    def __repr__(self):
        return f"ProbeBound({float(self)!r})"


def check_metric_value(v: float) -> float:
    v = float(v)
    if math.isnan(v) or v < 0:
        raise ValueError(f"invalid metric value {v!r}")
    return v


# --------------------------------------------------------------------------- groups

class FiniteGroup:
    """A finite group given by its composition table, ``compose[a, b] = a ∘ b``."""

    def __init__(self, compose, identity: int = 0, inverse=None, name: str = ""):
        try:
            table = np.asarray(compose)
        except ValueError:
            raise StructuralError("composition table rows have different lengths") from None
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] < 1:
            raise StructuralError(f"composition table must be square and nonempty, got shape {table.shape}")
        n = table.shape[0]
        if not np.issubdtype(table.dtype, np.integer):
            if not np.all(np.mod(table, 1) == 0):
                raise StructuralError("composition table entries must be integers")
        table = table.astype(np.int64)
        if table.min() < 0 or table.max() >= n:
            raise StructuralError("composition table entry out of range")
        if not 0 <= identity < n:
            raise StructuralError(f"identity {identity} out of range")
        if inverse is None:
            inverse = np.full(n, -1, dtype=np.int64)
            for g in range(n):
                hits = np.nonzero(table[g] == identity)[0]
                if len(hits):
                    inverse[g] = hits[0]
            if (inverse < 0).any():
                raise StructuralError("some element has no right inverse in the table")
        inverse = np.asarray(inverse, dtype=np.int64)
        if inverse.shape != (n,) or inverse.min() < 0 or inverse.max() >= n:
            raise StructuralError("inverse table malformed")
        self.compose = table
        self.compose.flags.writeable = False
        self.identity = int(identity)
        self.inverse = inverse
        self.inverse.flags.writeable = False
        self.name = name

    @property
    def order(self) -> int:
        return self.compose.shape[0]

    def mul(self, a: int, b: int) -> int:
        return int(self.compose[a, b])

    def __repr__(self):
        return f"FiniteGroup({self.name or '?'}, order={self.order})"

    def same_as(self, other: "FiniteGroup") -> bool:
        return (self is other or (self.order == other.order and self.identity == other.identity
                                  and np.array_equal(self.compose, other.compose)))

    @classmethod
    def trivial(cls) -> "FiniteGroup":
        return cls([[0]], 0, name="1")

    @classmethod
    def cyclic(cls, n: int) -> "FiniteGroup":
        a = np.arange(n)
        return cls((a[:, None] + a[None, :]) % n, 0, (-a) % n, name=f"Z{n}")

    @classmethod
    def direct_product(cls, *groups: "FiniteGroup") -> "FiniteGroup":
        """Componentwise product; element index is mixed-radix over the factors (last fastest)."""
        if not groups:
            return cls.trivial()
        if len(groups) == 1:
            return groups[0]
        orders = [g.order for g in groups]
        total = int(np.prod(orders))
        digits = np.array(np.unravel_index(np.arange(total), orders))  # (k, total)
        comp_digits = [grp.compose[digits[i][:, None], digits[i][None, :]] for i, grp in enumerate(groups)]
        compose = np.ravel_multi_index(comp_digits, orders)
        inverse = np.ravel_multi_index([grp.inverse[digits[i]] for i, grp in enumerate(groups)], orders)
        identity = int(np.ravel_multi_index([g.identity for g in groups], orders))
        return cls(compose, identity, inverse, name="x".join(g.name or "?" for g in groups))

    def law_violations(self, budget: int, rng: np.random.Generator, max_witnesses: int = 10):
        """Return (violations, exhaustive) for associativity, identity and inverse laws."""
        n = self.order
        c = self.compose
        out = []
        e = self.identity
        bad = np.nonzero((c[e, :] != np.arange(n)) | (c[:, e] != np.arange(n)))[0]
        out += [Violation("group-identity", (int(g),)) for g in bad[:max_witnesses]]
        bad = np.nonzero(c[np.arange(n), self.inverse] != e)[0]
        out += [Violation("group-inverse", (int(g),)) for g in bad[:max_witnesses]]
        exhaustive = n ** 3 <= budget
        if exhaustive:
            lhs = c[c, :]                      # lhs[a, b, x] = (a∘b)∘x
            rhs = c[:, c]                      # rhs[a, b, x] = a∘(b∘x)
            bad = np.argwhere(lhs != rhs)
        else:
            k = max(1, budget)
            t = rng.integers(0, n, size=(k, 3))
            mask = c[c[t[:, 0], t[:, 1]], t[:, 2]] != c[t[:, 0], c[t[:, 1], t[:, 2]]]
            bad = np.unique(t[mask], axis=0)
        out += [Violation("group-associativity", tuple(int(v) for v in w)) for w in bad[:max_witnesses]]
        return out, exhaustive


# --------------------------------------------------------------------------- metrics

@dataclass(frozen=True)
class PseudoMetric:
    """Distance on a carrier.

    ``kind`` is one of ``discrete``, ``l1``, ``linf`` or ``table``.  For
    ``table`` the matrix is indexed by element ids of a finite carrier.
    """

    kind: str
    table: Any = None

    def __post_init__(self):
        if self.kind not in ("discrete", "l1", "linf", "table"):
            raise ValueError(f"unknown metric kind {self.kind!r}")

    @classmethod
    def discrete(cls):
        return cls("discrete")

    @classmethod
    def l1(cls):
        return cls("l1")

    @classmethod
    def linf(cls):
        return cls("linf")

    @classmethod
    def explicit(cls, matrix, check: bool = True) -> "PseudoMetric":
        m = np.array(matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StructuralError(f"metric table must be square, got shape {m.shape}")
        if np.isnan(m).any() or (m < 0).any():
            raise StructuralError("metric table entries must be non-negative numbers")
        m.flags.writeable = False
        metric = cls("table", m)
        if check:
            bad = metric_axiom_violations(m, max_witnesses=1)
            if bad:
                raise MetricAxiomError(f"explicit metric violates {bad[0].axiom} at {bad[0].witness}")
        return metric

    def __call__(self, a, b) -> float:
        """Distance between two element *values* (not usable for ``table``)."""
        if self.kind == "discrete":
            return 0.0 if _values_equal(a, b) else 1.0
        if self.kind == "table":
            return float(self.table[a, b])
        diff = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
        if self.kind == "l1":
            return float(diff.sum())
        return float(diff.max()) if diff.size else 0.0

    def __eq__(self, other):
        if not isinstance(other, PseudoMetric) or other.kind != self.kind:
            return False
        if self.kind != "table":
            return True
        return np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash(self.kind)


def _values_equal(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def metric_axiom_violations(d: np.ndarray, max_witnesses: int = 10, tol: float = TOL):
    """Exhaustive (R), (S), (T) check of a distance matrix."""
    out = []
    n = d.shape[0]
    diag = np.nonzero(np.abs(np.diag(d)) > tol)[0]
    out += [Violation("metric-reflexivity", (int(i),)) for i in diag[:max_witnesses]]
    with np.errstate(invalid="ignore"):
        asym = np.argwhere(~((d == d.T) | (np.abs(d - d.T) <= tol)))
    out += [Violation("metric-symmetry", tuple(map(int, w))) for w in asym[:max_witnesses]]
    found = 0
    for j in range(n):
        # d[i,k] <= d[i,j] + d[j,k]
        with np.errstate(invalid="ignore"):
            rhs = d[:, j][:, None] + d[j, :][None, :]
            bad = np.argwhere(d > rhs + tol)
        for i, k in bad:
            if found >= max_witnesses:
                break
            out.append(Violation("metric-triangle", (int(i), j, int(k))))
            found += 1
    return out


# --------------------------------------------------------------------------- carriers & actions

@dataclass(frozen=True)
class FiniteCarrier:
    """Extensional carrier; element ``i`` has value ``elements[i]``."""

    elements: tuple

    def __post_init__(self):
        if len(self.elements) < 1:
            raise StructuralError("finite carrier needs at least one element")

    @property
    def size(self) -> int:
        return len(self.elements)

    def contains(self, x) -> bool:
        return isinstance(x, (int, np.integer)) and 0 <= x < self.size


@dataclass(frozen=True)
class ArrayCarrier:
    """Intensional carrier of real arrays of a fixed shape with entries in ``[low, high]``."""

    shape: tuple
    low: float = 0.0
    high: float = 1.0

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return x.shape == tuple(self.shape) and bool(np.all((x >= self.low) & (x <= self.high)))

    def random(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=(n, *self.shape))


def image_carrier(height: int, width: int) -> ArrayCarrier:
    return ArrayCarrier((height, width))


class PermutationAction:
    """Action of a finite group on a finite carrier by an ``order × n`` table."""

    kind = "permutation"

    def __init__(self, table):
        try:
            t = np.asarray(table)
        except ValueError:
            raise StructuralError("action table rows have different lengths") from None
        if t.ndim != 2:
            raise StructuralError("action table must be 2-D (group order × carrier size)")
        self.table = t.astype(np.int64)
        self.table.flags.writeable = False

    def act(self, g: int, x: int) -> int:
        return int(self.table[g, x])

    @classmethod
    def trivial(cls, order: int, n: int) -> "PermutationAction":
        return cls(np.tile(np.arange(n), (order, 1)))


class TorusTranslation:
    """``Z_h × Z_w`` acting on arrays by cyclic shifts of the last two axes.

    Group element ``g`` encodes the shift ``(g // w, g % w)``.
    """

    kind = "torus"

    def __init__(self, height: int, width: int):
        self.height, self.width = height, width

    def shift_of(self, g: int) -> tuple[int, int]:
        return divmod(int(g), self.width)

    def element_of(self, a: int, b: int) -> int:
        return (a % self.height) * self.width + (b % self.width)

    def act(self, g: int, x):
        a, b = self.shift_of(g)
        return np.roll(x, (a, b), axis=(-2, -1))

    def group(self) -> FiniteGroup:
        return FiniteGroup.direct_product(FiniteGroup.cyclic(self.height), FiniteGroup.cyclic(self.width))


class TrivialArrayAction:
    """The only action of the trivial group."""

    kind = "trivial"

    def act(self, g: int, x):
        return x


# --------------------------------------------------------------------------- spaces

class PerceptionSpace:
    """A carrier with a pseudo-metric and an (assumed isometric) group action.

    Treat instances as immutable.  ``factors`` records the atomic spaces of a
    (strict, flattened) tensor product; atomic spaces have ``factors == (self,)``
    and the unit space has no factors.
    """

    def __init__(self, id: str, carrier, metric: PseudoMetric, group: FiniteGroup | None = None,
                 action=None, factors: tuple | None = None):
        self.id = id
        self.carrier = carrier
        self.metric = metric
        self.group = group if group is not None else FiniteGroup.trivial()
        if action is None:
            if isinstance(carrier, FiniteCarrier):
                action = PermutationAction.trivial(self.group.order, carrier.size)
            elif self.group.order == 1:
                action = TrivialArrayAction()
            else:
                raise StructuralError("a non-trivial group needs an explicit action")
        self.action = action
        self.factors = (self,) if factors is None else tuple(factors)
        self._check_structure()

    def _check_structure(self):
        if self.is_finite:
            t = getattr(self.action, "table", None)
            if t is None:
                raise StructuralError("finite carriers need a permutation-table action")
            if t.shape != (self.group.order, self.size):
                raise StructuralError(
                    f"action table shape {t.shape} != (group order {self.group.order}, carrier size {self.size})")
            if t.min() < 0 or t.max() >= self.size:
                raise StructuralError("action table entry out of range")
            if self.metric.kind == "table" and self.metric.table.shape != (self.size, self.size):
                raise StructuralError("metric table size does not match the carrier")
        else:
            if self.metric.kind == "table":
                raise StructuralError("explicit metric tables need a finite carrier")
            if isinstance(self.action, TorusTranslation):
                if self.group.order != self.action.height * self.action.width:
                    raise StructuralError("torus group order mismatch")

    def __repr__(self):
        return f"PerceptionSpace({self.id!r})"

    @property
    def is_finite(self) -> bool:
        return isinstance(self.carrier, FiniteCarrier)

    @property
    def size(self) -> int:
        if not self.is_finite:
            raise TypeError(f"space {self.id} has an intensional carrier")
        return self.carrier.size

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        if not self.is_finite:
            raise TypeError(f"space {self.id} has an intensional carrier")
        if self.metric.kind == "table":
            return self.metric.table
        n = self.size
        if self.metric.kind == "discrete":
            m = 1.0 - np.eye(n)
        else:
            vals = self.carrier.elements
            m = np.array([[self.metric(vals[i], vals[j]) for j in range(n)] for i in range(n)])
        m.flags.writeable = False
        return m

    def distance(self, a, b) -> float:
        if self.is_finite:
            return float(self.distance_matrix[a, b])
        return self.metric(a, b)

    def act(self, g: int, x):
        return self.action.act(g, x)

    def elements(self) -> range:
        return range(self.size)


def finite_space(id: str, n_or_elements, metric: PseudoMetric | None = None, group: FiniteGroup | None = None,
                 action_table=None) -> PerceptionSpace:
    elements = tuple(range(n_or_elements)) if isinstance(n_or_elements, int) else tuple(n_or_elements)
    carrier = FiniteCarrier(elements)
    group = group or FiniteGroup.trivial()
    action = PermutationAction(action_table) if action_table is not None else None
    return PerceptionSpace(id, carrier, metric or PseudoMetric.discrete(), group, action)


def image_space(id: str, height: int, width: int, translations: bool = True) -> PerceptionSpace:
    """Grayscale ``height × width`` images under the sup-norm, optionally with torus translations."""
    if translations:
        act = TorusTranslation(height, width)
        return PerceptionSpace(id, image_carrier(height, width), PseudoMetric.linf(), act.group(), act)
    return PerceptionSpace(id, image_carrier(height, width), PseudoMetric.linf())


UNIT = PerceptionSpace("1", FiniteCarrier(((),)), PseudoMetric.discrete(), FiniteGroup.trivial(), factors=())


def unit_space() -> PerceptionSpace:
    return UNIT


_PRODUCT_CACHE: dict = {}


def product_space(a: PerceptionSpace, b: PerceptionSpace) -> PerceptionSpace:
    """Direct product with the max metric and the pointwise action (finite carriers only)."""
    return tensor_spaces([a, b])


def tensor_spaces(spaces: Sequence[PerceptionSpace]) -> PerceptionSpace:
    """Strict n-ary product: factors are flattened and the unit is dropped."""
    factors = tuple(f for s in spaces for f in s.factors)
    if not factors:
        return UNIT
    if len(factors) == 1:
        return factors[0]
    for f in factors:
        if not f.is_finite:
            raise TypeError(f"tensor product over intensional space {f.id!r} is unsupported")
    key = tuple(id(f) for f in factors)
    hit = _PRODUCT_CACHE.get(key)
    if hit is not None and all(x is y for x, y in zip(hit.factors, factors)):
        return hit
    sizes = [f.size for f in factors]
    digits = np.array(np.unravel_index(np.arange(int(np.prod(sizes))), sizes))  # (k, N)
    elements = tuple(tuple(factors[i].carrier.elements[digits[i, j]] for i in range(len(factors)))
                     for j in range(digits.shape[1]))
    dist = np.zeros((digits.shape[1],) * 2)
    for i, f in enumerate(factors):
        dist = np.maximum(dist, f.distance_matrix[digits[i][:, None], digits[i][None, :]])
    group = FiniteGroup.direct_product(*(f.group for f in factors))
    gdigits = np.array(np.unravel_index(np.arange(group.order), [f.group.order for f in factors]))
    act = np.ravel_multi_index(
        [f.action.table[gdigits[i][:, None], digits[i][None, :]] for i, f in enumerate(factors)], sizes)
    space = PerceptionSpace("*".join(f.id for f in factors), FiniteCarrier(elements),
                            PseudoMetric.explicit(dist, check=False), group, PermutationAction(act),
                            factors=factors)
    _PRODUCT_CACHE[key] = space
    return space


def split_index(space: PerceptionSpace, x: int) -> tuple[int, ...]:
    """Component indices of an element of a product space."""
    return tuple(int(v) for v in np.unravel_index(x, [f.size for f in space.factors]))


def join_index(space: PerceptionSpace, parts: Sequence[int]) -> int:
    if not space.factors:
        return 0
    return int(np.ravel_multi_index(tuple(parts), [f.size for f in space.factors]))


# --------------------------------------------------------------------------- validation

@dataclass(frozen=True, order=True)
class Violation:
    axiom: str
    witness: tuple
    detail: str = ""


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    exhaustive: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations

    def axioms(self) -> set:
        return {v.axiom for v in self.violations}

    def witnesses(self, axiom: str) -> list:
        return [v.witness for v in self.violations if v.axiom == axiom]

    def __str__(self):
        head = "valid" if self.ok else f"{len(self.violations)} violation(s)"
        mode = "exhaustive" if self.exhaustive else "sampled"
        lines = [f"{head} ({mode})"]
        lines += [f"  {v.axiom}: {v.witness} {v.detail}".rstrip() for v in self.violations]
        return "\n".join(lines)


def validate_space(space: PerceptionSpace, probe_budget: int = 1_000_000, probes=None,
                   seed: int = 0, max_witnesses: int = 10) -> ValidationReport:
    """Check group laws, action laws, metric axioms and isometry of the action.

    Finite spaces with ``|X|·|G|² <= probe_budget`` are checked exhaustively.
    Intensional spaces are checked on ``probes`` (random arrays if omitted).
    """
    space._check_structure()
    rng = np.random.default_rng(seed)
    grp = space.group
    viol, group_exh = grp.law_violations(probe_budget, rng, max_witnesses)
    if space.is_finite:
        viol += _validate_finite(space, probe_budget, rng, max_witnesses)
        n, order = space.size, grp.order
        exhaustive = group_exh and n * order * order <= probe_budget and n ** 3 <= probe_budget
    else:
        viol += _validate_intensional(space, probe_budget, rng, probes, max_witnesses)
        exhaustive = False
    return ValidationReport(sorted(set(viol)), exhaustive)


def _validate_finite(space, budget, rng, max_w):
    out = []
    A = space.action.table
    D = space.distance_matrix
    n, order, e = space.size, space.group.order, space.group.identity
    C = space.group.compose
    bad = np.nonzero(A[e] != np.arange(n))[0]
    out += [Violation("action-identity", (int(x),)) for x in bad[:max_w]]
    if n * order * order <= budget:
        # (g1∘g2)*x vs g1*(g2*x), all triples
        lhs = A[C]                         # [g1, g2, x]
        rhs = A[:, A][np.arange(order)[:, None], np.arange(order)[None, :]]  # A[g1, A[g2, x]]
        bad = np.argwhere(lhs != rhs)
    else:
        t = np.column_stack([rng.integers(0, order, budget), rng.integers(0, order, budget),
                             rng.integers(0, n, budget)])
        mask = A[C[t[:, 0], t[:, 1]], t[:, 2]] != A[t[:, 0], A[t[:, 1], t[:, 2]]]
        bad = np.unique(t[mask], axis=0)
    out += [Violation("action-compatibility", tuple(map(int, w))) for w in bad[:max_w]]
    if n ** 3 <= budget:
        out += metric_axiom_violations(D, max_w)
    if n * n * order <= budget:
        iso = D[A[:, :, None], A[:, None, :]]           # [g, x1, x2]
        with np.errstate(invalid="ignore"):
            bad = np.argwhere(~((iso == D[None]) | (np.abs(iso - D[None]) <= TOL)))
    else:
        t = np.column_stack([rng.integers(0, order, budget), rng.integers(0, n, budget),
                             rng.integers(0, n, budget)])
        lhs = D[A[t[:, 0], t[:, 1]], A[t[:, 0], t[:, 2]]]
        rhs = D[t[:, 1], t[:, 2]]
        bad = np.unique(t[np.abs(lhs - rhs) > TOL], axis=0)
    out += [Violation("isometry", tuple(map(int, w))) for w in bad[:max_w]]
    return out


def _validate_intensional(space, budget, rng, probes, max_w):
    out = []
    if probes is None:
        probes = space.carrier.random(rng, 8)
    probes = list(probes)
    if not probes:
        raise ValueError("empty probe set")
    order, e = space.group.order, space.group.identity
    for i, x in enumerate(probes):
        if not space.carrier.contains(x):
            out.append(Violation("carrier-range", (i,)))
        if space.distance(space.act(e, x), x) > TOL:
            out.append(Violation("action-identity", (i,)))
    n_samples = max(1, min(budget, 64))
    for _ in range(n_samples):
        g1, g2 = (int(v) for v in rng.integers(0, order, 2))
        i, j = (int(v) for v in rng.integers(0, len(probes), 2))
        x = probes[i]
        if space.distance(space.act(space.group.mul(g1, g2), x), space.act(g1, space.act(g2, x))) > TOL:
            out.append(Violation("action-compatibility", (g1, g2, i)))
        if abs(space.distance(space.act(g1, x), space.act(g1, probes[j])) - space.distance(x, probes[j])) > TOL:
            out.append(Violation("isometry", (g1, i, j)))
    k = len(probes)
    for i, j, l in itertools.islice(itertools.product(range(k), repeat=3), budget):
        dij, djl, dil = space.distance(probes[i], probes[j]), space.distance(probes[j], probes[l]), \
            space.distance(probes[i], probes[l])
        if dil > dij + djl + TOL:
            out.append(Violation("metric-triangle", (i, j, l)))
    # keep at most max_w witnesses per axiom
    by_axiom: dict = {}
    for v in sorted(set(out)):
        by_axiom.setdefault(v.axiom, []).append(v)
    return [v for vs in by_axiom.values() for v in vs[:max_w]]


def induced_group_metric(space: PerceptionSpace, g1: int, g2: int, probes: Iterable | None = None) -> float:
    """``sup_x d(g1*x, g2*x)``: exact on finite carriers, a :class:`ProbeBound` otherwise."""
    order = space.group.order
    if not (0 <= g1 < order and 0 <= g2 < order):
        raise IndexError(f"group element out of range (order {order})")
    if space.is_finite:
        A = space.action.table
        D = space.distance_matrix
        return float(D[A[g1], A[g2]].max())
    if probes is None:
        raise ValueError("intensional carriers need a probe set")
    probes = list(probes)
    if not probes:
        raise ValueError("empty probe set")
    return ProbeBound(max(space.distance(space.act(g1, x), space.act(g2, x)) for x in probes))


def group_distance_matrix(space: PerceptionSpace, probes=None) -> np.ndarray:
    order = space.group.order
    return np.array([[induced_group_metric(space, a, b, probes) for b in range(order)] for a in range(order)])


# --------------------------------------------------------------------------- JSON

def space_from_json(doc: dict) -> PerceptionSpace:
    """Finite space from ``{"id", "elements", "metric", "group", "action"}``."""
    try:
        sid = doc["id"]
        elements = doc["elements"]
    except KeyError as exc:
        raise StructuralError(f"space document missing field {exc}") from None
    elements = tuple(tuple(e) if isinstance(e, list) else e for e in elements)
    m = doc.get("metric", {"kind": "discrete"})
    kind = m.get("kind", "discrete")
    if kind == "table":
        metric = PseudoMetric.explicit(m["table"], check=m.get("check", True))
    else:
        metric = PseudoMetric({"l_inf": "linf", "linfinity": "linf"}.get(kind.lower(), kind.lower()))
    g = doc.get("group")
    group = FiniteGroup(g["compose"], g.get("identity", 0), g.get("inverse"), g.get("name", "")) if g \
        else FiniteGroup.trivial()
    a = doc.get("action")
    table = a["table"] if a else None
    return finite_space(sid, elements, metric, group, table)


def space_to_json(space: PerceptionSpace) -> dict:
    if not space.is_finite:
        raise TypeError("only finite spaces serialize to JSON")
    m = {"kind": space.metric.kind}
    if space.metric.kind == "table":
        m["table"] = space.metric.table.tolist()
    els = [list(e) if isinstance(e, tuple) else e for e in space.carrier.elements]
    return {"id": space.id, "elements": els, "metric": m,
            "group": {"compose": space.group.compose.tolist(), "identity": space.group.identity,
                      "inverse": space.group.inverse.tolist()},
            "action": {"table": space.action.table.tolist()}}

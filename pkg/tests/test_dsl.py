import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geneo_lab import dsl as D
from geneo_lab import geo as G
from geneo_lab.perception import finite_space
from geneo_lab.randomized import _random_word, random_diagram, random_world

HEADER = "sort A; sort B; sort C; sort D;\n" \
         "gen f : A -> B @3; gen g : B -> C @5; gen h : C -> D; gen k : A -> C;\n"


def prog(body: str) -> D.Program:
    return D.parse(HEADER + body)


def typed(body: str) -> D.TypedDiagram:
    p = prog(body)
    return D.typecheck(next(reversed(p.diagrams.values())), p.signature)


# ----------------------------------------------------------------- parse

def test_parse_sequence():
    p = D.parse("sort A; gen f : A -> A @2; diagram d = f ; f;")
    assert p.diagrams["d"] == D.Seq(D.Gen("f"), D.Gen("f"))
    assert p.signature.generators["f"].complexity == 2.0


def test_parse_parallel_structural():
    p = D.parse("sort A; sort B; diagram d = id[A] * swap[A,B];")
    assert p.diagrams["d"] == D.Par(D.Id("A"), D.Swap("A", "B"))


def test_parallel_binds_tighter_than_sequence():
    p = prog("diagram d = f * id[A] ; g * f;")
    assert p.diagrams["d"] == D.Seq(D.Par(D.Gen("f"), D.Id("A")), D.Par(D.Gen("g"), D.Gen("f")))


def test_unknown_identifier_position():
    with pytest.raises(D.UnknownIdentifier) as exc:
        D.parse("sort A; gen f : A -> A;\ndiagram d = f ; g;")
    assert (exc.value.line, exc.value.col) == (2, 17)


@pytest.mark.parametrize("src,err", [
    ("sort A; sort A;", D.DuplicateDeclaration),
    ("sort A; gen f : A -> Q;", D.UnknownIdentifier),
    ("sort A diagram", D.DslSyntaxError),
    ("sort A; $", D.LexError),
    ("sort A; gen f : A -> A; gen f : A -> A;", D.DuplicateDeclaration),
])
def test_parse_errors(src, err):
    with pytest.raises(err) as exc:
        D.parse(src)
    assert exc.value.line >= 1 and exc.value.col >= 1


def test_comments_and_unit_word():
    p = D.parse("# leading comment\nsort A; # trailing\ngen e : 1 -> A @1.5;\ndiagram d = e ; discard[A];")
    t = D.typecheck(p.diagrams["d"], p.signature)
    assert t.input == () and t.output == ()


def test_earlier_diagrams_can_be_referenced():
    p = prog("diagram fg = f ; g; diagram all = fg ; h;")
    t = D.typecheck(p.diagrams["all"], p.signature)
    assert str(t) == "A -> D"


# ----------------------------------------------------------------- typecheck

def test_typecheck_sequence():
    t = typed("diagram d = f ; g;")
    assert (t.input, t.output) == (("A",), ("C",))


def test_typecheck_parallel():
    t = typed("diagram d = f * h;")
    assert (t.input, t.output) == (("A", "C"), ("B", "D"))


def test_typecheck_mismatch_names_both_words():
    p = prog("diagram d = f ; k;")
    with pytest.raises(D.TypeCheckError) as exc:
        D.typecheck(p.diagrams["d"], p.signature)
    assert "B ≠ A" in str(exc.value)


def test_structural_types():
    for body, io in [("diagram d = empty;", ((), ())), ("diagram d = copy[A];", (("A",), ("A", "A"))),
                     ("diagram d = discard[B];", (("B",), ())), ("diagram d = swap[A,B];", (("A", "B"), ("B", "A")))]:
        t = typed(body)
        assert (t.input, t.output) == io


# ----------------------------------------------------------------- semantics

@pytest.fixture
def lookup_world():
    A, B, C = finite_space("A", 3), finite_space("B", 3), finite_space("C", 3)
    sig = D.parse("sort A; sort B; sort C; gen f : A -> B @3; gen g : B -> C @5;").signature
    interp = D.Interpretation({"A": A, "B": B, "C": C},
                              {"f": G.Geo(A, B, table=[1, 2, 0]), "g": G.Geo(B, C, table=[2, 2, 1])})
    return sig, interp


def test_semantics_of_identity(lookup_world):
    sig, I = lookup_world
    geo = D.evaluate_semantics(D.Id("A"), I, sig)
    np.testing.assert_array_equal(G.as_geo(geo).table, [0, 1, 2])


def test_semantics_of_sequence_is_index_chase(lookup_world):
    sig, I = lookup_world
    geo = D.evaluate_semantics(D.Seq(D.Gen("f"), D.Gen("g")), I, sig)
    np.testing.assert_array_equal(geo.table, [2, 1, 2])


def test_copy_is_natural(lookup_world):
    sig, I = lookup_world
    left = D.evaluate_semantics(D.Seq(D.Copy("A"), D.Par(D.Gen("f"), D.Gen("f"))), I, sig)
    right = D.evaluate_semantics(D.Seq(D.Gen("f"), D.Copy("B")), I, sig)
    assert G.extensionally_equal(left, right)


def test_missing_binding(lookup_world):
    sig, I = lookup_world
    sig.add_sort("Z")
    sig.add_gen(D.GenDecl("z", ("A",), ("Z",)))
    with pytest.raises(D.MissingBinding):
        D.evaluate_semantics(D.Gen("z"), I, sig)
    with pytest.raises(D.MissingBinding):
        D.evaluate_semantics(D.Id("Z"), I, sig)


# ----------------------------------------------------------------- complexity

def test_identity_costs_nothing():
    assert D.complexity(D.Id("A")) == 0


def test_sequence_and_parallel_add():
    assert D.complexity(typed("diagram d = f ; g;"), {"f": 3, "g": 5}) == 8
    assert D.complexity(D.Par(D.Gen("f"), D.Gen("g")), {"f": 3, "g": 5}) == 8


def test_defaults_and_overrides():
    p = prog("diagram d = f ; g;")
    assert D.complexity(p.diagrams["d"], None, p.signature) == 8
    assert D.complexity(p.diagrams["d"], {"g": 1}, p.signature) == 4


def test_missing_complexity():
    p = prog("diagram d = f ; g ; h;")
    with pytest.raises(D.MissingComplexity):
        D.complexity(p.diagrams["d"], None, p.signature)


def test_black_box_is_infinite():
    p = prog("diagram d = f ; g ; h;")
    assert math.isinf(D.complexity(p.diagrams["d"], {"h": "inf"}, p.signature))


@pytest.mark.parametrize("spec,params,nonlin", [
    ("geo1:500", 5010, 510), ("geo1:150", 1510, 160), ("geo1:98", 990, 108),
    ("geo2:250", 8101, 511), ("geo2:50", 7901, 111), ("mlp:784-10", 7850, 10),
    ("mlp:784-40-10", 31810, 50), ("mlp:784-5-10", 3985, 15), ("cnn", 228010, 41554),
    ("geo2:250:14x14", 2221, None), ("mlp:196-40-10", 8290, None),
])
def test_builtin_model_diagrams(spec, params, nonlin):
    src, assign, name = D.builtin_model(spec)
    p = D.parse(src)
    d = D.typecheck(p.diagrams[name], p.signature)
    assert D.complexity(d, assign["params"], p.signature) == params
    if nonlin is not None:
        assert D.complexity(d, assign["nonlinearities"], p.signature) == nonlin


# ----------------------------------------------------------------- properties

def _world_and_diagram(seed):
    rng = np.random.default_rng(seed)
    world = random_world(rng)
    word = _random_word(world, rng)
    node, _ = random_diagram(world, word, rng, depth=3, max_len=2)
    return world, node, rng


@given(st.integers(0, 100_000))
def test_print_parse_round_trip(seed):
    world, node, _ = _world_and_diagram(seed)
    back = D.parse_expr(D.to_source(node), world.sig)
    assert back == node


@given(st.integers(0, 100_000))
def test_program_round_trip(seed):
    world, node, _ = _world_and_diagram(seed)
    prog_ = D.Program(world.sig, {"d": node})
    again = D.parse(D.program_source(prog_))
    assert again.diagrams["d"] == node
    assert again.signature.generators == world.sig.generators


@given(st.integers(0, 100_000))
def test_reassociation_preserves_semantics_and_cost(seed):
    world, a, rng = _world_and_diagram(seed)
    wa = D.typecheck(a, world.sig).output
    b, wb = random_diagram(world, wa, rng, depth=1, max_len=2)
    c, _ = random_diagram(world, wb, rng, depth=1, max_len=2)
    left, right = D.Seq(a, D.Seq(b, c)), D.Seq(D.Seq(a, b), c)
    assert D.complexity(left, world.costs, world.sig) == D.complexity(right, world.costs, world.sig)
    assert G.extensionally_equal(D.evaluate_semantics(left, world.interp, world.sig),
                                 D.evaluate_semantics(right, world.interp, world.sig))
    # functoriality: the semantics of a sequence is the composite of the parts
    ab = G.compose(D.evaluate_semantics(b, world.interp, world.sig), D.evaluate_semantics(a, world.interp, world.sig))
    assert G.extensionally_equal(D.evaluate_semantics(D.Seq(a, b), world.interp, world.sig), ab)


@given(st.integers(0, 100_000), st.floats(0.5, 100))
def test_adding_a_costly_branch_increases_complexity(seed, c):
    world, node, _ = _world_and_diagram(seed)
    sig = world.sig
    if "extra" not in sig.generators:
        sig.add_gen(D.GenDecl("extra", ("A",), ("A",), c))
    base = D.complexity(node, world.costs, sig)
    more = D.complexity(D.Par(node, D.Gen("extra")), world.costs, sig)
    assert more > base

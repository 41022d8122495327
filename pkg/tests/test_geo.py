import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geneo_lab import geo as G
from geneo_lab.data import downscale_2x2_max
from geneo_lab.perception import FiniteGroup, PseudoMetric, finite_space, image_space, unit_space
from geneo_lab.randomized import random_equivariant_table, random_space

C2 = FiniteGroup.cyclic(2)


def swap2(name="s2"):
    return finite_space(name, 2, group=C2, action_table=[[0, 1], [1, 0]])


def torus_points(dim: int, n: int = 3):
    """All points of (Z_n)^dim acted on by translation mod n."""
    pts = list(itertools.product(range(n), repeat=dim))
    grp = FiniteGroup.direct_product(*[FiniteGroup.cyclic(n)] * dim)
    index = {p: i for i, p in enumerate(pts)}
    act = [[index[tuple((a + b) % n for a, b in zip(g, p))] for p in pts] for g in pts]
    return finite_space(f"Z{n}^{dim}", pts, group=grp, action_table=act), pts, index


@pytest.fixture(scope="module")
def shadow():
    """Orthogonal projection (x, y, z) -> (x, y) and the embedding at z = 0."""
    X3, p3, i3 = torus_points(3)
    X2, p2, i2 = torus_points(2)
    proj_t = [i2[p[:2]] for p in p3]
    proj = G.Geo(X3, X2, table=proj_t, hom=G.GroupHom(X3.group, X2.group, proj_t), name="proj")
    emb_t = [i3[p + (0,)] for p in p2]
    emb = G.Geo(X2, X3, table=emb_t, hom=G.GroupHom(X2.group, X3.group, emb_t), name="embed")
    return proj, emb


# ----------------------------------------------------------------- equivariance

def test_identity_has_empty_ne():
    rep = G.check_equivariance(G.identity(swap2()))
    assert rep.ok and rep.exhaustive and rep.probe_size == 4


def test_projection_is_equivariant(shadow):
    proj, emb = shadow
    assert G.check_equivariance(proj).n_ne == 0
    assert G.check_equivariance(emb).n_ne == 0
    assert not proj.hom.violations()


def test_constant_map_with_moved_value_breaks_equivariance():
    s = swap2()
    f = G.Geo(s, s, table=[0, 0], hom=G.GroupHom.identity(C2))
    rep = G.check_equivariance(f)
    assert sorted(rep.ne) == [(1, 0), (1, 1)]


def test_exhaustive_check_on_images_is_unsupported():
    sp = image_space("t4", 4, 4)
    with pytest.raises(G.UnsupportedError):
        G.check_equivariance(G.identity(sp))


def test_sampled_check_on_images():
    sp = image_space("t4", 4, 4)
    imgs = np.random.default_rng(0).random((3, 4, 4))
    rep = G.check_equivariance(G.identity(sp), [(g, x) for g in (0, 5, 9) for x in imgs])
    assert rep.ok and rep.probe_size == 9 and not rep.exhaustive


# ----------------------------------------------------------------- non-expansiveness

def test_identity_is_validated():
    g = G.check_nonexpansive(G.identity(swap2()))
    assert isinstance(g, G.Geneo) and isinstance(g.certificate, G.Validated)


def test_downscale_is_nonexpansive_on_sample():
    big, small = image_space("i28", 28, 28, False), image_space("i14", 14, 14, False)
    f = G.Geo(big, small, f=downscale_2x2_max)
    rng = np.random.default_rng(1)
    pairs = [(rng.random((28, 28)), rng.random((28, 28))) for _ in range(50)]
    assert isinstance(G.check_nonexpansive(f, pairs), G.Geneo)


def test_scaling_map_reports_ratio_two():
    dom = finite_space("d", 2, PseudoMetric.explicit([[0, 1], [1, 0]]))
    cod = finite_space("c", 2, PseudoMetric.explicit([[0, 2], [2, 0]]))
    rep = G.check_nonexpansive(G.Geo(dom, cod, table=[0, 1]))
    assert isinstance(rep, G.NonExpansiveReport)
    assert {(i, j): r for i, j, r in rep.data_violations} == {(0, 1): 2.0, (1, 0): 2.0}


def test_group_side_violation_is_reported():
    # on a one-point space the swap is at distance 0 from id; its image is at distance 1
    fixed = finite_space("pt", 1, group=C2, action_table=[[0], [0]])
    s = swap2()
    f = G.Geo(fixed, s, table=[0], hom=G.GroupHom.identity(C2))
    rep = G.check_nonexpansive(f)
    assert isinstance(rep, G.NonExpansiveReport) and rep.group_violations


# ----------------------------------------------------------------- compose

def test_compose_with_identity():
    s = finite_space("s3", 3)
    f = G.Geo(s, s, table=[2, 0, 0])
    assert G.extensionally_equal(G.compose(G.identity(s), f), f)
    assert G.extensionally_equal(G.compose(f, G.identity(s)), f)


def test_projection_after_embedding_is_identity(shadow):
    proj, emb = shadow
    pe = G.compose(proj, emb)
    assert G.extensionally_equal(pe, G.identity(emb.dom))
    for p in [(0, 0), (1, 2), (2, 1), (2, 2), (0, 1)]:
        i = emb.dom.carrier.elements.index(p)
        assert emb.dom.carrier.elements[pe(i)] == p


def test_compose_lookup_tables_by_index_chasing():
    a, b, c = finite_space("a", 3), finite_space("b", 3), finite_space("c", 3)
    f = G.Geo(a, b, table=[1, 2, 0])
    g = G.Geo(b, c, table=[2, 2, 1])
    # x=0 -> 1 -> 2; x=1 -> 2 -> 1; x=2 -> 0 -> 2
    np.testing.assert_array_equal(G.compose(g, f).table, [2, 1, 2])


def test_compose_type_mismatch():
    a, b = finite_space("a", 2), finite_space("b", 2)
    with pytest.raises(G.GeoTypeError):
        G.compose(G.identity(a), G.identity(b))


# ----------------------------------------------------------------- structural maps

def test_discard_then_constant_is_constant():
    s = finite_space("s3", 3)
    pick = G.Geo(unit_space(), s, table=[2])
    np.testing.assert_array_equal(G.compose(pick, G.discard(s)).table, [2, 2, 2])


def test_copy_is_nonexpansive_on_discrete():
    s = finite_space("s2", 2)
    c = G.copy(s)
    assert isinstance(G.check_nonexpansive(c), G.Geneo)
    assert [c.cod.carrier.elements[c(x)] for x in range(2)] == [(0, 0), (1, 1)]


def test_swap_of_two_and_three_points():
    a, b = finite_space("a", 2), finite_space("b", 3)
    sw = G.swap(a, b)
    assert sw.dom.size == sw.cod.size == 6
    assert sorted(sw.geo.table.tolist()) == list(range(6))
    for x in range(6):
        u, v = sw.dom.carrier.elements[x]
        assert sw.cod.carrier.elements[sw(x)] == (v, u)


def test_structural_maps_are_validated_geneos():
    s = swap2()
    for g in (G.identity(s), G.copy(s), G.discard(s), G.swap(s, s)):
        assert isinstance(g.certificate, G.Validated)
        assert G.check_equivariance(g).ok
        assert isinstance(G.check_nonexpansive(g), G.Geneo)


def test_tensor_over_images_unsupported():
    sp = image_space("t4", 4, 4)
    with pytest.raises((G.UnsupportedError, TypeError)):
        G.tensor(G.identity(sp), G.identity(finite_space("a", 2)))


def test_geo_json_round_trip():
    s = swap2()
    f = G.Geo(s, s, table=[1, 0], hom=G.GroupHom.identity(C2))
    back = G.geo_from_json(G.geo_to_json(f), {s.id: s})
    assert G.extensionally_equal(back, f) and back.hom.kind == "identity"


# ----------------------------------------------------------------- properties

@given(st.integers(0, 100_000), st.lists(st.integers(1, 5), min_size=4, max_size=4))
def test_compose_is_associative(seed, sizes):
    rng = np.random.default_rng(seed)
    sp = [finite_space(f"s{i}", n) for i, n in enumerate(sizes)]
    a, b, c = (G.Geo(sp[i], sp[i + 1], table=rng.integers(0, sizes[i + 1], sizes[i])) for i in range(3))
    left = G.compose(c, G.compose(b, a))
    right = G.compose(G.compose(c, b), a)
    assert G.extensionally_equal(left, right)


def _equivariant_geo(rng, dom, cod):
    """An equivariant lookup Geo between two spaces under the same cyclic group (hom = identity)."""
    return G.Geo(dom, cod, table=random_equivariant_table(dom, cod, rng), hom=G.GroupHom.identity(dom.group))


@given(st.integers(0, 100_000), st.integers(1, 4))
def test_composites_and_tensors_of_geos_are_geos(seed, k):
    rng = np.random.default_rng(seed)
    X = random_space("X", int(rng.integers(1, 5)), k, rng)
    Y, Z = (random_space(n, int(rng.integers(1, 5)), k, rng, fixed_point=True) for n in "YZ")
    f, g = _equivariant_geo(rng, X, Y), _equivariant_geo(rng, Y, Z)
    assert G.check_equivariance(f).ok and G.check_equivariance(g).ok
    assert G.check_equivariance(G.compose(g, f)).ok
    assert G.check_equivariance(G.tensor(f, g)).ok


@given(st.integers(0, 100_000))
def test_composite_of_geneos_is_nonexpansive(seed):
    rng = np.random.default_rng(seed)
    X, Y, Z = (random_space(n, int(rng.integers(1, 6)), 1, rng) for n in "XYZ")
    found = []
    for dom, cod in ((X, Y), (Y, Z)):
        for _ in range(50):
            g = G.check_nonexpansive(G.Geo(dom, cod, table=rng.integers(0, cod.size, dom.size)))
            if isinstance(g, G.Geneo):
                found.append(g)
                break
        else:
            found.append(G.check_nonexpansive(G.Geo(dom, cod, table=np.zeros(dom.size, int))))
    f, g = found
    assert isinstance(G.check_nonexpansive(G.compose(g, f)), G.Geneo)

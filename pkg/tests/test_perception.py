import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geneo_lab.perception import (FiniteGroup, MetricAxiomError, ProbeBound, PseudoMetric, StructuralError,
                                  TorusTranslation, finite_space, group_distance_matrix, image_space,
                                  induced_group_metric, product_space, space_from_json, space_to_json,
                                  unit_space, validate_space)
from geneo_lab.randomized import random_space

C2 = FiniteGroup.cyclic(2)


def swap_space(n=3, metric=None):
    table = [list(range(n)), [1, 0] + list(range(2, n))]
    return finite_space(f"c2on{n}", n, metric, C2, table)


# ----------------------------------------------------------------- validate_space

def test_trivial_group_two_point_discrete_is_valid_exhaustively():
    rep = validate_space(finite_space("two", 2))
    assert rep.ok and rep.exhaustive


def test_torus_on_4x4_images_is_valid():
    rep = validate_space(image_space("t4", 4, 4), probe_budget=4000)
    assert rep.ok
    assert not rep.exhaustive


def test_swap_on_table_metric_reports_isometry_witness():
    # d(0,1)=1, d(0,2)=2, d(1,2)=5; swap sends (0,2) to (1,2) so 2 -> 5
    m = PseudoMetric.explicit([[0, 1, 2], [1, 0, 5], [2, 5, 0]], check=False)
    rep = validate_space(swap_space(3, m))
    assert (1, 0, 2) in rep.witnesses("isometry")
    # the same table also breaks the triangle inequality (5 > 1 + 2)
    assert "metric-triangle" in rep.axioms()


def test_eager_metric_check_rejects_triangle_violation():
    with pytest.raises(MetricAxiomError):
        PseudoMetric.explicit([[0, 1, 2], [1, 0, 5], [2, 5, 0]])


@pytest.mark.parametrize("compose", [[[0, 1], [1]], [[0, 1, 2], [1, 2, 0]], [[0, 3], [3, 0]]])
def test_malformed_composition_tables_are_structural_errors(compose):
    with pytest.raises(StructuralError):
        FiniteGroup(compose)


def test_action_index_out_of_range_is_structural():
    with pytest.raises(StructuralError):
        finite_space("x", 2, group=C2, action_table=[[0, 1], [1, 7]])


def test_non_associative_table_is_reported():
    # (1∘2)∘2 = 0 but 1∘(2∘2) = 1
    g = FiniteGroup([[0, 1, 2], [1, 0, 2], [2, 2, 0]])
    assert "group-associativity" in validate_space(finite_space("x", 2, group=g)).axioms()


# ----------------------------------------------------------------- induced_group_metric

def test_group_metric_of_equal_elements_is_zero():
    sp = swap_space(2)
    assert induced_group_metric(sp, 1, 1) == 0.0


def test_swap_vs_identity_on_two_point_discrete():
    assert induced_group_metric(swap_space(2), 1, 0) == 1.0


def test_probe_bound_on_constant_image():
    sp = image_space("t4", 4, 4)
    g = sp.action.element_of(1, 0)
    v = induced_group_metric(sp, g, 0, [np.full((4, 4), 0.3)])
    assert isinstance(v, ProbeBound) and v == 0.0


def test_intensional_group_metric_needs_probes():
    sp = image_space("t4", 4, 4)
    with pytest.raises(ValueError):
        induced_group_metric(sp, 1, 0)
    with pytest.raises(ValueError):
        induced_group_metric(sp, 1, 0, [])


# ----------------------------------------------------------------- product_space

def test_unit_is_tensor_unit():
    s = finite_space("s", 3, PseudoMetric.explicit([[0, 1, 2], [1, 0, 1], [2, 1, 0]]))
    p = product_space(unit_space(), s)
    assert p.size == s.size
    np.testing.assert_array_equal(p.distance_matrix, s.distance_matrix)


def test_product_of_discrete_pairs():
    p = product_space(finite_space("a", 2), finite_space("b", 2))
    assert p.size == 4
    assert p.distance_matrix[p.carrier.elements.index((0, 0)), p.carrier.elements.index((1, 1))] == 1.0


def test_product_takes_max_of_table_metrics():
    a = finite_space("a3", 2, PseudoMetric.explicit([[0, 3], [3, 0]]))
    b = finite_space("b5", 2, PseudoMetric.explicit([[0, 5], [5, 0]]))
    p = product_space(a, b)
    els = p.carrier.elements
    assert p.distance_matrix[els.index((0, 0)), els.index((1, 1))] == 5.0
    assert validate_space(p).ok


def test_product_with_intensional_is_unsupported():
    with pytest.raises(TypeError):
        product_space(image_space("t4", 4, 4), finite_space("a", 2))


# ----------------------------------------------------------------- JSON

def test_space_json_round_trip():
    sp = swap_space(3, PseudoMetric.explicit([[0, 1, 2], [1, 0, 2], [2, 2, 0]]))
    back = space_from_json(space_to_json(sp))
    assert back.id == sp.id and back.size == 3
    np.testing.assert_array_equal(back.distance_matrix, sp.distance_matrix)
    np.testing.assert_array_equal(back.action.table, sp.action.table)
    assert back.group.same_as(sp.group)


# ----------------------------------------------------------------- properties

@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 4))
def test_random_invariant_spaces_validate(seed, n, k):
    sp = random_space("r", n, k, np.random.default_rng(seed))
    assert validate_space(sp).ok


@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 4))
def test_induced_group_metric_is_a_pseudometric(seed, n, k):
    sp = random_space("r", n, k, np.random.default_rng(seed))
    D = group_distance_matrix(sp)
    assert np.all(np.diag(D) == 0)
    np.testing.assert_array_equal(D, D.T)
    assert np.all(D[:, None, :] <= D[:, :, None] + D[None, :, :] + 1e-9)


@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 3), st.integers(1, 4), st.integers(1, 3))
def test_product_sizes_multiply(seed, na, ka, nb, kb):
    rng = np.random.default_rng(seed)
    a, b = random_space("a", na, ka, rng), random_space("b", nb, kb, rng)
    p = product_space(a, b)
    assert p.size == na * nb
    assert p.group.order == ka * kb
    assert validate_space(p).ok


@pytest.mark.parametrize("h,w", [(1, 1), (2, 3), (5, 4), (8, 8)])
def test_torus_action_is_a_group_action_exhaustively(h, w):
    act = TorusTranslation(h, w)
    grp = act.group()
    img = np.random.default_rng(h * 10 + w).random((h, w))
    shifted = [act.act(g, img) for g in range(grp.order)]
    for g1, g2 in itertools.product(range(grp.order), repeat=2):
        np.testing.assert_array_equal(act.act(g1, shifted[g2]), shifted[grp.mul(g1, g2)])

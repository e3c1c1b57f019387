import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import cKDTree

from quasisharp import config
from quasisharp.constructions import ConstructionParams, theorem1_fields, theorem2_surface
from quasisharp.mesh import ScalarField, build_marked_icosphere, random_smooth_field
from quasisharp.poisson import poisson_l1
from quasisharp.quasistate import (
    MedianNotFound,
    b_function,
    median_direct,
    median_state,
    nonlinearity_defect,
    quasi_integral,
    three_point_state,
)


def const(mesh, c):
    return ScalarField(mesh, np.full(mesh.n_vertices, float(c)))


def cyclic_rotation_perm(mesh):
    """Vertex permutation induced by (x, y, z) -> (z, x, y)."""
    rotated = mesh.vertices[:, [2, 0, 1]]
    dist, idx = cKDTree(mesh.vertices).query(rotated)
    assert dist.max() < 1e-12
    return idx


@pytest.fixture(scope="module")
def states(sphere3):
    return {"three-point": three_point_state(sphere3), "median": median_state(sphere3)}


def test_normalization(states, sphere3):
    for z in states.values():
        assert z(const(sphere3, 1.0)) == 1.0
        assert z(const(sphere3, -2.5)) == -2.5


def test_constant_distribution_function(states, sphere3):
    b = b_function(states["median"], const(sphere3, 0.3))
    assert b(0.3) == 0 and b(0.3 + 1e-9) == 1
    assert b.integral() == 0.0


def test_theorem1_distribution_and_values():
    mesh, F, G = theorem1_fields(ConstructionParams(level=3))
    z = three_point_state(mesh)
    b = b_function(z, F)
    assert np.all(b.values[b.thresholds > 0] == 1)
    assert b(1e-12) == 1
    assert (z(F), z(G), z(F + G)) == (0.0, 0.0, 1.0)
    assert nonlinearity_defect(z, F, G) == 1.0
    bfg = b_function(z, F + G)
    assert np.all(bfg.values == 0)


def test_median_of_height_is_equator(sphere4):
    F = ScalarField(sphere4, sphere4.vertices[:, 2])
    z = median_state(sphere4)
    assert abs(z(F)) <= 0.02
    assert abs(median_direct(sphere4, F)) <= 0.02
    b = b_function(z, F)
    jump = b.levels[np.argmax(b.values)] if b.values.any() else b.levels[-1]
    assert abs(jump) <= 0.02


def test_height_median_against_area_scan(sphere4):
    # direct scan: first vertex level where the 1/3-convention area of {z <= t} reaches 1/2
    zv = sphere4.vertices[:, 2]
    levels = np.unique(zv)
    tri = sphere4.triangles
    areas = [np.dot(sphere4.weights, (zv <= t)[tri].sum(axis=1)) / 3.0 for t in levels]
    scan = levels[np.searchsorted(areas, 0.5)]
    assert abs(scan) <= 0.02
    assert abs(median_state(sphere4)(ScalarField(sphere4, zv)) - scan) <= 0.02


def test_median_direct_constant(sphere2):
    assert median_direct(sphere2, const(sphere2, 4.0)) == 4.0


def test_median_direct_failure_path(sphere3):
    F = random_smooth_field(sphere3, 1)
    with pytest.raises(MedianNotFound, match="field too coarse for median at this refinement"):
        median_direct(sphere3, F, tol=-1.0)


@pytest.mark.parametrize("eps", [0.2, 0.1])
def test_theorem2_values_coarse(eps):
    mesh, F, G = theorem2_surface(ConstructionParams(level=3, epsilon=eps))
    z = median_state(mesh)
    assert abs(z(F) - eps) <= 0.01
    assert abs(z(G) - eps) <= 0.01
    assert abs(z(F + G) - (1 - eps)) <= 0.01
    assert abs(median_direct(mesh, F) - eps) <= 0.01
    assert nonlinearity_defect(z, F, G) == pytest.approx(1 - 3 * eps, abs=0.03)


def test_constant_partner_has_no_defect(states, sphere3):
    F = random_smooth_field(sphere3, 2)
    for z in states.values():
        assert nonlinearity_defect(z, F, const(sphere3, 0.7)) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=25)
@given(seed=st.integers(0, 2**32 - 1))
def test_bisection_matches_integral_formula(sphere2, seed):
    F = random_smooth_field(sphere2, seed)
    for z in (three_point_state(sphere2), median_state(sphere2)):
        b = b_function(z, F)
        assert b.is_monotone()
        via_integral = F.values.max() - b.integral()
        assert quasi_integral(z, F) == pytest.approx(via_integral, abs=1e-12)


@settings(max_examples=25)
@given(seed=st.integers(0, 2**32 - 1))
def test_range_and_monotone(states, sphere3, seed):
    rng = np.random.default_rng(seed)
    F = random_smooth_field(sphere3, rng)
    bump = ScalarField(sphere3, np.abs(random_smooth_field(sphere3, rng).values))
    for z in states.values():
        v = z(F)
        assert F.values.min() <= v <= F.values.max()
        assert v <= z(F + bump)


@settings(max_examples=25)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(0.0, 5.0), c=st.floats(-3.0, 3.0))
def test_affine_on_singly_generated_algebra(states, sphere3, seed, a, c):
    F = random_smooth_field(sphere3, seed)
    for z in states.values():
        lhs = z(F * a + const(sphere3, c))
        assert lhs == pytest.approx(a * z(F) + c, abs=config.AFFINE_TOL)


@settings(max_examples=15)
@given(seed=st.integers(0, 2**32 - 1))
def test_median_oracle_agrees(sphere3, seed):
    F = random_smooth_field(sphere3, seed)
    tol = config.oracle_tolerance(sphere3.max_edge_length)
    assert abs(median_direct(sphere3, F) - median_state(sphere3)(F)) <= tol


@settings(max_examples=10)
@given(seed=st.integers(0, 2**32 - 1))
def test_rotation_invariance(states, sphere3, seed):
    perm = cyclic_rotation_perm(sphere3)
    assert sorted(perm[list(sphere3.markers)]) == sorted(sphere3.markers)
    rng = np.random.default_rng(seed)
    F, G = random_smooth_field(sphere3, rng), random_smooth_field(sphere3, rng)
    FR, GR = ScalarField(sphere3, F.values[perm]), ScalarField(sphere3, G.values[perm])
    for z in states.values():
        assert nonlinearity_defect(z, FR, GR) == nonlinearity_defect(z, F, G)
    assert poisson_l1(FR, GR).l1_norm == poisson_l1(F, G).l1_norm


@settings(max_examples=10)
@given(seed=st.integers(0, 2**32 - 1))
def test_relabeling_invariance(sphere2, seed):
    rng = np.random.default_rng(seed)
    F, G = random_smooth_field(sphere2, rng), random_smooth_field(sphere2, rng)
    perm = rng.permutation(sphere2.n_vertices)
    m2 = sphere2.relabeled(perm)
    F2, G2 = F.permuted(m2, perm), G.permuted(m2, perm)
    for make in (three_point_state, median_state):
        z1, z2 = make(sphere2), make(m2)
        assert (z2(F2), z2(G2), z2(F2 + G2)) == (z1(F), z1(G), z1(F + G))
    assert poisson_l1(F2, G2).l1_norm == poisson_l1(F, G).l1_norm


def test_marker_permutation_leaves_state_unchanged(sphere3):
    F = random_smooth_field(sphere3, 9)
    m = sphere3.markers
    assert three_point_state(sphere3, (m[2], m[0], m[1]))(F) == three_point_state(sphere3)(F)


def test_fields_on_other_mesh_rejected(sphere2):
    other = build_marked_icosphere(2)
    with pytest.raises(ValueError):
        three_point_state(sphere2)(const(other, 1.0))

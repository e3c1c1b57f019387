import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasisharp.constructions import ConstructionParams, theorem1_fields
from quasisharp.mesh import MeshError, ScalarField, build_marked_icosphere, random_smooth_field
from quasisharp.poisson import bracket_terms, poisson_l1, preimage_counts, sharpness_ratio
from quasisharp.quasistate import three_point_state


def test_self_bracket_is_zero(sphere3):
    F = random_smooth_field(sphere3, 0)
    assert poisson_l1(F, F).l1_norm == 0.0


def test_functionally_dependent_pair(sphere3):
    F = random_smooth_field(sphere3, 1)
    # doubling is exact in floating point, so the determinant cancels exactly
    assert poisson_l1(F, F * 2.0).l1_norm == 0.0
    G = F * 0.37 + ScalarField(sphere3, np.full(sphere3.n_vertices, 1.3))
    assert poisson_l1(F, G).l1_norm <= 1e-12


def test_per_triangle_report(sphere2):
    rng = np.random.default_rng(2)
    F, G = random_smooth_field(sphere2, rng), random_smooth_field(sphere2, rng)
    rep = poisson_l1(F, G, per_triangle=True)
    assert rep.per_triangle.shape == (sphere2.n_triangles,)
    assert np.all(rep.per_triangle >= 0)
    assert rep.l1_norm == math.fsum(rep.per_triangle)
    assert poisson_l1(F, G).per_triangle is None


def test_matches_gradient_formula(sphere2):
    # |dF ^ dG| over a flat triangle equals area * |grad F x grad G| in its plane
    rng = np.random.default_rng(4)
    F, G = random_smooth_field(sphere2, rng), random_smooth_field(sphere2, rng)
    v, t = sphere2.vertices, sphere2.triangles
    e1, e2 = v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]]
    n = np.cross(e1, e2)
    area = 0.5 * np.linalg.norm(n, axis=1)
    nhat = n / (2 * area)[:, None]

    def grad(f):
        fv = f.values[t]
        df1, df2 = fv[:, 1] - fv[:, 0], fv[:, 2] - fv[:, 0]
        # solve grad . e1 = df1, grad . e2 = df2 within the plane
        return (df1[:, None] * np.cross(e2, nhat) - df2[:, None] * np.cross(e1, nhat)) / (2 * area)[:, None]

    gf, gg = grad(F), grad(G)
    dens = np.abs(np.einsum("ij,ij->i", np.cross(gf, gg), nhat))
    assert np.allclose(dens * area, bracket_terms(F, G), rtol=1e-9, atol=1e-15)


def test_mesh_mismatch(sphere2):
    other = build_marked_icosphere(2)
    F = random_smooth_field(sphere2, 0)
    with pytest.raises(MeshError):
        poisson_l1(F, random_smooth_field(other, 0))


@settings(max_examples=30)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-4, 4), b=st.floats(-4, 4))
def test_symmetry_and_scale(sphere2, seed, a, b):
    rng = np.random.default_rng(seed)
    F, G = random_smooth_field(sphere2, rng), random_smooth_field(sphere2, rng)
    n = poisson_l1(F, G).l1_norm
    assert poisson_l1(G, F).l1_norm == pytest.approx(n, rel=1e-12)
    assert poisson_l1(F * a, G * b).l1_norm == pytest.approx(abs(a * b) * n, rel=1e-12, abs=1e-300)


def test_ratio_zero_guard(sphere2):
    F = random_smooth_field(sphere2, 3)
    c = ScalarField(sphere2, np.full(sphere2.n_vertices, 2.0))
    assert sharpness_ratio(three_point_state(sphere2), F, c) == 0.0


def test_ratio_infinite_flag(sphere2):
    # a "state" that is not linear on C(F) exposes the inconsistency flag
    bogus = SimpleNamespace(mesh=sphere2, measure=SimpleNamespace(mesh=sphere2, open_mask=lambda m: 1))
    F = random_smooth_field(sphere2, 5)
    assert sharpness_ratio(bogus, F, F * -1.0) == math.inf


def test_preimages_outside_triangle_are_empty():
    mesh, F, G = theorem1_fields(ConstructionParams(level=3))
    pts = np.array([[0.6, 0.6], [-0.1, 0.2], [0.3, -0.05], [1.2, 0.1]])
    assert preimage_counts(F, G, pts).tolist() == [0, 0, 0, 0]


def test_covering_count_and_determinant_agree():
    # two independent routes to the same number: multiplicity * area(Delta) vs the determinant sum
    mesh, F, G = theorem1_fields(ConstructionParams(level=4))
    rng = np.random.default_rng(0)
    uv = rng.random((4000, 2))
    uv = uv[uv.sum(axis=1) < 1]
    mean = preimage_counts(F, G, uv).mean()
    assert mean * 0.5 == pytest.approx(poisson_l1(F, G).l1_norm, abs=0.02)


def test_l1_cauchy_in_level():
    vals = []
    for level in (3, 4, 5):
        mesh, F, G = theorem1_fields(ConstructionParams(level=level, profile="poly7"))
        vals.append(poisson_l1(F, G).l1_norm)
    d1, d2 = abs(vals[1] - vals[0]), abs(vals[2] - vals[1])
    assert d2 < d1

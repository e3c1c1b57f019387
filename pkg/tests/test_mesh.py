import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import bfs_components, triangle_edges_python
from quasisharp.mesh import (
    CLOSED,
    OPEN,
    MeshError,
    ScalarField,
    SurfaceMesh,
    build_marked_icosphere,
    complement,
    connected_components,
    euler_characteristic,
    icosphere,
    is_solid,
    load_field_csv,
    load_mesh_json,
    random_smooth_field,
    save_field_csv,
    save_mesh_json,
    set_area,
    sublevel_set,
    superlevel_set,
)


def test_icosahedron_counts():
    m = build_marked_icosphere(0)
    assert (m.n_vertices, m.n_edges, m.n_triangles) == (12, 30, 20)
    assert euler_characteristic(m) == 2


@pytest.mark.parametrize("level", range(0, 5))
def test_subdivision_recurrence(level):
    # V_{k+1} = V_k + E_k, E_{k+1} = 2E_k + 3F_k, F_{k+1} = 4F_k
    V, E, F = 12, 30, 20
    for _ in range(level):
        V, E, F = V + E, 2 * E + 3 * F, 4 * F
    m = build_marked_icosphere(level)
    assert (m.n_vertices, m.n_triangles) == (V, F)
    assert len(triangle_edges_python(m.triangles)) == E == m.n_edges


def test_level3_counts():
    m = build_marked_icosphere(3)
    assert (m.n_vertices, m.n_edges, m.n_triangles) == (642, 1920, 1280)


@pytest.mark.parametrize("level", [0, 2, 4])
def test_total_weight_normalized(level):
    m = build_marked_icosphere(level)
    assert abs(math.fsum(m.weights) - 1.0) <= 1e-12
    assert np.all(m.weights > 0)


def test_markers_are_exact_vertices(sphere3):
    for idx, p in zip(sphere3.markers, np.eye(3)):
        assert np.array_equal(sphere3.vertices[idx], p)


def test_outward_orientation(sphere2):
    v, t = sphere2.vertices, sphere2.triangles
    n = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    assert np.all(np.einsum("ij,ij->i", n, v[t].mean(axis=1)) > 0)


def test_markers_too_close():
    with pytest.raises(MeshError, match="markers too close for this level"):
        build_marked_icosphere(0, markers=((1, 0, 0), (1, 0.01, 0), (0, 0, 1)))


def test_rejects_open_surface():
    v, f = icosphere(0)
    with pytest.raises(MeshError):
        SurfaceMesh(v, f[1:], np.full(19, 1 / 19))


def test_rejects_bad_weights():
    v, f = icosphere(0)
    with pytest.raises(MeshError):
        SurfaceMesh(v, f, np.full(20, 0.06))
    w = np.full(20, 0.05)
    w[0] = -0.05
    w[1] = 0.15
    with pytest.raises(MeshError):
        SurfaceMesh(v, f, w)


def test_rejects_inconsistent_orientation():
    v, f = icosphere(0)
    f = f.copy()
    f[0] = f[0, ::-1]
    with pytest.raises(MeshError):
        SurfaceMesh(v, f, np.full(20, 0.05))


def test_components_full_and_empty(sphere2):
    assert len(connected_components(sphere2.full_set())) == 1
    assert connected_components(sphere2.empty_set()) == []


def test_antipodal_vertices_two_components(sphere2):
    v = sphere2.vertices
    a = 0
    b = int(np.argmin(v @ v[a]))
    s = sphere2.vertex_set([a, b])
    comps = connected_components(s)
    assert [c.members.tolist() for c in comps] == bfs_components(sphere2.n_vertices, sphere2.edges, [a, b])
    assert len(comps) == 2


@st.composite
def vertex_masks(draw, n):
    seed = draw(st.integers(0, 2**32 - 1))
    p = draw(st.floats(0.05, 0.95))
    return np.random.default_rng(seed).random(n) < p


@settings(max_examples=60)
@given(data=st.data())
def test_components_partition_and_match_bfs(sphere2, data):
    mask = data.draw(vertex_masks(sphere2.n_vertices))
    s = sphere2.vertex_set(mask, OPEN)
    comps = connected_components(s)
    union = np.zeros(sphere2.n_vertices, dtype=int)
    for c in comps:
        union += c.mask
        assert c.kind == OPEN
    assert np.array_equal(union, mask.astype(int))
    expected = bfs_components(sphere2.n_vertices, sphere2.edges, np.flatnonzero(mask))
    assert [c.members.tolist() for c in comps] == expected


@settings(max_examples=60)
@given(data=st.data())
def test_complement_involution_and_area(sphere3, data):
    mask = data.draw(vertex_masks(sphere3.n_vertices))
    s = sphere3.vertex_set(mask, CLOSED)
    c = complement(s)
    assert c.kind == OPEN
    assert len(s) + len(c) == sphere3.n_vertices
    cc = complement(c)
    assert np.array_equal(cc.mask, s.mask) and cc.kind == s.kind
    assert abs(set_area(s) + set_area(c) - sphere3.total) <= 1e-9


@settings(max_examples=40)
@given(data=st.data())
def test_complement_components_are_solid(sphere3, data):
    # genus-0 fact used by the extension formula
    mask = data.draw(vertex_masks(sphere3.n_vertices))
    for comp in connected_components(sphere3.vertex_set(mask)):
        if comp.is_full():
            continue
        for k in connected_components(complement(comp)):
            assert is_solid(k)


def test_complement_of_empty_open():
    m = build_marked_icosphere(1)
    c = complement(m.empty_set(OPEN))
    assert c.is_full() and c.kind == CLOSED


def test_half_sphere_is_solid(sphere3):
    assert is_solid(sphere3.vertex_set(sphere3.vertices[:, 0] <= 0))


def test_two_caps_not_solid(sphere3):
    z = sphere3.vertices[:, 2]
    assert not is_solid(sphere3.vertex_set(np.abs(z) > 0.8))


def test_equatorial_band_not_solid(sphere3):
    z = sphere3.vertices[:, 2]
    band = sphere3.vertex_set(np.abs(z) < 0.3)
    assert not is_solid(band)
    assert len(bfs_components(sphere3.n_vertices, sphere3.edges, np.flatnonzero(~band.mask))) == 2


def test_solidity_of_trivial_sets(sphere2):
    with pytest.raises(MeshError, match="solidity undefined for trivial sets"):
        is_solid(sphere2.full_set())
    with pytest.raises(MeshError, match="solidity undefined for trivial sets"):
        is_solid(sphere2.empty_set())


def test_set_area_trivial(sphere2):
    assert set_area(sphere2.full_set()) == pytest.approx(1.0, abs=1e-12)
    assert set_area(sphere2.empty_set()) == 0.0


def test_hemisphere_area_level4(sphere4):
    assert abs(set_area(sphere4.vertex_set(sphere4.vertices[:, 2] >= 0)) - 0.5) <= 0.02


def test_level_sets(sphere2):
    F = ScalarField(sphere2, sphere2.vertices[:, 2])
    lo, hi = sublevel_set(F, 0.1), superlevel_set(F, 0.1)
    assert lo.kind == OPEN and hi.kind == CLOSED
    assert np.array_equal(lo.mask, ~hi.mask)


def test_field_validation(sphere2):
    with pytest.raises(MeshError):
        ScalarField(sphere2, np.zeros(3))
    with pytest.raises(MeshError):
        ScalarField(sphere2, np.full(sphere2.n_vertices, np.nan))
    other = build_marked_icosphere(2)
    with pytest.raises(MeshError):
        ScalarField(sphere2, np.zeros(sphere2.n_vertices)) + ScalarField(other, np.zeros(other.n_vertices))


def test_relabeled_mesh_is_valid(sphere2):
    perm = np.random.default_rng(3).permutation(sphere2.n_vertices)
    m = sphere2.relabeled(perm)
    assert m.euler_characteristic == 2
    assert np.array_equal(m.vertices[perm], sphere2.vertices)
    assert m.markers == tuple(int(perm[i]) for i in sphere2.markers)


def test_mesh_and_field_round_trip(tmp_path, sphere2):
    save_mesh_json(sphere2, tmp_path / "m.json")
    m = load_mesh_json(tmp_path / "m.json")
    assert np.array_equal(m.vertices, sphere2.vertices)
    assert np.array_equal(m.triangles, sphere2.triangles)
    assert np.array_equal(m.weights, sphere2.weights)
    assert m.markers == sphere2.markers
    F = random_smooth_field(sphere2, 5)
    save_field_csv(F, tmp_path / "f.csv")
    assert np.array_equal(load_field_csv(sphere2, tmp_path / "f.csv").values, F.values)


def test_random_field_seeded(sphere2):
    a = random_smooth_field(sphere2, 11)
    b = random_smooth_field(sphere2, 11)
    assert np.array_equal(a.values, b.values)

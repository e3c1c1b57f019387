"""Closed genus-0 triangle meshes, per-vertex fields and combinatorial vertex sets.

A :class:`SurfaceMesh` is an oriented closed triangulated sphere carrying a
positive mass on each triangle (the area form).  Subsets of the surface are
represented by :class:`VertexSet`, a boolean vertex mask tagged ``open`` or
``closed``.  A vertex set ``S`` stands for the open regular neighbourhood of
the full subcomplex spanned by ``S``; its complement retracts onto the full
subcomplex spanned by the remaining vertices, so connectivity of both is
read off the vertex graph.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

__all__ = [
    "MeshError",
    "SurfaceMesh",
    "ScalarField",
    "VertexSet",
    "icosphere",
    "build_marked_icosphere",
    "connected_components",
    "complement",
    "is_solid",
    "set_area",
    "euler_characteristic",
    "sublevel_set",
    "superlevel_set",
    "random_smooth_field",
    "save_mesh_json",
    "load_mesh_json",
    "save_field_csv",
    "load_field_csv",
]

OPEN = "open"
CLOSED = "closed"


class MeshError(ValueError):
    """Raised when a mesh, field or vertex set violates its invariants."""


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Oriented closed genus-0 triangle mesh with per-triangle masses.

    Parameters
    ----------
    vertices : array_like, shape (V, 3)
        Embedding coordinates.  Only the combinatorics and the weights enter
        the quasi-measure computations.
    triangles : array_like, shape (F, 3)
        Consistently oriented vertex-index triples.
    weights : array_like, shape (F,)
        Positive mass of each triangle.
    markers : tuple of int
        Distinguished vertex indices (the three points of a 3-point measure).
    total : float
        Declared total mass; ``weights`` must sum to it.
    metadata : dict
        Free-form provenance (construction parameters and derived numbers).

    Raises
    ------
    MeshError
        If the triangles do not form an oriented closed connected surface of
        Euler characteristic 2, or the weights are not positive and summing
        to ``total``.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    weights: np.ndarray
    markers: tuple = ()
    total: float = 1.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64)
        w = np.ascontiguousarray(self.weights, dtype=float)
        v.setflags(write=False)
        t.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "markers", tuple(int(m) for m in self.markers))
        object.__setattr__(self, "total", float(self.total))
        self._validate()

    def _validate(self):
        v, t, w = self.vertices, self.triangles, self.weights
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError("vertices must have shape (V, 3)")
        if t.ndim != 2 or t.shape[1] != 3 or len(t) == 0:
            raise MeshError("triangles must have shape (F, 3) with F > 0")
        if w.shape != (len(t),):
            raise MeshError("one weight per triangle is required")
        nv = len(v)
        if t.min() < 0 or t.max() >= nv:
            raise MeshError("triangle index out of range")
        if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 2] == t[:, 0])):
            raise MeshError("degenerate triangle with a repeated vertex")
        if np.unique(t).size != nv:
            raise MeshError("every vertex must belong to a triangle")
        # Each directed edge once and its reverse once: closed, manifold
        # along edges, consistently oriented.
        directed = t[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        keys = directed[:, 0] * nv + directed[:, 1]
        ukeys = np.unique(keys)
        if ukeys.size != keys.size:
            raise MeshError("inconsistent orientation or non-manifold edge")
        rev = directed[:, 1] * nv + directed[:, 0]
        if not np.all(np.isin(rev, ukeys, assume_unique=False)):
            raise MeshError("surface is not closed: boundary edge found")
        if not np.all(np.isfinite(v)):
            raise MeshError("non-finite vertex coordinates")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise MeshError("triangle weights must be finite and positive")
        if not math.isclose(math.fsum(w), self.total, rel_tol=1e-9, abs_tol=1e-12):
            raise MeshError(
                f"weights sum to {math.fsum(w)!r}, declared total is {self.total!r}"
            )
        if self.euler_characteristic != 2:
            raise MeshError(f"Euler characteristic {self.euler_characteristic} != 2")
        n, _ = csgraph.connected_components(self.adjacency, directed=False)
        if n != 1:
            raise MeshError("mesh is not connected")
        if len(set(self.markers)) != len(self.markers):
            raise MeshError("marker vertices must be distinct")
        for m in self.markers:
            if not 0 <= m < nv:
                raise MeshError("marker index out of range")

    # -- combinatorics -------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def edges(self) -> np.ndarray:
        """Undirected edges as sorted index pairs, shape (E, 2)."""
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        e = np.unique(e, axis=0)
        e.setflags(write=False)
        return e

    @cached_property
    def triangle_edges(self) -> np.ndarray:
        """Edge index of the sides (0,1), (1,2), (2,0) of each triangle, shape (F, 3)."""
        n = self.n_vertices
        keys = self.edges[:, 0] * n + self.edges[:, 1]
        s = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        te = np.searchsorted(keys, s[:, 0] * n + s[:, 1]).reshape(-1, 3)
        te.setflags(write=False)
        return te

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        e = self.edges
        n = self.n_vertices
        data = np.ones(len(e), dtype=np.int8)
        return sparse.coo_matrix((data, (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()

    @cached_property
    def max_edge_length(self) -> float:
        e = self.edges
        return float(np.max(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)))

    # -- constructors for attached objects ----------------------------
    def field(self, values) -> "ScalarField":
        return ScalarField(self, values)

    def vertex_set(self, members=(), kind: str = CLOSED) -> "VertexSet":
        """Vertex set from an index list or a boolean mask."""
        members = np.asarray(members)
        if members.dtype == bool:
            if members.shape != (self.n_vertices,):
                raise MeshError("mask length must equal the vertex count")
            mask = members.copy()
        else:
            members = members.astype(np.int64).ravel()
            if members.size and (members.min() < 0 or members.max() >= self.n_vertices):
                raise MeshError("vertex index out of range")
            mask = np.zeros(self.n_vertices, dtype=bool)
            mask[members] = True
        return VertexSet(self, mask, kind)

    def full_set(self, kind: str = CLOSED) -> "VertexSet":
        return VertexSet(self, np.ones(self.n_vertices, dtype=bool), kind)

    def empty_set(self, kind: str = OPEN) -> "VertexSet":
        return VertexSet(self, np.zeros(self.n_vertices, dtype=bool), kind)

    def relabeled(self, perm) -> "SurfaceMesh":
        """Copy with vertex ``i`` renamed ``perm[i]``.

        Triangle order and the cyclic order inside each triangle are kept, so
        per-triangle quantities are unchanged term by term.
        """
        perm = np.asarray(perm, dtype=np.int64)
        if np.sort(perm).tolist() != list(range(self.n_vertices)):
            raise MeshError("perm must be a permutation of the vertex indices")
        verts = np.empty_like(self.vertices)
        verts[perm] = self.vertices
        return SurfaceMesh(
            verts,
            perm[self.triangles],
            self.weights.copy(),
            tuple(int(perm[m]) for m in self.markers),
            self.total,
            dict(self.metadata),
        )


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Per-vertex values on a mesh, interpolated linearly on each triangle."""

    mesh: SurfaceMesh
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).ravel()
        if vals.shape != (self.mesh.n_vertices,):
            raise MeshError(
                f"field has {vals.size} values, mesh has {self.mesh.n_vertices} vertices"
            )
        if not np.all(np.isfinite(vals)):
            raise MeshError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def _check(self, other: "ScalarField"):
        if other.mesh is not self.mesh:
            raise MeshError("fields live on different meshes")

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.mesh, self.values + other.values)
        return ScalarField(self.mesh, self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.mesh, self.values - other.values)
        return ScalarField(self.mesh, self.values - float(other))

    def __mul__(self, a):
        return ScalarField(self.mesh, float(a) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.mesh, -self.values)

    def permuted(self, mesh: SurfaceMesh, perm) -> "ScalarField":
        """The same field carried to ``mesh = self.mesh.relabeled(perm)``."""
        vals = np.empty_like(self.values)
        vals[np.asarray(perm)] = self.values
        return ScalarField(mesh, vals)


@dataclass(frozen=True, eq=False)
class VertexSet:
    """Combinatorial open or closed subset of a mesh."""

    mesh: SurfaceMesh
    mask: np.ndarray
    kind: str = CLOSED

    def __post_init__(self):
        if self.kind not in (OPEN, CLOSED):
            raise MeshError(f"kind must be 'open' or 'closed', got {self.kind!r}")
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (self.mesh.n_vertices,):
            raise MeshError("mask length must equal the vertex count")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def members(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __contains__(self, v) -> bool:
        return bool(self.mask[v])

    def is_empty(self) -> bool:
        return not self.mask.any()

    def is_full(self) -> bool:
        return bool(self.mask.all())

    def issubset(self, other: "VertexSet") -> bool:
        return bool(np.all(~self.mask | other.mask))

    def as_kind(self, kind: str) -> "VertexSet":
        return VertexSet(self.mesh, self.mask, kind)

    def __or__(self, other):
        return VertexSet(self.mesh, self.mask | other.mask, self.kind)

    def __and__(self, other):
        return VertexSet(self.mesh, self.mask & other.mask, self.kind)

    def __repr__(self):
        return f"VertexSet({self.kind}, {len(self)}/{self.mesh.n_vertices} vertices)"


# ---------------------------------------------------------------------------
# icospheres

def _icosahedron():
    t = (1.0 + 5 ** 0.5) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    return verts, faces


def _subdivide(verts, faces):
    e = np.sort(faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    mids = verts[uniq[:, 0]] + verts[uniq[:, 1]]
    mids /= np.linalg.norm(mids, axis=1)[:, None]
    m = len(verts) + inv.reshape(-1, 3)
    a, b, c = faces.T
    ab, bc, ca = m.T
    new = np.concatenate([
        np.stack([a, ab, ca], axis=1),
        np.stack([b, bc, ab], axis=1),
        np.stack([c, ca, bc], axis=1),
        np.stack([ab, bc, ca], axis=1),
    ])
    return np.vstack([verts, mids]), new


def icosphere(level: int):
    """Vertices and outward-oriented faces of the ``level``-times subdivided icosahedron."""
    if level < 0:
        raise MeshError("level must be non-negative")
    v, f = _icosahedron()
    for _ in range(level):
        v, f = _subdivide(v, f)
    return v, f


def spherical_triangle_areas(verts, faces) -> np.ndarray:
    """Areas of geodesic triangles on the unit sphere (Van Oosterom-Strackee)."""
    a, b, c = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    num = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(num, den)


def build_marked_icosphere(level: int, markers=((1, 0, 0), (0, 1, 0), (0, 0, 1))) -> SurfaceMesh:
    """Unit icosphere with three marker points inserted as vertices.

    Each marker replaces its nearest vertex, so marker membership in any
    vertex set is exact.  Weights are spherical triangle areas normalised
    to total 1.

    Raises
    ------
    MeshError
        If two markers snap to the same vertex.
    """
    v, f = icosphere(level)
    pts = np.asarray(markers, dtype=float).reshape(-1, 3)
    if len(pts) != 3:
        raise MeshError("exactly three markers are required")
    pts = pts / np.linalg.norm(pts, axis=1)[:, None]
    if np.any(pts @ pts.T - np.eye(3) > 1 - 1e-15):
        raise MeshError("markers must be pairwise distinct")
    idx = np.argmax(v @ pts.T, axis=0)
    if len(set(idx.tolist())) != 3:
        raise MeshError("markers too close for this level")
    v = v.copy()
    v[idx] = pts
    area = spherical_triangle_areas(v, f)
    weights = area / math.fsum(area)
    return SurfaceMesh(v, f, weights, tuple(int(i) for i in idx), 1.0,
                       {"kind": "marked_icosphere", "level": int(level),
                        "markers": pts.tolist()})


# ---------------------------------------------------------------------------
# set queries

def component_labels(mesh: SurfaceMesh, mask: np.ndarray):
    """Edge-connected components of the vertices in ``mask``.

    Returns ``(n, labels)`` where ``labels[v]`` is the component index of
    member ``v`` (components numbered by their smallest vertex) and ``-1`` for
    non-members.
    """
    e = mesh.edges
    keep = mask[e[:, 0]] & mask[e[:, 1]]
    n_v = mesh.n_vertices
    g = sparse.coo_matrix(
        (np.ones(int(keep.sum()), dtype=np.int8), (e[keep, 0], e[keep, 1])), shape=(n_v, n_v)
    )
    _, raw = csgraph.connected_components(g, directed=False)
    labels = np.full(n_v, -1, dtype=np.int64)
    members = np.flatnonzero(mask)
    if members.size == 0:
        return 0, labels
    r = raw[members]
    # members are ascending, so first occurrence order == order by min index
    uniq, first, inv = np.unique(r, return_index=True, return_inverse=True)
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[np.argsort(first)] = np.arange(len(uniq))
    labels[members] = rank[inv]
    return len(uniq), labels


def connected_components(s: VertexSet) -> list:
    """Maximal edge-connected pieces of ``s``, ordered by smallest vertex."""
    n, labels = component_labels(s.mesh, s.mask)
    return [VertexSet(s.mesh, labels == i, s.kind) for i in range(n)]


def complement(s: VertexSet) -> VertexSet:
    kind = CLOSED if s.kind == OPEN else OPEN
    return VertexSet(s.mesh, ~s.mask, kind)


def is_solid(s: VertexSet) -> bool:
    """True iff ``s`` and its complement are both connected."""
    if s.is_empty() or s.is_full():
        raise MeshError("solidity undefined for trivial sets")
    n_in, _ = component_labels(s.mesh, s.mask)
    if n_in != 1:
        return False
    n_out, _ = component_labels(s.mesh, ~s.mask)
    return n_out == 1


def mask_area(mesh: SurfaceMesh, mask: np.ndarray) -> float:
    counts = mask[mesh.triangles].sum(axis=1)
    return float(np.dot(mesh.weights, counts) / 3.0)


def set_area(s: VertexSet) -> float:
    """Mass of ``s``: each triangle contributes its weight times the fraction of its vertices in ``s``."""
    return mask_area(s.mesh, s.mask)


def euler_characteristic(m: SurfaceMesh) -> int:
    return m.euler_characteristic


def sublevel_set(F: ScalarField, t: float) -> VertexSet:
    """Open set ``{F < t}``."""
    return VertexSet(F.mesh, F.values < t, OPEN)


def superlevel_set(F: ScalarField, t: float) -> VertexSet:
    """Closed set ``{F >= t}``."""
    return VertexSet(F.mesh, F.values >= t, CLOSED)


def random_smooth_field(mesh: SurfaceMesh, rng, degree: int = 3) -> ScalarField:
    """Random polynomial in the vertex coordinates, of total degree ``<= degree``.

    Coefficients are standard normal, damped by ``1 / (1 + k)`` for monomials of
    degree ``k``, so low modes dominate as for a truncated harmonic series.
    """
    rng = np.random.default_rng(rng)
    x, y, z = mesh.vertices.T
    values = np.zeros(mesh.n_vertices)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            for c in range(degree + 1 - a - b):
                k = a + b + c
                values += rng.standard_normal() / (1.0 + k) * x**a * y**b * z**c
    return ScalarField(mesh, values)


# ---------------------------------------------------------------------------
# file formats

def mesh_to_dict(mesh: SurfaceMesh) -> dict:
    return {
        "vertices": mesh.vertices.tolist(),
        "triangles": mesh.triangles.tolist(),
        "weights": mesh.weights.tolist(),
        "markers": list(mesh.markers),
    }


def save_mesh_json(mesh: SurfaceMesh, path) -> None:
    Path(path).write_text(json.dumps(mesh_to_dict(mesh)), encoding="utf-8")


def mesh_from_dict(data: dict) -> SurfaceMesh:
    try:
        verts, tris, weights = data["vertices"], data["triangles"], data["weights"]
    except KeyError as exc:
        raise MeshError(f"mesh file lacks key {exc.args[0]!r}") from None
    w = np.asarray(weights, dtype=float)
    return SurfaceMesh(verts, tris, w, tuple(data.get("markers", ())), math.fsum(w))


def load_mesh_json(path) -> SurfaceMesh:
    return mesh_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_field_csv(F: ScalarField, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for x in F.values:
            writer.writerow([repr(float(x))])


def load_field_csv(mesh: SurfaceMesh, path) -> ScalarField:
    with open(path, newline="", encoding="utf-8") as fh:
        vals = [float(row[0]) for row in csv.reader(fh) if row]
    return ScalarField(mesh, vals)

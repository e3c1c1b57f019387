"""Quasi-integrals of piecewise-linear fields against simple quasi-measures.

The quasi-integral of ``F`` is ``max F - int b_F(x) dx`` with
``b_F(x) = tau({F < x})``.  On a mesh ``b_F`` is a step function that can
only change at vertex values, so it is sampled once per gap between
consecutive distinct vertex values.  Set membership is decided by the rank
of a vertex value, never by comparing against a floating-point midpoint.

:func:`median_direct` is an independent route to the median quasi-state.
It does not use ``tau``; it works with exact piecewise-linear areas of the
sub- and superlevel regions and the tree they form with the level set.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .mesh import MeshError, ScalarField, SurfaceMesh, component_labels
from .quasimeasure import QuasiMeasure, area_threshold, three_point

__all__ = [
    "DistributionFunction",
    "QuasiState",
    "MedianNotFound",
    "three_point_state",
    "median_state",
    "b_function",
    "quasi_integral",
    "nonlinearity_defect",
    "median_direct",
]


@dataclass(frozen=True)
class DistributionFunction:
    """Step function ``x -> tau({F < x})``.

    Attributes
    ----------
    levels : ndarray
        Sorted distinct vertex values of the field.
    thresholds : ndarray
        Midpoints between consecutive levels, where ``values`` were sampled.
    values : ndarray of int
        ``b`` on each open gap ``(levels[k], levels[k+1])``.
    """

    levels: np.ndarray
    thresholds: np.ndarray
    values: np.ndarray

    def __call__(self, x: float) -> int:
        if x <= self.levels[0]:
            return 0
        if x > self.levels[-1]:
            return 1
        k = int(np.searchsorted(self.levels, x, side="left")) - 1
        return int(self.values[k])

    def integral(self) -> float:
        """``int_{min F}^{max F} b(x) dx``."""
        return math.fsum(np.diff(self.levels) * self.values)

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))


@dataclass(frozen=True, eq=False)
class QuasiState:
    """Quasi-state induced by a simple quasi-measure; call it on a field."""

    measure: QuasiMeasure

    @property
    def mesh(self) -> SurfaceMesh:
        return self.measure.mesh

    def __call__(self, F: ScalarField) -> float:
        return quasi_integral(self, F)


def three_point_state(mesh: SurfaceMesh, markers=None) -> QuasiState:
    return QuasiState(QuasiMeasure(three_point(mesh, markers)))


def median_state(mesh: SurfaceMesh) -> QuasiState:
    return QuasiState(QuasiMeasure(area_threshold(mesh)))


def _ranked(z: QuasiState, F: ScalarField):
    if F.mesh is not z.mesh:
        raise MeshError("field and quasi-state live on different meshes")
    levels = np.unique(F.values)
    ranks = np.searchsorted(levels, F.values)
    return levels, ranks


def b_function(z: QuasiState, F: ScalarField) -> DistributionFunction:
    """Evaluate ``b_F`` on every gap between distinct vertex values."""
    levels, ranks = _ranked(z, F)
    vals = np.array(
        [z.measure.open_mask(ranks <= k) for k in range(len(levels) - 1)], dtype=np.int64
    )
    mids = 0.5 * (levels[:-1] + levels[1:])
    return DistributionFunction(levels, mids, vals)


def quasi_integral(z: QuasiState, F: ScalarField) -> float:
    """``zeta(F)`` for a simple quasi-state.

    ``b_F`` is monotone with values in {0, 1}, so ``max F - int b_F`` is the
    vertex value at which ``b_F`` jumps; it is located by bisection over the
    gaps with O(log V) measure evaluations.
    """
    levels, ranks = _ranked(z, F)
    lo, hi = 0, len(levels) - 1  # answer is levels[j] for j in [lo, hi]
    while lo < hi:
        mid = (lo + hi) // 2
        if z.measure.open_mask(ranks <= mid):
            hi = mid
        else:
            lo = mid + 1
    return float(levels[lo])


def nonlinearity_defect(z: QuasiState, F: ScalarField, G: ScalarField) -> float:
    """``|zeta(F+G) - zeta(F) - zeta(G)|``."""
    return abs(quasi_integral(z, F + G) - quasi_integral(z, F) - quasi_integral(z, G))


# ---------------------------------------------------------------------------
# direct median

class MedianNotFound(MeshError):
    pass


def _below_fraction(tv: np.ndarray, c: float) -> np.ndarray:
    """Fraction of each triangle where the linear interpolant is below ``c``."""
    f = np.sort(tv, axis=1)
    f0, f1, f2 = f[:, 0], f[:, 1], f[:, 2]
    out = np.where(f2 <= c, 1.0, 0.0)
    out[(f0 == c) & (f2 == c)] = 0.0
    mixed = (f0 < c) & (c < f2)
    lower = mixed & (c <= f1)
    upper = mixed & (c > f1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[lower] = (c - f0[lower]) ** 2 / ((f1[lower] - f0[lower]) * (f2[lower] - f0[lower]))
        out[upper] = 1.0 - (f2[upper] - c) ** 2 / ((f2[upper] - f0[upper]) * (f2[upper] - f1[upper]))
    return out


class _LevelTree:
    """Regions of ``{F < c}``, ``{F > c}`` and components of ``{F = c}`` as a tree.

    The combinatorial split is fixed by ``below``/``above`` vertex masks; the
    areas are evaluated for a numeric level ``c`` compatible with the split.
    """

    def __init__(self, mesh: SurfaceMesh, vals: np.ndarray, below: np.ndarray, above: np.ndarray):
        self.mesh = mesh
        self.vals = vals
        on = ~(below | above)
        nv = mesh.n_vertices
        e = mesh.edges
        nb, lb = component_labels(mesh, below)
        na, la = component_labels(mesh, above)
        self.nb, self.na = nb, na

        # level-set elements: on-vertices (id v) and straddling edges (id nv + e)
        straddle = (below[e[:, 0]] & above[e[:, 1]]) | (above[e[:, 0]] & below[e[:, 1]])
        t = mesh.triangles
        te = mesh.triangle_edges
        elem = np.full((len(t), 6), -1, dtype=np.int64)
        elem[:, :3] = np.where(on[t], t, -1)
        elem[:, 3:] = np.where(straddle[te], nv + te, -1)
        rows, cols = [], []
        for a in range(6):
            for b in range(a + 1, 6):
                ok = (elem[:, a] >= 0) & (elem[:, b] >= 0)
                rows.append(elem[ok, a])
                cols.append(elem[ok, b])
        active = np.concatenate([np.flatnonzero(on), nv + np.flatnonzero(straddle)])
        n_el = nv + len(e)
        g = sparse.coo_matrix(
            (np.ones(sum(len(r) for r in rows)), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n_el, n_el),
        )
        _, raw = csgraph.connected_components(g, directed=False)
        uniq, inv = np.unique(raw[active], return_inverse=True)
        nl = len(uniq)
        level_of = np.full(n_el, -1, dtype=np.int64)
        level_of[active] = inv
        self.nl = nl

        # node ids: below regions, above regions, level components
        node_b = lambda r: r  # noqa: E731
        node_a = lambda r: nb + r  # noqa: E731
        node_l = lambda r: nb + na + r  # noqa: E731
        links = set()
        for (i, j) in ((0, 1), (1, 0)):
            u, w = e[:, i], e[:, j]
            m = below[u] & on[w]
            links.update(zip(node_b(lb[u[m]]).tolist(), node_l(level_of[w[m]]).tolist()))
            m = above[u] & on[w]
            links.update(zip(node_a(la[u[m]]).tolist(), node_l(level_of[w[m]]).tolist()))
            m = straddle & below[u]
            lv = node_l(level_of[nv + np.flatnonzero(m)])
            links.update(zip(node_b(lb[u[m]]).tolist(), lv.tolist()))
            links.update(zip(node_a(la[w[m]]).tolist(), lv.tolist()))
        self.n_nodes = nb + na + nl
        if len(links) != self.n_nodes - 1:
            raise MeshError("level structure is not a tree; mesh is not genus 0")
        self.adj = [[] for _ in range(self.n_nodes)]
        for p, q in links:
            self.adj[p].append(q)
            self.adj[q].append(p)

        # per-triangle owners of the below part, above part and plateau
        tv = vals[t]
        lo_v = t[np.arange(len(t)), np.argmin(tv, axis=1)]
        hi_v = t[np.arange(len(t)), np.argmax(tv, axis=1)]
        self.tv = tv
        self.owner_b = np.where(below[lo_v], lb[lo_v], -1)
        self.owner_a = np.where(above[hi_v], nb + la[hi_v], -1)
        plateau = on[t].all(axis=1)
        self.plateau_w = np.bincount(
            nb + na + level_of[t[plateau, 0]], weights=mesh.weights[plateau], minlength=self.n_nodes
        )
        self._order = self._bfs_order()

    def _bfs_order(self):
        parent = np.full(self.n_nodes, -1)
        seen = np.zeros(self.n_nodes, dtype=bool)
        order = []
        dq = deque([0])
        seen[0] = True
        while dq:
            u = dq.popleft()
            order.append(u)
            for w in self.adj[u]:
                if not seen[w]:
                    seen[w] = True
                    parent[w] = u
                    dq.append(w)
        if len(order) != self.n_nodes:
            raise MeshError("level structure is disconnected")
        self.parent = parent
        return order

    def node_weights(self, c: float) -> np.ndarray:
        w = self.mesh.weights
        fb = _below_fraction(self.tv, c)
        out = self.plateau_w.astype(float)
        mb = self.owner_b >= 0
        out += np.bincount(self.owner_b[mb], weights=(w * fb)[mb], minlength=self.n_nodes)
        ma = self.owner_a >= 0
        out += np.bincount(self.owner_a[ma], weights=(w * (1.0 - fb))[ma], minlength=self.n_nodes)
        return out

    def max_branch(self, c: float) -> np.ndarray:
        """For each node, the largest mass left in one piece after deleting it."""
        wt = self.node_weights(c)
        total = wt.sum()
        sub = wt.copy()
        for u in reversed(self._order[1:]):
            sub[self.parent[u]] += sub[u]
        best = total - sub
        for u in self._order[1:]:
            p = self.parent[u]
            best[p] = max(best[p], sub[u])
        return best

    def classify(self, c: float, half: float, tol: float):
        """``'level'`` if some level component is a median, else the side of the centroid."""
        mb = self.max_branch(c)
        lv = mb[self.nb + self.na:]
        if lv.size and lv.min() <= half + tol:
            return "level", float(lv.min())
        node = int(np.argmin(mb))
        return ("below" if node < self.nb else "above"), float(mb[node])


def median_direct(mesh: SurfaceMesh, F: ScalarField, tol: float | None = None) -> float:
    """Median of ``F``: the level of the level-set component whose complementary components all carry at most half the mass.

    Parameters
    ----------
    mesh : SurfaceMesh
        Supplies the triangle masses.
    F : ScalarField
        Field on ``mesh``.
    tol : float, optional
        Slack on the half-mass condition, default ``1e-6 * mesh.total``.

    Raises
    ------
    MedianNotFound
        If no level component meets the condition within ``tol``.
    """
    if F.mesh is not mesh:
        raise MeshError("field lives on a different mesh")
    half = 0.5 * mesh.total
    tol = 1e-6 * mesh.total if tol is None else tol
    vals = F.values
    levels = np.unique(vals)
    if len(levels) == 1:
        return float(levels[0])
    ranks = np.searchsorted(levels, vals)

    def at_vertex_level(k):
        tree = _LevelTree(mesh, vals, ranks < k, ranks > k)
        return tree.classify(float(levels[k]), half, tol)

    lo, hi = 0, len(levels) - 1
    side, _ = at_vertex_level(lo)
    if side == "level":
        return float(levels[lo])
    side, _ = at_vertex_level(hi)
    if side == "level":
        return float(levels[hi])
    if side != "below":
        raise MedianNotFound("field too coarse for median at this refinement")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        side, _ = at_vertex_level(mid)
        if side == "level":
            return float(levels[mid])
        if side == "above":
            lo = mid
        else:
            hi = mid

    # the median lies strictly inside the gap (levels[lo], levels[hi])
    tree = _LevelTree(mesh, vals, ranks <= lo, ranks >= hi)
    a, b = float(levels[lo]), float(levels[hi])
    for _ in range(200):
        c = 0.5 * (a + b)
        if c <= a or c >= b:
            break
        side, _ = tree.classify(c, half, 0.0)
        if side == "level":
            return c
        if side == "above":
            a = c
        else:
            b = c
    c = 0.5 * (a + b)
    side, excess = tree.classify(c, half, tol)
    if side != "level":
        raise MedianNotFound("field too coarse for median at this refinement")
    return c

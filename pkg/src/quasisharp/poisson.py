"""L1 norm of the Poisson bracket of two piecewise-linear fields.

On a surface ``|{F, G}| * area = |dF ^ dG|``, so the L1 norm of the bracket
is the total unsigned area swept by the map ``(F, G)``.  For linear
interpolants this is exact per triangle:

    0.5 * |(F_j - F_i)(G_k - G_i) - (F_k - F_i)(G_j - G_i)|

and needs neither the metric nor the area form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import MeshError, ScalarField

__all__ = ["BracketReport", "poisson_l1", "sharpness_ratio", "preimage_counts"]


@dataclass(frozen=True)
class BracketReport:
    l1_norm: float
    per_triangle: np.ndarray | None = None


def _canonical_corners(f: np.ndarray, g: np.ndarray):
    # Start each triangle at its (f, g)-lexicographically smallest corner so
    # the floating-point value of a term does not depend on where the cyclic
    # vertex order starts.
    rows = np.arange(len(f))
    start = np.zeros(len(f), dtype=np.int64)
    for k in (1, 2):
        fs, gs = f[rows, start], g[rows, start]
        smaller = (f[:, k] < fs) | ((f[:, k] == fs) & (g[:, k] < gs))
        start = np.where(smaller, k, start)
    idx = (start[:, None] + np.arange(3)) % 3
    return f[rows[:, None], idx], g[rows[:, None], idx]


def bracket_terms(F: ScalarField, G: ScalarField) -> np.ndarray:
    """Per-triangle ``int |dF ^ dG|``."""
    if F.mesh is not G.mesh:
        raise MeshError("fields live on different meshes")
    t = F.mesh.triangles
    f, g = _canonical_corners(F.values[t], G.values[t])
    det = (f[:, 1] - f[:, 0]) * (g[:, 2] - g[:, 0]) - (f[:, 2] - f[:, 0]) * (g[:, 1] - g[:, 0])
    return 0.5 * np.abs(det)


def poisson_l1(F: ScalarField, G: ScalarField, per_triangle: bool = False) -> BracketReport:
    """``||{F, G}||_L1`` for the linear interpolants of ``F`` and ``G``.

    The sum is exactly rounded (``math.fsum``), so it does not depend on the
    order of the triangles.
    """
    terms = bracket_terms(F, G)
    return BracketReport(math.fsum(terms), terms if per_triangle else None)


def sharpness_ratio(z, F: ScalarField, G: ScalarField) -> float:
    """``Pi(F, G)**2 / ||{F, G}||_L1``; 0 when both vanish, ``inf`` if only the norm does."""
    from .quasistate import nonlinearity_defect

    pi = nonlinearity_defect(z, F, G)
    norm = poisson_l1(F, G).l1_norm
    if norm == 0.0:
        return 0.0 if pi == 0.0 else math.inf
    return pi * pi / norm


def preimage_counts(F: ScalarField, G: ScalarField, points, chunk: int = 256) -> np.ndarray:
    """Number of triangles whose ``(F, G)``-image strictly contains each point.

    Degenerate image triangles are skipped.  Points on an image edge are not
    counted by either neighbour; such points form a null set.
    """
    if F.mesh is not G.mesh:
        raise MeshError("fields live on different meshes")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    t = F.mesh.triangles
    a = np.stack([F.values[t[:, 0]], G.values[t[:, 0]]], axis=1)
    b = np.stack([F.values[t[:, 1]], G.values[t[:, 1]]], axis=1)
    c = np.stack([F.values[t[:, 2]], G.values[t[:, 2]]], axis=1)
    v0, v1 = b - a, c - a
    d = v0[:, 0] * v1[:, 1] - v0[:, 1] * v1[:, 0]
    live = d != 0.0
    a, v0, v1, d = a[live], v0[live], v1[live], d[live]
    lo = np.minimum(np.minimum(a, a + v0), a + v1)
    hi = np.maximum(np.maximum(a, a + v0), a + v1)
    counts = np.zeros(len(pts), dtype=np.int64)
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk]
        box = (
            (p[:, None, 0] > lo[None, :, 0]) & (p[:, None, 0] < hi[None, :, 0])
            & (p[:, None, 1] > lo[None, :, 1]) & (p[:, None, 1] < hi[None, :, 1])
        )
        pi_, ti = np.nonzero(box)
        w = p[pi_] - a[ti]
        l1 = (w[:, 0] * v1[ti, 1] - w[:, 1] * v1[ti, 0]) / d[ti]
        l2 = (v0[ti, 0] * w[:, 1] - v0[ti, 1] * w[:, 0]) / d[ti]
        inside = (l1 > 0) & (l2 > 0) & (l1 + l2 < 1)
        counts[s:s + chunk] = np.bincount(pi_[inside], minlength=len(p))
    return counts

"""Simple ({0,1}-valued) quasi-measures on genus-0 meshes.

A simple quasi-measure on the sphere is fixed by its values on closed solid
sets.  Two such rules are provided: :class:`ThreePoint` (1 iff the set holds
at least two of three marker vertices) and :class:`AreaThreshold` (1 iff the
set carries at least half the mass).  :func:`tau_open` extends a rule to an
arbitrary open vertex set ``U`` by

    tau(U) = sum_i [ 1 - sum_j nu(K_ij) ]

where ``U_i`` are the components of ``U`` and ``K_ij`` the components of the
complement of ``U_i``; closed sets are handled through complements.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import (
    CLOSED,
    OPEN,
    MeshError,
    SurfaceMesh,
    VertexSet,
    complement,
    component_labels,
    is_solid,
    mask_area,
)

__all__ = [
    "QuasiMeasureError",
    "SimplicityViolation",
    "ThreePoint",
    "AreaThreshold",
    "QuasiMeasure",
    "three_point",
    "area_threshold",
    "nu",
    "tau_open",
    "tau_closed",
]


class QuasiMeasureError(ValueError):
    pass


class SimplicityViolation(QuasiMeasureError):
    """The extension produced a value outside {0, 1}."""


@dataclass(frozen=True, eq=False)
class ThreePoint:
    """Aarnes' rule: a closed solid set has measure 1 iff it holds two or more markers."""

    mesh: SurfaceMesh
    markers: tuple

    def __post_init__(self):
        m = tuple(int(i) for i in self.markers)
        if len(m) != 3 or len(set(m)) != 3:
            raise QuasiMeasureError("three distinct marker vertices are required")
        if min(m) < 0 or max(m) >= self.mesh.n_vertices:
            raise QuasiMeasureError("marker index out of range")
        object.__setattr__(self, "markers", m)

    def value(self, mask: np.ndarray) -> int:
        return int(sum(bool(mask[i]) for i in self.markers) >= 2)


@dataclass(frozen=True, eq=False)
class AreaThreshold:
    """Median rule: a closed solid set has measure 1 iff its mass is at least ``threshold``."""

    mesh: SurfaceMesh
    threshold: float

    def __post_init__(self):
        if not 0.0 < self.threshold < self.mesh.total:
            raise QuasiMeasureError("threshold must lie strictly between 0 and the total mass")

    def value(self, mask: np.ndarray) -> int:
        # ties resolve to 1
        return int(mask_area(self.mesh, mask) >= self.threshold)


def three_point(mesh: SurfaceMesh, markers=None) -> ThreePoint:
    return ThreePoint(mesh, mesh.markers if markers is None else markers)


def area_threshold(mesh: SurfaceMesh) -> AreaThreshold:
    return AreaThreshold(mesh, 0.5 * mesh.total)


def nu(base, s: VertexSet) -> int:
    """Value of the solid-set rule on a closed solid set."""
    if s.mesh is not base.mesh:
        raise MeshError("set and rule live on different meshes")
    if s.is_empty() or s.is_full() or not is_solid(s):
        raise QuasiMeasureError("nu defined on solid sets only")
    return base.value(s.mask)


def _tau_open_mask(base, mask: np.ndarray) -> int:
    mesh = base.mesh
    n, labels = component_labels(mesh, mask)
    total = 0
    for i in range(n):
        rest = labels != i
        m, klabels = component_labels(mesh, rest)
        contribution = 1
        for j in range(m):
            k = klabels == j
            n_out, _ = component_labels(mesh, ~k)
            if n_out != 1:
                raise QuasiMeasureError(
                    "complementary component is not solid; mesh is not genus 0"
                )
            contribution -= base.value(k)
        if contribution not in (0, 1):
            raise SimplicityViolation(f"component contributes {contribution}")
        total += contribution
    if total not in (0, 1):
        raise SimplicityViolation(f"measure of open set evaluated to {total}")
    return total


def tau_open(q, u: VertexSet) -> int:
    base = q.base if isinstance(q, QuasiMeasure) else q
    if u.kind != OPEN:
        raise QuasiMeasureError("tau_open expects an open set")
    if u.mesh is not base.mesh:
        raise MeshError("set and measure live on different meshes")
    return _tau_open_mask(base, u.mask)


def tau_closed(q, c: VertexSet) -> int:
    if c.kind != CLOSED:
        raise QuasiMeasureError("tau_closed expects a closed set")
    return 1 - tau_open(q, complement(c))


@dataclass(frozen=True, eq=False)
class QuasiMeasure:
    """Simple quasi-measure generated by a solid-set rule.

    Calling the object on a :class:`VertexSet` dispatches on its kind.
    """

    base: object

    @property
    def mesh(self) -> SurfaceMesh:
        return self.base.mesh

    def __call__(self, s: VertexSet) -> int:
        return tau_open(self, s) if s.kind == OPEN else tau_closed(self, s)

    def open_mask(self, mask: np.ndarray) -> int:
        """``tau`` of the open set with vertex mask ``mask`` (no wrapping)."""
        return _tau_open_mask(self.base, mask)

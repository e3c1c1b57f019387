"""The two extremal configurations.

* :func:`theorem1_fields` -- fields ``F = f o P``, ``G = g o P`` on the unit
  sphere with markers at the coordinate points, where ``P`` is the projection
  to the xy-plane and ``(f, g)`` folds the unit disk onto the triangle
  ``{u, v >= 0, u + v <= 1}``.  The 3-point quasi-state has defect 1 on this
  pair and the bracket norm tends to 1.
* :func:`theorem2_surface` -- the doubled, corner-smoothed triangle
  ``ABC`` cut into seven regions by ``DK``, ``EJ``, ``IL`` with prescribed
  masses, carrying ``F = x``, ``G = y``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import shapely
from scipy.spatial import Delaunay, cKDTree

from .mesh import MeshError, ScalarField, SurfaceMesh, build_marked_icosphere
from .poisson import preimage_counts

__all__ = [
    "SmoothStepProfile",
    "PROFILES",
    "get_profile",
    "alpha",
    "rho",
    "fg_plane",
    "ConstructionParams",
    "theorem1_fields",
    "theorem2_surface",
    "planar_region_mesh",
    "covering_count_diagnostic",
    "REGION_MASS",
]


# ---------------------------------------------------------------------------
# smooth steps

def _exp_alpha(s):
    s = np.asarray(s, dtype=float)
    out = np.where(s >= 1.0, 1.0, 0.0)
    mid = (s > 0.0) & (s < 1.0)
    sm = s[mid]
    with np.errstate(over="ignore", divide="ignore"):
        h0 = np.exp(-1.0 / sm)
        h1 = np.exp(-1.0 / (1.0 - sm))
    out[mid] = h0 / (h0 + h1)
    return out


def _exp_dalpha(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    mid = (s > 0.0) & (s < 1.0)
    sm = s[mid]
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        h0 = np.exp(-1.0 / sm)
        h1 = np.exp(-1.0 / (1.0 - sm))
        d = (h0 / sm**2 * h1 + h0 * h1 / (1.0 - sm) ** 2) / (h0 + h1) ** 2
    out[mid] = np.nan_to_num(d)
    return out


def _poly7_alpha(s):
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    # clip: round-off near s = 1 can overshoot by a few ulps
    return np.clip(s**4 * (35.0 - 84.0 * s + 70.0 * s**2 - 20.0 * s**3), 0.0, 1.0)


def _poly7_dalpha(s):
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return 140.0 * s**3 * (1.0 - s) ** 3


@dataclass(frozen=True)
class SmoothStepProfile:
    """A monotone step ``alpha``: 0 on ``s <= 0``, 1 on ``s >= 1``, increasing in between."""

    name: str
    func: object
    deriv: object

    def __call__(self, s):
        return self.func(s)


PROFILES = {
    # h(s) / (h(s) + h(1-s)), h(s) = exp(-1/s): flat to all orders at 0 and 1
    "exp": SmoothStepProfile("exp", _exp_alpha, _exp_dalpha),
    # degree-7 smoothstep, C^3 at the ends
    "poly7": SmoothStepProfile("poly7", _poly7_alpha, _poly7_dalpha),
}


def get_profile(profile) -> SmoothStepProfile:
    if isinstance(profile, SmoothStepProfile):
        return profile
    try:
        return PROFILES[profile]
    except KeyError:
        raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}") from None


def alpha(profile, s):
    a = get_profile(profile)(s)
    return float(a) if np.ndim(a) == 0 else a


def rho(profile, x, y):
    """``alpha(2x^2 + 2y^2 - 1) * alpha((x + y) / r)``; zero on ``x^2 + y^2 <= 1/2``."""
    prof = get_profile(profile)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    r2 = x * x + y * y
    out = np.zeros(x.shape)
    live = r2 > 0.5
    r = np.sqrt(r2[live])
    out[live] = prof(2.0 * r2[live] - 1.0) * prof((x[live] + y[live]) / r)
    return float(out) if out.ndim == 0 else out


def fg_plane(profile, x, y):
    """The fold ``(f, g)`` of the unit disk onto the closed triangle.

    ``f`` vanishes on ``x <= 0`` and ``g`` on ``y <= 0``; elsewhere they split
    ``rho`` in the ratio ``alpha(x/r) : alpha(y/r)``.
    """
    prof = get_profile(profile)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x.shape
    x, y = x.ravel(), y.ravel()
    r2 = x * x + y * y
    if np.any(r2 > 1.0 + 1e-12):
        raise ValueError("fg_plane is defined on the closed unit disk")
    rh = np.asarray(rho(prof, x, y), dtype=float)
    f = np.zeros(x.shape)
    g = np.zeros(x.shape)
    live = rh > 0.0
    r = np.sqrt(r2[live])
    ax = prof(x[live] / r)
    ay = prof(y[live] / r)
    den = ax + ay
    fx = live.copy()
    fx[live] = x[live] > 0.0
    gy = live.copy()
    gy[live] = y[live] > 0.0
    if np.any(den[fx[live] | gy[live]] <= 0.0):
        raise ArithmeticError("vanishing denominator on an active branch")
    f[fx] = rh[fx] * ax[fx[live]] / den[fx[live]]
    g[gy] = rh[gy] * ay[gy[live]] / den[gy[live]]
    # On the open quadrant f + g = rho; take the larger share as rho minus
    # the smaller so that f + g == 1 holds exactly on the rim where rho == 1.
    both = fx & gy
    g_big = both & (g >= f)
    f_big = both & ~g_big
    g[g_big] = rh[g_big] - f[g_big]
    f[f_big] = rh[f_big] - g[f_big]
    if shape == ():
        return float(f[0]), float(g[0])
    return f.reshape(shape), g.reshape(shape)


# ---------------------------------------------------------------------------
# parameters

@dataclass(frozen=True)
class ConstructionParams:
    """Refinement level, triangle cut-off ``epsilon`` and smooth-step profile."""

    level: int = 5
    epsilon: float = 0.1
    profile: str = "exp"

    def __post_init__(self):
        if int(self.level) != self.level or self.level < 0:
            raise ValueError("level must be a non-negative integer")
        if not 0.0 < self.epsilon < 0.25:
            raise ValueError("epsilon must satisfy 0 < epsilon < 1/4")
        get_profile(self.profile)


P1, P2, P3 = (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)


def theorem1_fields(params: ConstructionParams | None = None):
    """Marked icosphere with ``F = f o P`` and ``G = g o P``.

    Returns
    -------
    mesh : SurfaceMesh
        Markers are ``(1,0,0), (0,1,0), (0,0,1)`` in that order.
    F, G : ScalarField
    """
    params = params or ConstructionParams()
    mesh = build_marked_icosphere(params.level, (P1, P2, P3))
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    # projections of snapped unit vectors may exceed the disk by an ulp
    scale = np.maximum(1.0, np.hypot(x, y))
    f, g = fg_plane(params.profile, x / scale, y / scale)
    mesh.metadata.update(construction="theorem1", profile=params.profile)
    return mesh, ScalarField(mesh, f), ScalarField(mesh, g)


# ---------------------------------------------------------------------------
# the seven-region triangle

REGION_MASS = {1: 0.2, 2: 0.2, 3: 0.2, 4: 0.1, 5: 0.1, 6: 0.1, 7: 0.1}


def _spacing(level: int) -> float:
    return 0.6 / 2**level


class _Boundary:
    """Corner-smoothed triangle boundary, CCW, as an indexable point chain."""

    def __init__(self, eps: float, radius: float, h: float):
        A, C, B = np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])
        corners = [A, C, B]
        # special points on each straight side, listed in travel order
        specials = [
            [(eps, 0.0), (1.0 - eps, 0.0)],          # A -> C: I, J
            [(1.0 - eps, eps), (eps, 1.0 - eps)],    # C -> B: K, L
            [(0.0, 1.0 - eps), (0.0, eps)],          # B -> A: E, D
        ]
        arcs = []
        for i, P in enumerate(corners):
            prev_pt, next_pt = corners[i - 1], corners[(i + 1) % 3]
            u = (prev_pt - P) / np.linalg.norm(prev_pt - P)
            v = (next_pt - P) / np.linalg.norm(next_pt - P)
            theta = math.acos(float(np.clip(u @ v, -1.0, 1.0)))
            d = radius / math.tan(theta / 2.0)
            bis = (u + v) / np.linalg.norm(u + v)
            center = P + radius / math.sin(theta / 2.0) * bis
            t_in, t_out = P + d * u, P + d * v
            a0 = math.atan2(*(t_in - center)[::-1])
            sweep = math.pi - theta
            n = max(2, math.ceil(radius * sweep / h))
            ang = a0 + sweep * np.arange(n + 1) / n
            pts = center + radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
            pts[0], pts[-1] = t_in, t_out
            arcs.append(pts)
        self.tangent_distance = [float(np.linalg.norm(arcs[i][0] - corners[i])) for i in range(3)]

        pts, side, param, names = [], [], [], {}
        labels = [("I", "J"), ("K", "L"), ("E", "D")]
        for i in range(3):
            for p in arcs[i][:-1]:
                pts.append(p)
                side.append(-1)
                param.append(0.0)
            start, end = arcs[i][-1], arcs[(i + 1) % 3][0]
            length = float(np.linalg.norm(end - start))
            knots = [start] + [np.array(s) for s in specials[i]] + [end]
            for j in range(len(knots) - 1):
                p0, p1 = knots[j], knots[j + 1]
                n = max(1, math.ceil(np.linalg.norm(p1 - p0) / h))
                for k in range(n):
                    if k == 0 and j > 0:
                        q = p0  # exact special point
                        names[labels[i][j - 1]] = len(pts)
                    else:
                        q = p0 + (p1 - p0) * (k / n)
                    pts.append(np.array(q, dtype=float))
                    side.append(i)
                    param.append(float(np.linalg.norm(q - start)) / length)
        self.points = np.array(pts)
        self.side = np.array(side)
        self.param = np.array(param)
        self.names = names


_SIDE_NORMALS = (
    np.array([0.0, -1.0]),
    np.array([1.0, 1.0]) / math.sqrt(2.0),
    np.array([-1.0, 0.0]),
)


def _bulge(points, side, param, amount: float) -> np.ndarray:
    """Push straight-side boundary points outward so each is a strict hull vertex."""
    out = np.array(points, dtype=float)
    side, param = np.asarray(side), np.asarray(param)
    for i, nrm in enumerate(_SIDE_NORMALS):
        m = side == i
        t = param[m]
        out[m] += (amount * 4.0 * t * (1.0 - t))[:, None] * nrm
    return out


def _segment_chain(p_start, p_end, h, fix):
    """Points strictly between ``p_start`` and ``p_end`` spaced at most ``h``."""
    n = max(1, math.ceil(math.dist(p_start, p_end) / h))
    s = np.arange(1, n) / n
    pts = np.asarray(p_start) + np.outer(s, np.asarray(p_end) - np.asarray(p_start))
    return fix(pts)


def planar_region_mesh(eps: float, level: int, radius: float | None = None):
    """Conforming triangulation of the smoothed triangle with the three cuts as edges.

    Returns a dict with planar ``points``, CCW ``triangles``, boolean
    ``boundary`` mask, per-triangle ``region`` labels 1..7, the boundary
    chain ``boundary_chain`` and geometric data.
    """
    if not 0.0 < eps < 0.25:
        raise ValueError("epsilon must satisfy 0 < epsilon < 1/4")
    h = _spacing(level)
    radius = eps / 4.0 if radius is None else radius
    bd = _Boundary(eps, radius, h)
    if max(bd.tangent_distance) >= eps:
        raise ValueError("corner smoothing radius too large: arcs would meet the cuts")
    nb = len(bd.points)
    nm = bd.names
    X1 = np.array([eps, eps])
    X2 = np.array([1.0 - 2.0 * eps, eps])
    X3 = np.array([eps, 1.0 - 2.0 * eps])

    def on_y(p):
        p = np.array(p, dtype=float)
        p[:, 1] = eps
        return p

    def on_x(p):
        p = np.array(p, dtype=float)
        p[:, 0] = eps
        return p

    def on_diag(p):
        p = np.array(p, dtype=float)
        p[:, 1] = (1.0 - eps) - p[:, 0]
        return p

    points = [bd.points, np.array([X1, X2, X3])]
    n_pts = nb + 3
    ix = {"X1": nb, "X2": nb + 1, "X3": nb + 2}
    # (start, end, snap) for each straight piece of the three cuts
    pieces = [
        ("D", "X1", on_y), ("X1", "X2", on_y), ("X2", "K", on_y),
        ("I", "X1", on_x), ("X1", "X3", on_x), ("X3", "L", on_x),
        ("E", "X3", on_diag), ("X3", "X2", on_diag), ("X2", "J", on_diag),
    ]
    lines = []  # lists of point indices along each cut piece
    for a, b, snap in pieces:
        ia = nm[a] if a in nm else ix[a]
        ib = nm[b] if b in nm else ix[b]
        pa = bd.points[ia] if ia < nb else {nb: X1, nb + 1: X2, nb + 2: X3}[ia]
        pb = bd.points[ib] if ib < nb else {nb: X1, nb + 1: X2, nb + 2: X3}[ib]
        inner = _segment_chain(pa, pb, h, snap)
        idx = list(range(n_pts, n_pts + len(inner)))
        points.append(inner)
        n_pts += len(inner)
        lines.append(([ia] + idx + [ib], snap))

    # interior lattice kept clear of the boundary and the cuts
    poly = shapely.Polygon(bd.points)
    cuts = shapely.MultiLineString([
        [(0.0, eps), (1.0 - eps, eps)],
        [(eps, 0.0), (eps, 1.0 - eps)],
        [(0.0, 1.0 - eps), (1.0 - eps, 0.0)],
    ])
    dy = h * math.sqrt(3.0) / 2.0
    ys = np.arange(dy / 2.0, 1.0, dy)
    grid = []
    for j, yv in enumerate(ys):
        xs = np.arange((j % 2) * h / 2.0 + h / 4.0, 1.0, h)
        grid.append(np.stack([xs, np.full_like(xs, yv)], axis=1))
    grid = np.concatenate(grid)
    gp = shapely.points(grid)
    keep = (
        shapely.contains_xy(poly, grid[:, 0], grid[:, 1])
        & (shapely.distance(gp, poly.exterior) >= 0.6 * h)
        & (shapely.distance(gp, cuts) >= 0.6 * h)
    )
    points.append(grid[keep])
    pts = np.concatenate(points)
    is_bd = np.zeros(len(pts), dtype=bool)
    is_bd[:nb] = True
    chain = list(range(nb))  # boundary cycle, CCW
    side = list(bd.side)
    param = list(bd.param)

    for _attempt in range(50):
        bpts = pts.copy()
        bpts[chain] = _bulge(pts[chain], side, param, 0.05 * h)
        tri = Delaunay(bpts)
        simp = tri.simplices
        if np.unique(simp).size != len(pts):
            raise MeshError("triangulation dropped input points")
        e = np.sort(simp[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        have = set(map(tuple, e.tolist()))
        new_pts = []
        # cut edges that Delaunay did not recover are split at their midpoints
        for li, (seq, snap) in enumerate(lines):
            out = [seq[0]]
            for a, b in zip(seq[:-1], seq[1:]):
                if (min(a, b), max(a, b)) not in have:
                    m = snap(0.5 * (pts[a] + pts[b])[None, :])[0]
                    new_pts.append(m)
                    out.append(len(pts) + len(new_pts) - 1)
                out.append(b)
            lines[li] = (out, snap)
        bd_edges = set()
        new_chain, new_side, new_param = [], [], []
        for k in range(len(chain)):
            a, b = chain[k], chain[(k + 1) % len(chain)]
            new_chain.append(a)
            new_side.append(side[k])
            new_param.append(param[k])
            bd_edges.add((min(a, b), max(a, b)))
            if (min(a, b), max(a, b)) not in have:
                new_pts.append(0.5 * (pts[a] + pts[b]))
                new_chain.append(len(pts) + len(new_pts) - 1)
                s, s_next = side[k], side[(k + 1) % len(chain)]
                # the arc's tangent point closes the straight side at parameter 1
                nxt = param[(k + 1) % len(chain)] if s_next == s else 1.0
                new_side.append(s)
                new_param.append(0.5 * (param[k] + nxt) if s >= 0 else 0.0)
        # chords: interior edges joining two boundary points
        # chords: interior edges joining two boundary points would be shared by
        # both sheets after doubling; break each with a point just inside it
        center = pts[chain].mean(axis=0)
        for a, b in sorted(have):
            if is_bd[a] and is_bd[b] and (a, b) not in bd_edges:
                m = 0.5 * (pts[a] + pts[b])
                inward = (center - m) / np.linalg.norm(center - m)
                new_pts.append(m + 0.3 * np.linalg.norm(pts[b] - pts[a]) * inward)
        if not new_pts:
            break
        d, _ = cKDTree(pts).query(np.array(new_pts))
        if d.min() <= 1e-12:
            raise MeshError("refinement stalled: repeated insertion point")
        n_old = len(pts)
        pts = np.concatenate([pts, np.array(new_pts)])
        nb_flag = np.zeros(len(pts), dtype=bool)
        nb_flag[:n_old] = is_bd
        nb_flag[new_chain] = True
        is_bd = nb_flag
        chain, side, param = new_chain, new_side, new_param
    else:
        raise MeshError("could not recover the cut edges")

    # orient CCW in true coordinates
    a, b, c = pts[simp[:, 0]], pts[simp[:, 1]], pts[simp[:, 2]]
    area2 = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])
    flip = area2 < 0
    simp = simp.copy()
    simp[flip] = simp[flip][:, [0, 2, 1]]
    area = 0.5 * np.abs(area2)
    if np.any(area <= 1e-14):
        raise MeshError("degenerate planar triangle")

    cx, cy = (a + b + c).T / 3.0
    left, bottom, top = cx < eps, cy < eps, cx + cy > 1.0 - eps
    region = np.full(len(simp), 7)
    region[left & bottom] = 1
    region[left & top] = 2
    region[bottom & top] = 3
    region[left & ~bottom & ~top] = 4
    region[top & ~left & ~bottom] = 5
    region[bottom & ~left & ~top] = 6
    bchain = pts[chain]
    shoelace = 0.5 * math.fsum(
        (bchain[:, 0] * np.roll(bchain[:, 1], -1) - np.roll(bchain[:, 0], -1) * bchain[:, 1]).tolist()
    )
    return {
        "points": pts,
        "triangles": simp,
        "boundary": is_bd,
        "boundary_chain": np.array(chain),
        "region": region,
        "area": area,
        "area_U": shoelace,
        "radius": radius,
        "spacing": h,
        "cuts": {name: seq for name, (seq, _) in zip(
            ["DK0", "DK1", "DK2", "IL0", "IL1", "IL2", "EJ0", "EJ1", "EJ2"], lines)},
    }


def theorem2_surface(params: ConstructionParams | None = None):
    """Doubled seven-region triangle with ``F = x``, ``G = y``.

    Two copies of the planar mesh, the second with reversed orientation, are
    glued along the boundary of the smoothed triangle.  Each region's two
    copies carry 2/10 (corner regions) or 1/10 (the others) of the mass,
    spread in proportion to planar area.  The third coordinate of a vertex is
    its sheet sign (0 on the seam).

    Raises
    ------
    ValueError
        If ``epsilon`` is outside ``(0, 1/4)``.
    """
    params = params or ConstructionParams()
    eps = params.epsilon
    pm = planar_region_mesh(eps, params.level)
    pts, tri, is_bd, region, area = pm["points"], pm["triangles"], pm["boundary"], pm["region"], pm["area"]
    n = len(pts)
    interior = np.flatnonzero(~is_bd)
    second = np.arange(n)
    second[interior] = n + np.arange(len(interior))
    verts = np.concatenate([
        np.column_stack([pts, np.where(is_bd, 0.0, 1.0)]),
        np.column_stack([pts[interior], -np.ones(len(interior))]),
    ])
    tris = np.concatenate([tri, second[tri][:, [0, 2, 1]]])
    region_area = {k: math.fsum(area[region == k].tolist()) for k in REGION_MASS}
    if min(region_area.values()) <= 0.0:
        raise MeshError("a region received no triangles; increase the level")
    w_half = np.array([REGION_MASS[k] / (2.0 * region_area[k]) for k in region]) * area
    weights = np.concatenate([w_half, w_half])
    labels = np.concatenate([region, region])
    meta = {
        "construction": "theorem2",
        "epsilon": eps,
        "level": params.level,
        "spacing": pm["spacing"],
        "smoothing_radius": pm["radius"],
        "area_U": pm["area_U"],
        "region_area": region_area,
        "region": labels,
    }
    mesh = SurfaceMesh(verts, tris, weights, (), 1.0, meta)
    x, y = verts[:, 0], verts[:, 1]
    return mesh, ScalarField(mesh, x), ScalarField(mesh, y)


# ---------------------------------------------------------------------------
# covering count

def open_simplex_mask(points, margin: float = 1e-12) -> np.ndarray:
    """True for points strictly inside ``{u, v > 0, u + v < 1}``."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    return (p[:, 0] > margin) & (p[:, 1] > margin) & (p[:, 0] + p[:, 1] < 1.0 - margin)


def covering_count_diagnostic(F: ScalarField, G: ScalarField, samples: int = 10_000, seed: int = 0) -> float:
    """Mean number of preimages under ``(F, G)`` of uniform points of the open triangle.

    For the folded sphere every interior point has two preimages, so the
    mean is close to 2 once the mesh resolves the fold.
    """
    rng = np.random.default_rng(seed)
    uv = rng.random((samples, 2))
    flip = uv.sum(axis=1) > 1.0
    uv[flip] = 1.0 - uv[flip]
    ok = open_simplex_mask(uv)
    counts = preimage_counts(F, G, uv[ok])
    return float(counts.mean())

"""Immutable 3D scene of extruded buildings over a flat ground plane.

A scene is a set of planar convex facets (building walls, roofs, and the
ground rectangle), each tagged with a material, plus the 2D building
footprints used for inside-building queries. All queries are read-only,
so a constructed scene can be shared freely across worker processes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .materials import Material

# Ray origins are nudged forward by this much to suppress self-hits after
# a reflection; well below the 20 m grid scale, well above double-precision
# noise at kilometer scales.
RAY_EPS_M = 1e-6

_COPLANAR_TOL_M = 1e-9


def _cross_last(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross product over the last axis (np.cross without its axis shuffling)."""
    return np.stack(
        (
            a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
            a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
            a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
        ),
        axis=-1,
    )


def _as_points(a, dim: int) -> np.ndarray:
    pts = np.asarray(a, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != dim or pts.shape[0] < 3:
        raise ValueError(f"expected an (n, {dim}) array of >= 3 points, got shape {pts.shape}")
    return pts


def polygon_area_2d(poly: np.ndarray) -> float:
    """Signed shoelace area of a 2D polygon (positive when CCW)."""
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _newell_normal(vertices: np.ndarray) -> np.ndarray:
    """Polygon normal via Newell's method (magnitude = 2 * area)."""
    v = vertices
    w = np.roll(v, -1, axis=0)
    n = np.array(
        [
            np.sum((v[:, 1] - w[:, 1]) * (v[:, 2] + w[:, 2])),
            np.sum((v[:, 2] - w[:, 2]) * (v[:, 0] + w[:, 0])),
            np.sum((v[:, 0] - w[:, 0]) * (v[:, 1] + w[:, 1])),
        ]
    )
    return n


def point_in_polygon_2d(point, poly: np.ndarray, boundary_tol: float = 1e-9) -> bool:
    """Strict point-in-polygon test (boundary points count as outside)."""
    px, py = float(point[0]), float(point[1])
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)

    # Boundary proximity check: distance to each edge segment.
    ex, ey = xn - x, yn - y
    ee = ex * ex + ey * ey
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.clip(((px - x) * ex + (py - y) * ey) / np.where(ee > 0, ee, 1.0), 0.0, 1.0)
    dx, dy = px - (x + t * ex), py - (y + t * ey)
    if np.any(dx * dx + dy * dy < boundary_tol * boundary_tol):
        return False

    crossing = (y > py) != (yn > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = x + (py - y) * ex / np.where(ey != 0, ey, 1.0)
    return bool(np.count_nonzero(crossing & (px < xi)) % 2 == 1)


def _segments_properly_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def polygon_is_simple(poly: np.ndarray) -> bool:
    """True when no two non-adjacent edges of the 2D polygon cross."""
    n = len(poly)
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_properly_intersect(*edges[i], *edges[j]):
                return False
    return True


def polygon_is_convex_2d(poly: np.ndarray, tol: float = 1e-12) -> bool:
    e = np.roll(poly, -1, axis=0) - poly
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    scale = np.max(np.abs(cross)) if len(cross) else 0.0
    return bool(np.all(cross >= -tol * max(scale, 1.0)))


def _point_in_triangle_inclusive(p, a, b, c) -> bool:
    """Containment for a CCW triangle, edges and vertices included."""

    def cr(u, v, w):
        return (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0])

    tol = 1e-12 * (abs(cr(a, b, c)) + 1e-30)
    return cr(a, b, p) >= -tol and cr(b, c, p) >= -tol and cr(c, a, p) >= -tol


def ear_clip_2d(poly: np.ndarray) -> list[np.ndarray]:
    """Triangulate a simple CCW 2D polygon by ear clipping."""
    idx = list(range(len(poly)))
    tris: list[np.ndarray] = []

    def is_ear(i0: int, i1: int, i2: int) -> bool:
        a, b, c = poly[i0], poly[i1], poly[i2]
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if cross <= 1e-12:
            return False
        # Any remaining vertex on or inside the candidate triangle blocks
        # the ear; boundary-inclusive so collinear diagonals are rejected.
        for j in idx:
            if j in (i0, i1, i2):
                continue
            if _point_in_triangle_inclusive(poly[j], a, b, c):
                return False
        return True

    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10000:
            raise ValueError("ear clipping failed; footprint may be degenerate")
        for k in range(len(idx)):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            if is_ear(i0, i1, i2):
                tris.append(np.array([poly[i0], poly[i1], poly[i2]]))
                del idx[k]
                break
        else:
            raise ValueError("ear clipping found no ear; footprint may self-intersect")
    tris.append(np.array([poly[idx[0]], poly[idx[1]], poly[idx[2]]]))
    return tris


@dataclass(eq=False)
class Facet:
    """Planar convex polygon with an outward unit normal and a material.

    Vertices must be coplanar (within 1e-9 m), wound counter-clockwise
    around the normal, strictly convex up to collinearity, and enclose a
    positive area. Violations raise at construction so that downstream ray
    queries never see a degenerate facet.
    """

    vertices: np.ndarray
    material: Material
    normal: np.ndarray = field(init=False)
    plane_offset: float = field(init=False)
    area: float = field(init=False)

    def __post_init__(self) -> None:
        v = _as_points(self.vertices, 3).copy()
        n = _newell_normal(v)
        norm = float(np.linalg.norm(n))
        if norm < 1e-12:
            raise ValueError("degenerate facet: zero area")
        n = n / norm
        self.area = 0.5 * norm

        d = v - v[0]
        if np.max(np.abs(d @ n)) > _COPLANAR_TOL_M:
            raise ValueError("facet vertices are not coplanar within 1e-9 m")

        # Convexity and winding: consecutive edge cross products must align
        # with the Newell normal.
        e = np.roll(v, -1, axis=0) - v
        cr = np.cross(e, np.roll(e, -1, axis=0)) @ n
        if np.any(cr < -1e-9 * max(float(np.max(np.abs(cr))), 1.0)):
            raise ValueError("facet polygon is not convex")

        v.setflags(write=False)
        n.setflags(write=False)
        self.vertices = v
        self.normal = n
        self.plane_offset = float(n @ v[0])

    def contains_point(self, point, tol: float = 1e-9) -> bool:
        """True when an on-plane point lies inside the polygon (edges count)."""
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        rel = np.asarray(point, dtype=float) - v
        s = np.cross(e, rel) @ self.normal
        scale = np.linalg.norm(e, axis=1) * (np.linalg.norm(rel, axis=1) + 1e-12)
        return bool(np.all(s >= -tol * np.maximum(scale, 1e-12)))


@dataclass(eq=False)
class Building:
    """Extruded prism: simple 2D footprint (CCW, meters ENU) and a height."""

    footprint: np.ndarray
    height: float

    def __post_init__(self) -> None:
        fp = _as_points(self.footprint, 2).copy()
        if self.height <= 0:
            raise ValueError(f"building height must be > 0, got {self.height}")
        area = polygon_area_2d(fp)
        if abs(area) < 1e-9:
            raise ValueError("building footprint is degenerate (zero area)")
        if area < 0:
            fp = fp[::-1].copy()
        if not polygon_is_simple(fp):
            raise ValueError("building footprint is self-intersecting")
        fp.setflags(write=False)
        self.footprint = fp

    @property
    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        return self.footprint.min(axis=0), self.footprint.max(axis=0)


class _XYGridIndex:
    """Uniform 2D grid over facet XY bounding boxes.

    Binning is conservative (a facet lands in every cell its XY AABB
    touches), so candidate sets are always a superset of the true hits and
    indexed queries return exactly what a brute-force scan returns.
    """

    def __init__(self, aabb_min: np.ndarray, aabb_max: np.ndarray, n_cells: int = 24):
        self.lo = aabb_min[:, :2].min(axis=0) - 1e-6
        self.hi = aabb_max[:, :2].max(axis=0) + 1e-6
        span = np.maximum(self.hi - self.lo, 1e-6)
        self.n = (max(1, n_cells), max(1, n_cells))
        self.cell = span / np.array(self.n, dtype=float)

        buckets: dict[tuple[int, int], list[int]] = {}
        for fid in range(len(aabb_min)):
            i0, j0 = self._cell_of(aabb_min[fid, :2])
            i1, j1 = self._cell_of(aabb_max[fid, :2])
            for i in range(i0, i1 + 1):
                for j in range(j0, j1 + 1):
                    buckets.setdefault((i, j), []).append(fid)
        self._buckets = {k: np.array(sorted(v), dtype=np.intp) for k, v in buckets.items()}

    def _cell_of(self, xy) -> tuple[int, int]:
        ij = np.floor((np.asarray(xy) - self.lo) / self.cell).astype(int)
        return (
            int(np.clip(ij[0], 0, self.n[0] - 1)),
            int(np.clip(ij[1], 0, self.n[1] - 1)),
        )

    def candidates(self, lo_xy, hi_xy) -> np.ndarray:
        """Sorted unique facet ids whose cells overlap the query XY box."""
        i0, j0 = self._cell_of(np.asarray(lo_xy) - 1e-9)
        i1, j1 = self._cell_of(np.asarray(hi_xy) + 1e-9)
        parts = [
            self._buckets[(i, j)]
            for i in range(i0, i1 + 1)
            for j in range(j0, j1 + 1)
            if (i, j) in self._buckets
        ]
        if not parts:
            return np.empty(0, dtype=np.intp)
        if len(parts) == 1:
            return parts[0]
        return np.unique(np.concatenate(parts))


class Scene:
    """Immutable facet soup with vectorized ray/occlusion/point queries.

    Build one with :meth:`Scene.build`; direct construction takes a
    pre-assembled facet list. Each building contributes one wall facet per
    footprint edge plus roof facets; the ground plane at z=0 spans
    ``bounds``.
    """

    def __init__(self, facets: list[Facet], buildings: list[Building], ground_material: Material, bounds: np.ndarray):
        if not facets:
            raise ValueError("a scene needs at least one facet (the ground plane)")
        self.facets: tuple[Facet, ...] = tuple(facets)
        self.buildings: tuple[Building, ...] = tuple(buildings)
        self.ground_material = ground_material
        self.bounds = np.asarray(bounds, dtype=float)  # [[xmin, ymin], [xmax, ymax]]

        f = len(facets)
        self.facet_normals = np.stack([fc.normal for fc in facets])
        self.facet_offsets = np.array([fc.plane_offset for fc in facets])
        self.facet_materials: tuple[Material, ...] = tuple(fc.material for fc in facets)

        emax = max(len(fc.vertices) for fc in facets)
        verts = np.empty((f, emax, 3))
        for i, fc in enumerate(facets):
            k = len(fc.vertices)
            verts[i, :k] = fc.vertices
            verts[i, k:] = fc.vertices[-1]  # padding edges collapse to zero length
        self.facet_vertices = verts
        self.facet_edges = np.roll(verts, -1, axis=1) - verts
        self.facet_edges[:, -1, :] = verts[:, 0, :] - verts[:, -1, :]
        self._edge_norms = np.linalg.norm(self.facet_edges, axis=2)

        self.aabb_min = verts.min(axis=1)
        self.aabb_max = verts.max(axis=1)
        self._index = _XYGridIndex(self.aabb_min, self.aabb_max)

        for arr in (self.facet_normals, self.facet_offsets, self.facet_vertices, self.facet_edges):
            arr.setflags(write=False)

        self._max_height = max((b.height for b in buildings), default=0.0)

    @classmethod
    def build(
        cls,
        buildings: list[Building],
        ground_material: Material,
        building_material: Material,
        bounds=None,
        margin: float = 50.0,
    ) -> "Scene":
        """Assemble ground + wall + roof facets from extruded footprints.

        ``bounds`` is the 2D ground extent [[xmin, ymin], [xmax, ymax]];
        when omitted it is derived from the building footprints plus
        ``margin``. Given bounds are expanded as needed so every footprint
        sits on ground.
        """
        if bounds is None:
            if buildings:
                los = np.array([b.aabb[0] for b in buildings]).min(axis=0)
                his = np.array([b.aabb[1] for b in buildings]).max(axis=0)
            else:
                los, his = np.zeros(2), np.zeros(2)
            bounds = np.array([los - margin, his + margin])
        else:
            bounds = np.array(bounds, dtype=float)
            for b in buildings:
                lo, hi = b.aabb
                bounds[0] = np.minimum(bounds[0], lo - 1.0)
                bounds[1] = np.maximum(bounds[1], hi + 1.0)

        (xmin, ymin), (xmax, ymax) = bounds
        ground = Facet(
            np.array(
                [[xmin, ymin, 0.0], [xmax, ymin, 0.0], [xmax, ymax, 0.0], [xmin, ymax, 0.0]]
            ),
            ground_material,
        )

        facets: list[Facet] = [ground]
        for b in buildings:
            fp, h = b.footprint, b.height
            for i in range(len(fp)):
                x1, y1 = fp[i]
                x2, y2 = fp[(i + 1) % len(fp)]
                facets.append(
                    Facet(
                        np.array(
                            [[x1, y1, 0.0], [x2, y2, 0.0], [x2, y2, h], [x1, y1, h]]
                        ),
                        building_material,
                    )
                )
            roof_polys = [fp] if polygon_is_convex_2d(fp) else ear_clip_2d(fp)
            for poly in roof_polys:
                roof = np.column_stack([poly, np.full(len(poly), h)])
                facets.append(Facet(roof, building_material))
        return cls(facets, buildings, ground_material, bounds)

    def __len__(self) -> int:
        return len(self.facets)

    @property
    def digest(self) -> str:
        """SHA-256 over the geometric and material content; stable across reruns."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.bounds).tobytes())
        for fc in self.facets:
            h.update(np.ascontiguousarray(fc.vertices).tobytes())
            h.update(fc.material.name.encode())
            h.update(np.float64(fc.material.rel_permittivity).tobytes())
            h.update(np.float64(fc.material.conductivity_s_m).tobytes())
            h.update(b"1" if fc.material.perfect_reflector else b"0")
        return h.hexdigest()

    # ---- vectorized kernels ----

    def points_in_facets(self, points: np.ndarray, ids: np.ndarray) -> np.ndarray:
        """Inside-polygon mask for on-plane ``points[k]`` against facet ``ids[k]``."""
        verts = self.facet_vertices[ids]
        edges = self.facet_edges[ids]
        rel = points[:, None, :] - verts
        s = np.einsum("kev,kv->ke", _cross_last(edges, rel), self.facet_normals[ids])
        scale = self._edge_norms[ids] * (np.linalg.norm(rel, axis=2) + 1e-12)
        return np.all(s >= -1e-9 * np.maximum(scale, 1e-12), axis=1)

    def segments_occluded(self, p: np.ndarray, q: np.ndarray, exclude=None, eps: float = RAY_EPS_M) -> np.ndarray:
        """Open-segment occlusion for a batch of segments against every facet.

        ``p`` and ``q`` are (S, 3); ``exclude`` is an optional length-S list
        of facet-id tuples to skip per segment (the segment's own specular
        interaction facets). Returns a boolean (S,) mask. Equivalent to
        calling :func:`occluded` per segment, without the per-call overhead.
        """
        p = np.atleast_2d(np.asarray(p, dtype=float))
        q = np.atleast_2d(np.asarray(q, dtype=float))
        d = q - p
        length = np.linalg.norm(d, axis=1)
        n = self.facet_normals
        denom = d @ n.T
        num = self.facet_offsets[None, :] - p @ n.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(denom) > 1e-300, num / denom, np.inf)
        tlo = (eps / np.maximum(length, 1e-300))[:, None]
        sel = (t > tlo) & (t < 1.0 - tlo) & np.isfinite(t) & (length > 2 * eps)[:, None]
        if exclude is not None:
            for s, ids in enumerate(exclude):
                if ids:
                    sel[s, list(ids)] = False
        if not np.any(sel):
            return np.zeros(len(p), dtype=bool)

        t_safe = np.where(sel, t, 0.5)
        pts = p[:, None, :] + t_safe[:, :, None] * d[:, None, :]
        rel = pts[:, :, None, :] - self.facet_vertices[None, :, :, :]
        s_val = np.einsum(
            "sfev,fv->sfe", _cross_last(self.facet_edges[None, :, :, :], rel), n
        )
        scale = self._edge_norms[None, :, :] * (np.linalg.norm(rel, axis=3) + 1e-12)
        inside = np.all(s_val >= -1e-9 * np.maximum(scale, 1e-12), axis=2)
        return np.any(sel & inside, axis=1)

    def _segment_hit_mask(self, p: np.ndarray, q: np.ndarray, ids: np.ndarray, eps: float) -> np.ndarray:
        """Which of facets ``ids`` the open segment (p, q) crosses."""
        d = q - p
        length = float(np.linalg.norm(d))
        if length <= 2 * eps:
            return np.zeros(len(ids), dtype=bool)
        n = self.facet_normals[ids]
        denom = n @ d
        num = self.facet_offsets[ids] - n @ p
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(denom) > 1e-300, num / denom, np.inf)
        tlo, thi = eps / length, 1.0 - eps / length
        sel = (t > tlo) & (t < thi) & np.isfinite(t)
        if not np.any(sel):
            return sel
        pts = p + t[sel, None] * d
        sel_ids = ids[sel]
        inside = self.points_in_facets(pts, sel_ids)
        out = np.zeros(len(ids), dtype=bool)
        out[np.flatnonzero(sel)[inside]] = True
        return out

    def segment_candidates(self, p, q) -> np.ndarray:
        lo = np.minimum(p[:2], q[:2])
        hi = np.maximum(p[:2], q[:2])
        return self._index.candidates(lo, hi)

    def first_hit(self, origin, direction, t_max: float = np.inf, exclude=(), use_index: bool = True):
        """Nearest facet hit along ``origin + t * direction`` for t > RAY_EPS_M.

        Returns ``(facet_id, t, point)`` or ``None``. With ``use_index=False``
        every facet is scanned; results are identical either way.
        """
        o = np.asarray(origin, dtype=float)
        d = np.asarray(direction, dtype=float)
        if use_index and np.isfinite(t_max):
            ids = self.segment_candidates(o, o + t_max * d)
        elif use_index:
            # Unbounded ray: clip to a segment long enough to reach any facet.
            lo3, hi3 = self.aabb_min.min(axis=0), self.aabb_max.max(axis=0)
            center = 0.5 * (lo3 + hi3)
            reach = float(np.linalg.norm(o - center) + np.linalg.norm(hi3 - lo3)) + 1.0
            far = o + reach * d
            ids = self.segment_candidates(np.minimum(o, far), np.maximum(o, far))
        else:
            ids = np.arange(len(self.facets), dtype=np.intp)
        if len(exclude):
            ids = ids[~np.isin(ids, np.fromiter(exclude, dtype=np.intp))]
        if len(ids) == 0:
            return None

        n = self.facet_normals[ids]
        denom = n @ d
        num = self.facet_offsets[ids] - n @ o
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(denom) > 1e-300, num / denom, np.inf)
        sel = (t > RAY_EPS_M) & (t < t_max) & np.isfinite(t)
        if not np.any(sel):
            return None
        pts = o + t[sel, None] * d
        inside = self.points_in_facets(pts, ids[sel])
        if not np.any(inside):
            return None
        t_in = t[sel][inside]
        ids_in = ids[sel][inside]
        pts_in = pts[inside]
        k = int(np.argmin(t_in))
        return int(ids_in[k]), float(t_in[k]), pts_in[k]


def ray_facet_intersect(origin, direction, facet: Facet, eps: float = RAY_EPS_M):
    """Intersect a ray with a single facet.

    Returns ``(t, point)`` for the smallest t > eps with the hit point on
    the facet polygon, or ``None``. ``direction`` must be unit length.
    """
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    denom = float(facet.normal @ d)
    if abs(denom) < 1e-300:
        return None
    t = (facet.plane_offset - float(facet.normal @ o)) / denom
    if not (t > eps and np.isfinite(t)):
        return None
    point = o + t * d
    if not facet.contains_point(point):
        return None
    return t, point


def occluded(p, q, scene: Scene, exclude=frozenset(), eps: float = RAY_EPS_M) -> bool:
    """True when the open segment (p, q) crosses any facet not in ``exclude``.

    ``exclude`` holds the facet ids on which p or q lie as specular
    interaction points; the eps end-shrink additionally guards facets that
    merely touch an endpoint.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    ids = scene.segment_candidates(p, q)
    if len(exclude):
        ids = ids[~np.isin(ids, np.fromiter(exclude, dtype=np.intp))]
    if len(ids) == 0:
        return False
    return bool(np.any(scene._segment_hit_mask(p, q, ids, eps)))


def is_inside_building(point, scene: Scene) -> bool:
    """True when (x, y) is strictly inside some footprint and 0 <= z < height."""
    p = np.asarray(point, dtype=float)
    z = p[2]
    if z < 0.0 or z >= scene._max_height:
        return False
    for b in scene.buildings:
        if not (0.0 <= z < b.height):
            continue
        lo, hi = b.aabb
        if p[0] < lo[0] or p[0] > hi[0] or p[1] < lo[1] or p[1] > hi[1]:
            continue
        if point_in_polygon_2d(p[:2], b.footprint):
            return True
    return False

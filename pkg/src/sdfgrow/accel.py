"""Acceleration structures: spatial hash grid, the cache of uncovered
intersections (with a rasterization prefilter to avoid the O(n^(d+1))
initialization), incremental cache updates, and sphere culling.
"""

from __future__ import annotations

import itertools
from collections import defaultdict

import numpy as np

from .core import DOMAIN_HI, DOMAIN_LO, SampleSet
from .geom import (
    DegenerateGeometryError,
    IntersectionCircle,
    pair_points_2d_batch,
    point_to_circle_distances,
    sphere_pair_circle_3d,
    sphere_pair_contact_point,
    sphere_triple_intersect_3d,
    triple_points_batch,
)


def raster_resolution_auto(n, dim):
    """Default per-axis raster resolution: 10 * n^(1/d), rounded up to the
    nearest power of two that is >= 64."""
    target = 10.0 * max(n, 1) ** (1.0 / dim)
    res = 64
    while res < target:
        res *= 2
    return res


class SpatialHashGrid:
    """Uniform hash grid keyed by axis-aligned bounding boxes."""

    def __init__(self, cell_size, dim):
        self.cell_size = float(cell_size)
        self.dim = dim
        self._cells = defaultdict(list)

    def _range(self, lo, hi):
        lo_i = np.floor(np.asarray(lo) / self.cell_size).astype(np.int64)
        hi_i = np.floor(np.asarray(hi) / self.cell_size).astype(np.int64)
        return [range(int(a), int(b) + 1) for a, b in zip(lo_i, hi_i)]

    def insert(self, key, lo, hi):
        for cell in itertools.product(*self._range(lo, hi)):
            self._cells[cell].append(key)

    def insert_ball(self, key, center, radius):
        center = np.asarray(center)
        self.insert(key, center - radius, center + radius)

    def query_bbox(self, lo, hi):
        out = set()
        for cell in itertools.product(*self._range(lo, hi)):
            out.update(self._cells.get(cell, ()))
        return np.sort(np.fromiter(out, dtype=np.intp, count=len(out)))

    def query_point(self, p):
        p = np.asarray(p)
        cell = tuple(np.floor(p / self.cell_size).astype(np.int64))
        got = self._cells.get(cell, ())
        return np.fromiter(got, dtype=np.intp, count=len(got))

    def cell_keys_of(self, points):
        """Integer cell coordinates of each point, as an (m, d) array."""
        return np.floor(np.asarray(points) / self.cell_size).astype(np.int64)


def build_ball_grid(sample_set: SampleSet, cell_size=None):
    """Spatial hash grid with one entry per sample ball bounding box."""
    pts = sample_set.points
    radii = sample_set.radii
    if cell_size is None:
        if len(sample_set) == 0:
            cell_size = 1.0
        else:
            lo = np.min(pts - radii[:, None], axis=0)
            hi = np.max(pts + radii[:, None], axis=0)
            cell_size = max(float(np.max(hi - lo)) / 24.0, 1e-6)
    grid = SpatialHashGrid(cell_size, sample_set.dim)
    for i in range(len(sample_set)):
        grid.insert_ball(i, pts[i], radii[i])
    return grid


def grid_points_uncovered(points, sample_set, grid, extra=None):
    """Coverage test for many points at once, using the ball grid to keep
    each test local.  ``extra`` optionally appends one more ball
    (center, radius) to the set."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    m = points.shape[0]
    out = np.ones(m, dtype=bool)
    if m == 0:
        return out
    tol = sample_set.tol_geom
    keys = grid.cell_keys_of(points)
    order = np.lexsort(keys.T[::-1])
    keys_sorted = keys[order]
    boundaries = np.nonzero(np.any(np.diff(keys_sorted, axis=0) != 0,
                                   axis=1))[0] + 1
    starts = np.concatenate([[0], boundaries, [m]])
    all_pts = sample_set.points
    all_radii = sample_set.radii
    for a, b in zip(starts[:-1], starts[1:]):
        rows = order[a:b]
        cell = tuple(keys_sorted[a])
        cand = np.fromiter(grid._cells.get(cell, ()), dtype=np.intp)
        if cand.size:
            d = np.linalg.norm(points[rows][:, None, :]
                               - all_pts[cand][None, :, :], axis=2)
            covered = np.any(d < all_radii[cand][None, :] - tol, axis=1)
            out[rows] = ~covered
    if extra is not None:
        c, r = extra
        d = np.linalg.norm(points - np.asarray(c)[None, :], axis=1)
        out &= ~(d < r - tol)
    return out


# ---------------------------------------------------------------------------
# the cache
# ---------------------------------------------------------------------------

class IntersectionCache:
    """Uncovered intersection points (and, in 3D, intersection circles with
    their coverage status) of a sample set, kept current across inserts.

    Points are append-only with an alive mask so row ids stay stable; every
    alive point passes the coverage test against the current set.
    """

    def __init__(self, sample_set: SampleSet, grid: SpatialHashGrid):
        self.dim = sample_set.dim
        self.n_synced = len(sample_set)
        self.grid = grid
        self._pts = np.empty((0, self.dim))
        self._hosts = []
        self._alive = np.empty((0,), dtype=bool)
        self._has_pos = np.empty((0,), dtype=bool)
        self._has_neg = np.empty((0,), dtype=bool)
        self._by_sphere = defaultdict(set)
        self.circles = {}          # (i, j) -> (IntersectionCircle, status)
        self._circ_by_sphere = defaultdict(set)
        self._circ_row = {}        # key -> row in the stacked circle arrays
        self._circ_centers = np.empty((0, 3))
        self._circ_radii = np.empty((0,))
        self._circ_normals = np.empty((0, 3))
        self._circ_alive = np.empty((0,), dtype=bool)
        self._circ_full = np.empty((0,), dtype=bool)
        self._circ_has_pos = np.empty((0,), dtype=bool)
        self._circ_has_neg = np.empty((0,), dtype=bool)
        self._circ_keys = []
        self._signs = sample_set.signs.copy()
        self._kdtrees = None

    def note_sign(self, sign):
        self._signs = np.append(self._signs, sign)

    # -- construction ------------------------------------------------------

    def add_points(self, pts, hosts_list, signs):
        if len(hosts_list) == 0:
            return
        pts = np.atleast_2d(pts)
        start = self._pts.shape[0]
        self._pts = np.vstack([self._pts, pts]) if start else pts.copy()
        self._alive = np.concatenate([self._alive,
                                      np.ones(len(hosts_list), dtype=bool)])
        hp = np.array([np.any(signs[list(h)] > 0) for h in hosts_list])
        hn = np.array([np.any(signs[list(h)] < 0) for h in hosts_list])
        self._has_pos = np.concatenate([self._has_pos, hp])
        self._has_neg = np.concatenate([self._has_neg, hn])
        for r, hosts in enumerate(hosts_list):
            self._hosts.append(tuple(int(h) for h in hosts))
            for h in hosts:
                self._by_sphere[int(h)].add(start + r)
        self._kdtrees = None

    def add_circle(self, key, circle, status):
        key = tuple(sorted(key))
        fresh = key not in self.circles
        self.circles[key] = (circle, status)
        for h in key:
            self._circ_by_sphere[int(h)].add(key)
        if fresh:
            self._circ_row[key] = len(self._circ_keys)
            self._circ_keys.append(key)
            self._circ_centers = np.vstack([self._circ_centers,
                                            circle.center[None, :]])
            self._circ_radii = np.append(self._circ_radii, circle.radius)
            self._circ_normals = np.vstack([self._circ_normals,
                                            circle.normal[None, :]])
            self._circ_alive = np.append(self._circ_alive, True)
            self._circ_full = np.append(self._circ_full, status == "full")
            hsigns = self._signs[list(key)]
            self._circ_has_pos = np.append(self._circ_has_pos,
                                           np.any(hsigns > 0))
            self._circ_has_neg = np.append(self._circ_has_neg,
                                           np.any(hsigns < 0))
        else:
            self._circ_full[self._circ_row[key]] = status == "full"
        self._kdtrees = None

    def set_circle_status(self, key, status):
        key = tuple(sorted(key))
        self.circles[key] = (self.circles[key][0], status)
        self._circ_full[self._circ_row[key]] = status == "full"

    def drop_circle(self, key):
        key = tuple(sorted(key))
        if key in self.circles:
            del self.circles[key]
            self._circ_alive[self._circ_row[key]] = False
            for h in key:
                self._circ_by_sphere[h].discard(key)

    def circles_touched_by_ball(self, center, radius, tol):
        """(swallowed keys, cut keys): live circles entirely inside the ball
        versus merely reached by its interior.  One vectorized pass."""
        rows = np.nonzero(self._circ_alive)[0]
        if rows.size == 0:
            return [], []
        v = np.asarray(center)[None, :] - self._circ_centers[rows]
        along = np.einsum("md,md->m", v, self._circ_normals[rows])
        u = v - along[:, None] * self._circ_normals[rows]
        nu = np.linalg.norm(u, axis=1)
        rho = self._circ_radii[rows]
        dmin = np.sqrt((nu - rho) ** 2 + along ** 2)
        dmax = np.sqrt((nu + rho) ** 2 + along ** 2)
        swallowed = rows[dmax < radius - tol]
        cut = rows[(dmin < radius - tol) & (dmax >= radius - tol)]
        return ([self._circ_keys[r] for r in swallowed],
                [self._circ_keys[r] for r in cut])

    def circle_extreme_candidates(self, p, include_partial, sign=None,
                                  tol=1e-6, include_degenerate=True):
        """Closest/farthest circle points for every open circle, vectorized.

        Returns (points (m, 3), distances (m,), circle keys).  Axis-degenerate
        circles (p on the axis, all points equidistant) contribute their
        deterministic reference point, or nothing when
        ``include_degenerate=False``.  ``sign`` keeps only circles with a
        host sphere of that sign.
        """
        from .geom import circle_reference_point
        mask = self._circ_alive.copy()
        if not include_partial:
            mask &= self._circ_full
        if sign is not None:
            mask &= self._circ_has_pos if sign > 0 else self._circ_has_neg
        rows = np.nonzero(mask)[0]
        if rows.size == 0:
            return (np.empty((0, 3)), np.empty((0,)), [])
        centers = self._circ_centers[rows]
        normals = self._circ_normals[rows]
        rho = self._circ_radii[rows]
        v = np.asarray(p)[None, :] - centers
        along = np.einsum("md,md->m", v, normals)
        u = v - along[:, None] * normals
        nu = np.linalg.norm(u, axis=1)
        ok = nu > tol
        pts = []
        dists = []
        keys = []
        if np.any(ok):
            w = np.nonzero(ok)[0]
            dirs = u[w] / nu[w][:, None]
            near = centers[w] + rho[w][:, None] * dirs
            far = centers[w] - rho[w][:, None] * dirs
            d_near = np.sqrt((nu[w] - rho[w]) ** 2 + along[w] ** 2)
            d_far = np.sqrt((nu[w] + rho[w]) ** 2 + along[w] ** 2)
            pts.extend((near, far))
            dists.extend((d_near, d_far))
            kk = [self._circ_keys[rows[r]] for r in w]
            keys.extend(kk)
            keys.extend(kk)
        if include_degenerate:
            for r in np.nonzero(~ok)[0]:
                circle = self.circles[self._circ_keys[rows[r]]][0]
                q = circle_reference_point(circle)
                pts.append(q[None, :])
                dists.append(np.array([np.linalg.norm(q - p)]))
                keys.append(self._circ_keys[rows[r]])
        if not pts:
            return (np.empty((0, 3)), np.empty((0,)), [])
        return np.vstack(pts), np.concatenate(dists), keys

    # -- queries -----------------------------------------------------------

    def alive_rows(self):
        return np.nonzero(self._alive)[0]

    def points_and_hosts(self):
        rows = self.alive_rows()
        return [(self._pts[r], self._hosts[r]) for r in rows]

    def points_array(self, sign=None):
        """(rows, points) of alive cached points; with ``sign`` restricted to
        points lying on at least one sphere of that sign."""
        mask = self._alive.copy()
        if sign is not None:
            mask &= self._has_pos if sign > 0 else self._has_neg
        rows = np.nonzero(mask)[0]
        return rows, self._pts[rows]

    def sphere_point_rows(self, i):
        return [r for r in self._by_sphere.get(int(i), ()) if self._alive[r]]

    def sphere_points(self, i):
        rows = self.sphere_point_rows(i)
        if not rows:
            return np.empty((0, self.dim))
        return self._pts[rows]

    def sphere_has_open_circle(self, i):
        return any(k in self.circles for k in self._circ_by_sphere.get(int(i), ()))

    def open_circles(self, include_partial):
        """Circles with at least one uncovered point; optionally only the
        completely uncovered ones."""
        out = []
        for circle, status in self.circles.values():
            if status == "full" or include_partial:
                out.append((circle, status))
        return out

    def sphere_intersects_something(self, i, sample_set):
        pts = sample_set.points
        radii = sample_set.radii
        cand = self.grid.query_bbox(pts[i] - radii[i], pts[i] + radii[i])
        cand = cand[cand != i]
        if cand.size == 0:
            return False
        d = np.linalg.norm(pts[cand] - pts[i], axis=1)
        tol = sample_set.tol_geom
        touch = ((d > sample_set.tol_unique)
                 & (d <= radii[i] + radii[cand] + tol)
                 & (d >= np.abs(radii[i] - radii[cand]) - tol))
        return bool(np.any(touch))

    def nearest_point_distance(self, p, sign, floor=-np.inf):
        """Distance from p to the nearest alive cached point on a sphere of
        the given sign, ignoring candidates closer than ``floor``."""
        rows, pts = self.points_array(sign)
        if pts.shape[0] == 0:
            return np.inf
        d = np.linalg.norm(pts - np.asarray(p)[None, :], axis=1)
        d = d[d >= floor]
        return float(np.min(d)) if d.size else np.inf

    # -- maintenance -------------------------------------------------------

    def remove_points_in_ball(self, center, radius, tol):
        rows = self.alive_rows()
        if rows.size == 0:
            return
        d = np.linalg.norm(self._pts[rows] - np.asarray(center)[None, :],
                           axis=1)
        dead = rows[d < radius - tol]
        if dead.size:
            self._alive[dead] = False
            for r in dead:
                for h in self._hosts[r]:
                    self._by_sphere[h].discard(int(r))
            self._kdtrees = None


# ---------------------------------------------------------------------------
# rasterization prefilter
# ---------------------------------------------------------------------------

class _RasterInfo:
    """Burial map of one rasterization pass: pixels deeper inside some ball
    than their half-diagonal cannot contain uncovered points."""

    def __init__(self, lo, px, res, buried, halfdiag):
        self.lo = lo
        self.px = px
        self.res = res
        self.buried = buried
        self.halfdiag = halfdiag

    def points_buried(self, points):
        points = np.atleast_2d(points)
        idx = np.floor((points - self.lo) / self.px).astype(np.int64)
        np.clip(idx, 0, self.res - 1, out=idx)
        return self.buried[tuple(idx.T)]


def _raster_bounds(sample_set):
    """Raster window: the [-1,1]^d domain, expanded if any ball pokes out."""
    lo = np.full(sample_set.dim, DOMAIN_LO)
    hi = np.full(sample_set.dim, DOMAIN_HI)
    if len(sample_set):
        pts = sample_set.points
        radii = sample_set.radii[:, None]
        lo = np.minimum(lo, np.min(pts - radii, axis=0))
        hi = np.maximum(hi, np.max(pts + radii, axis=0))
    return lo, hi


def _window(lo_axis, px, res, wlo, whi):
    a = int(np.clip(np.floor((wlo - lo_axis) / px), 0, res - 1))
    b = int(np.clip(np.floor((whi - lo_axis) / px), 0, res - 1))
    return a, b + 1


def _raster_nominations(sample_set, res):
    """Pixel-level nomination of sphere tuples that may carry uncovered
    intersections.

    A pixel is marked for sphere i when the pixel box touches sphere i's
    surface and no ball buries the pixel deeper than its half-diagonal (a
    buried pixel cannot contain an uncovered point).  Pixels marked by >= 2
    spheres nominate pairs, pixels with >= 3 nominate triples (3D).
    """
    dim = sample_set.dim
    pts = sample_set.points
    radii = sample_set.radii
    tol = sample_set.tol_geom
    n = len(sample_set)
    lo, hi = _raster_bounds(sample_set)
    px = (hi - lo) / res
    halfdiag = 0.5 * float(np.linalg.norm(px))
    centers_ax = [lo[a] + (np.arange(res) + 0.5) * px[a] for a in range(dim)]

    # pass 1: burial depth
    depth = np.zeros((res,) * dim)
    for i in range(n):
        if radii[i] <= halfdiag:
            continue
        rngs = [_window(lo[a], px[a], res, pts[i, a] - radii[i],
                        pts[i, a] + radii[i]) for a in range(dim)]
        axes = [centers_ax[a][rngs[a][0]:rngs[a][1]] - pts[i, a]
                for a in range(dim)]
        if dim == 2:
            d = np.sqrt(axes[0][:, None] ** 2 + axes[1][None, :] ** 2)
            sl = (slice(*rngs[0]), slice(*rngs[1]))
        else:
            d = np.sqrt(axes[0][:, None, None] ** 2
                        + axes[1][None, :, None] ** 2
                        + axes[2][None, None, :] ** 2)
            sl = (slice(*rngs[0]), slice(*rngs[1]), slice(*rngs[2]))
        np.maximum(depth[sl], radii[i] - d, out=depth[sl])
    buried = depth > halfdiag + tol

    # pass 2: contour marking
    pix_ids = []
    sph_ids = []
    strides = np.array([res ** a for a in range(dim)])
    for i in range(n):
        reach = radii[i] + halfdiag + tol
        rngs = [_window(lo[a], px[a], res, pts[i, a] - reach,
                        pts[i, a] + reach) for a in range(dim)]
        axes = [centers_ax[a][rngs[a][0]:rngs[a][1]] - pts[i, a]
                for a in range(dim)]
        idx_ax = [np.arange(rngs[a][0], rngs[a][1]) for a in range(dim)]
        if dim == 2:
            d = np.sqrt(axes[0][:, None] ** 2 + axes[1][None, :] ** 2)
            sl = (slice(*rngs[0]), slice(*rngs[1]))
            flat = (idx_ax[0][:, None] * strides[0]
                    + idx_ax[1][None, :] * strides[1])
        else:
            d = np.sqrt(axes[0][:, None, None] ** 2
                        + axes[1][None, :, None] ** 2
                        + axes[2][None, None, :] ** 2)
            sl = (slice(*rngs[0]), slice(*rngs[1]), slice(*rngs[2]))
            flat = (idx_ax[0][:, None, None] * strides[0]
                    + idx_ax[1][None, :, None] * strides[1]
                    + idx_ax[2][None, None, :] * strides[2])
        mark = (np.abs(d - radii[i]) <= halfdiag + tol) & ~buried[sl]
        hits = flat[mark]
        if hits.size:
            pix_ids.append(hits.ravel())
            sph_ids.append(np.full(hits.size, i, dtype=np.intp))

    info = _RasterInfo(lo=lo, px=px, res=res, buried=buried,
                       halfdiag=halfdiag)
    triples = set()
    if not pix_ids:
        return set(), triples, info
    pix = np.concatenate(pix_ids)
    sph = np.concatenate(sph_ids)
    order = np.argsort(pix, kind="stable")
    pix = pix[order]
    sph = sph[order]
    starts = np.concatenate([[0], np.nonzero(np.diff(pix))[0] + 1, [pix.size]])
    pair_keys = []
    for a, b in zip(starts[:-1], starts[1:]):
        group = np.unique(sph[a:b])
        if group.size >= 2:
            iu, jv = np.triu_indices(group.size, 1)
            pair_keys.append(group[iu].astype(np.int64) * n + group[jv])
        if dim == 3 and group.size >= 3:
            for t in itertools.combinations(group.tolist(), 3):
                triples.add(t)
    pairs = set()
    if pair_keys:
        keys = np.unique(np.concatenate(pair_keys))
        pairs = {(int(k // n), int(k % n)) for k in keys}
    return pairs, triples, info


def _classify_circle(circle, sample_set, grid):
    """('full'|'cut'|None, cutter indices): None means the circle is entirely
    inside some ball.  'cut' leaves partial-vs-dead to the triple points."""
    tol = sample_set.tol_geom
    c = circle.center
    r = circle.radius
    cand = grid.query_bbox(c - r, c + r)
    cand = cand[(cand != circle.hosts[0]) & (cand != circle.hosts[1])]
    if cand.size == 0:
        return "full", cand
    dmin, dmax = point_to_circle_distances(sample_set.points[cand], circle)
    radii = sample_set.radii[cand]
    if np.any(dmax < radii - tol):
        return None, cand
    cutters = cand[dmin < radii - tol]
    if cutters.size == 0:
        return "full", cutters
    return "cut", cutters


def _circle_triple_points(circle, sample_set, grid, include_tangential=True):
    """Exact crossing (and tangential contact) points of a circle with every
    sphere that can reach it, as (points, host triples)."""
    tol = sample_set.tol_geom
    i, j = circle.hosts
    c = circle.center
    r = circle.radius
    cand = grid.query_bbox(c - r, c + r)
    cand = cand[(cand != i) & (cand != j)]
    if cand.size == 0:
        return [], []
    dmin, _ = point_to_circle_distances(sample_set.points[cand], circle)
    radii = sample_set.radii[cand]
    limit = radii + tol if include_tangential else radii - tol
    cand = cand[dmin < limit]
    if cand.size == 0:
        return [], []
    pts, rows = triple_points_batch(
        sample_set.points[i], sample_set.radii[i],
        sample_set.points[j], sample_set.radii[j],
        sample_set.points[cand], sample_set.radii[cand], tol)
    hosts = [tuple(sorted((int(i), int(j), int(cand[rr])))) for rr in rows]
    return list(pts), hosts


def build_cache(sample_set: SampleSet, raster_res=None, grid=None,
                exhaustive=False) -> IntersectionCache:
    """Precompute all uncovered intersection points (2D: pair crossings and
    tangencies; 3D: triple points and pair contacts) plus, in 3D, all
    intersection circles that keep at least one uncovered point.

    The raster prefilter nominates candidate tuples conservatively; every
    nomination is then decided by exact geometry, so the result matches an
    exhaustive all-pairs/all-triples enumeration.  ``exhaustive=True`` skips
    the raster and nominates everything (sensible for small sets).
    """
    n = len(sample_set)
    if raster_res is None:
        raster_res = raster_resolution_auto(n, sample_set.dim)
    if grid is None:
        grid = build_ball_grid(sample_set)
    cache = IntersectionCache(sample_set, grid)
    if n < 2:
        return cache
    if exhaustive:
        pairs = set(itertools.combinations(range(n), 2))
        triples = set(itertools.combinations(range(n), 3)) \
            if sample_set.dim == 3 else set()
        info = None
    else:
        pairs, triples, info = _raster_nominations(sample_set, raster_res)
    signs = sample_set.signs
    pts = sample_set.points
    radii = sample_set.radii

    def uncovered_filter(qpts):
        keep = np.ones(qpts.shape[0], dtype=bool)
        if info is not None:
            keep = ~info.points_buried(qpts)
        if np.any(keep):
            keep[keep] = grid_points_uncovered(qpts[keep], sample_set, grid)
        return keep

    if sample_set.dim == 2:
        if pairs:
            pair_arr = np.array(sorted(pairs), dtype=np.intp)
            qpts, rows = pair_points_2d_batch(
                pts[pair_arr[:, 0]], radii[pair_arr[:, 0]],
                pts[pair_arr[:, 1]], radii[pair_arr[:, 1]],
                sample_set.tol_unique, sample_set.tol_geom)
            keep = uncovered_filter(qpts)
            hosts = [(int(pair_arr[r, 0]), int(pair_arr[r, 1]))
                     for r in rows[keep]]
            cache.add_points(qpts[keep], hosts, signs)
        return cache

    # 3D: contacts and circles from pairs
    tri_pts, tri_hosts = [], []
    for (i, j) in sorted(pairs):
        contact = sphere_pair_contact_point(
            pts[i], radii[i], pts[j], radii[j],
            sample_set.tol_unique, sample_set.tol_geom)
        if contact is not None:
            tri_pts.append(contact)
            tri_hosts.append((i, j))
            continue
        try:
            circle = sphere_pair_circle_3d(
                pts[i], radii[i], pts[j], radii[j], hosts=(i, j),
                tol_unique=sample_set.tol_unique,
                tol_geom=sample_set.tol_geom)
        except DegenerateGeometryError:
            continue
        if circle is None:
            continue
        status, _ = _classify_circle(circle, sample_set, grid)
        if status == "full":
            cache.add_circle((i, j), circle, "full")
        elif status == "cut":
            cache.add_circle((i, j), circle, "cut")  # resolved below

    # triple points (raster-nominated)
    for (i, j, k) in sorted(triples):
        try:
            got = sphere_triple_intersect_3d(pts[i], radii[i], pts[j],
                                             radii[j], pts[k], radii[k],
                                             sample_set.tol_geom)
        except DegenerateGeometryError:
            continue
        for q in got:
            tri_pts.append(q)
            tri_hosts.append((i, j, k))
    if tri_pts:
        tri_pts = np.asarray(tri_pts)
        keep = uncovered_filter(tri_pts)
        kept_hosts = [tri_hosts[r] for r in np.nonzero(keep)[0]]
        cache.add_points(tri_pts[keep], kept_hosts, signs)

    # resolve cut circles: partial iff some uncovered triple point remains
    for key in [k for k, (c, s) in cache.circles.items() if s == "cut"]:
        alive = False
        for r in cache.sphere_point_rows(key[0]):
            h = cache._hosts[r]
            if key[0] in h and key[1] in h:
                alive = True
                break
        if alive:
            cache.set_circle_status(key, "partial")
        else:
            cache.drop_circle(key)
    return cache


def update_cache_on_insert(cache: IntersectionCache, sample_set: SampleSet,
                           new) -> IntersectionCache:
    """Bring the cache up to date after ``sample_set`` gained one sample.
    ``new`` is the appended row index (or the SignedSample itself, which must
    match the last row).  Equivalent to a rebuild from scratch (up to
    ordering)."""
    if isinstance(new, (int, np.integer)):
        new_index = int(new)
    else:
        new_index = len(sample_set) - 1
        if (np.linalg.norm(sample_set.points[new_index] - new.point)
                > sample_set.tol_unique
                or sample_set.values[new_index] != new.value):
            raise ValueError("sample does not match the last appended row")
    if new_index != cache.n_synced or new_index != len(sample_set) - 1:
        raise ValueError("cache out of sync with sample set")
    tol = sample_set.tol_geom
    signs = sample_set.signs
    pts = sample_set.points
    radii = sample_set.radii
    p = pts[new_index]
    r = radii[new_index]

    # old points newly swallowed by the inserted ball
    cache.remove_points_in_ball(p, r, tol)

    neighbors = cache.grid.query_bbox(p - r, p + r)
    cache.grid.insert_ball(new_index, p, r)
    cache.n_synced = len(sample_set)
    cache.note_sign(signs[new_index])

    if sample_set.dim == 2:
        if neighbors.size:
            qpts, rows = pair_points_2d_batch(
                np.broadcast_to(p, (neighbors.size, 2)),
                np.full(neighbors.size, r),
                pts[neighbors], radii[neighbors],
                sample_set.tol_unique, tol)
            if qpts.shape[0]:
                keep = grid_points_uncovered(qpts, sample_set, cache.grid)
                hosts = [tuple(sorted((int(neighbors[rr]), new_index)))
                         for rr in rows[keep]]
                cache.add_points(qpts[keep], hosts, signs)
        return cache

    # 3D: re-classify only the circles the new ball can reach
    swallowed, cut = cache.circles_touched_by_ball(p, r, tol)
    for key in swallowed:
        cache.drop_circle(key)
    for key in cut:
        circle, _ = cache.circles[key]
        status, _ = _classify_circle(circle, sample_set, cache.grid)
        if status is None:
            cache.drop_circle(key)
        elif status == "full":
            cache.set_circle_status(key, "full")
        else:
            alive = any(key[0] in cache._hosts[rr]
                        and key[1] in cache._hosts[rr]
                        for rr in cache.sphere_point_rows(key[0]))
            # triples with the new sphere are added below; re-resolve after
            cache.set_circle_status(key, "partial" if alive else "cut")

    # new pair features
    new_tri_pts, new_tri_hosts = [], []
    cut_keys = []
    for j in neighbors:
        j = int(j)
        contact = sphere_pair_contact_point(
            p, r, pts[j], radii[j], sample_set.tol_unique, tol)
        if contact is not None:
            new_tri_pts.append(contact)
            new_tri_hosts.append(tuple(sorted((j, new_index))))
            continue
        try:
            circle = sphere_pair_circle_3d(
                p, r, pts[j], radii[j], hosts=(new_index, j),
                tol_unique=sample_set.tol_unique, tol_geom=tol)
        except DegenerateGeometryError:
            continue
        if circle is None:
            continue
        status, _ = _classify_circle(circle, sample_set, cache.grid)
        key = tuple(sorted((new_index, j)))
        if status == "full":
            cache.add_circle(key, circle, "full")
        elif status == "cut":
            cache.add_circle(key, circle, "cut")
            cut_keys.append(key)
        tp, th = _circle_triple_points(circle, sample_set, cache.grid)
        new_tri_pts.extend(tp)
        new_tri_hosts.extend(th)

    if new_tri_pts:
        new_tri_pts = np.asarray(new_tri_pts)
        # dedupe triples discovered through two different circles
        seen = set()
        rows = []
        for rr, h in enumerate(new_tri_hosts):
            k = (h, tuple(np.round(new_tri_pts[rr] / tol).astype(np.int64)))
            if k not in seen:
                seen.add(k)
                rows.append(rr)
        new_tri_pts = new_tri_pts[rows]
        new_tri_hosts = [new_tri_hosts[rr] for rr in rows]
        keep = grid_points_uncovered(new_tri_pts, sample_set, cache.grid)
        hosts = [new_tri_hosts[rr] for rr in np.nonzero(keep)[0]]
        cache.add_points(new_tri_pts[keep], hosts, signs)

    # resolve any remaining cut circles
    for key in [k for k, (c, s) in cache.circles.items() if s == "cut"]:
        alive = any(key[0] in cache._hosts[rr] and key[1] in cache._hosts[rr]
                    for rr in cache.sphere_point_rows(key[0]))
        if alive:
            cache.set_circle_status(key, "partial")
        else:
            cache.drop_circle(key)
    return cache


# ---------------------------------------------------------------------------
# culling
# ---------------------------------------------------------------------------

def cull_to_kappa(sample_set: SampleSet, cells, kappa):
    """Remove spheres until every cell keeps at most kappa relevant spheres,
    dropping the largest sphere of the currently worst cell first.

    ``cells`` must have ``relevant`` (index arrays into sample_set) and
    ``index`` (tuple, for deterministic tie-breaks).  Returns
    (culled SampleSet, removed indices, old->new index map).
    """
    n = len(sample_set)
    radii = sample_set.radii
    retained = np.ones(n, dtype=bool)
    removed = []
    if kappa is not None and np.isfinite(kappa) and cells:
        relevant = [np.asarray(c.relevant, dtype=np.intp) for c in cells]
        counts = np.array([len(rv) for rv in relevant])
        sphere_cells = defaultdict(list)
        for ci, rv in enumerate(relevant):
            for k in rv:
                sphere_cells[int(k)].append(ci)
        cell_order = sorted(range(len(cells)), key=lambda ci: cells[ci].index)
        while True:
            worst = counts.max(initial=0)
            if worst <= kappa:
                break
            pick = next(ci for ci in cell_order if counts[ci] == worst)
            members = relevant[pick]
            members = members[retained[members]]
            big = members[np.argmax(radii[members])]
            retained[big] = False
            removed.append(int(big))
            for ci in sphere_cells[int(big)]:
                counts[ci] -= 1
    culled, index_map = sample_set.subset(np.nonzero(retained)[0])
    return culled, removed, index_map

"""Consistent signed-distance interpolation at a single query point.

A candidate sphere grown from the query point can only change validity when
its surface passes a *grow-to point*: a tangency with an existing sphere, an
uncovered intersection point of existing spheres, the closest/farthest point
of an uncovered intersection circle (3D), or the query point itself.  The
candidate radii derived from these points are scored (tangency and normal
agreement first, then magnitude, inside preferred over outside) and the best
one that keeps the augmented set valid wins.  The smallest magnitude over
the same-sign candidates is the minimum valid radius, computable without any
validity checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .accel import IntersectionCache, build_cache
from .core import InputInvalidError, SampleSet, default_max_radius
from .geom import (
    circle_reference_point,
    pair_points_2d_batch,
    point_to_circle_distances,
    points_uncovered,
    probe_point,
    sphere_pair_circle_3d,
    sphere_pair_contact_point,
    sphere_uncovered_candidates,
    triple_points_batch,
)

MODE_REFINE = "refine"    # only fully uncovered circles feed candidates
MODE_REPAIR = "repair"    # all partially uncovered circles are considered


@dataclass
class GrowToCandidate:
    point: np.ndarray
    kind: str                      # self | tangent | intersection | circle-extreme
    hosts: tuple                   # ((index, SignedSample), ...)

    @property
    def is_tangency(self):
        return self.kind == "tangent"


def _scope(sample_set, indices):
    if indices is None:
        return np.arange(len(sample_set), dtype=np.intp)
    return np.asarray(indices, dtype=np.intp)


def _ensure_cache(sample_set, cache):
    if cache is None:
        return build_cache(sample_set, exhaustive=True)
    return cache


def grow_to_points(p, sample_set: SampleSet, cache: IntersectionCache = None,
                   mode=MODE_REFINE, indices=None, max_dist=None):
    """All candidate grow-to points for a query position.

    Tangent points are generated per sphere (both sides), intersection points
    and circle extremes come from the cache; every candidate except the query
    point itself is filtered by the coverage test, since a covered point can
    never lie on a surface realizing the samples.
    """
    p = np.asarray(p, dtype=np.float64)
    cache = _ensure_cache(sample_set, cache)
    scope = _scope(sample_set, indices)
    tol = sample_set.tol_geom
    out = [GrowToCandidate(p.copy(), "self", ())]
    if len(sample_set) == 0:
        return out

    pts = sample_set.points[scope]
    radii = sample_set.radii[scope]
    delta = p[None, :] - pts
    dist = np.linalg.norm(delta, axis=1)
    ok = dist > sample_set.tol_unique

    # tangent points, both sides of every sphere
    with np.errstate(invalid="ignore", divide="ignore"):
        dirs = delta / dist[:, None]
    cand_pts = []
    cand_host = []
    for side in (1.0, -1.0):
        qs = pts + side * radii[:, None] * dirs
        qd = np.where(ok,
                      np.abs(dist - radii) if side > 0 else dist + radii,
                      np.inf)
        sel = ok & ((qd <= max_dist + tol) if max_dist is not None
                    else np.ones_like(ok))
        for row in np.nonzero(sel)[0]:
            cand_pts.append(qs[row])
            cand_host.append(int(scope[row]))
    if cand_pts:
        cand_pts = np.asarray(cand_pts)
        keep = points_uncovered(cand_pts, sample_set, indices=scope)
        for row in np.nonzero(keep)[0]:
            i = cand_host[row]
            out.append(GrowToCandidate(cand_pts[row], "tangent",
                                       ((i, sample_set[i]),)))

    # uncovered intersection points (cache invariant: already coverage-tested)
    rows, upts = cache.points_array()
    if upts.shape[0]:
        ud = np.linalg.norm(upts - p[None, :], axis=1)
        sel = np.ones(upts.shape[0], dtype=bool)
        if max_dist is not None:
            sel = ud <= max_dist + tol
        for r, row in zip(rows[sel], np.nonzero(sel)[0]):
            hosts = tuple((h, sample_set[h]) for h in cache._hosts[r])
            out.append(GrowToCandidate(upts[row], "intersection", hosts))

    # closest/farthest points of uncovered circles (3D); a circle whose axis
    # carries p has no extreme points and contributes nothing here
    if sample_set.dim == 3:
        extreme_pts, dists, keys = cache.circle_extreme_candidates(
            p, mode == MODE_REPAIR, tol=tol, include_degenerate=False)
        if extreme_pts.shape[0]:
            sel = np.ones(extreme_pts.shape[0], dtype=bool)
            if max_dist is not None:
                sel = dists <= max_dist + tol
            extreme_pts = extreme_pts[sel]
            keys = [k for k, keep in zip(keys, sel) if keep]
            if extreme_pts.shape[0]:
                keep = points_uncovered(extreme_pts, sample_set,
                                        indices=scope)
                for row in np.nonzero(keep)[0]:
                    hosts = tuple((h, sample_set[h]) for h in keys[row])
                    out.append(GrowToCandidate(extreme_pts[row],
                                               "circle-extreme", hosts))
    return out


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------

def _normals_agree(p, s, host_point, host_value, q):
    v_c = q - p
    n_c = np.linalg.norm(v_c)
    v_h = q - host_point
    n_h = np.linalg.norm(v_h)
    if n_c <= 0.0 or n_h <= 0.0:
        return False
    flip_c = -1.0 if s < 0 else 1.0
    flip_h = -1.0 if host_value < 0 else 1.0
    return flip_c * flip_h * float(np.dot(v_c, v_h)) > 0.0


def score_for_radius(p, s, host, candidate: GrowToCandidate, max_radius):
    """Score of a signed candidate radius.

    Tangency with agreeing normals is best (3x max radius bonus), agreeing
    intersections next (2x), disagreeing intersections (1x), disagreeing
    tangencies worst (0).  Larger magnitudes win within a tier and inside
    values count double.
    """
    p = np.asarray(p, dtype=np.float64)
    if host is not None:
        hosts = ((None, host),)
    else:
        hosts = candidate.hosts
    agree = any(_normals_agree(p, s, h.point, h.value, candidate.point)
                for _, h in hosts)
    if candidate.is_tangency:
        type_score = 3.0 * max_radius if agree else 0.0
    elif candidate.kind == "self":
        type_score = 0.0
    else:
        type_score = 2.0 * max_radius if agree else 1.0 * max_radius
    sign_score = 2.0 if s < 0 else 1.0
    return sign_score * abs(s) + type_score


# ---------------------------------------------------------------------------
# incremental validity of (set + one candidate sphere)
# ---------------------------------------------------------------------------

def _uncovered_with_extra(qpts, sample_set, scope, center, radius):
    """Coverage test against the scoped set plus one extra ball."""
    flags = points_uncovered(qpts, sample_set, indices=scope)
    d = np.linalg.norm(np.atleast_2d(qpts) - np.asarray(center)[None, :],
                       axis=1)
    return flags & ~(d < radius - sample_set.tol_geom)


def _existing_sphere_survives(j, sample_set, p, mag, cache, scope):
    """Does sphere j keep an uncovered point after adding ball (p, mag)?"""
    tol = sample_set.tol_geom
    if cache is not None:
        jpts = cache.sphere_points(j)
        if jpts.shape[0]:
            d = np.linalg.norm(jpts - p[None, :], axis=1)
            if np.any(d >= mag - tol):
                return True
        if sample_set.dim == 3:
            # a fully uncovered circle has no cached points; it keeps sphere j
            # valid unless the new ball swallows it whole (a partial cut
            # leaves uncovered arcs behind)
            for key in cache._circ_by_sphere.get(int(j), ()):
                got = cache.circles.get(key)
                if got is not None and got[1] == "full":
                    _, dmax = point_to_circle_distances(p[None, :], got[0])
                    if dmax[0] >= mag - tol:
                        return True
        had_candidates = bool(jpts.shape[0]) or \
            cache.sphere_intersects_something(j, sample_set)
    else:
        jpts, neigh, had_candidates = sphere_uncovered_candidates(
            j, sample_set, scope)
        flags = _uncovered_with_extra(jpts, sample_set, neigh, p, mag)
        if np.any(flags):
            return True
    # every surviving uncovered point, if any, borders the new ball
    cj = sample_set.points[j]
    rj = sample_set.radii[j]
    if sample_set.dim == 2:
        new_pts, _ = pair_points_2d_batch(
            cj[None, :], [rj], p[None, :], [mag],
            sample_set.tol_unique, tol)
        if new_pts.shape[0] == 0:
            return False if had_candidates or _ball_swallows(p, mag, cj, rj, tol) \
                else _probe_survives(j, sample_set, p, mag, scope)
        return bool(np.any(_uncovered_with_extra(new_pts, sample_set, scope,
                                                 p, mag)))
    new_pts = _sphere_pair_candidates_3d(cj, rj, j, p, mag, sample_set, scope)
    if new_pts is None or new_pts.shape[0] == 0:
        return False if had_candidates or _ball_swallows(p, mag, cj, rj, tol) \
            else _probe_survives(j, sample_set, p, mag, scope)
    return bool(np.any(_uncovered_with_extra(new_pts, sample_set, scope,
                                             p, mag)))


def _ball_swallows(p, mag, c, r, tol):
    return np.linalg.norm(np.asarray(c) - p) + r < mag - tol


def _probe_survives(j, sample_set, p, mag, scope):
    q = probe_point(sample_set.points[j], sample_set.radii[j],
                    sample_set.dim)
    return bool(_uncovered_with_extra(q[None, :], sample_set, scope,
                                      p, mag)[0])


def _sphere_pair_candidates_3d(cj, rj, j, p, mag, sample_set, scope):
    """Boundary candidates on sphere j introduced by a new ball (p, mag):
    triple points on the circle of the two (or its probe), or the tangent
    contact point."""
    tol = sample_set.tol_geom
    contact = sphere_pair_contact_point(cj, rj, p, mag,
                                        sample_set.tol_unique, tol)
    if contact is not None:
        return contact[None, :]
    circle = sphere_pair_circle_3d(cj, rj, p, mag, hosts=(j, -1),
                                   tol_unique=sample_set.tol_unique,
                                   tol_geom=tol)
    if circle is None:
        return None
    cand = scope[scope != j]
    pts = []
    crossed = False
    if cand.size:
        dmin, _ = point_to_circle_distances(sample_set.points[cand], circle)
        rc = sample_set.radii[cand]
        crossed = bool(np.any(dmin < rc - tol))
        touch = cand[dmin < rc + tol]
        if touch.size:
            tri, _ = triple_points_batch(cj, rj, p, mag,
                                         sample_set.points[touch],
                                         sample_set.radii[touch], tol)
            pts.extend(tri)
    if not crossed:
        pts.append(circle_reference_point(circle))
    return np.asarray(pts) if pts else np.empty((0, 3))


def validity_with_candidate(sample_set: SampleSet, p, s,
                            cache: IntersectionCache = None, indices=None,
                            q_hint_uncovered=False) -> bool:
    """True iff appending the sample (p, s) to a valid set keeps it valid.

    Decided incrementally: opposite-sign overlap against the new ball,
    survival of an uncovered point for every existing sphere the new ball
    reaches, and an uncovered point for the new sphere itself (free when the
    grow-to point that produced s is known to be uncovered).
    """
    p = np.asarray(p, dtype=np.float64)
    s = float(s)
    mag = abs(s)
    scope = _scope(sample_set, indices)
    tol = sample_set.tol_geom
    pts = sample_set.points[scope]
    radii = sample_set.radii[scope]
    signs = sample_set.signs[scope]
    d = np.linalg.norm(pts - p[None, :], axis=1)

    s_sign = -1.0 if s < 0 else 1.0
    opp = signs != s_sign
    if np.any(d[opp] < mag + radii[opp] - tol):
        return False

    affected = np.abs(d - radii) < mag - tol
    for row in np.nonzero(affected)[0]:
        if not _existing_sphere_survives(int(scope[row]), sample_set, p, mag,
                                         cache, scope):
            return False

    if q_hint_uncovered:
        return True
    # uncovered point for the new sphere itself
    if mag <= tol:
        return bool(points_uncovered(p[None, :], sample_set,
                                     indices=scope)[0])
    touch = np.abs(d - radii) < mag + tol
    cand_rows = np.nonzero(touch)[0]
    new_pts = []
    if sample_set.dim == 2:
        if cand_rows.size:
            qpts, _ = pair_points_2d_batch(
                np.broadcast_to(p, (cand_rows.size, 2)),
                np.full(cand_rows.size, mag),
                pts[cand_rows], radii[cand_rows],
                sample_set.tol_unique, tol)
            if qpts.shape[0]:
                new_pts.append(qpts)
    else:
        for row in cand_rows:
            got = _sphere_pair_candidates_3d(
                p, mag, -1, pts[row], radii[row], sample_set,
                scope[scope != scope[row]])
            # candidates must lie on the new sphere: reuse the helper with
            # roles swapped
            if got is not None and got.shape[0]:
                new_pts.append(got)
    if new_pts:
        new_pts = np.vstack(new_pts)
        on_new = np.abs(np.linalg.norm(new_pts - p[None, :], axis=1)
                        - mag) <= 10.0 * tol
        new_pts = new_pts[on_new]
        if new_pts.shape[0]:
            flags = points_uncovered(new_pts, sample_set, indices=scope)
            return bool(np.any(flags))
    q = probe_point(p, mag, sample_set.dim)
    return bool(points_uncovered(q[None, :], sample_set, indices=scope)[0])


# ---------------------------------------------------------------------------
# interpolation
# ---------------------------------------------------------------------------

def _containment(sample_set, p, scope):
    pts = sample_set.points[scope]
    radii = sample_set.radii[scope]
    signs = sample_set.signs[scope]
    d = np.linalg.norm(pts - p[None, :], axis=1)
    inside = d < radii - sample_set.tol_geom
    required_sign = None
    lower = 0.0
    if np.any(inside):
        depth = radii[inside] - d[inside]
        required_sign = float(signs[inside][np.argmax(depth)])
        lower = float(np.max(depth))
    ub_all = float(np.min(d + radii)) if len(d) else np.inf
    ub_pos = float(np.min(d[signs < 0] - radii[signs < 0])) \
        if np.any(signs < 0) else np.inf
    ub_neg = float(np.min(d[signs > 0] - radii[signs > 0])) \
        if np.any(signs > 0) else np.inf
    return required_sign, lower, ub_all, {1.0: ub_pos, -1.0: ub_neg}


def interpolate_sdf_to(p, sample_set: SampleSet, max_radius=None,
                       cache: IntersectionCache = None, mode=MODE_REFINE,
                       indices=None, assume_valid=False,
                       on_fallback=None) -> float:
    """Best-scoring signed distance value at p that keeps the set valid.

    Candidates are the signed distances to all grow-to points (both signs),
    pruned by the sign of any sphere containing p, by the containment lower
    bound, by the opposite-sign and full-coverage upper bounds and by
    ``max_radius``; the highest-scoring candidate that passes the validity
    check wins.  Falls back to the minimum valid radius when floating-point
    trouble leaves nothing valid.
    """
    p = np.asarray(p, dtype=np.float64)
    if not assume_valid:
        from .validity import check_validity
        report = check_validity(sample_set)
        if not report.valid:
            raise InputInvalidError("input set is not a valid discrete SDF",
                                    report)
    if max_radius is None:
        max_radius = default_max_radius(sample_set.dim)
    ci = sample_set.find_coincident(p)
    if ci >= 0:
        return float(sample_set.values[ci])
    scope = _scope(sample_set, indices)
    tol = sample_set.tol_geom
    cache = _ensure_cache(sample_set, cache)

    required_sign, lower, ub_all, ub_by_sign = _containment(sample_set, p,
                                                            scope)
    allowed = (required_sign,) if required_sign is not None else (1.0, -1.0)
    reach = min(max_radius, ub_all,
                max(ub_by_sign[sg] for sg in allowed))
    candidates = grow_to_points(p, sample_set, cache=cache, mode=mode,
                                indices=scope, max_dist=reach)

    scored = []
    for cand in candidates:
        dist = float(np.linalg.norm(cand.point - p))
        for sg in allowed:
            s = sg * dist
            if dist <= tol and sg < 0:
                continue
            if dist < lower - tol:
                continue
            if dist > min(max_radius, ub_all, ub_by_sign[sg]) + tol:
                continue
            score = score_for_radius(p, s, None, cand, max_radius)
            scored.append((-score, dist, 0 if s < 0 else 1,
                           tuple(cand.point), s, cand))
    scored.sort(key=lambda t: t[:4])
    for _, dist, _, _, s, cand in scored:
        if validity_with_candidate(sample_set, p, s, cache=cache,
                                   indices=scope,
                                   q_hint_uncovered=(cand.kind != "self")):
            return float(s)
    # floating-point pathologies can reject every candidate; the minimum
    # valid radius needs no validity checks and always exists
    if on_fallback is not None:
        on_fallback()
    return min_valid_radius(p, sample_set, lower_bound=0.0,
                            sign=required_sign, cache=cache,
                            mode=MODE_REPAIR, indices=indices,
                            assume_valid=True)


# ---------------------------------------------------------------------------
# minimum valid radius
# ---------------------------------------------------------------------------

def min_valid_radius(p, sample_set: SampleSet, lower_bound=0.0, sign=None,
                     cache: IntersectionCache = None, mode=MODE_REPAIR,
                     indices=None, assume_valid=False) -> float:
    """The smallest-magnitude signed value at p that keeps the set valid.

    Outside every sphere the answer is 0.  Inside, the sign is forced and the
    magnitude is the distance from p to the same-sign sphere-union contour:
    the minimum over uncovered same-sign intersection points, uncovered
    circle extremes and uncovered tangent points (the latter coverage-tested
    lazily in ascending distance order).  Minimality makes validity checks
    unnecessary.  ``lower_bound`` prunes candidates below a known floor.
    """
    p = np.asarray(p, dtype=np.float64)
    if not assume_valid:
        from .validity import check_validity
        report = check_validity(sample_set)
        if not report.valid:
            raise InputInvalidError("input set is not a valid discrete SDF",
                                    report)
    ci = sample_set.find_coincident(p)
    if ci >= 0:
        return float(sample_set.values[ci])
    scope = _scope(sample_set, indices)
    tol = sample_set.tol_geom
    pts = sample_set.points[scope]
    radii = sample_set.radii[scope]
    signs = sample_set.signs[scope]
    d = np.linalg.norm(pts - p[None, :], axis=1) if len(scope) else \
        np.empty((0,))
    inside = d < radii - tol

    if not np.any(inside):
        if lower_bound <= tol:
            return 0.0
        sg = sign if sign is not None else 1.0
        cand = sg * lower_bound
        if validity_with_candidate(sample_set, p, cand, cache=cache,
                                   indices=scope):
            return float(cand)
        return 0.0

    if sign is None:
        depth = radii[inside] - d[inside]
        sign = float(signs[inside][np.argmax(depth)])
    floor = max(float(lower_bound), 0.0)
    cache = _ensure_cache(sample_set, cache)
    rmin = np.inf

    # uncovered intersection points on same-sign spheres
    rmin = min(rmin, _nearest_cached(cache, p, sign, floor - tol))

    # circle extremes (3D): sorted lazy batches, like the tangent points
    if sample_set.dim == 3:
        extreme, ed, _ = cache.circle_extreme_candidates(
            p, mode == MODE_REPAIR, sign=sign, tol=tol)
        if extreme.shape[0]:
            sel = (ed >= floor - tol) & (ed < rmin)
            extreme = extreme[sel]
            ed = ed[sel]
            order = np.argsort(ed, kind="stable")
            for a in range(0, order.size, 32):
                chunk = order[a:a + 32]
                chunk = chunk[ed[chunk] < rmin]
                if chunk.size == 0:
                    break
                from .accel import grid_points_uncovered
                flags = grid_points_uncovered(extreme[chunk], sample_set,
                                              cache.grid)
                hit = np.nonzero(flags)[0]
                if hit.size:
                    rmin = float(ed[chunk[hit[0]]])
                    break

    # tangent points of same-sign spheres, nearest first, tested lazily in
    # sorted batches (the first uncovered one is the answer)
    same = (signs == sign) & (d > sample_set.tol_unique)
    rows = np.nonzero(same)[0]
    if rows.size:
        u = (p[None, :] - pts[rows]) / d[rows][:, None]
        q_near = pts[rows] + radii[rows][:, None] * u
        q_far = pts[rows] - radii[rows][:, None] * u
        tangent_d = np.concatenate([np.abs(d[rows] - radii[rows]),
                                    d[rows] + radii[rows]])
        tangent_q = np.vstack([q_near, q_far])
        sel = (tangent_d >= floor - tol) & (tangent_d < rmin)
        tangent_d = tangent_d[sel]
        tangent_q = tangent_q[sel]
        order = np.argsort(tangent_d, kind="stable")
        grid = getattr(cache, "grid", None)
        for a in range(0, order.size, 32):
            chunk = order[a:a + 32]
            chunk = chunk[tangent_d[chunk] < rmin]
            if chunk.size == 0:
                break
            if grid is not None:
                from .accel import grid_points_uncovered
                flags = grid_points_uncovered(tangent_q[chunk], sample_set,
                                              grid)
            else:
                flags = points_uncovered(tangent_q[chunk], sample_set)
            hit = np.nonzero(flags)[0]
            if hit.size:
                rmin = float(tangent_d[chunk[hit[0]]])
                break
    if not np.isfinite(rmin):
        rmin = floor
    return float(sign * max(rmin, floor))


def _nearest_cached(cache, p, sign, floor):
    """Nearest cached uncovered point on a sphere of the given sign, at
    distance >= floor; uses a kd-tree when the cache has been frozen."""
    trees = getattr(cache, "_kdtrees", None)
    if trees is not None:
        tree, count = trees[1.0 if sign > 0 else -1.0]
        if tree is None:
            return np.inf
        k = 1
        while True:
            dd, _ = tree.query(p, k=min(k, count))
            dd = np.atleast_1d(dd)
            hits = dd[dd >= floor]
            if hits.size:
                return float(hits[0])
            if k >= count:
                return np.inf
            k = min(4 * k, count)
    return cache.nearest_point_distance(p, sign, floor=floor)


def freeze_cache_for_queries(cache: IntersectionCache):
    """Build per-sign kd-trees over the cached uncovered points.  Worth it
    when many minimum-radius queries run against a fixed cache.  A no-op if
    the cache has not changed since the last freeze."""
    from scipy.spatial import cKDTree
    if cache._kdtrees is not None:
        return cache
    trees = {}
    for sg in (1.0, -1.0):
        _, pts = cache.points_array(sg)
        trees[sg] = (cKDTree(pts) if pts.shape[0] else None, pts.shape[0])
    cache._kdtrees = trees
    return cache

"""Chamfer and approximated Hausdorff distances between meshes, via
deterministic surface sampling and exact point-to-element distances."""

from __future__ import annotations

import numpy as np

from .recon import Mesh

_POINT_CHUNK = 512


def sample_surface(mesh: Mesh, n_samples: int) -> np.ndarray:
    """n roughly uniform points on the mesh.  Sampling is stratified over
    cumulative length/area and fully deterministic."""
    if mesh.n_elements == 0:
        raise ValueError("cannot sample an empty mesh")
    v = mesh.vertices
    e = mesh.elements
    if mesh.dim == 2:
        a, b = v[e[:, 0]], v[e[:, 1]]
        lengths = np.linalg.norm(b - a, axis=1)
        cum = np.cumsum(lengths)
        total = cum[-1]
        u = (np.arange(n_samples) + 0.5) / n_samples * total
        seg = np.searchsorted(cum, u)
        prev = np.concatenate([[0.0], cum[:-1]])
        t = (u - prev[seg]) / np.maximum(lengths[seg], 1e-300)
        return a[seg] + t[:, None] * (b[seg] - a[seg])
    a, b, c = v[e[:, 0]], v[e[:, 1]], v[e[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    cum = np.cumsum(areas)
    total = cum[-1]
    u = (np.arange(n_samples) + 0.5) / n_samples * total
    tri = np.searchsorted(cum, u)
    rng = np.random.default_rng(20240917)
    r1 = np.sqrt(rng.random(n_samples))
    r2 = rng.random(n_samples)
    w0 = 1.0 - r1
    w1 = r1 * (1.0 - r2)
    w2 = r1 * r2
    return (w0[:, None] * a[tri] + w1[:, None] * b[tri]
            + w2[:, None] * c[tri])


def _dist_to_segments(points, a, b):
    ab = b - a
    denom = np.maximum(np.einsum("sd,sd->s", ab, ab), 1e-300)
    out = np.empty(points.shape[0])
    for s in range(0, points.shape[0], _POINT_CHUNK):
        p = points[s:s + _POINT_CHUNK]
        ap = p[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("msd,sd->ms", ap, ab) / denom, 0.0, 1.0)
        proj = a[None, :, :] + t[:, :, None] * ab[None, :, :]
        out[s:s + _POINT_CHUNK] = np.linalg.norm(
            p[:, None, :] - proj, axis=2).min(axis=1)
    return out


def _dist_to_triangles(points, a, b, c):
    """Exact point-triangle distances (barycentric region clamping)."""
    ab = b - a
    ac = c - a
    out = np.empty(points.shape[0])
    for s in range(0, points.shape[0], _POINT_CHUNK):
        p = points[s:s + _POINT_CHUNK]
        ap = p[:, None, :] - a[None, :, :]
        d1 = np.einsum("mtd,td->mt", ap, ab)
        d2 = np.einsum("mtd,td->mt", ap, ac)
        bp = p[:, None, :] - b[None, :, :]
        d3 = np.einsum("mtd,td->mt", bp, ab)
        d4 = np.einsum("mtd,td->mt", bp, ac)
        cp = p[:, None, :] - c[None, :, :]
        d5 = np.einsum("mtd,td->mt", cp, ab)
        d6 = np.einsum("mtd,td->mt", cp, ac)

        va = d3 * d6 - d5 * d4
        vb = d5 * d2 - d1 * d6
        vc = d1 * d4 - d3 * d2
        denom = np.maximum(va + vb + vc, 1e-300)
        v = vb / denom
        w = vc / denom

        # interior projection, then clamp per Voronoi region
        u_clamp = np.clip(v, 0.0, 1.0)
        w_clamp = np.clip(w, 0.0, 1.0)
        v_out = u_clamp
        w_out = w_clamp

        # vertex regions
        reg_a = (d1 <= 0) & (d2 <= 0)
        reg_b = (d3 >= 0) & (d4 <= d3)
        reg_c = (d6 >= 0) & (d5 <= d6)
        # edge regions
        t_ab = np.divide(d1, d1 - d3, out=np.zeros_like(d1),
                         where=(d1 - d3) != 0)
        reg_ab = (~reg_a & ~reg_b & (vc <= 0) & (d1 >= 0) & (d3 <= 0))
        t_ac = np.divide(d2, d2 - d6, out=np.zeros_like(d2),
                         where=(d2 - d6) != 0)
        reg_ac = (~reg_a & ~reg_c & (vb <= 0) & (d2 >= 0) & (d6 <= 0))
        t_bc = np.divide(d4 - d3, (d4 - d3) + (d5 - d6),
                         out=np.zeros_like(d4),
                         where=((d4 - d3) + (d5 - d6)) != 0)
        reg_bc = (~reg_b & ~reg_c & (va <= 0) & ((d4 - d3) >= 0)
                  & ((d5 - d6) >= 0))

        v_out = np.where(reg_bc, 1.0 - t_bc, v_out)
        w_out = np.where(reg_bc, t_bc, w_out)
        v_out = np.where(reg_ac, 0.0, v_out)
        w_out = np.where(reg_ac, t_ac, w_out)
        v_out = np.where(reg_ab, t_ab, v_out)
        w_out = np.where(reg_ab, 0.0, w_out)
        v_out = np.where(reg_c, 0.0, v_out)
        w_out = np.where(reg_c, 1.0, w_out)
        v_out = np.where(reg_b, 1.0, v_out)
        w_out = np.where(reg_b, 0.0, w_out)
        v_out = np.where(reg_a, 0.0, v_out)
        w_out = np.where(reg_a, 0.0, w_out)

        closest = (a[None, :, :] + v_out[:, :, None] * ab[None, :, :]
                   + w_out[:, :, None] * ac[None, :, :])
        out[s:s + _POINT_CHUNK] = np.linalg.norm(
            p[:, None, :] - closest, axis=2).min(axis=1)
    return out


def point_to_mesh_distance(points, mesh: Mesh) -> np.ndarray:
    """Exact distance from each point to the closest mesh element."""
    if mesh.n_elements == 0:
        raise ValueError("cannot measure distance to an empty mesh")
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    v = mesh.vertices
    e = mesh.elements
    if mesh.dim == 2:
        return _dist_to_segments(points, v[e[:, 0]], v[e[:, 1]])
    return _dist_to_triangles(points, v[e[:, 0]], v[e[:, 1]], v[e[:, 2]])


def chamfer(a: Mesh, b: Mesh, n_samples: int = 10000) -> float:
    """Symmetric mean point-to-surface distance between two meshes."""
    pa = sample_surface(a, n_samples)
    pb = sample_surface(b, n_samples)
    d_ab = point_to_mesh_distance(pa, b)
    d_ba = point_to_mesh_distance(pb, a)
    return 0.5 * (float(np.mean(d_ab)) + float(np.mean(d_ba)))


def hausdorff_approx(a: Mesh, b: Mesh, n_samples: int = 10000) -> float:
    """Symmetric max point-to-surface distance over the same sampling."""
    pa = sample_surface(a, n_samples)
    pb = sample_surface(b, n_samples)
    d_ab = point_to_mesh_distance(pa, b)
    d_ba = point_to_mesh_distance(pb, a)
    return max(float(np.max(d_ab)), float(np.max(d_ba)))

"""Compiled inner loops: BVH construction/traversal and the depth rasterizer.

Everything here is numba-jitted and operates on plain numpy arrays so the
public modules can stay allocation-light and deterministic. All kernels are
nogil so callers may fan out over threads (one camera per thread).
"""

import numba
import numpy as np

# Barycentric slack for edge hits: rays through a shared triangle edge must
# register on at least one of the adjacent triangles.
_BARY_EPS = 1e-9
_DET_EPS = 1e-14


@numba.njit(cache=True, nogil=True)
def bvh_build(tri_bmin, tri_bmax, centroids, leaf_size):
    """Median-split BVH over triangle bounds.

    Nodes are emitted in preorder. Internal nodes have count == 0 and child
    indices; leaves have count > 0 and a [start, start+count) range into the
    returned primitive order. Splits sort each range stably by centroid along
    the widest centroid axis, so the build is deterministic.
    """
    n = tri_bmin.shape[0]
    cap = 2 * n + 1
    node_bmin = np.empty((cap, 3), np.float64)
    node_bmax = np.empty((cap, 3), np.float64)
    node_left = np.full(cap, -1, np.int32)
    node_right = np.full(cap, -1, np.int32)
    node_start = np.full(cap, -1, np.int32)
    node_count = np.zeros(cap, np.int32)
    order = np.arange(n).astype(np.int32)

    stack = np.empty((128, 3), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack[top, 0]
        s = stack[top, 1]
        e = stack[top, 2]

        bmin = np.full(3, np.inf)
        bmax = np.full(3, -np.inf)
        for i in range(s, e):
            t = order[i]
            for a in range(3):
                if tri_bmin[t, a] < bmin[a]:
                    bmin[a] = tri_bmin[t, a]
                if tri_bmax[t, a] > bmax[a]:
                    bmax[a] = tri_bmax[t, a]
        node_bmin[node] = bmin
        node_bmax[node] = bmax

        if e - s <= leaf_size:
            node_start[node] = s
            node_count[node] = e - s
            continue

        cmin = np.full(3, np.inf)
        cmax = np.full(3, -np.inf)
        for i in range(s, e):
            t = order[i]
            for a in range(3):
                c = centroids[t, a]
                if c < cmin[a]:
                    cmin[a] = c
                if c > cmax[a]:
                    cmax[a] = c
        axis = 0
        ext = cmax[0] - cmin[0]
        for a in range(1, 3):
            if cmax[a] - cmin[a] > ext:
                ext = cmax[a] - cmin[a]
                axis = a

        keys = np.empty(e - s, np.float64)
        for i in range(s, e):
            keys[i - s] = centroids[order[i], axis]
        idx = np.argsort(keys, kind="mergesort")
        tmp = order[s:e].copy()
        for i in range(e - s):
            order[s + i] = tmp[idx[i]]

        mid = (s + e) // 2
        left = n_nodes
        right = n_nodes + 1
        n_nodes += 2
        node_left[node] = left
        node_right[node] = right
        stack[top, 0] = right
        stack[top, 1] = mid
        stack[top, 2] = e
        top += 1
        stack[top, 0] = left
        stack[top, 1] = s
        stack[top, 2] = mid
        top += 1

    return (
        node_bmin[:n_nodes].copy(),
        node_bmax[:n_nodes].copy(),
        node_left[:n_nodes].copy(),
        node_right[:n_nodes].copy(),
        node_start[:n_nodes].copy(),
        node_count[:n_nodes].copy(),
        order,
    )


@numba.njit(cache=True, nogil=True, inline="always")
def _slab_hit(bmin, bmax, ox, oy, oz, dx, dy, dz, t_hi):
    """Ray vs axis-aligned box over [0, t_hi]."""
    t0 = 0.0
    t1 = t_hi
    for a in range(3):
        if a == 0:
            o = ox
            d = dx
        elif a == 1:
            o = oy
            d = dy
        else:
            o = oz
            d = dz
        if d > 1e-300 or d < -1e-300:
            inv = 1.0 / d
            ta = (bmin[a] - o) * inv
            tb = (bmax[a] - o) * inv
            if ta > tb:
                ta, tb = tb, ta
            if ta > t0:
                t0 = ta
            if tb < t1:
                t1 = tb
            if t0 > t1:
                return False
        else:
            if o < bmin[a] or o > bmax[a]:
                return False
    return True


@numba.njit(cache=True, nogil=True, inline="always")
def _tri_hit(v0, e1, e2, ox, oy, oz, dx, dy, dz, t_best):
    """Moller-Trumbore; returns hit t in (0, t_best] or inf."""
    px = dy * e2[2] - dz * e2[1]
    py = dz * e2[0] - dx * e2[2]
    pz = dx * e2[1] - dy * e2[0]
    det = e1[0] * px + e1[1] * py + e1[2] * pz
    if -_DET_EPS < det < _DET_EPS:
        return np.inf
    inv_det = 1.0 / det
    tx = ox - v0[0]
    ty = oy - v0[1]
    tz = oz - v0[2]
    u = (tx * px + ty * py + tz * pz) * inv_det
    if u < -_BARY_EPS or u > 1.0 + _BARY_EPS:
        return np.inf
    qx = ty * e1[2] - tz * e1[1]
    qy = tz * e1[0] - tx * e1[2]
    qz = tx * e1[1] - ty * e1[0]
    v = (dx * qx + dy * qy + dz * qz) * inv_det
    if v < -_BARY_EPS or u + v > 1.0 + _BARY_EPS:
        return np.inf
    t = (e2[0] * qx + e2[1] * qy + e2[2] * qz) * inv_det
    if t > 0.0 and t <= t_best:
        return t
    return np.inf


@numba.njit(cache=True, nogil=True)
def bvh_raycast(
    node_bmin,
    node_bmax,
    node_left,
    node_right,
    node_start,
    node_count,
    order,
    v0,
    e1,
    e2,
    origins,
    dirs,
    t_max,
    out,
):
    """Nearest-hit distances for a batch of rays; inf where nothing is hit."""
    n_rays = origins.shape[0]
    stack = np.empty(128, np.int32)
    for r in range(n_rays):
        ox = origins[r, 0]
        oy = origins[r, 1]
        oz = origins[r, 2]
        dx = dirs[r, 0]
        dy = dirs[r, 1]
        dz = dirs[r, 2]
        best = t_max[r]
        found = False
        stack[0] = 0
        top = 1
        while top > 0:
            top -= 1
            node = stack[top]
            if not _slab_hit(
                node_bmin[node], node_bmax[node], ox, oy, oz, dx, dy, dz, best
            ):
                continue
            cnt = node_count[node]
            if cnt > 0:
                s = node_start[node]
                for i in range(s, s + cnt):
                    t = order[i]
                    h = _tri_hit(v0[t], e1[t], e2[t], ox, oy, oz, dx, dy, dz, best)
                    if h < best or (h == best and not found):
                        best = h
                        found = True
            else:
                stack[top] = node_left[node]
                top += 1
                stack[top] = node_right[node]
                top += 1
        out[r] = best if found else np.inf
    return out


@numba.njit(cache=True, nogil=True, inline="always")
def _edge_accepts(e, du, dv):
    """Top-left fill rule: boundary pixels belong to top or left edges only."""
    if e > 0.0:
        return True
    if e == 0.0:
        return dv < 0.0 or (dv == 0.0 and du > 0.0)
    return False


@numba.njit(cache=True, nogil=True)
def _raster_screen_tri(depth, u0, v0, z0, u1, v1, z1, u2, v2, z2, width, height):
    """Rasterize one screen-space triangle, z given as 1/depth at each vertex."""
    area2 = (u1 - u0) * (v2 - v0) - (v1 - v0) * (u2 - u0)
    if area2 < 0.0:
        u1, u2 = u2, u1
        v1, v2 = v2, v1
        z1, z2 = z2, z1
        area2 = -area2
    if area2 < 1e-12:
        return

    umin = min(u0, min(u1, u2))
    umax = max(u0, max(u1, u2))
    vmin = min(v0, min(v1, v2))
    vmax = max(v0, max(v1, v2))
    x_lo = max(0, int(np.ceil(umin)))
    x_hi = min(width - 1, int(np.floor(umax)))
    y_lo = max(0, int(np.ceil(vmin)))
    y_hi = min(height - 1, int(np.floor(vmax)))
    if x_lo > x_hi or y_lo > y_hi:
        return

    du01 = u1 - u0
    dv01 = v1 - v0
    du12 = u2 - u1
    dv12 = v2 - v1
    du20 = u0 - u2
    dv20 = v0 - v2
    inv_area = 1.0 / area2

    for py in range(y_lo, y_hi + 1):
        fy = float(py)
        for px in range(x_lo, x_hi + 1):
            fx = float(px)
            e01 = du01 * (fy - v0) - dv01 * (fx - u0)
            e12 = du12 * (fy - v1) - dv12 * (fx - u1)
            e20 = du20 * (fy - v2) - dv20 * (fx - u2)
            if (
                _edge_accepts(e01, du01, dv01)
                and _edge_accepts(e12, du12, dv12)
                and _edge_accepts(e20, du20, dv20)
            ):
                iz = (e12 * z0 + e20 * z1 + e01 * z2) * inv_area
                if iz > 0.0:
                    d = 1.0 / iz
                    if d < depth[py, px]:
                        depth[py, px] = d


@numba.njit(cache=True, nogil=True)
def raster_depth(cam_xyz, tris, width, height, fx, fy, cx, cy, near, depth):
    """Depth-rasterize triangles given camera-space vertices.

    cam_xyz rows are (x right, y up, d axial depth). Triangles are clipped
    against d >= near, projected with u = cx + fx*x/d, v = cy - fy*y/d, and
    z-tested with perspective-correct 1/d interpolation. No far clipping:
    depths past the camera's max range are recorded and gated later.
    """
    n_tris = tris.shape[0]
    ppx = np.empty(4, np.float64)
    ppy = np.empty(4, np.float64)
    ppd = np.empty(4, np.float64)
    for ti in range(n_tris):
        ia = tris[ti, 0]
        ib = tris[ti, 1]
        ic = tris[ti, 2]
        n_poly = 0
        for k in range(3):
            if k == 0:
                ja, jb = ia, ib
            elif k == 1:
                ja, jb = ib, ic
            else:
                ja, jb = ic, ia
            da = cam_xyz[ja, 2]
            db = cam_xyz[jb, 2]
            a_in = da >= near
            b_in = db >= near
            if a_in:
                ppx[n_poly] = cam_xyz[ja, 0]
                ppy[n_poly] = cam_xyz[ja, 1]
                ppd[n_poly] = da
                n_poly += 1
            if a_in != b_in:
                t = (near - da) / (db - da)
                ppx[n_poly] = cam_xyz[ja, 0] + t * (cam_xyz[jb, 0] - cam_xyz[ja, 0])
                ppy[n_poly] = cam_xyz[ja, 1] + t * (cam_xyz[jb, 1] - cam_xyz[ja, 1])
                ppd[n_poly] = near
                n_poly += 1
        if n_poly < 3:
            continue

        su = np.empty(4, np.float64)
        sv = np.empty(4, np.float64)
        sz = np.empty(4, np.float64)
        for k in range(n_poly):
            d = ppd[k]
            su[k] = cx + fx * (ppx[k] / d)
            sv[k] = cy - fy * (ppy[k] / d)
            sz[k] = 1.0 / d
        for k in range(1, n_poly - 1):
            _raster_screen_tri(
                depth,
                su[0],
                sv[0],
                sz[0],
                su[k],
                sv[k],
                sz[k],
                su[k + 1],
                sv[k + 1],
                sz[k + 1],
                width,
                height,
            )
    return depth

"""Numba kernels: deterministic tile-parallel path tracing.

Scene geometry arrives flattened into numpy arrays (see transport.compile_scene).
Every (pixel, sample) pair owns a counter-based RNG stream derived from
(seed, pixel index, sample index), so images are bit-identical for any
worker count or tile size.  All distances in mm.

Primitive type codes in prim_i[:, 0]:
    0 plain box, 1 box with cubic 2-region face partition,
    2 box with 3-region ragged partition, 3 ellipsoid, 4 tube wall.
prim_i[:, 1:4] hold per-region material ids.  Material table columns:
    0 final factor, 1 scattering factor, 2 absorption factor, 3 HG g,
    4 ior, 5 mu_t (1/mfp), 6 walk albedo, 7 gt absorption, 8 gt scattering.
"""

import math

import numpy as np
from numba import njit, prange

U64 = np.uint64

_GOLD = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_PIX_KEY = U64(0xD6E8FEB86659FD93)
_SMP_KEY = U64(0xCA5A826395121157)
_INV53 = 1.0 / 9007199254740992.0

EPS_T = 1e-7  # parametric lower bound for ray crossings
PUSH = 1e-6  # mm nudge across a surface
T_NONE = 1.0e30

# interaction / walk status codes
ALIVE = 0
DEAD = 1
CAPPED = 2


# ---------------------------------------------------------------------------
# Counter-based RNG (splitmix64 stream keyed by pixel and sample)
# ---------------------------------------------------------------------------
@njit(cache=True)
def rng_seed_stream(st, seed, pix, smp):
    z = U64(seed) ^ (U64(pix) * _PIX_KEY) ^ (U64(smp) * _SMP_KEY)
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    st[0] = z ^ (z >> U64(31))


@njit(cache=True)
def rng_uniform(st):
    st[0] = st[0] + _GOLD
    z = st[0]
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    z = z ^ (z >> U64(31))
    return (z >> U64(11)) * _INV53


# ---------------------------------------------------------------------------
# Primitive crossings
# ---------------------------------------------------------------------------
@njit(cache=True, fastmath=True)
def _box_crossings(ox, oy, oz, dx, dy, dz, cx, cy, cz, hx, hy, hz):
    tmin = -T_NONE
    tmax = T_NONE
    for axis in range(3):
        if axis == 0:
            o, d, c, h = ox, dx, cx, hx
        elif axis == 1:
            o, d, c, h = oy, dy, cy, hy
        else:
            o, d, c, h = oz, dz, cz, hz
        if abs(d) < 1e-14:
            if abs(o - c) > h:
                return T_NONE, T_NONE
        else:
            t0 = (c - h - o) / d
            t1 = (c + h - o) / d
            if t0 > t1:
                t0, t1 = t1, t0
            if t0 > tmin:
                tmin = t0
            if t1 < tmax:
                tmax = t1
    if tmin > tmax:
        return T_NONE, T_NONE
    return tmin, tmax


@njit(cache=True, fastmath=True)
def _ellipsoid_crossings(ox, oy, oz, dx, dy, dz, cx, cy, cz, ax, ay, az):
    # scale to unit sphere
    px = (ox - cx) / ax
    py = (oy - cy) / ay
    pz = (oz - cz) / az
    qx = dx / ax
    qy = dy / ay
    qz = dz / az
    a = qx * qx + qy * qy + qz * qz
    b = px * qx + py * qy + pz * qz
    c = px * px + py * py + pz * pz - 1.0
    disc = b * b - a * c
    if disc <= 0.0 or a == 0.0:
        return T_NONE, T_NONE
    s = math.sqrt(disc)
    return (-b - s) / a, (-b + s) / a


@njit(cache=True, fastmath=True)
def _tube_min_crossing(ox, oy, oz, dx, dy, dz, z0, z1, r_in, r_out, tmin, best):
    """Smallest tube-wall crossing param in (tmin, best), or best unchanged."""
    a = dx * dx + dy * dy
    if a > 1e-16:
        b = ox * dx + oy * dy
        for r in (r_in, r_out):
            c = ox * ox + oy * oy - r * r
            disc = b * b - a * c
            if disc > 0.0:
                s = math.sqrt(disc)
                for t in ((-b - s) / a, (-b + s) / a):
                    if tmin < t < best:
                        z = oz + t * dz
                        if z0 <= z <= z1:
                            best = t
    if abs(dz) > 1e-14:
        for zc in (z0, z1):
            t = (zc - oz) / dz
            if tmin < t < best:
                x = ox + t * dx
                y = oy + t * dy
                rr = math.sqrt(x * x + y * y)
                if r_in <= rr <= r_out:
                    best = t
    return best


@njit(cache=True, fastmath=True)
def next_hit(prim_i, prim_f, ox, oy, oz, dx, dy, dz, tmin):
    """Nearest surface crossing with t > tmin over all primitives."""
    best_t = T_NONE
    best_k = -1
    for k in range(prim_i.shape[0]):
        typ = prim_i[k, 0]
        if typ <= 2:
            t0, t1 = _box_crossings(
                ox, oy, oz, dx, dy, dz,
                prim_f[k, 0], prim_f[k, 1], prim_f[k, 2],
                prim_f[k, 3], prim_f[k, 4], prim_f[k, 5],
            )
            if tmin < t0 < best_t:
                best_t = t0
                best_k = k
            if tmin < t1 < best_t:
                best_t = t1
                best_k = k
        elif typ == 3:
            t0, t1 = _ellipsoid_crossings(
                ox, oy, oz, dx, dy, dz,
                prim_f[k, 0], prim_f[k, 1], prim_f[k, 2],
                prim_f[k, 3], prim_f[k, 4], prim_f[k, 5],
            )
            if tmin < t0 < best_t:
                best_t = t0
                best_k = k
            if tmin < t1 < best_t:
                best_t = t1
                best_k = k
        else:
            t = _tube_min_crossing(
                ox, oy, oz, dx, dy, dz,
                prim_f[k, 2], prim_f[k, 3], prim_f[k, 4], prim_f[k, 5],
                tmin, best_t,
            )
            if t < best_t:
                best_t = t
                best_k = k
    return best_t, best_k


# ---------------------------------------------------------------------------
# Point classification (mirrors scene.classify_point)
# ---------------------------------------------------------------------------
@njit(cache=True, fastmath=True)
def _interp_poly(poly, off, cnt, x):
    if x <= poly[off, 0]:
        return poly[off, 1]
    if x >= poly[off + cnt - 1, 0]:
        return poly[off + cnt - 1, 1]
    for i in range(cnt - 1):
        x1 = poly[off + i + 1, 0]
        if x <= x1:
            x0 = poly[off + i, 0]
            y0 = poly[off + i, 1]
            y1 = poly[off + i + 1, 1]
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    return poly[off + cnt - 1, 1]


@njit(cache=True, fastmath=True)
def _box_region_material(prim_i, prim_f, poly, k, x, y):
    typ = prim_i[k, 0]
    if typ == 0:
        return prim_i[k, 1]
    if typ == 1:
        c0 = prim_f[k, 6]
        c1 = prim_f[k, 7]
        c2 = prim_f[k, 8]
        c3 = prim_f[k, 9]
        yb = c0 + x * (c1 + x * (c2 + x * c3))
        return prim_i[k, 1] if y < yb else prim_i[k, 2]
    lo_off = int(prim_f[k, 6])
    lo_cnt = int(prim_f[k, 7])
    hi_off = int(prim_f[k, 8])
    hi_cnt = int(prim_f[k, 9])
    lo = _interp_poly(poly, lo_off, lo_cnt, x)
    if y < lo:
        return prim_i[k, 1]
    hi = _interp_poly(poly, hi_off, hi_cnt, x)
    return prim_i[k, 2] if y < hi else prim_i[k, 3]


@njit(cache=True, fastmath=True)
def classify(prim_i, prim_f, poly, x, y, z):
    """Material id at a point; primitives are pre-sorted by priority."""
    for k in range(prim_i.shape[0]):
        typ = prim_i[k, 0]
        if typ <= 2:
            if (
                abs(x - prim_f[k, 0]) <= prim_f[k, 3]
                and abs(y - prim_f[k, 1]) <= prim_f[k, 4]
                and abs(z - prim_f[k, 2]) <= prim_f[k, 5]
            ):
                return _box_region_material(prim_i, prim_f, poly, k, x, y)
        elif typ == 3:
            qx = (x - prim_f[k, 0]) / prim_f[k, 3]
            qy = (y - prim_f[k, 1]) / prim_f[k, 4]
            qz = (z - prim_f[k, 2]) / prim_f[k, 5]
            if qx * qx + qy * qy + qz * qz <= 1.0:
                return prim_i[k, 1]
        else:
            if prim_f[k, 2] <= z <= prim_f[k, 3]:
                r = math.sqrt(x * x + y * y)
                if prim_f[k, 4] <= r <= prim_f[k, 5]:
                    return prim_i[k, 1]
    return -1


@njit(cache=True, fastmath=True)
def surface_material(prim_i, prim_f, poly, k, x, y, z):
    typ = prim_i[k, 0]
    if typ <= 2:
        return _box_region_material(prim_i, prim_f, poly, k, x, y)
    return prim_i[k, 1]


@njit(cache=True, fastmath=True)
def prim_normal(prim_i, prim_f, k, x, y, z):
    """Outward unit normal of primitive k at a surface point."""
    typ = prim_i[k, 0]
    if typ <= 2:
        rx = (x - prim_f[k, 0]) / prim_f[k, 3]
        ry = (y - prim_f[k, 1]) / prim_f[k, 4]
        rz = (z - prim_f[k, 2]) / prim_f[k, 5]
        ax, ay, az = abs(rx), abs(ry), abs(rz)
        if ax >= ay and ax >= az:
            return (1.0 if rx > 0 else -1.0), 0.0, 0.0
        if ay >= az:
            return 0.0, (1.0 if ry > 0 else -1.0), 0.0
        return 0.0, 0.0, (1.0 if rz > 0 else -1.0)
    if typ == 3:
        nx = (x - prim_f[k, 0]) / (prim_f[k, 3] * prim_f[k, 3])
        ny = (y - prim_f[k, 1]) / (prim_f[k, 4] * prim_f[k, 4])
        nz = (z - prim_f[k, 2]) / (prim_f[k, 5] * prim_f[k, 5])
        n = math.sqrt(nx * nx + ny * ny + nz * nz)
        return nx / n, ny / n, nz / n
    z0, z1, r_in, r_out = prim_f[k, 2], prim_f[k, 3], prim_f[k, 4], prim_f[k, 5]
    r = math.sqrt(x * x + y * y)
    d_in = abs(r - r_in)
    d_out = abs(r - r_out)
    d_z0 = abs(z - z0)
    d_z1 = abs(z - z1)
    m = min(d_in, min(d_out, min(d_z0, d_z1)))
    if m == d_in and r > 0:
        return -x / r, -y / r, 0.0  # faces the lumen
    if m == d_out and r > 0:
        return x / r, y / r, 0.0
    if m == d_z0:
        return 0.0, 0.0, -1.0
    return 0.0, 0.0, 1.0


@njit(cache=True, fastmath=True)
def union_exit(prim_i, prim_f, poly, ox, oy, oz, dx, dy, dz):
    """Distance to the first crossing beyond which the point is background."""
    t_cur = EPS_T
    for _ in range(64):
        t, k = next_hit(prim_i, prim_f, ox, oy, oz, dx, dy, dz, t_cur)
        if k < 0:
            return T_NONE
        tp = t + 1e-5
        if classify(prim_i, prim_f, poly, ox + tp * dx, oy + tp * dy, oz + tp * dz) < 0:
            return t
        t_cur = t + 1e-9
    return T_NONE


# ---------------------------------------------------------------------------
# Optics helpers
# ---------------------------------------------------------------------------
@njit(cache=True, fastmath=True)
def fresnel_reflectance(cos_i, n1, n2):
    s2 = (n1 / n2) * (n1 / n2) * (1.0 - cos_i * cos_i)
    if s2 >= 1.0:
        return 1.0
    cos_t = math.sqrt(1.0 - s2)
    rs = (n1 * cos_i - n2 * cos_t) / (n1 * cos_i + n2 * cos_t)
    rp = (n1 * cos_t - n2 * cos_i) / (n1 * cos_t + n2 * cos_i)
    return 0.5 * (rs * rs + rp * rp)


@njit(cache=True, fastmath=True)
def hg_cos_theta(g, xi):
    if abs(g) < 1e-6:
        return 1.0 - 2.0 * xi
    s = (1.0 - g * g) / (1.0 - g + 2.0 * g * xi)
    c = (1.0 + g * g - s * s) / (2.0 * g)
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    return c


@njit(cache=True, fastmath=True)
def hg_phase(g, cos_t):
    denom = 1.0 + g * g - 2.0 * g * cos_t
    return (1.0 - g * g) / (4.0 * math.pi * denom * math.sqrt(denom))


@njit(cache=True, fastmath=True)
def rotate_about(dx, dy, dz, cos_t, phi):
    sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
    if abs(dz) < 0.999:
        # e1 = normalize(cross(z, d))
        inv = 1.0 / math.sqrt(dx * dx + dy * dy)
        e1x, e1y, e1z = -dy * inv, dx * inv, 0.0
    else:
        e1x, e1y, e1z = 1.0, 0.0, 0.0
    # e2 = cross(d, e1)
    e2x = dy * e1z - dz * e1y
    e2y = dz * e1x - dx * e1z
    e2z = dx * e1y - dy * e1x
    cp = math.cos(phi)
    sp = math.sin(phi)
    nx = cos_t * dx + sin_t * (cp * e1x + sp * e2x)
    ny = cos_t * dy + sin_t * (cp * e1y + sp * e2y)
    nz = cos_t * dz + sin_t * (cp * e1z + sp * e2z)
    inv = 1.0 / math.sqrt(nx * nx + ny * ny + nz * nz)
    return nx * inv, ny * inv, nz * inv


@njit(cache=True, fastmath=True)
def pattern_value(pat, u, v):
    return pat[4] + pat[5] * math.cos(2.0 * math.pi * pat[0] * (u * pat[2] + v * pat[3]) + pat[1])


@njit(cache=True, fastmath=True)
def source_at(proj, pat, x, y, z):
    """Direction to the source, incident irradiance, and source distance."""
    px, py, pz = proj[1], proj[2], proj[3]
    rx, ry, rz = proj[4], proj[5], proj[6]
    ux, uy, uz = proj[7], proj[8], proj[9]
    fx, fy, fz = proj[10], proj[11], proj[12]
    e_scale = proj[13]
    half_u = proj[14]
    half_v = proj[15]
    if proj[0] == 0.0:
        # orthographic: parallel beam along forward
        u = (x - px) * rx + (y - py) * ry + (z - pz) * rz
        v = (x - px) * ux + (y - py) * uy + (z - pz) * uz
        if abs(u) > half_u or abs(v) > half_v:
            return -fx, -fy, -fz, 0.0, T_NONE
        e = e_scale * pattern_value(pat, u, v)
        return -fx, -fy, -fz, e, T_NONE
    # perspective: point source at the apex
    vx = px - x
    vy = py - y
    vz = pz - z
    r = math.sqrt(vx * vx + vy * vy + vz * vz)
    if r < 1e-9:
        return 0.0, 0.0, 1.0, 0.0, 0.0
    wx, wy, wz = vx / r, vy / r, vz / r  # toward the source
    # apex->point direction projected onto the virtual pattern plane
    aw = -(wx * fx + wy * fy + wz * fz)
    if aw <= 1e-9:
        return wx, wy, wz, 0.0, r
    ref = proj[16]
    u = ref * (-(wx * rx + wy * ry + wz * rz)) / aw
    v = ref * (-(wx * ux + wy * uy + wz * uz)) / aw
    if abs(u) > half_u or abs(v) > half_v:
        return wx, wy, wz, 0.0, r
    e = e_scale * pattern_value(pat, u, v) / (r * r)
    return wx, wy, wz, e, r


@njit(cache=True, fastmath=True)
def straight_through(mats, m, cos_i, exiting):
    """Expected straight-line transmission of one surface crossing."""
    f = mats[m, 0]
    s = mats[m, 1]
    a = mats[m, 2]
    ior = mats[m, 4]
    if exiting:
        r = fresnel_reflectance(cos_i, ior, 1.0)
    else:
        r = fresnel_reflectance(cos_i, 1.0, ior)
    return f * (1.0 - s) + (1.0 - f) * (0.5 + 0.5 * (1.0 - r) * a)


@njit(cache=True, fastmath=True)
def shadow_factor(st, prim_i, prim_f, poly, mats, mu_max, x, y, z, wx, wy, wz, dist):
    """Transmittance from a walk event toward the source.

    Ratio-tracks out of the turbid complex containing the event, then applies
    per-crossing expected straight transmission for any further surfaces
    before the source.  Shadow rays are treated as straight through
    refractive crossings.
    """
    T = 1.0
    start_t = 0.0
    if classify(prim_i, prim_f, poly, x, y, z) >= 0:
        d_exit = union_exit(prim_i, prim_f, poly, x, y, z, wx, wy, wz)
        if d_exit >= dist:
            d_exit = dist  # source sits inside the medium span
        travel = 0.0
        while True:
            step = -math.log(1.0 - rng_uniform(st)) / mu_max
            travel += step
            if travel >= d_exit:
                break
            mid = classify(prim_i, prim_f, poly, x + travel * wx, y + travel * wy, z + travel * wz)
            if mid < 0:
                break
            T *= 1.0 - mats[mid, 5] / mu_max
            if T <= 0.0:
                return 0.0
        start_t = d_exit + PUSH
        if start_t >= dist:
            return T
    ox = x + start_t * wx
    oy = y + start_t * wy
    oz = z + start_t * wz
    remaining = dist - start_t
    for _ in range(16):
        t, k = next_hit(prim_i, prim_f, ox, oy, oz, wx, wy, wz, EPS_T)
        if k < 0 or t >= remaining:
            return T
        hx = ox + t * wx
        hy = oy + t * wy
        hz = oz + t * wz
        nx, ny, nz = prim_normal(prim_i, prim_f, k, hx, hy, hz)
        dn = wx * nx + wy * ny + wz * nz
        m = surface_material(prim_i, prim_f, poly, k, hx, hy, hz)
        T *= straight_through(mats, m, abs(dn), dn > 0.0)
        if T < 1e-9:
            return 0.0
        ox = hx + PUSH * wx
        oy = hy + PUSH * wy
        oz = hz + PUSH * wz
        remaining -= t + PUSH
    return T


# ---------------------------------------------------------------------------
# Subsurface random walk (backward, with next-event estimation)
# ---------------------------------------------------------------------------
@njit(cache=True, fastmath=True)
def walk(
    st, prim_i, prim_f, poly, mats, mu_max, proj, pat,
    x, y, z, dx, dy, dz, w,
    roulette_start, roulette_survival, step_cap,
):
    """Trace a captured ray through the turbid volume.

    Returns (status, contrib, x, y, z, dx, dy, dz, w); status ALIVE means the
    ray escaped and the surface path continues from the returned state.
    """
    contrib = 0.0
    x += PUSH * dx
    y += PUSH * dy
    z += PUSH * dz
    travel_left = union_exit(prim_i, prim_f, poly, x, y, z, dx, dy, dz)
    steps = 0
    while True:
        step = -math.log(1.0 - rng_uniform(st)) / mu_max
        if step >= travel_left:
            t = travel_left + PUSH
            return ALIVE, contrib, x + t * dx, y + t * dy, z + t * dz, dx, dy, dz, w
        x += step * dx
        y += step * dy
        z += step * dz
        travel_left -= step
        mid = classify(prim_i, prim_f, poly, x, y, z)
        if mid < 0:
            return ALIVE, contrib, x + PUSH * dx, y + PUSH * dy, z + PUSH * dz, dx, dy, dz, w
        if rng_uniform(st) * mu_max >= mats[mid, 5]:
            continue  # null collision; direction unchanged
        w *= mats[mid, 6]
        if w <= 0.0:
            return DEAD, contrib, x, y, z, dx, dy, dz, 0.0
        steps += 1
        g = mats[mid, 3]
        wx, wy, wz, e_in, dist = source_at(proj, pat, x, y, z)
        if e_in > 0.0:
            cos_t = wx * dx + wy * dy + wz * dz
            T = shadow_factor(st, prim_i, prim_f, poly, mats, mu_max, x, y, z, wx, wy, wz, dist)
            if T > 0.0:
                contrib += w * hg_phase(g, cos_t) * T * e_in
        dx, dy, dz = rotate_about(dx, dy, dz, hg_cos_theta(g, rng_uniform(st)), 2.0 * math.pi * rng_uniform(st))
        travel_left = union_exit(prim_i, prim_f, poly, x, y, z, dx, dy, dz)
        if steps >= step_cap:
            return CAPPED, contrib, x, y, z, dx, dy, dz, w
        if steps > roulette_start:
            p = roulette_survival if roulette_survival > w else w  # keeps w <= launch weight
            if rng_uniform(st) >= p:
                return DEAD, contrib, x, y, z, dx, dy, dz, w
            w /= p


@njit(cache=True, fastmath=True)
def trace_sample(
    st, prim_i, prim_f, poly, mats, mu_max, proj, pat,
    ox, oy, oz, dx, dy, dz,
    max_bounces, roulette_start, roulette_survival, step_cap, tile_stats,
):
    """One camera path; returns accumulated radiance contribution."""
    w = 1.0
    contrib = 0.0
    bounce = 0
    while bounce < max_bounces:
        t, k = next_hit(prim_i, prim_f, ox, oy, oz, dx, dy, dz, EPS_T)
        if k < 0:
            break
        hx = ox + t * dx
        hy = oy + t * dy
        hz = oz + t * dz
        m = surface_material(prim_i, prim_f, poly, k, hx, hy, hz)
        f = mats[m, 0]
        xi1 = rng_uniform(st)
        xi2 = rng_uniform(st)
        if xi1 < f:
            if xi2 < mats[m, 1]:
                status, c, ox, oy, oz, dx, dy, dz, w = walk(
                    st, prim_i, prim_f, poly, mats, mu_max, proj, pat,
                    hx, hy, hz, dx, dy, dz, w,
                    roulette_start, roulette_survival, step_cap,
                )
                contrib += c
                if w > tile_stats[1]:
                    tile_stats[1] = w
                if status == CAPPED:
                    tile_stats[0] += 1.0
                if status != ALIVE:
                    break
            else:
                ox = hx + PUSH * dx
                oy = hy + PUSH * dy
                oz = hz + PUSH * dz
        else:
            if xi2 < 0.5:
                ox = hx + PUSH * dx
                oy = hy + PUSH * dy
                oz = hz + PUSH * dz
            else:
                w *= mats[m, 2]
                if w <= 1e-7:
                    break
                nx, ny, nz = prim_normal(prim_i, prim_f, k, hx, hy, hz)
                dn = dx * nx + dy * ny + dz * nz
                ior = mats[m, 4]
                if dn < 0.0:
                    n1, n2 = 1.0, ior
                else:
                    n1, n2 = ior, 1.0
                    nx, ny, nz = -nx, -ny, -nz
                    dn = -dn
                cos_i = -dn
                refl = fresnel_reflectance(cos_i, n1, n2)
                if rng_uniform(st) < refl:
                    dx -= 2.0 * dn * nx
                    dy -= 2.0 * dn * ny
                    dz -= 2.0 * dn * nz
                else:
                    eta = n1 / n2
                    s2 = eta * eta * (1.0 - cos_i * cos_i)
                    if s2 >= 1.0:  # total internal reflection
                        dx -= 2.0 * dn * nx
                        dy -= 2.0 * dn * ny
                        dz -= 2.0 * dn * nz
                    else:
                        cos_tr = math.sqrt(1.0 - s2)
                        dx = eta * dx + (eta * cos_i - cos_tr) * nx
                        dy = eta * dy + (eta * cos_i - cos_tr) * ny
                        dz = eta * dz + (eta * cos_i - cos_tr) * nz
                inv = 1.0 / math.sqrt(dx * dx + dy * dy + dz * dz)
                dx *= inv
                dy *= inv
                dz *= inv
                ox = hx + PUSH * dx
                oy = hy + PUSH * dy
                oz = hz + PUSH * dz
        if w > tile_stats[1]:
            tile_stats[1] = w
        bounce += 1
        if bounce > roulette_start:
            p = roulette_survival if roulette_survival > w else w
            if rng_uniform(st) >= p:
                break
            w /= p
    return contrib


@njit(cache=True, parallel=True, fastmath=True)
def render_lit(
    out, stats, prim_i, prim_f, poly, mats, mu_max, cam, proj, pat,
    spp, seed, max_bounces, roulette_start, roulette_survival, step_cap, tile, jitter,
):
    """Tile-parallel lit render; out is (H, W) float64 mean radiance.

    stats is (n_tiles, 2): [walk-cap terminations, max path throughput].
    """
    h = out.shape[0]
    w_img = out.shape[1]
    n_tx = (w_img + tile - 1) // tile
    n_ty = (h + tile - 1) // tile
    cx, cy, cz = cam[0], cam[1], cam[2]
    rx, ry, rz = cam[3], cam[4], cam[5]
    ux, uy, uz = cam[6], cam[7], cam[8]
    fx, fy, fz = cam[9], cam[10], cam[11]
    tan_hf = cam[12]
    tan_vf = cam[12] * h / w_img
    for tidx in prange(n_tx * n_ty):
        st = np.empty(1, U64)
        ty = tidx // n_tx
        tx = tidx % n_tx
        i1 = min((ty + 1) * tile, h)
        j1 = min((tx + 1) * tile, w_img)
        for i in range(ty * tile, i1):
            for j in range(tx * tile, j1):
                pix = i * w_img + j
                acc = 0.0
                for s in range(spp):
                    rng_seed_stream(st, seed, pix, s)
                    if jitter:
                        jx = rng_uniform(st)
                        jy = rng_uniform(st)
                    else:
                        jx = 0.5
                        jy = 0.5
                    ax = ((j + jx) / w_img - 0.5) * 2.0 * tan_hf
                    ay = (0.5 - (i + jy) / h) * 2.0 * tan_vf
                    dx = fx + ax * rx + ay * ux
                    dy = fy + ax * ry + ay * uy
                    dz = fz + ax * rz + ay * uz
                    inv = 1.0 / math.sqrt(dx * dx + dy * dy + dz * dz)
                    acc += trace_sample(
                        st, prim_i, prim_f, poly, mats, mu_max, proj, pat,
                        cx, cy, cz, dx * inv, dy * inv, dz * inv,
                        max_bounces, roulette_start, roulette_survival, step_cap,
                        stats[tidx],
                    )
                out[i, j] = acc / spp


@njit(cache=True, parallel=True, fastmath=True)
def render_hit_ids(out_ids, prim_i, prim_f, poly, cam):
    """First-hit material id per pixel (single centre ray, no RNG)."""
    h = out_ids.shape[0]
    w_img = out_ids.shape[1]
    cx, cy, cz = cam[0], cam[1], cam[2]
    rx, ry, rz = cam[3], cam[4], cam[5]
    ux, uy, uz = cam[6], cam[7], cam[8]
    fx, fy, fz = cam[9], cam[10], cam[11]
    tan_hf = cam[12]
    tan_vf = cam[12] * h / w_img
    for i in prange(h):
        for j in range(w_img):
            ax = ((j + 0.5) / w_img - 0.5) * 2.0 * tan_hf
            ay = (0.5 - (i + 0.5) / h) * 2.0 * tan_vf
            dx = fx + ax * rx + ay * ux
            dy = fy + ax * ry + ay * uy
            dz = fz + ax * rz + ay * uz
            inv = 1.0 / math.sqrt(dx * dx + dy * dy + dz * dz)
            t, k = next_hit(prim_i, prim_f, cx, cy, cz, dx * inv, dy * inv, dz * inv, EPS_T)
            if k < 0:
                out_ids[i, j] = -1
            else:
                out_ids[i, j] = surface_material(
                    prim_i, prim_f, poly, k,
                    cx + t * dx * inv, cy + t * dy * inv, cz + t * dz * inv,
                )

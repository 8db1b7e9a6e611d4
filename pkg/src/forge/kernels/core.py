"""Scalar ray-tracing kernels.

Written in numba-compatible scalar style: no allocation in inner loops,
tuples for small vectors, counter-based 32-bit RNG with explicit masking so
the JIT and interpreted backends produce bit-identical images.
"""

import numpy as np

from . import maybe_njit

_M32 = 0xFFFFFFFF
_INV32 = 1.0 / 4294967296.0
_EPS = 1e-5


@maybe_njit
def _wang(x):
    x = ((x & _M32) ^ 61) ^ ((x & _M32) >> 16)
    x = (x * 9) & _M32
    x ^= x >> 4
    x = (x * 0x27D4EB2D) & _M32
    x ^= x >> 15
    return x


@maybe_njit
def _stream(seed, pixel, sample):
    s = _wang((seed & _M32) ^ _wang(pixel ^ _wang(sample + 0x9E3779B9)))
    if s == 0:
        s = 0x9E3779B9
    return s


@maybe_njit
def _next(state):
    state ^= (state << 13) & _M32
    state ^= state >> 17
    state ^= (state << 5) & _M32
    return state & _M32


@maybe_njit
def _u01(state):
    # in [0, 1)
    return state * _INV32


@maybe_njit
def _normalize(x, y, z):
    n = np.sqrt(x * x + y * y + z * z)
    return x / n, y / n, z / n


@maybe_njit
def _cross(ax, ay, az, bx, by, bz):
    return ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx


@maybe_njit
def _onb(nx, ny, nz):
    # Frisvad-style orthonormal basis about a unit normal.
    if nz < -0.9999999:
        return (0.0, -1.0, 0.0), (-1.0, 0.0, 0.0)
    a = 1.0 / (1.0 + nz)
    b = -nx * ny * a
    t = (1.0 - nx * nx * a, b, -nx)
    s = (b, 1.0 - ny * ny * a, -ny)
    return t, s


@maybe_njit
def _hit_triangles(ox, oy, oz, dx, dy, dz, tri, t_max):
    """Nearest triangle hit; returns (t, index) with index=-1 on miss."""
    best_t = t_max
    best_i = -1
    for i in range(tri.shape[0]):
        ax = tri[i, 0]
        ay = tri[i, 1]
        az = tri[i, 2]
        e1x = tri[i, 3] - ax
        e1y = tri[i, 4] - ay
        e1z = tri[i, 5] - az
        e2x = tri[i, 6] - ax
        e2y = tri[i, 7] - ay
        e2z = tri[i, 8] - az
        px, py, pz = _cross(dx, dy, dz, e2x, e2y, e2z)
        det = e1x * px + e1y * py + e1z * pz
        if -1e-12 < det < 1e-12:
            continue
        inv = 1.0 / det
        sx = ox - ax
        sy = oy - ay
        sz = oz - az
        u = (sx * px + sy * py + sz * pz) * inv
        if u < 0.0 or u > 1.0:
            continue
        qx, qy, qz = _cross(sx, sy, sz, e1x, e1y, e1z)
        v = (dx * qx + dy * qy + dz * qz) * inv
        if v < 0.0 or u + v > 1.0:
            continue
        t = (e2x * qx + e2y * qy + e2z * qz) * inv
        if _EPS < t < best_t:
            best_t = t
            best_i = i
    return best_t, best_i


@maybe_njit
def _occluded(ox, oy, oz, dx, dy, dz, tri, t_max):
    for i in range(tri.shape[0]):
        ax = tri[i, 0]
        ay = tri[i, 1]
        az = tri[i, 2]
        e1x = tri[i, 3] - ax
        e1y = tri[i, 4] - ay
        e1z = tri[i, 5] - az
        e2x = tri[i, 6] - ax
        e2y = tri[i, 7] - ay
        e2z = tri[i, 8] - az
        px, py, pz = _cross(dx, dy, dz, e2x, e2y, e2z)
        det = e1x * px + e1y * py + e1z * pz
        if -1e-12 < det < 1e-12:
            continue
        inv = 1.0 / det
        sx = ox - ax
        sy = oy - ay
        sz = oz - az
        u = (sx * px + sy * py + sz * pz) * inv
        if u < 0.0 or u > 1.0:
            continue
        qx, qy, qz = _cross(sx, sy, sz, e1x, e1y, e1z)
        v = (dx * qx + dy * qy + dz * qz) * inv
        if v < 0.0 or u + v > 1.0:
            continue
        t = (e2x * qx + e2y * qy + e2z * qz) * inv
        if _EPS < t < t_max:
            return True
    return False


@maybe_njit
def _hit_spheres(ox, oy, oz, dx, dy, dz, centers, radii, t_max):
    best_t = t_max
    best_i = -1
    for i in range(centers.shape[0]):
        cx = centers[i, 0] - ox
        cy = centers[i, 1] - oy
        cz = centers[i, 2] - oz
        b = cx * dx + cy * dy + cz * dz
        c = cx * cx + cy * cy + cz * cz - radii[i] * radii[i]
        disc = b * b - c
        if disc <= 0.0:
            continue
        sq = np.sqrt(disc)
        t = b - sq
        if t < _EPS:
            t = b + sq
        if _EPS < t < best_t:
            best_t = t
            best_i = i
    return best_t, best_i


@maybe_njit
def _camera_ray(i, j, width, height, cam, tan_half):
    aspect = width / height
    x = (2.0 * (j + 0.5) / width - 1.0) * tan_half * aspect
    y = (1.0 - 2.0 * (i + 0.5) / height) * tan_half
    dx = x * cam[3] + y * cam[6] + cam[9]
    dy = x * cam[4] + y * cam[7] + cam[10]
    dz = x * cam[5] + y * cam[8] + cam[11]
    return _normalize(dx, dy, dz)


@maybe_njit
def _cosine_dir(nx, ny, nz, u1, u2):
    t, s = _onb(nx, ny, nz)
    r = np.sqrt(u1)
    phi = 2.0 * np.pi * u2
    lx = r * np.cos(phi)
    ly = r * np.sin(phi)
    lz = np.sqrt(max(0.0, 1.0 - u1))
    return (
        lx * t[0] + ly * s[0] + lz * nx,
        lx * t[1] + ly * s[1] + lz * ny,
        lx * t[2] + ly * s[2] + lz * nz,
    )


@maybe_njit
def gbuffer_kernel(cam, tan_half, width, height, tri, tri_albedo, tri_objid,
                   light_c, light_r):
    """First pass: albedo, world normal, linear depth, coverage, object id.

    Object ids: 0 background, 1 mesh, 2 ground, 3 emissive sphere.
    """
    albedo = np.zeros((height, width, 3))
    normal = np.zeros((height, width, 3))
    depth = np.zeros((height, width))
    objid = np.zeros((height, width), dtype=np.int32)
    for i in range(height):
        for j in range(width):
            dx, dy, dz = _camera_ray(i, j, width, height, cam, tan_half)
            ox = cam[0]
            oy = cam[1]
            oz = cam[2]
            t_tri, idx = _hit_triangles(ox, oy, oz, dx, dy, dz, tri, 1e30)
            t_sph, sidx = _hit_spheres(ox, oy, oz, dx, dy, dz, light_c, light_r, 1e30)
            if idx < 0 and sidx < 0:
                continue
            if sidx >= 0 and t_sph < t_tri:
                px = ox + t_sph * dx
                py = oy + t_sph * dy
                pz = oz + t_sph * dz
                nx, ny, nz = _normalize(px - light_c[sidx, 0],
                                        py - light_c[sidx, 1],
                                        pz - light_c[sidx, 2])
                depth[i, j] = t_sph
                objid[i, j] = 3
            else:
                ax = tri[idx, 0]
                e1x = tri[idx, 3] - ax
                e1y = tri[idx, 4] - tri[idx, 1]
                e1z = tri[idx, 5] - tri[idx, 2]
                e2x = tri[idx, 6] - ax
                e2y = tri[idx, 7] - tri[idx, 1]
                e2z = tri[idx, 8] - tri[idx, 2]
                nx, ny, nz = _cross(e1x, e1y, e1z, e2x, e2y, e2z)
                nx, ny, nz = _normalize(nx, ny, nz)
                if nx * dx + ny * dy + nz * dz > 0.0:
                    nx = -nx
                    ny = -ny
                    nz = -nz
                depth[i, j] = t_tri
                objid[i, j] = tri_objid[idx]
                albedo[i, j, 0] = tri_albedo[idx, 0]
                albedo[i, j, 1] = tri_albedo[idx, 1]
                albedo[i, j, 2] = tri_albedo[idx, 2]
            normal[i, j, 0] = nx
            normal[i, j, 1] = ny
            normal[i, j, 2] = nz
    return albedo, normal, depth, objid


@maybe_njit
def ao_kernel(cam, tan_half, width, height, tri, normal, depth, objid,
              n_samples, max_len, seed):
    """Cosine-weighted hemisphere occlusion per covered geometry pixel."""
    ao = np.ones((height, width))
    for i in range(height):
        for j in range(width):
            oid = objid[i, j]
            if oid == 0 or oid == 3:
                continue
            dx, dy, dz = _camera_ray(i, j, width, height, cam, tan_half)
            t = depth[i, j]
            nx = normal[i, j, 0]
            ny = normal[i, j, 1]
            nz = normal[i, j, 2]
            px = cam[0] + t * dx + _EPS * 10.0 * nx
            py = cam[1] + t * dy + _EPS * 10.0 * ny
            pz = cam[2] + t * dz + _EPS * 10.0 * nz
            pixel = i * width + j
            free = 0
            for k in range(n_samples):
                state = _stream(seed, pixel, k)
                state = _next(state)
                u1 = _u01(state)
                state = _next(state)
                u2 = _u01(state)
                wx, wy, wz = _cosine_dir(nx, ny, nz, u1, u2)
                if not _occluded(px, py, pz, wx, wy, wz, tri, max_len):
                    free += 1
            ao[i, j] = free / n_samples
    return ao


@maybe_njit
def render_kernel(cam, tan_half, width, height, tri, tri_albedo,
                  light_c, light_r, light_e, dl_dir, dl_e, env,
                  spp, n_vertices, seed, use_nee):
    """Path tracing, by default with next-event estimation toward spherical
    area lights; with use_nee == 0, brute-force unidirectional tracing that
    collects emission whenever a bounce ray happens to hit a light (much
    noisier for the same spp, used for the noisy low-quality tier).

    A bounce budget of B ray segments visits B-1 surface vertices (B=2 is
    direct lighting).  Directional-light response at a surface is
    albedo * strength * cos(incidence); the uniform environment contributes
    on escape only (never sampled explicitly).
    """
    img = np.zeros((height, width, 3))
    n_lights = light_c.shape[0]
    has_dl = dl_e[0] > 0.0 or dl_e[1] > 0.0 or dl_e[2] > 0.0
    for i in range(height):
        for j in range(width):
            pixel = i * width + j
            acc_r = 0.0
            acc_g = 0.0
            acc_b = 0.0
            for s in range(spp):
                state = _stream(seed, pixel, s)
                ox = cam[0]
                oy = cam[1]
                oz = cam[2]
                dx, dy, dz = _camera_ray(i, j, width, height, cam, tan_half)
                tp_r = 1.0
                tp_g = 1.0
                tp_b = 1.0
                for v in range(n_vertices):
                    t_tri, idx = _hit_triangles(ox, oy, oz, dx, dy, dz, tri, 1e30)
                    t_sph, sidx = _hit_spheres(ox, oy, oz, dx, dy, dz,
                                               light_c, light_r, 1e30)
                    if idx < 0 and sidx < 0:
                        acc_r += tp_r * env[0]
                        acc_g += tp_g * env[1]
                        acc_b += tp_b * env[2]
                        break
                    if sidx >= 0 and t_sph < t_tri:
                        # with NEE, later hits are already covered by the
                        # explicit light samples; without it, every hit counts
                        if v == 0 or use_nee == 0:
                            acc_r += tp_r * light_e[sidx, 0]
                            acc_g += tp_g * light_e[sidx, 1]
                            acc_b += tp_b * light_e[sidx, 2]
                        break
                    # diffuse surface vertex
                    px = ox + t_tri * dx
                    py = oy + t_tri * dy
                    pz = oz + t_tri * dz
                    ax = tri[idx, 0]
                    e1x = tri[idx, 3] - ax
                    e1y = tri[idx, 4] - tri[idx, 1]
                    e1z = tri[idx, 5] - tri[idx, 2]
                    e2x = tri[idx, 6] - ax
                    e2y = tri[idx, 7] - tri[idx, 1]
                    e2z = tri[idx, 8] - tri[idx, 2]
                    nx, ny, nz = _cross(e1x, e1y, e1z, e2x, e2y, e2z)
                    nx, ny, nz = _normalize(nx, ny, nz)
                    if nx * dx + ny * dy + nz * dz > 0.0:
                        nx = -nx
                        ny = -ny
                        nz = -nz
                    rho_r = tri_albedo[idx, 0]
                    rho_g = tri_albedo[idx, 1]
                    rho_b = tri_albedo[idx, 2]
                    px += _EPS * 10.0 * nx
                    py += _EPS * 10.0 * ny
                    pz += _EPS * 10.0 * nz
                    if has_dl:
                        lx = -dl_dir[0]
                        ly = -dl_dir[1]
                        lz = -dl_dir[2]
                        cosi = nx * lx + ny * ly + nz * lz
                        if cosi > 0.0 and not _occluded(px, py, pz, lx, ly, lz,
                                                        tri, 1e30):
                            acc_r += tp_r * rho_r * dl_e[0] * cosi
                            acc_g += tp_g * rho_g * dl_e[1] * cosi
                            acc_b += tp_b * rho_b * dl_e[2] * cosi
                    for li in range(n_lights):
                        if use_nee == 0:
                            break
                        cx = light_c[li, 0] - px
                        cy = light_c[li, 1] - py
                        cz = light_c[li, 2] - pz
                        d2 = cx * cx + cy * cy + cz * cz
                        rad = light_r[li]
                        if d2 <= rad * rad:
                            continue
                        d = np.sqrt(d2)
                        cos_max = np.sqrt(1.0 - (rad * rad) / d2)
                        state = _next(state)
                        u1 = _u01(state)
                        state = _next(state)
                        u2 = _u01(state)
                        cos_t = 1.0 - u1 * (1.0 - cos_max)
                        sin_t = np.sqrt(max(0.0, 1.0 - cos_t * cos_t))
                        phi = 2.0 * np.pi * u2
                        wx_l = cx / d
                        wy_l = cy / d
                        wz_l = cz / d
                        tb, sb = _onb(wx_l, wy_l, wz_l)
                        wx = sin_t * np.cos(phi) * tb[0] + sin_t * np.sin(phi) * sb[0] + cos_t * wx_l
                        wy = sin_t * np.cos(phi) * tb[1] + sin_t * np.sin(phi) * sb[1] + cos_t * wy_l
                        wz = sin_t * np.cos(phi) * tb[2] + sin_t * np.sin(phi) * sb[2] + cos_t * wz_l
                        cosi = nx * wx + ny * wy + nz * wz
                        if cosi <= 0.0:
                            continue
                        t_l, hl = _hit_spheres(px, py, pz, wx, wy, wz,
                                               light_c, light_r, 1e30)
                        if hl != li:
                            continue
                        if _occluded(px, py, pz, wx, wy, wz, tri, t_l):
                            continue
                        w_solid = 2.0 * np.pi * (1.0 - cos_max)
                        f = cosi * w_solid / np.pi
                        acc_r += tp_r * rho_r * light_e[li, 0] * f
                        acc_g += tp_g * rho_g * light_e[li, 1] * f
                        acc_b += tp_b * rho_b * light_e[li, 2] * f
                    if v == n_vertices - 1:
                        break
                    state = _next(state)
                    u1 = _u01(state)
                    state = _next(state)
                    u2 = _u01(state)
                    dx, dy, dz = _cosine_dir(nx, ny, nz, u1, u2)
                    tp_r *= rho_r
                    tp_g *= rho_g
                    tp_b *= rho_b
                    ox = px
                    oy = py
                    oz = pz
            img[i, j, 0] = acc_r / spp
            img[i, j, 1] = acc_g / spp
            img[i, j, 2] = acc_b / spp
    return img

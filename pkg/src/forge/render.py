"""Rendering passes: g-buffer, ambient occlusion, path-traced images, crop."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .scene import Scene

OBJ_BACKGROUND = 0
OBJ_MESH = 1
OBJ_GROUND = 2
OBJ_LIGHT = 3


@dataclass
class RenderConfig:
    width: int = 96
    height: int = 96
    spp: int = 16
    max_bounces: int = 5
    seed: int = 0
    ao_samples: int = 64
    ao_max_ray_length: float = np.inf
    # next-event estimation; disable for brute-force (much noisier) tracing
    nee: bool = True

    def __post_init__(self):
        if min(self.width, self.height, self.spp, self.max_bounces,
               self.ao_samples) < 1:
            raise ValueError("all render counts must be >= 1")


@dataclass
class GBuffer:
    albedo: np.ndarray  # (H, W, 3)
    normal: np.ndarray  # (H, W, 3)
    depth: np.ndarray  # (H, W)
    ao: np.ndarray  # (H, W)
    coverage: np.ndarray  # (H, W) bool
    objid: np.ndarray = None  # (H, W) int32, internal

    @property
    def shape(self):
        return self.depth.shape


def trace_gbuffer(scene: Scene, config: RenderConfig) -> GBuffer:
    """One primary ray per pixel center; AO channel starts at 1."""
    flat = scene.flatten()
    cam = scene.camera.basis()
    albedo, normal, depth, objid = kernels.gbuffer_kernel(
        cam, scene.camera.tan_half_fov, config.width, config.height,
        flat["tri"], flat["tri_albedo"], flat["tri_objid"],
        flat["light_c"], flat["light_r"])
    coverage = objid != OBJ_BACKGROUND
    return GBuffer(albedo=albedo.astype(np.float32),
                   normal=normal.astype(np.float32),
                   depth=depth.astype(np.float32),
                   ao=np.ones_like(depth, dtype=np.float32),
                   coverage=coverage,
                   objid=objid)


def ambient_occlusion(scene: Scene, gbuffer: GBuffer,
                      config: RenderConfig) -> GBuffer:
    """Fill the AO channel by cosine-weighted hemisphere visibility."""
    flat = scene.flatten()
    cam = scene.camera.basis()
    max_len = config.ao_max_ray_length
    if not np.isfinite(max_len):
        max_len = 1e30
    ao = kernels.ao_kernel(
        cam, scene.camera.tan_half_fov, config.width, config.height,
        flat["tri"], gbuffer.normal.astype(np.float64),
        gbuffer.depth.astype(np.float64), gbuffer.objid,
        config.ao_samples, float(max_len), config.seed)
    return replace(gbuffer, ao=ao.astype(np.float32))


def render_gi(scene: Scene, config: RenderConfig) -> np.ndarray:
    """Path tracing; a bounce budget of B segments visits B-1 surface vertices."""
    flat = scene.flatten()
    cam = scene.camera.basis()
    n_vertices = max(1, config.max_bounces - 1)
    img = kernels.render_kernel(
        cam, scene.camera.tan_half_fov, config.width, config.height,
        flat["tri"], flat["tri_albedo"],
        flat["light_c"], flat["light_r"], flat["light_e"],
        flat["dl_dir"], flat["dl_e"], flat["env"],
        config.spp, n_vertices, config.seed, 1 if config.nee else 0)
    if not np.isfinite(img).all():
        raise FloatingPointError("non-finite radiance in render accumulation")
    return img.astype(np.float32)


def render_direct(scene: Scene, config: RenderConfig) -> np.ndarray:
    """Two-segment (direct lighting) render under the directional light."""
    from .scene import SINGLE_DIRECTIONAL

    if scene.mode != SINGLE_DIRECTIONAL:
        raise ValueError("render_direct requires single_directional lighting")
    return render_gi(scene, replace(config, max_bounces=2))


def _bilinear(channel: np.ndarray, ys: np.ndarray, xs: np.ndarray,
              fill: float = 0.0) -> np.ndarray:
    h, w = channel.shape[:2]
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    fy = ys - y0
    fx = xs - x0
    out = None
    inside = (ys >= -0.5) & (ys <= h - 0.5) & (xs >= -0.5) & (xs <= w - 0.5)
    for dy in (0, 1):
        for dx in (0, 1):
            wgt = (fy if dy else 1 - fy) * (fx if dx else 1 - fx)
            yy = np.clip(y0 + dy, 0, h - 1)
            xx = np.clip(x0 + dx, 0, w - 1)
            term = channel[yy, xx] * (wgt[..., None] if channel.ndim == 3 else wgt)
            out = term if out is None else out + term
    if channel.ndim == 3:
        out[~inside] = fill
    else:
        out = np.where(inside, out, fill)
    return out


def crop_and_resize(image: np.ndarray, gbuffer: GBuffer, target: int = 96,
                    box: int = 80):
    """Scale so the object bbox's larger side is `box` px, centered in a
    `target` square; the identical transform is applied to the image and to
    every g-buffer channel, and normals are renormalized afterwards."""
    mask = gbuffer.objid == OBJ_MESH
    if not mask.any():
        raise ValueError("no object pixels to crop around")
    ys, xs = np.nonzero(mask)
    y_lo, y_hi = ys.min(), ys.max()
    x_lo, x_hi = xs.min(), xs.max()
    side = max(y_hi - y_lo + 1, x_hi - x_lo + 1)
    scale = box / side
    cy = (y_lo + y_hi) / 2.0
    cx = (x_lo + x_hi) / 2.0
    oc = (target - 1) / 2.0
    oy, ox = np.meshgrid(np.arange(target), np.arange(target), indexing="ij")
    src_y = cy + (oy - oc) / scale
    src_x = cx + (ox - oc) / scale

    def samp(ch, fill=0.0):
        return _bilinear(np.asarray(ch, dtype=np.float64), src_y, src_x, fill)

    out_img = samp(image).astype(np.float32)
    normal = samp(gbuffer.normal)
    norms = np.linalg.norm(normal, axis=-1, keepdims=True)
    cov = samp(gbuffer.coverage.astype(np.float64)) > 0.5
    normal = np.where(norms > 1e-6, normal / np.maximum(norms, 1e-6), 0.0)
    normal[~cov] = 0.0
    # nearest-neighbor for the id channel
    ny = np.clip(np.round(src_y).astype(int), 0, gbuffer.objid.shape[0] - 1)
    nx = np.clip(np.round(src_x).astype(int), 0, gbuffer.objid.shape[1] - 1)
    objid = np.where(cov, gbuffer.objid[ny, nx], OBJ_BACKGROUND).astype(np.int32)
    out_gb = GBuffer(
        albedo=samp(gbuffer.albedo).astype(np.float32),
        normal=normal.astype(np.float32),
        depth=(samp(gbuffer.depth) * cov).astype(np.float32),
        ao=samp(gbuffer.ao, fill=1.0).astype(np.float32),
        coverage=cov,
        objid=objid,
    )
    out_gb.ao[~cov] = 1.0
    out_gb.albedo[~cov] = 0.0
    return out_img, out_gb

"""End-to-end data pipeline: corpus rendering, the source/target domain
split, and per-condition training-image construction for the ladder.

The "target" domain stands in for real photographs: the same geometry
rendered under shifted lighting, then gamma-encoded with mild sensor noise.
Source-domain conditions (albedo ... gi_high) must close that gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import gen_procedural_corpus
from .render import (
    GBuffer,
    RenderConfig,
    ambient_occlusion,
    render_direct,
    render_gi,
    trace_gbuffer,
)
from .scene import (
    SINGLE_DIRECTIONAL,
    TWO_SPHERE_LIGHTS,
    CameraPose,
    Scene,
    build_scene,
    sample_camera,
)
from .gbuffer_io import gamma_encode
from .sh import ShFitConfig, composite, fit_sh, sh_shade

TIERS = ("low", "mid", "high")

CONDITIONS = (
    "albedo", "sh", "sh_ao", "two_bounce",
    "gi_low", "gi_mid", "gi_high",
    "denoised_low", "denoised_mid",
    "gan_single", "gan_ensemble",
    "baseline_same_domain",
)

# target-domain lighting: moved, resized, unbalanced lights
TARGET_LIGHT_CENTERS = np.array([[0.9, 2.1, -1.0], [-1.6, 2.9, 0.7]])
TARGET_LIGHT_RADII = np.array([0.8, 0.35])
TARGET_LIGHT_RADIANCE = np.array([[9.0] * 3, [4.0] * 3])


@dataclass
class PipelineConfig:
    classes: int = 10
    per_class: int = 10
    views: int = 16
    test_views: int = 4  # of `views`, rendered only in the target domain
    val_views: int = 2
    resolution: int = 96
    mode: str = "norb"  # norb: grayscale; shapenet: rgb
    spp: dict = field(default_factory=lambda: {"low": 1, "mid": 4, "high": 64})
    direct_spp: int = 1
    ao_samples: int = 64
    elev_min: float = math.radians(30)
    elev_max: float = math.radians(70)
    max_bounces: int = 5
    seed: int = 0
    sensor_noise: float = 0.01
    gamma: float = 2.2
    # render source tiers + g-buffer for test views too (file-backed datasets
    # need every entry complete; the protocol still never trains on them)
    full_test_render: bool = False

    @property
    def channels(self) -> int:
        return 1 if self.mode == "norb" else 3


@dataclass
class Entry:
    id: str
    label: int
    camera: CameraPose
    seed: int
    split: str
    gbuffer: GBuffer
    images: dict  # tier name -> (H, W, C) float32 linear radiance


def _collapse(img: np.ndarray, channels: int) -> np.ndarray:
    if channels == 1:
        return img.mean(axis=-1, keepdims=True).astype(np.float32)
    return img.astype(np.float32)


def target_scene(mesh, camera) -> Scene:
    return build_scene(mesh, TWO_SPHERE_LIGHTS, camera,
                       light_centers=TARGET_LIGHT_CENTERS,
                       light_radii=TARGET_LIGHT_RADII,
                       light_radiance=TARGET_LIGHT_RADIANCE)


def generate_entries(config: PipelineConfig):
    """Render the full corpus; returns (entries, class_count).

    Test views carry only the target-domain image; train/val views carry
    every source tier plus the target-domain image (the "real" data the
    protocol is allowed to see).
    """
    meshes, labels = gen_procedural_corpus(
        config.classes, config.per_class, seed=config.seed,
        rgb=config.mode != "norb")
    entries = []
    n_train = config.views - config.test_views
    for mi, (mesh, label) in enumerate(zip(meshes, labels)):
        for v in range(config.views):
            rng = np.random.default_rng([config.seed, 77, mi, v])
            cam = sample_camera(rng, config.elev_min, config.elev_max)
            eseed = int(rng.integers(0, 2**31))
            if v >= n_train:
                split = "test"
            elif v >= n_train - config.val_views:
                split = "val"
            else:
                split = "train"
            base = RenderConfig(width=config.resolution,
                                height=config.resolution,
                                max_bounces=config.max_bounces,
                                ao_samples=config.ao_samples,
                                seed=eseed)
            images = {}
            tscene = target_scene(mesh, cam)
            images["target"] = _collapse(render_gi(
                tscene, replace(base, spp=config.spp["high"], seed=eseed + 9)),
                config.channels)
            if split == "test" and not config.full_test_render:
                gb = None
            else:
                scene = build_scene(mesh, TWO_SPHERE_LIGHTS, cam)
                gb = trace_gbuffer(scene, base)
                gb = ambient_occlusion(scene, gb, base)
                for ti, tier in enumerate(TIERS):
                    # the low tier is traced brute-force (no next-event
                    # estimation) so its 1-spp output carries realistic
                    # path-tracing noise for the denoiser to remove
                    images[tier] = _collapse(render_gi(
                        scene, replace(base, spp=config.spp[tier],
                                       seed=eseed + ti,
                                       nee=(tier != "low"))), config.channels)
                dscene = build_scene(mesh, SINGLE_DIRECTIONAL, cam)
                images["direct"] = _collapse(render_direct(
                    dscene, replace(base, spp=config.direct_spp)),
                    config.channels)
            entries.append(Entry(id=f"e{mi:04d}_{v:02d}", label=label,
                                 camera=cam, seed=eseed, split=split,
                                 gbuffer=gb, images=images))
    return entries, config.classes


def sensor_transform(img: np.ndarray, entry_seed: int,
                     config: PipelineConfig) -> np.ndarray:
    """Target-domain camera response: gamma encode + per-image sensor noise."""
    rng = np.random.default_rng([entry_seed, 1234])
    out = gamma_encode(img, config.gamma)
    if config.sensor_noise > 0:
        out = out + rng.normal(0.0, config.sensor_noise, size=img.shape)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def to_classifier_space(img: np.ndarray, config: PipelineConfig) -> np.ndarray:
    return gamma_encode(img, config.gamma).astype(np.float32)


def _nchw(stack) -> np.ndarray:
    return np.stack([im.transpose(2, 0, 1) for im in stack]).astype(np.float32)


def entries_of(entries, split):
    if split is None:
        return list(entries)
    if isinstance(split, str):
        split = (split,)
    return [e for e in entries if e.split in split]


def labels_of(entries) -> np.ndarray:
    return np.array([e.label for e in entries], dtype=np.int64)


def target_images(entries, config: PipelineConfig) -> np.ndarray:
    """Target-domain images in classifier space (the "photograph" stand-ins)."""
    return _nchw([sensor_transform(e.images["target"], e.seed, config)
                  for e in entries])


def gray_albedo(gb: GBuffer, channels: int) -> np.ndarray:
    alb = gb.albedo.astype(np.float32)
    if channels == 1:
        alb = alb.mean(axis=-1, keepdims=True)
    return alb


def fit_scene_lighting(entries, config: PipelineConfig,
                       fit_config: ShFitConfig = None):
    """Learn SH lighting from train-split g-buffers against high-tier renders."""
    train = entries_of(entries, "train")
    return fit_sh([e.gbuffer for e in train],
                  [e.images["high"] for e in train],
                  fit_config or ShFitConfig(seed=config.seed),
                  channels=config.channels)


def condition_images(entries, condition, config: PipelineConfig,
                     sh_coeffs=None) -> np.ndarray:
    """Training images (classifier space, NCHW) for one ladder rung.

    GAN conditions are produced by the adaptation module, not here.
    """
    out = []
    for e in entries:
        if condition == "albedo":
            img = gray_albedo(e.gbuffer, config.channels)
        elif condition in ("sh", "sh_ao"):
            if sh_coeffs is None:
                raise ValueError("sh conditions need fitted coefficients")
            intensity = sh_shade(e.gbuffer, sh_coeffs)
            ao = e.gbuffer.ao if condition == "sh_ao" else None
            img = composite(intensity, gray_albedo(e.gbuffer, config.channels),
                            ao)
        elif condition == "two_bounce":
            img = e.images["direct"]
        elif condition in ("gi_low", "gi_mid", "gi_high"):
            img = e.images[condition.split("_")[1]]
        elif condition == "baseline_same_domain":
            out.append(sensor_transform(e.images["target"], e.seed, config))
            continue
        else:
            raise ValueError(f"unknown condition {condition!r}")
        out.append(to_classifier_space(img, config))
    return _nchw(out)


def denoiser_input(entry: Entry, render: np.ndarray,
                   config: PipelineConfig) -> np.ndarray:
    """Conditioning stack: normals + depth + render (+ albedo in RGB mode)."""
    gb = entry.gbuffer
    chans = [gb.normal.transpose(2, 0, 1), gb.depth[None]]
    # log-compress the radiance channel: 1-spp brute-force renders carry
    # rare high-magnitude spikes that otherwise blow up early training
    chans.append(np.log1p(np.asarray(render)).transpose(2, 0, 1))
    albedo = gb.albedo.transpose(2, 0, 1)
    if config.channels == 1:
        albedo = albedo.mean(axis=0, keepdims=True)
    chans.append(albedo)
    return np.concatenate(chans, axis=0).astype(np.float32)


def save_entries(entries, class_count, root, config: PipelineConfig) -> None:
    """Write a corpus to disk: GBUF1 g-buffers, .npy radiance images,
    gamma-encoded PNG previews, and a validated JSON manifest."""
    from pathlib import Path

    from .dataset import DatasetManifest
    from .gbuffer_io import write_gbuffer, write_png

    root = Path(root)
    for sub in ("gbuffers", "images", "previews"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    records = []
    for e in entries:
        if e.gbuffer is None:
            raise ValueError(
                f"entry {e.id} has no g-buffer; regenerate with "
                "full_test_render=True before saving")
        gpath = f"gbuffers/{e.id}.gbuf"
        write_gbuffer(root / gpath, e.gbuffer)
        paths = {}
        for name, img in e.images.items():
            ipath = f"images/{e.id}_{name}.npy"
            np.save(root / ipath, img.astype(np.float32))
            paths[name] = ipath
        write_png(root / f"previews/{e.id}.png",
                  np.repeat(e.images["high"], 3 // e.images["high"].shape[-1],
                            axis=-1) if e.images["high"].shape[-1] != 3
                  else e.images["high"], config.gamma)
        records.append({"id": e.id, "label": int(e.label),
                        "theta": float(e.camera.theta),
                        "phi": float(e.camera.phi), "seed": int(e.seed),
                        "gbuffer": gpath, "images": paths, "split": e.split})
    DatasetManifest(class_count=class_count, entries=records).save(
        root / "manifest.json", check_files=True)


def load_entries(root, config: PipelineConfig):
    """Inverse of save_entries; returns (entries, class_count)."""
    from pathlib import Path

    from .dataset import DatasetManifest
    from .gbuffer_io import read_gbuffer

    root = Path(root)
    manifest = DatasetManifest.load(root / "manifest.json")
    entries = []
    for rec in manifest.entries:
        cam = CameraPose(theta=rec["theta"], phi=rec["phi"], radius=2.5)
        images = {name: np.load(root / path)
                  for name, path in rec["images"].items()}
        entries.append(Entry(id=rec["id"], label=rec["label"], camera=cam,
                             seed=rec["seed"], split=rec.get("split", "train"),
                             gbuffer=read_gbuffer(root / rec["gbuffer"]),
                             images=images))
    return entries, manifest.class_count


def denoiser_io(entries, tier, config: PipelineConfig):
    """(inputs, targets) NCHW pairs mapping a noisy tier to the high tier."""
    xs = [denoiser_input(e, e.images[tier], config) for e in entries]
    ys = [e.images["high"].transpose(2, 0, 1) for e in entries]
    return np.stack(xs).astype(np.float32), np.stack(ys).astype(np.float32)

"""Command-line entry points for the rendering / adaptation pipeline.

Environment:
  FORGE_DATA            default data root (fallback: ./forge_data)
  FORGE_THREADS         kernel thread cap
  FORGE_DISABLE_NUMBA   set to 1 to force the pure-numpy kernel path
"""

from __future__ import annotations

import dataclasses
import json
import os
from pathlib import Path

import click
import numpy as np

from . import pipeline
from .adaptation import (
    GanConfig,
    expand_dataset,
    pretrain_generator,
    rank_checkpoints,
    train_gan,
)
from .harness import (
    ExperimentConfig,
    LADDER_ORDER,
    emit_report,
    read_report,
    run_ladder,
)
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.train import (
    ClassifierConfig,
    TrainConfig,
    channel_stats,
    standardize,
    train_classifier_arrays,
)
from .pipeline import PipelineConfig
from .render import RenderConfig, render_gi, trace_gbuffer, ambient_occlusion
from .scene import TWO_SPHERE_LIGHTS, build_scene, sample_camera
from .sh import ShFitConfig


def _data_root(out):
    return Path(out or os.environ.get("FORGE_DATA", "forge_data"))


def _load_json(path):
    if not path:
        return {}
    with open(path) as f:
        return json.load(f)


def _dataclass_from(cls, overrides, **direct):
    fields = {f.name for f in dataclasses.fields(cls)}
    kwargs = {k: v for k, v in overrides.items() if k in fields}
    kwargs.update({k: v for k, v in direct.items() if v is not None})
    return cls(**kwargs)


def _pipeline_config(config, seed, mode):
    return _dataclass_from(PipelineConfig, config.get("pipeline", {}),
                           seed=seed, mode=mode)


def _load_corpus(root, pcfg):
    path = Path(root) / "manifest.json"
    if not path.exists():
        raise click.ClickException(
            f"no corpus at {root}; run `forge gen --out {root}` first")
    return pipeline.load_entries(root, pcfg)


@click.group()
def main():
    """Synthetic-to-target domain adaptation pipeline."""


_seed = click.option("--seed", type=int, default=0, show_default=True)
_mode = click.option("--mode", type=click.Choice(["norb", "shapenet"]),
                     default=None, help="grayscale or RGB corpus")
_tier = click.option("--tier", type=click.Choice(["low", "mid", "high"]),
                     default="low", show_default=True)
_out = click.option("--out", type=click.Path(), default=None,
                    help="output directory (default: $FORGE_DATA)")
_config = click.option("--config", "config_path", type=click.Path(exists=True),
                       default=None, help="JSON config file")


@main.command()
@_seed
@_mode
@_out
@_config
def gen(seed, mode, out, config_path):
    """Render the procedural corpus and write a manifest."""
    cfg = _load_json(config_path)
    pcfg = _pipeline_config(cfg, seed, mode)
    pcfg = dataclasses.replace(pcfg, full_test_render=True)
    root = _data_root(out)
    entries, class_count = pipeline.generate_entries(pcfg)
    pipeline.save_entries(entries, class_count, root, pcfg)
    click.echo(f"wrote {len(entries)} entries to {root}")


@main.command()
@_seed
@_mode
@click.option("--spp", type=int, default=64, show_default=True)
@click.option("--bounces", type=int, default=5, show_default=True)
@_out
@_config
def render(seed, mode, spp, bounces, out, config_path):
    """Render one sample view (PNG preview + GBUF1 g-buffer)."""
    from .gbuffer_io import write_gbuffer, write_png
    from .geometry import gen_procedural_corpus

    cfg = _load_json(config_path)
    pcfg = _pipeline_config(cfg, seed, mode)
    meshes, _ = gen_procedural_corpus(1, 1, seed=seed,
                                      rgb=pcfg.mode != "norb")
    rng = np.random.default_rng(seed)
    cam = sample_camera(rng, pcfg.elev_min, pcfg.elev_max)
    scene = build_scene(meshes[0], TWO_SPHERE_LIGHTS, cam)
    rc = RenderConfig(width=pcfg.resolution, height=pcfg.resolution,
                      spp=spp, max_bounces=bounces, seed=seed)
    img = render_gi(scene, rc)
    gb = ambient_occlusion(scene, trace_gbuffer(scene, rc), rc)
    root = _data_root(out)
    root.mkdir(parents=True, exist_ok=True)
    write_png(root / "render.png", img, pcfg.gamma)
    write_gbuffer(root / "render.gbuf", gb)
    click.echo(f"wrote {root / 'render.png'} and {root / 'render.gbuf'}")


@main.command("train-sh")
@_seed
@_out
@_config
def train_sh(seed, out, config_path):
    """Fit spherical-harmonic lighting to the train split."""
    cfg = _load_json(config_path)
    pcfg = _pipeline_config(cfg, seed, None)
    root = _data_root(out)
    entries, _ = _load_corpus(root, pcfg)
    fcfg = _dataclass_from(ShFitConfig, cfg.get("sh", {}), seed=seed)
    coeffs = pipeline.fit_scene_lighting(entries, pcfg, fcfg)
    coeffs.save(root / "sh_coefficients.json")
    click.echo(f"wrote {root / 'sh_coefficients.json'}")


@main.command("train-denoiser")
@_seed
@_tier
@_out
@_config
def train_denoiser(seed, tier, out, config_path):
    """Train the g-buffer-conditioned denoiser for one sample tier."""
    cfg = _load_json(config_path)
    pcfg = _pipeline_config(cfg, seed, None)
    root = _data_root(out)
    entries, _ = _load_corpus(root, pcfg)
    train = pipeline.entries_of(entries, ("train", "val"))
    xs, ys = pipeline.denoiser_io(train, tier, pcfg)
    mean, std = channel_stats(xs)
    tcfg = _dataclass_from(TrainConfig, cfg.get("denoiser", {}), seed=seed)
    ckpt = pretrain_generator(standardize(xs, mean, std), ys, tcfg,
                              log_path=root / f"denoiser_{tier}_log.csv",
                              norm={"mean": mean.tolist(),
                                    "std": std.tolist()})
    path = root / f"denoiser_{tier}.nnck"
    save_checkpoint(path, ckpt)
    click.echo(f"wrote {path} (val ssim {ckpt.meta.get('val_ssim', 0):.4f})")


def _gan_inputs(root, pcfg, tier):
    entries, _ = _load_corpus(root, pcfg)
    train = pipeline.entries_of(entries, ("train", "val"))
    gen_ckpt = load_checkpoint(root / f"denoiser_{tier}.nnck")
    xs, ys = pipeline.denoiser_io(train, tier, pcfg)
    norm = gen_ckpt.meta["norm"]
    xs = standardize(xs, np.array(norm["mean"], np.float32),
                     np.array(norm["std"], np.float32))
    return entries, train, gen_ckpt, xs, ys


@main.command("train-gan")
@_seed
@_tier
@_out
@_config
def train_gan_cmd(seed, tier, out, config_path):
    """Adversarially fine-tune the pretrained refiner; save checkpoints."""
    cfg = _load_json(config_path)
    pcfg = _pipeline_config(cfg, seed, None)
    root = _data_root(out)
    _, train, gen_ckpt, xs, ys = _gan_inputs(root, pcfg, tier)
    target = pipeline.target_images(train, pcfg)
    gcfg = _dataclass_from(GanConfig, cfg.get("gan", {}), seed=seed)
    ckpts = train_gan(xs, ys, target, gcfg, gen_ckpt)
    ckdir = root / f"gan_{tier}"
    ckdir.mkdir(parents=True, exist_ok=True)
    for ck in ckpts:
        save_checkpoint(ckdir / f"refiner_{ck.meta['gan_step']:06d}.nnck", ck)
    click.echo(f"wrote {len(ckpts)} checkpoints to {ckdir}")


@main.command()
@_seed
@_tier
@_out
@_config
def rank(seed, tier, out, config_path):
    """Rank refiner checkpoints with the clean classifier."""
    cfg = _load_json(config_path)
    pcfg = _pipeline_config(cfg, seed, None)
    root = _data_root(out)
    _, train, _, xs, _ = _gan_inputs(root, pcfg, tier)
    ckdir = root / f"gan_{tier}"
    ckpts = [load_checkpoint(p) for p in sorted(ckdir.glob("refiner_*.nnck"))]
    clean_path = root / "clean_classifier.nnck"
    if clean_path.exists():
        clean = load_checkpoint(clean_path)
    else:
        labels = pipeline.labels_of(train)
        xs_t = pipeline.target_images(train, pcfg)
        n_val = max(1, len(xs_t) // 5)
        perm = np.random.default_rng(seed).permutation(len(xs_t))
        ccfg = _dataclass_from(ClassifierConfig, cfg.get("classifier", {}),
                               seed=seed)
        clean, _ = train_classifier_arrays(
            xs_t[perm[n_val:]], labels[perm[n_val:]],
            xs_t[perm[:n_val]], labels[perm[:n_val]], ccfg)
        save_checkpoint(clean_path, clean)

    def to_cls(nchw):
        from .gbuffer_io import gamma_encode
        return gamma_encode(nchw, pcfg.gamma).astype(np.float32)

    ranked = rank_checkpoints(ckpts, clean, xs, pipeline.labels_of(train),
                              splits=[e.split for e in train],
                              report_path=root / f"rank_{tier}.csv",
                              transform=to_cls)
    click.echo(f"wrote {root / f'rank_{tier}.csv'}")
    for r in ranked:
        click.echo(f"  rank {r.rank}: step {r.checkpoint.meta['gan_step']} "
                   f"acc {r.accuracy:.4f}")


@main.command()
@_seed
@_tier
@click.option("--top-k", type=int, default=4, show_default=True)
@_out
@_config
def expand(seed, tier, top_k, out, config_path):
    """Refine the training set with the top-K refiners (D*K images)."""
    import csv as _csv

    cfg = _load_json(config_path)
    pcfg = _pipeline_config(cfg, seed, None)
    root = _data_root(out)
    _, train, _, xs, _ = _gan_inputs(root, pcfg, tier)
    ckdir = root / f"gan_{tier}"
    by_step = {load_checkpoint(p).meta["gan_step"]: load_checkpoint(p)
               for p in sorted(ckdir.glob("refiner_*.nnck"))}
    with open(root / f"rank_{tier}.csv", newline="") as f:
        order = [int(row["checkpoint"]) for row in _csv.DictReader(f)]
    refiners = [by_step[step] for step in order[:top_k]]
    labels = pipeline.labels_of(train)
    images, out_labels, ids = expand_dataset(refiners, xs, labels)
    exdir = root / f"expanded_{tier}"
    exdir.mkdir(parents=True, exist_ok=True)
    np.save(exdir / "images.npy", images)
    np.save(exdir / "labels.npy", out_labels)
    np.save(exdir / "refiner_ids.npy", ids)
    click.echo(f"wrote {len(images)} refined images to {exdir}")


@main.command("train-classifier")
@_seed
@click.option("--condition", type=click.Choice(list(LADDER_ORDER)),
              default="gi_high", show_default=True)
@_out
@_config
def train_classifier(seed, condition, out, config_path):
    """Train and evaluate the classifier for one ladder condition."""
    from .harness import LadderContext

    cfg = _load_json(config_path)
    pcfg = _pipeline_config(cfg, seed, None)
    root = _data_root(out)
    entries, _ = _load_corpus(root, pcfg)
    xcfg = ExperimentConfig(
        condition=condition, seed=seed, pipeline=pcfg,
        classifier=_dataclass_from(ClassifierConfig,
                                   cfg.get("classifier", {}), seed=seed),
        denoiser=_dataclass_from(TrainConfig, cfg.get("denoiser", {}),
                                 seed=seed),
        gan=_dataclass_from(GanConfig, cfg.get("gan", {}), seed=seed))
    ctx = LadderContext(xcfg, entries=entries)
    train_x, train_y = ctx.training_set(condition)
    _, acc = train_classifier_arrays(train_x, train_y, ctx.test_x,
                                     ctx.test_labels, xcfg.classifier)
    click.echo(f"{condition}: test accuracy {acc:.4f}")


@main.command("run-ladder")
@_seed
@_mode
@click.option("--conditions", default=None,
              help="comma-separated subset of the ladder")
@click.option("--seeds", default=None,
              help="comma-separated seed list (default: --seed)")
@_out
@_config
def run_ladder_cmd(seed, mode, conditions, seeds, out, config_path):
    """Run the full experiment ladder and write the report."""
    cfg = _load_json(config_path)
    root = _data_root(out)
    root.mkdir(parents=True, exist_ok=True)
    xcfg = ExperimentConfig(
        seed=seed,
        pipeline=_pipeline_config(cfg, seed, mode),
        classifier=_dataclass_from(ClassifierConfig,
                                   cfg.get("classifier", {}), seed=seed),
        denoiser=_dataclass_from(TrainConfig, cfg.get("denoiser", {}),
                                 seed=seed),
        gan=_dataclass_from(GanConfig, cfg.get("gan", {}), seed=seed))
    conds = conditions.split(",") if conditions else None
    seed_list = [int(s) for s in seeds.split(",")] if seeds else [seed]
    rows, _ = run_ladder(xcfg, conditions=conds, seeds=seed_list)
    csv_text, md_text = emit_report(rows, root / "report.csv",
                                    root / "report.md")
    click.echo(md_text)


@main.command()
@_out
def report(out):
    """Re-render the Markdown table from an existing report CSV."""
    root = _data_root(out)
    rows = read_report(root / "report.csv")
    _, md_text = emit_report(rows, md_path=root / "report.md")
    click.echo(md_text)


if __name__ == "__main__":
    main()

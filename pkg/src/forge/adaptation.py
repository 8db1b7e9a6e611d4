"""Adversarial image refinement and ensemble dataset expansion.

A g-buffer-conditioned generator (the denoiser architecture) is pretrained
to reproduce high-quality renders, then fine-tuned adversarially against
target-domain images with a dominant SSIM regularizer.  Periodic
checkpoints are ranked by a "clean" classifier (trained only on
target-domain train/val data) and the top K refiners each re-shade the
whole training set, yielding a D·K-image ensemble dataset.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .nn import (
    Adam,
    DiscriminatorNet,
    ModelCheckpoint,
    checkpoint_of,
    classifier_accuracy,
)
from .nn.train import TrainConfig, _ssim_batch_loss, train_denoiser_arrays
from .metrics import SsimConfig


@dataclass
class GanConfig:
    lambda_adv: float = 0.05
    lambda_reg: float = 1.0
    interval: int = 50
    steps: int = 200
    batch_size: int = 4
    lr: float = 1e-4
    disc_lr: float = 2e-4
    seed: int = 0

    def __post_init__(self):
        if self.lambda_reg <= 0:
            raise ValueError("SSIM regularizer weight must be positive")
        if self.steps % self.interval != 0:
            raise ValueError("checkpoint interval must divide total steps")


@dataclass
class RankedCheckpoint:
    checkpoint: ModelCheckpoint
    accuracy: float
    rank: int


def pretrain_generator(inputs, targets, config: TrainConfig = None,
                       log_path=None, norm=None) -> ModelCheckpoint:
    """Identical procedure to denoiser training; seeds adversarial tuning."""
    best, _ = train_denoiser_arrays(inputs, targets, config,
                                    log_path=log_path, norm=norm)
    return best


def refine(ckpt: ModelCheckpoint, inputs, batch=16) -> np.ndarray:
    """Apply a refiner to conditioning stacks; returns NCHW radiance."""
    model = ckpt.build()
    outs = [model.forward(inputs[i:i + batch], train=False)
            for i in range(0, len(inputs), batch)]
    return np.concatenate(outs).astype(np.float32)


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60, 60)))


def train_gan(inputs, targets, target_images, config: GanConfig = None,
              generator: ModelCheckpoint = None):
    """Alternating nonsaturating-logistic GAN fine-tuning of a refiner.

    `inputs` are standardized conditioning stacks, `targets` the matching
    high-quality renders (SSIM regularizer anchor), `target_images` the
    domain the refiner should imitate.  The discriminator sees only
    radiance channels.  Returns the list of periodic generator
    checkpoints; on numerical divergence the checkpoints collected so far
    are returned instead of raising.
    """
    config = config or GanConfig()
    if generator is None:
        raise ValueError("adversarial tuning requires a pretrained generator")
    rng = np.random.default_rng(config.seed)
    gen = generator.build()
    disc = DiscriminatorNet(cin=targets.shape[1], seed=config.seed)
    g_opt = Adam(gen, lr=config.lr)
    d_opt = Adam(disc, lr=config.disc_lr)
    scfg = SsimConfig()
    meta = dict(generator.meta)
    checkpoints = []
    n = len(inputs)
    n_real = len(target_images)
    try:
        for step in range(1, config.steps + 1):
            pick = rng.choice(n, size=min(config.batch_size, n), replace=False)
            rpick = rng.choice(n_real, size=min(config.batch_size, n_real),
                               replace=False)
            fake = gen.forward(inputs[pick], train=True)

            # discriminator: softplus(-D(real)) + softplus(D(fake))
            real_logits = disc.forward(target_images[rpick], train=True)
            d_real = float(_softplus(-real_logits).mean())
            disc.backward((-_sigmoid(-real_logits) /
                           real_logits.size).astype(np.float32))
            fake_logits = disc.forward(fake, train=True)
            d_fake = float(_softplus(fake_logits).mean())
            disc.backward((_sigmoid(fake_logits) /
                           fake_logits.size).astype(np.float32))
            d_opt.step()

            # generator: lambda_adv * softplus(-D(fake)) + lambda_reg * (1-SSIM)
            fake = gen.forward(inputs[pick], train=True)
            fake_logits = disc.forward(fake, train=True)
            adv = float(_softplus(-fake_logits).mean())
            d_adv = disc.backward((-_sigmoid(-fake_logits) /
                                   fake_logits.size).astype(np.float32))
            disc.zero_grads()  # generator pass must not update D
            reg, d_reg = _ssim_batch_loss(fake, targets[pick], scfg)
            g_loss = config.lambda_adv * adv + config.lambda_reg * reg
            if not np.isfinite([d_real, d_fake, g_loss]).all():
                raise FloatingPointError("loss diverged")
            gen.backward((config.lambda_adv * d_adv +
                          config.lambda_reg * d_reg).astype(np.float32))
            g_opt.step()

            if step % config.interval == 0:
                checkpoints.append(checkpoint_of(
                    gen, "denoiser", generator.step + step,
                    {**meta, "gan_step": step, "g_loss": g_loss}))
    except FloatingPointError:
        pass  # divergence: keep the checkpoints saved before the blow-up
    return checkpoints


def rank_checkpoints(checkpoints, clean_classifier: ModelCheckpoint,
                     inputs, labels, splits=None, report_path=None,
                     transform=None):
    """Order refiners by clean-classifier accuracy on the refined train set.

    Descending accuracy; ties broken by earlier step.  Refuses test-split
    data outright: ranking must never observe the evaluation domain.
    """
    if not checkpoints:
        raise ValueError("no checkpoints to rank")
    if splits is not None and any(s == "test" for s in splits):
        raise ValueError("ranking must not see test-split data")
    scored = []
    for ckpt in checkpoints:
        refined = refine(ckpt, inputs)
        if transform is not None:
            refined = transform(refined)
        acc = classifier_accuracy(clean_classifier, refined, labels)
        scored.append((ckpt, acc))
    order = sorted(range(len(scored)),
                   key=lambda i: (-scored[i][1], scored[i][0].step))
    ranked = [RankedCheckpoint(scored[i][0], scored[i][1], rank)
              for rank, i in enumerate(order)]
    if report_path:
        with open(report_path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["checkpoint", "step", "accuracy", "rank"])
            for r in ranked:
                w.writerow([r.checkpoint.meta.get("gan_step", r.checkpoint.step),
                            r.checkpoint.step, f"{r.accuracy:.6f}", r.rank])
    return ranked


def expand_dataset(refiners, inputs, labels):
    """D training images through each of K refiners -> exactly D*K images.

    Returns (images NCHW, labels, refiner_ids); labels and order are
    preserved per refiner block.
    """
    if not refiners:
        raise ValueError("need at least one refiner")
    labels = np.asarray(labels)
    images, out_labels, ids = [], [], []
    for r in refiners:
        ckpt = r.checkpoint if isinstance(r, RankedCheckpoint) else r
        rid = ckpt.meta.get("gan_step", ckpt.step)
        images.append(refine(ckpt, inputs))
        out_labels.append(labels)
        ids.extend([rid] * len(labels))
    return (np.concatenate(images), np.concatenate(out_labels),
            np.array(ids))

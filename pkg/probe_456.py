"""Probe criteria 4-6 numbers at acceptance scale for a couple of seeds."""
import sys
import time
from dataclasses import replace

import numpy as np

sys.path.insert(0, "tests")
from test_acceptance import _experiment_config, _LADDER_CONDS

from forge import pipeline as _pl
from forge.harness import LadderContext
from forge.metrics import ssim
from forge.nn import standardize, train_classifier_arrays

SEEDS = tuple(int(s) for s in sys.argv[1:]) or (0, 1)

accs = {}
ssims = {"raw": [], "denoised": []}
timings = {"corpus": 0.0, "denoise": 0.0, "ladder": 0.0, "gan": 0.0}


def _train(ctx, cfg, cond):
    x, y = ctx.training_set(cond)
    _, acc = train_classifier_arrays(
        x, y, ctx.test_x, ctx.test_labels,
        replace(cfg.classifier, seed=cfg.seed))
    accs.setdefault(cond, []).append(acc)
    print(f"  {cond}: {acc:.4f}", flush=True)


for seed in SEEDS:
    print(f"=== seed {seed}", flush=True)
    cfg = _experiment_config(seed)
    t0 = time.time()
    ctx = LadderContext(cfg)
    timings["corpus"] += time.time() - t0
    print(f"  corpus {time.time()-t0:.0f}s", flush=True)

    t0 = time.time()
    ckpt = ctx.denoiser("low")
    xs, ys = _pl.denoiser_io(ctx.train, "low", cfg.pipeline)
    model = ckpt.build()
    raw = np.stack([e.images["low"].transpose(2, 0, 1) for e in ctx.train])
    den = model.forward(standardize(xs, *ctx.denoiser_norm(ckpt))[:16],
                        train=False)
    s_raw = np.mean([ssim(raw[i].transpose(1, 2, 0), ys[i].transpose(1, 2, 0))
                     for i in range(16)])
    s_den = np.mean([ssim(den[i].transpose(1, 2, 0), ys[i].transpose(1, 2, 0))
                     for i in range(16)])
    ssims["raw"].append(s_raw)
    ssims["denoised"].append(s_den)
    print(f"  ssim raw {s_raw:.3f} denoised {s_den:.3f}", flush=True)
    _train(ctx, cfg, "denoised_low")
    _train(ctx, cfg, "gi_low")
    timings["denoise"] += time.time() - t0
    print(f"  denoise phase {timings['denoise']:.0f}s cum", flush=True)

    t0 = time.time()
    for cond in _LADDER_CONDS:
        if cond != "gi_low":
            _train(ctx, cfg, cond)
    timings["ladder"] += time.time() - t0

    t0 = time.time()
    _train(ctx, cfg, "gan_single")
    _train(ctx, cfg, "gan_ensemble")
    timings["gan"] += time.time() - t0
    print(f"  timings {timings}", flush=True)

print("=== means over seeds", SEEDS)
for c, v in accs.items():
    print(f"  {c}: {100*np.mean(v):.2f}  {[round(100*x,1) for x in v]}")
print("ssim raw", np.mean(ssims["raw"]), "denoised", np.mean(ssims["denoised"]))
print("timings", timings)

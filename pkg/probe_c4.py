"""Criterion-4 drilldown: denoiser quality ceiling + classifier pairing."""
import sys
import time
from dataclasses import replace

import numpy as np

sys.path.insert(0, "tests")
from test_acceptance import _experiment_config

from forge import pipeline as _pl
from forge.harness import LadderContext
from forge.metrics import ssim
from forge.nn import (TrainConfig, channel_stats, standardize,
                      train_classifier_arrays, train_denoiser_arrays)

cfg = _experiment_config(0)
t0 = time.time()
ctx = LadderContext(cfg)
print(f"corpus {time.time()-t0:.0f}s", flush=True)
xs, ys = _pl.denoiser_io(ctx.train, "low", cfg.pipeline)
mean, std = channel_stats(xs)
sx = standardize(xs, mean, std)
norm = {"mean": mean.tolist(), "std": std.tolist()}

raw = np.stack([e.images["low"].transpose(2, 0, 1) for e in ctx.train])


def _ssim16(imgs):
    return float(np.mean([ssim(imgs[i].transpose(1, 2, 0),
                               ys[i].transpose(1, 2, 0)) for i in range(16)]))


print("raw ssim", _ssim16(raw), flush=True)

model = None
ck = None
for total, steps in ((2000, 2000), (5000, 3000), (8000, 3000)):
    t0 = time.time()
    tc = TrainConfig(steps=steps, learning_rate=5e-4, batch_size=8,
                     eval_every=100, seed=0)
    ck, _ = train_denoiser_arrays(sx, ys, tc, model=model, norm=norm)
    model = ck.build()
    den = model.forward(sx[:16], train=False)
    print(f"steps_total={total}: denoised ssim {_ssim16(den):.3f} "
          f"val {ck.meta.get('val_ssim')} {time.time()-t0:.0f}s", flush=True)

# stash the best checkpoint into the context cache so denoised_images uses it
ctx._cache["denoiser_low"] = ck

for augment in (True, False):
    ccfg = replace(cfg.classifier, augment=augment)
    accs = {}
    for cond in ("denoised_low", "gi_low"):
        x, y = ctx.training_set(cond)
        _, acc = train_classifier_arrays(x, y, ctx.test_x, ctx.test_labels,
                                         ccfg)
        accs[cond] = acc
    print(f"augment={augment}: denoised {accs['denoised_low']:.4f} "
          f"gi_low {accs['gi_low']:.4f}", flush=True)

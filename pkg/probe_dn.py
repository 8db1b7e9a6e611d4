"""Probe denoiser training schedules on the brute-force low tier."""
import sys
import time
from dataclasses import replace

import numpy as np

sys.path.insert(0, "tests")
from test_acceptance import _experiment_config

from forge import pipeline as _pl
from forge.metrics import ssim
from forge.nn import TrainConfig, channel_stats, standardize, train_denoiser_arrays

cfg = _experiment_config(0)
t0 = time.time()
train = [e for e in _pl.generate_entries(cfg.pipeline)[0]
         if e.split in ("train", "val")]
print(f"corpus {time.time()-t0:.0f}s, {len(train)} entries", flush=True)
xs, ys = _pl.denoiser_io(train, "low", cfg.pipeline)
rad = xs[:, 4]
print("radiance channel: max", float(rad.max()), "mean", float(rad.mean()),
      "std", float(rad.std()), flush=True)
mean, std = channel_stats(xs)
sx = standardize(xs, mean, std)

for steps, lr, bs in [(2000, 1e-3, 8), (2000, 5e-4, 8)]:
    t0 = time.time()
    tc = TrainConfig(steps=steps, learning_rate=lr, batch_size=bs,
                     eval_every=200, seed=0)
    ck, curve = train_denoiser_arrays(
        sx, ys, tc, norm={"mean": mean.tolist(), "std": std.tolist()})
    model = ck.build()
    den = model.forward(sx[:16], train=False)
    s = np.mean([ssim(den[i].transpose(1, 2, 0), ys[i].transpose(1, 2, 0))
                 for i in range(16)])
    print(f"steps={steps} lr={lr} bs={bs}: ssim {s:.3f} "
          f"curve {[round(float(c[1]), 3) for c in curve]} "
          f"{time.time()-t0:.0f}s", flush=True)

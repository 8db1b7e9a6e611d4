"""Verify the in-loop warmup schedule matches the segment probe."""
import sys
import time

import numpy as np

sys.path.insert(0, "tests")
from test_acceptance import _experiment_config

from forge import pipeline as _pl
from forge.metrics import ssim
from forge.nn import TrainConfig, channel_stats, standardize, train_denoiser_arrays

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
cfg = _experiment_config(seed)
t0 = time.time()
train = [e for e in _pl.generate_entries(cfg.pipeline)[0]
         if e.split in ("train", "val")]
print(f"seed {seed} corpus {time.time()-t0:.0f}s", flush=True)
xs, ys = _pl.denoiser_io(train, "low", cfg.pipeline)
mean, std = channel_stats(xs)
sx = standardize(xs, mean, std)
norm = {"mean": mean.tolist(), "std": std.tolist()}


def run(name, tc):
    t0 = time.time()
    ck, _ = train_denoiser_arrays(sx, ys, tc, norm=norm)
    den = ck.build().forward(sx[:16], train=False)
    s = float(np.mean([ssim(den[i].transpose(1, 2, 0),
                            ys[i].transpose(1, 2, 0)) for i in range(16)]))
    print(f"{name}: ssim {s:.3f} val {ck.meta.get('val_ssim'):.3f} "
          f"{time.time()-t0:.0f}s", flush=True)


run("warmup400->2e-3 x2000", TrainConfig(
    steps=2000, learning_rate=2e-3, batch_size=8, eval_every=200,
    seed=seed, widths=(16, 32, 64), warmup_steps=400, warmup_lr=5e-4))
run("warmup400->1.5e-3 x2400", TrainConfig(
    steps=2400, learning_rate=1.5e-3, batch_size=8, eval_every=200,
    seed=seed, widths=(16, 32, 64), warmup_steps=400, warmup_lr=5e-4))

"""Find a fast denoiser schedule: warmup then high lr, small widths."""
import sys
import time

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
print(f"corpus {time.time()-t0:.0f}s", flush=True)
xs, ys = _pl.denoiser_io(train, "low", cfg.pipeline)
mean, std = channel_stats(xs)
sx = standardize(xs, mean, std)
norm = {"mean": mean.tolist(), "std": std.tolist()}
W = (16, 32, 64)


def _ssim16(ck):
    den = ck.build().forward(sx[:16], train=False)
    return float(np.mean([ssim(den[i].transpose(1, 2, 0),
                               ys[i].transpose(1, 2, 0)) for i in range(16)]))


def run(name, segments):
    t0 = time.time()
    model, ck = None, None
    for steps, lr, bs in segments:
        tc = TrainConfig(steps=steps, learning_rate=lr, batch_size=bs,
                         eval_every=100, seed=0, widths=W)
        ck, _ = train_denoiser_arrays(sx, ys, tc, model=model, norm=norm)
        model = ck.build()
    print(f"{name}: ssim {_ssim16(ck):.3f} val {ck.meta.get('val_ssim'):.3f} "
          f"{time.time()-t0:.0f}s", flush=True)


run("warm400+1600@1.5e-3", [(400, 5e-4, 8), (1600, 1.5e-3, 8)])
run("warm400+1600@2e-3", [(400, 5e-4, 8), (1600, 2e-3, 8)])
run("flat2000@5e-4", [(2000, 5e-4, 8)])
run("warm400+2600@1.5e-3", [(400, 5e-4, 8), (2600, 1.5e-3, 8)])

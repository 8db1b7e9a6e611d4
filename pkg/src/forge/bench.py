"""Backend benchmark: compiled kernels vs the pure-numpy fallback.

The kernel path is fixed at import time by FORGE_DISABLE_NUMBA, so each
backend is timed in its own subprocess.  Run as `python -m forge.bench`.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _measure(size, spp, seed):
    import numpy as np

    from .geometry import gen_procedural_corpus
    from .kernels import NUMBA_ENABLED
    from .render import RenderConfig, render_gi
    from .scene import TWO_SPHERE_LIGHTS, build_scene, sample_camera

    meshes, _ = gen_procedural_corpus(1, 1, seed=seed)
    cam = sample_camera(np.random.default_rng(seed), 0.6, 1.1)
    scene = build_scene(meshes[0], TWO_SPHERE_LIGHTS, cam)
    cfg = RenderConfig(width=size, height=size, spp=spp, seed=seed)
    render_gi(scene, cfg)  # warm-up / compile
    t0 = time.perf_counter()
    img = render_gi(scene, cfg)
    dt = time.perf_counter() - t0
    return {"backend": "numba" if NUMBA_ENABLED else "numpy",
            "seconds": dt, "checksum": float(img.sum())}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=48)
    ap.add_argument("--spp", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)

    if args.worker:
        print(json.dumps(_measure(args.size, args.spp, args.seed)))
        return

    results = []
    for disable in ("0", "1"):
        env = {**os.environ, "FORGE_DISABLE_NUMBA": disable}
        out = subprocess.run(
            [sys.executable, "-m", "forge.bench", "--worker",
             "--size", str(args.size), "--spp", str(args.spp),
             "--seed", str(args.seed)],
            env=env, capture_output=True, text=True, check=True)
        results.append(json.loads(out.stdout.strip().splitlines()[-1]))
    for r in results:
        print(f"{r['backend']:>6}: {r['seconds']:8.3f} s "
              f"(image checksum {r['checksum']:.6g})")
    if results[0]["checksum"] != results[1]["checksum"]:
        print("warning: backends disagree bit-for-bit")
    else:
        print("backends agree bit-for-bit")
        print(f"speedup: {results[1]['seconds'] / results[0]['seconds']:.1f}x")


if __name__ == "__main__":
    main()

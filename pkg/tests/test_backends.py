"""The numba-accelerated and pure-numpy kernel paths must agree bit-for-bit."""

import json
import os
import subprocess
import sys

import numpy as np

_SNIPPET = """
import json, sys
import numpy as np
from forge import kernels
from forge.geometry import gen_procedural_corpus
from forge.render import RenderConfig, render_gi, trace_gbuffer
from forge.scene import TWO_SPHERE_LIGHTS, build_scene, sample_camera

meshes, _ = gen_procedural_corpus(1, 1, seed=5, rgb=False)
cam = sample_camera(np.random.default_rng(5), 0.5236, 1.2217)
scene = build_scene(meshes[0], TWO_SPHERE_LIGHTS, cam)
rc = RenderConfig(width=24, height=24, spp=2, max_bounces=3, seed=5)
img = render_gi(scene, rc)
gb = trace_gbuffer(scene, rc)
print(json.dumps({
    "numba": kernels.NUMBA_ENABLED,
    "img": img.astype(np.float64).tobytes().hex(),
    "depth": gb.depth.astype(np.float64).tobytes().hex(),
}))
"""


def _run(disable_numba):
    env = dict(os.environ, FORGE_DISABLE_NUMBA="1" if disable_numba else "0",
               FORGE_THREADS="1")
    out = subprocess.run([sys.executable, "-c", _SNIPPET], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_backends_bit_identical():
    fast = _run(disable_numba=False)
    slow = _run(disable_numba=True)
    assert slow["numba"] is False  # env flag actually switches the path
    assert fast["img"] == slow["img"]
    assert fast["depth"] == slow["depth"]

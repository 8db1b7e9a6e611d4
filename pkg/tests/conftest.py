"""Shared fixtures: tiny rendered scenes and a miniature corpus, built once."""

from __future__ import annotations

import math

import numpy as np
import pytest

from forge.geometry import Mesh, normalize_to_unit_cube
from forge.pipeline import PipelineConfig, generate_entries
from forge.render import RenderConfig, ambient_occlusion, trace_gbuffer
from forge.scene import (
    TWO_SPHERE_LIGHTS,
    UNIFORM_ENVIRONMENT,
    CameraPose,
    build_scene,
)


def unit_sphere_mesh(albedo=0.8, rings=24, segments=32) -> Mesh:
    """Radius-0.5 sphere resting on the ground plane (center (0, 0.5, 0))."""
    from forge.geometry import _sphere

    m = _sphere(0.5, rings=rings, segments=segments)
    m = normalize_to_unit_cube(m)
    m.albedo = np.full(3, albedo)
    return m


def head_on_camera(radius=2.5) -> CameraPose:
    """Camera on the horizontal ring, staring at the sphere center."""
    return CameraPose(theta=math.pi / 2, phi=0.0, radius=radius,
                      look_at=(0.0, 0.5, 0.0))


@pytest.fixture(scope="session")
def sphere_scene():
    return build_scene(unit_sphere_mesh(), TWO_SPHERE_LIGHTS,
                       head_on_camera())


@pytest.fixture(scope="session")
def furnace_scene():
    """Convex diffuse sphere floating in a uniform unit-radiance environment."""
    mesh = unit_sphere_mesh(albedo=0.5)
    scene = build_scene(mesh, UNIFORM_ENVIRONMENT, head_on_camera(),
                        env_radiance=np.ones(3), ground=False)
    return scene


@pytest.fixture(scope="session")
def sphere_gbuffer(sphere_scene):
    cfg = RenderConfig(width=48, height=48, spp=1, seed=0, ao_samples=32)
    return ambient_occlusion(sphere_scene,
                             trace_gbuffer(sphere_scene, cfg), cfg)


@pytest.fixture(scope="session")
def tiny_config():
    return PipelineConfig(classes=2, per_class=2, views=5, test_views=1,
                          val_views=1, resolution=32,
                          spp={"low": 1, "mid": 2, "high": 8},
                          ao_samples=8, seed=3)


@pytest.fixture(scope="session")
def tiny_corpus(tiny_config):
    entries, class_count = generate_entries(tiny_config)
    return entries, class_count

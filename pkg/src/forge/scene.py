"""Scene assembly: camera sampling, lighting modes, kernel-array flattening."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Mesh

TWO_SPHERE_LIGHTS = "two_sphere_lights"
SINGLE_DIRECTIONAL = "single_directional"
UNIFORM_ENVIRONMENT = "uniform_environment"
LIGHTING_MODES = (TWO_SPHERE_LIGHTS, SINGLE_DIRECTIONAL, UNIFORM_ENVIRONMENT)

GROUND_HALF_EXTENT = 50.0


@dataclass
class CameraPose:
    theta: float  # polar angle from +y, radians
    phi: float  # azimuth, radians
    radius: float
    look_at: tuple = (0.0, 0.5, 0.0)
    fov: float = math.radians(35.0)

    @property
    def elevation(self) -> float:
        """Elevation above the horizon, radians."""
        return math.pi / 2 - self.theta

    def origin(self) -> np.ndarray:
        lx, ly, lz = self.look_at
        st, ct = math.sin(self.theta), math.cos(self.theta)
        return np.array([
            lx + self.radius * st * math.cos(self.phi),
            ly + self.radius * ct,
            lz + self.radius * st * math.sin(self.phi),
        ])

    def basis(self) -> np.ndarray:
        """Flat [origin, right, up, forward] array consumed by the kernels."""
        o = self.origin()
        fwd = np.asarray(self.look_at) - o
        fwd = fwd / np.linalg.norm(fwd)
        world_up = np.array([0.0, 1.0, 0.0])
        right = np.cross(fwd, world_up)
        rn = np.linalg.norm(right)
        if rn < 1e-9:  # looking straight down
            right = np.array([1.0, 0.0, 0.0])
        else:
            right = right / rn
        up = np.cross(right, fwd)
        return np.concatenate([o, right, up, fwd])

    @property
    def tan_half_fov(self) -> float:
        return math.tan(self.fov / 2)


def sample_camera(rng: np.random.Generator, elev_min: float, elev_max: float,
                  radius: float = 2.5, look_at=(0.0, 0.5, 0.0)) -> CameraPose:
    """Uniform view sampling on the cap between two polar angles.

    Draws z1 uniform on [cos(elev_max), cos(elev_min)] and z2 uniform on
    [0, 1), then theta = acos(z1) (measured from vertical), phi = 2*pi*z2.
    """
    if not (0 < elev_min < elev_max < math.pi / 2):
        raise ValueError("need 0 < elev_min < elev_max < pi/2")
    z1 = rng.uniform(math.cos(elev_max), math.cos(elev_min))
    z2 = rng.uniform(0.0, 1.0)
    return CameraPose(theta=math.acos(z1), phi=2 * math.pi * z2,
                      radius=radius, look_at=look_at)


@dataclass
class Scene:
    meshes: list
    mode: str
    camera: CameraPose
    ground_albedo: np.ndarray = field(default_factory=lambda: np.full(3, 0.75))
    # two_sphere_lights parameters
    light_centers: np.ndarray = field(
        default_factory=lambda: np.array([[-1.2, 2.5, 0.0], [1.2, 2.5, 0.0]]))
    light_radii: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.5]))
    light_radiance: np.ndarray = field(
        default_factory=lambda: np.full((2, 3), 8.0))
    # single_directional parameters (direction light travels, unit vector)
    sun_direction: np.ndarray = field(
        default_factory=lambda: np.array([0.45, -0.8, 0.35]))
    sun_strength: np.ndarray = field(default_factory=lambda: np.full(3, 1.0))
    # uniform_environment parameter
    env_radiance: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ground: bool = True

    def __post_init__(self):
        if self.mode not in LIGHTING_MODES:
            raise ValueError(f"unknown lighting mode {self.mode!r}")
        self.sun_direction = np.asarray(self.sun_direction, dtype=np.float64)
        self.sun_direction = self.sun_direction / np.linalg.norm(self.sun_direction)

    def flatten(self):
        """Triangle soup + light arrays for the kernels."""
        tris = []
        albs = []
        oids = []
        for m in self.meshes:
            c = m.corners()
            tris.append(c)
            albs.append(np.broadcast_to(m.albedo, (len(c), 3)))
            oids.append(np.ones(len(c), dtype=np.int32))
        if self.ground:
            e = GROUND_HALF_EXTENT
            g = np.array([
                [-e, 0, -e, e, 0, -e, e, 0, e],
                [-e, 0, -e, e, 0, e, -e, 0, e],
            ])
            tris.append(g)
            albs.append(np.broadcast_to(self.ground_albedo, (2, 3)))
            oids.append(np.full(2, 2, dtype=np.int32))
        tri = np.ascontiguousarray(np.vstack(tris))
        tri_albedo = np.ascontiguousarray(np.vstack(albs))
        tri_objid = np.concatenate(oids)

        if self.mode == TWO_SPHERE_LIGHTS:
            lc = np.ascontiguousarray(self.light_centers, dtype=np.float64)
            lr = np.ascontiguousarray(self.light_radii, dtype=np.float64)
            le = np.ascontiguousarray(self.light_radiance, dtype=np.float64)
        else:
            lc = np.zeros((0, 3))
            lr = np.zeros(0)
            le = np.zeros((0, 3))
        if self.mode == SINGLE_DIRECTIONAL:
            dl_dir = self.sun_direction
            dl_e = np.asarray(self.sun_strength, dtype=np.float64)
        else:
            dl_dir = np.array([0.0, -1.0, 0.0])
            dl_e = np.zeros(3)
        env = (np.asarray(self.env_radiance, dtype=np.float64)
               if self.mode == UNIFORM_ENVIRONMENT else np.zeros(3))
        return dict(tri=tri, tri_albedo=tri_albedo, tri_objid=tri_objid,
                    light_c=lc, light_r=lr, light_e=le,
                    dl_dir=dl_dir, dl_e=dl_e, env=env)


def build_scene(mesh: Mesh, mode: str, camera: CameraPose, **overrides) -> Scene:
    """Attach the ground plane and the requested lighting mode to one mesh."""
    if mode not in LIGHTING_MODES:
        raise ValueError(f"unknown lighting mode {mode!r}")
    if mode == UNIFORM_ENVIRONMENT and "env_radiance" not in overrides:
        overrides["env_radiance"] = np.ones(3)
    return Scene(meshes=[mesh], mode=mode, camera=camera, **overrides)

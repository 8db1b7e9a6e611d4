"""Triangle meshes: OBJ loading, unit-cube normalization, procedural corpus."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class MeshError(ValueError):
    pass


@dataclass
class Mesh:
    vertices: np.ndarray  # (N, 3) float64
    triangles: np.ndarray  # (T, 3) int32
    albedo: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.5, 0.5]))

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        self.albedo = np.asarray(self.albedo, dtype=np.float64).reshape(3)
        if self.triangles.size and self.triangles.max() >= len(self.vertices):
            raise MeshError(
                f"triangle index {int(self.triangles.max())} out of range "
                f"for {len(self.vertices)} vertices"
            )

    def bbox(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def corners(self) -> np.ndarray:
        """Per-triangle (v0, v1, v2) soup, shape (T, 9)."""
        v = self.vertices[self.triangles.reshape(-1)].reshape(-1, 9)
        return np.ascontiguousarray(v)


def load_mesh(path) -> Mesh:
    """Read a Wavefront-OBJ subset (v / f lines, faces fan-triangulated)."""
    vertices = []
    faces = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "v":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{lineno}: malformed vertex: {line!r}")
                try:
                    vertices.append([float(x) for x in parts[1:4]])
                except ValueError as exc:
                    raise MeshError(f"{path}:{lineno}: {exc}") from None
            elif parts[0] == "f":
                try:
                    idx = [int(p.split("/")[0]) - 1 for p in parts[1:]]
                except ValueError as exc:
                    raise MeshError(f"{path}:{lineno}: {exc}") from None
                if len(idx) < 3:
                    raise MeshError(f"{path}:{lineno}: face with <3 vertices")
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
                for i in idx:
                    if i < 0 or i >= len(vertices):
                        raise MeshError(
                            f"{path}:{lineno}: face index {i + 1} out of range"
                        )
    if not faces:
        raise MeshError(f"{path}: no triangles found")
    return Mesh(np.array(vertices), np.array(faces))


def normalize_to_unit_cube(mesh: Mesh) -> Mesh:
    """Uniform scale to max extent 1, bottom center moved to the origin."""
    lo, hi = mesh.bbox()
    extent = float((hi - lo).max())
    if extent <= 0:
        raise MeshError("mesh has zero extent")
    v = mesh.vertices / extent
    lo = v.min(axis=0)
    hi = v.max(axis=0)
    shift = np.array([(lo[0] + hi[0]) / 2, lo[1], (lo[2] + hi[2]) / 2])
    return replace(mesh, vertices=v - shift)


def merge(meshes) -> Mesh:
    verts = []
    tris = []
    off = 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + off)
        off += len(m.vertices)
    return Mesh(np.vstack(verts), np.vstack(tris), meshes[0].albedo)


def _box(w, h, d, center=(0.0, 0.0, 0.0)):
    cx, cy, cz = center
    x, y, z = w / 2, h / 2, d / 2
    v = np.array(
        [[sx * x + cx, sy * y + cy, sz * z + cz]
         for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
    )
    quads = [
        (0, 1, 3, 2), (4, 6, 7, 5),  # x faces
        (0, 4, 5, 1), (2, 3, 7, 6),  # y faces
        (0, 2, 6, 4), (1, 5, 7, 3),  # z faces
    ]
    tris = []
    for a, b, c, d_ in quads:
        tris.append([a, b, c])
        tris.append([a, c, d_])
    return Mesh(v, np.array(tris))


def _lathe(profile, segments=16):
    """Revolve an (r, y) profile polyline around the y axis."""
    profile = np.asarray(profile, dtype=np.float64)
    n = len(profile)
    ang = np.linspace(0, 2 * np.pi, segments, endpoint=False)
    verts = np.empty((n * segments, 3))
    for k, a in enumerate(ang):
        verts[k * n:(k + 1) * n, 0] = profile[:, 0] * np.cos(a)
        verts[k * n:(k + 1) * n, 1] = profile[:, 1]
        verts[k * n:(k + 1) * n, 2] = profile[:, 0] * np.sin(a)
    tris = []
    for k in range(segments):
        k2 = (k + 1) % segments
        for i in range(n - 1):
            a = k * n + i
            b = k * n + i + 1
            c = k2 * n + i + 1
            d = k2 * n + i
            tris.append([a, b, c])
            tris.append([a, c, d])
    return Mesh(verts, np.array(tris))


def _sphere(radius, rings=8, segments=12):
    ang = np.linspace(0, np.pi, rings + 1)
    profile = np.stack([radius * np.sin(ang), radius * np.cos(ang)], axis=1)
    m = _lathe(profile, segments)
    return _drop_degenerate(m)


def _cylinder(radius, height, segments=14):
    profile = [(0.0, -height / 2), (radius, -height / 2),
               (radius, height / 2), (0.0, height / 2)]
    return _drop_degenerate(_lathe(profile, segments))


def _cone(radius, height, segments=14):
    profile = [(0.0, 0.0), (radius, 0.0), (0.0, height)]
    return _drop_degenerate(_lathe(profile, segments))


def _capsule(radius, height, segments=12, rings=4):
    ang_top = np.linspace(0, np.pi / 2, rings + 1)
    ang_bot = np.linspace(np.pi / 2, np.pi, rings + 1)
    top = np.stack([radius * np.sin(ang_top),
                    height / 2 + radius * np.cos(ang_top)], axis=1)
    bot = np.stack([radius * np.sin(ang_bot),
                    -height / 2 + radius * np.cos(ang_bot)], axis=1)
    profile = np.vstack([top, bot[1:]])
    return _drop_degenerate(_lathe(profile, segments))


def _torus(major, minor, segments=14, sides=8):
    ang = np.linspace(0, 2 * np.pi, sides, endpoint=False)
    verts = []
    for a in np.linspace(0, 2 * np.pi, segments, endpoint=False):
        for b in ang:
            r = major + minor * np.cos(b)
            verts.append([r * np.cos(a), minor * np.sin(b), r * np.sin(a)])
    tris = []
    for k in range(segments):
        k2 = (k + 1) % segments
        for i in range(sides):
            i2 = (i + 1) % sides
            a = k * sides + i
            b = k * sides + i2
            c = k2 * sides + i2
            d = k2 * sides + i
            tris.append([a, b, c])
            tris.append([a, c, d])
    return Mesh(np.array(verts), np.array(tris))


def _drop_degenerate(mesh: Mesh, eps=1e-12) -> Mesh:
    v = mesh.vertices[mesh.triangles]
    area = 0.5 * np.linalg.norm(
        np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1
    )
    return replace(mesh, triangles=mesh.triangles[area > eps])


def _bracket(rng):
    a = _box(1.0, 0.3 * rng.uniform(0.8, 1.2), 0.5, center=(0, 0.15, 0))
    b = _box(0.3, 1.0 * rng.uniform(0.8, 1.2), 0.5, center=(-0.35, 0.5, 0))
    return merge([a, b])


def _table(rng):
    top_h = 0.08
    h = rng.uniform(0.55, 0.75)
    parts = [_box(1.0, top_h, 0.7, center=(0, h + top_h / 2, 0))]
    leg = 0.08
    for sx in (-1, 1):
        for sz in (-1, 1):
            parts.append(_box(leg, h, leg,
                              center=(sx * (0.5 - leg), h / 2, sz * (0.35 - leg))))
    return merge(parts)


def _chair(rng):
    h = rng.uniform(0.4, 0.5)
    parts = [_box(0.55, 0.07, 0.55, center=(0, h, 0))]
    leg = 0.06
    for sx in (-1, 1):
        for sz in (-1, 1):
            parts.append(_box(leg, h, leg,
                              center=(sx * 0.23, h / 2, sz * 0.23)))
    back_h = rng.uniform(0.45, 0.6)
    parts.append(_box(0.55, back_h, 0.06, center=(0, h + back_h / 2, -0.25)))
    return merge(parts)


def _mug(rng):
    r = rng.uniform(0.3, 0.4)
    h = rng.uniform(0.7, 0.9)
    body = _cylinder(r, h, segments=14)
    body = replace(body, vertices=body.vertices + np.array([0, h / 2, 0]))
    handle = _torus(0.22, 0.05, segments=10, sides=6)
    hv = handle.vertices.copy()
    # rotate torus into the xy plane and attach at the side
    hv = hv[:, [0, 2, 1]]
    hv[:, 0] += r + 0.08
    hv[:, 1] += h / 2
    handle = replace(handle, vertices=hv)
    return merge([body, handle])


_FAMILIES = [
    ("box", lambda rng: _box(rng.uniform(0.6, 1.0), rng.uniform(0.5, 1.0),
                             rng.uniform(0.6, 1.0))),
    ("sphere", lambda rng: _sphere(rng.uniform(0.35, 0.5))),
    ("cylinder", lambda rng: _cylinder(rng.uniform(0.25, 0.4),
                                       rng.uniform(0.7, 1.0))),
    ("cone", lambda rng: _cone(rng.uniform(0.35, 0.5), rng.uniform(0.7, 1.0))),
    ("torus", lambda rng: _torus(rng.uniform(0.3, 0.4), rng.uniform(0.1, 0.16))),
    ("capsule", lambda rng: _capsule(rng.uniform(0.2, 0.3),
                                     rng.uniform(0.4, 0.6))),
    ("bracket", _bracket),
    ("table", _table),
    ("chair", _chair),
    ("mug", _mug),
]

FAMILY_NAMES = [name for name, _ in _FAMILIES]


def gen_procedural_corpus(class_count, per_class, seed, rgb=False):
    """Deterministic labelled shape corpus, one family per class.

    Returns (meshes, labels); every mesh is unit-cube normalized and carries
    either a neutral gray albedo or a per-instance random RGB albedo.
    """
    if class_count > len(_FAMILIES):
        raise ValueError(
            f"class_count {class_count} exceeds {len(_FAMILIES)} families"
        )
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    meshes = []
    labels = []
    for label in range(class_count):
        name, make = _FAMILIES[label]
        for k in range(per_class):
            rng = np.random.default_rng([seed, label, k])
            m = make(rng)
            m = normalize_to_unit_cube(m)
            if rgb:
                albedo = rng.uniform(0.2, 0.9, size=3)
            else:
                albedo = np.full(3, 0.5)
            meshes.append(replace(m, albedo=albedo))
            labels.append(label)
    return meshes, labels

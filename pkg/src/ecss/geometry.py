"""Mesh helpers: vertex normals and procedural primitives."""
from __future__ import annotations

import math

import numpy as np

from .errors import MalformedMesh


def validate_mesh(vertices: np.ndarray, indices: np.ndarray) -> np.ndarray:
    idx = np.asarray(indices)
    if idx.ndim == 1:
        if idx.size % 3:
            raise MalformedMesh(f"index count {idx.size} is not a multiple of 3")
        idx = idx.reshape(-1, 3)
    if idx.ndim != 2 or idx.shape[1] != 3:
        raise MalformedMesh(f"faces must be index triples, got shape {idx.shape}")
    idx = idx.astype(np.int64, copy=False)
    if idx.size and (idx.min() < 0 or idx.max() >= len(vertices)):
        raise MalformedMesh(f"face index out of range for {len(vertices)} vertices")
    return idx


def face_normals(vertices: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Unnormalized face normals; length is twice the triangle area."""
    v = np.asarray(vertices, dtype=np.float64)
    a, b, c = v[indices[:, 0]], v[indices[:, 1]], v[indices[:, 2]]
    return np.cross(b - a, c - a)


def vertex_normals(vertices: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Area-weighted average of incident face normals, normalized.

    Vertices touched by no (non-degenerate) face get ``(0, 0, 1)``.
    """
    idx = validate_mesh(vertices, indices)
    fn = face_normals(vertices, idx)
    acc = np.zeros((len(vertices), 3))
    for k in range(3):
        np.add.at(acc, idx[:, k], fn)
    n = np.linalg.norm(acc, axis=1)
    out = np.tile((0.0, 0.0, 1.0), (len(vertices), 1))
    ok = n > 1e-300
    out[ok] = acc[ok] / n[ok, None]
    return out


def triangle_areas(vertices, indices) -> np.ndarray:
    return 0.5 * np.linalg.norm(face_normals(vertices, indices), axis=1)


# -- primitives -------------------------------------------------------------------


def cube(size: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned cube centered at the origin: 8 shared corners, 12 outward CCW triangles."""
    h = 0.5 * size
    v = np.array(
        [
            [-h, -h, -h], [h, -h, -h], [h, h, -h], [-h, h, -h],
            [-h, -h, h], [h, -h, h], [h, h, h], [-h, h, h],
        ]
    )
    f = np.array(
        [
            [4, 5, 6], [4, 6, 7],  # +z
            [1, 0, 3], [1, 3, 2],  # -z
            [5, 1, 2], [5, 2, 6],  # +x
            [0, 4, 7], [0, 7, 3],  # -x
            [7, 6, 2], [7, 2, 3],  # +y
            [0, 1, 5], [0, 5, 4],  # -y
        ]
    )
    return v, f


def quad(size: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Unit quad in the z=0 plane facing +z."""
    h = 0.5 * size
    v = np.array([[-h, -h, 0.0], [h, -h, 0.0], [h, h, 0.0], [-h, h, 0.0]])
    return v, np.array([[0, 1, 2], [0, 2, 3]])


def uv_sphere(rings: int = 12, segments: int = 24, radius: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    if rings < 2 or segments < 3:
        raise ValueError("uv_sphere needs rings >= 2 and segments >= 3")
    verts = [(0.0, radius, 0.0)]
    for r in range(1, rings):
        theta = math.pi * r / rings
        y = radius * math.cos(theta)
        s = radius * math.sin(theta)
        for k in range(segments):
            phi = 2.0 * math.pi * k / segments
            verts.append((s * math.sin(phi), y, s * math.cos(phi)))
    verts.append((0.0, -radius, 0.0))
    faces = []
    for k in range(segments):
        faces.append((0, 1 + k, 1 + (k + 1) % segments))
    for r in range(rings - 2):
        a = 1 + r * segments
        b = a + segments
        for k in range(segments):
            k1 = (k + 1) % segments
            faces.append((a + k, b + k, b + k1))
            faces.append((a + k, b + k1, a + k1))
    last = len(verts) - 1
    base = 1 + (rings - 2) * segments
    for k in range(segments):
        faces.append((last, base + (k + 1) % segments, base + k))
    return np.array(verts), np.array(faces, dtype=np.int64)


def fibonacci_sphere(n: int, radius: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Closed sphere mesh with exactly ``n`` vertices (convex hull of a Fibonacci lattice).

    ``n == 3`` gives a single triangle.
    """
    if n < 3:
        raise ValueError("need at least 3 vertices")
    if n == 3:
        v = radius * np.array([[1.0, 0.0, 0.0], [-0.5, math.sqrt(3) / 2, 0.0], [-0.5, -math.sqrt(3) / 2, 0.0]])
        return v, np.array([[0, 1, 2]])
    from scipy.spatial import ConvexHull

    i = np.arange(n) + 0.5
    y = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - y * y)
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    v = radius * np.column_stack([r * np.cos(phi), y, r * np.sin(phi)])
    faces = ConvexHull(v).simplices.astype(np.int64)
    # orient every face outward
    fn = face_normals(v, faces)
    centers = v[faces].mean(axis=1)
    flip = np.einsum("ij,ij->i", fn, centers) < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return v, faces

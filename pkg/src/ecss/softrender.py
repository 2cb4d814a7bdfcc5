"""Deterministic CPU raster pipeline standing in for GLSL shaders.

Per triangle: clip-space transform, clipping against ``w > 1e-6`` (plus a wide
guard band), perspective divide, viewport mapping, snapping to 1/256 pixel,
integer edge functions with the top-left fill rule, ``<`` depth test and
per-fragment Blinn-Phong shading with perspective-correct attributes.

Window coordinates put row 0 at the top of the image; pixel ``(i, j)`` is
sampled at its center ``(i + 0.5, j + 0.5)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit

from . import math3d
from .errors import MalformedBuffer

NEAR_W_EPS = 1e-6
SUBPIXEL_BITS = 8
SUBPIXEL = 1 << SUBPIXEL_BITS

SHADE_FLAT = 0
SHADE_BLINN_PHONG = 1
_SHADING_CODES = {"flat": SHADE_FLAT, "blinn_phong": SHADE_BLINN_PHONG}


@dataclass
class Light:
    position: np.ndarray
    color: np.ndarray = field(default_factory=lambda: np.ones(3))
    intensity: float = 1.0

    def __post_init__(self):
        self.position = math3d.vec3(self.position)
        self.color = np.asarray(self.color, dtype=np.float64).reshape(3)
        if self.intensity < 0 or not np.all(np.isfinite(self.color)):
            raise ValueError("light intensity must be non-negative and color finite")

    @property
    def radiance(self) -> np.ndarray:
        return self.color * self.intensity


@dataclass
class Material:
    """Blinn-Phong coefficients. ``color`` tints the ambient and diffuse terms."""

    ambient: float = 0.1
    diffuse: float = 0.7
    specular: float = 0.3
    shininess: float = 32.0
    color: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        self.color = np.asarray(self.color, dtype=np.float64).reshape(3)
        for name in ("ambient", "diffuse", "specular"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} coefficient {v} outside [0, 1]")
        if self.shininess < 1.0:
            raise ValueError(f"shininess must be >= 1, got {self.shininess}")


class Framebuffer:
    def __init__(self, width: int, height: int):
        if width < 1 or height < 1:
            raise ValueError(f"framebuffer size must be positive, got {width}x{height}")
        self.width = int(width)
        self.height = int(height)
        self.color = np.zeros((self.height, self.width, 3), dtype=np.uint8)
        self.depth = np.full((self.height, self.width), np.inf, dtype=np.float32)
        self._clip = np.empty((0, 4))

    def clip_scratch(self, n: int) -> np.ndarray:
        """Reusable ``(n, 4)`` buffer for the clip coordinates of one draw."""
        if len(self._clip) < n:
            self._clip = np.empty((n, 4))
        return self._clip[:n]

    def pixel(self, x: int, y: int) -> tuple[int, int, int]:
        return tuple(int(c) for c in self.color[y, x])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Framebuffer)
            and np.array_equal(self.color, other.color)
            and np.array_equal(self.depth, other.depth)
        )


def quantize(c) -> np.ndarray:
    """Linear [0, 1] color to 8 bits, rounding half up."""
    return np.floor(np.clip(np.asarray(c, dtype=np.float64), 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def clear(fb: Framebuffer, color=(0.0, 0.0, 0.0)) -> None:
    fb.color[...] = quantize(color)
    fb.depth.fill(np.inf)


def shade_blinn_phong(world_pos, normal, material: Material, lights: Sequence[Light], view_pos) -> np.ndarray:
    """Blinn-Phong color in [0, 1]; white base unless ``material.color`` says otherwise."""
    p = np.asarray(world_pos, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    base = material.color
    out = material.ambient * base
    v = np.asarray(view_pos, dtype=np.float64) - p
    v = v / np.linalg.norm(v)
    for light in lights:
        l = light.position - p
        l = l / np.linalg.norm(l)
        ndl = float(n @ l)
        if ndl <= 0.0:
            continue
        h = l + v
        h = h / np.linalg.norm(h)
        ndh = max(float(n @ h), 0.0)
        out = out + (material.diffuse * ndl * base + material.specular * ndh**material.shininess) * light.radiance
    return np.clip(out, 0.0, 1.0)


# -- raster kernel --------------------------------------------------------------------
# The vertex stage produces clip coordinates only. Fragments interpolate the
# model-space attributes (position, normal, color) and move them to world
# space themselves: both maps are affine, and there are far fewer covered
# samples than vertices. ``frag`` records are 13 floats: 4 unused, world xyz,
# normal xyz, color rgb.

_REC = 13
# a triangle clipped by 5 planes has at most 8 corners
CLIP_ROWS = 16
# clipped-polygon rows: clip xyzw, then the 9 vertex-buffer attributes
_POLY = 13


@njit(cache=True)
def _shade(rec, mode, amb, kd, ks, shin, base_tint, light_pos, light_rad, view_pos, out):
    if mode == SHADE_FLAT:
        for c in range(3):
            out[c] = rec[10 + c] * base_tint[c]
        return
    px, py, pz = rec[4], rec[5], rec[6]
    nx, ny, nz = rec[7], rec[8], rec[9]
    nn = math.sqrt(nx * nx + ny * ny + nz * nz)
    if nn > 0.0:
        nx /= nn
        ny /= nn
        nz /= nn
    vx = view_pos[0] - px
    vy = view_pos[1] - py
    vz = view_pos[2] - pz
    vn = math.sqrt(vx * vx + vy * vy + vz * vz)
    if vn > 0.0:
        vx /= vn
        vy /= vn
        vz /= vn
    for c in range(3):
        out[c] = amb * rec[10 + c] * base_tint[c]
    for k in range(light_pos.shape[0]):
        lx = light_pos[k, 0] - px
        ly = light_pos[k, 1] - py
        lz = light_pos[k, 2] - pz
        ln = math.sqrt(lx * lx + ly * ly + lz * lz)
        if ln == 0.0:
            continue
        lx /= ln
        ly /= ln
        lz /= ln
        ndl = nx * lx + ny * ly + nz * lz
        if ndl <= 0.0:
            continue
        hx = lx + vx
        hy = ly + vy
        hz = lz + vz
        hn = math.sqrt(hx * hx + hy * hy + hz * hz)
        spec = 0.0
        if hn > 0.0:
            ndh = (nx * hx + ny * hy + nz * hz) / hn
            if ndh > 0.0:
                spec = ks * ndh**shin
        for c in range(3):
            out[c] += (kd * ndl * rec[10 + c] * base_tint[c] + spec) * light_rad[k, c]


@njit(cache=True)
def _edge(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


@njit(cache=True)
def _is_top_left(ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    return dy < 0 or (dy == 0 and dx > 0)


@njit(cache=True)
def _snap(v):
    return np.int64(math.floor(v * SUBPIXEL + 0.5))


@njit(cache=True)
def _plane_dist(x, y, w, p, guard):
    if p == 0:
        return w - NEAR_W_EPS
    if p == 1:
        return guard * w - x
    if p == 2:
        return guard * w + x
    if p == 3:
        return guard * w - y
    return guard * w + y


@njit(cache=True)
def _outcode(x, y, z, w, guard):
    """Bits 0-5: outside the view volume sides; bit 6: needs clipping (near or guard band)."""
    code = 0
    if x > w:
        code |= 1
    if x < -w:
        code |= 2
    if y > w:
        code |= 4
    if y < -w:
        code |= 8
    if z > w:
        code |= 16
    if z < -w:
        code |= 32
    for p in range(5):
        if _plane_dist(x, y, w, p, guard) < 0.0:
            code |= 64
            break
    return code


@njit(cache=True)
def _raster_all(clip, vb, tris, model, nmat, color, depth, mode, amb, kd, ks, shin, tint, light_pos, light_rad,
                view_pos, guard):
    """Clip, set up and fill every triangle; returns covered samples (before the depth test).

    Vertices are projected once up front. The triangle loop is kept flat and
    free of array aliases on purpose: both would cost reference counting per
    triangle, which outweighs the small triangles being drawn.
    """
    h, w = depth.shape
    half = SUBPIXEL // 2
    nv = clip.shape[0]
    rows = nv + CLIP_ROWS
    codes = np.empty(nv, dtype=np.int64)
    sx = np.zeros(rows, dtype=np.int64)
    sy = np.zeros(rows, dtype=np.int64)
    iw = np.zeros(rows)
    zn = np.zeros(rows)
    for r in range(nv):
        codes[r] = _outcode(clip[r, 0], clip[r, 1], clip[r, 2], clip[r, 3], guard)
        if codes[r] & 64 == 0:
            inv = 1.0 / clip[r, 3]
            iw[r] = inv
            zn[r] = clip[r, 2] * inv
            sx[r] = _snap((clip[r, 0] * inv + 1.0) * 0.5 * w)
            sy[r] = _snap((1.0 - clip[r, 1] * inv) * 0.5 * h)
    poly = np.empty((CLIP_ROWS, _POLY))
    tmp = np.empty((CLIP_ROWS, _POLY))
    attr = np.empty(9)
    frag = np.empty(_REC)
    rgb = np.empty(3)
    fragments = 0
    for t in range(tris.shape[0]):
        ca = codes[tris[t, 0]]
        cb = codes[tris[t, 1]]
        cc = codes[tris[t, 2]]
        # trivial reject: all three vertices beyond one side of the view volume
        if ca & cb & cc & 63:
            continue
        clipped = (ca | cb | cc) & 64 != 0
        n = 3
        if clipped:
            # Sutherland-Hodgman against the near plane and the guard band
            for k in range(3):
                r = tris[t, k]
                for q in range(4):
                    poly[k, q] = clip[r, q]
                for q in range(9):
                    poly[k, 4 + q] = vb[r, q]
            for p in range(5):
                m = 0
                for k in range(n):
                    k2 = (k + 1) % n
                    da = _plane_dist(poly[k, 0], poly[k, 1], poly[k, 3], p, guard)
                    db = _plane_dist(poly[k2, 0], poly[k2, 1], poly[k2, 3], p, guard)
                    if da >= 0.0:
                        for q in range(_POLY):
                            tmp[m, q] = poly[k, q]
                        m += 1
                    if (da >= 0.0) != (db >= 0.0):
                        u = da / (da - db)
                        for q in range(_POLY):
                            tmp[m, q] = poly[k, q] + u * (poly[k2, q] - poly[k, q])
                        m += 1
                n = m
                if n == 0:
                    break
                for k in range(n):
                    for q in range(_POLY):
                        poly[k, q] = tmp[k, q]
            for k in range(n):
                r = nv + k
                inv = 1.0 / poly[k, 3]
                iw[r] = inv
                zn[r] = poly[k, 2] * inv
                sx[r] = _snap((poly[k, 0] * inv + 1.0) * 0.5 * w)
                sy[r] = _snap((1.0 - poly[k, 1] * inv) * 0.5 * h)
        for f in range(1, n - 1):
            if clipped:
                a, b, c = nv, nv + f, nv + f + 1
            else:
                a, b, c = tris[t, 0], tris[t, 1], tris[t, 2]
            xa, ya, xb, yb, xc, yc = sx[a], sy[a], sx[b], sy[b], sx[c], sy[c]
            # sample rows/columns inside the bounding box; most small triangles stop here
            ix0 = max(0, -((half - min(xa, xb, xc)) // SUBPIXEL))
            ix1 = min(w - 1, (max(xa, xb, xc) - half) // SUBPIXEL)
            if ix0 > ix1:
                continue
            iy0 = max(0, -((half - min(ya, yb, yc)) // SUBPIXEL))
            iy1 = min(h - 1, (max(ya, yb, yc) - half) // SUBPIXEL)
            if iy0 > iy1:
                continue
            area = _edge(xa, ya, xb, yb, xc, yc)
            if area == 0:
                continue
            if area < 0:
                b, c = c, b
                xb, yb, xc, yc = xc, yc, xb, yb
                area = -area
            iwa, iwb, iwc = iw[a], iw[b], iw[c]
            za, zb, zc = zn[a], zn[b], zn[c]
            # bias makes "E >= bias" equal to "E > 0, or E == 0 on a top/left edge"
            b0 = 0 if _is_top_left(xb, yb, xc, yc) else 1
            b1 = 0 if _is_top_left(xc, yc, xa, ya) else 1
            b2 = 0 if _is_top_left(xa, ya, xb, yb) else 1
            # per-column increments of each edge function
            d0 = -(yc - yb) * SUBPIXEL
            d1 = -(ya - yc) * SUBPIXEL
            d2 = -(yb - ya) * SUBPIXEL
            inv_area = 1.0 / area
            for j in range(iy0, iy1 + 1):
                py = j * SUBPIXEL + half
                px = ix0 * SUBPIXEL + half
                e0 = _edge(xb, yb, xc, yc, px, py)
                e1 = _edge(xc, yc, xa, ya, px, py)
                e2 = _edge(xa, ya, xb, yb, px, py)
                for i in range(ix0, ix1 + 1):
                    if e0 >= b0 and e1 >= b1 and e2 >= b2:
                        fragments += 1
                        l0 = e0 * inv_area
                        l1 = e1 * inv_area
                        l2 = e2 * inv_area
                        z = l0 * za + l1 * zb + l2 * zc
                        if -1.0 <= z <= 1.0:
                            zf = np.float32(z)
                            if zf < depth[j, i]:
                                depth[j, i] = zf
                                p0 = l0 * iwa
                                p1 = l1 * iwb
                                p2 = l2 * iwc
                                s = p0 + p1 + p2
                                p0 /= s
                                p1 /= s
                                p2 /= s
                                if clipped:
                                    for k in range(9):
                                        attr[k] = p0 * poly[a - nv, 4 + k] + p1 * poly[b - nv, 4 + k] + p2 * poly[c - nv, 4 + k]
                                else:
                                    for k in range(9):
                                        attr[k] = p0 * vb[a, k] + p1 * vb[b, k] + p2 * vb[c, k]
                                for k in range(3):
                                    frag[4 + k] = model[k, 0] * attr[0] + model[k, 1] * attr[1] + model[k, 2] * attr[2] + model[k, 3]
                                    frag[7 + k] = nmat[k, 0] * attr[3] + nmat[k, 1] * attr[4] + nmat[k, 2] * attr[5]
                                    frag[10 + k] = attr[6 + k]
                                _shade(frag, mode, amb, kd, ks, shin, tint, light_pos, light_rad, view_pos, rgb)
                                for k in range(3):
                                    v = rgb[k]
                                    if v < 0.0:
                                        v = 0.0
                                    elif v > 1.0:
                                        v = 1.0
                                    color[j, i, k] = np.uint8(math.floor(v * 255.0 + 0.5))
                    e0 += d0
                    e1 += d1
                    e2 += d2
    return fragments


@njit(cache=True)
def _clip_kernel(vb, mvp, out):
    # matrix entries live in locals: the compiler cannot keep them in
    # registers itself because ``out`` might alias the inputs
    a00, a01, a02, a03 = mvp[0, 0], mvp[0, 1], mvp[0, 2], mvp[0, 3]
    a10, a11, a12, a13 = mvp[1, 0], mvp[1, 1], mvp[1, 2], mvp[1, 3]
    a20, a21, a22, a23 = mvp[2, 0], mvp[2, 1], mvp[2, 2], mvp[2, 3]
    a30, a31, a32, a33 = mvp[3, 0], mvp[3, 1], mvp[3, 2], mvp[3, 3]
    for i in range(vb.shape[0]):
        x, y, z = np.float64(vb[i, 0]), np.float64(vb[i, 1]), np.float64(vb[i, 2])
        out[i, 0] = a00 * x + a01 * y + a02 * z + a03
        out[i, 1] = a10 * x + a11 * y + a12 * z + a13
        out[i, 2] = a20 * x + a21 * y + a22 * z + a23
        out[i, 3] = a30 * x + a31 * y + a32 * z + a33


class DrawStats(NamedTuple):
    triangles: int
    fragments: int


def transform_vertices(vertex_buffer: np.ndarray, mvp: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Vertex stage: ``(n, 4)`` clip coordinates of the buffer's positions.

    ``out`` may supply a reusable ``(n, 4)`` float64 buffer.
    """
    vb = np.asarray(vertex_buffer)
    if vb.dtype != np.float32 and vb.dtype != np.float64:
        vb = vb.astype(np.float64)
    if out is None or out.shape != (len(vb), 4):
        out = np.empty((len(vb), 4))
    _clip_kernel(vb, np.ascontiguousarray(mvp, dtype=np.float64), out)
    return out


def _check_buffers(vertex_buffer, indices):
    vb = np.asarray(vertex_buffer)
    if vb.ndim != 2 or vb.shape[1] != 9:
        raise MalformedBuffer(f"vertex buffer must be (n, 9), got {vb.shape}")
    if vb.dtype != np.float32 and vb.dtype != np.float64:
        vb = vb.astype(np.float64)
    vb = np.ascontiguousarray(vb)
    idx = np.asarray(indices)
    if idx.ndim == 1:
        if idx.size % 3:
            raise MalformedBuffer("index count not divisible by 3")
        idx = idx.reshape(-1, 3)
    if idx.ndim != 2 or idx.shape[1] != 3:
        raise MalformedBuffer(f"index buffer must be (m, 3), got {idx.shape}")
    if idx.dtype != np.uint32 and idx.dtype != np.int64:
        if not np.issubdtype(idx.dtype, np.integer):
            raise MalformedBuffer(f"indices must be integers, got {idx.dtype}")
        idx = idx.astype(np.int64)
    idx = np.ascontiguousarray(idx)
    if idx.size and not _indices_in_range(idx, len(vb)):
        raise MalformedBuffer("index out of range")
    return vb, idx


@njit(cache=True)
def _indices_in_range(idx, n):
    for t in range(idx.shape[0]):
        for k in range(3):
            if idx[t, k] < 0 or idx[t, k] >= n:
                return False
    return True


def draw_triangles(
    fb: Framebuffer,
    vertex_buffer,
    indices,
    mvp,
    model,
    material: Material,
    lights: Sequence[Light],
    view_pos,
    shading: str = "blinn_phong",
) -> DrawStats:
    """Rasterize an indexed triangle list into ``fb``.

    ``vertex_buffer`` rows are ``[px py pz nx ny nz r g b]`` in model space.
    Returns the number of triangles submitted and of covered pixel samples
    (counted before the depth test).
    """
    vb, idx = _check_buffers(vertex_buffer, indices)
    if len(idx) == 0:
        return DrawStats(0, 0)
    model = np.ascontiguousarray(model, dtype=np.float64)
    clip = transform_vertices(vb, mvp, fb.clip_scratch(len(vb)))
    return DrawStats(len(idx), _rasterize(fb, clip, vb, idx, model, material, lights, view_pos, shading))


def _rasterize(fb, clip, vb, idx, model, material, lights, view_pos, shading) -> int:
    if lights:
        lp = np.array([l.position for l in lights], dtype=np.float64)
        lr = np.array([l.radiance for l in lights], dtype=np.float64)
    else:
        lp = np.zeros((0, 3))
        lr = np.zeros((0, 3))
    guard = float(2**19 / max(fb.width, fb.height))
    return int(
        _raster_all(
            clip,
            vb,
            idx,
            model,
            math3d.normal_matrix(model),
            fb.color,
            fb.depth,
            _SHADING_CODES[shading],
            float(material.ambient),
            float(material.diffuse),
            float(material.specular),
            float(material.shininess),
            np.asarray(material.color, dtype=np.float64),
            lp,
            lr,
            np.asarray(view_pos, dtype=np.float64).reshape(3),
            guard,
        )
    )


def ppm_bytes(fb: Framebuffer) -> bytes:
    header = f"P6\n{fb.width} {fb.height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(fb.color, dtype=np.uint8).tobytes()


def write_image(fb: Framebuffer, path) -> None:
    Path(path).write_bytes(ppm_bytes(fb))


_PPM_HEADER = re.compile(rb"P6\s+(\d+)\s+(\d+)\s+(\d+)\s")


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    m = _PPM_HEADER.match(data)
    if m is None or int(m.group(3)) != 255:
        raise ValueError(f"{path}: not an 8-bit binary PPM")
    w, h = int(m.group(1)), int(m.group(2))
    return np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=m.end()).reshape(h, w, 3)

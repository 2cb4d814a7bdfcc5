import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ecss import math3d
from ecss.errors import MalformedBuffer
from ecss.softrender import (
    Framebuffer,
    Light,
    Material,
    clear,
    draw_triangles,
    ppm_bytes,
    quantize,
    read_ppm,
    shade_blinn_phong,
    transform_vertices,
    write_image,
)


def vbuf(points, normal=(0, 0, 1), color=(1, 1, 1)) -> np.ndarray:
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    out = np.empty((len(p), 9), dtype=np.float32)
    out[:, :3] = p
    out[:, 3:6] = normal
    out[:, 6:9] = color
    return out


def draw_ndc(fb, points, tris, color=(1, 1, 1)):
    return draw_triangles(fb, vbuf(points, color=color), np.asarray(tris), np.eye(4), np.eye(4), Material(),
                          [], (0, 0, 1), "flat")


# -- coverage oracle -------------------------------------------------------------------
# Exact rational arithmetic: vertices snap to 1/256 pixel (round half up), samples sit
# at pixel centers, and a sample on an edge belongs to the triangle only when that
# edge is a top edge (horizontal, interior below) or a left edge (interior at +x).


def _snap(v: Fraction) -> Fraction:
    return Fraction(math.floor(v * 256 + Fraction(1, 2)), 256)


def _side(a, b, p) -> Fraction:
    return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])


def _owns_boundary(a, b, c) -> bool:
    if a[1] == b[1]:
        return c[1] > a[1]  # top edge
    x_on_line = a[0] + (b[0] - a[0]) * (c[1] - a[1]) / (b[1] - a[1])
    return c[0] > x_on_line  # left edge


def oracle_coverage(ndc_xy, w: int, h: int) -> set[tuple[int, int]]:
    pts = [(_snap((Fraction(x) + 1) / 2 * w), _snap((1 - Fraction(y)) / 2 * h)) for x, y in ndc_xy]
    a, b, c = pts
    if _side(a, b, c) == 0:
        return set()
    covered = set()
    for j in range(h):
        for i in range(w):
            p = (Fraction(2 * i + 1, 2), Fraction(2 * j + 1, 2))
            inside = True
            for u, v, o in ((a, b, c), (b, c, a), (c, a, b)):
                s, so = _side(u, v, p), _side(u, v, o)
                if s * so < 0 or (s == 0 and not _owns_boundary(u, v, o)):
                    inside = False
                    break
            if inside:
                covered.add((i, j))
    return covered


def test_clear_semantics():
    fb = Framebuffer(3, 2)
    clear(fb, (1.0, 0.5, 0.0))
    assert fb.pixel(2, 1) == (255, 128, 0)
    once = Framebuffer(3, 2)
    clear(once, (1.0, 0.5, 0.0))
    clear(fb, (1.0, 0.5, 0.0))
    assert fb == once
    fb.depth[:] = -1.0
    clear(fb)
    draw_ndc(fb, [(-1, -1, 0.9), (3, -1, 0.9), (-1, 3, 0.9)], [(0, 1, 2)])
    assert (fb.color == 255).all()


def test_quantize_rounds_half_up():
    assert quantize([0.0, 1.0, 0.5, 2.0, -1.0]).tolist() == [0, 255, 128, 255, 0]
    assert quantize(0.5 / 255.0).tolist() == 1


def test_full_viewport_quad_is_watertight():
    fb = Framebuffer(64, 64)
    stats = draw_ndc(fb, [(-1, -1, 0), (1, -1, 0), (1, 1, 0), (-1, 1, 0)], [(0, 1, 2), (0, 2, 3)])
    assert stats.fragments == 64 * 64
    assert np.isfinite(fb.depth).all()


def test_oversized_triangle_covers_4x4():
    fb = Framebuffer(4, 4)
    ndc = [(-1, -1), (3, -1), (-1, 3)]
    stats = draw_ndc(fb, [(x, y, 0) for x, y in ndc], [(0, 1, 2)])
    assert stats.fragments == 16 == len(oracle_coverage(ndc, 4, 4))


coord = st.integers(-80, 80).map(lambda k: k / 64)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(coord, coord), min_size=3, max_size=3))
def test_coverage_matches_exact_oracle(ndc):
    w, h = 12, 10
    fb = Framebuffer(w, h)
    stats = draw_ndc(fb, [(x, y, 0) for x, y in ndc], [(0, 1, 2)])
    want = oracle_coverage(ndc, w, h)
    got = {(i, j) for j, i in zip(*np.nonzero(np.isfinite(fb.depth)))}
    assert got == want and stats.fragments == len(want)


@settings(max_examples=30, deadline=None)
@given(st.tuples(st.integers(-60, 60), st.integers(-60, 60)))
def test_fan_partition_hits_every_pixel_once(hub):
    # four triangles around an interior hub tile the viewport exactly
    w = h = 16
    corners = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    centre = (hub[0] / 64, hub[1] / 64)
    pts = [centre] + corners
    tris = [(0, 1 + k, 1 + (k + 1) % 4) for k in range(4)]
    fb = Framebuffer(w, h)
    stats = draw_ndc(fb, [(x, y, 0) for x, y in pts], tris)
    assert stats.fragments == w * h
    assert np.isfinite(fb.depth).all()


def test_triangle_behind_camera_is_dropped():
    fb = Framebuffer(8, 8)
    proj = math3d.perspective(math.radians(60), 1.0, 0.1, 10)
    vb = vbuf([(-1, -1, 1), (1, -1, 1), (0, 1, 1)])
    stats = draw_triangles(fb, vb, np.array([[0, 1, 2]]), proj, np.eye(4), Material(), [], (0, 0, 0), "flat")
    assert stats.fragments == 0 and np.isinf(fb.depth).all()


def test_near_plane_crossing_triangle_is_clipped():
    fb = Framebuffer(32, 32)
    proj = math3d.perspective(math.radians(90), 1.0, 0.5, 10)
    # one vertex behind the eye, two in front
    vb = vbuf([(0, -1, 2), (-1, -1, -2), (1, -1, -2)])
    stats = draw_triangles(fb, vb, np.array([[0, 1, 2]]), proj, np.eye(4), Material(), [], (0, 0, 0), "flat")
    assert stats.fragments > 0
    z = fb.depth[np.isfinite(fb.depth)]
    assert z.min() >= -1 and z.max() <= 1


def test_depth_test_is_order_independent():
    near, far = [(-1, -1, -0.5), (3, -1, -0.5), (-1, 3, -0.5)], [(-1, -1, 0.5), (3, -1, 0.5), (-1, 3, 0.5)]
    for order in [(near, far), (far, near)]:
        fb = Framebuffer(4, 4)
        for pts in order:
            draw_ndc(fb, pts, [(0, 1, 2)], color=(1, 0, 0) if pts is near else (0, 0, 1))
        assert fb.pixel(1, 1) == (255, 0, 0)


def test_vertex_transform_and_buffers():
    vb = vbuf([(1, 2, 3), (4, 5, 6)])
    m = math3d.mat_translate((1, 0, 0))
    np.testing.assert_allclose(transform_vertices(vb, m), [[2, 2, 3, 1], [5, 5, 6, 1]])
    fb = Framebuffer(2, 2)
    with pytest.raises(MalformedBuffer):
        draw_ndc(fb, [(0, 0, 0)] * 3, [(0, 1, 3)])
    with pytest.raises(MalformedBuffer):
        draw_triangles(fb, np.zeros((3, 5)), np.array([[0, 1, 2]]), np.eye(4), np.eye(4), Material(), [], (0, 0, 1))
    assert draw_ndc(fb, [(0, 0, 0)] * 3, np.zeros((0, 3), int)).triangles == 0


def test_blinn_phong_cases():
    mat = Material(ambient=0.1, diffuse=0.5, specular=0.5, shininess=32)
    # light behind the surface: ambient only
    c = shade_blinn_phong((0, 0, 0), (0, 0, 1), mat, [Light((0, 0, -1))], (0, 0, 1))
    np.testing.assert_allclose(c, 0.1)
    # N = L = V: H = N, so the specular term is ks at full power
    c = shade_blinn_phong((0, 0, 0), (0, 0, 1), mat, [Light((0, 0, 3), intensity=0.5)], (0, 0, 2))
    np.testing.assert_allclose(c, 0.1 + 0.5 * 0.5 + 0.5 * 0.5)
    # worked example against the scalar oracle: H is the normalized L + V
    c = shade_blinn_phong((0, 0, 0), (0, 0, 1), mat, [Light((0, 0, 1))], (0, 1, 1))
    want = oracles.blinn_phong_scalar((0, 0, 0), (0, 0, 1), (0, 0, 1), (0, 1, 1), 0.1, 0.5, 0.5, 32)
    np.testing.assert_allclose(c, want, atol=1e-12)
    assert want == pytest.approx(0.6397, abs=1e-4)


def test_blinn_phong_random_against_oracle(rng):
    for _ in range(100):
        p, n, lp, vp = rng.normal(size=(4, 3))
        mat = Material(*rng.uniform(0, 1, 3), shininess=float(rng.uniform(1, 64)), color=rng.uniform(0, 1, 3))
        light = Light(lp, (1, 1, 1), float(rng.uniform(0, 1.5)))
        got = shade_blinn_phong(p, n, mat, [light], vp)
        for k in range(3):
            want = oracles.blinn_phong_scalar(p, n, lp, vp, mat.ambient, mat.diffuse, mat.specular, mat.shininess,
                                              light.intensity, mat.color[k])
            assert got[k] == pytest.approx(want, abs=1e-12)


def test_kernel_shading_matches_reference_shader():
    # a flat lit quad filling the screen under an ortho camera: every pixel is one fragment
    fb = Framebuffer(8, 8)
    mat = Material(ambient=0.2, diffuse=0.6, specular=0.4, shininess=8, color=(0.9, 0.5, 0.2))
    lights = [Light((0.3, 0.2, 2.0))]
    vb = vbuf([(-1, -1, 0), (1, -1, 0), (1, 1, 0), (-1, 1, 0)])
    draw_triangles(fb, vb, np.array([[0, 1, 2], [0, 2, 3]]), np.eye(4), np.eye(4), mat, lights, (0, 0, 3))
    for j in range(8):
        for i in range(8):
            p = ((2 * i + 1) / 8 - 1, 1 - (2 * j + 1) / 8, 0.0)
            want = quantize(shade_blinn_phong(p, (0, 0, 1), mat, lights, (0, 0, 3)))
            assert np.abs(fb.color[j, i].astype(int) - want.astype(int)).max() <= 1


def test_ppm_format(tmp_path):
    fb = Framebuffer(1, 1)
    clear(fb, (1, 0, 0))
    assert ppm_bytes(fb) == b"P6\n1 1\n255\n\xff\x00\x00"
    fb = Framebuffer(2, 2)
    fb.color[0, 0] = fb.color[1, 1] = 255
    payload = ppm_bytes(fb)[len(b"P6\n2 2\n255\n"):]
    assert payload == bytes([255] * 3 + [0] * 6 + [255] * 3)
    path = tmp_path / "x.ppm"
    write_image(fb, path)
    assert np.array_equal(read_ppm(path), fb.color)


def test_same_draw_twice_is_identical():
    out = []
    for _ in range(2):
        fb = Framebuffer(16, 16)
        draw_triangles(fb, vbuf([(-0.9, -0.8, 0.1), (0.7, -0.6, -0.2), (0.1, 0.9, 0.3)]), np.array([[0, 1, 2]]),
                       np.eye(4), np.eye(4), Material(), [Light((1, 1, 2))], (0, 0, 2))
        out.append(ppm_bytes(fb))
    assert out[0] == out[1]


def test_invalid_inputs():
    with pytest.raises(ValueError):
        Framebuffer(0, 3)
    with pytest.raises(ValueError):
        Material(ambient=1.5)
    with pytest.raises(ValueError):
        Material(shininess=0.5)
    with pytest.raises(ValueError):
        Light((0, 0, 0), intensity=-1)

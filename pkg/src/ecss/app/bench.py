"""Synthetic-scene benchmark.

Stages timed per frame:

a. transform + camera systems (scenegraph traversal only);
b. vertex stage alone: clip-space transform of every vertex;
c. full frame at the raster size: (a) plus clear and draw of every mesh (optional).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .. import geometry, math3d
from ..components import BasicTransform, Camera, RenderMesh, ShaderParams, VertexArray
from ..core import ComponentKind, World
from ..softrender import Framebuffer, Light, Material, clear, transform_vertices
from ..systems import camera_system_update, init_render_system, render_system_draw, transform_system_update


@dataclass
class StageStats:
    samples: list[float] = field(default_factory=list)  # seconds

    @property
    def mean_ms(self) -> float:
        return 1e3 * float(np.mean(self.samples))

    @property
    def p95_ms(self) -> float:
        return 1e3 * float(np.percentile(self.samples, 95))

    @property
    def fps(self) -> float:
        m = float(np.mean(self.samples))
        return math.inf if m == 0 else 1.0 / m


@dataclass
class BenchReport:
    objects: int
    verts_per_object: int
    frames: int
    triangles_per_frame: int
    raster_size: tuple[int, int]
    stages: dict[str, StageStats]

    @property
    def vertex_throughput(self) -> int:
        return self.objects * self.verts_per_object

    def text(self) -> str:
        lines = [
            "# ecss bench",
            f"objects: {self.objects}",
            f"verts_per_object: {self.verts_per_object}",
            f"frames: {self.frames}",
            f"vertex_throughput: {self.vertex_throughput} vertices/frame",
            f"triangles_per_frame: {self.triangles_per_frame}",
        ]
        labels = {
            "a": "stage_a_transform_camera",
            "b": "stage_b_vertex_transform",
            "c": f"stage_c_raster_{self.raster_size[0]}x{self.raster_size[1]}",
        }
        for key, st in self.stages.items():
            name = labels[key]
            lines.append(f"{name}_samples: {len(st.samples)}")
            lines.append(f"{name}_mean_ms: {st.mean_ms:.4f}")
            lines.append(f"{name}_p95_ms: {st.p95_ms:.4f}")
            lines.append(f"{name}_fps: {st.fps:.2f}")
        return "\n".join(lines) + "\n"


def build_bench_world(objects: int, verts_per_object: int, seed: int = 0, aspect: float = 1.0) -> World:
    """Camera plus ``objects`` copies of a ``verts_per_object``-vertex sphere under random transforms."""
    if objects < 1 or verts_per_object < 3:
        raise ValueError("need at least 1 object of at least 3 vertices")
    rng = np.random.Generator(np.random.PCG64(seed))
    world = World("bench")
    root = world.create_entity("root")
    cam = world.create_entity("camera")
    world.add_entity_child(root, cam)
    side = max(1.0, objects ** (1.0 / 3.0))
    dist = 2.5 * side + 2.0
    world.add_component(cam, BasicTransform(math3d.invert(math3d.lookat((0.0, 0.0, dist), (0, 0, 0), (0, 1, 0)))))
    world.add_component(cam, Camera.perspective(math.radians(60.0), aspect, 0.1, 4 * dist))
    verts, faces = geometry.fibonacci_sphere(verts_per_object, 0.5)
    normals = geometry.vertex_normals(verts, faces)
    lights = [Light((dist, dist, dist), (1.0, 1.0, 1.0), 1.0)]
    for k in range(objects):
        e = world.create_entity(f"obj{k}")
        world.add_entity_child(root, e)
        t = rng.uniform(-side, side, 3)
        axis = rng.normal(size=3)
        q = math3d.quat_from_axis_angle(axis, rng.uniform(0, 2 * math.pi))
        world.add_component(e, BasicTransform(math3d.compose_trs(t, q, rng.uniform(0.5, 1.5))))
        world.add_component(e, ShaderParams("blinn_phong", Material(color=rng.uniform(0.2, 1.0, 3)), lights))
        world.add_component(e, VertexArray())
        world.add_component(e, RenderMesh(verts, faces, normals))
    return world


def vertex_stage(world: World, buffers: dict | None = None) -> int:
    """Transform every packed vertex array to clip space; returns the vertex count.

    ``buffers`` caches one output array per vertex array across frames.
    """
    cam = world.get_component(world.camera_entity, ComponentKind.CAMERA)
    vp = cam.projection @ cam.root2cam
    buffers = {} if buffers is None else buffers
    total = 0
    for eid, vao in world.components_of(ComponentKind.VERTEX_ARRAY):
        model = world.l2w[eid]
        out = buffers.get(id(vao))
        out = transform_vertices(vao.data, vp @ model, out)
        buffers[id(vao)] = out
        total += len(out)
    return total


def run_bench(objects: int, verts_per_object: int, frames: int, raster: bool = True,
              size: tuple[int, int] = (256, 256), seed: int = 0, warmup: int = 1) -> BenchReport:
    if min(objects, verts_per_object, frames) < 1:
        raise ValueError("objects, verts-per-object and frames must all be at least 1")
    w, h = size
    world = build_bench_world(objects, max(verts_per_object, 3), seed, w / h)
    init_render_system(world)
    tris = sum(len(v.indices) for _, v in world.components_of(ComponentKind.VERTEX_ARRAY))
    stages = {"a": StageStats(), "b": StageStats()}
    clock = time.perf_counter

    for k in range(warmup + frames):
        t0 = clock()
        transform_system_update(world)
        camera_system_update(world)
        t1 = clock()
        if k >= warmup:
            stages["a"].samples.append(t1 - t0)
    buffers: dict = {}
    for k in range(warmup + frames):
        t0 = clock()
        vertex_stage(world, buffers)
        t1 = clock()
        if k >= warmup:
            stages["b"].samples.append(t1 - t0)
    if raster:
        stages["c"] = StageStats()
        fb = Framebuffer(w, h)
        for k in range(warmup + frames):
            t0 = clock()
            transform_system_update(world)
            camera_system_update(world)
            clear(fb)
            render_system_draw(world, fb)
            t1 = clock()
            if k >= warmup:
                stages["c"].samples.append(t1 - t0)
    return BenchReport(objects, verts_per_object, frames, tris, (w, h), stages)

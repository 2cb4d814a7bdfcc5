"""Systems: scenegraph visitors that own all per-frame behaviour.

A frame runs ``init -> (animation) -> transform -> camera -> render``.
Per-frame results shared between systems are written to the components
(``l2w``, ``l2cam``, ``root2cam``) and to ``world.l2w``, a map from every
reachable entity to its local-to-world matrix (transformless entities inherit
their parent's).
"""
from __future__ import annotations

import numpy as np

from . import geometry, math3d
from .components import ShaderParams, VertexArray
from .core import ComponentKind, Entity, Visitor, World, traverse_dfs
from .errors import MultipleCameras, NoCamera
from .softrender import DrawStats, Framebuffer, draw_triangles

_IDENTITY = np.eye(4)
_IDENTITY.flags.writeable = False


class TransformSystem(Visitor):
    """Local-to-world matrices for every reachable entity.

    ``l2w(e) = l2w(parent(e)) @ L(e)``: the entity's own local matrix is the
    right-most factor, so it is applied to geometry first.

    The pre-order visit only discovers the hierarchy; it reruns when the
    structure changes. Each frame then reads the current local matrices and
    multiplies them one depth level at a time, in batch.
    """

    def update(self, world: World) -> dict[int, np.ndarray]:
        order, comps, slots, levels = world.cached("transform_plan", lambda: self._plan(world))
        n = len(order)
        local = np.empty((n, 4, 4))
        local[:] = _IDENTITY
        if slots:
            local[slots] = [c.trs for c in comps]
        glob = np.empty_like(local)
        for depth, (idx, parents) in enumerate(levels):
            if depth == 0:
                glob[idx] = local[idx]
            else:
                glob[idx] = glob[parents] @ local[idx]
        for c, k in zip(comps, slots):
            c.l2w = glob[k]
        world.l2w = dict(zip(order, glob))
        self.l2w = world.l2w
        return world.l2w

    def _plan(self, world: World):
        self._order: list[int] = []
        self._comps: list = []
        self._slots: list[int] = []
        self._depth: dict[int, int] = {}
        traverse_dfs(world, self)
        index = {e: k for k, e in enumerate(self._order)}
        by_depth: dict[int, list[int]] = {}
        for e in self._order:
            by_depth.setdefault(self._depth[e], []).append(e)
        levels = []
        for d in sorted(by_depth):
            ents = by_depth[d]
            idx = np.array([index[e] for e in ents], dtype=np.intp)
            parents = np.array([index.get(world.entity(e).parent, -1) for e in ents], dtype=np.intp)
            levels.append((idx, parents))
        return self._order, self._comps, self._slots, levels

    def visit_entity(self, world, entity: Entity) -> None:
        self._order.append(entity.id)
        self._depth[entity.id] = self._depth[entity.parent] + 1 if entity.parent in self._depth else 0

    def visit_basic_transform(self, world, entity, component) -> None:
        self._comps.append(component)
        self._slots.append(len(self._order) - 1)


class CameraSystem(Visitor):
    """Finds the single camera, sets ``root2cam = inverse(l2w(camera))`` and
    caches ``l2cam = projection @ root2cam @ l2w`` on every transform."""

    def update(self, world: World) -> np.ndarray:
        l2w = world.l2w or TransformSystem().update(world)
        cameras, transforms = world.cached("camera_plan", lambda: self._plan(world))
        if not cameras:
            raise NoCamera("scene has no Camera component")
        if len(cameras) > 1:
            names = ", ".join(world.entity(e).name for e, _ in cameras)
            raise MultipleCameras(f"scene has {len(cameras)} cameras: {names}")
        eid, cam = cameras[0]
        cam.root2cam = math3d.invert(l2w[eid])
        world.camera_entity = eid
        world.view_pos = l2w[eid][:3, 3].copy()
        if transforms:
            pv = cam.projection @ cam.root2cam
            stacked = pv @ np.stack([l2w[e] for e, _ in transforms])
            for (e, comp), m in zip(transforms, stacked):
                comp.l2cam = m
        return cam.root2cam

    def _plan(self, world: World):
        self.cameras: list[tuple[int, object]] = []
        self.transforms: list[tuple[int, object]] = []
        traverse_dfs(world, self)
        return self.cameras, self.transforms

    def visit_camera(self, world, entity, component) -> None:
        self.cameras.append((entity.id, component))

    def visit_basic_transform(self, world, entity, component) -> None:
        self.transforms.append((entity.id, component))


class InitRenderSystem(Visitor):
    """Packs every dirty RenderMesh into its paired VertexArray.

    Meshes and vertex arrays on one entity pair up by attachment slot; missing
    vertex arrays are created. Normals are generated (area weighted) when the
    mesh has none.
    """

    def update(self, world: World) -> int:
        self.pending: list[tuple[int, int, object]] = []
        self.slot: dict[int, int] = {}
        traverse_dfs(world, self)
        rebuilt = 0
        for eid, slot, mesh in self.pending:
            arrays = world.get_components(eid, ComponentKind.VERTEX_ARRAY)
            while len(arrays) <= slot:
                world.add_component(eid, VertexArray())
                arrays = world.get_components(eid, ComponentKind.VERTEX_ARRAY)
            pack_vertex_array(mesh, arrays[slot])
            mesh.dirty = False
            rebuilt += 1
        return rebuilt

    def visit_render_mesh(self, world, entity, component) -> None:
        slot = self.slot.get(entity.id, 0)
        self.slot[entity.id] = slot + 1
        arrays = world._stores[ComponentKind.VERTEX_ARRAY].get(entity.id, ())
        if component.dirty or slot >= len(arrays):
            self.pending.append((entity.id, slot, component))


def pack_vertex_array(mesh, vao: VertexArray) -> VertexArray:
    positions = mesh.positions()
    idx = geometry.validate_mesh(positions, mesh.indices)
    normals = getattr(mesh, "skinned_normals", None)
    if normals is None:
        normals = mesh.normals if mesh.normals is not None else geometry.vertex_normals(positions, idx)
    if normals.shape != positions.shape:
        raise geometry.MalformedMesh("normal count does not match vertex count")
    data = np.empty((len(positions), VertexArray.STRIDE), dtype=np.float32)
    data[:, 0:3] = positions
    data[:, 3:6] = normals
    if mesh.colors is None:
        data[:, 6:9] = 1.0
    else:
        data[:, 6:9] = np.broadcast_to(mesh.colors, (len(positions), 3))
    vao.data = data
    vao.indices = idx.astype(np.uint32)
    vao.builds += 1
    return vao


class RenderSystem(Visitor):
    """Draws every entity holding both a VertexArray and ShaderParams, in traversal order."""

    def update(self, world: World, fb: Framebuffer) -> list[DrawStats]:
        l2w = world.l2w
        cam_eid = world.camera_entity
        if cam_eid is None:
            raise NoCamera("camera system has not run")
        cam = world.get_component(cam_eid, ComponentKind.CAMERA)
        self.view_proj = cam.projection @ cam.root2cam
        self.view_pos = world.view_pos
        self.stats: list[DrawStats] = []
        self.l2w = l2w
        self.fb = fb
        traverse_dfs(world, self)
        return self.stats

    def visit_entity(self, world, entity) -> None:
        stores = world._stores
        arrays = stores[ComponentKind.VERTEX_ARRAY].get(entity.id)
        shaders = stores[ComponentKind.SHADER_PARAMS].get(entity.id)
        if not arrays or not shaders:
            return
        model = self.l2w[entity.id]
        mvp = self.view_proj @ model
        for k, vao in enumerate(arrays):
            shader: ShaderParams = shaders[min(k, len(shaders) - 1)]
            shader.mvp = mvp
            shader.model_matrix = model
            shader.view_pos = self.view_pos
            self.stats.append(
                draw_triangles(
                    self.fb, vao.data, vao.indices, mvp, model,
                    shader.material, shader.lights, self.view_pos, shader.model,
                )
            )


def transform_system_update(world: World) -> dict[int, np.ndarray]:
    return TransformSystem().update(world)


def camera_system_update(world: World) -> np.ndarray:
    return CameraSystem().update(world)


def init_render_system(world: World) -> int:
    return InitRenderSystem().update(world)


def render_system_draw(world: World, fb: Framebuffer) -> list[DrawStats]:
    return RenderSystem().update(world, fb)


def render_frame(world: World, fb: Framebuffer, clear_color=(0.0, 0.0, 0.0), t: float | None = None) -> list[DrawStats]:
    """One full frame: (animation) -> init -> transform -> camera -> render."""
    from .animation import animation_system_update
    from .softrender import clear

    if t is not None:
        animation_system_update(world, t)
    init_render_system(world)
    transform_system_update(world)
    camera_system_update(world)
    clear(fb, clear_color)
    return render_system_draw(world, fb)

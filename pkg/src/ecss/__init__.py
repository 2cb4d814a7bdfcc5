"""ECSS: an entity-component-system engine over a scenegraph.

Entities form a single-parent tree owned by a :class:`World`; components are
plain data stored per kind; systems are visitors run as pre-order traversals.
"""
from .components import BasicTransform, Camera, GATransform, RenderMesh, Shader, ShaderParams, SkinnedMesh, VertexArray
from .core import ComponentKind, Event, Visitor, World, traverse_dfs
from .softrender import Framebuffer, Light, Material
from .systems import (
    CameraSystem,
    InitRenderSystem,
    RenderSystem,
    TransformSystem,
    render_frame,
)

__version__ = "0.1.0"

__all__ = [
    "BasicTransform", "Camera", "GATransform", "RenderMesh", "Shader", "ShaderParams", "SkinnedMesh",
    "VertexArray", "ComponentKind", "Event", "Visitor", "World", "traverse_dfs", "Framebuffer", "Light",
    "Material", "CameraSystem", "InitRenderSystem", "RenderSystem", "TransformSystem", "render_frame",
]

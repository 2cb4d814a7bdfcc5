"""Data-only component records.

Each class carries a ``kind`` tag used by the world's columnar storage and by
visitor dispatch. Components hold data and cached results; the systems module
computes everything.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Literal

import numpy as np

from . import cga, math3d
from .core import ComponentKind
from .softrender import Light, Material


@dataclass(eq=False)
class BasicTransform:
    """Local transform relative to the parent entity, plus cached results."""

    kind: ClassVar[ComponentKind] = ComponentKind.BASIC_TRANSFORM

    trs: np.ndarray = field(default_factory=math3d.identity)
    l2w: np.ndarray = field(default_factory=math3d.identity)
    l2cam: np.ndarray = field(default_factory=math3d.identity)

    def __post_init__(self):
        self.trs = np.array(self.trs, dtype=np.float64).reshape(4, 4)

    @classmethod
    def from_trs(cls, translate=(0.0, 0.0, 0.0), rotate=None, scale: float = 1.0) -> "BasicTransform":
        q = math3d.Quaternion.identity() if rotate is None else rotate
        return cls(math3d.compose_trs(translate, q, scale))


@dataclass(eq=False)
class GATransform:
    """Transform given as a CGA motor; wraps a BasicTransform.

    ``trs`` is the matrix equivalent of the motor, so systems written for
    BasicTransform consume it without change.
    """

    kind: ClassVar[ComponentKind] = ComponentKind.GA_TRANSFORM

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    angle: float = 0.0
    dilation: float = 1.0
    base: BasicTransform = field(default_factory=BasicTransform)
    versor: cga.Versor = field(init=False)

    def __post_init__(self):
        self.translation = math3d.vec3(self.translation)
        self.axis = math3d.vec3(self.axis)
        self.refresh()

    def refresh(self) -> None:
        """Rebuild the cached versor and matrix after editing the parameters."""
        self.versor = cga.motor(self.translation, self.axis, self.angle, self.dilation)
        self.base.trs = cga.versor_to_matrix(self.versor)

    @property
    def trs(self) -> np.ndarray:
        return self.base.trs

    @property
    def l2w(self) -> np.ndarray:
        return self.base.l2w

    @l2w.setter
    def l2w(self, value) -> None:
        self.base.l2w = value

    @property
    def l2cam(self) -> np.ndarray:
        return self.base.l2cam

    @l2cam.setter
    def l2cam(self, value) -> None:
        self.base.l2cam = value


@dataclass(eq=False)
class Camera:
    kind: ClassVar[ComponentKind] = ComponentKind.CAMERA

    projection: np.ndarray = field(default_factory=math3d.identity)
    root2cam: np.ndarray = field(default_factory=math3d.identity)

    @classmethod
    def perspective(cls, fovy: float = math.radians(60.0), aspect: float = 1.0, near: float = 0.1, far: float = 100.0):
        return cls(math3d.perspective(fovy, aspect, near, far))

    @classmethod
    def ortho(cls, left=-1.0, right=1.0, bottom=-1.0, top=1.0, near=-1.0, far=1.0):
        return cls(math3d.ortho(left, right, bottom, top, near, far))


@dataclass(eq=False)
class RenderMesh:
    """Triangle mesh: positions, ``(m, 3)`` face indices, optional normals and colors.

    ``colors`` is either one RGB triple or one per vertex. Set ``dirty`` after
    editing so the init system repacks the vertex array.
    """

    kind: ClassVar[ComponentKind] = ComponentKind.RENDER_MESH

    vertices: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    indices: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.int64))
    normals: np.ndarray | None = None
    colors: np.ndarray | None = None
    dirty: bool = True

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim == 1 and idx.size % 3 == 0:
            idx = idx.reshape(-1, 3)
        self.indices = idx
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        if self.colors is not None:
            self.colors = np.asarray(self.colors, dtype=np.float64)

    def positions(self) -> np.ndarray:
        return self.vertices


@dataclass(eq=False)
class SkinnedMesh(RenderMesh):
    """RenderMesh with up to four joint influences per vertex, a skeleton and a keyframe track.

    The rest data in ``vertices``/``normals`` is never modified; the animation
    system writes the deformed copies to ``skinned_vertices``/``skinned_normals``.
    """

    kind: ClassVar[ComponentKind] = ComponentKind.SKINNED_MESH

    joint_indices: np.ndarray = field(default_factory=lambda: np.zeros((0, 4), dtype=np.int64))
    joint_weights: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    joints: list = field(default_factory=list)
    keyframes: list = field(default_factory=list)
    loop: bool = False
    skinned_vertices: np.ndarray | None = None
    skinned_normals: np.ndarray | None = None

    def __post_init__(self):
        super().__post_init__()
        self.joint_indices = np.asarray(self.joint_indices, dtype=np.int64).reshape(-1, 4)
        self.joint_weights = np.asarray(self.joint_weights, dtype=np.float64).reshape(-1, 4)

    def positions(self) -> np.ndarray:
        return self.vertices if self.skinned_vertices is None else self.skinned_vertices


@dataclass(eq=False)
class VertexArray:
    """Packed interleaved float32 buffer ``[px py pz nx ny nz r g b]`` and uint32 indices."""

    kind: ClassVar[ComponentKind] = ComponentKind.VERTEX_ARRAY

    STRIDE: ClassVar[int] = 9

    data: np.ndarray = field(default_factory=lambda: np.zeros((0, 9), dtype=np.float32))
    indices: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.uint32))
    builds: int = 0

    @property
    def vertex_count(self) -> int:
        return len(self.data)


ShadingModel = Literal["flat", "blinn_phong"]


@dataclass(eq=False)
class ShaderParams:
    """Shading model, material and per-draw uniform values."""

    kind: ClassVar[ComponentKind] = ComponentKind.SHADER_PARAMS

    model: ShadingModel = "blinn_phong"
    material: Material = field(default_factory=Material)
    lights: list[Light] = field(default_factory=list)
    mvp: np.ndarray = field(default_factory=math3d.identity)
    model_matrix: np.ndarray = field(default_factory=math3d.identity)
    view_pos: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.model not in ("flat", "blinn_phong"):
            raise ValueError(f"unknown shading model {self.model!r}")


# Listing-style alias
Shader = ShaderParams

"""Keyframe sampling and linear blend skinning.

Skinning uses ``v' = sum_j w_j * G_j @ B_j^-1 @ v`` where ``G_j`` is a joint's
global pose and ``B_j^-1`` its inverse bind matrix.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import geometry, math3d
from .core import ComponentKind, World
from .errors import EmptyTrack, InvalidInfluence, UnnormalizedWeights
from .math3d import Quaternion


@dataclass(frozen=True)
class Pose:
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rotation: Quaternion = Quaternion(1.0, 0.0, 0.0, 0.0)
    scale: float = 1.0

    def matrix(self) -> np.ndarray:
        return math3d.compose_trs(self.translation, self.rotation, self.scale)


@dataclass
class Joint:
    id: int
    parent: int | None
    local_bind: np.ndarray
    inverse_bind: np.ndarray | None = None
    name: str = ""


@dataclass
class Keyframe:
    time: float
    poses: list[Pose] = field(default_factory=list)


def bind_globals(joints: Sequence[Joint]) -> list[np.ndarray]:
    return _accumulate(joints, [j.local_bind for j in joints])


def fill_inverse_binds(joints: Sequence[Joint]) -> None:
    """Set each missing ``inverse_bind`` to the inverse of the bind-pose global."""
    for j, g in zip(joints, bind_globals(joints)):
        if j.inverse_bind is None:
            j.inverse_bind = math3d.invert(g)


def validate_joints(joints: Sequence[Joint]) -> None:
    for k, j in enumerate(joints):
        if j.id != k:
            raise InvalidInfluence(f"joint {k} has id {j.id}")
        if j.parent is not None and not 0 <= j.parent < k:
            raise InvalidInfluence(f"joint {k} parent {j.parent} is not an earlier joint")


def validate_track(keyframes: Sequence[Keyframe]) -> None:
    if not keyframes:
        raise EmptyTrack("keyframe track is empty")
    times = [k.time for k in keyframes]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("keyframe times must be strictly increasing")


def sample_pose(keyframes: Sequence[Keyframe], t: float) -> list[Pose]:
    """Local joint poses at time ``t``; clamps outside the track."""
    if not keyframes:
        raise EmptyTrack("keyframe track is empty")
    if t <= keyframes[0].time:
        return list(keyframes[0].poses)
    if t >= keyframes[-1].time:
        return list(keyframes[-1].poses)
    k = bisect_right([kf.time for kf in keyframes], t) - 1
    k0, k1 = keyframes[k], keyframes[k + 1]
    u = (t - k0.time) / (k1.time - k0.time)
    out = []
    for a, b in zip(k0.poses, k1.poses):
        ta = np.asarray(a.translation, dtype=np.float64)
        tb = np.asarray(b.translation, dtype=np.float64)
        out.append(
            Pose(
                tuple(ta + u * (tb - ta)),
                math3d.quat_slerp(a.rotation, b.rotation, u),
                a.scale + u * (b.scale - a.scale),
            )
        )
    return out


def _accumulate(joints: Sequence[Joint], locals_: Sequence[np.ndarray]) -> list[np.ndarray]:
    globals_: list[np.ndarray] = []
    for j, local in zip(joints, locals_):
        parent = np.eye(4) if j.parent is None else globals_[j.parent]
        globals_.append(parent @ local)
    return globals_


def joint_globals(joints: Sequence[Joint], poses: Sequence) -> list[np.ndarray]:
    """``G_j = G_parent @ L_j``; poses may be Pose records or 4x4 matrices."""
    locals_ = [p.matrix() if isinstance(p, Pose) else np.asarray(p, dtype=np.float64) for p in poses]
    return _accumulate(joints, locals_)


def skinning_matrices(joints: Sequence[Joint], globals_: Sequence[np.ndarray]) -> np.ndarray:
    return np.stack([g @ j.inverse_bind for j, g in zip(joints, globals_)])


def check_influences(joint_indices: np.ndarray, joint_weights: np.ndarray, n_vertices: int, n_joints: int) -> None:
    if joint_indices.shape != (n_vertices, 4) or joint_weights.shape != (n_vertices, 4):
        raise InvalidInfluence("need (n_vertices, 4) joint indices and weights")
    if np.any(joint_weights < 0):
        raise InvalidInfluence("negative skin weight")
    used = joint_weights > 0
    if np.any(used & ((joint_indices < 0) | (joint_indices >= n_joints))):
        raise InvalidInfluence("influence references a joint that does not exist")
    sums = joint_weights.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-4):
        raise UnnormalizedWeights(f"weights must sum to 1 (worst {sums[np.argmax(np.abs(sums - 1))]:.6g})")


def skin_vertices(mesh, globals_: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Deformed positions and normals of a SkinnedMesh; the mesh itself is not modified."""
    verts = np.asarray(mesh.vertices, dtype=np.float64)
    n_joints = len(mesh.joints)
    check_influences(mesh.joint_indices, mesh.joint_weights, len(verts), n_joints)
    skin = skinning_matrices(mesh.joints, globals_)
    idx = np.where(mesh.joint_weights > 0, mesh.joint_indices, 0)
    blended = np.einsum("vk,vkij->vij", mesh.joint_weights, skin[idx])
    out_v = np.einsum("vij,vj->vi", blended[:, :3, :3], verts) + blended[:, :3, 3]
    normals = mesh.normals if mesh.normals is not None else geometry.vertex_normals(verts, mesh.indices)
    out_n = np.einsum("vij,vj->vi", blended[:, :3, :3], normals)
    lens = np.linalg.norm(out_n, axis=1, keepdims=True)
    out_n = np.divide(out_n, lens, out=np.tile((0.0, 0.0, 1.0), (len(out_n), 1)), where=lens > 1e-300)
    return out_v, out_n


def track_time(mesh, t: float) -> float:
    if not mesh.loop or len(mesh.keyframes) < 2:
        return t
    t0, t1 = mesh.keyframes[0].time, mesh.keyframes[-1].time
    return t0 + math.fmod(t - t0, t1 - t0) % (t1 - t0)


def animation_system_update(world: World, t: float) -> int:
    """Pose and skin every SkinnedMesh at time ``t``; returns the number updated."""
    updated = 0
    for eid in world.preorder():
        for mesh in world._stores[ComponentKind.SKINNED_MESH].get(eid, ()):
            if not mesh.keyframes:
                continue
            poses = sample_pose(mesh.keyframes, track_time(mesh, t))
            g = joint_globals(mesh.joints, poses)
            mesh.skinned_vertices, mesh.skinned_normals = skin_vertices(mesh, g)
            mesh.dirty = True
            updated += 1
    return updated

"""Declarative scene files ("elements-scene v1") and skin sidecars ("elements-skin v1").

Scenes are YAML (JSON also parses). Schema::

    format: elements-scene v1
    size: [W, H]                 # optional default render size
    background: [r, g, b]        # optional clear color, default black
    lights: [{position: [x, y, z], color: [r, g, b], intensity: 1.0}, ...]
    defaults: {material: {...}}  # merged under every entity's material
    root: <entity>

    <entity>:
      name: text                 # required
      label: text                # optional, used by the hierarchy graph export
      transform:                 # optional, exactly one of:
        matrix: [[4 numbers] x 4]          # row-major rows of the 4x4 matrix
        trs: {translate: [x,y,z], rotate: {axis: [x,y,z], angle_deg: a} | [w,x,y,z], scale: s}
        motor: {translate: [x,y,z], axis: [x,y,z], angle_deg: a, dilation: d}
      camera:
        projection: {type: perspective, fovy_deg, aspect (number|auto), near, far}
                  | {type: ortho, left, right, bottom, top, near, far}
        lookat: {eye, target, up}          # sets the entity transform; excludes `transform`
      mesh: {primitive: cube|quad|sphere|teapot, size, rings, segments, radius, color}
          | {obj: path, color}
      material: {model: blinn_phong|flat, ambient, diffuse, specular, shininess, color}
      skin: path | {inline skin document}  # requires mesh
      children: [<entity>, ...]

Entities with a mesh receive, in this order: transform, ShaderParams,
VertexArray, RenderMesh (or SkinnedMesh).
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .. import geometry, math3d
from ..animation import Joint, Keyframe, Pose, fill_inverse_binds, validate_joints, validate_track
from ..components import BasicTransform, Camera, GATransform, RenderMesh, ShaderParams, SkinnedMesh, VertexArray
from ..core import World
from ..errors import ElementsError, ParseError, ValidationError
from ..softrender import Light, Material
from .obj import load_obj

SCENE_FORMAT = "elements-scene v1"
SKIN_FORMAT = "elements-skin v1"
DATA_DIR = Path(__file__).resolve().parent.parent / "data"

_ENTITY_KEYS = {"name", "label", "transform", "camera", "mesh", "material", "skin", "children"}
_SCENE_KEYS = {"format", "name", "size", "background", "lights", "defaults", "root"}


class _Map(dict):
    line: int | None = None


class _LineLoader(yaml.SafeLoader):
    def construct_mapping(self, node, deep=False):
        m = _Map(super().construct_mapping(node, deep=deep))
        m.line = node.start_mark.line + 1
        return m


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _LineLoader.construct_mapping)


def parse_yaml(text: str, path=None) -> Any:
    try:
        return yaml.load(text, Loader=_LineLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ParseError(exc.problem or str(exc), path, mark.line + 1 if mark else None,
                         mark.column + 1 if mark else None) from None
    except yaml.YAMLError as exc:
        raise ParseError(str(exc), path) from None


@dataclass
class SceneInfo:
    """Scene-level data the World itself does not model."""

    path: Path | None = None
    sha256: str = ""
    name: str = "scene"
    size: tuple[int, int] = (256, 256)
    background: tuple[float, float, float] = (0.0, 0.0, 0.0)
    lights: list[Light] = field(default_factory=list)
    labels: dict[int, str] = field(default_factory=dict)


class _Ctx:
    def __init__(self, base_dir: Path, path, aspect):
        self.base_dir = base_dir
        self.path = path
        self.aspect = aspect
        self.cameras: list[str] = []

    def fail(self, where: str, msg: str, node=None):
        line = getattr(node, "line", None)
        loc = f"{self.path}:{line}: " if (self.path and line) else (f"{self.path}: " if self.path else "")
        raise ValidationError(f"{loc}{where}: {msg}")


def _vec(ctx, where, value, n=3, node=None) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError):
        ctx.fail(where, f"expected {n} numbers", node)
    if v.shape != (n,) or not np.all(np.isfinite(v)):
        ctx.fail(where, f"expected {n} finite numbers, got {value!r}", node)
    return v


def _num(ctx, where, value, node=None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        ctx.fail(where, f"expected a number, got {value!r}", node)
    return float(value)


def _mapping(ctx, where, value, node=None) -> dict:
    if not isinstance(value, dict):
        ctx.fail(where, "expected a mapping", node)
    return value


def _check_keys(ctx, where, spec: dict, allowed: set[str]):
    extra = set(spec) - allowed
    if extra:
        ctx.fail(where, f"unknown key(s) {sorted(extra)}; allowed {sorted(allowed)}", spec)


def _rotation(ctx, where, spec) -> math3d.Quaternion:
    if spec is None:
        return math3d.Quaternion.identity()
    if isinstance(spec, dict):
        _check_keys(ctx, where, spec, {"axis", "angle_deg"})
        axis = _vec(ctx, f"{where}.axis", spec.get("axis", (0, 0, 1)), node=spec)
        angle = math.radians(_num(ctx, f"{where}.angle_deg", spec.get("angle_deg", 0.0), spec))
        try:
            return math3d.quat_from_axis_angle(axis, angle)
        except ElementsError as exc:
            ctx.fail(where, str(exc), spec)
    q = _vec(ctx, where, spec, 4)
    if abs(np.linalg.norm(q) - 1.0) > 1e-6:
        ctx.fail(where, "quaternion must be unit length")
    return math3d.Quaternion(*q)


def _transform(ctx, where, spec):
    spec = _mapping(ctx, where, spec)
    forms = [k for k in ("matrix", "trs", "motor") if k in spec]
    _check_keys(ctx, where, spec, {"matrix", "trs", "motor"})
    if len(forms) != 1:
        ctx.fail(where, f"exactly one of matrix/trs/motor required, got {forms or 'none'}", spec)
    form = forms[0]
    body = spec[form]
    if form == "matrix":
        try:
            m = np.asarray(body, dtype=np.float64)
        except (TypeError, ValueError):
            m = None
        if m is None or m.shape != (4, 4) or not np.all(np.isfinite(m)):
            ctx.fail(f"{where}.matrix", "expected 4 rows of 4 numbers", spec)
        return BasicTransform(m)
    body = _mapping(ctx, f"{where}.{form}", body, spec)
    if form == "trs":
        _check_keys(ctx, f"{where}.trs", body, {"translate", "rotate", "scale"})
        t = _vec(ctx, f"{where}.trs.translate", body.get("translate", (0, 0, 0)), node=body)
        q = _rotation(ctx, f"{where}.trs.rotate", body.get("rotate"))
        s = _num(ctx, f"{where}.trs.scale", body.get("scale", 1.0), body)
        if s <= 0:
            ctx.fail(f"{where}.trs.scale", "must be positive", body)
        return BasicTransform(math3d.compose_trs(t, q, s))
    _check_keys(ctx, f"{where}.motor", body, {"translate", "axis", "angle_deg", "dilation"})
    t = _vec(ctx, f"{where}.motor.translate", body.get("translate", (0, 0, 0)), node=body)
    axis = _vec(ctx, f"{where}.motor.axis", body.get("axis", (0, 0, 1)), node=body)
    angle = math.radians(_num(ctx, f"{where}.motor.angle_deg", body.get("angle_deg", 0.0), body))
    d = _num(ctx, f"{where}.motor.dilation", body.get("dilation", 1.0), body)
    try:
        return GATransform(t, axis, angle, d)
    except ElementsError as exc:
        ctx.fail(f"{where}.motor", str(exc), body)


def _camera(ctx, where, spec):
    spec = _mapping(ctx, where, spec)
    _check_keys(ctx, where, spec, {"projection", "lookat"})
    proj = _mapping(ctx, f"{where}.projection", spec.get("projection", {"type": "perspective"}), spec)
    kind = proj.get("type", "perspective")
    try:
        if kind == "perspective":
            _check_keys(ctx, f"{where}.projection", proj, {"type", "fovy_deg", "aspect", "near", "far"})
            aspect = proj.get("aspect", "auto")
            if aspect == "auto":
                aspect = ctx.aspect or 1.0
            cam = Camera.perspective(
                math.radians(_num(ctx, f"{where}.projection.fovy_deg", proj.get("fovy_deg", 60.0), proj)),
                _num(ctx, f"{where}.projection.aspect", aspect, proj),
                _num(ctx, f"{where}.projection.near", proj.get("near", 0.1), proj),
                _num(ctx, f"{where}.projection.far", proj.get("far", 100.0), proj),
            )
        elif kind == "ortho":
            keys = ("left", "right", "bottom", "top", "near", "far")
            _check_keys(ctx, f"{where}.projection", proj, {"type", *keys})
            defaults = (-1.0, 1.0, -1.0, 1.0, -1.0, 1.0)
            cam = Camera.ortho(*(_num(ctx, f"{where}.projection.{k}", proj.get(k, d), proj) for k, d in zip(keys, defaults)))
        else:
            ctx.fail(f"{where}.projection.type", f"unknown projection {kind!r}", proj)
    except ElementsError as exc:
        if isinstance(exc, ValidationError):
            raise
        ctx.fail(f"{where}.projection", str(exc), proj)
    pose = None
    if "lookat" in spec:
        la = _mapping(ctx, f"{where}.lookat", spec["lookat"], spec)
        _check_keys(ctx, f"{where}.lookat", la, {"eye", "target", "up"})
        try:
            view = math3d.lookat(
                _vec(ctx, f"{where}.lookat.eye", la.get("eye"), node=la),
                _vec(ctx, f"{where}.lookat.target", la.get("target", (0, 0, 0)), node=la),
                _vec(ctx, f"{where}.lookat.up", la.get("up", (0, 1, 0)), node=la),
            )
        except ElementsError as exc:
            ctx.fail(f"{where}.lookat", str(exc), la)
        pose = BasicTransform(math3d.invert(view))
    return cam, pose


def _material(ctx, where, defaults: dict, spec) -> tuple[str, Material]:
    merged = dict(defaults)
    if spec is not None:
        merged.update(_mapping(ctx, where, spec))
    _check_keys(ctx, where, merged, {"model", "ambient", "diffuse", "specular", "shininess", "color"})
    model = merged.pop("model", "blinn_phong")
    if model not in ("flat", "blinn_phong"):
        ctx.fail(f"{where}.model", f"unknown shading model {model!r}", spec)
    kwargs = {}
    for k in ("ambient", "diffuse", "specular", "shininess"):
        if k in merged:
            kwargs[k] = _num(ctx, f"{where}.{k}", merged[k], spec)
    if "color" in merged:
        kwargs["color"] = _vec(ctx, f"{where}.color", merged["color"], node=spec)
    try:
        return model, Material(**kwargs)
    except ValueError as exc:
        ctx.fail(where, str(exc), spec)


def _mesh(ctx, where, spec) -> tuple[np.ndarray, np.ndarray, np.ndarray | None, np.ndarray | None]:
    spec = _mapping(ctx, where, spec)
    color = _vec(ctx, f"{where}.color", spec["color"], node=spec) if "color" in spec else None
    if "obj" in spec:
        _check_keys(ctx, where, spec, {"obj", "color"})
        path = ctx.base_dir / str(spec["obj"])
        if not path.is_file():
            ctx.fail(f"{where}.obj", f"file not found: {path}", spec)
        v, f, n = load_obj(path).render_arrays()
        return v, f, n, color
    prim = spec.get("primitive")
    _check_keys(ctx, where, spec, {"primitive", "size", "rings", "segments", "radius", "color"})
    if prim == "cube":
        v, f = geometry.cube(_num(ctx, f"{where}.size", spec.get("size", 1.0), spec))
    elif prim == "quad":
        v, f = geometry.quad(_num(ctx, f"{where}.size", spec.get("size", 1.0), spec))
    elif prim == "sphere":
        try:
            v, f = geometry.uv_sphere(int(spec.get("rings", 12)), int(spec.get("segments", 24)),
                                      _num(ctx, f"{where}.radius", spec.get("radius", 1.0), spec))
        except ValueError as exc:
            ctx.fail(where, str(exc), spec)
    elif prim == "teapot":
        v, f, n = load_obj(DATA_DIR / "teapot.obj").render_arrays()
        return v, f, n, color
    else:
        ctx.fail(f"{where}.primitive", f"unknown primitive {prim!r} (cube, quad, sphere, teapot) or give obj", spec)
    return v, f, None, color


def _pose(ctx, where, spec) -> Pose:
    spec = _mapping(ctx, where, spec or {})
    _check_keys(ctx, where, spec, {"translate", "rotate", "scale"})
    t = _vec(ctx, f"{where}.translate", spec.get("translate", (0, 0, 0)), node=spec)
    q = _rotation(ctx, f"{where}.rotate", spec.get("rotate"))
    s = _num(ctx, f"{where}.scale", spec.get("scale", 1.0), spec)
    if s <= 0:
        ctx.fail(f"{where}.scale", "must be positive", spec)
    return Pose(tuple(t), q, s)


def parse_skin(doc, n_vertices: int, ctx: _Ctx, where: str = "skin") -> dict:
    """Validate a skin document; returns SkinnedMesh keyword arguments.

    Layout::

        format: elements-skin v1
        joints:     [{name, parent: index|null, bind: <pose>}, ...]   # parents first
        influences: [[[joint, weight], ...up to 4], ...]              # one entry per vertex
        keyframes:  [{time, poses: [<pose> per joint]}, ...]
        loop: false
    """
    doc = _mapping(ctx, where, doc)
    _check_keys(ctx, where, doc, {"format", "joints", "influences", "keyframes", "loop"})
    if doc.get("format") != SKIN_FORMAT:
        ctx.fail(f"{where}.format", f"expected {SKIN_FORMAT!r}", doc)
    joints = []
    for k, js in enumerate(doc.get("joints") or []):
        js = _mapping(ctx, f"{where}.joints[{k}]", js, doc)
        _check_keys(ctx, f"{where}.joints[{k}]", js, {"name", "parent", "bind"})
        parent = js.get("parent")
        pose = _pose(ctx, f"{where}.joints[{k}].bind", js.get("bind"))
        joints.append(Joint(k, parent, pose.matrix(), name=str(js.get("name", f"joint{k}"))))
    if not joints:
        ctx.fail(f"{where}.joints", "at least one joint required", doc)
    try:
        validate_joints(joints)
    except ElementsError as exc:
        ctx.fail(f"{where}.joints", str(exc), doc)
    fill_inverse_binds(joints)
    infl = doc.get("influences") or []
    if len(infl) != n_vertices:
        ctx.fail(f"{where}.influences", f"{len(infl)} entries for {n_vertices} vertices", doc)
    idx = np.zeros((n_vertices, 4), dtype=np.int64)
    w = np.zeros((n_vertices, 4))
    for v, pairs in enumerate(infl):
        if not isinstance(pairs, list) or not 1 <= len(pairs) <= 4:
            ctx.fail(f"{where}.influences[{v}]", "expected 1-4 [joint, weight] pairs", doc)
        for s, pair in enumerate(pairs):
            if not isinstance(pair, list) or len(pair) != 2:
                ctx.fail(f"{where}.influences[{v}]", "expected [joint, weight]", doc)
            j, wt = pair
            if not isinstance(j, int) or not 0 <= j < len(joints):
                ctx.fail(f"{where}.influences[{v}]", f"unknown joint {j!r}", doc)
            idx[v, s] = j
            w[v, s] = _num(ctx, f"{where}.influences[{v}]", wt, doc)
    if np.any(w < 0) or np.any(np.abs(w.sum(axis=1) - 1.0) > 1e-6):
        ctx.fail(f"{where}.influences", "weights must be non-negative and sum to 1 per vertex", doc)
    keyframes = []
    for k, kf in enumerate(doc.get("keyframes") or []):
        kf = _mapping(ctx, f"{where}.keyframes[{k}]", kf, doc)
        _check_keys(ctx, f"{where}.keyframes[{k}]", kf, {"time", "poses"})
        poses = [_pose(ctx, f"{where}.keyframes[{k}].poses[{p}]", ps) for p, ps in enumerate(kf.get("poses") or [])]
        if len(poses) != len(joints):
            ctx.fail(f"{where}.keyframes[{k}]", f"{len(poses)} poses for {len(joints)} joints", kf)
        keyframes.append(Keyframe(_num(ctx, f"{where}.keyframes[{k}].time", kf.get("time"), kf), poses))
    if keyframes:
        try:
            validate_track(keyframes)
        except ValueError as exc:
            ctx.fail(f"{where}.keyframes", str(exc), doc)
    return dict(joint_indices=idx, joint_weights=w, joints=joints, keyframes=keyframes, loop=bool(doc.get("loop", False)))


def _build_entity(ctx: _Ctx, world: World, info: SceneInfo, spec, where: str, parent: int | None, defaults: dict):
    spec = _mapping(ctx, where, spec)
    _check_keys(ctx, where, spec, _ENTITY_KEYS)
    if "name" not in spec:
        ctx.fail(where, "entity needs a name", spec)
    name = str(spec["name"])
    where = f"{where}({name})"
    eid = world.create_entity(name)
    if parent is not None:
        world.add_entity_child(parent, eid)
    if "label" in spec:
        info.labels[eid] = str(spec["label"])

    transform = _transform(ctx, f"{where}.transform", spec["transform"]) if "transform" in spec else None
    camera = None
    if "camera" in spec:
        camera, pose = _camera(ctx, f"{where}.camera", spec["camera"])
        if pose is not None:
            if transform is not None:
                ctx.fail(f"{where}.camera.lookat", "conflicts with the entity's transform", spec)
            transform = pose
        ctx.cameras.append(name)
    if "skin" in spec and "mesh" not in spec:
        ctx.fail(f"{where}.skin", "skin requires a mesh", spec)

    if transform is not None:
        world.add_component(eid, transform)
    if camera is not None:
        world.add_component(eid, camera)
    if "mesh" in spec:
        v, f, n, color = _mesh(ctx, f"{where}.mesh", spec["mesh"])
        model, material = _material(ctx, f"{where}.material", defaults, spec.get("material"))
        world.add_component(eid, ShaderParams(model, material, info.lights))
        world.add_component(eid, VertexArray())
        if "skin" in spec:
            skin = spec["skin"]
            if isinstance(skin, str):
                skin_path = ctx.base_dir / skin
                if not skin_path.is_file():
                    ctx.fail(f"{where}.skin", f"file not found: {skin_path}", spec)
                skin = parse_yaml(skin_path.read_text(encoding="utf-8"), skin_path)
            kwargs = parse_skin(skin, len(v), ctx, f"{where}.skin")
            mesh = SkinnedMesh(v, f, n, color, **kwargs)
        else:
            mesh = RenderMesh(v, f, n, color)
        try:
            geometry.validate_mesh(mesh.vertices, mesh.indices)
        except ElementsError as exc:
            ctx.fail(f"{where}.mesh", str(exc), spec)
        world.add_component(eid, mesh)
    elif "material" in spec:
        ctx.fail(f"{where}.material", "material without a mesh", spec)

    children = spec.get("children") or []
    if not isinstance(children, list):
        ctx.fail(f"{where}.children", "expected a list", spec)
    for k, child in enumerate(children):
        _build_entity(ctx, world, info, child, f"{where}.children[{k}]", eid, defaults)
    return eid


def build_world(doc, path=None, base_dir=None, aspect: float | None = None, require_camera: bool = True) -> World:
    """Build a World from a parsed scene document (see module docstring)."""
    base_dir = Path(base_dir) if base_dir is not None else (Path(path).parent if path else Path.cwd())
    ctx = _Ctx(base_dir, path, aspect)
    doc = _mapping(ctx, "scene", doc)
    _check_keys(ctx, "scene", doc, _SCENE_KEYS)
    if doc.get("format") != SCENE_FORMAT:
        ctx.fail("format", f"expected {SCENE_FORMAT!r}, got {doc.get('format')!r}", doc)
    info = SceneInfo(path=Path(path) if path else None, name=str(doc.get("name", "scene")))
    if "size" in doc:
        size = doc["size"]
        if not (isinstance(size, list) and len(size) == 2 and all(isinstance(x, int) and x > 0 for x in size)):
            ctx.fail("size", "expected [width, height] positive integers", doc)
        info.size = (size[0], size[1])
    if "background" in doc:
        info.background = tuple(_vec(ctx, "background", doc["background"], node=doc))
    for k, ls in enumerate(doc.get("lights") or []):
        ls = _mapping(ctx, f"lights[{k}]", ls, doc)
        _check_keys(ctx, f"lights[{k}]", ls, {"position", "color", "intensity"})
        try:
            info.lights.append(Light(
                _vec(ctx, f"lights[{k}].position", ls.get("position"), node=ls),
                _vec(ctx, f"lights[{k}].color", ls.get("color", (1, 1, 1)), node=ls),
                _num(ctx, f"lights[{k}].intensity", ls.get("intensity", 1.0), ls),
            ))
        except ValueError as exc:
            ctx.fail(f"lights[{k}]", str(exc), ls)
    defaults = _mapping(ctx, "defaults", doc.get("defaults") or {}, doc)
    _check_keys(ctx, "defaults", defaults, {"material"})
    mat_defaults = _mapping(ctx, "defaults.material", defaults.get("material") or {}, defaults)
    if "root" not in doc:
        ctx.fail("root", "scene needs a root entity", doc)
    world = World(info.name)
    if aspect is None and "size" in doc:
        ctx.aspect = info.size[0] / info.size[1]
    _build_entity(ctx, world, info, doc["root"], "root", None, mat_defaults)
    if len(ctx.cameras) > 1:
        ctx.fail("camera", f"exactly one camera allowed, found {len(ctx.cameras)}: {', '.join(ctx.cameras)}")
    if require_camera and not ctx.cameras:
        ctx.fail("camera", "exactly one camera required, found none")
    world.scene = info
    return world


def load_scene(path, aspect: float | None = None, require_camera: bool = True) -> World:
    path = Path(path)
    raw = path.read_bytes()
    doc = parse_yaml(raw.decode("utf-8"), path)
    world = build_world(doc, path=path, aspect=aspect, require_camera=require_camera)
    world.scene.sha256 = hashlib.sha256(raw).hexdigest()
    return world

"""``ecss`` command line: render, bench, export-graph, inspect.

Exit codes: 0 success, 1 runtime error, 2 invalid input (scene parse or
validation failure, bad flags).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .. import graphx
from ..core import ComponentKind, World
from ..errors import ElementsError, SceneError
from ..softrender import Framebuffer, write_image
from ..systems import render_frame, transform_system_update
from .bench import run_bench
from .scene import load_scene

log = logging.getLogger("ecss")

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2

# names shown by ``inspect``; ShaderParams keeps the short Listing name
KIND_NAMES = {
    ComponentKind.BASIC_TRANSFORM: "BasicTransform",
    ComponentKind.GA_TRANSFORM: "GATransform",
    ComponentKind.CAMERA: "Camera",
    ComponentKind.RENDER_MESH: "RenderMesh",
    ComponentKind.SKINNED_MESH: "SkinnedMesh",
    ComponentKind.VERTEX_ARRAY: "VertexArray",
    ComponentKind.SHADER_PARAMS: "Shader",
}


def _size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"size must be positive, got {text!r}")
    return w, h


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text!r}")
    return v


def _fmt(x: float) -> str:
    s = f"{x:.6g}"
    return "0" if s == "-0" else s


def format_matrix(m: np.ndarray) -> str:
    return "[" + "; ".join(" ".join(_fmt(v) for v in row) for row in np.asarray(m)) + "]"


def inspect_text(world: World) -> str:
    """Pre-order dump: ``<indent><name> #<id> [<Kinds>] l2w=[row; row; row; row]``."""
    l2w = transform_system_update(world)
    depth: dict[int, int] = {}
    lines = []
    for eid in world.preorder():
        ent = world.entity(eid)
        depth[eid] = depth[ent.parent] + 1 if ent.parent in depth else 0
        kinds = ", ".join(KIND_NAMES[k.kind] for k in ent.components)
        lines.append(f"{'  ' * depth[eid]}{ent.name} #{eid} [{kinds}] l2w={format_matrix(l2w[eid])}")
    return "\n".join(lines) + "\n"


def _mesh_entity(world: World, name: str | None) -> tuple[int, object]:
    for eid in world.preorder():
        if name is not None and world.entity(eid).name != name:
            continue
        for kind in (ComponentKind.RENDER_MESH, ComponentKind.SKINNED_MESH):
            mesh = world.get_component(eid, kind)
            if mesh is not None:
                return eid, mesh
    target = f"entity {name!r} with a mesh" if name else "any mesh"
    raise SceneError(f"scene has no {target}")


def cmd_render(args) -> int:
    aspect = args.size[0] / args.size[1] if args.size else None
    world = load_scene(args.scene, aspect=aspect)
    w, h = args.size or world.scene.size
    fb = Framebuffer(w, h)
    stats = render_frame(world, fb, world.scene.background, args.time)
    write_image(fb, args.out)
    log.info("rendered %d draws, %d fragments to %s", len(stats), sum(s.fragments for s in stats), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    report = run_bench(args.objects, args.verts_per_object, args.frames, args.raster == "on", args.size, args.seed)
    sys.stdout.write(report.text())
    return EXIT_OK


def cmd_export_graph(args) -> int:
    world = load_scene(args.scene, require_camera=False)
    transform_system_update(world)
    info = world.scene
    meta = {"source": Path(args.scene).name, "scene_sha256": info.sha256}
    if args.mode == "hierarchy":
        doc = graphx.export_hierarchy_graph(world, info.labels)
        text = graphx.dumps(doc, seed=str(args.seed), **meta)
    else:
        eid, mesh = _mesh_entity(world, args.entity)
        label = args.label or info.labels.get(eid, world.entity(eid).name)
        if args.mode == "mesh":
            doc = graphx.export_mesh_graph(mesh, world.l2w[eid], label)
            text = graphx.dumps(doc, seed=str(args.seed), **meta)
        else:
            doc = graphx.export_point_cloud(mesh, world.l2w[eid], label, args.n, args.seed)
            text = graphx.dumps(doc, **meta)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_inspect(args) -> int:
    world = load_scene(args.scene, require_camera=False)
    sys.stdout.write(inspect_text(world))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ecss", description="Entity-component-system scenegraph engine.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a scene to a PPM image")
    p.add_argument("scene")
    p.add_argument("--out", required=True, help="output .ppm path")
    p.add_argument("--time", type=float, default=0.0, help="animation time in seconds (default 0)")
    p.add_argument("--size", type=_size, default=None, help="WxH, default from the scene or 256x256")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("bench", help="time the pipeline on a synthetic scene")
    p.add_argument("--objects", type=_positive, default=150)
    p.add_argument("--verts-per-object", type=_positive, default=2900)
    p.add_argument("--frames", type=_positive, default=20)
    p.add_argument("--raster", choices=("on", "off"), default="on")
    p.add_argument("--size", type=_size, default=(256, 256))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-graph", help="export a graph or point cloud document")
    p.add_argument("scene")
    p.add_argument("--mode", choices=("mesh", "hierarchy", "pointcloud"), required=True)
    p.add_argument("--out", default=None, help="output path, default stdout")
    p.add_argument("--label", default=None, help="node/cloud label, default the entity label or name")
    p.add_argument("--entity", default=None, help="mesh entity name, default the first mesh in traversal order")
    p.add_argument("--n", type=_positive, default=1024, help="point count for pointcloud mode")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_export_graph)

    p = sub.add_parser("inspect", help="print the scenegraph in traversal order")
    p.add_argument("scene")
    p.set_defaults(func=cmd_inspect)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SceneError as exc:
        print(f"ecss: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ElementsError, OSError, ValueError) as exc:
        print(f"ecss: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())

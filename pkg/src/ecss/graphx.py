"""Scenegraph to learning-ready graphs and point clouds.

Three exports:

* mesh graph: one node per vertex (world position features), one undirected
  edge per vertex pair sharing a face;
* hierarchy graph: one node per entity, one directed parent->child edge whose
  features are the child's local ``(tx, ty, tz, qw, qx, qy, qz, s)``;
* point cloud: vertices plus area-weighted surface samples, centered and scaled
  into the unit ball.

Documents serialize to a line-oriented text format (see :func:`dumps`).
"""
from __future__ import annotations

import shlex
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import geometry, math3d
from .core import World
from .errors import MalformedMesh, ParseError

GRAPH_FORMAT = "elements-graph v1"
CLOUD_FORMAT = "elements-pointcloud v1"
PRNG_NAME = "numpy.PCG64"


@dataclass
class Node:
    id: int
    label: str
    features: tuple[float, ...] = ()


@dataclass
class Edge:
    src: int
    dst: int
    features: tuple[float, ...] = ()


@dataclass
class GraphDoc:
    mode: str
    nodes: list[Node] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    directed: bool = False
    metadata: dict[str, str] = field(default_factory=dict)

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {n.id: set() for n in self.nodes}
        for e in self.edges:
            adj[e.src].add(e.dst)
            if not self.directed:
                adj[e.dst].add(e.src)
        return adj

    def connected_components(self) -> int:
        adj = {k: set(v) for k, v in self.adjacency().items()}
        for e in self.edges:
            adj[e.dst].add(e.src)
        seen: set[int] = set()
        count = 0
        for start in adj:
            if start in seen:
                continue
            count += 1
            stack = [start]
            while stack:
                n = stack.pop()
                if n in seen:
                    continue
                seen.add(n)
                stack.extend(adj[n] - seen)
        return count


@dataclass
class PointCloudDoc:
    points: np.ndarray
    label: str
    centroid: np.ndarray
    scale: float
    metadata: dict[str, str] = field(default_factory=dict)


def _world_positions(mesh, l2w) -> np.ndarray:
    return math3d.apply_point(np.asarray(l2w, dtype=np.float64), mesh.positions())


def _mesh_faces(mesh) -> np.ndarray:
    return geometry.validate_mesh(mesh.positions(), mesh.indices)


def unique_edges(faces: np.ndarray) -> np.ndarray:
    """Sorted ``(a, b)`` pairs with ``a < b`` for every face edge, no duplicates."""
    pairs = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    pairs = np.sort(pairs, axis=1)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    return np.unique(pairs, axis=0)


def export_mesh_graph(mesh, l2w=None, label: str = "vertex") -> GraphDoc:
    faces = _mesh_faces(mesh)
    pos = _world_positions(mesh, np.eye(4) if l2w is None else l2w)
    nodes = [Node(i, label, tuple(float(c) for c in p)) for i, p in enumerate(pos)]
    edges = [Edge(int(a), int(b)) for a, b in unique_edges(faces)]
    return GraphDoc("mesh", nodes, edges, directed=False)


def edge_features(local: np.ndarray) -> tuple[float, ...]:
    t, q, s = math3d.decompose_trs(local)
    return (*map(float, t), *map(float, q), float(s))


def features_to_matrix(features) -> np.ndarray:
    tx, ty, tz, qw, qx, qy, qz, s = features
    return math3d.compose_trs((tx, ty, tz), math3d.quat_normalize((qw, qx, qy, qz)), s)


def export_hierarchy_graph(world: World, labels: Mapping[int, str] | None = None) -> GraphDoc:
    """Entity hierarchy in pre-order. Node features are world positions from ``world.l2w``."""
    labels = labels or {}
    order = world.preorder()
    index = {eid: k for k, eid in enumerate(order)}
    nodes, edges = [], []
    for eid in order:
        ent = world.entity(eid)
        l2w = world.l2w.get(eid, np.eye(4))
        nodes.append(Node(index[eid], labels.get(eid, ent.name), tuple(float(c) for c in l2w[:3, 3])))
        if ent.parent:
            tr = world.get_transform(eid)
            local = np.eye(4) if tr is None else tr.trs
            edges.append(Edge(index[ent.parent], index[eid], edge_features(local)))
    doc = GraphDoc("hierarchy", nodes, edges, directed=True)
    doc.metadata["entity_ids"] = " ".join(str(e) for e in order)
    return doc


def normalize_cloud(points: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    centroid = points.mean(axis=0)
    centered = points - centroid
    radius = float(np.max(np.linalg.norm(centered, axis=1))) if len(points) else 0.0
    if radius < 1e-300:
        return centered, centroid, 1.0
    return centered / radius, centroid, radius


def sample_surface(vertices: np.ndarray, faces: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Area-weighted triangle choice, then uniform barycentric sampling."""
    areas = geometry.triangle_areas(vertices, faces)
    total = areas.sum()
    if total <= 0:
        raise MalformedMesh("mesh has no surface area to sample")
    tri = rng.choice(len(faces), size=count, p=areas / total)
    r1 = np.sqrt(rng.random(count))
    r2 = rng.random(count)
    a, b, c = (vertices[faces[tri, k]] for k in range(3))
    return (1 - r1)[:, None] * a + (r1 * (1 - r2))[:, None] * b + (r1 * r2)[:, None] * c


def export_point_cloud(mesh, l2w=None, label: str = "", n: int = 1024, seed: int = 0) -> PointCloudDoc:
    if n < 1:
        raise ValueError("point count must be at least 1")
    pos = _world_positions(mesh, np.eye(4) if l2w is None else l2w)
    if len(pos) == 0:
        raise MalformedMesh("mesh has no vertices")
    if n <= len(pos):
        pts = pos[:n]
    else:
        faces = _mesh_faces(mesh)
        rng = np.random.Generator(np.random.PCG64(seed))
        pts = np.concatenate([pos, sample_surface(pos, faces, n - len(pos), rng)])
    normed, centroid, scale = normalize_cloud(pts)
    meta = {"prng": PRNG_NAME, "seed": str(seed)}
    return PointCloudDoc(normed, label, centroid, scale, meta)


# -- text format ------------------------------------------------------------------


def _num(x: float) -> str:
    return repr(float(x))


def _header(fmt: str, metadata: Mapping[str, str]) -> list[str]:
    lines = [f"# {fmt}"]
    for k, v in metadata.items():
        lines.append(f"meta {k} {shlex.quote(str(v))}")
    return lines


def dumps(doc: GraphDoc | PointCloudDoc, **metadata: str) -> str:
    """Serialize a document. Extra keyword metadata goes into the header.

    Graph layout::

        # elements-graph v1
        meta <key> <value>
        mode <mesh|hierarchy>
        directed <0|1>
        nodes <count> <feature-length>
        node <id> <label> <f...>
        edges <count> <feature-length>
        edge <src> <dst> <f...>

    Point clouds replace the node/edge sections with ``label``, ``centroid``,
    ``scale``, ``points <count>`` and one ``p x y z`` line per point.
    """
    if isinstance(doc, PointCloudDoc):
        meta = {"mode": "pointcloud", **doc.metadata, **metadata}
        lines = _header(CLOUD_FORMAT, meta)
        lines.append(f"label {shlex.quote(doc.label)}")
        lines.append("centroid " + " ".join(_num(c) for c in doc.centroid))
        lines.append(f"scale {_num(doc.scale)}")
        lines.append(f"points {len(doc.points)}")
        lines.extend("p " + " ".join(_num(c) for c in p) for p in doc.points)
        return "\n".join(lines) + "\n"
    meta = {**doc.metadata, **metadata}
    lines = _header(GRAPH_FORMAT, meta)
    lines.append(f"mode {doc.mode}")
    lines.append(f"directed {int(doc.directed)}")
    nf = len(doc.nodes[0].features) if doc.nodes else 0
    lines.append(f"nodes {len(doc.nodes)} {nf}")
    for n in doc.nodes:
        lines.append(" ".join(["node", str(n.id), shlex.quote(n.label), *map(_num, n.features)]))
    ef = len(doc.edges[0].features) if doc.edges else 0
    lines.append(f"edges {len(doc.edges)} {ef}")
    for e in doc.edges:
        lines.append(" ".join(["edge", str(e.src), str(e.dst), *map(_num, e.features)]))
    return "\n".join(lines) + "\n"


def loads(text: str) -> GraphDoc | PointCloudDoc:
    lines = text.splitlines()
    if not lines or lines[0] not in (f"# {GRAPH_FORMAT}", f"# {CLOUD_FORMAT}"):
        raise ParseError("unknown document header", line=1)
    meta: dict[str, str] = {}
    graph = GraphDoc("")
    cloud: dict = {"points": []}
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            tok = shlex.split(line)
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if not tok:
            continue
        head, rest = tok[0], tok[1:]
        try:
            if head == "meta":
                meta[rest[0]] = rest[1] if len(rest) > 1 else ""
            elif head == "mode":
                graph.mode = rest[0]
            elif head == "directed":
                graph.directed = rest[0] == "1"
            elif head == "node":
                graph.nodes.append(Node(int(rest[0]), rest[1], tuple(map(float, rest[2:]))))
            elif head == "edge":
                graph.edges.append(Edge(int(rest[0]), int(rest[1]), tuple(map(float, rest[2:]))))
            elif head == "label":
                cloud["label"] = rest[0] if rest else ""
            elif head == "centroid":
                cloud["centroid"] = np.array(list(map(float, rest)))
            elif head == "scale":
                cloud["scale"] = float(rest[0])
            elif head == "p":
                cloud["points"].append(list(map(float, rest)))
            elif head in ("nodes", "edges", "points"):
                pass
            else:
                raise ParseError(f"unknown record {head!r}", line=lineno)
        except (IndexError, ValueError) as exc:
            raise ParseError(f"bad {head!r} record: {exc}", line=lineno) from None
    if lines[0] == f"# {CLOUD_FORMAT}":
        meta.pop("mode", None)
        pts = np.array(cloud["points"], dtype=np.float64).reshape(-1, 3)
        return PointCloudDoc(pts, cloud.get("label", ""), cloud.get("centroid", np.zeros(3)), cloud.get("scale", 1.0), meta)
    graph.metadata = meta
    return graph

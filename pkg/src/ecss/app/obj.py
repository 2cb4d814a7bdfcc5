"""Wavefront OBJ subset: ``v``, ``vn`` and ``f`` records."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import IndexOutOfRange, ParseError

log = logging.getLogger(__name__)


@dataclass
class ObjMesh:
    vertices: np.ndarray
    normals: np.ndarray
    faces: np.ndarray  # (m, 3) position indices, 0-based
    face_normals: np.ndarray  # (m, 3) normal indices, -1 when absent
    skipped: Counter = field(default_factory=Counter)

    def render_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
        """Per-vertex ``(positions, faces, normals)`` for a RenderMesh.

        Without ``vn`` data the positions are returned as-is with no normals.
        Otherwise each distinct (position, normal) corner becomes one vertex.
        """
        if len(self.normals) == 0 or np.all(self.face_normals < 0):
            return self.vertices, self.faces, None
        corners = np.stack([self.faces.ravel(), self.face_normals.ravel()], axis=1)
        uniq, inverse = np.unique(corners, axis=0, return_inverse=True)
        pos = self.vertices[uniq[:, 0]]
        nrm = np.where(uniq[:, 1:2] >= 0, self.normals[np.maximum(uniq[:, 1], 0)], np.nan)
        if np.isnan(nrm).any():
            # mixed faces with and without normals: let the engine regenerate them all
            return pos, inverse.reshape(-1, 3), None
        return pos, inverse.reshape(-1, 3), nrm


def _resolve(token: str, count: int, path, lineno: int) -> int:
    i = int(token)
    if i > 0:
        k = i - 1
    elif i < 0:
        k = count + i
    else:
        raise IndexOutOfRange("OBJ indices are 1-based; got 0", path, lineno)
    if not 0 <= k < count:
        raise IndexOutOfRange(f"index {i} out of range for {count} entries", path, lineno)
    return k


def parse_obj(text: str, path=None) -> ObjMesh:
    verts: list[list[float]] = []
    norms: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    fnorms: list[tuple[int, int, int]] = []
    skipped: Counter = Counter()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        head = tok[0]
        try:
            if head == "v":
                if len(tok) < 4:
                    raise ParseError("vertex needs 3 coordinates", path, lineno)
                verts.append([float(t) for t in tok[1:4]])
            elif head == "vn":
                if len(tok) != 4:
                    raise ParseError("normal needs 3 coordinates", path, lineno)
                norms.append([float(t) for t in tok[1:4]])
            elif head == "f":
                if len(tok) < 4:
                    raise ParseError("face needs at least 3 vertices", path, lineno)
                vi, ni = [], []
                for corner in tok[1:]:
                    parts = corner.split("/")
                    vi.append(_resolve(parts[0], len(verts), path, lineno))
                    if len(parts) == 3 and parts[2]:
                        ni.append(_resolve(parts[2], len(norms), path, lineno))
                    else:
                        ni.append(-1)
                for k in range(1, len(vi) - 1):
                    faces.append((vi[0], vi[k], vi[k + 1]))
                    fnorms.append((ni[0], ni[k], ni[k + 1]))
            else:
                skipped[head] += 1
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"bad number in {head!r} record: {exc}", path, lineno) from None
    if skipped:
        log.warning("%s: skipped %d unsupported OBJ records (%s)", path or "<obj>", sum(skipped.values()),
                    ", ".join(f"{k}={v}" for k, v in sorted(skipped.items())))
    return ObjMesh(
        np.array(verts, dtype=np.float64).reshape(-1, 3),
        np.array(norms, dtype=np.float64).reshape(-1, 3),
        np.array(faces, dtype=np.int64).reshape(-1, 3),
        np.array(fnorms, dtype=np.int64).reshape(-1, 3),
        skipped,
    )


def load_obj(path) -> ObjMesh:
    path = Path(path)
    return parse_obj(path.read_text(encoding="utf-8"), path)


def dump_obj(vertices, faces, normals=None) -> str:
    """OBJ text for a mesh; normals, when given, share the vertex indexing."""
    lines = [f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in vertices]
    if normals is not None:
        lines += [f"vn {x:.6f} {y:.6f} {z:.6f}" for x, y, z in normals]
        lines += [f"f {a + 1}//{a + 1} {b + 1}//{b + 1} {c + 1}//{c + 1}" for a, b, c in faces]
    else:
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in faces]
    return "\n".join(lines) + "\n"

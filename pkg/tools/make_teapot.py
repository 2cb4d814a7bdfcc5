"""Regenerate src/ecss/data/teapot.obj from the Newell teapot Bezier patches.

The patch table is read from three.js' TeapotGeometry.js (MIT licensed):

    python tools/make_teapot.py /usr/lib/node_modules/three/examples/jsm/geometries/TeapotGeometry.js
"""
from __future__ import annotations

import argparse
import re
from math import comb
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "ecss" / "data" / "teapot.obj"


def read_tables(js: str) -> tuple[np.ndarray, np.ndarray]:
    def array(name: str) -> list[float]:
        body = re.search(rf"const {name} = \[(.*?)\];", js, re.S).group(1)
        body = re.sub(r"/\*.*?\*/", "", body)
        return [float(t.replace(" ", "")) for t in body.split(",") if t.strip()]

    patches = np.array(array("teapotPatches"), dtype=np.int64).reshape(-1, 16)
    verts = np.array(array("teapotVertices")).reshape(-1, 3)
    return patches, verts


def bernstein(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    b = np.stack([comb(3, i) * u**i * (1 - u) ** (3 - i) for i in range(4)], axis=-1)
    d = np.stack(
        [3 * ((u ** (i - 1) * (1 - u) ** (3 - i) * comb(2, i - 1) if i > 0 else 0)
              - (u**i * (1 - u) ** (2 - i) * comb(2, i) if i < 3 else 0)) for i in range(4)],
        axis=-1,
    )
    return b, d


def tessellate(patches, cps, segments: int):
    u = np.linspace(0.0, 1.0, segments + 1)
    bu, du = bernstein(u)
    positions, normals, faces = [], [], []
    for k, patch in enumerate(patches):
        g = cps[patch].reshape(4, 4, 3).copy()  # [row, col, xyz]
        if 20 <= k < 28:
            g[..., :2] *= 1.077  # widen the lid slightly so it meets the rim
        p = np.einsum("si,tj,ijc->stc", bu, bu, g)
        ds = np.einsum("si,tj,ijc->stc", du, bu, g)
        dt = np.einsum("si,tj,ijc->stc", bu, du, g)
        n = np.cross(dt, ds)
        ln = np.linalg.norm(n, axis=-1, keepdims=True)
        cusp = ln[..., 0] < 1e-9
        n = np.where(ln > 1e-9, n / np.maximum(ln, 1e-300), 0.0)
        # cusp normals point straight up or down
        n[cusp] = np.array([0.0, 0.0, 1.0]) * np.where(p[cusp][:, 2:3] > 1.575, 1.0, -1.0)
        base = sum(len(a) for a in positions)
        positions.append(p.reshape(-1, 3))
        normals.append(n.reshape(-1, 3))
        row = segments + 1
        for s in range(segments):
            for t in range(segments):
                v1 = base + s * row + t
                v2, v4 = v1 + 1, v1 + row
                v3 = v4 + 1
                faces.append((v1, v2, v3))
                faces.append((v1, v3, v4))
    pos = np.concatenate(positions)
    nrm = np.concatenate(normals)
    faces = np.array(faces)
    a, b, c = (pos[faces[:, i]] for i in range(3))
    keep = np.linalg.norm(np.cross(b - a, c - a), axis=1) > 1e-12
    faces = faces[keep]
    # z-up patch space to y-up, height centered on the origin
    scale = 1.0 / 1.575
    out = np.column_stack([pos[:, 0], pos[:, 2] - 1.575, -pos[:, 1]]) * scale
    out_n = np.column_stack([nrm[:, 0], nrm[:, 2], -nrm[:, 1]])
    return out, out_n, faces


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("js", type=Path)
    ap.add_argument("--segments", type=int, default=6)
    ap.add_argument("--out", type=Path, default=OUT)
    args = ap.parse_args()
    patches, cps = read_tables(args.js.read_text())
    pos, nrm, faces = tessellate(patches, cps, args.segments)
    # orient faces to agree with the analytic normals
    a, b, c = (pos[faces[:, i]] for i in range(3))
    fn = np.cross(b - a, c - a)
    flip = np.einsum("ij,ij->i", fn, nrm[faces].sum(axis=1)) < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    lines = ["# Newell teapot, bicubic patches tessellated with %d segments" % args.segments]
    lines += [f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in pos]
    lines += [f"vn {x:.6f} {y:.6f} {z:.6f}" for x, y, z in nrm]
    lines += [f"f {i + 1}//{i + 1} {j + 1}//{j + 1} {k + 1}//{k + 1}" for i, j, k in faces]
    args.out.write_text("\n".join(lines) + "\n")
    print(f"wrote {args.out}: {len(pos)} vertices, {len(faces)} triangles")


if __name__ == "__main__":
    main()

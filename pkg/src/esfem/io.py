"""Plain-text output: OFF meshes, admissibility CSV and the run manifest."""
from __future__ import annotations

import math
import os

from .mesh import SurfaceMesh, admissibility_report


def write_off(mesh: SurfaceMesh, path):
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles} {len(mesh.edges)}\n")
        for v in mesh.vertices:
            fh.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for f in mesh.triangles:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")


def read_off(path, surface=None, t=0.0):
    """Inverse of :func:`write_off` (triangles only)."""
    with open(path) as fh:
        tokens = [line.split() for line in fh if line.strip() and not line.startswith("#")]
    if tokens[0] != ["OFF"]:
        raise ValueError("not an OFF file")
    nv, nf = int(tokens[1][0]), int(tokens[1][1])
    vertices = [[float(x) for x in row] for row in tokens[2:2 + nv]]
    faces = [[int(x) for x in row[1:4]] for row in tokens[2 + nv:2 + nv + nf]]
    return SurfaceMesh(vertices, faces, surface=surface, t=t)


def write_admissibility(meshes, path):
    with open(path, "w") as fh:
        fh.write("level,t,vertices,triangles,h,min_inradius_ratio,area_ratio\n")
        for mesh in meshes:
            r = admissibility_report(mesh)
            fh.write(f"{mesh.level},{mesh.t:.10g},{mesh.n_vertices},{mesh.n_triangles},"
                     f"{r['h']:.10e},{r['min_inradius_ratio']:.10e},{r['area_ratio']:.10e}\n")


def _band(x):
    return "inf" if math.isinf(x) and x > 0 else "-inf" if math.isinf(x) else f"{x:g}"


def write_manifest(reports, path, header=()):
    """One line per check: ``study criterion value [lo, hi] PASS|FAIL``."""
    with open(path, "w") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        for rep in reports:
            for c in rep.checks:
                fh.write(f"{rep.name} {c.criterion} {c.value:.6g} "
                         f"[{_band(c.band[0])}, {_band(c.band[1])}] {'PASS' if c.passed else 'FAIL'}\n")
            for note in rep.notes:
                fh.write(f"# {rep.name}: {note}\n")
        overall = all(rep.passed for rep in reports)
        fh.write(f"overall {'PASS' if overall else 'FAIL'}\n")


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path

"""Text file formats: SDFGRID grids, scattered-sample CSV, sphere dumps and
OBJ meshes.

All floats are written with 17 significant digits, so write-then-read
reproduces every double bit-exactly.  Parsers reject malformed input with
line numbers instead of repairing it.
"""

from __future__ import annotations

import numpy as np

from .core import ParseError, SampleSet, SdfGrid
from .recon import Mesh

_FMT = ".17g"


def _f(x):
    return format(float(x), _FMT)


# ---------------------------------------------------------------------------
# SDFGRID
# ---------------------------------------------------------------------------

def write_grid(grid: SdfGrid, path):
    with open(path, "w") as fh:
        fh.write("SDFGRID 1\n")
        fh.write(f"dim {grid.dim}\n")
        fh.write("res " + " ".join(str(r) for r in grid.resolution) + "\n")
        fh.write("origin " + " ".join(_f(x) for x in grid.origin) + "\n")
        fh.write(f"spacing {_f(grid.spacing)}\n")
        fh.write(f"values {grid.n}\n")
        for v in grid.values:
            fh.write(_f(v) + "\n")


def read_grid(path) -> SdfGrid:
    with open(path) as fh:
        lines = fh.read().splitlines()

    def fail(k, msg):
        raise ParseError(f"{path}:{k + 1}: {msg}")

    if not lines or lines[0].split() != ["SDFGRID", "1"]:
        fail(0, "expected header 'SDFGRID 1'")
    fields = {}
    k = 1
    for key, n_tokens in (("dim", 1), ("res", None), ("origin", None),
                          ("spacing", 1), ("values", 1)):
        if k >= len(lines):
            fail(k, f"missing '{key}' line")
        tokens = lines[k].split()
        if not tokens or tokens[0] != key:
            fail(k, f"expected '{key}', got {lines[k]!r}")
        fields[key] = tokens[1:]
        k += 1
    try:
        dim = int(fields["dim"][0])
        res = tuple(int(t) for t in fields["res"])
        origin = [float(t) for t in fields["origin"]]
        spacing = float(fields["spacing"][0])
        count = int(fields["values"][0])
    except ValueError as exc:
        fail(k - 1, f"bad header value: {exc}")
    if dim not in (2, 3):
        fail(1, f"dim must be 2 or 3, got {dim}")
    if len(res) != dim or len(origin) != dim:
        fail(2, "res/origin rank does not match dim")
    values = []
    for j, line in enumerate(lines[k:]):
        if not line.strip():
            continue
        for tok in line.split():
            try:
                v = float(tok)
            except ValueError:
                fail(k + j, f"bad value {tok!r}")
            if not np.isfinite(v):
                fail(k + j, f"non-finite value {tok!r}")
            values.append(v)
    if len(values) != count:
        raise ParseError(
            f"{path}: value count mismatch: header says {count}, "
            f"found {len(values)}")
    expected = int(np.prod(res))
    if count != expected:
        raise ParseError(
            f"{path}: value count {count} != resolution product {expected}")
    return SdfGrid(dim, res, origin, spacing, values)


# ---------------------------------------------------------------------------
# scattered samples / sphere dumps (CSV)
# ---------------------------------------------------------------------------

def write_scattered(sample_set: SampleSet, path):
    cols = ["x", "y", "z"][:sample_set.dim] + ["s"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for p, v in zip(sample_set.points, sample_set.values):
            fh.write(",".join(_f(x) for x in p) + "," + _f(v) + "\n")


def read_scattered(path) -> SampleSet:
    with open(path) as fh:
        lines = fh.read().splitlines()
    rows = []
    dim = None
    for k, line in enumerate(lines):
        if not line.strip():
            continue
        tokens = [t.strip() for t in line.split(",")]
        if k == 0 and tokens[0].lower() in ("x",):
            if tokens[-1].lower() != "s":
                raise ParseError(f"{path}:1: header must end with 's'")
            continue
        try:
            vals = [float(t) for t in tokens]
        except ValueError:
            raise ParseError(f"{path}:{k + 1}: bad number in {line!r}")
        if any(not np.isfinite(v) for v in vals):
            raise ParseError(f"{path}:{k + 1}: non-finite value")
        if dim is None:
            if len(vals) not in (3, 4):
                raise ParseError(
                    f"{path}:{k + 1}: expected x,y[,z],s columns")
            dim = len(vals) - 1
        elif len(vals) != dim + 1:
            raise ParseError(f"{path}:{k + 1}: inconsistent column count")
        rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no samples")
    arr = np.asarray(rows)
    return SampleSet(arr[:, :dim], arr[:, dim])


def write_spheres(sample_set: SampleSet, path):
    """Sphere dump for external viewers: one row per sample, center
    coordinates then the signed value.  Round-trips via read_scattered."""
    write_scattered(sample_set, path)


# ---------------------------------------------------------------------------
# OBJ
# ---------------------------------------------------------------------------

def write_obj(mesh: Mesh, path):
    """3D meshes as v/f, 2D polylines as v/l (one line record per segment)."""
    with open(path, "w") as fh:
        for v in mesh.vertices:
            if mesh.dim == 2:
                fh.write(f"v {_f(v[0])} {_f(v[1])} 0\n")
            else:
                fh.write(f"v {_f(v[0])} {_f(v[1])} {_f(v[2])}\n")
        for el in mesh.elements:
            tag = "l" if mesh.dim == 2 else "f"
            fh.write(tag + " " + " ".join(str(int(i) + 1) for i in el) + "\n")


def read_obj(path) -> Mesh:
    verts = []
    segs = []
    tris = []
    with open(path) as fh:
        for k, line in enumerate(fh):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            tag = tokens[0]
            try:
                if tag == "v":
                    verts.append([float(t) for t in tokens[1:4]])
                elif tag == "l":
                    ids = [int(t.split("/")[0]) - 1 for t in tokens[1:]]
                    for a, b in zip(ids[:-1], ids[1:]):
                        segs.append((a, b))
                elif tag == "f":
                    ids = [int(t.split("/")[0]) - 1 for t in tokens[1:]]
                    for j in range(1, len(ids) - 1):
                        tris.append((ids[0], ids[j], ids[j + 1]))
            except (ValueError, IndexError):
                raise ParseError(f"{path}:{k + 1}: bad OBJ record {line!r}")
    if not verts:
        raise ParseError(f"{path}: no vertices")
    verts = np.asarray(verts)
    if tris:
        return Mesh(vertices=verts, elements=np.asarray(tris, dtype=np.intp),
                    dim=3)
    if np.allclose(verts[:, 2], 0.0):
        return Mesh(vertices=verts[:, :2],
                    elements=np.asarray(segs, dtype=np.intp)
                    if segs else np.empty((0, 2), dtype=np.intp), dim=2)
    return Mesh(vertices=verts,
                elements=np.asarray(segs, dtype=np.intp)
                if segs else np.empty((0, 2), dtype=np.intp), dim=3)

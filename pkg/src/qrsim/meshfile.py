"""Self-describing text format for meshes.

Layout (UTF-8, sections in fixed order, numbers with 9 significant digits):

    #nodes n        n lines: x y z            (cm)
    #tets m         m lines: i0 i1 i2 i3      (zero-based node indices)
    #coords n       n lines: tm ab rt side    (side: LV | RV)
    #tags n         n lines: surface_tag endo_layer
                    (epi | lv_endo | rv_endo | base | none,
                     dense | sparse | none)

A save/load round trip is bit-exact at that precision.
"""

from __future__ import annotations

import io
import os

import numpy as np

from .geometry import (LAYER_CODES, LAYER_NAMES, SIDE_CODES, SIDE_NAMES,
                       TAG_CODES, TAG_NAMES, Mesh, MeshError, validate_mesh)


def _fmt(x: float) -> str:
    return format(x, ".9g")


def dumps_mesh(mesh: Mesh) -> str:
    out = io.StringIO()
    n, m = mesh.num_nodes, mesh.num_tets
    out.write(f"#nodes {n}\n")
    for p in mesh.nodes:
        out.write(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
    out.write(f"#tets {m}\n")
    for t in mesh.tets:
        out.write(f"{t[0]} {t[1]} {t[2]} {t[3]}\n")
    out.write(f"#coords {n}\n")
    for i in range(n):
        out.write(f"{_fmt(mesh.tm[i])} {_fmt(mesh.ab[i])} {_fmt(mesh.rt[i])} "
                  f"{SIDE_NAMES[int(mesh.side[i])]}\n")
    out.write(f"#tags {n}\n")
    for i in range(n):
        out.write(f"{TAG_NAMES[int(mesh.surface_tag[i])]} "
                  f"{LAYER_NAMES[int(mesh.endo_layer[i])]}\n")
    return out.getvalue()


def save_mesh(mesh: Mesh, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_mesh(mesh))


def _expect_header(line: str, section: str, lineno: int) -> int:
    parts = line.split()
    if len(parts) != 2 or parts[0] != f"#{section}":
        raise MeshError(f"line {lineno}: expected '#{section} <count>', got {line!r}")
    try:
        count = int(parts[1])
    except ValueError:
        raise MeshError(f"line {lineno}: bad count in {line!r}") from None
    if count < 0:
        raise MeshError(f"line {lineno}: negative count in {line!r}")
    return count


def loads_mesh(text: str) -> Mesh:
    lines = text.splitlines()
    pos = 0

    def next_line() -> tuple[str, int]:
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            raise MeshError(f"line {pos + 1}: unexpected end of file")
        pos += 1
        return lines[pos - 1].strip(), pos

    line, no = next_line()
    n = _expect_header(line, "nodes", no)
    nodes = np.empty((n, 3))
    for i in range(n):
        line, no = next_line()
        parts = line.split()
        if len(parts) != 3:
            raise MeshError(f"nodes[{i}] (line {no}): expected 3 numbers, got {line!r}")
        try:
            nodes[i] = [float(x) for x in parts]
        except ValueError:
            raise MeshError(f"nodes[{i}] (line {no}): bad number in {line!r}") from None

    line, no = next_line()
    m = _expect_header(line, "tets", no)
    tets = np.empty((m, 4), dtype=np.int32)
    for i in range(m):
        line, no = next_line()
        parts = line.split()
        if len(parts) != 4:
            raise MeshError(f"tets[{i}] (line {no}): expected 4 indices, got {line!r}")
        try:
            tets[i] = [int(x) for x in parts]
        except ValueError:
            raise MeshError(f"tets[{i}] (line {no}): bad index in {line!r}") from None
        if (tets[i] < 0).any() or (tets[i] >= n).any():
            raise MeshError(f"tets[{i}] (line {no}): node index "
                            f"{int(tets[i].min()) if (tets[i] < 0).any() else int(tets[i].max())} "
                            f"out of range (n={n})")

    line, no = next_line()
    nc = _expect_header(line, "coords", no)
    if nc != n:
        raise MeshError(f"line {no}: #coords count {nc} != node count {n}")
    tm = np.empty(n)
    ab = np.empty(n)
    rt = np.empty(n)
    side = np.empty(n, dtype=np.uint8)
    for i in range(n):
        line, no = next_line()
        parts = line.split()
        if len(parts) != 4:
            raise MeshError(f"coords[{i}] (line {no}): expected 'tm ab rt side', got {line!r}")
        try:
            tm[i], ab[i], rt[i] = (float(x) for x in parts[:3])
        except ValueError:
            raise MeshError(f"coords[{i}] (line {no}): bad number in {line!r}") from None
        if parts[3] not in SIDE_CODES:
            raise MeshError(f"coords[{i}] (line {no}): unknown side {parts[3]!r}")
        side[i] = SIDE_CODES[parts[3]]
        if not (0.0 <= tm[i] <= 1.0):
            raise MeshError(f"coords[{i}] (line {no}): tm={_fmt(tm[i])} outside [0, 1]")
        if not (0.0 <= ab[i] <= 1.0):
            raise MeshError(f"coords[{i}] (line {no}): ab={_fmt(ab[i])} outside [0, 1]")
        if not (0.0 <= rt[i] < 1.0):
            raise MeshError(f"coords[{i}] (line {no}): rt={_fmt(rt[i])} outside [0, 1)")

    line, no = next_line()
    nt = _expect_header(line, "tags", no)
    if nt != n:
        raise MeshError(f"line {no}: #tags count {nt} != node count {n}")
    tag = np.empty(n, dtype=np.uint8)
    layer = np.empty(n, dtype=np.uint8)
    for i in range(n):
        line, no = next_line()
        parts = line.split()
        if len(parts) != 2:
            raise MeshError(f"tags[{i}] (line {no}): expected 'surface_tag endo_layer', got {line!r}")
        if parts[0] not in TAG_CODES:
            raise MeshError(f"tags[{i}] (line {no}): unknown surface tag {parts[0]!r}")
        if parts[1] not in LAYER_CODES:
            raise MeshError(f"tags[{i}] (line {no}): unknown endo layer {parts[1]!r}")
        tag[i] = TAG_CODES[parts[0]]
        layer[i] = LAYER_CODES[parts[1]]

    mesh = Mesh(nodes, tets, tm, ab, rt, side, tag, layer)
    validate_mesh(mesh)
    return mesh


def load_mesh(path: str | os.PathLike) -> Mesh:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_mesh(fh.read())

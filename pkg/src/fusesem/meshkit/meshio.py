"""Plain-text mesh files.

Line-oriented format::

    fusemesh 1
    vertices <n>
    <x> <y>                 (n lines, 17 significant digits)
    quads <m>
    <v0> <v1> <v2> <v3> [tag ...]
    geometry <p_geo>        (optional; m * (p_geo+1)^2 coordinate lines,
                             row-major reference order per element)
    boundary <k>            (optional; k lines "face-id tag",
                             face-id = 4 * element + side)
    aliases <k>             (optional; k lines "alias canonical" identifying
                             vertices, e.g. across periodic seams)

Loading is atomic: a malformed or truncated file raises MeshFileError and
returns no partial mesh.  Saving goes through a temporary file and rename.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np

from .quadmesh import QuadMesh, _bilinear_geometry


class MeshFileError(RuntimeError):
    """Malformed mesh file; message carries the offending line number."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_mesh(mesh: QuadMesh, path: str):
    """Write the mesh; round-trips bit-exactly through load_mesh."""
    lines = ["fusemesh 1"]
    lines.append(f"vertices {mesh.n_vertices}")
    for x, y in mesh.vertices:
        lines.append(f"{_fmt(x)} {_fmt(y)}")
    lines.append(f"quads {mesh.n_elements}")
    for e in range(mesh.n_elements):
        row = " ".join(str(int(v)) for v in mesh.quads[e])
        tags = " ".join(mesh.quad_tags[e])
        lines.append(f"{row} {tags}".rstrip())
    lines.append(f"geometry {mesh.geometry_p}")
    for e in range(mesh.n_elements):
        for x, y in mesh.geometry_nodes[e]:
            lines.append(f"{_fmt(x)} {_fmt(y)}")
    if mesh.boundary_tags:
        lines.append(f"boundary {len(mesh.boundary_tags)}")
        for (e, s), tag in sorted(mesh.boundary_tags.items()):
            lines.append(f"{4 * e + s} {tag}")
    if mesh.vertex_aliases:
        lines.append(f"aliases {len(mesh.vertex_aliases)}")
        for a, c in sorted(mesh.vertex_aliases.items()):
            lines.append(f"{a} {c}")
    text = "\n".join(lines) + "\n"
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)) or ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, path: str):
        with open(path) as fh:
            self.lines = fh.read().splitlines()
        self.pos = 0

    def next(self, what: str) -> str:
        while self.pos < len(self.lines) and not self.lines[self.pos].strip():
            self.pos += 1
        if self.pos >= len(self.lines):
            raise MeshFileError(f"unexpected end of file while reading {what}")
        self.pos += 1
        return self.lines[self.pos - 1].strip()

    def peek(self) -> str | None:
        p = self.pos
        while p < len(self.lines) and not self.lines[p].strip():
            p += 1
        return self.lines[p].strip() if p < len(self.lines) else None

    def fail(self, msg: str):
        raise MeshFileError(f"line {self.pos}: {msg}")


def load_mesh(path: str) -> QuadMesh:
    """Parse a mesh file; missing geometry is rebuilt bilinearly from quads."""
    r = _Reader(path)
    header = r.next("header")
    if header.split() != ["fusemesh", "1"]:
        r.fail(f"bad header {header!r}; expected 'fusemesh 1'")

    section = r.next("vertices section").split()
    if len(section) != 2 or section[0] != "vertices":
        r.fail("expected 'vertices <n>'")
    try:
        nv = int(section[1])
    except ValueError:
        r.fail("vertex count is not an integer")
    verts = np.empty((nv, 2))
    for i in range(nv):
        parts = r.next("vertex coordinates").split()
        if len(parts) != 2:
            r.fail("vertex line must hold two reals")
        try:
            verts[i] = [float(parts[0]), float(parts[1])]
        except ValueError:
            r.fail("unparsable vertex coordinate")

    section = r.next("quads section").split()
    if len(section) != 2 or section[0] != "quads":
        r.fail("expected 'quads <m>'")
    ne = int(section[1])
    quads = np.empty((ne, 4), dtype=np.int64)
    quad_tags = []
    for e in range(ne):
        parts = r.next("quad connectivity").split()
        if len(parts) < 4:
            r.fail("quad line must hold four vertex ids")
        try:
            quads[e] = [int(t) for t in parts[:4]]
        except ValueError:
            r.fail("unparsable vertex id")
        if np.any(quads[e] < 0) or np.any(quads[e] >= nv):
            r.fail("vertex id out of range")
        quad_tags.append(tuple(parts[4:]))

    p_geo = 1
    geom = None
    tags: dict = {}
    aliases: dict = {}
    while True:
        head = r.peek()
        if head is None:
            break
        parts = r.next("section header").split()
        if parts[0] == "geometry" and len(parts) == 2:
            p_geo = int(parts[1])
            if p_geo < 1:
                r.fail("geometry degree must be >= 1")
            ng = (p_geo + 1) ** 2
            geom = np.empty((ne, ng, 2))
            for e in range(ne):
                for k in range(ng):
                    xy = r.next("geometry node").split()
                    if len(xy) != 2:
                        r.fail("geometry line must hold two reals")
                    try:
                        geom[e, k] = [float(xy[0]), float(xy[1])]
                    except ValueError:
                        r.fail("unparsable geometry coordinate")
        elif parts[0] == "boundary" and len(parts) == 2:
            for _ in range(int(parts[1])):
                fid_tag = r.next("boundary tag").split()
                if len(fid_tag) != 2:
                    r.fail("boundary line must be 'face-id tag'")
                fid = int(fid_tag[0])
                e, s = divmod(fid, 4)
                if e >= ne:
                    r.fail("boundary face id out of range")
                tags[(e, s)] = fid_tag[1]
        elif parts[0] == "aliases" and len(parts) == 2:
            for _ in range(int(parts[1])):
                ac = r.next("vertex alias").split()
                if len(ac) != 2:
                    r.fail("alias line must be 'alias canonical'")
                a, c = int(ac[0]), int(ac[1])
                if a >= nv or c >= nv:
                    r.fail("alias vertex id out of range")
                aliases[a] = c
        else:
            r.fail(f"unknown section {parts[0]!r}")

    if geom is None:
        geom = np.array([_bilinear_geometry(verts[q], p_geo) for q in quads])
    return QuadMesh(
        vertices=verts,
        quads=quads,
        geometry_p=p_geo,
        geometry_nodes=geom,
        boundary_tags=tags,
        vertex_aliases=aliases,
        quad_tags=quad_tags,
    )


def meshes_equal(a: QuadMesh, b: QuadMesh) -> bool:
    """Bit-exact equality of coordinates and connectivity."""
    return (
        a.n_vertices == b.n_vertices
        and a.n_elements == b.n_elements
        and a.geometry_p == b.geometry_p
        and np.array_equal(a.vertices, b.vertices)
        and np.array_equal(a.quads, b.quads)
        and np.array_equal(a.geometry_nodes, b.geometry_nodes)
        and a.boundary_tags == b.boundary_tags
        and a.vertex_aliases == b.vertex_aliases
        and list(a.quad_tags) == list(b.quad_tags)
    )

"""Curvilinear quadrilateral meshes.

Conventions
-----------
Reference square is [0, 1]^2 with coordinates (z1, z2).  Local corners run
counterclockwise: corner 0 at (0,0), 1 at (1,0), 2 at (1,1), 3 at (0,1);
local side s joins corner s to corner (s+1) % 4.  Tensor indices (i1, i2)
flatten as i2 * (p+1) + i1, so z1 varies fastest.  Geometry nodes are the
tensor product of the 1D Gauss-Legendre-plus-endpoints nodes mapped to
[0, 1], sampled from the element mapping, stored per element.

Periodic identification is expressed through ``vertex_aliases``: an alias
vertex shares the topology of its canonical vertex while keeping its own
physical coordinates.  Adjacency and dof matching work on canonical ids, so
periodic faces pair up exactly like interior faces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..refelem import (
    NodeKind,
    ReferenceElement,
    build_node_set,
    lagrange_basis_values,
    lagrange_diff_from_coords,
)

SIDE_CORNERS = ((0, 1), (1, 2), (2, 3), (3, 0))


class MeshError(RuntimeError):
    """Raised for inconsistent mesh topology or degenerate geometry."""


def geometry_nodes_1d(p_geo: int) -> np.ndarray:
    """The 1D geometry node coordinates on [0, 1]."""
    return 0.5 * (build_node_set(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, p_geo).coords + 1.0)


def corner_index(p: int, corner: int) -> int:
    i1 = (0, p, p, 0)[corner]
    i2 = (0, 0, p, p)[corner]
    return i2 * (p + 1) + i1


def side_node_indices(p: int, side: int) -> np.ndarray:
    """Flat tensor indices along a side, ordered in the side's local direction."""
    r = np.arange(p + 1)
    if side == 0:
        i1, i2 = r, np.zeros_like(r)
    elif side == 1:
        i1, i2 = np.full_like(r, p), r
    elif side == 2:
        i1, i2 = r[::-1], np.full_like(r, p)
    elif side == 3:
        i1, i2 = np.zeros_like(r), r[::-1]
    else:
        raise ValueError(f"side must be 0..3, got {side}")
    return i2 * (p + 1) + i1


@dataclass
class QuadMesh:
    """Unstructured mesh of curvilinear quadrilateral elements.

    Treat instances as immutable after construction; generators and
    refinement return new meshes.
    """

    vertices: np.ndarray
    quads: np.ndarray
    geometry_p: int
    geometry_nodes: np.ndarray = field(repr=False)
    boundary_tags: dict = field(default_factory=dict)
    vertex_aliases: dict = field(default_factory=dict)
    boundary_curves: dict = field(default_factory=dict)
    quad_tags: list = field(default_factory=list)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        self.quads = np.asarray(self.quads, dtype=np.int64).reshape(-1, 4)
        ng = (self.geometry_p + 1) ** 2
        self.geometry_nodes = np.asarray(self.geometry_nodes, dtype=float).reshape(
            self.quads.shape[0], ng, 2
        )
        if not self.quad_tags:
            self.quad_tags = [() for _ in range(self.n_elements)]
        # resolve alias chains once
        self.vertex_aliases = {
            a: self._resolve_alias(a) for a in self.vertex_aliases
        }
        self._adjacency = None

    def _resolve_alias(self, v: int) -> int:
        seen = set()
        while v in self.vertex_aliases:
            if v in seen:
                raise MeshError("cyclic vertex alias chain")
            seen.add(v)
            v = self.vertex_aliases[v]
        return v

    @property
    def n_elements(self) -> int:
        return self.quads.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def canonical_vertex(self, v: int) -> int:
        return self.vertex_aliases.get(int(v), int(v))

    def canonical_quads(self) -> np.ndarray:
        if not self.vertex_aliases:
            return self.quads
        canon = np.arange(self.n_vertices)
        for a, c in self.vertex_aliases.items():
            canon[a] = c
        return canon[self.quads]

    def adjacency(self) -> dict:
        """Map edge key (canonical vmin, vmax) -> list of (element, side)."""
        if self._adjacency is None:
            adj: dict = {}
            cq = self.canonical_quads()
            for e in range(self.n_elements):
                for s, (ca, cb) in enumerate(SIDE_CORNERS):
                    va, vb = int(cq[e, ca]), int(cq[e, cb])
                    adj.setdefault((min(va, vb), max(va, vb)), []).append((e, s))
            self._adjacency = adj
        return self._adjacency

    def boundary_faces(self) -> list:
        """All (element, side) pairs whose edge has a single owner."""
        return [owners[0] for owners in self.adjacency().values() if len(owners) == 1]

    def element_geometry(self, e: int) -> np.ndarray:
        pg = self.geometry_p
        return self.geometry_nodes[e].reshape(pg + 1, pg + 1, 2)

    def side_direction(self, e: int, s: int) -> tuple[int, int]:
        """Canonical vertex ids (from, to) of a side in its local direction."""
        ca, cb = SIDE_CORNERS[s]
        return (
            self.canonical_vertex(self.quads[e, ca]),
            self.canonical_vertex(self.quads[e, cb]),
        )

    def diameter(self, e: int) -> float:
        g = self.geometry_nodes[e]
        return float(np.max(g.max(axis=0) - g.min(axis=0)))

    def validate(self):
        """Check adjacency consistency and mapping validity; raises MeshError."""
        for key, owners in self.adjacency().items():
            if len(owners) > 2:
                raise MeshError(f"edge {key} shared by {len(owners)} elements")
            if len(owners) == 2:
                d0 = self.side_direction(*owners[0])
                d1 = self.side_direction(*owners[1])
                if d0 != (d1[1], d1[0]):
                    raise MeshError(f"inconsistent orientation across edge {key}")
        geo = mapping_at_nodes(self, self.geometry_p)
        if np.any(geo.det <= 0.0):
            bad = int(np.argwhere(np.any(geo.det <= 0.0, axis=1))[0, 0])
            raise MeshError(f"non-positive Jacobian determinant in element {bad}")
        self._check_shared_face_geometry()

    def _check_shared_face_geometry(self, tol_rel: float = 1e-12):
        pg = self.geometry_p
        for owners in self.adjacency().values():
            if len(owners) != 2:
                continue
            (e0, s0), (e1, s1) = owners
            g0 = self.geometry_nodes[e0][side_node_indices(pg, s0)]
            g1 = self.geometry_nodes[e1][side_node_indices(pg, s1)][::-1]
            gap = g0 - g1
            raw0 = _edge_key_raw(self, e0, s0)
            raw1 = _edge_key_raw(self, e1, s1)
            if raw0 != raw1:
                # periodic partner faces differ by a constant translation
                gap = gap - gap[0]
            tol = tol_rel * max(self.diameter(e0), self.diameter(e1))
            if np.max(np.abs(gap)) > tol:
                raise MeshError(
                    f"geometry mismatch across face of elements {e0}/{e1}"
                )


@dataclass(frozen=True)
class MappingEval:
    """Element mappings sampled on a tensor node grid.

    Arrays are indexed (element, flat node); the Jacobian is d(x,y)/d(z1,z2).
    """

    nodes_1d: np.ndarray
    coords: np.ndarray
    jac: np.ndarray
    jac_inv: np.ndarray
    det: np.ndarray

    @property
    def n_nodes_1d(self) -> int:
        return self.nodes_1d.size


def _transfer_matrices(g01: np.ndarray, pts: np.ndarray):
    """Basis values and derivatives of the geometry basis at given points."""
    basis = lagrange_basis_values(g01, pts)
    dmat = lagrange_diff_from_coords(g01)
    return basis, basis @ dmat


def mapping_at_nodes(mesh: QuadMesh, p: int) -> MappingEval:
    """Evaluate every element mapping at the degree-p solution tensor nodes."""
    s01 = geometry_nodes_1d(p)
    g01 = geometry_nodes_1d(mesh.geometry_p)
    basis, dbasis = _transfer_matrices(g01, s01)
    ne, nn = mesh.n_elements, (p + 1) ** 2
    gm = mesh.geometry_nodes.reshape(ne, mesh.geometry_p + 1, mesh.geometry_p + 1, 2)
    coords = np.einsum("Jb,Ia,ebak->eJIk", basis, basis, gm)
    dz1 = np.einsum("Jb,Ia,ebak->eJIk", basis, dbasis, gm)
    dz2 = np.einsum("Jb,Ia,ebak->eJIk", dbasis, basis, gm)
    jac = np.empty((ne, p + 1, p + 1, 2, 2))
    jac[..., 0] = dz1
    jac[..., 1] = dz2
    jac = jac.reshape(ne, nn, 2, 2)
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    if np.any(det <= 0.0):
        bad = int(np.argwhere(np.any(det <= 0.0, axis=1))[0, 0])
        raise MeshError(f"non-positive Jacobian determinant in element {bad}")
    inv = np.empty_like(jac)
    inv[..., 0, 0] = jac[..., 1, 1] / det
    inv[..., 0, 1] = -jac[..., 0, 1] / det
    inv[..., 1, 0] = -jac[..., 1, 0] / det
    inv[..., 1, 1] = jac[..., 0, 0] / det
    return MappingEval(
        nodes_1d=s01,
        coords=coords.reshape(ne, nn, 2),
        jac=jac,
        jac_inv=inv,
        det=det,
    )


def evaluate_mapping(mesh: QuadMesh, element: int, zeta) -> tuple[np.ndarray, np.ndarray]:
    """Physical point and Jacobian of one element mapping at zeta in [0,1]^2."""
    z1, z2 = float(zeta[0]), float(zeta[1])
    g01 = geometry_nodes_1d(mesh.geometry_p)
    b1, db1 = _transfer_matrices(g01, np.array([z1]))
    b2, db2 = _transfer_matrices(g01, np.array([z2]))
    gm = mesh.element_geometry(element)
    x = np.einsum("b,a,bak->k", b2[0], b1[0], gm)
    jac = np.empty((2, 2))
    jac[:, 0] = np.einsum("b,a,bak->k", b2[0], db1[0], gm)
    jac[:, 1] = np.einsum("b,a,bak->k", db2[0], b1[0], gm)
    return x, jac


def element_areas(mesh: QuadMesh, p: int | None = None) -> np.ndarray:
    """Element areas from the tensor interpolatory quadrature of det(Jac)."""
    p = mesh.geometry_p if p is None else p
    ref = ReferenceElement.build(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, p)
    w01 = 0.5 * ref.weights
    w2d = np.kron(w01, w01)
    me = mapping_at_nodes(mesh, p)
    return me.det @ w2d


def _bilinear_geometry(corners: np.ndarray, p_geo: int) -> np.ndarray:
    """Geometry nodes of the bilinear map through 4 corner points (CCW)."""
    t = geometry_nodes_1d(p_geo)
    z1, z2 = np.meshgrid(t, t, indexing="xy")
    c0, c1, c2, c3 = corners
    pts = (
        np.multiply.outer((1 - z1) * (1 - z2), c0)
        + np.multiply.outer(z1 * (1 - z2), c1)
        + np.multiply.outer(z1 * z2, c2)
        + np.multiply.outer((1 - z1) * z2, c3)
    )
    return pts.reshape((p_geo + 1) ** 2, 2)


def build_structured_quad_mesh(
    nx: int,
    ny: int,
    domain=(0.0, 1.0, 0.0, 1.0),
    periodic_x: bool = False,
    periodic_y: bool = False,
    p_geo: int = 1,
) -> QuadMesh:
    """Axis-aligned nx-by-ny mesh of a rectangle; affine element mappings.

    Periodic directions identify opposite boundary vertices through aliases;
    the vertex coordinates stay distinct so element geometry is unwrapped.
    """
    if nx < 1 or ny < 1:
        raise ValueError("need nx, ny >= 1")
    x0, x1, y0, y1 = map(float, domain)
    if not (x0 < x1 and y0 < y1):
        raise ValueError("empty domain")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)

    def vid(i, j):
        return j * (nx + 1) + i

    verts = np.array([[xs[i], ys[j]] for j in range(ny + 1) for i in range(nx + 1)])
    quads, geom, tags = [], [], {}
    for j in range(ny):
        for i in range(nx):
            e = len(quads)
            quads.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)])
            corners = verts[quads[-1]]
            geom.append(_bilinear_geometry(corners, p_geo))
            if j == 0 and not periodic_y:
                tags[(e, 0)] = "bottom"
            if j == ny - 1 and not periodic_y:
                tags[(e, 2)] = "top"
            if i == 0 and not periodic_x:
                tags[(e, 3)] = "left"
            if i == nx - 1 and not periodic_x:
                tags[(e, 1)] = "right"
    aliases = {}
    if periodic_x:
        for j in range(ny + 1):
            aliases[vid(nx, j)] = vid(0, j)
    if periodic_y:
        for i in range(nx + 1):
            aliases[vid(i, ny)] = vid(i, 0)
    return QuadMesh(
        vertices=verts,
        quads=np.array(quads),
        geometry_p=p_geo,
        geometry_nodes=np.array(geom),
        boundary_tags=tags,
        vertex_aliases=aliases,
    )


def build_perturbed_quad_mesh(
    nx: int,
    ny: int,
    domain=(0.0, 1.0, 0.0, 1.0),
    seed: int = 20240101,
    p_geo: int = 1,
    amplitude: float = 0.2,
) -> QuadMesh:
    """Structured mesh with seeded interior-vertex jitter, Laplacian-smoothed.

    Interior vertices move by at most ``amplitude * h`` (uniform in the disk),
    then one smoothing pass replaces each interior vertex by the average of
    its four grid neighbours.  Deterministic for a fixed seed; serves as the
    geometric-defect benchmark mesh.
    """
    mesh = build_structured_quad_mesh(nx, ny, domain, p_geo=p_geo)
    x0, x1, y0, y1 = map(float, domain)
    h = min((x1 - x0) / nx, (y1 - y0) / ny)
    rng = np.random.default_rng(seed)
    verts = mesh.vertices.copy()

    def vid(i, j):
        return j * (nx + 1) + i

    for j in range(1, ny):
        for i in range(1, nx):
            r = amplitude * h * np.sqrt(rng.uniform())
            th = rng.uniform(0.0, 2.0 * np.pi)
            verts[vid(i, j)] += [r * np.cos(th), r * np.sin(th)]
    smoothed = verts.copy()
    for j in range(1, ny):
        for i in range(1, nx):
            nb = [vid(i - 1, j), vid(i + 1, j), vid(i, j - 1), vid(i, j + 1)]
            smoothed[vid(i, j)] = verts[nb].mean(axis=0)
    geom = np.array(
        [_bilinear_geometry(smoothed[q], p_geo) for q in np.asarray(mesh.quads)]
    )
    return QuadMesh(
        vertices=smoothed,
        quads=mesh.quads,
        geometry_p=p_geo,
        geometry_nodes=geom,
        boundary_tags=mesh.boundary_tags,
    )


def _unit_circle_snap(pts: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(pts, axis=-1, keepdims=True)
    return pts / r


_CURVE_SNAPS = {"unit-circle": _unit_circle_snap}


def _coons_patch(edges, z1, z2):
    """Transfinite interpolation of four edge curves.

    ``edges`` are callables (bottom, right, top, left) parameterised on [0,1]
    in the local side directions of the reference square (bottom left-to-right,
    right bottom-to-top, top left-to-right, left bottom-to-top).
    """
    eb, er, et, el = edges
    c0, c1, c2, c3 = eb(0.0), eb(1.0), et(1.0), et(0.0)
    z1 = np.asarray(z1)[..., None]
    z2 = np.asarray(z2)[..., None]
    blend = (
        (1 - z2) * eb(z1[..., 0]) + z2 * et(z1[..., 0])
        + (1 - z1) * el(z2[..., 0]) + z1 * er(z2[..., 0])
        - ((1 - z1) * (1 - z2) * c0 + z1 * (1 - z2) * c1
           + z1 * z2 * c2 + (1 - z1) * z2 * c3)
    )
    return blend


def _line(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)

    def f(t):
        t = np.asarray(t)[..., None]
        return (1 - t) * a + t * b

    return f


def _arc(theta0, theta1):
    def f(t):
        th = theta0 + np.asarray(t) * (theta1 - theta0)
        return np.stack([np.cos(th), np.sin(th)], axis=-1)

    return f


def build_circle_mesh(p_geo: int) -> QuadMesh:
    """Five-block mesh of the unit disk: centre square plus four curved blocks.

    Outer-block boundary edges interpolate exact points of the unit circle at
    the geometry nodes; block interiors are transfinite (Coons) blends, so
    interior shared edges stay straight and consistent.  The circle faces are
    tagged "circle" and carry the snapping curve used on refinement.
    """
    if p_geo < 1:
        raise ValueError("need p_geo >= 1")
    a = 0.5
    sq = np.array([[-a, -a], [a, -a], [a, a], [-a, a]])
    angles = np.array([-135.0, -45.0, 45.0, 135.0]) * np.pi / 180.0
    arcpts = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    verts = np.vstack([sq, arcpts])  # 0..3 square corners, 4..7 arc corners
    quads = [[0, 1, 2, 3]]  # centre block
    # outer blocks: (inner corner a, inner corner b) -> arc from angle of b to a
    outer = [
        (1, 2, 5, 6),  # right
        (2, 3, 6, 7),  # top
        (3, 0, 7, 4),  # left
        (0, 1, 4, 5),  # bottom
    ]
    t = geometry_nodes_1d(p_geo)
    z1g, z2g = np.meshgrid(t, t, indexing="xy")
    geom = [_coons_patch(
        (_line(sq[0], sq[1]), _line(sq[1], sq[2]), _line(sq[3], sq[2]), _line(sq[0], sq[3])),
        z1g, z2g).reshape(-1, 2)]
    tags = {}
    for bi, (ia, ib, aa, ab) in enumerate(outer):
        e = bi + 1
        # CCW quad: inner a, arc a, arc b, inner b; the arc is local side 1? no:
        # order the quad so the curved edge is side 1 is awkward for CCW; use
        # corners (inner_a, arc_a, arc_b, inner_b) -> curved edge is side 1.
        quads.append([ia, aa + 0, ab + 0, ib])
        th_a = angles[aa - 4]
        th_b = angles[ab - 4]
        if th_b < th_a:
            th_b += 2.0 * np.pi
        edges = (
            _line(verts[ia], verts[aa]),      # bottom: inner a -> arc a
            _arc(th_a, th_b),                  # right: along the circle
            _line(verts[ib], verts[ab]),       # top: inner b -> arc b
            _line(verts[ia], verts[ib]),       # left: shared with centre square
        )
        geom.append(_coons_patch(edges, z1g, z2g).reshape(-1, 2))
        tags[(e, 1)] = "circle"
    mesh = QuadMesh(
        vertices=verts,
        quads=np.array(quads),
        geometry_p=p_geo,
        geometry_nodes=np.array(geom),
        boundary_tags=tags,
        boundary_curves={"circle": "unit-circle"},
    )
    mesh.validate()
    return mesh


def _edge_key_raw(mesh: QuadMesh, e: int, s: int):
    ca, cb = SIDE_CORNERS[s]
    va, vb = int(mesh.quads[e, ca]), int(mesh.quads[e, cb])
    return (min(va, vb), max(va, vb))


def refine_uniform(mesh):
    """Split each element into four (or each 1D element into two).

    Children sample the parent mapping on their reference sub-squares, so
    curved geometry is preserved as a mapping refinement; geometry nodes on
    faces carrying a boundary curve are re-snapped onto the analytic curve.
    """
    from .mesh1d import Mesh1D

    if isinstance(mesh, Mesh1D):
        return mesh.refine()

    pg = mesh.geometry_p
    g01 = geometry_nodes_1d(pg)
    snaps = {
        tag: _CURVE_SNAPS[name]
        for tag, name in mesh.boundary_curves.items()
        if name in _CURVE_SNAPS
    }

    def face_snap(e, s):
        tag = mesh.boundary_tags.get((e, s))
        return snaps.get(tag)

    verts = [mesh.vertices[i] for i in range(mesh.n_vertices)]
    aliases = dict(mesh.vertex_aliases)

    # one midpoint vertex per raw edge
    raw_edges: dict = {}
    for e in range(mesh.n_elements):
        for s in range(4):
            raw_edges.setdefault(_edge_key_raw(mesh, e, s), []).append((e, s))
    edge_mid: dict = {}
    for key, owners in raw_edges.items():
        e, s = owners[0]
        mid_ref = {0: (0.5, 0.0), 1: (1.0, 0.5), 2: (0.5, 1.0), 3: (0.0, 0.5)}[s]
        x, _ = evaluate_mapping(mesh, e, mid_ref)
        snap = None
        for eo, so in owners:
            snap = snap or face_snap(eo, so)
        if snap is not None:
            x = snap(x)
        edge_mid[key] = len(verts)
        verts.append(x)

    # periodic partner edges (same canonical key, different raw key) get
    # aliased midpoints so children identify across the seam
    canon_groups: dict = {}
    for key in raw_edges:
        ck = tuple(sorted(mesh.canonical_vertex(v) for v in key))
        canon_groups.setdefault(ck, []).append(key)
    for ck, keys in canon_groups.items():
        if len(keys) == 1:
            continue
        if len(keys) != 2:
            raise MeshError("cannot refine degenerate periodic identification")
        aliases[edge_mid[keys[1]]] = edge_mid[keys[0]]

    new_quads, new_geom, new_tags, new_qtags = [], [], {}, []
    child_sub = [(0, 0), (1, 0), (1, 1), (0, 1)]
    for e in range(mesh.n_elements):
        v = [int(mesh.quads[e, c]) for c in range(4)]
        m = [edge_mid[_edge_key_raw(mesh, e, s)] for s in range(4)]
        xc, _ = evaluate_mapping(mesh, e, (0.5, 0.5))
        c = len(verts)
        verts.append(xc)
        children = [
            [v[0], m[0], c, m[3]],
            [m[0], v[1], m[1], c],
            [c, m[1], v[2], m[2]],
            [m[3], c, m[2], v[3]],
        ]
        gm = mesh.element_geometry(e)
        for (cx, cy), quad in zip(child_sub, children):
            ce = len(new_quads)
            z1 = 0.5 * (cx + g01)
            z2 = 0.5 * (cy + g01)
            b1, _ = _transfer_matrices(g01, z1)
            b2, _ = _transfer_matrices(g01, z2)
            child_geo = np.einsum("Jb,Ia,bak->JIk", b2, b1, gm).reshape(-1, 2)
            # inherit boundary tags and snap curve-tagged child faces
            for s in range(4):
                on_parent = (
                    (s == 0 and cy == 0) or (s == 2 and cy == 1)
                    or (s == 3 and cx == 0) or (s == 1 and cx == 1)
                )
                if not on_parent:
                    continue
                tag = mesh.boundary_tags.get((e, s))
                if tag is None:
                    continue
                new_tags[(ce, s)] = tag
                snap = snaps.get(tag)
                if snap is not None:
                    idx = side_node_indices(pg, s)
                    child_geo[idx] = snap(child_geo[idx])
            new_quads.append(quad)
            new_geom.append(child_geo)
            new_qtags.append(mesh.quad_tags[e])
    return QuadMesh(
        vertices=np.array(verts),
        quads=np.array(new_quads),
        geometry_p=pg,
        geometry_nodes=np.array(new_geom),
        boundary_tags=new_tags,
        vertex_aliases=aliases,
        boundary_curves=dict(mesh.boundary_curves),
        quad_tags=new_qtags,
    )

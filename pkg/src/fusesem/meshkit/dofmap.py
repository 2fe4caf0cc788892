"""Global degree-of-freedom maps over quad meshes.

Nodes on element boundaries are shared, not repeated: corner dofs are keyed
by canonical mesh vertices, face dofs by canonical edges (matched through
the adjacency table, never by coordinate hashing), and interior dofs belong
to a single element.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .quadmesh import (
    MeshError,
    QuadMesh,
    SIDE_CORNERS,
    corner_index,
    mapping_at_nodes,
    side_node_indices,
)


class DofClass(enum.IntEnum):
    INTERIOR = 0
    FACE = 1
    CORNER = 2


@dataclass
class DofMap:
    """Element-to-global dof tables with node classification.

    ``elem_dofs[e]`` is the (p+1)^2 table of global ids in flat tensor order;
    ``owners[d]`` lists (element, flat local index) pairs for every element
    sharing dof d.  Coordinates come from the first owner's mapping.
    """

    p: int
    elem_dofs: np.ndarray = field(repr=False)
    total_dofs: int = 0
    coords: np.ndarray = field(repr=False, default=None)
    classification: np.ndarray = field(repr=False, default=None)
    owners: list = field(repr=False, default_factory=list)

    def dofs_on_boundary(self, mesh: QuadMesh, tags=None) -> np.ndarray:
        """Sorted global dofs lying on boundary faces, optionally tag-filtered."""
        out = set()
        for e, s in mesh.boundary_faces():
            tag = mesh.boundary_tags.get((e, s))
            if tags is not None and tag not in tags:
                continue
            for idx in side_node_indices(self.p, s):
                out.add(int(self.elem_dofs[e, idx]))
        return np.array(sorted(out), dtype=np.int64)


def _classify(p: int) -> np.ndarray:
    cls = np.full((p + 1, p + 1), DofClass.INTERIOR, dtype=np.int8)
    cls[0, :] = cls[p, :] = DofClass.FACE
    cls[:, 0] = cls[:, p] = DofClass.FACE
    for c in range(4):
        i = corner_index(p, c)
        cls.flat[i] = DofClass.CORNER
    return cls.reshape(-1)


def build_dof_map(mesh: QuadMesh, p: int) -> DofMap:
    """Assemble the shared-node dof map of degree p over the mesh."""
    if p < 1:
        raise ValueError("need p >= 1")
    ne = mesh.n_elements
    nn = (p + 1) ** 2
    elem_dofs = np.full((ne, nn), -1, dtype=np.int64)
    adjacency = mesh.adjacency()
    for key, owners in adjacency.items():
        if len(owners) > 2:
            raise MeshError(f"edge {key} shared by more than two elements")

    next_id = 0
    # corner dofs, keyed by canonical vertex
    vertex_dof: dict = {}
    cq = mesh.canonical_quads()
    for e in range(ne):
        for c in range(4):
            v = int(cq[e, c])
            if v not in vertex_dof:
                vertex_dof[v] = next_id
                next_id += 1
            elem_dofs[e, corner_index(p, c)] = vertex_dof[v]

    # face dofs, keyed by canonical edge; both owners enumerate their edge
    # nodes from the lower canonical endpoint to the higher one
    if p >= 2:
        for key in sorted(adjacency):
            owners = adjacency[key]
            ids = np.arange(next_id, next_id + p - 1)
            next_id += p - 1
            for e, s in owners:
                local = side_node_indices(p, s)[1:-1]
                va, vb = mesh.side_direction(e, s)
                if va == vb:
                    raise MeshError(
                        "degenerate periodic edge (a side's endpoints identify); "
                        "use at least two elements per periodic direction"
                    )
                if va > vb:
                    local = local[::-1]
                elem_dofs[e, local] = ids

    # interior dofs
    if p >= 2:
        inner = np.array(
            [i2 * (p + 1) + i1 for i2 in range(1, p) for i1 in range(1, p)],
            dtype=np.int64,
        )
        for e in range(ne):
            elem_dofs[e, inner] = np.arange(next_id, next_id + inner.size)
            next_id += inner.size

    if np.any(elem_dofs < 0):
        raise MeshError("dof table incomplete; inconsistent adjacency")

    owners_by_dof: list = [[] for _ in range(next_id)]
    for e in range(ne):
        for loc in range(nn):
            owners_by_dof[elem_dofs[e, loc]].append((e, loc))

    me = mapping_at_nodes(mesh, p)
    coords = np.empty((next_id, 2))
    for d, owner_list in enumerate(owners_by_dof):
        e, loc = owner_list[0]
        coords[d] = me.coords[e, loc]

    local_cls = _classify(p)
    classification = np.empty(next_id, dtype=np.int8)
    for e in range(ne):
        classification[elem_dofs[e]] = local_cls

    return DofMap(
        p=p,
        elem_dofs=elem_dofs,
        total_dofs=next_id,
        coords=coords,
        classification=classification,
        owners=owners_by_dof,
    )


def check_shared_dof_coords(mesh: QuadMesh, dofmap: DofMap, tol_rel: float = 1e-10):
    """Verify all owners of a shared dof map it to the same physical point.

    Dofs identified through vertex aliases (periodic seams) are exempt up to
    a constant translation.  Raises MeshError on mismatch.
    """
    me = mapping_at_nodes(mesh, p=dofmap.p)
    for d, owner_list in enumerate(dofmap.owners):
        if len(owner_list) < 2:
            continue
        pts = np.array([me.coords[e, loc] for e, loc in owner_list])
        gap = pts - pts[0]
        scale = max(mesh.diameter(e) for e, _ in owner_list)
        err = np.linalg.norm(gap, axis=1)
        if mesh.vertex_aliases:
            # drop exact periodic copies: distinct images must be far apart
            err = err[err < 0.5 * scale]
        if err.size and err.max() > tol_rel * scale:
            raise MeshError(f"shared dof {d} has inconsistent coordinates")

"""1D interval meshes with shared element-boundary nodes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..refelem import ReferenceElement


@dataclass(frozen=True)
class Mesh1D:
    """Partition of an interval into elements; optionally periodic.

    With a degree-p element the global dofs are the element nodes with the
    shared boundary nodes counted once: n*p + 1 dofs, or n*p when the two
    domain endpoints are identified periodically.
    """

    element_breaks: np.ndarray = field(repr=False)
    periodic: bool = False

    def __post_init__(self):
        b = np.asarray(self.element_breaks, dtype=float)
        if b.ndim != 1 or b.size < 2:
            raise ValueError("need at least one element")
        if np.any(np.diff(b) <= 0):
            raise ValueError("element breaks must be strictly increasing")
        object.__setattr__(self, "element_breaks", b)

    @property
    def n_elements(self) -> int:
        return self.element_breaks.size - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.element_breaks[0]), float(self.element_breaks[-1])

    def element_width(self, k: int) -> float:
        return float(self.element_breaks[k + 1] - self.element_breaks[k])

    def dof_count(self, p: int) -> int:
        n = self.n_elements * p
        return n if self.periodic else n + 1

    def dof_ids(self, p: int) -> np.ndarray:
        """Global dof ids per element, shape (n_elements, p+1).

        Element k holds nodes k*p .. k*p + p; the last node of the final
        element wraps to dof 0 on periodic meshes.
        """
        n = self.n_elements
        ids = (np.arange(n)[:, None] * p) + np.arange(p + 1)[None, :]
        if self.periodic:
            ids %= n * p
        return ids

    def dof_coords(self, ref: ReferenceElement) -> np.ndarray:
        """Physical coordinates of the global dofs, in dof-id order."""
        p = ref.degree
        coords = np.empty(self.dof_count(p))
        ids = self.dof_ids(p)
        b = self.element_breaks
        for k in range(self.n_elements):
            x = 0.5 * (b[k] + b[k + 1]) + 0.5 * (b[k + 1] - b[k]) * ref.nodes.coords
            coords[ids[k]] = x
        # shared nodes are written twice with identical affine images except
        # for the periodic wrap, where the first element's left end wins
        if self.periodic:
            coords[0] = b[0]
        return coords

    def refine(self) -> "Mesh1D":
        """Split every element in two."""
        b = self.element_breaks
        mid = 0.5 * (b[:-1] + b[1:])
        newb = np.empty(2 * self.n_elements + 1)
        newb[0::2] = b
        newb[1::2] = mid
        return Mesh1D(element_breaks=newb, periodic=self.periodic)


def build_mesh_1d(n: int, domain: tuple[float, float], periodic: bool = False) -> Mesh1D:
    """Uniform mesh of n elements over the given interval."""
    if n < 1:
        raise ValueError(f"need n >= 1 elements, got {n}")
    a, b = domain
    if not a < b:
        raise ValueError(f"empty domain ({a}, {b})")
    return Mesh1D(element_breaks=np.linspace(a, b, n + 1), periodic=periodic)

"""Velocity fields driving the upwind direction choices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class VelocityField:
    """Evaluation rule for the upwinding velocity at arbitrary points.

    ``dim`` is the spatial dimension; evaluation takes an (N, dim) array of
    points (or (N,) in 1D) and returns velocities of the same shape.
    """

    dim: int
    _fn: callable

    @classmethod
    def constant(cls, value) -> "VelocityField":
        arr = np.atleast_1d(np.asarray(value, dtype=float))
        if arr.size == 1:
            a = float(arr[0])
            return cls(dim=1, _fn=lambda x: np.full(np.shape(x)[:1] or (1,), a))
        if arr.size == 2:
            v = arr.copy()
            return cls(dim=2, _fn=lambda x: np.broadcast_to(v, (np.shape(x)[0], 2)).copy())
        raise ValueError("constant velocity must be a scalar or a 2-vector")

    @classmethod
    def from_callable(cls, fn, dim: int) -> "VelocityField":
        return cls(dim=dim, _fn=fn)

    def at(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        vals = np.asarray(self._fn(pts), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("velocity field evaluated to a non-finite value")
        return vals


def random_unit_velocity(seed: int = 20240101) -> VelocityField:
    """Seeded random unit vector for the operator-splitting direction.

    The draw is a single uniform angle from a 64-bit PCG stream, so the
    direction is reproducible and almost surely aligned with no mesh line.
    """
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    return VelocityField.constant((np.cos(theta), np.sin(theta)))

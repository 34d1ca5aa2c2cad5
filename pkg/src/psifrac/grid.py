"""Tensor-product meshes and sampled scalar fields."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from psifrac.exceptions import ConfigError, ValidationError

__all__ = ["graded_nodes", "Grid2D", "GridFn"]


def graded_nodes(lo: float, hi: float, n: int, grading: float = 2.0) -> np.ndarray:
    """``n`` nodes on ``[lo, hi]`` clustered toward ``lo``: ``lo + (hi - lo) (i/(n-1))**grading``."""
    if n < 2:
        raise ConfigError(f"need at least 2 nodes, got {n}")
    if not hi > lo:
        raise ConfigError(f"empty interval [{lo}, {hi}]")
    if grading < 1.0:
        raise ConfigError(f"grading exponent must be >= 1, got {grading}")
    s = np.linspace(0.0, 1.0, n) ** grading
    nodes = lo + (hi - lo) * s
    nodes[-1] = hi
    return nodes


@dataclass(frozen=True)
class Grid2D:
    """Graded tensor-product mesh on ``[x0, a] x [y0, b]``.

    The base point of every fractional operator on this grid is its lower-left
    corner ``(x0, y0)``.
    """

    a: float
    b: float
    nx: int = 128
    ny: int = 128
    grading: float = 2.0
    x0: float = 0.0
    y0: float = 0.0
    x: np.ndarray = field(init=False, repr=False, compare=False)
    y: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", graded_nodes(self.x0, self.a, self.nx, self.grading))
        object.__setattr__(self, "y", graded_nodes(self.y0, self.b, self.ny, self.grading))
        self.x.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(X, Y)`` coordinate arrays of shape ``(nx, ny)``."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    def sample(self, fn) -> "GridFn":
        X, Y = self.mesh()
        return GridFn(self, np.broadcast_to(fn(X, Y), self.shape).astype(float))

    def index_of(self, x: float, y: float) -> tuple[int, int]:
        """Indices of the node ``(x, y)``; raises if it is not a grid node."""
        i = int(np.argmin(np.abs(self.x - x)))
        j = int(np.argmin(np.abs(self.y - y)))
        tol = 1.0e-12 * max(1.0, abs(self.a), abs(self.b))
        if abs(self.x[i] - x) > tol or abs(self.y[j] - y) > tol:
            raise ValidationError(f"({x}, {y}) is not a node of the grid")
        return i, j

    def coarsen(self) -> tuple["Grid2D", np.ndarray, np.ndarray]:
        """Every other node (endpoints kept) with index maps into this grid."""
        ix = np.unique(np.r_[np.arange(0, self.nx, 2), self.nx - 1])
        iy = np.unique(np.r_[np.arange(0, self.ny, 2), self.ny - 1])
        return _SubGrid(self, ix, iy), ix, iy

    def to_config(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "grading": self.grading}


class _SubGrid(Grid2D):
    # a Grid2D whose nodes are an index subset of a parent grid
    def __init__(self, parent: Grid2D, ix: np.ndarray, iy: np.ndarray):
        object.__setattr__(self, "a", parent.a)
        object.__setattr__(self, "b", parent.b)
        object.__setattr__(self, "nx", len(ix))
        object.__setattr__(self, "ny", len(iy))
        object.__setattr__(self, "grading", parent.grading)
        object.__setattr__(self, "x0", parent.x0)
        object.__setattr__(self, "y0", parent.y0)
        object.__setattr__(self, "x", parent.x[ix])
        object.__setattr__(self, "y", parent.y[iy])


@dataclass(frozen=True)
class GridFn:
    """Samples of a scalar field on a :class:`Grid2D`."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValidationError(f"values have shape {v.shape}, grid is {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("grid function contains non-finite values")
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def at(self, x: float, y: float) -> float:
        i, j = self.grid.index_of(x, y)
        return float(self.values[i, j])

    def interpolate(self, points) -> np.ndarray:
        """Bilinear interpolation at ``points`` of shape ``(m, 2)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        gx, gy = self.grid.x, self.grid.y
        i = np.clip(np.searchsorted(gx, pts[:, 0]) - 1, 0, len(gx) - 2)
        j = np.clip(np.searchsorted(gy, pts[:, 1]) - 1, 0, len(gy) - 2)
        tx = (pts[:, 0] - gx[i]) / (gx[i + 1] - gx[i])
        ty = (pts[:, 1] - gy[j]) / (gy[j + 1] - gy[j])
        v = self.values
        return (
            (1 - tx) * (1 - ty) * v[i, j]
            + tx * (1 - ty) * v[i + 1, j]
            + (1 - tx) * ty * v[i, j + 1]
            + tx * ty * v[i + 1, j + 1]
        )

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

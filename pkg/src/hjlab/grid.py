"""Uniform rectangular grids on boxes and scalar fields on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Grid", "GridFunction", "load_grid_function"]


@dataclass(frozen=True)
class Grid:
    """Uniform grid on a box, 1D or 2D. ``n_cells`` cells per axis, so
    ``n_cells + 1`` nodes; node i sits at ``lower + i * h`` exactly."""

    lower: tuple
    upper: tuple
    n_cells: tuple

    def __init__(self, lower, upper, n_cells):
        lower = tuple(float(v) for v in np.atleast_1d(lower))
        upper = tuple(float(v) for v in np.atleast_1d(upper))
        n_cells = tuple(int(v) for v in np.atleast_1d(n_cells))
        if not (len(lower) == len(upper) == len(n_cells)):
            raise ValueError("lower/upper/n_cells length mismatch")
        if len(lower) not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        if any(n < 4 for n in n_cells):
            raise ValueError("need at least 4 cells per axis")
        if any(u <= l for l, u in zip(lower, upper)):
            raise ValueError("upper must exceed lower on every axis")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "n_cells", n_cells)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def spacing(self) -> tuple:
        return tuple((u - l) / n for l, u, n in zip(self.lower, self.upper, self.n_cells))

    @property
    def shape(self) -> tuple:
        return tuple(n + 1 for n in self.n_cells)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    def axis_nodes(self, axis: int) -> np.ndarray:
        l, h, n = self.lower[axis], self.spacing[axis], self.n_cells[axis]
        return l + h * np.arange(n + 1)

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape (n_nodes, dim), row-major (C order)."""
        axes = [self.axis_nodes(a) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def interior_nodes(self) -> np.ndarray:
        axes = [self.axis_nodes(a)[1:-1] for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for a in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[a] = 0
            mask[tuple(sl)] = True
            sl[a] = -1
            mask[tuple(sl)] = True
        return mask

    def node_coords(self, index) -> np.ndarray:
        index = np.atleast_1d(index)
        return np.array([self.lower[a] + self.spacing[a] * index[a] for a in range(self.dim)])

    def is_interior(self, index) -> bool:
        index = np.atleast_1d(index)
        return all(0 < index[a] < self.n_cells[a] for a in range(self.dim))


@dataclass(frozen=True)
class GridFunction:
    """Real scalar field sampled at grid nodes."""

    grid: Grid
    values: np.ndarray = field()

    def __init__(self, grid: Grid, values):
        v = np.asarray(values, dtype=float)
        if v.shape != grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", v)

    @staticmethod
    def from_callable(grid: Grid, fn) -> "GridFunction":
        """Sample ``fn`` at all nodes; fn maps (n, dim) points to (n,) values."""
        pts = grid.nodes()
        vals = np.asarray(fn(pts), dtype=float).reshape(grid.shape)
        return GridFunction(grid, vals)

    @staticmethod
    def constant(grid: Grid, c: float) -> "GridFunction":
        return GridFunction(grid, np.full(grid.shape, float(c)))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __add__(self, other):
        o = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.grid, self.values + o)

    def __sub__(self, other):
        o = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.grid, self.values - o)

    def to_csv(self, path) -> None:
        """Write "x[,y],value" rows (row-major over nodes, 17 significant digits)."""
        pts = self.grid.nodes()
        vals = self.values.ravel()
        header = "x,value" if self.grid.dim == 1 else "x,y,value"
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for p, v in zip(pts, vals):
                coords = ",".join("%.17g" % c for c in p)
                fh.write(f"{coords},{'%.17g' % v}\n")


def _infer_axis(coords: np.ndarray) -> tuple[float, float, int]:
    vals = np.unique(coords)
    if len(vals) < 5:
        raise ValueError("too few distinct coordinates to infer a grid axis")
    steps = np.diff(vals)
    h = steps[0]
    if not np.allclose(steps, h, rtol=1e-9, atol=1e-12):
        raise ValueError("node coordinates are not uniformly spaced")
    return float(vals[0]), float(vals[-1]), len(vals) - 1


def load_grid_function(path) -> GridFunction:
    """Read a solution CSV ("x[,y],value") back onto an inferred uniform grid."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if header == ["x", "value"] and data.shape[1] == 2:
        lo, hi, n = _infer_axis(data[:, 0])
        grid = Grid([lo], [hi], [n])
        order = np.argsort(data[:, 0], kind="stable")
        return GridFunction(grid, data[order, 1].reshape(grid.shape))
    if header == ["x", "y", "value"] and data.shape[1] == 3:
        lox, hix, nx = _infer_axis(data[:, 0])
        loy, hiy, ny = _infer_axis(data[:, 1])
        grid = Grid([lox, loy], [hix, hiy], [nx, ny])
        order = np.lexsort((data[:, 1], data[:, 0]))
        return GridFunction(grid, data[order, 2].reshape(grid.shape))
    raise ValueError(f"unrecognized solution CSV header: {header}")

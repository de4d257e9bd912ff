"""Gaussian random fields on regular grids by dense Cholesky factorization.

Grid points are enumerated in row-major order over the realized axes (the
last axis varies fastest). A slice ``(axis, value)`` pins one axis of the
domain to a constant and realizes the remaining axes.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, linalg
from .errors import DimensionMismatch, NotPositiveDefinite, ParamOutOfRange
from .rng import stream
from .validation import OracleReport

__all__ = ["GridSpec", "FieldRealization", "simulate", "simulate_many",
           "empirical_cov_check", "toeplitz_deviation", "write_outputs"]

MAX_POINTS = 4096


@dataclass(frozen=True)
class GridSpec:
    """Regular grid over the domain axes.

    ``dims`` lists ``(min, max, n_cells)`` per domain axis; ``slice``
    optionally fixes one domain axis to a value, removing it from the
    realized grid. ``names`` labels the domain axes.
    """

    dims: tuple
    slice: tuple | None = None
    names: tuple | None = None

    def __post_init__(self):
        dims = tuple((float(a), float(b), int(n)) for a, b, n in self.dims)
        object.__setattr__(self, "dims", dims)
        if not 1 <= len(dims) <= 4:
            raise ParamOutOfRange("grids have between 1 and 4 domain axes")
        if any(n < 2 for _, _, n in dims):
            raise ParamOutOfRange("every axis needs n_cells >= 2")
        if self.slice is not None:
            axis, value = self.slice
            object.__setattr__(self, "slice", (int(axis), float(value)))
            if not 0 <= int(axis) < len(dims):
                raise ParamOutOfRange("slice axis out of range")
        if len(self.realized_axes) > 3:
            raise ParamOutOfRange("at most 3 realized axes")
        if self.n_points > MAX_POINTS:
            raise ParamOutOfRange(f"grid has {self.n_points} points, cap is {MAX_POINTS}")
        if self.names is None:
            object.__setattr__(self, "names", tuple(f"x{i + 1}" for i in range(len(dims))))
        elif len(self.names) != len(dims):
            raise ParamOutOfRange("one name per domain axis")

    @property
    def d(self):
        return len(self.dims)

    @property
    def realized_axes(self):
        skip = None if self.slice is None else self.slice[0]
        return tuple(i for i in range(len(self.dims)) if i != skip)

    @property
    def shape(self):
        return tuple(self.dims[i][2] for i in self.realized_axes)

    @property
    def n_points(self):
        return int(np.prod(self.shape))

    def axis_values(self, i):
        a, b, n = self.dims[i]
        return np.linspace(a, b, n)

    def points(self):
        """``(n_points, d)`` domain coordinates in row-major order."""
        axes = [self.axis_values(i) for i in self.realized_axes]
        mesh = np.meshgrid(*axes, indexing="ij")
        flat = [m.ravel() for m in mesh]
        cols, k = [], 0
        for i in range(self.d):
            if self.slice is not None and i == self.slice[0]:
                cols.append(np.full(self.n_points, self.slice[1]))
            else:
                cols.append(flat[k])
                k += 1
        return np.stack(cols, axis=-1)

    def to_dict(self):
        return {"dims": [list(t) for t in self.dims],
                "slice": None if self.slice is None else list(self.slice),
                "names": list(self.names)}


@dataclass
class FieldRealization:
    grid: GridSpec
    values: np.ndarray
    seed: int
    kernel_name: str
    jitter_used: float
    extra: dict = field(default_factory=dict)

    def as_array(self):
        return self.values.reshape(self.grid.shape)


def _factor(K, grid):
    if K.m != 1:
        raise DimensionMismatch("simulation needs a univariate kernel")
    if K.d != grid.d:
        raise DimensionMismatch(f"kernel has d={K.d}, grid has {grid.d} axes")
    G = kernels.gram(K, grid.points())
    try:
        F = linalg.cholesky(G, allow_jitter=True)
    except NotPositiveDefinite as exc:
        report = kernels.gram_report(G, 1)
        raise NotPositiveDefinite(f"{K.name}: Gram matrix on the grid is not PSD",
                                  context=report.to_dict()) from exc
    return G, F


def simulate(K, grid, seed):
    """One realization ``L z`` with ``L L^T`` the (jittered) Gram matrix over the grid."""
    G, F = _factor(K, grid)
    z = stream(seed, "simulate").normal((grid.n_points,))
    values = F.L @ z
    mean_diag = float(np.trace(G) / G.shape[0])
    return FieldRealization(grid, values, int(seed), K.name, F.jitter,
                            {"jitter_rel": F.jitter / mean_diag if mean_diag > 0 else 0.0})


def simulate_many(K, grid, n, seed):
    """``(n, n_points)`` realizations sharing one factorization."""
    _, F = _factor(K, grid)
    Z = stream(seed, "simulate-many").normal((n, grid.n_points))
    return Z @ F.L.T, F.jitter


def empirical_cov_check(K, grid, n_realizations=2000, seed=0, n_pairs=20, n_se=5.0):
    """Sample covariance of simulated fields against the kernel at random grid pairs.

    The first pair is a diagonal ``(x, x)`` pair. Standard errors are the
    sample standard deviation of ``Z(x) Z(y)`` divided by ``sqrt(n)``.
    """
    if n_realizations < 500:
        raise ParamOutOfRange("n_realizations must be >= 500")
    Z, _ = simulate_many(K, grid, n_realizations, seed)
    pts = grid.points()
    s = stream(seed, "pairs")
    n = grid.n_points
    idx = np.minimum((s.uniform((n_pairs, 2)) * n).astype(int), n - 1)
    idx[0, 1] = idx[0, 0]
    worst, worst_abs = 0.0, 0.0
    for p, q in idx:
        prod = Z[:, p] * Z[:, q]
        est = float(prod.mean())
        se = float(prod.std(ddof=1) / math.sqrt(n_realizations))
        truth = float(K(pts[p], pts[q])[0, 0])
        diff = abs(est - truth)
        worst_abs = max(worst_abs, diff)
        worst = max(worst, diff / se if se > 0 else (0.0 if diff < 1e-12 else math.inf))
    return OracleReport(f"empirical-cov[{K.name}]", n_pairs, worst_abs, n_se, worst <= n_se,
                        int(seed), worst)


def toeplitz_deviation(K, grid):
    """Max deviation of the Gram matrix from the block-Toeplitz structure of a regular grid.

    For a translation invariant kernel, Gram entries depend only on the
    index offset between grid points; the deviation compares each entry
    against the entry sharing its offset pattern with the first point.
    """
    pts = grid.points()
    G = kernels.gram(K, pts)
    shape = grid.shape
    idx = np.stack(np.unravel_index(np.arange(grid.n_points), shape), axis=-1)
    offsets = idx[:, None, :] - idx[None, :, :]
    key = np.ravel_multi_index(tuple((offsets + np.array(shape) - 1).transpose(2, 0, 1)),
                               tuple(2 * np.array(shape) - 1))
    ref = np.full(key.max() + 1, np.nan)
    flat_key, flat_g = key.ravel(), G.ravel()
    ref[flat_key[::-1]] = flat_g[::-1]
    return float(np.max(np.abs(flat_g - ref[flat_key])))


def _pgm_bytes(frame, lo, hi):
    span = hi - lo
    scaled = np.zeros(frame.shape) if span == 0 else (frame - lo) / span
    data = np.clip(np.rint(scaled * 255.0), 0, 255).astype(np.uint8)
    if data.ndim == 1:
        data = data[None, :]
    h, w = data.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + data.tobytes()


def write_outputs(real, prefix):
    """Write ``prefix.csv``, PGM image(s) and ``prefix.json``; returns the paths.

    A 3-axis realization is written as a stack of numbered PGM frames
    along its first realized axis.
    """
    grid = real.grid
    pts = grid.points()
    names = list(grid.names)
    paths = []
    csv_path = f"{prefix}.csv"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# row-major over {','.join(names[i] for i in grid.realized_axes)}; "
                 "last axis fastest\n")
        fh.write(",".join(names + ["value"]) + "\n")
        for p, v in zip(pts, real.values):
            fh.write(",".join(repr(float(c)) for c in p) + "," + repr(float(v)) + "\n")
    paths.append(csv_path)
    lo, hi = float(real.values.min()), float(real.values.max())
    arr = real.as_array()
    if arr.ndim == 3:
        for k in range(arr.shape[0]):
            path = f"{prefix}_{k:03d}.pgm"
            with open(path, "wb") as fh:
                fh.write(_pgm_bytes(arr[k], lo, hi))
            paths.append(path)
    else:
        path = f"{prefix}.pgm"
        with open(path, "wb") as fh:
            fh.write(_pgm_bytes(arr, lo, hi))
        paths.append(path)
    meta = {"kernel": real.kernel_name, "seed": real.seed, "grid": grid.to_dict(),
            "min": lo, "max": hi, "jitter": real.jitter_used,
            "jitter_rel": real.extra.get("jitter_rel", 0.0), "order": "row-major, last axis fastest"}
    meta_path = f"{prefix}.json"
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(meta_path)
    return paths

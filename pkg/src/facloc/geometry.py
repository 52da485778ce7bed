"""Points in the unit square, a uniform-cell spatial index, and ball queries."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class EmptyInputError(ValueError):
    pass


class PointFormatError(ValueError):
    """Malformed or out-of-square row in a points CSV."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class Point(NamedTuple):
    x: float
    y: float


def dist(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def default_cell_size(n: int) -> float:
    # expected radius scale is n^(-1/3)
    return 1.0 / math.ceil(max(n, 1) ** (1.0 / 3.0) - 1e-9)


def _cell_keys(coords: np.ndarray, cell_size: float) -> np.ndarray:
    return np.floor(coords / cell_size).astype(np.int64)


class PointSet:
    """Immutable ordered point collection with a uniform grid index.

    Cells are half-open, ``[k*s, (k+1)*s)`` on each axis, so a point at
    coordinate 1.0 lands in an extra cell past the last full one.
    """

    __slots__ = ("_coords", "cell_size", "cells", "_lo", "_hi")

    def __init__(self, coords: np.ndarray, cell_size: float):
        if not cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {cell_size!r}")
        coords = np.array(coords, dtype=np.float64).reshape(-1, 2)
        coords.setflags(write=False)
        self._coords = coords
        self.cell_size = float(cell_size)
        self.cells: dict[tuple[int, int], np.ndarray] = {}
        if len(coords):
            keys = _cell_keys(coords, self.cell_size)
            order = np.lexsort((np.arange(len(coords)), keys[:, 1], keys[:, 0]))
            sk = keys[order]
            breaks = np.flatnonzero(np.any(sk[1:] != sk[:-1], axis=1)) + 1
            for chunk in np.split(order, breaks):
                idx = np.sort(chunk)
                idx.setflags(write=False)
                self.cells[(int(keys[idx[0], 0]), int(keys[idx[0], 1]))] = idx
            self._lo = keys.min(axis=0)
            self._hi = keys.max(axis=0)
        else:
            self._lo = np.zeros(2, dtype=np.int64)
            self._hi = np.zeros(2, dtype=np.int64)

    @property
    def coords(self) -> np.ndarray:
        """Read-only ``(n, 2)`` array of coordinates."""
        return self._coords

    @property
    def points(self) -> list[Point]:
        return [Point(float(x), float(y)) for x, y in self._coords]

    @property
    def cell_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Lowest and highest occupied cell coordinate on each axis."""
        return self._lo, self._hi

    def __len__(self) -> int:
        return len(self._coords)

    def __getitem__(self, i: int) -> Point:
        x, y = self._coords[i]
        return Point(float(x), float(y))

    def __repr__(self) -> str:
        return f"PointSet(n={len(self)}, cell_size={self.cell_size:.6g})"

    def cell_of(self, p: Sequence[float]) -> tuple[int, int]:
        return (math.floor(p[0] / self.cell_size), math.floor(p[1] / self.cell_size))

    def block(self, cx: int, cy: int, ring: int) -> np.ndarray:
        """Indices stored in the ``(2*ring+1)^2`` cells around ``(cx, cy)``."""
        lo, hi = self._lo, self._hi
        parts = []
        for i in range(max(cx - ring, lo[0]), min(cx + ring, hi[0]) + 1):
            for j in range(max(cy - ring, lo[1]), min(cy + ring, hi[1]) + 1):
                idx = self.cells.get((i, j))
                if idx is not None:
                    parts.append(idx)
        if not parts:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(parts)

    def covered_radius(self, p: np.ndarray, cx: int, cy: int, ring: int) -> np.ndarray | float:
        """Radius around ``p`` (one point or an ``(m, 2)`` array) inside the scanned block.

        Sides of the block that already reach past the occupied cells are
        unbounded, since no stored point lies beyond them.
        """
        p = np.asarray(p, dtype=np.float64)
        s = self.cell_size
        lo, hi = self._lo, self._hi
        out = np.full(p.shape[:-1], np.inf)
        if cx - ring > lo[0]:
            out = np.minimum(out, p[..., 0] - (cx - ring) * s)
        if cx + ring < hi[0]:
            out = np.minimum(out, (cx + ring + 1) * s - p[..., 0])
        if cy - ring > lo[1]:
            out = np.minimum(out, p[..., 1] - (cy - ring) * s)
        if cy + ring < hi[1]:
            out = np.minimum(out, (cy + ring + 1) * s - p[..., 1])
        return out if out.ndim else float(out)

    def with_point(self, p: Sequence[float]) -> "PointSet":
        """New set with ``p`` appended, keeping this set's cell size."""
        coords = np.vstack([self._coords, np.asarray(p, dtype=np.float64).reshape(1, 2)])
        return PointSet(coords, self.cell_size)


def build_index(points: Iterable[Sequence[float]] | np.ndarray, cell_size: float | None = None) -> PointSet:
    coords = np.asarray(list(points) if not isinstance(points, np.ndarray) else points, dtype=np.float64)
    coords = coords.reshape(-1, 2)
    if cell_size is None:
        cell_size = default_cell_size(len(coords))
    return PointSet(coords, cell_size)


def uniform_sample(n: int, seed: int, cell_size: float | None = None) -> PointSet:
    """``n`` i.i.d. uniform points, a pure function of ``(n, seed)``."""
    if n < 1:
        raise EmptyInputError("uniform_sample needs n >= 1")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    return build_index(rng.random((n, 2)), cell_size)


def ball_query(X: PointSet, center: Sequence[float], r: float) -> list[int]:
    """Indices within the closed ball of radius ``r``, ascending."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if not len(X):
        return []
    s = X.cell_size
    lo, hi = X.cell_bounds
    i0 = max(math.floor((center[0] - r) / s), int(lo[0]))
    i1 = min(math.floor((center[0] + r) / s), int(hi[0]))
    j0 = max(math.floor((center[1] - r) / s), int(lo[1]))
    j1 = min(math.floor((center[1] + r) / s), int(hi[1]))
    parts = [X.cells[(i, j)] for i in range(i0, i1 + 1) for j in range(j0, j1 + 1) if (i, j) in X.cells]
    if not parts:
        return []
    cand = np.concatenate(parts)
    c = X.coords[cand]
    d = np.hypot(c[:, 0] - center[0], c[:, 1] - center[1])
    return sorted(cand[d <= r].tolist())


def grid_points(k: int) -> list[Point]:
    """Centers of the ``m x m`` grid with ``m = ceil(sqrt(k))``, row by row in y."""
    if k < 1:
        raise ValueError("k must be >= 1")
    m = math.isqrt(k - 1) + 1
    return [Point((i + 0.5) / m, (j + 0.5) / m) for j in range(m) for i in range(m)]


def format_float(v: float) -> str:
    # shortest string that round-trips
    return repr(float(v))


def write_points_csv(path: str | Path | None, points: PointSet | np.ndarray) -> str:
    coords = points.coords if isinstance(points, PointSet) else np.asarray(points).reshape(-1, 2)
    lines = ["x,y"] + [f"{format_float(x)},{format_float(y)}" for x, y in coords]
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def parse_points_csv(text: str) -> np.ndarray:
    reader = csv.reader(io.StringIO(text))
    rows = []
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if not header_seen:
            if [c.strip() for c in row] != ["x", "y"]:
                raise PointFormatError(lineno, f"expected header 'x,y', got {','.join(row)!r}")
            header_seen = True
            continue
        if len(row) != 2:
            raise PointFormatError(lineno, f"expected 2 fields, got {len(row)}")
        try:
            x, y = float(row[0]), float(row[1])
        except ValueError:
            raise PointFormatError(lineno, f"non-numeric value in {','.join(row)!r}") from None
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise PointFormatError(lineno, f"point ({x}, {y}) outside the unit square")
        rows.append((x, y))
    if not header_seen:
        raise PointFormatError(1, "missing header 'x,y'")
    return np.array(rows, dtype=np.float64).reshape(-1, 2)


def read_points_csv(path: str | Path, cell_size: float | None = None) -> PointSet:
    return build_index(parse_points_csv(Path(path).read_text()), cell_size)

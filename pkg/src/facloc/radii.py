"""Per-point radii: the r at which the summed slack sum_q max(0, r - |p - q|) reaches 1.

The sum always includes p itself at distance 0, so every radius lies in (0, 1].
On a sorted distance list d_1 = 0 <= d_2 <= ... the slack is the piecewise
linear k*r - (d_1 + ... + d_k) between d_k and d_{k+1}, which gives the exact
root without iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import EmptyInputError, PointSet


@dataclass(frozen=True)
class RadiusProfile:
    radii: np.ndarray
    sum_r: float
    sum_r_sq: float

    @classmethod
    def from_radii(cls, radii) -> "RadiusProfile":
        radii = np.array(radii, dtype=np.float64)
        radii.setflags(write=False)
        return cls(radii, float(radii.sum()), float(np.dot(radii, radii)))

    def __len__(self) -> int:
        return len(self.radii)

    @property
    def max_r(self) -> float:
        return float(self.radii.max())

    @property
    def min_r(self) -> float:
        return float(self.radii.min())

    def summary(self) -> dict:
        return {
            "n": len(self.radii),
            "sum_r": self.sum_r,
            "sum_r_sq": self.sum_r_sq,
            "max_r": self.max_r,
            "min_r": self.min_r,
        }


def solve_sorted(d: np.ndarray) -> float:
    """Root of the slack equation for an ascending distance list (``d[0] == 0``)."""
    k = np.arange(1, len(d) + 1)
    cand = (1.0 + np.cumsum(d)) / k
    nxt = np.append(d[1:], np.inf)
    return float(cand[np.argmax(cand <= nxt)])


def solve_sorted_rows(d: np.ndarray) -> np.ndarray:
    """Row-wise :func:`solve_sorted`; rows may be padded with ``inf``."""
    m, K = d.shape
    cand = (1.0 + np.cumsum(d, axis=1)) / np.arange(1, K + 1)
    nxt = np.empty_like(d)
    nxt[:, :-1] = d[:, 1:]
    nxt[:, -1] = np.inf
    first = np.argmax(cand <= nxt, axis=1)
    return cand[np.arange(m), first]


def _check_index(X: PointSet, i: int) -> None:
    if not (0 <= i < len(X)):
        raise IndexError(f"point index {i} out of range for {len(X)} points")


def radius_of(X: PointSet, i: int) -> float:
    _check_index(X, i)
    p = X.coords[i]
    cx, cy = X.cell_of(p)
    ring = 1
    while True:
        cand = X.block(cx, cy, ring)
        c = X.coords[cand]
        dx = c[:, 0] - p[0]
        dy = c[:, 1] - p[1]
        r = solve_sorted(np.sqrt(np.sort(dx * dx + dy * dy)))
        # unscanned points sit beyond the covered radius, so they add nothing at r
        if r <= X.covered_radius(p, cx, cy, ring):
            return r
        ring += 1


def slack(X: PointSet, i: int, r: float) -> float:
    """Linear-scan evaluation of the summed slack at radius ``r``."""
    p = X.coords[i]
    d = np.hypot(X.coords[:, 0] - p[0], X.coords[:, 1] - p[1])
    return float(np.sum(np.maximum(r - d, 0.0)))


def radius_bisect_oracle(X: PointSet, i: int, tol: float = 1e-10) -> float:
    """Bisection on the slack over ``[0, 1]``; test oracle only."""
    _check_index(X, i)
    if not tol > 0:
        raise ValueError("tol must be positive")
    lo, hi = 0.0, 1.0
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if slack(X, i, mid) < 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _cell_radii(X: PointSet, key: tuple[int, int], members: np.ndarray) -> np.ndarray:
    cx, cy = key
    out = np.empty(len(members))
    todo = np.arange(len(members))
    ring = 1
    while len(todo):
        idx = members[todo]
        P = X.coords[idx]
        cand = X.block(cx, cy, ring)
        C = X.coords[cand]
        dx = P[:, 0, None] - C[None, :, 0]
        dy = P[:, 1, None] - C[None, :, 1]
        d2 = dx * dx + dy * dy
        d2.sort(axis=1)
        r = solve_sorted_rows(np.sqrt(d2))
        cover = X.covered_radius(P, cx, cy, ring)
        ok = r <= cover
        out[todo[ok]] = r[ok]
        todo = todo[~ok]
        ring += 1
    return out


def all_radii(X: PointSet) -> RadiusProfile:
    if not len(X):
        raise EmptyInputError("all_radii needs a nonempty point set")
    radii = np.empty(len(X))
    for key, members in X.cells.items():
        radii[members] = _cell_radii(X, key, members)
    return RadiusProfile.from_radii(radii)


def radius_after_insert(X: PointSet, profile: RadiusProfile, p) -> tuple[PointSet, RadiusProfile]:
    """Extend ``X`` by ``p`` and update radii where they can change.

    Only points q with ``|q - p| < r_q`` see a new term in their slack sum
    below their old root; all others keep their radius exactly.
    """
    p = np.asarray(p, dtype=np.float64).reshape(2)
    if len(X) == 0:
        Y = X.with_point(p)
        return Y, RadiusProfile.from_radii([1.0])
    Y = X.with_point(p)
    old = profile.radii
    d = np.hypot(X.coords[:, 0] - p[0], X.coords[:, 1] - p[1])
    touched = np.flatnonzero(d < old)
    radii = np.append(old, 0.0)
    for q in touched:
        radii[q] = radius_of(Y, int(q))
    radii[-1] = radius_of(Y, len(X))
    delta = radii[touched] - old[touched]
    new_r = radii[-1]
    radii.setflags(write=False)
    return Y, RadiusProfile(
        radii,
        profile.sum_r + float(delta.sum()) + new_r,
        profile.sum_r_sq + float(np.dot(radii[touched], radii[touched]) - np.dot(old[touched], old[touched])) + new_r * new_r,
    )


def ball_counts(coords: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Brute-force ``|B(p, r_p)|`` for each point (closed balls)."""
    d = np.hypot(coords[:, 0, None] - coords[None, :, 0], coords[:, 1, None] - coords[None, :, 1])
    return np.count_nonzero(d <= radii[:, None], axis=1)


def expected_radius_bulk(n: int) -> float:
    """Interior radius for density ``n``: n * pi * r^3 / 3 = 1."""
    return (3.0 / (math.pi * n)) ** (1.0 / 3.0)

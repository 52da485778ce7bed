"""Solvers for min over F of |F| + sum_x min_f |x - f|.

``exact_cost`` lets facilities sit anywhere and is only feasible for tiny
inputs; ``restricted_exact`` forces facilities onto input points;
``mp_greedy`` and ``grid_cost`` are the scalable approximations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .geometry import EmptyInputError, Point, PointSet, grid_points
from .radii import RadiusProfile

EXACT_LIMIT = 10
RESTRICTED_LIMIT = 16
DEFAULT_GAMMA = 2.0

_VERTEX_EPS = 1e-12
_NUDGE = 1e-9 * np.array([0.6, 0.8])
_TIE_EPS = 1e-12
_NEWTON_STEPS = 0.5 ** np.arange(0, 40, 3)


class SizeLimitError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, best: Point):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class FacilitySolution:
    facilities: np.ndarray
    assignment: np.ndarray
    open_cost: float
    connection_cost: float
    total_cost: float

    @property
    def n_facilities(self) -> int:
        return len(self.facilities)

    def facility_points(self) -> list[Point]:
        return [Point(float(x), float(y)) for x, y in self.facilities]

    def served_counts(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=len(self.facilities))

    def recomputed_cost(self, coords: np.ndarray) -> float:
        f = self.facilities[self.assignment]
        return len(self.facilities) + float(np.hypot(coords[:, 0] - f[:, 0], coords[:, 1] - f[:, 1]).sum())

    def to_json(self, solver: str) -> dict:
        return {
            "solver": solver,
            "n": int(len(self.assignment)),
            "open_cost": self.open_cost,
            "connection_cost": self.connection_cost,
            "total_cost": self.total_cost,
            "facilities": [[float(x), float(y)] for x, y in self.facilities],
        }


def assign_nearest(coords: np.ndarray, facilities: np.ndarray) -> np.ndarray:
    """Index of the nearest facility per point, lowest index on ties."""
    F = len(facilities)
    if F * len(coords) <= 4_000_000:
        d = np.hypot(coords[:, 0, None] - facilities[None, :, 0], coords[:, 1, None] - facilities[None, :, 1])
        return np.argmin(d, axis=1)
    k = min(F, 4)
    d, idx = cKDTree(facilities).query(coords, k=k)
    idx = np.where(d == d[:, :1], idx, F)
    return idx.min(axis=1)


def make_solution(coords: np.ndarray, facilities: np.ndarray) -> FacilitySolution:
    facilities = np.asarray(facilities, dtype=np.float64).reshape(-1, 2)
    assignment = assign_nearest(coords, facilities)
    f = facilities[assignment]
    conn = float(np.hypot(coords[:, 0] - f[:, 0], coords[:, 1] - f[:, 1]).sum())
    return FacilitySolution(facilities, assignment, float(len(facilities)), conn, len(facilities) + conn)


# -- geometric median -------------------------------------------------------


def _member_dists(y: np.ndarray, coords: np.ndarray) -> np.ndarray:
    return np.hypot(y[:, None, 0] - coords[None, :, 0], y[:, None, 1] - coords[None, :, 1])


def _gap_bound(y: np.ndarray, coords: np.ndarray, masks: np.ndarray):
    """Objective, and an upper bound on its excess over the optimum, per set.

    Convexity gives f(y) - f* <= |grad f(y)| * |y - x*|, and x* lies in the
    hull of the set, so |y - x*| <= max member distance.
    """
    d = _member_dists(y, coords)
    dm = np.where(masks, d, 0.0)
    live = masks & (d > 0)
    w = np.where(live, 1.0 / np.where(live, d, 1.0), 0.0)
    gx = (w * (y[:, None, 0] - coords[None, :, 0])).sum(axis=1)
    gy = (w * (y[:, None, 1] - coords[None, :, 1])).sum(axis=1)
    return dm.sum(axis=1), np.hypot(gx, gy) * dm.max(axis=1), d


def _objective_and_slope(y: np.ndarray, coords: np.ndarray, masks: np.ndarray):
    d = _member_dists(y, coords)
    live = masks & (d > 0)
    w = np.where(live, 1.0 / np.where(live, d, 1.0), 0.0)
    gx = (w * (y[:, None, 0] - coords[None, :, 0])).sum(axis=1)
    gy = (w * (y[:, None, 1] - coords[None, :, 1])).sum(axis=1)
    f = np.where(masks, d, 0.0).sum(axis=1)
    bad = ~np.isfinite(f)
    return np.where(bad, np.inf, f), np.where(bad, np.inf, np.hypot(gx, gy))


def _descent_step(y: np.ndarray, coords: np.ndarray, masks: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Next iterate per set: the Weiszfeld average or a damped Newton step.

    The Weiszfeld step always descends; Newton steps give fast final
    convergence when the median sits close to a member point or the set is
    nearly collinear. Candidates whose objectives differ only by roundoff
    are ranked by gradient norm instead.
    """
    w = np.where(masks, 1.0 / np.where(masks, d, 1.0), 0.0)
    y_w = (w @ coords) / w.sum(axis=1)[:, None]
    dx = y[:, None, 0] - coords[None, :, 0]
    dy = y[:, None, 1] - coords[None, :, 1]
    w3 = w * w * w
    gx, gy = (w * dx).sum(axis=1), (w * dy).sum(axis=1)
    hxx = (w - w3 * dx * dx).sum(axis=1)
    hyy = (w - w3 * dy * dy).sum(axis=1)
    hxy = -(w3 * dx * dy).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        det = hxx * hyy - hxy * hxy
        step = np.stack([hyy * gx - hxy * gy, hxx * gy - hxy * gx], axis=1) / det[:, None]
        cands = np.concatenate([y_w[None], y[None] - _NEWTON_STEPS[:, None, None] * step[None]])
    C, S = cands.shape[:2]
    f, g = _objective_and_slope(cands.reshape(C * S, 2), coords, np.tile(masks, (C, 1)))
    f, g = f.reshape(C, S), g.reshape(C, S)
    fmin = f.min(axis=0)
    g = np.where(f <= fmin + 1e-13 * (1.0 + fmin), g, np.inf)
    pick = np.argmin(g, axis=0)
    return cands[pick, np.arange(S)]


def _vertex_optima(coords: np.ndarray, masks: np.ndarray, tol: float):
    """Best member point per set whose subgradient certifies it within ``tol``."""
    n = len(coords)
    D = np.hypot(coords[:, 0, None] - coords[None, :, 0], coords[:, 1, None] - coords[None, :, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        U = np.where(D[..., None] > 0, (coords[:, None, :] - coords[None, :, :]) / D[..., None], 0.0)
    M = masks.astype(np.float64)
    R = np.einsum("si,kid->skd", M, U)
    mult = M @ (D == 0).astype(np.float64)
    far = np.where(masks[:, None, :], D[None, :, :], 0.0).max(axis=2)
    gap = np.maximum(np.hypot(R[..., 0], R[..., 1]) - mult, 0.0) * far
    cost = M @ D  # cost of placing the median at member k
    ok = masks & (gap <= tol)
    cost = np.where(ok, cost, np.inf)
    k = np.argmin(cost, axis=1)
    found = ok[np.arange(len(masks)), k]
    return found, k, cost[np.arange(len(masks)), k]


def median_batch(coords: np.ndarray, masks: np.ndarray, tol: float = 1e-9, max_iter: int = 10_000):
    """Geometric medians of many subsets of ``coords`` at once.

    ``masks`` is a boolean ``(S, n)`` array. Returns ``(medians, costs)``.
    Each set resolves at the first of: its centroid is certified optimal
    (this fixes the midpoint for two points), one of its members is
    certified optimal, or Weiszfeld iteration reaches a certified gap.
    """
    coords = np.asarray(coords, dtype=np.float64)
    masks = np.asarray(masks, dtype=bool)
    S = len(masks)
    if S == 0:
        return np.empty((0, 2)), np.empty(0)
    if not masks.any(axis=1).all():
        raise EmptyInputError("geometric median of an empty set")
    M = masks.astype(np.float64)
    y = (M @ coords) / M.sum(axis=1)[:, None]
    med = np.empty((S, 2))
    cost = np.full(S, np.inf)
    done = np.zeros(S, dtype=bool)

    f, gap, d = _gap_bound(y, coords, masks)
    at_vertex = (masks & (d < _VERTEX_EPS)).any(axis=1)
    acc = ~at_vertex & (gap <= tol)
    med[acc], cost[acc], done[acc] = y[acc], f[acc], True

    rest = np.flatnonzero(~done)
    if len(rest):
        found, k, vcost = _vertex_optima(coords, masks[rest], tol)
        hit = rest[found]
        med[hit] = coords[k[found]]
        cost[hit] = vcost[found]
        done[hit] = True

    active = np.flatnonzero(~done)
    y = y[active]
    best_y = y.copy()
    best_f = np.full(len(active), np.inf)
    for _ in range(max_iter):
        if not len(active):
            break
        am = masks[active]
        d = _member_dists(y, coords)
        near = (am & (d < _VERTEX_EPS)).any(axis=1)
        if near.any():
            # members here are known not to be optimal
            y[near] += _NUDGE
            d[near] = _member_dists(y[near], coords)
        y = _descent_step(y, coords, am, d)
        f, gap, _ = _gap_bound(y, coords, am)
        better = f < best_f
        best_f[better] = f[better]
        best_y[better] = y[better]
        conv = gap <= tol
        idx = active[conv]
        med[idx], cost[idx], done[idx] = y[conv], f[conv], True
        keep = ~conv
        active, y, best_y, best_f = active[keep], y[keep], best_y[keep], best_f[keep]
    if len(active):
        bx, by = best_y[0]
        raise ConvergenceError(
            f"Weiszfeld did not converge in {max_iter} iterations for {len(active)} set(s)",
            Point(float(bx), float(by)),
        )
    return med, cost


def weiszfeld(points: Sequence[Sequence[float]], tol: float = 1e-9, max_iter: int = 10_000) -> Point:
    """Geometric median of ``points`` to within ``tol`` in summed distance."""
    coords = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if not len(coords):
        raise EmptyInputError("weiszfeld needs at least one point")
    med, _ = median_batch(coords, np.ones((1, len(coords)), dtype=bool), tol, max_iter)
    return Point(float(med[0, 0]), float(med[0, 1]))


# -- exact solvers ------------------------------------------------------------


def set_partitions(n: int) -> Iterator[list[int]]:
    """All restricted growth strings of length ``n`` in lexicographic order."""
    if n == 0:
        yield []
        return
    a = [0] * n
    while True:
        yield list(a)
        # rightmost position that can still grow
        i = n - 1
        while i > 0 and a[i] > max(a[:i]):
            i -= 1
        if i == 0:
            return
        a[i] += 1
        a[i + 1:] = [0] * (n - i - 1)


def _subset_masks(n: int) -> np.ndarray:
    bits = np.arange(1 << n)[:, None] >> np.arange(n)[None, :] & 1
    return bits.astype(bool)


def _tie_key(facilities: np.ndarray) -> tuple:
    return (len(facilities), sorted(map(tuple, facilities.tolist())))


def _check_size(X: PointSet, limit: int, name: str) -> None:
    if len(X) == 0:
        raise EmptyInputError(f"{name} needs a nonempty point set")
    if len(X) > limit:
        raise SizeLimitError(f"{name} handles at most {limit} points, got {len(X)}")


def exact_cost(X: PointSet, limit: int = EXACT_LIMIT, tol: float = 1e-9) -> FacilitySolution:
    """Optimal cost with facilities anywhere in the square.

    Any facility set induces a partition of the points by nearest facility,
    and re-centering each block at its geometric median only lowers the
    cost, so the best partition attains the optimum. Partitions are walked
    as restricted growth strings; since a block's median cost can only grow
    as points join it, partial costs bound whole branches from below.
    """
    _check_size(X, limit, "exact_cost")
    coords = X.coords
    n = len(coords)
    masks = _subset_masks(n)
    med, cost = median_batch(coords, masks[1:], tol)
    med = np.vstack([np.zeros((1, 2)), med])
    block_cost = [math.inf] + (1.0 + cost).tolist()
    prune = 1e-7 + n * tol

    best_cost = math.inf
    best_key: tuple | None = None
    best_blocks: list[int] = []
    blocks: list[int] = []

    def visit(i: int, partial: float) -> None:
        nonlocal best_cost, best_key, best_blocks
        if i == n:
            facs = med[blocks]
            if partial < best_cost - _TIE_EPS:
                best_cost, best_key, best_blocks = partial, None, list(blocks)
            elif partial <= best_cost + _TIE_EPS:
                if best_key is None:
                    best_key = _tie_key(med[best_blocks])
                key = _tie_key(facs)
                if key < best_key:
                    best_cost, best_key, best_blocks = min(partial, best_cost), key, list(blocks)
            return
        bit = 1 << i
        for b in range(len(blocks)):
            old = blocks[b]
            nxt = partial - block_cost[old] + block_cost[old | bit]
            if nxt <= best_cost + prune:
                blocks[b] = old | bit
                visit(i + 1, nxt)
                blocks[b] = old
        nxt = partial + block_cost[bit]
        if nxt <= best_cost + prune:
            blocks.append(bit)
            visit(i + 1, nxt)
            blocks.pop()

    visit(0, 0.0)
    return make_solution(coords, med[best_blocks])


def restricted_exact(X: PointSet, limit: int = RESTRICTED_LIMIT) -> FacilitySolution:
    """Optimal cost with facilities drawn from the input points."""
    _check_size(X, limit, "restricted_exact")
    coords = X.coords
    n = len(coords)
    D = np.hypot(coords[:, 0, None] - coords[None, :, 0], coords[:, 1, None] - coords[None, :, 1])
    # nearest[mask, x] = min over facilities in mask of D[x, f]
    nearest = np.full((1 << n, n), np.inf)
    for b in range(n):
        lo, hi = 1 << b, 1 << (b + 1)
        nearest[lo:hi] = np.minimum(nearest[0:lo], D[:, b][None, :])
    sizes = np.bitwise_count(np.arange(1 << n, dtype=np.uint32)).astype(np.float64)
    totals = sizes + nearest.sum(axis=1)
    totals[0] = np.inf
    best = float(totals.min())
    ties = np.flatnonzero(totals <= best + _TIE_EPS)
    masks = _subset_masks(n)
    mask = min(ties, key=lambda m: _tie_key(coords[masks[m]]))
    return make_solution(coords, coords[masks[mask]])


# -- approximations -------------------------------------------------------------


def mp_greedy(X: PointSet, profile: RadiusProfile, gamma: float = DEFAULT_GAMMA) -> FacilitySolution:
    """Radius-ordered greedy: open at each point unless a facility is within ``gamma * r``.

    Points are visited by ascending radius, ties by index.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if len(profile) != len(X):
        raise ValueError("radius profile does not match the point set")
    coords = X.coords
    n = len(coords)
    if n == 0:
        raise EmptyInputError("mp_greedy needs a nonempty point set")
    r = profile.radii
    order = np.lexsort((np.arange(n), r)).tolist()
    thr = (gamma * r).tolist()
    xs = coords[:, 0].tolist()
    ys = coords[:, 1].tolist()
    inv = 1.0 / float(np.median(gamma * r))
    floor = math.floor
    grid: dict[tuple[int, int], list[tuple[float, float]]] = {}
    opened = []
    for i in order:
        x, y, t = xs[i], ys[i], thr[i]
        t2 = t * t
        blocked = False
        for cx in range(floor((x - t) * inv), floor((x + t) * inv) + 1):
            for cy in range(floor((y - t) * inv), floor((y + t) * inv) + 1):
                cell = grid.get((cx, cy))
                if cell is None:
                    continue
                for fx, fy in cell:
                    dx = fx - x
                    dy = fy - y
                    if dx * dx + dy * dy <= t2:
                        blocked = True
                        break
                if blocked:
                    break
            if blocked:
                break
        if not blocked:
            opened.append(i)
            grid.setdefault((floor(x * inv), floor(y * inv)), []).append((x, y))
    return make_solution(coords, coords[opened])


def default_grid_k(n: int) -> int:
    return max(1, round(n ** (2.0 / 3.0)))


def grid_cost(X: PointSet, k: int | None = None) -> FacilitySolution:
    """Facilities at the ``ceil(sqrt(k))^2`` grid cell centers."""
    coords = X.coords
    if k is None:
        k = default_grid_k(len(coords))
    if k < 1:
        raise ValueError("k must be >= 1")
    facilities = np.array(grid_points(k), dtype=np.float64)
    m = math.isqrt(k - 1) + 1
    # the containing cell's center is nearest; ceil-1 sends boundary ties to the lower index
    ij = np.clip(np.ceil(coords * m).astype(np.int64) - 1, 0, m - 1)
    assignment = ij[:, 1] * m + ij[:, 0]
    f = facilities[assignment]
    conn = float(np.hypot(coords[:, 0] - f[:, 0], coords[:, 1] - f[:, 1]).sum())
    return FacilitySolution(facilities, assignment, float(len(facilities)), conn, len(facilities) + conn)


def best_grid_cost(X: PointSet, k_max: int | None = None) -> FacilitySolution:
    """Cheapest grid solution over ``k = 1..k_max`` (default ``len(X)``)."""
    k_max = len(X) if k_max is None else k_max
    return min((grid_cost(X, k) for k in range(1, max(k_max, 1) + 1)), key=lambda s: s.total_cost)

"""Uniform grid discretizations of bounded domains.

Every grid carries explicit exterior nodes (the Dirichlet datum ``u = 0``
outside the domain is stored as frozen zeros) out to the bounding box of
the padded grid; the kernel module folds everything beyond that box into
analytic tail weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# relative tolerance used when matching reflected node positions
_MATCH_RTOL = 1e-9


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    dim = 1

    @property
    def center(self) -> np.ndarray:
        return np.array([0.5 * (self.a + self.b)])

    @property
    def inradius(self) -> float:
        return 0.5 * (self.b - self.a)

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Signed distance to the boundary, positive inside."""
        x = points[:, 0]
        return np.minimum(x - self.a, self.b - x)

    def to_dict(self) -> dict:
        return {"kind": "interval", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Rectangle:
    lower: tuple[float, float]
    upper: tuple[float, float]

    dim = 2

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lower) + np.asarray(self.upper))

    @property
    def inradius(self) -> float:
        return 0.5 * min(u - l for l, u in zip(self.lower, self.upper))

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        lo = points - np.asarray(self.lower)
        hi = np.asarray(self.upper) - points
        return np.minimum(lo, hi).min(axis=1)

    def to_dict(self) -> dict:
        return {"kind": "rectangle", "lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class Ball:
    origin: tuple[float, ...]
    radius: float

    @property
    def dim(self) -> int:
        return len(self.origin)

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.origin, dtype=float)

    @property
    def inradius(self) -> float:
        return self.radius

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        return self.radius - np.linalg.norm(points - self.center, axis=1)

    def to_dict(self) -> dict:
        return {"kind": "ball", "center": list(self.origin), "radius": self.radius}


Region = Interval | Rectangle | Ball


@dataclass(frozen=True)
class Hyperplane:
    """The hyperplane ``{x : x . normal = offset}`` with unit ``normal``."""

    normal: tuple[float, ...]
    offset: float

    @classmethod
    def axis(cls, index: int, offset: float, dim: int) -> "Hyperplane":
        """Coordinate hyperplane ``x[index] = offset``."""
        normal = [0.0] * dim
        normal[index] = 1.0
        return cls(tuple(normal), float(offset))

    @classmethod
    def through(cls, normal: Sequence[float], point: Sequence[float]) -> "Hyperplane":
        n = np.asarray(normal, dtype=float)
        norm = np.linalg.norm(n)
        if not norm > 0 or not np.isfinite(norm):
            raise ValueError(f"hyperplane normal must be a nonzero finite vector, got {tuple(n)}")
        n = n / norm
        return cls(tuple(float(v) for v in n), float(n @ np.asarray(point, dtype=float)))

    def mirror(self, points: np.ndarray) -> np.ndarray:
        n = np.asarray(self.normal)
        dist = points @ n - self.offset
        return points - 2.0 * dist[:, None] * n[None, :]

    def to_dict(self) -> dict:
        return {"normal": list(self.normal), "offset": self.offset}


@dataclass(frozen=True, eq=False)
class GridDomain:
    """A uniform tensor grid with interior/exterior flags.

    ``hull_lower``/``hull_upper`` bound the union of the grid cells (node
    +/- half a spacing); ``truncation_radius`` is the distance from the
    region center to the nearest face of that hull.
    """

    region: Region
    nodes: np.ndarray
    spacing: tuple[float, ...]
    interior_mask: np.ndarray
    hull_lower: np.ndarray
    hull_upper: np.ndarray
    symmetry_axes: tuple[Hyperplane, ...] = ()
    shape: tuple[int, ...] = field(default=())

    def __post_init__(self):
        for arr in (self.nodes, self.interior_mask, self.hull_lower, self.hull_upper):
            arr.setflags(write=False)
        if min(self.spacing) <= 0:
            raise ValueError("grid spacing must be positive")
        if not self.interior_mask.any():
            raise ValueError("grid has no interior nodes")

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_interior(self) -> int:
        return int(self.interior_mask.sum())

    @property
    def interior_index(self) -> np.ndarray:
        return np.flatnonzero(self.interior_mask)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def truncation_radius(self) -> float:
        c = self.region.center
        return float(min((c - self.hull_lower).min(), (self.hull_upper - c).min()))

    def interior_points(self) -> np.ndarray:
        return self.nodes[self.interior_mask]

    def describe(self) -> dict:
        return {
            "region": self.region.to_dict(),
            "dim": self.dim,
            "n_nodes": self.n_nodes,
            "n_interior": self.n_interior,
            "spacing": list(self.spacing),
            "truncation_radius": self.truncation_radius,
        }


@dataclass(frozen=True)
class CompactSubset:
    """Interior nodes kept a positive distance ``margin`` away from the boundary."""

    node_indices: np.ndarray
    margin: float

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError("compact subset must have positive margin")
        if len(self.node_indices) == 0:
            raise ValueError("compact subset is empty")


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite bound {v!r}")


def _pad_counts(pad, h: float) -> tuple[int, int]:
    if np.isscalar(pad):
        pad = (pad, pad)
    left, right = (float(v) for v in pad)
    if left < 0 or right < 0:
        raise ValueError("pad must be nonnegative")
    # the small slack keeps pad = k*h from rounding up to k+1
    return (math.ceil(left / h - 1e-9), math.ceil(right / h - 1e-9))


def _axis_nodes(a: float, b: float, M: int, pad) -> tuple[np.ndarray, float, int, int]:
    h = (b - a) / (M - 1)
    nl, nr = _pad_counts(pad, h)
    k = np.arange(-nl, M + nr)
    # mirror-symmetric construction about the midpoint
    mid = 0.5 * (a + b)
    x = mid + (k - 0.5 * (M - 1)) * h
    return x, h, nl, nr


def build_interval(a: float, b: float, M: int, pad=0.0) -> GridDomain:
    """Uniform grid with ``M`` nodes on ``[a, b]`` plus ``ceil(pad/h)`` exterior nodes per side.

    ``pad`` may be a pair ``(left, right)``; unequal padding yields a grid with no
    declared symmetry.
    """
    _check_finite(a, b)
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if M < 3:
        raise ValueError(f"need at least M=3 nodes to have an interior node, got M={M}")
    x, h, nl, nr = _axis_nodes(a, b, M, pad)
    tol = _MATCH_RTOL * h
    interior = (x > a + tol) & (x < b - tol)
    axes = (Hyperplane.axis(0, 0.5 * (a + b), 1),) if nl == nr else ()
    return GridDomain(
        region=Interval(float(a), float(b)),
        nodes=x[:, None].copy(),
        spacing=(h,),
        interior_mask=interior,
        hull_lower=np.array([x[0] - 0.5 * h]),
        hull_upper=np.array([x[-1] + 0.5 * h]),
        symmetry_axes=axes,
        shape=(len(x),),
    )


def _tensor(axes: list[np.ndarray]) -> np.ndarray:
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def build_rectangle(lower: Sequence[float], upper: Sequence[float], shape: Sequence[int],
                    pad=0.0) -> GridDomain:
    """Tensor grid on an axis-aligned rectangle; ``shape`` counts nodes per axis on the closed box."""
    lower = tuple(float(v) for v in lower)
    upper = tuple(float(v) for v in upper)
    _check_finite(*lower, *upper)
    if len(lower) != 2 or len(upper) != 2 or len(shape) != 2:
        raise ValueError("rectangles are two-dimensional")
    if any(l >= u for l, u in zip(lower, upper)):
        raise ValueError("need lower < upper on every axis")
    if min(shape) < 3:
        raise ValueError("need at least 3 nodes per axis")
    xs, hs = [], []
    for lo, hi, m in zip(lower, upper, shape):
        x, h, _, _ = _axis_nodes(lo, hi, m, pad)
        xs.append(x)
        hs.append(h)
    nodes = _tensor(xs)
    region = Rectangle(lower, upper)
    interior = region.boundary_distance(nodes) > _MATCH_RTOL * min(hs)
    c = region.center
    axes = [Hyperplane.axis(0, c[0], 2), Hyperplane.axis(1, c[1], 2)]
    if math.isclose(hs[0], hs[1]) and shape[0] == shape[1] and \
            math.isclose(upper[0] - lower[0], upper[1] - lower[1]):
        axes += [Hyperplane.through((1.0, -1.0), c), Hyperplane.through((1.0, 1.0), c)]
    h = np.asarray(hs)
    return GridDomain(
        region=region,
        nodes=nodes,
        spacing=tuple(hs),
        interior_mask=interior,
        hull_lower=np.array([x[0] for x in xs]) - 0.5 * h,
        hull_upper=np.array([x[-1] for x in xs]) + 0.5 * h,
        symmetry_axes=tuple(axes),
        shape=tuple(len(x) for x in xs),
    )


def build_ball(center: Sequence[float], radius: float, M: int, pad=0.0) -> GridDomain:
    """Node-in-ball masking of a square grid with ``M`` nodes across the diameter (2D)."""
    center = tuple(float(v) for v in center)
    _check_finite(*center, radius)
    if len(center) != 2:
        raise ValueError("discretized balls are two-dimensional")
    if radius <= 0:
        raise ValueError("radius must be positive")
    if M < 3:
        raise ValueError("need at least 3 nodes across the diameter")
    xs = []
    for c in center:
        x, h, _, _ = _axis_nodes(c - radius, c + radius, M, pad)
        xs.append(x)
    nodes = _tensor(xs)
    region = Ball(center, float(radius))
    interior = region.boundary_distance(nodes) > _MATCH_RTOL * h
    axes = (
        Hyperplane.axis(0, center[0], 2),
        Hyperplane.axis(1, center[1], 2),
        Hyperplane.through((1.0, -1.0), center),
        Hyperplane.through((1.0, 1.0), center),
    )
    return GridDomain(
        region=region,
        nodes=nodes,
        spacing=(h, h),
        interior_mask=interior,
        hull_lower=np.array([x[0] for x in xs]) - 0.5 * h,
        hull_upper=np.array([x[-1] for x in xs]) + 0.5 * h,
        symmetry_axes=axes,
        shape=(len(xs[0]), len(xs[1])),
    )


def reflect(domain: GridDomain, axis: Hyperplane) -> np.ndarray:
    """Index permutation sending every node to its mirror image across ``axis``.

    Raises ``ValueError("axis not a grid symmetry")`` when the mirrored node set
    does not coincide with the grid or the interior flags are not preserved.
    """
    if len(axis.normal) != domain.dim:
        raise ValueError("hyperplane dimension does not match the domain")
    h = np.asarray(domain.spacing)
    origin = domain.hull_lower + 0.5 * h
    lattice = np.rint((domain.nodes - origin) / h).astype(np.int64)
    lookup = {tuple(row): i for i, row in enumerate(lattice)}
    mirrored = axis.mirror(domain.nodes)
    mlat = np.rint((mirrored - origin) / h).astype(np.int64)
    perm = np.empty(domain.n_nodes, dtype=np.int64)
    for i, key in enumerate(map(tuple, mlat)):
        j = lookup.get(key)
        if j is None:
            raise ValueError("axis not a grid symmetry")
        perm[i] = j
    if np.max(np.abs(domain.nodes[perm] - mirrored)) > _MATCH_RTOL * h.max() * 10:
        raise ValueError("axis not a grid symmetry")
    if not np.array_equal(domain.interior_mask[perm], domain.interior_mask):
        raise ValueError("axis not a grid symmetry")
    return perm


def default_compact_subset(domain: GridDomain, fraction: float = 0.5) -> CompactSubset:
    """Interior nodes at distance at least ``(1 - fraction) * inradius`` from the boundary.

    With the default this is the central half of an interval or ball.
    """
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie in (0, 1)")
    dist = domain.region.boundary_distance(domain.nodes)
    threshold = (1.0 - fraction) * domain.region.inradius
    keep = domain.interior_mask & (dist >= threshold - _MATCH_RTOL * max(domain.spacing))
    idx = np.flatnonzero(keep)
    if idx.size == 0:
        # coarse grids: fall back to the deepest interior nodes
        d_int = np.where(domain.interior_mask, dist, -np.inf)
        idx = np.flatnonzero(d_int >= d_int.max() - _MATCH_RTOL)
    return CompactSubset(idx, float(dist[idx].min()))

"""Compact-set primitives: boxes, balls, half-space unsafe sets, and covers.

Every set this package manipulates is reduced to an axis-aligned box; convex
hulls and ball Minkowski sums are over-approximated by their bounding boxes,
which is sound (supersets only) and keeps all operations O(n).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import RefinementFloorError

# Classification of a box against a half-space union.
DISJOINT = "DISJOINT"
CONTAINED = "CONTAINED"
OVERLAPS = "OVERLAPS"


def _vec(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Box:
    """Axis-aligned hyperrectangle [lo, hi], lo[j] <= hi[j] for all j."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _vec(self.lo)
        hi = _vec(self.hi)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size < 1:
            raise ValueError("box bounds must be equal-length 1-D vectors")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("box requires lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @staticmethod
    def _wrap(lo: np.ndarray, hi: np.ndarray) -> "Box":
        # Internal fast path for bounds already known to be valid.
        box = object.__new__(Box)
        object.__setattr__(box, "lo", lo)
        object.__setattr__(box, "hi", hi)
        return box

    @property
    def dim(self) -> int:
        return self.lo.size

    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    def contains_point(self, x, atol: float = 0.0) -> bool:
        x = _vec(x)
        return bool(np.all(x >= self.lo - atol) and np.all(x <= self.hi + atol))

    def contains_box(self, other: "Box", atol: float = 0.0) -> bool:
        return bool(
            np.all(other.lo >= self.lo - atol) and np.all(other.hi <= self.hi + atol)
        )

    def intersect(self, other: "Box") -> "Box | None":
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi):
            return None
        return Box(lo, hi)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform samples inside the box, shape (count, dim)."""
        return rng.uniform(self.lo, self.hi, size=(count, self.dim))


@dataclass(frozen=True)
class Ball:
    """l2 ball of given center and radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = _vec(self.center)
        r = float(self.radius)
        if r < 0 or not math.isfinite(r):
            raise ValueError("ball radius must be finite and >= 0")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)

    def bounding_box(self) -> Box:
        return Box(self.center - self.radius, self.center + self.radius)

    def contains_point(self, x, atol: float = 0.0) -> bool:
        return float(np.linalg.norm(_vec(x) - self.center)) <= self.radius + atol


@dataclass(frozen=True)
class HalfspaceSet:
    """Union of open half-spaces {x : normal . x > offset}; the unsafe set."""

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        offsets = _vec(self.offsets)
        if normals.shape[0] != offsets.size or normals.shape[0] < 1:
            raise ValueError("need at least one halfspace with matching offset")
        if np.any(np.linalg.norm(normals, axis=1) == 0.0):
            raise ValueError("halfspace normals must be nonzero")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @staticmethod
    def from_threshold(axis: int, offset: float, dim: int) -> "HalfspaceSet":
        """Coordinate-threshold set {x : x[axis] > offset}."""
        normal = np.zeros(dim)
        normal[axis] = 1.0
        return HalfspaceSet(normal[None, :], np.array([float(offset)]))

    def contains_point(self, x) -> bool:
        x = _vec(x)
        return bool(np.any(self.normals @ x > self.offsets))


@dataclass(frozen=True)
class Cover:
    """A ball of initial states (theta, delta) with its simulation precision."""

    theta: np.ndarray
    delta: float
    epsilon: float

    def __post_init__(self):
        theta = _vec(self.theta)
        delta = float(self.delta)
        epsilon = float(self.epsilon)
        if delta < 0:
            raise ValueError("cover delta must be >= 0")
        if epsilon <= 0:
            raise ValueError("cover epsilon must be > 0")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "epsilon", epsilon)

    def ball(self) -> Ball:
        return Ball(self.theta, self.delta)


def box_hull(a: Box, b: Box) -> Box:
    """Smallest box containing both inputs (superset of the convex hull)."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return Box._wrap(np.minimum(a.lo, b.lo), np.maximum(a.hi, b.hi))


def bloat(b: Box, r: float) -> Box:
    """Box over-approximation of b ⊕ B_r(0): every face pushed out by r."""
    r = float(r)
    if not math.isfinite(r) or r < 0:
        raise ValueError("bloat radius must be finite and >= 0")
    return Box._wrap(b.lo - r, b.hi + r)


def diameter(b: Box) -> float:
    """l2 diameter of the box: ||hi - lo||."""
    return float(np.linalg.norm(b.widths()))


def _ball_box_distance(theta: np.ndarray, box: Box) -> float:
    gap = np.maximum(np.maximum(box.lo - theta, theta - box.hi), 0.0)
    return float(np.linalg.norm(gap))


def partition_cover(c: Cover, init_region: Box, floor: float = 0.0) -> list[Cover]:
    """Refine a cover: bisect its clipped bounding box into sub-boxes, one
    child cover per sub-box with halved precision.

    The child radius is the circumscribed-ball radius of its sub-box, so the
    children's balls jointly cover B_delta(theta) ∩ init_region.  Children
    whose balls miss init_region are dropped.
    """
    if c.delta <= 0:
        raise ValueError("cannot partition a zero-radius cover")
    if floor > 0 and c.delta / 2.0 < floor:
        raise RefinementFloorError(
            f"cover radius {c.delta:.3g} under refinement floor {floor:.3g}"
        )
    region = c.ball().bounding_box().intersect(init_region)
    if region is None:
        return []
    mid = region.center()
    # Split only axes with positive width to avoid duplicate children.
    split_axes = [j for j in range(region.dim) if region.widths()[j] > 0.0]
    children: list[Cover] = []
    for choice in itertools.product((0, 1), repeat=len(split_axes)):
        lo = region.lo.copy()
        hi = region.hi.copy()
        for axis, side in zip(split_axes, choice):
            if side == 0:
                hi[axis] = mid[axis]
            else:
                lo[axis] = mid[axis]
        sub = Box(lo, hi)
        theta = sub.center()
        delta = float(np.linalg.norm(sub.widths() / 2.0))
        if _ball_box_distance(theta, init_region) > delta:
            continue
        children.append(Cover(theta, delta, c.epsilon / 2.0))
    return children


def classify_against_unsafe(b: Box, u: HalfspaceSet) -> str:
    """DISJOINT, CONTAINED, or OVERLAPS of a box against the unsafe union.

    DISJOINT: for every halfspace, max over the box of normal.x <= offset.
    CONTAINED: the box lies inside some single halfspace (min > offset).
    """
    if b.dim != u.dim:
        raise ValueError(f"dimension mismatch: box {b.dim} vs unsafe {u.dim}")
    pos = np.maximum(u.normals, 0.0)
    neg = np.minimum(u.normals, 0.0)
    maxima = pos @ b.hi + neg @ b.lo
    minima = pos @ b.lo + neg @ b.hi
    if np.all(maxima <= u.offsets):
        return DISJOINT
    if np.any(minima > u.offsets):
        return CONTAINED
    return OVERLAPS

"""Collision primitives and analytic distance queries.

Signed distance convention: positive = separation, <= 0 = touching or
intersecting.  Penetration magnitude is only meaningful for sphere-sphere
pairs; other intersecting pairs just report a non-positive value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if self.radius <= 0:
            raise ValueError("sphere radius must be > 0")


@dataclass(eq=False)
class Capsule:
    a: np.ndarray
    b: np.ndarray
    radius: float

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.radius <= 0:
            raise ValueError("capsule radius must be > 0")


@dataclass(eq=False)
class Box:
    """Axis-aligned box (world frame); boxes never rotate."""

    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.half_extents = np.asarray(self.half_extents, dtype=float)
        if np.any(self.half_extents <= 0):
            raise ValueError("box half extents must be > 0")


Primitive = Sphere | Capsule | Box


def transform(prim: Primitive, position: np.ndarray, yaw: float) -> Primitive:
    """Place a body-frame primitive at (position, yaw) in the world.

    Boxes stay axis-aligned, so they only support yaw = 0 bodies.
    """
    position = np.asarray(position, dtype=float)
    c, s = math.cos(yaw), math.sin(yaw)

    def rot(v: np.ndarray) -> np.ndarray:
        return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]])

    if isinstance(prim, Sphere):
        return Sphere(position + rot(prim.center), prim.radius)
    if isinstance(prim, Capsule):
        return Capsule(position + rot(prim.a), position + rot(prim.b), prim.radius)
    if abs(yaw) > 1e-12:
        raise ValueError("box body primitives require yaw = 0")
    return Box(position + prim.center, prim.half_extents)


def aabb(prim: Primitive) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(prim, Sphere):
        r = prim.radius
        return prim.center - r, prim.center + r
    if isinstance(prim, Capsule):
        lo = np.minimum(prim.a, prim.b) - prim.radius
        hi = np.maximum(prim.a, prim.b) + prim.radius
        return lo, hi
    return prim.center - prim.half_extents, prim.center + prim.half_extents


def bounding_diameter(prim: Primitive) -> float:
    if isinstance(prim, Sphere):
        return 2.0 * prim.radius
    if isinstance(prim, Capsule):
        return float(np.linalg.norm(prim.b - prim.a)) + 2.0 * prim.radius
    return 2.0 * float(np.linalg.norm(prim.half_extents))


def _point_segment_closest(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return a
    t = float((p - a) @ ab) / denom
    t = max(0.0, min(1.0, t))
    return a + t * ab


def _segment_segment_distance(p1, q1, p2, q2) -> float:
    """Closest distance between segments [p1,q1] and [p2,q2] (Ericson 5.1.9)."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    if a == 0.0 and e == 0.0:
        return float(np.linalg.norm(r))
    if a == 0.0:
        s = 0.0
        t = max(0.0, min(1.0, f / e))
    else:
        c = float(d1 @ r)
        if e == 0.0:
            t = 0.0
            s = max(0.0, min(1.0, -c / a))
        else:
            b = float(d1 @ d2)
            denom = a * e - b * b
            s = max(0.0, min(1.0, (b * f - c * e) / denom)) if denom != 0.0 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = max(0.0, min(1.0, -c / a))
            elif t > 1.0:
                t = 1.0
                s = max(0.0, min(1.0, (b - c) / a))
    c1 = p1 + s * d1
    c2 = p2 + t * d2
    return float(np.linalg.norm(c1 - c2))


def _point_box_distance(p: np.ndarray, box: Box) -> float:
    """Distance from point to box surface; 0 when inside."""
    d = np.abs(p - box.center) - box.half_extents
    outside = np.maximum(d, 0.0)
    return float(np.linalg.norm(outside))


def _point_box_inside_depth(p: np.ndarray, box: Box) -> float:
    """Depth of a point strictly inside the box (0 if on/outside)."""
    d = box.half_extents - np.abs(p - box.center)
    return float(max(0.0, np.min(d)))


def _segment_box_distance(a: np.ndarray, b: np.ndarray, box: Box) -> float:
    """Min distance from segment to box via ternary search.

    Distance to a convex set is convex along the segment, so the
    one-dimensional minimisation is exact up to the iteration tolerance.
    """
    lo, hi = 0.0, 1.0
    ab = b - a
    for _ in range(120):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if _point_box_distance(a + m1 * ab, box) <= _point_box_distance(a + m2 * ab, box):
            hi = m2
        else:
            lo = m1
    t = 0.5 * (lo + hi)
    return _point_box_distance(a + t * ab, box)


_KIND_ORDER = {Sphere: 0, Capsule: 1, Box: 2}


def primitive_distance(p: Primitive, q: Primitive) -> float:
    """Signed distance between two primitives (symmetric by construction)."""
    if _KIND_ORDER[type(p)] > _KIND_ORDER[type(q)]:
        p, q = q, p

    if isinstance(p, Sphere) and isinstance(q, Sphere):
        return float(np.linalg.norm(p.center - q.center)) - p.radius - q.radius

    if isinstance(p, Sphere) and isinstance(q, Capsule):
        cp = _point_segment_closest(p.center, q.a, q.b)
        return float(np.linalg.norm(p.center - cp)) - p.radius - q.radius

    if isinstance(p, Sphere) and isinstance(q, Box):
        d = _point_box_distance(p.center, q)
        if d > 0.0:
            return d - p.radius
        return -(p.radius + _point_box_inside_depth(p.center, q))

    if isinstance(p, Capsule) and isinstance(q, Capsule):
        return _segment_segment_distance(p.a, p.b, q.a, q.b) - p.radius - q.radius

    if isinstance(p, Capsule) and isinstance(q, Box):
        d = _segment_box_distance(p.a, p.b, q)
        if d > 0.0:
            return d - p.radius
        return -p.radius

    # box-box: per-axis gaps; overlap reported as negative smallest overlap
    assert isinstance(p, Box) and isinstance(q, Box)
    delta = np.abs(p.center - q.center)
    limit = p.half_extents + q.half_extents
    gaps = delta - limit
    if np.all(gaps < 0.0):
        return float(np.max(gaps))
    return float(np.linalg.norm(np.maximum(gaps, 0.0)))


def colliding(p: Primitive, q: Primitive) -> bool:
    return primitive_distance(p, q) <= 0.0

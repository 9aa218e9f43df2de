"""Euclidean-convex bodies and their chords along horizontal lines.

A convex body here is a compact convex subset of R^3 with nonempty
interior.  The central operation is ``chord``: the parameter interval
[s_in, s_out] along which a horizontal line (in the (p, theta, t) chart
of :mod:`h1geom.core`) meets the body.  Because the chart parameter is
the sub-Riemannian arclength, s_out - s_in is exactly the Levi length of
the chord, which is what the kinematic identities integrate.

All bodies support vectorized membership and chord queries; ``chord``
solves a quadratic (balls, ellipsoids and their images under rigid
motions) or clips against slabs/halfspaces (boxes, polytopes), so chords
are exact to round-off, not root-finding approximations.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from .core import HorizontalLine, Point, PshMotion, motion_affine
from .measures import EllipsoidPatch, RectanglePatch, SurfacePatch, TrianglePatch

__all__ = [
    "CapabilityError",
    "ChordInterval",
    "BoundingData",
    "ConvexBody",
    "Ball",
    "Ellipsoid",
    "Box",
    "Polytope",
    "transform_body",
]


class CapabilityError(Exception):
    """Raised when an operation is not supported for a body type."""


@dataclass(frozen=True)
class ChordInterval:
    """The parameter interval a line spends inside a body.

    ``s_in <= s_out``; tangential contact gives a degenerate interval
    with sigma == 0.  The empty chord is represented with NaN endpoints
    (query ``is_empty``, never the fields directly).
    """

    s_in: float
    s_out: float

    def __post_init__(self) -> None:
        if math.isnan(self.s_in) != math.isnan(self.s_out):
            raise ValueError("chord endpoints must be both NaN or both finite")
        if not math.isnan(self.s_in) and self.s_out < self.s_in:
            raise ValueError(f"chord needs s_in <= s_out, got [{self.s_in}, {self.s_out}]")

    @classmethod
    def empty(cls) -> "ChordInterval":
        return cls(math.nan, math.nan)

    @property
    def is_empty(self) -> bool:
        return math.isnan(self.s_in)

    @property
    def sigma(self) -> float:
        """Chord length in the Levi metric (0 for empty or tangent chords)."""
        if self.is_empty:
            return 0.0
        return self.s_out - self.s_in


@dataclass(frozen=True)
class BoundingData:
    """Cylindrical bounds: the body lies in {x^2 + y^2 <= r_xy^2,
    z_min <= t <= z_max}."""

    r_xy: float
    z_min: float
    z_max: float


def _line_rays(p, theta, t) -> tuple[np.ndarray, np.ndarray]:
    """Base points and velocities of lines given by coordinate arrays."""
    p = np.asarray(p, dtype=float)
    theta = np.asarray(theta, dtype=float)
    t = np.asarray(t, dtype=float)
    ct, st = np.cos(theta), np.sin(theta)
    base = np.stack(np.broadcast_arrays(p * ct, p * st, t), axis=-1)
    direction = np.stack(np.broadcast_arrays(st, -ct, p), axis=-1)
    return base, direction


def _solve_chord_quadratic(a, b, c):
    """Roots of a s^2 + b s + c = 0 for quadric chords.  Discriminants
    within -1e-12 * scale^2 of zero count as tangency (a zero-length
    chord) rather than a miss, so grazing lines are not dropped."""
    disc = b * b - 4.0 * a * c
    scale_sq = b * b + np.abs(4.0 * a * c)
    hit = disc >= -1e-12 * scale_sq
    sq = np.sqrt(np.maximum(np.where(hit, disc, 0.0), 0.0))
    lo = (-b - sq) / (2.0 * a)
    hi = (-b + sq) / (2.0 * a)
    return lo, hi, hit


class ConvexBody(abc.ABC):
    """Interface shared by all bodies: membership, chords, bounds,
    boundary patches, and (when available) closed-form volume."""

    @abc.abstractmethod
    def contains_batch(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Boolean mask of points (N, 3) inside the body inflated by tol."""

    @abc.abstractmethod
    def chord_batch(
        self, p: np.ndarray, theta: np.ndarray, t: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Chord endpoints (s_lo, s_hi) and hit mask for line arrays.
        Where hit is False the endpoints are meaningless."""

    @abc.abstractmethod
    def bounds(self) -> BoundingData:
        ...

    @abc.abstractmethod
    def volume_exact(self) -> float | None:
        """Closed-form Lebesgue volume, or None if the body has none."""

    @abc.abstractmethod
    def boundary_patches(self) -> list[SurfacePatch]:
        ...

    @abc.abstractmethod
    def interior_point(self) -> np.ndarray:
        ...

    def contains(self, pt: Point, tol: float = 0.0) -> bool:
        mask = self.contains_batch(pt.as_array()[None, :], tol=tol)
        return bool(mask[0])

    def chord(self, line: HorizontalLine) -> ChordInterval:
        lo, hi, hit = self.chord_batch(
            np.array([line.p]), np.array([line.theta]), np.array([line.t])
        )
        if not hit[0]:
            return ChordInterval.empty()
        return ChordInterval(float(lo[0]), float(hi[0]))


class Ball(ConvexBody):
    """Euclidean ball of given center and radius."""

    def __init__(self, center, radius: float) -> None:
        self.center = np.asarray(center, dtype=float).reshape(3)
        self.radius = float(radius)
        if not np.isfinite(self.center).all() or not math.isfinite(self.radius):
            raise ValueError("Ball needs finite center and radius")
        if self.radius <= 0.0:
            raise ValueError(f"Ball needs radius > 0, got {self.radius}")

    def contains_batch(self, points, tol=0.0):
        d2 = np.sum((np.asarray(points, dtype=float) - self.center) ** 2, axis=-1)
        return d2 <= (self.radius + tol) ** 2

    def chord_batch(self, p, theta, t):
        base, u = _line_rays(p, theta, t)
        w = base - self.center
        # |w + s u|^2 = r^2 with |u|^2 = 1 + p^2
        a = np.sum(u * u, axis=-1)
        b = 2.0 * np.sum(w * u, axis=-1)
        c = np.sum(w * w, axis=-1) - self.radius**2
        lo, hi, hit = _solve_chord_quadratic(a, b, c)
        return lo, hi, hit

    def bounds(self):
        cx, cy, cz = self.center
        return BoundingData(
            r_xy=math.hypot(cx, cy) + self.radius,
            z_min=cz - self.radius,
            z_max=cz + self.radius,
        )

    def volume_exact(self):
        return 4.0 / 3.0 * math.pi * self.radius**3

    def boundary_patches(self):
        return [EllipsoidPatch(self.center, self.radius * np.eye(3))]

    def interior_point(self):
        return self.center.copy()


class Ellipsoid(ConvexBody):
    """Image of the unit ball under x |-> center + lin @ x for an
    invertible 3x3 map.  Axis-aligned ellipsoids use the main
    constructor; rigid-motion images of balls and ellipsoids arrive here
    through ``transform_body`` with a full linear part."""

    def __init__(self, center, semi_axes) -> None:
        semi = np.asarray(semi_axes, dtype=float).reshape(3)
        if not (np.isfinite(semi).all() and (semi > 0.0).all()):
            raise ValueError(f"Ellipsoid needs positive semi-axes, got {semi}")
        self._init_linear(center, np.diag(semi))

    @classmethod
    def from_linear(cls, center, lin) -> "Ellipsoid":
        obj = cls.__new__(cls)
        obj._init_linear(center, lin)
        return obj

    def _init_linear(self, center, lin) -> None:
        self.center = np.asarray(center, dtype=float).reshape(3)
        self.lin = np.asarray(lin, dtype=float).reshape(3, 3)
        if not (np.isfinite(self.center).all() and np.isfinite(self.lin).all()):
            raise ValueError("Ellipsoid needs finite data")
        scale = np.linalg.norm(self.lin)
        if scale == 0.0 or abs(np.linalg.det(self.lin)) < 1e-12 * scale**3:
            raise ValueError("Ellipsoid linear map must be invertible")
        self._lin_inv = np.linalg.inv(self.lin)

    def contains_batch(self, points, tol=0.0):
        y = (np.asarray(points, dtype=float) - self.center) @ self._lin_inv.T
        return np.sum(y * y, axis=-1) <= (1.0 + tol) ** 2

    def chord_batch(self, p, theta, t):
        base, u = _line_rays(p, theta, t)
        wq = (base - self.center) @ self._lin_inv.T
        uq = u @ self._lin_inv.T
        a = np.sum(uq * uq, axis=-1)
        b = 2.0 * np.sum(wq * uq, axis=-1)
        c = np.sum(wq * wq, axis=-1) - 1.0
        lo, hi, hit = _solve_chord_quadratic(a, b, c)
        return lo, hi, hit

    def bounds(self):
        cx, cy, cz = self.center
        # max over the unit sphere of |(lin @ n)_xy| is the top 2x3
        # block's spectral norm; the z-extent is the bottom row's norm
        r_xy = math.hypot(cx, cy) + float(np.linalg.norm(self.lin[:2, :], ord=2))
        dz = float(np.linalg.norm(self.lin[2, :]))
        return BoundingData(r_xy=r_xy, z_min=cz - dz, z_max=cz + dz)

    def volume_exact(self):
        return 4.0 / 3.0 * math.pi * abs(float(np.linalg.det(self.lin)))

    def quadratic_form(self) -> np.ndarray:
        """Symmetric 4x4 matrix Q of the homogeneous quadric: with
        X = (1, x, y, t), the body is { X^T Q X <= 0 }.  Rigid-motion
        images of balls and ellipsoids stay exact in this form."""
        m = self._lin_inv.T @ self._lin_inv
        mc = m @ self.center
        q = np.empty((4, 4))
        q[0, 0] = float(self.center @ mc) - 1.0
        q[0, 1:] = -mc
        q[1:, 0] = -mc
        q[1:, 1:] = m
        return q

    def boundary_patches(self):
        return [EllipsoidPatch(self.center, self.lin)]

    def interior_point(self):
        return self.center.copy()


class Box(ConvexBody):
    """Axis-aligned box [lo, hi] componentwise."""

    def __init__(self, lo, hi) -> None:
        self.lo = np.asarray(lo, dtype=float).reshape(3)
        self.hi = np.asarray(hi, dtype=float).reshape(3)
        if not (np.isfinite(self.lo).all() and np.isfinite(self.hi).all()):
            raise ValueError("Box needs finite corners")
        if not (self.hi > self.lo).all():
            raise ValueError(f"Box needs hi > lo componentwise, got {self.lo}, {self.hi}")

    def contains_batch(self, points, tol=0.0):
        pts = np.asarray(points, dtype=float)
        return np.logical_and(
            (pts >= self.lo - tol).all(axis=-1), (pts <= self.hi + tol).all(axis=-1)
        )

    def chord_batch(self, p, theta, t):
        base, u = _line_rays(p, theta, t)
        n = base.shape[0]
        s_lo = np.full(n, -np.inf)
        s_hi = np.full(n, np.inf)
        for ax in range(3):
            d = u[:, ax]
            b = base[:, ax]
            parallel = d == 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                ta = (self.lo[ax] - b) / d
                tb = (self.hi[ax] - b) / d
            ax_lo = np.minimum(ta, tb)
            ax_hi = np.maximum(ta, tb)
            in_slab = (b >= self.lo[ax]) & (b <= self.hi[ax])
            s_lo = np.where(parallel, np.where(in_slab, s_lo, np.inf), np.maximum(s_lo, ax_lo))
            s_hi = np.where(parallel, np.where(in_slab, s_hi, -np.inf), np.minimum(s_hi, ax_hi))
        hit = s_lo <= s_hi
        return s_lo, s_hi, hit

    def bounds(self):
        corners = [
            (x, y)
            for x in (self.lo[0], self.hi[0])
            for y in (self.lo[1], self.hi[1])
        ]
        return BoundingData(
            r_xy=max(math.hypot(x, y) for x, y in corners),
            z_min=float(self.lo[2]),
            z_max=float(self.hi[2]),
        )

    def volume_exact(self):
        return float(np.prod(self.hi - self.lo))

    def boundary_patches(self):
        lo, hi = self.lo, self.hi
        size = hi - lo
        patches = []
        for ax in range(3):
            au, av = (ax + 1) % 3, (ax + 2) % 3
            eu = np.zeros(3)
            ev = np.zeros(3)
            eu[au] = size[au]
            ev[av] = size[av]
            for coord, sign in ((lo[ax], -1.0), (hi[ax], 1.0)):
                origin = lo.copy()
                origin[ax] = coord
                normal = np.zeros(3)
                normal[ax] = sign
                patches.append(RectanglePatch(origin, eu, ev, normal))
        return patches

    def interior_point(self):
        return 0.5 * (self.lo + self.hi)


class Polytope(ConvexBody):
    """Bounded intersection of halfspaces n_i . x <= d_i with nonempty
    interior.  Vertex enumeration, the interior (Chebyshev) point, and
    facet data come from scipy's qhull bindings."""

    def __init__(self, normals, offsets) -> None:
        normals = np.asarray(normals, dtype=float)
        offsets = np.asarray(offsets, dtype=float).reshape(-1)
        if normals.ndim != 2 or normals.shape[1] != 3 or len(normals) != len(offsets):
            raise ValueError("Polytope needs halfspaces as (H, 3) normals and (H,) offsets")
        if not (np.isfinite(normals).all() and np.isfinite(offsets).all()):
            raise ValueError("Polytope needs finite halfspace data")
        scales = np.linalg.norm(normals, axis=1)
        if (scales == 0.0).any():
            raise ValueError("Polytope halfspace normals must be nonzero")
        self.normals = normals / scales[:, None]
        self.offsets = offsets / scales
        self._cheb = self._chebyshev_center()
        self._vertices, self._hull = self._enumerate_vertices()

    def _chebyshev_center(self) -> np.ndarray:
        # maximize the inradius r subject to n.x + r <= d
        h = len(self.offsets)
        a_ub = np.hstack([self.normals, np.ones((h, 1))])
        res = linprog(
            c=[0.0, 0.0, 0.0, -1.0],
            A_ub=a_ub,
            b_ub=self.offsets,
            bounds=[(None, None)] * 3 + [(0.0, None)],
            method="highs",
        )
        if res.status == 3:
            raise ValueError("Polytope is unbounded")
        if not res.success or res.x[3] <= 1e-9:
            raise ValueError("Polytope has empty interior")
        return np.asarray(res.x[:3], dtype=float)

    def _enumerate_vertices(self):
        halfspaces = np.hstack([self.normals, -self.offsets[:, None]])
        try:
            intersection = HalfspaceIntersection(halfspaces, self._cheb)
            vertices = np.unique(np.round(intersection.intersections, 9), axis=0)
            hull = ConvexHull(vertices)
        except QhullError as exc:
            raise ValueError(f"Polytope must be bounded with full-dimensional interior: {exc}") from exc
        if not np.isfinite(vertices).all():
            raise ValueError("Polytope is unbounded")
        return vertices, hull

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices.copy()

    def contains_batch(self, points, tol=0.0):
        pts = np.asarray(points, dtype=float)
        slack = pts @ self.normals.T - self.offsets
        return (slack <= tol).all(axis=-1)

    def chord_batch(self, p, theta, t):
        base, u = _line_rays(p, theta, t)
        denom = u @ self.normals.T
        num = self.offsets - base @ self.normals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = num / denom
        entering = denom < 0.0
        leaving = denom > 0.0
        parallel = denom == 0.0
        s_lo = np.max(np.where(entering, ratio, -np.inf), axis=-1)
        s_hi = np.min(np.where(leaving, ratio, np.inf), axis=-1)
        feasible = np.all(~parallel | (num >= 0.0), axis=-1)
        hit = feasible & (s_lo <= s_hi) & np.isfinite(s_lo) & np.isfinite(s_hi)
        return s_lo, s_hi, hit

    def bounds(self):
        v = self._vertices
        return BoundingData(
            r_xy=float(np.max(np.hypot(v[:, 0], v[:, 1]))),
            z_min=float(np.min(v[:, 2])),
            z_max=float(np.max(v[:, 2])),
        )

    def volume_exact(self):
        return float(self._hull.volume)

    def boundary_patches(self):
        patches = []
        for simplex, eq in zip(self._hull.simplices, self._hull.equations):
            pts = self._hull.points[simplex]
            patches.append(TrianglePatch(pts[0], pts[1], pts[2], eq[:3]))
        return patches

    def interior_point(self):
        return self._cheb.copy()


def _box_halfspaces(box: Box) -> tuple[np.ndarray, np.ndarray]:
    normals = np.vstack([np.eye(3), -np.eye(3)])
    offsets = np.concatenate([box.hi, -box.lo])
    return normals, offsets


def _transform_halfspaces(m: PshMotion, normals, offsets):
    """Push halfspaces n.x <= d through x |-> A x + q: the image is
    (A^{-T} n) . y <= d + (A^{-T} n) . q."""
    a_mat, q = motion_affine(m)
    a_inv_t = np.linalg.inv(a_mat).T
    new_normals = normals @ a_inv_t.T
    new_offsets = offsets + new_normals @ q
    return new_normals, new_offsets


def transform_body(m: PshMotion, body: ConvexBody) -> ConvexBody:
    """The image of a body under a rigid motion, as a body of the richest
    type that represents it exactly.

    Motions with a horizontal translation component shear the t-axis, so
    balls and boxes map to ellipsoids and polytopes in general; purely
    vertical translations (and rotations about the t-axis for balls)
    preserve the original type.
    """
    a_mat, q = motion_affine(m)
    vertical = m.a == 0.0 and m.b == 0.0
    if isinstance(body, Ball):
        center = a_mat @ body.center + q
        if vertical:
            return Ball(center, body.radius)
        return Ellipsoid.from_linear(center, body.radius * a_mat)
    if isinstance(body, Ellipsoid):
        return Ellipsoid.from_linear(a_mat @ body.center + q, a_mat @ body.lin)
    if isinstance(body, Box):
        if vertical and m.alpha == 0.0:
            return Box(body.lo + q, body.hi + q)
        return Polytope(*_transform_halfspaces(m, *_box_halfspaces(body)))
    if isinstance(body, Polytope):
        return Polytope(*_transform_halfspaces(m, body.normals, body.offsets))
    raise CapabilityError(f"transform_body does not support {type(body).__name__}")

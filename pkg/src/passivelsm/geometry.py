"""Scatterer boundary curves, their discretization, and point arrays.

Supported curves are the circle, the axis-aligned ellipse, and the
standard kite (cos t + 0.65 cos 2t - 0.65, 1.5 sin t).  A curve is
placed by scaling its canonical parametrization, rotating, and
translating so that the midpoint of its canonical bounding box lands on
the requested center.  All parametrizations are smooth, closed,
counterclockwise, and non-self-intersecting.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .seeding import substream
from .specfun import WaveContext

# Canonical kite extremes: x in [-97/65, 1] (min at cos t = -5/13), y in
# [-3/2, 3/2]; its diameter 3 is the vertical chord t = pi/2 .. 3*pi/2.
_KITE_XMIN = -97.0 / 65.0
_KITE_XMAX = 1.0
_KITE_YMAX = 1.5


ROLE_RECEIVER = "receiver"
ROLE_DETERMINISTIC_SOURCE = "deterministic-source"
ROLE_RANDOM_SOURCE = "random-source"


def canonical_kite(t):
    """Canonical kite point(s) at parameter t in [0, 2*pi)."""
    t = np.asarray(t, dtype=float)
    x = np.cos(t) + 0.65 * np.cos(2.0 * t) - 0.65
    y = 1.5 * np.sin(t)
    return np.stack([x, y], axis=-1)


@dataclass(frozen=True)
class BoundaryCurve:
    """A placed scatterer curve.

    kind is one of "circle", "ellipse", "kite"; params holds (radius,)
    for the circle and (a, b) for the ellipse.  The placed curve is
    center + scale * R(rotation) @ (canonical(t) - canonical box middle).
    """

    kind: str
    params: tuple = ()
    center: tuple = (0.0, 0.0)
    scale: float = 1.0
    rotation: float = 0.0

    def __post_init__(self):
        if self.kind not in ("circle", "ellipse", "kite"):
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if self.kind == "circle" and (len(self.params) != 1 or self.params[0] <= 0):
            raise ValueError("circle takes params=(radius,) with radius > 0")
        if self.kind == "ellipse" and (
            len(self.params) != 2 or min(self.params) <= 0
        ):
            raise ValueError("ellipse takes params=(a, b) with a, b > 0")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    # -- canonical shape -------------------------------------------------
    def _canonical(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "circle":
            r = self.params[0]
            return np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)
        if self.kind == "ellipse":
            a, b = self.params
            return np.stack([a * np.cos(t), b * np.sin(t)], axis=-1)
        return canonical_kite(t)

    def _canonical_derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "circle":
            r = self.params[0]
            return np.stack([-r * np.sin(t), r * np.cos(t)], axis=-1)
        if self.kind == "ellipse":
            a, b = self.params
            return np.stack([-a * np.sin(t), b * np.cos(t)], axis=-1)
        dx = -np.sin(t) - 1.3 * np.sin(2.0 * t)
        dy = 1.5 * np.cos(t)
        return np.stack([dx, dy], axis=-1)

    def _canonical_box_middle(self):
        if self.kind == "kite":
            return np.array([(_KITE_XMIN + _KITE_XMAX) / 2.0, 0.0])
        return np.zeros(2)

    def canonical_diameter(self) -> float:
        """Maximal chord length of the canonical curve."""
        if self.kind == "circle":
            return 2.0 * self.params[0]
        if self.kind == "ellipse":
            return 2.0 * max(self.params)
        return 2.0 * _KITE_YMAX

    # -- placed curve ----------------------------------------------------
    def _rotation_matrix(self):
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        return np.array([[c, -s], [s, c]])

    def point(self, t):
        p = (self._canonical(t) - self._canonical_box_middle()) * self.scale
        return p @ self._rotation_matrix().T + np.asarray(self.center)

    def derivative(self, t):
        return (self._canonical_derivative(t) * self.scale) @ self._rotation_matrix().T

    @property
    def diameter(self) -> float:
        return self.scale * self.canonical_diameter()


def place_scatterer(
    curve: BoundaryCurve, ctx: WaveContext, center, size: float
) -> BoundaryCurve:
    """Scale `curve` so its maximal diameter equals `size`, put it at `center`.

    "Size" is read as the maximal chord of the placed curve, which is
    unambiguous across shapes.
    """
    if size <= 0:
        raise ValueError("size must be positive")
    del ctx  # lengths are absolute; the context only documents the wavelength
    scale = size / curve.canonical_diameter()
    return replace(curve, center=(float(center[0]), float(center[1])), scale=scale)


@dataclass(frozen=True)
class DiscretizedBoundary:
    """Equispaced-in-parameter quadrature of a closed curve.

    nodes x(t_j), outward unit normals, parameter speeds |x'(t_j)| and
    trapezoid arc-length weights (2*pi/n)|x'(t_j)| for t_j = 2*pi*j/n.
    """

    curve: BoundaryCurve
    n: int
    t: np.ndarray
    nodes: np.ndarray
    normals: np.ndarray
    speeds: np.ndarray
    weights: np.ndarray

    @property
    def perimeter(self) -> float:
        return float(self.weights.sum())

    @property
    def max_spacing(self) -> float:
        return float(self.weights.max())


def discretize(curve: BoundaryCurve, n: int) -> DiscretizedBoundary:
    """Discretize `curve` with n (even) equispaced parameter nodes."""
    if n < 4 or n % 2:
        raise ValueError(f"node count must be even and >= 4, got {n}")
    t = 2.0 * np.pi * np.arange(n) / n
    nodes = curve.point(t)
    deriv = curve.derivative(t)
    speeds = np.sqrt((deriv ** 2).sum(axis=1))
    if np.any(speeds <= 0):
        raise ValueError("degenerate parametrization: |x'(t)| must be positive")
    # outward normal of a counterclockwise curve
    normals = np.column_stack([deriv[:, 1], -deriv[:, 0]]) / speeds[:, None]
    weights = (2.0 * np.pi / n) * speeds
    for arr in (t, nodes, normals, speeds, weights):
        arr.flags.writeable = False
    return DiscretizedBoundary(
        curve=curve, n=n, t=t, nodes=nodes, normals=normals, speeds=speeds,
        weights=weights,
    )


# ---------------------------------------------------------------------------
# Interior / distance queries (used for validation and image metrics)
# ---------------------------------------------------------------------------
def contains_points(curve: BoundaryCurve, points, samples: int = 2048):
    """Even-odd interior test against a dense polygonal sampling."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    tt = 2.0 * np.pi * np.arange(samples) / samples
    poly = curve.point(tt)
    px, py = poly[:, 0], poly[:, 1]
    qx, qy = np.roll(px, 1), np.roll(py, 1)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    for i in range(samples):
        dy = qy[i] - py[i]
        if dy == 0.0:
            continue
        crosses = (py[i] > y) != (qy[i] > y)
        xint = (qx[i] - px[i]) * (y - py[i]) / dy + px[i]
        inside ^= crosses & (x < xint)
    return inside


def boundary_distance(curve: BoundaryCurve, points, samples: int = 2048):
    """Distance from each point to a dense sampling of the curve."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    tt = 2.0 * np.pi * np.arange(samples) / samples
    poly = curve.point(tt)
    out = np.empty(len(pts))
    block = 512
    for s in range(0, len(pts), block):
        chunk = pts[s : s + block]
        d = np.sqrt(((chunk[:, None, :] - poly[None, :, :]) ** 2).sum(-1))
        out[s : s + block] = d.min(axis=1)
    return out


# ---------------------------------------------------------------------------
# Receiver / source layouts
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PointSet:
    """Points on a circle or arc with the parameters that generated them."""

    points: np.ndarray
    role: str
    generation: dict

    @property
    def count(self) -> int:
        return len(self.points)


def _points_from_angles(radius, theta, role, generation):
    pts = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    pts.flags.writeable = False
    return PointSet(points=pts, role=role, generation=generation)


def circle_points(
    radius: float,
    count: int,
    beta: float = 0.0,
    seed: int = 0,
    arc: Optional[Sequence[float]] = None,
    role: str = ROLE_RECEIVER,
) -> PointSet:
    """Points theta_j = theta_min + dtheta*(j - 1 + beta_j) on |x| = radius.

    beta_j ~ U[0, beta] i.i.d. from the (seed, "circle-points") stream;
    beta = 0 gives exactly equispaced, seed-independent points.  With
    `arc` = (theta_min, theta_max) the layout covers that arc instead of
    the full circle.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")
    if arc is None:
        theta_min, span = 0.0, 2.0 * np.pi
    else:
        theta_min, theta_max = float(arc[0]), float(arc[1])
        if theta_max <= theta_min:
            raise ValueError("arc must satisfy theta_max > theta_min")
        span = theta_max - theta_min
    offsets = np.zeros(count)
    if beta > 0.0:
        offsets = substream(seed, "circle-points").uniform(0.0, beta, count)
    theta = theta_min + (span / count) * (np.arange(count) + offsets)
    generation = {
        "radius": float(radius), "count": int(count), "beta": float(beta),
        "seed": int(seed), "arc": None if arc is None else (theta_min, theta_min + span),
        "mode": "perturbed-equispaced",
    }
    return _points_from_angles(radius, theta, role, generation)


def circle_points_uniform(
    radius: float,
    count: int,
    seed: int,
    arc: Optional[Sequence[float]] = None,
    role: str = ROLE_RANDOM_SOURCE,
) -> PointSet:
    """count i.i.d. uniformly random angles on the circle or arc.

    Unlike the beta-perturbed layout this is unstratified, so quadrature
    built on it converges at the Monte Carlo rate 1/sqrt(count).
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if arc is None:
        theta_min, span = 0.0, 2.0 * np.pi
    else:
        theta_min, theta_max = float(arc[0]), float(arc[1])
        if theta_max <= theta_min:
            raise ValueError("arc must satisfy theta_max > theta_min")
        span = theta_max - theta_min
    theta = theta_min + span * substream(seed, "circle-points-uniform").uniform(
        0.0, 1.0, count
    )
    generation = {
        "radius": float(radius), "count": int(count), "beta": None,
        "seed": int(seed), "arc": None if arc is None else (theta_min, theta_min + span),
        "mode": "uniform",
    }
    return _points_from_angles(radius, theta, role, generation)

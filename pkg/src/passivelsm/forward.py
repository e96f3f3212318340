"""Exterior sound-soft scattering by a single-layer Nystrom method.

The scattered field of a point source y is represented as a single-layer
potential on the obstacle boundary,

    u_s(x) = int_dD phi(x, q) psi(q) ds(q),      S psi = -phi(., y) on dD,

discretized with the Kussmaul-Martensen (Kress) splitting of the
logarithmic kernel singularity on the periodic parametrization, which is
spectrally accurate for smooth curves.  The linear system acts on node
"charges" nu_j = w_j psi_j (quadrature weight times density), which makes
the matrix exactly symmetric and field evaluation a plain weighted sum.

Two independent references are provided for validation: the Mie series
for a circle and the small-obstacle (Born-type) point-scatterer model.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from .geometry import DiscretizedBoundary, boundary_distance, contains_points
from .specfun import (
    EULER_GAMMA,
    MAX_ORDER,
    WaveContext,
    _j0y0,
    bessel_jn,
    bessel_yn,
    green2d,
    hankel1_all,
)

logger = logging.getLogger(__name__)

RESONANCE_CONDITION_LIMIT = 1e10
MIE_TAIL_TOLERANCE = 1e-12
NEAR_BOUNDARY_SPACINGS = 3.0
UPSAMPLE_FACTOR = 4
NEAR_EVAL_TOLERANCE = 1e-6
MIN_SOURCE_CLEARANCE = 1e-3  # wavelengths


class GeometryError(ValueError):
    """A point lies inside or too close to a scatterer boundary."""


class ResonanceWarning(UserWarning):
    """k^2 is (numerically) an interior Dirichlet eigenvalue of the obstacle."""


class TruncationWarning(UserWarning):
    """A series was truncated before reaching its tail tolerance."""


class AccuracyWarning(UserWarning):
    """A near-boundary evaluation may not meet the requested accuracy."""


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------
def kress_log_weights(n: int) -> np.ndarray:
    """Quadrature weights R_d for the ln(4 sin^2((t - t_j)/2)) factor.

    R depends only on d = (i - j) mod n:
        R_d = -(4 pi / n) sum_{m=1}^{n/2-1} cos(2 pi m d / n)/m
              - (4 pi / n^2) (-1)^d.
    The rule integrates trigonometric polynomials of degree < n/2 times
    the log factor exactly.
    """
    d = np.arange(n)
    m = np.arange(1, n // 2)
    R = -(4.0 * np.pi / n) * (
        np.cos(2.0 * np.pi * np.outer(d, m) / n) / m
    ).sum(axis=1)
    R -= (4.0 * np.pi / n ** 2) * np.where(d % 2 == 0, 1.0, -1.0)
    return R


def _h0(x):
    j, y = _j0y0(np.asarray(x, dtype=float))
    return j + 1j * y


def _pairwise_green(k: float, pts_a: np.ndarray, pts_b: np.ndarray) -> np.ndarray:
    """phi(a_i, b_j) without coincidence checks (callers exclude them)."""
    d = pts_a[:, None, :] - pts_b[None, :, :]
    r = np.sqrt((d ** 2).sum(-1))
    return 0.25j * _h0(k * r)


def _self_block(bnd: DiscretizedBoundary, ctx: WaveContext) -> np.ndarray:
    """Kress-quadrature Nystrom block of one boundary, acting on charges."""
    n = bnd.n
    k = ctx.k
    d = bnd.nodes[:, None, :] - bnd.nodes[None, :, :]
    r = np.sqrt((d ** 2).sum(-1))
    off = ~np.eye(n, dtype=bool)
    j0 = np.ones((n, n))
    y0 = np.zeros((n, n))
    j0[off], y0[off] = _j0y0(k * r[off])
    # phi = phi_1 * ln(4 sin^2((t_i - t_j)/2)) + phi_2 with smooth factors
    phi1 = -(1.0 / (4.0 * np.pi)) * j0
    dt = bnd.t[:, None] - bnd.t[None, :]
    log_factor = np.zeros((n, n))
    log_factor[off] = np.log(4.0 * np.sin(0.5 * dt[off]) ** 2)
    phi = 0.25j * (j0 + 1j * y0)
    phi2 = np.where(off, phi - phi1 * log_factor, 0.0)
    np.fill_diagonal(
        phi2, 0.25j - (EULER_GAMMA + np.log(0.5 * k * bnd.speeds)) / (2.0 * np.pi)
    )
    R = kress_log_weights(n)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return (n / (2.0 * np.pi)) * R[idx] * phi1 + phi2


@dataclass(frozen=True)
class SingleLayerSystem:
    """Assembled (and factorized) single-layer boundary system.

    The matrix acts on node charges; it is symmetric because the kernel
    phi(x, y) is.  An empty boundary list yields the trivial system of a
    free medium.
    """

    boundaries: tuple
    ctx: WaveContext
    matrix: np.ndarray
    lu: object
    condition_estimate: float

    @property
    def nodes(self) -> np.ndarray:
        if not self.boundaries:
            return np.zeros((0, 2))
        return np.concatenate([b.nodes for b in self.boundaries])

    @property
    def weights(self) -> np.ndarray:
        if not self.boundaries:
            return np.zeros(0)
        return np.concatenate([b.weights for b in self.boundaries])

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def assemble_single_layer(
    boundaries: Union[DiscretizedBoundary, Sequence[DiscretizedBoundary]],
    ctx: WaveContext,
) -> SingleLayerSystem:
    """Assemble and factorize the single-layer system for the scatterers.

    Diagonal blocks use the Kress log-singularity quadrature; blocks
    coupling distinct boundaries are smooth and get the plain trapezoid
    rule.  Emits ResonanceWarning when the 2-norm condition estimate
    exceeds 1e10, the numerical footprint of k^2 hitting an interior
    Dirichlet eigenvalue.
    """
    if isinstance(boundaries, DiscretizedBoundary):
        boundaries = (boundaries,)
    boundaries = tuple(boundaries)
    for b in boundaries:
        if b.n < 32 or b.n % 2:
            raise ValueError(f"boundary node count must be even and >= 32, got {b.n}")
    sizes = [b.n for b in boundaries]
    ntot = int(sum(sizes))
    matrix = np.zeros((ntot, ntot), dtype=complex)
    offs = np.cumsum([0] + sizes)
    for a, ba in enumerate(boundaries):
        sa = slice(offs[a], offs[a + 1])
        matrix[sa, sa] = _self_block(ba, ctx)
        for b in range(a + 1, len(boundaries)):
            sb = slice(offs[b], offs[b + 1])
            block = _pairwise_green(ctx.k, ba.nodes, boundaries[b].nodes)
            matrix[sa, sb] = block
            matrix[sb, sa] = block.T
    if ntot:
        cond = float(np.linalg.cond(matrix))
        lu = scipy.linalg.lu_factor(matrix)
    else:
        cond, lu = 1.0, None
    if cond > RESONANCE_CONDITION_LIMIT:
        warnings.warn(
            f"single-layer system condition {cond:.2e} exceeds "
            f"{RESONANCE_CONDITION_LIMIT:.0e}; k^2 is close to an interior "
            "Dirichlet eigenvalue of a scatterer",
            ResonanceWarning,
            stacklevel=2,
        )
    logger.debug("assembled single-layer system: n=%d cond=%.3e", ntot, cond)
    return SingleLayerSystem(
        boundaries=boundaries, ctx=ctx, matrix=matrix, lu=lu,
        condition_estimate=cond,
    )


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------
def require_exterior(system_or_boundaries, ctx: WaveContext, points, what="point"):
    """Raise GeometryError unless every point is clearly outside all scatterers."""
    if isinstance(system_or_boundaries, SingleLayerSystem):
        boundaries = system_or_boundaries.boundaries
    else:
        boundaries = tuple(system_or_boundaries)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    clearance = MIN_SOURCE_CLEARANCE * ctx.wavelength
    for b in boundaries:
        if contains_points(b.curve, pts).any():
            raise GeometryError(f"{what} lies inside a scatterer")
        if (boundary_distance(b.curve, pts) < clearance).any():
            raise GeometryError(
                f"{what} lies within {MIN_SOURCE_CLEARANCE:g} wavelengths of a boundary"
            )


def solve_charges(system: SingleLayerSystem, sources) -> np.ndarray:
    """Charge vectors for one or more point sources (columns).

    Solves M nu = -phi(nodes, y) for every source y; returns an array of
    shape (n_nodes, n_sources).
    """
    src = np.atleast_2d(np.asarray(sources, dtype=float))
    require_exterior(system, system.ctx, src, what="source")
    if system.size == 0:
        return np.zeros((0, len(src)), dtype=complex)
    rhs = -_pairwise_green(system.ctx.k, system.nodes, src)
    return scipy.linalg.lu_solve(system.lu, rhs)


@dataclass(frozen=True)
class ScatterSolution:
    """Boundary density for one point source, ready for field evaluation."""

    system: SingleLayerSystem
    source: np.ndarray
    density: np.ndarray  # physical density psi at the nodes
    charges: np.ndarray  # nu = weight * psi, what evaluation actually uses

    @property
    def ctx(self) -> WaveContext:
        return self.system.ctx


def solve_point_source(system: SingleLayerSystem, y) -> ScatterSolution:
    """Solve the boundary equation S psi = -phi(., y) for a source y."""
    y = np.asarray(y, dtype=float).reshape(2)
    nu = solve_charges(system, y[None, :])[:, 0]
    w = system.weights
    density = nu / w if system.size else nu
    return ScatterSolution(system=system, source=y, density=density, charges=nu)


# ---------------------------------------------------------------------------
# Field evaluation
# ---------------------------------------------------------------------------
def _trig_resample(values: np.ndarray, factor: int) -> np.ndarray:
    """Trigonometric interpolation of equispaced periodic samples."""
    n = len(values)
    m = n * factor
    spec = np.fft.fft(values)
    out = np.zeros(m, dtype=complex)
    h = n // 2
    out[:h] = spec[:h]
    if h > 1:
        out[-(h - 1):] = spec[-(h - 1):]
    out[h] = 0.5 * spec[h]
    out[m - h] += 0.5 * spec[h]
    return np.fft.ifft(out) * factor


def _boundary_contribution(
    bnd: DiscretizedBoundary, ctx: WaveContext, nu: np.ndarray, point: np.ndarray,
    factor: int,
) -> complex:
    """Single-boundary potential at one point, optionally upsampled."""
    if factor == 1:
        g = green2d(ctx, point[None, :], bnd.nodes)
        return complex(g @ nu)
    m = bnd.n * factor
    t = 2.0 * np.pi * np.arange(m) / m
    nodes = bnd.curve.point(t)
    # nu_j = (2 pi / n) mu(t_j) with mu = psi |x'| smooth and periodic, so
    # resampling mu and reweighting gives the refined charges.
    mu = nu * (bnd.n / (2.0 * np.pi))
    nu_fine = _trig_resample(mu, factor) * (2.0 * np.pi / m)
    g = green2d(ctx, point[None, :], nodes)
    return complex(g @ nu_fine)


def evaluate_scattered(solution: ScatterSolution, x) -> complex:
    """Scattered field u_s(x) = sum_q w_q phi(x, node_q) psi_q.

    Points closer to a boundary than three node spacings are evaluated
    with 4x trigonometric upsampling of the density; if the 2x and 4x
    upsampled values still disagree beyond 1e-6 (relative), an
    AccuracyWarning is emitted.
    """
    system = solution.system
    point = np.asarray(x, dtype=float).reshape(2)
    total = 0.0 + 0.0j
    offset = 0
    for bnd in system.boundaries:
        nu = solution.charges[offset : offset + bnd.n]
        offset += bnd.n
        dist = float(boundary_distance(bnd.curve, point[None, :])[0])
        if dist >= NEAR_BOUNDARY_SPACINGS * bnd.max_spacing:
            total += _boundary_contribution(bnd, system.ctx, nu, point, 1)
            continue
        coarse = _boundary_contribution(bnd, system.ctx, nu, point, UPSAMPLE_FACTOR // 2)
        fine = _boundary_contribution(bnd, system.ctx, nu, point, UPSAMPLE_FACTOR)
        scale = max(abs(fine), 1e-300)
        if abs(fine - coarse) > NEAR_EVAL_TOLERANCE * scale:
            warnings.warn(
                f"near-boundary evaluation at distance {dist:.3e} may exceed "
                f"{NEAR_EVAL_TOLERANCE:g} relative error",
                AccuracyWarning,
                stacklevel=2,
            )
        total += fine
    return complex(total)


def scattered_matrix(
    system: SingleLayerSystem, charges: np.ndarray, points
) -> np.ndarray:
    """u_s at many points for many charge columns: shape (P, S).

    Fast path for points beyond the near-boundary band; near points fall
    back to the pointwise upsampled evaluation.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if system.size == 0:
        return np.zeros((len(pts), charges.shape[1] if charges.ndim == 2 else 1), complex)
    cols = charges if charges.ndim == 2 else charges[:, None]
    near = np.zeros(len(pts), dtype=bool)
    for bnd in system.boundaries:
        near |= boundary_distance(bnd.curve, pts) < NEAR_BOUNDARY_SPACINGS * bnd.max_spacing
    out = np.empty((len(pts), cols.shape[1]), dtype=complex)
    far = ~near
    if far.any():
        g = _pairwise_green(system.ctx.k, pts[far], system.nodes)
        out[far] = g @ cols
    for i in np.where(near)[0]:
        for s in range(cols.shape[1]):
            sol = ScatterSolution(
                system=system, source=pts[i], density=cols[:, s] / system.weights,
                charges=cols[:, s],
            )
            out[i, s] = evaluate_scattered(sol, pts[i])
    return out


def total_field(system: SingleLayerSystem, x, y) -> complex:
    """Total field u(x, y) = phi(x, y) + u_s(x, y); equals phi in free space."""
    x = np.asarray(x, dtype=float).reshape(2)
    y = np.asarray(y, dtype=float).reshape(2)
    phi = green2d(system.ctx, x, y)
    if system.size == 0:
        return complex(phi)
    sol = solve_point_source(system, y)
    return complex(phi + evaluate_scattered(sol, x))


def total_field_matrix(system: SingleLayerSystem, receivers, sources) -> np.ndarray:
    """u(x_j, z_l) for all receiver/source pairs, shape (J, L)."""
    recv = np.atleast_2d(np.asarray(receivers, dtype=float))
    src = np.atleast_2d(np.asarray(sources, dtype=float))
    phi = green2d(system.ctx, recv[:, None, :], src[None, :, :])
    if system.size == 0:
        return phi
    charges = solve_charges(system, src)
    return scattered_matrix(system, charges, recv) + phi


# ---------------------------------------------------------------------------
# Analytic references
# ---------------------------------------------------------------------------
def mie_scattered_circle(
    ctx: WaveContext, radius: float, center, x, y, truncation: int | None = None,
):
    """Scattered field of a sound-soft circle by the Mie (separation) series.

        u_s(x, y) = -(i/4) sum_n [J_n(ka)/H_n(ka)] H_n(k r_x) H_n(k r_y)
                    e^{i n (theta_x - theta_y)},

    polar coordinates about the circle center.  Truncation defaults to
    ceil(ka) + 20; a TruncationWarning is emitted if the last term is not
    below 1e-12 of the running sum.  `x` may be an array of points.
    """
    center = np.asarray(center, dtype=float).reshape(2)
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 1
    xs = np.atleast_2d(xs)
    y = np.asarray(y, dtype=float).reshape(2)
    rel_x = xs - center
    rel_y = y - center
    r_x = np.sqrt((rel_x ** 2).sum(-1))
    r_y = float(np.hypot(*rel_y))
    # boundary evaluation (r == radius) is allowed; the series converges there
    limit = radius * (1.0 - 1e-12)
    if r_y < limit or np.any(r_x < limit):
        raise GeometryError("Mie evaluation requires points outside the circle")
    ka = ctx.k * radius
    nmax = int(math.ceil(ka)) + 20 if truncation is None else int(truncation)
    if nmax > MAX_ORDER:
        raise ValueError(
            f"Mie truncation {nmax} exceeds the supported order cap {MAX_ORDER}"
        )
    ja = bessel_jn(nmax, np.array([ka]))[:, 0]
    ya = bessel_yn(nmax, np.array([ka]))[:, 0]
    ratio = ja / (ja + 1j * ya)
    hx = hankel1_all(nmax, ctx.k * r_x)
    hy = hankel1_all(nmax, np.array([ctx.k * r_y]))[:, 0]
    theta_x = np.arctan2(rel_x[:, 1], rel_x[:, 0])
    theta_y = math.atan2(rel_y[1], rel_y[0])
    acc = ratio[0] * hx[0] * hy[0]
    running_max = np.abs(acc).max()
    last = 0.0
    for n in range(1, nmax + 1):
        term = 2.0 * ratio[n] * hx[n] * hy[n] * np.cos(n * (theta_x - theta_y))
        acc = acc + term
        running_max = max(running_max, float(np.abs(acc).max()))
        last = float(np.abs(term).max())
    if last > MIE_TAIL_TOLERANCE * max(running_max, 1e-300):
        warnings.warn(
            f"Mie tail term {last:.2e} above {MIE_TAIL_TOLERANCE:g} of the sum; "
            "increase the truncation",
            TruncationWarning,
            stacklevel=2,
        )
    out = -0.25j * acc
    return complex(out[0]) if scalar else out


@dataclass(frozen=True)
class PointScattererConfig:
    """Collection of small sound-soft circles for the asymptotic model."""

    centers: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        r = np.atleast_1d(np.asarray(self.radii, dtype=float))
        if len(c) != len(r):
            raise ValueError("centers and radii must have equal length")
        if np.any(r <= 0):
            raise ValueError("radii must be positive")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)

    def reflection_coefficients(self, ctx: WaveContext) -> np.ndarray:
        """lambda_l = 4i / H_0^(1)(k r_l), recomputed from (k, r_l)."""
        return 4j / _h0(ctx.k * self.radii)


def point_scatterer_scattered(
    config: PointScattererConfig, ctx: WaveContext, x, y
):
    """Born-type scattered field of small circles (no multiple scattering).

        u_s(x, y) ~ sum_l lambda_l phi(c_l, y) phi(x, c_l).
    """
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 1
    xs = np.atleast_2d(xs)
    y = np.asarray(y, dtype=float).reshape(2)
    lam = config.reflection_coefficients(ctx)
    phi_cy = green2d(ctx, config.centers, y)          # (L,)
    phi_xc = green2d(ctx, xs[:, None, :], config.centers[None, :, :])  # (P, L)
    out = phi_xc @ (lam * phi_cy)
    return complex(out[0]) if scalar else out

"""Linear sampling inversion: SVD, Tikhonov filtering, Morozov parameter
selection, and indicator maps on a probe grid.

For a probe point z with right-hand side (phi_z)_j = phi(x_j, z), the
regularized solution of the measurement system A g = phi_z is computed
in the SVD basis A = U S V*:

    (V* g)_j = sigma_j / (alpha + sigma_j^2) * (U* phi_z)_j,

with alpha chosen per point by Morozov's discrepancy principle

    ||A g - phi_z||^2 = delta^2 ||g||^2,

i.e. the unique positive root of

    F(alpha) = sum_j (alpha^2 - delta^2 sigma_j^2)
               / (alpha + sigma_j^2)^2 * |(U* phi_z)_j|^2 = 0,

which is strictly increasing on (0, inf).  The obstacle is where
||g_z|| stays small, so the visual indicator is the min-max normalized
reciprocal 1/||g_z||; the raw field is kept alongside it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .acquisition import FieldMatrix
from .geometry import PointSet
from .specfun import SINGULARITY_FACTOR, WaveContext, green2d

logger = logging.getLogger(__name__)

MAX_SVD_SIZE = 2048
BISECT_RELATIVE_TOL = 1e-12
ALPHA_FLOOR = 1e-30


class MorozovNoRootError(RuntimeError):
    """The discrepancy equation has no positive root: noise exceeds signal."""


@dataclass(frozen=True)
class SvdFactors:
    """Full SVD A = U diag(sigma) V* of a square complex matrix."""

    u: np.ndarray
    sigma: np.ndarray
    vh: np.ndarray

    @property
    def v(self) -> np.ndarray:
        return self.vh.conj().T

    @property
    def size(self) -> int:
        return len(self.sigma)


def svd(matrix) -> SvdFactors:
    """Full SVD of a FieldMatrix or square complex array."""
    a = matrix.entries if isinstance(matrix, FieldMatrix) else np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("svd expects a square matrix")
    if a.shape[0] > MAX_SVD_SIZE:
        raise ValueError(f"matrix size {a.shape[0]} exceeds {MAX_SVD_SIZE}")
    u, s, vh = np.linalg.svd(a)
    return SvdFactors(u=u, sigma=s, vh=vh)


def rhs_vector(receivers: PointSet, z, ctx: WaveContext) -> np.ndarray:
    """(phi_z)_j = phi(x_j, z); singular if z coincides with a receiver."""
    z = np.asarray(z, dtype=float).reshape(2)
    return green2d(ctx, receivers.points, z)


def rhs_vectors(receivers: PointSet, zs, ctx: WaveContext) -> np.ndarray:
    """Right-hand sides for many probe points, shape (J, P)."""
    zs = np.atleast_2d(np.asarray(zs, dtype=float))
    return green2d(ctx, receivers.points[:, None, :], zs[None, :, :])


def _discrepancy(log_alpha, sigma2, delta2_sigma2, b2):
    alpha = np.exp(log_alpha)[None, :]
    return (((alpha * alpha - delta2_sigma2) / (alpha + sigma2) ** 2) * b2).sum(axis=0)


def _morozov_bisect_many(sigma: np.ndarray, b2: np.ndarray, delta: float):
    """Vectorized log-space bisection of the discrepancy equation.

    Returns (alpha, solvable) for right-hand sides given as columns of
    squared coefficients b2 = |U* phi_z|^2.  F(delta * sigma_max) >= 0
    always holds, so the root (when it exists) lies in
    [ALPHA_FLOOR, delta * sigma_max].
    """
    sigma2 = (sigma ** 2)[:, None]
    d2s2 = (delta ** 2) * sigma2
    cols = b2.shape[1]
    hi0 = max(delta * float(sigma.max(initial=0.0)), ALPHA_FLOOR * 2)
    lo = np.full(cols, np.log(ALPHA_FLOOR))
    hi = np.full(cols, np.log(hi0))
    f_lo = _discrepancy(lo, sigma2, d2s2, b2)
    f_hi = _discrepancy(hi, sigma2, d2s2, b2)
    # In exact arithmetic f_hi >= 0; guard against rounding by doubling.
    for _ in range(64):
        bad = f_hi < 0
        if not bad.any():
            break
        hi[bad] += np.log(2.0)
        f_hi = _discrepancy(hi, sigma2, d2s2, b2)
    solvable = f_lo < 0
    span = float(np.max(hi - lo, initial=0.0))
    iters = max(1, int(np.ceil(np.log2(max(span, 1e-15) / BISECT_RELATIVE_TOL))))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        positive = _discrepancy(mid, sigma2, d2s2, b2) > 0
        hi = np.where(positive, mid, hi)
        lo = np.where(positive, lo, mid)
    return np.exp(0.5 * (lo + hi)), solvable


def morozov_alpha(factors: SvdFactors, b: np.ndarray, delta: float) -> float:
    """Positive root of the discrepancy equation for coefficients b = U* phi_z.

    Raises MorozovNoRootError when no root exists (the noise level
    exceeds what the data can resolve); callers then take the
    alpha -> infinity limit, where ||g|| -> 0.
    """
    if delta <= 0:
        raise ValueError("morozov_alpha requires delta > 0")
    b = np.asarray(b)
    if not np.any(np.abs(b) > 0):
        raise MorozovNoRootError("zero right-hand side")
    b2 = (np.abs(b) ** 2)[:, None]
    alpha, solvable = _morozov_bisect_many(factors.sigma, b2, delta)
    if not solvable[0]:
        raise MorozovNoRootError("noise exceeds signal: no discrepancy root")
    return float(alpha[0])


def tikhonov_gnorm(
    factors: SvdFactors, phi_z: np.ndarray, alpha: float
) -> tuple[float, float]:
    """(||g||, residual) of the Tikhonov solution at parameter alpha.

    Computed in the SVD basis: the filter sigma/(alpha + sigma^2) gives
    the coefficients of g, and alpha/(alpha + sigma^2) those of the
    residual.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    b = factors.u.conj().T @ np.asarray(phi_z)
    s = factors.sigma
    g_norm = float(np.linalg.norm(s / (alpha + s ** 2) * b))
    residual = float(np.linalg.norm(alpha / (alpha + s ** 2) * b))
    return g_norm, residual


def tikhonov_solve(factors: SvdFactors, phi_z: np.ndarray, alpha: float) -> np.ndarray:
    """The Tikhonov-filtered solution vector g itself."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    b = factors.u.conj().T @ np.asarray(phi_z)
    s = factors.sigma
    return factors.v @ (s / (alpha + s ** 2) * b)


@dataclass(frozen=True)
class ProbeResult:
    """Morozov-regularized probe of one sampling point."""

    z: np.ndarray
    alpha: float
    g_norm: float
    residual: float


def probe_point(factors: SvdFactors, phi_z: np.ndarray, z, delta: float) -> ProbeResult:
    """Solve one probe point end to end (Morozov alpha, then norms)."""
    b = factors.u.conj().T @ np.asarray(phi_z)
    alpha = morozov_alpha(factors, b, delta)
    g_norm, residual = tikhonov_gnorm(factors, phi_z, alpha)
    return ProbeResult(z=np.asarray(z, dtype=float), alpha=alpha,
                       g_norm=g_norm, residual=residual)


# ---------------------------------------------------------------------------
# Indicator maps
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class GridSpec:
    """Rectangular probe grid with inclusive endpoints."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def axes(self):
        return (
            np.linspace(self.x_min, self.x_max, self.nx),
            np.linspace(self.y_min, self.y_max, self.ny),
        )

    def points(self):
        xs, ys = self.axes()
        xx, yy = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])

    @property
    def cell(self) -> float:
        dx = (self.x_max - self.x_min) / max(self.nx - 1, 1)
        dy = (self.y_max - self.y_min) / max(self.ny - 1, 1)
        return max(dx, dy)


@dataclass(frozen=True)
class IndicatorMap:
    """Raw ||g_z|| values and the normalized reciprocal visual indicator.

    mask marks cells that were probed successfully inside the mask
    radius; masked-out cells carry value 0 in both fields.
    """

    grid: GridSpec
    values: np.ndarray
    reciprocal: np.ndarray
    mask: np.ndarray
    norm_min: float
    norm_max: float
    mask_radius: float


def indicator_map(
    matrix: FieldMatrix,
    grid: GridSpec,
    ctx: WaveContext,
    receivers: Optional[PointSet] = None,
    delta: Optional[float] = None,
    mask_radius: Optional[float] = None,
    rhs_mode: tuple = (1.0, 0.0),
) -> IndicatorMap:
    """Probe the medium on `grid` with per-point Morozov regularization.

    One SVD is computed per matrix; all probe points share it.  Points
    outside the mask radius (default: the receiver circle radius) are
    skipped; points whose discrepancy equation has no root are recorded
    as failures in the mask.  rhs_mode = (a, b) probes with
    a*phi_z + b*conj(phi_z); the default is the plain point-source
    right-hand side.
    """
    receivers = receivers if receivers is not None else matrix.receivers
    delta = matrix.delta if delta is None else float(delta)
    if delta <= 0:
        raise ValueError("indicator_map requires a positive noise level delta")
    if mask_radius is None:
        mask_radius = float(receivers.generation.get("radius", np.inf))
    factors = svd(matrix)
    pts = grid.points()
    inside = (pts ** 2).sum(axis=1) <= mask_radius ** 2
    # exclude probe points that collide with a receiver
    dmin = np.full(len(pts), np.inf)
    if inside.any():
        d = np.sqrt(((pts[inside][:, None, :] - receivers.points[None, :, :]) ** 2).sum(-1))
        dmin[inside] = d.min(axis=1)
    probe = inside & (dmin > SINGULARITY_FACTOR * ctx.wavelength)
    values = np.zeros(len(pts))
    ok = np.zeros(len(pts), dtype=bool)
    if probe.any():
        phi = rhs_vectors(receivers, pts[probe], ctx)
        a, bcoef = rhs_mode
        if bcoef != 0.0 or a != 1.0:
            phi = a * phi + bcoef * np.conj(phi)
        b = factors.u.conj().T @ phi
        b2 = np.abs(b) ** 2
        alpha, solvable = _morozov_bisect_many(factors.sigma, b2, delta)
        filt = factors.sigma[:, None] / (alpha[None, :] + (factors.sigma ** 2)[:, None])
        g_norm = np.sqrt(((filt ** 2) * b2).sum(axis=0))
        g_norm[~solvable] = 0.0
        values[probe] = g_norm
        ok[probe] = solvable
    reciprocal = np.zeros(len(pts))
    valid = ok & (values > 0)
    if valid.any():
        rec = 1.0 / values[valid]
        lo, hi = float(rec.min()), float(rec.max())
        reciprocal[valid] = (rec - lo) / (hi - lo) if hi > lo else 0.0
    else:
        lo = hi = 0.0
    shape = (grid.nx, grid.ny)
    n_ok = int(valid.sum())
    logger.debug("indicator map: %d/%d grid points probed", n_ok, len(pts))
    return IndicatorMap(
        grid=grid,
        values=values.reshape(shape),
        reciprocal=reciprocal.reshape(shape),
        mask=valid.reshape(shape),
        norm_min=lo,
        norm_max=hi,
        mask_radius=float(mask_radius),
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------
def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_indicator_csv(imap: IndicatorMap, path) -> None:
    """Full per-point table: x, y, raw ||g||, normalized reciprocal, mask."""
    xs, ys = imap.grid.axes()
    lines = ["x,y,raw,reciprocal,mask"]
    for iy in range(imap.grid.ny):
        for ix in range(imap.grid.nx):
            lines.append(
                f"{_fmt(xs[ix])},{_fmt(ys[iy])},{_fmt(imap.values[ix, iy])},"
                f"{_fmt(imap.reciprocal[ix, iy])},{int(imap.mask[ix, iy])}"
            )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_indicator_raw_csv(imap: IndicatorMap, path) -> None:
    """Raw ||g|| field only: x, y, value, mask."""
    xs, ys = imap.grid.axes()
    lines = ["x,y,value,mask"]
    for iy in range(imap.grid.ny):
        for ix in range(imap.grid.nx):
            lines.append(
                f"{_fmt(xs[ix])},{_fmt(ys[iy])},{_fmt(imap.values[ix, iy])},"
                f"{int(imap.mask[ix, iy])}"
            )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_indicator_pgm(imap: IndicatorMap, path) -> None:
    """8-bit binary PGM of the reciprocal indicator, rows top to bottom."""
    img = np.round(255.0 * np.clip(imap.reciprocal, 0.0, 1.0)).astype(np.uint8)
    img[~imap.mask] = 0
    # values[ix, iy] -> image row = top-to-bottom in y, column = x
    raster = img.T[::-1, :]
    header = f"P5\n{imap.grid.nx} {imap.grid.ny}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(raster.tobytes())

"""Measurement matrices: near-field, imaginary near-field, cross-correlation
from deterministic random-position sources, and covariance from random
noise amplitudes, plus white-noise contamination.

Conventions, with receivers x_j, sources z_l on a curve Sigma of length
|Sigma| (the 2D "area"), u the total field and phi the Green's function:

    N_jm = u_s(x_j, x_m)
    I_jm = N_jm - conj(N_jm)
    C_jm = (2ik|Sigma|/L) sum_l conj(u(x_j, z_l)) u(x_m, z_l)
           - [phi(x_j, x_m) - conj(phi(x_j, x_m))]
    C_jm = 2ik <U(x_j) conj(U(x_m))> - [same bracket]   (covariance setup)

The bracket is 2i Im phi = (i/2) J_0(k |x_j - x_m|) entrywise, which is
finite on the diagonal (J_0(0) = 1 gives i/2), matching the limit value
of the self-correlation term.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .forward import (
    PointScattererConfig,
    SingleLayerSystem,
    point_scatterer_scattered,
    require_exterior,
    scattered_matrix,
    solve_charges,
    total_field_matrix,
)
from .geometry import PointSet
from .seeding import substream
from .specfun import WaveContext, _j0y0

logger = logging.getLogger(__name__)

NEAR_FIELD = "near-field"
IMAGINARY_NEAR_FIELD = "imaginary-near-field"
CROSS_CORRELATION = "cross-correlation"
COVARIANCE = "covariance"

MATRIX_KINDS = (NEAR_FIELD, IMAGINARY_NEAR_FIELD, CROSS_CORRELATION, COVARIANCE)


@dataclass(frozen=True)
class FieldMatrix:
    """J x J complex measurement matrix with its provenance.

    provenance records what produced the matrix: source layout, L, beta,
    M, seeds, noise amplitude and the spectral-norm noise level delta
    (0 for noise-free matrices).
    """

    entries: np.ndarray
    kind: str
    receivers: PointSet
    provenance: dict

    def __post_init__(self):
        if self.kind not in MATRIX_KINDS:
            raise ValueError(f"unknown matrix kind {self.kind!r}")
        e = np.asarray(self.entries)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("entries must be a square matrix")

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def delta(self) -> float:
        return float(self.provenance.get("delta", 0.0))


def imaginary_bracket(ctx: WaveContext, receivers: PointSet) -> np.ndarray:
    """phi - conj(phi) at receiver pairs: (i/2) J_0(k r), i/2 on the diagonal."""
    pts = receivers.points
    d = pts[:, None, :] - pts[None, :, :]
    r = np.sqrt((d ** 2).sum(-1))
    j0, _ = _j0y0(ctx.k * r.ravel())
    return 0.5j * j0.reshape(r.shape)


def near_field_matrix(receivers: PointSet, system: SingleLayerSystem) -> FieldMatrix:
    """N_jm = u_s(x_j, x_m) with co-located sources and receivers.

    One boundary factorization serves all J source columns; the result
    is symmetric by reciprocity (exactly so in this discretization).
    """
    pts = receivers.points
    require_exterior(system, system.ctx, pts, what="receiver")
    if system.size == 0:
        entries = np.zeros((len(pts), len(pts)), dtype=complex)
    else:
        charges = solve_charges(system, pts)
        entries = scattered_matrix(system, charges, pts)
    prov = {
        "k": system.ctx.k,
        "sources": "co-located",
        "noise_amplitude": 0.0,
        "delta": 0.0,
        "receiver_generation": receivers.generation,
    }
    return FieldMatrix(entries=entries, kind=NEAR_FIELD, receivers=receivers,
                       provenance=prov)


def imaginary_near_field_matrix(matrix: FieldMatrix) -> FieldMatrix:
    """I = N - conj(N), entrywise (2i times the imaginary part)."""
    if matrix.kind != NEAR_FIELD:
        raise ValueError(
            f"imaginary near-field requires a {NEAR_FIELD} input, got {matrix.kind}"
        )
    entries = matrix.entries - np.conj(matrix.entries)
    prov = dict(matrix.provenance)
    prov.update({"noise_amplitude": 0.0, "delta": 0.0})
    return FieldMatrix(entries=entries, kind=IMAGINARY_NEAR_FIELD,
                       receivers=matrix.receivers, provenance=prov)


def cross_correlation_matrix(
    receivers: PointSet,
    random_sources: PointSet,
    sigma_length: float,
    system: SingleLayerSystem,
) -> FieldMatrix:
    """Cross-correlation matrix of total fields from sources on Sigma.

    sigma_length is the length |Sigma| of the source curve; the sources
    should surround both receivers and scatterers for the underlying
    identity to hold (a limited-aperture arc degrades it by design).
    """
    require_exterior(system, system.ctx, receivers.points, what="receiver")
    u = total_field_matrix(system, receivers.points, random_sources.points)
    L = random_sources.count
    k = system.ctx.k
    corr = (2j * k * sigma_length / L) * (np.conj(u) @ u.T)
    entries = corr - imaginary_bracket(system.ctx, receivers)
    prov = {
        "k": k,
        "L": L,
        "beta": random_sources.generation.get("beta"),
        "source_mode": random_sources.generation.get("mode"),
        "source_seed": random_sources.generation.get("seed"),
        "sigma_length": float(sigma_length),
        "noise_amplitude": 0.0,
        "delta": 0.0,
        "receiver_generation": receivers.generation,
    }
    return FieldMatrix(entries=entries, kind=CROSS_CORRELATION,
                       receivers=receivers, provenance=prov)


def covariance_matrix(
    receivers: PointSet,
    sources: PointSet,
    sigma_length: float,
    realizations: int,
    seed: int,
    system: SingleLayerSystem,
) -> FieldMatrix:
    """Empirical covariance matrix from M realizations of surface noise.

    Each realization excites the deterministic source points z_l with
    complex amplitudes n_l = u_l + i v_l, u_l, v_l ~ N(0, |Sigma|/(2L)).
    That per-component variance makes E[n_l conj(n_m)] = (|Sigma|/L)
    delta_lm, so the M -> infinity limit reproduces the quadrature
    cross-correlation built on the same sources.  Realization r draws
    from the (seed, "covariance-noise", r) stream, independent of any
    scheduling.
    """
    if realizations < 1:
        raise ValueError("realizations must be at least 1")
    require_exterior(system, system.ctx, receivers.points, what="receiver")
    u = total_field_matrix(system, receivers.points, sources.points)  # (J, L)
    L = sources.count
    k = system.ctx.k
    std = np.sqrt(sigma_length / (2.0 * L))
    acc = np.zeros((receivers.count, receivers.count), dtype=complex)
    for r in range(realizations):
        g = substream(seed, "covariance-noise", r).standard_normal((2, L))
        amplitudes = std * (g[0] + 1j * g[1])
        field = u @ amplitudes  # U(x_j) for this realization
        acc += np.outer(field, np.conj(field))
    entries = (2j * k / realizations) * acc - imaginary_bracket(system.ctx, receivers)
    prov = {
        "k": k,
        "L": L,
        "M": int(realizations),
        "beta": sources.generation.get("beta"),
        "source_mode": sources.generation.get("mode"),
        "source_seed": sources.generation.get("seed"),
        "realization_seed": int(seed),
        "sigma_length": float(sigma_length),
        "noise_amplitude": 0.0,
        "delta": 0.0,
        "receiver_generation": receivers.generation,
    }
    return FieldMatrix(entries=entries, kind=COVARIANCE, receivers=receivers,
                       provenance=prov)


def point_scatterer_near_field(
    receivers: PointSet, config: PointScattererConfig, ctx: WaveContext
) -> FieldMatrix:
    """Near-field matrix of the small-obstacle asymptotic model."""
    pts = receivers.points
    entries = np.empty((len(pts), len(pts)), dtype=complex)
    for m in range(len(pts)):
        entries[:, m] = point_scatterer_scattered(config, ctx, pts, pts[m])
    prov = {
        "k": ctx.k,
        "sources": "co-located",
        "model": "point-scatterer",
        "noise_amplitude": 0.0,
        "delta": 0.0,
        "receiver_generation": receivers.generation,
    }
    return FieldMatrix(entries=entries, kind=NEAR_FIELD, receivers=receivers,
                       provenance=prov)


def add_noise(matrix: FieldMatrix, amplitude: float, seed: int) -> FieldMatrix:
    """Contaminate with complex white noise scaled by the largest entry.

    E_jm = amplitude * max|entries| * (g1 + i g2)/sqrt(2) with g standard
    normal from the (seed, "measurement-noise") stream, and the recorded
    noise level delta is the exact spectral norm of the drawn E.
    """
    if amplitude < 0:
        raise ValueError("noise amplitude must be nonnegative")
    if amplitude == 0.0:
        prov = dict(matrix.provenance)
        prov.update({"noise_amplitude": 0.0, "delta": 0.0, "noise_seed": int(seed)})
        return replace(matrix, provenance=prov)
    j = matrix.size
    g = substream(seed, "measurement-noise").standard_normal((2, j, j))
    scale = amplitude * float(np.abs(matrix.entries).max())
    noise = scale * (g[0] + 1j * g[1]) / np.sqrt(2.0)
    delta = float(np.linalg.norm(noise, 2))
    prov = dict(matrix.provenance)
    prov.update({
        "noise_amplitude": float(amplitude),
        "noise_seed": int(seed),
        "delta": delta,
    })
    logger.debug("added noise: amplitude=%g delta=%.6e", amplitude, delta)
    return replace(matrix, entries=matrix.entries + noise, provenance=prov)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------
def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_matrix_csv(matrix: FieldMatrix, path) -> None:
    """Row-major CSV, one `re,im` line per entry, provenance in the header."""
    p = matrix.provenance
    header = (
        f"# kind={matrix.kind},J={matrix.size},k={_fmt(p.get('k', 0.0))},"
        f"seed={p.get('source_seed', p.get('noise_seed', 0))},"
        f"delta={_fmt(matrix.delta)},"
        f"noise_amplitude={_fmt(p.get('noise_amplitude', 0.0))},"
        f"L={p.get('L', '')},beta={p.get('beta', '')},M={p.get('M', '')}"
    )
    lines = [header]
    flat = matrix.entries.ravel()
    lines.extend(f"{_fmt(v.real)},{_fmt(v.imag)}" for v in flat)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix_csv(path) -> tuple[np.ndarray, dict]:
    """Read a matrix written by write_matrix_csv; returns (entries, header)."""
    with open(path) as fh:
        header_line = fh.readline().strip()
        data = np.loadtxt(fh, delimiter=",")
    if not header_line.startswith("# "):
        raise ValueError("missing matrix CSV header")
    fields = {}
    for item in header_line[2:].split(","):
        key, _, value = item.partition("=")
        fields[key] = value
    j = int(fields["J"])
    entries = (data[:, 0] + 1j * data[:, 1]).reshape(j, j)
    return entries, fields

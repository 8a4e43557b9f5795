"""Six-parameter motion recovery from an echo tensor.

Steps: symbol erasure, static-clutter removal, pitch / horizontal / distance
space values, per-antenna virtual velocities, plane fit, velocity inversion.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .airlink import EchoTensor, SymbolFrame, erase_symbols, suppress_clutter
from .constants import SPEED_OF_LIGHT, TRIG_EPS
from .errors import EstimationError, NoTargetError, UnobservableError
from .geometry import ArrayGeometry
from .kinematics import OfdmGrid, PlaneCoeffs
from .subspace import esprit_single_batch, esprit_space_values

log = logging.getLogger(__name__)

# |SDD| may exceed 1 by this much from noise before the estimate is flagged
_SDD_TOL = 1e-6


class AxisEstimate(NamedTuple):
    value: float
    kappa: float
    order: int | None = None
    flagged: bool = False


class VirtualVelocitySample(NamedTuple):
    n_x: int
    n_z: int
    v: float


class VelocityEstimate(NamedTuple):
    v_r: float
    omega_theta: float
    omega_phi: float
    unobservable: tuple[str, ...] = ()


@dataclass
class Diagnostics:
    kappa_omega: float = math.nan
    kappa_psi: float = math.nan
    kappa_r: float = math.nan
    plane: PlaneCoeffs | None = None
    residual_rms: float = math.nan
    mdl_orders: dict[str, int | None] = field(default_factory=dict)
    failed_antennas: int = 0
    flags: list[str] = field(default_factory=list)


@dataclass
class Estimate6D:
    r_hat: float
    theta_hat: float
    phi_hat: float
    v_r_hat: float
    omega_theta_hat: float
    omega_phi_hat: float
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    def as_tuple(self) -> tuple[float, ...]:
        return (self.r_hat, self.theta_hat, self.phi_hat,
                self.v_r_hat, self.omega_theta_hat, self.omega_phi_hat)


@dataclass
class PipelineConfig:
    """What the estimator needs to know about the system."""

    hu_geom: ArrayGeometry
    ru_geom: ArrayGeometry
    grid: OfdmGrid
    suppression: bool = True
    epsilon: float = TRIG_EPS
    aim_theta: float | None = None


def _axis_space_value(matrix: np.ndarray, step: str) -> AxisEstimate:
    svs = esprit_space_values(matrix)
    if svs.count > 1:
        log.debug("%s: MDL selected %d sources for a single-beam dwell, using the dominant one",
                  step, svs.count)
    return AxisEstimate(math.nan, svs.dominant, svs.mdl_order)


def _omega_matrix(t: EchoTensor) -> np.ndarray:
    nx, nz, n, m = t.shape
    return np.moveaxis(t.data, 1, 0).reshape(nz, nx * n * m)


def estimate_pitch(t: EchoTensor, rx_geom: ArrayGeometry, f0: float, d: float) -> AxisEstimate:
    if rx_geom.nz < 2:
        raise EstimationError("pitch needs at least two RX rows", step="pitch")
    est = _axis_space_value(_omega_matrix(t), "pitch")
    omega = SPEED_OF_LIGHT * est.kappa / (2 * math.pi * f0 * d)
    flagged = abs(omega) > 1 + _SDD_TOL
    phi = math.asin(min(1.0, max(-1.0, omega)))
    return AxisEstimate(phi, est.kappa, est.order, flagged)


def estimate_horizontal(t: EchoTensor, rx_geom: ArrayGeometry, f0: float, d: float,
                        phi_hat: float, eps: float = TRIG_EPS) -> AxisEstimate:
    if rx_geom.nx < 2:
        raise EstimationError("horizontal angle needs at least two RX columns", step="horizontal")
    cos_phi = math.cos(phi_hat)
    if abs(cos_phi) < eps:
        raise UnobservableError("horizontal angle unobservable near zenith", step="horizontal")
    nx = t.shape[0]
    est = _axis_space_value(t.data.reshape(nx, -1), "horizontal")
    psi = SPEED_OF_LIGHT * est.kappa / (2 * math.pi * f0 * d)
    ratio = psi / cos_phi
    theta = math.acos(min(1.0, max(-1.0, ratio)))
    return AxisEstimate(theta, est.kappa, est.order, abs(ratio) > 1 + _SDD_TOL)


def estimate_distance(t: EchoTensor, grid: OfdmGrid) -> AxisEstimate:
    if t.shape[3] < 2:
        raise EstimationError("distance needs at least two subcarriers", step="distance")
    m = t.shape[3]
    est = _axis_space_value(np.moveaxis(t.data, 3, 0).reshape(m, -1), "distance")
    kappa = est.kappa - 2 * math.pi if est.kappa > 0 else est.kappa
    r = -SPEED_OF_LIGHT * kappa / (4 * math.pi * grid.delta_f)
    return AxisEstimate(r, kappa, est.order)


def velocity_ambiguity(grid: OfdmGrid) -> float:
    """Largest |virtual velocity| representable without phase wrap."""
    return SPEED_OF_LIGHT / (4 * grid.f0 * grid.t_s)


def estimate_virtual_velocities(t: EchoTensor, grid: OfdmGrid, f0: float) -> list[VirtualVelocitySample]:
    """Per-antenna Doppler velocities, in ``(n_x, n_z)`` index order.

    After mean removal the symbol-axis subspace is completed with the all-ones
    direction, which keeps it shift-invariant. Antennas whose ESPRIT step fails
    are omitted.
    """
    nx, nz, n, m = t.shape
    if n < 2:
        raise EstimationError("virtual velocity needs at least two symbols", step="virtual_velocity")
    null = np.ones(n) if t.stage == "dt_eec" else None
    if null is not None and n < 3:
        raise EstimationError("mean-removed data needs at least three symbols", step="virtual_velocity")
    kappa = esprit_single_batch(t.data.reshape(nx * nz, n, m), known_null=null)
    v = SPEED_OF_LIGHT * kappa / (4 * math.pi * f0 * grid.t_s)
    samples = [VirtualVelocitySample(i // nz, i % nz, float(val))
               for i, val in enumerate(v) if np.isfinite(val)]
    if len(samples) < v.size:
        log.warning("virtual velocity: %d of %d antennas failed", v.size - len(samples), v.size)
    return samples


def fit_plane(samples: Sequence[VirtualVelocitySample]) -> PlaneCoeffs:
    """Least-squares plane ``v = a + b n_x + c n_z``.

    An axis along which every sample shares the same index (a single-row or
    single-column array) gets a zero slope and a line is fitted instead.
    """
    if len(samples) < 2:
        raise EstimationError("plane fit needs at least two samples", step="plane_fit")
    arr = np.asarray(samples, dtype=float)
    x, z, v = arr[:, 0], arr[:, 1], arr[:, 2]
    xc, zc, vc = x - x.mean(), z - z.mean(), v - v.mean()
    sxx, szz, sxz = xc @ xc, zc @ zc, xc @ zc
    sxv, szv = xc @ vc, zc @ vc
    if sxx == 0 and szz == 0:
        raise EstimationError("all samples share one antenna index on both x and z axes",
                              step="plane_fit")
    if sxx == 0:
        b, c = 0.0, szv / szz
    elif szz == 0:
        b, c = sxv / sxx, 0.0
    else:
        det = sxx * szz - sxz * sxz
        if det <= 1e-12 * sxx * szz:
            raise EstimationError("sample indices are collinear: x and z axes are not independent",
                                  step="plane_fit")
        b = (szz * sxv - sxz * szv) / det
        c = (sxx * szv - sxz * sxv) / det
    a = v.mean() - b * x.mean() - c * z.mean()
    return PlaneCoeffs(float(a), float(b), float(c))


def plane_residual_rms(samples: Sequence[VirtualVelocitySample], coeffs: PlaneCoeffs) -> float:
    arr = np.asarray(samples, dtype=float)
    resid = arr[:, 2] - (coeffs.a + coeffs.b * arr[:, 0] + coeffs.c * arr[:, 1])
    return float(np.sqrt(np.mean(resid ** 2)))


def recover_velocities(coeffs: PlaneCoeffs, theta_hat: float, phi_hat: float,
                       tx_geom: ArrayGeometry, d: float, eps: float = TRIG_EPS) -> VelocityEstimate:
    """Invert the plane coefficients: pitch rate first, then horizontal rate, then radial velocity.

    The horizontal-rate ratio carries a positive sign; that is the sign under
    which this inverse undoes :func:`~isac6d.kinematics.plane_coeffs_forward`.
    Unobservable components come back as NaN and are listed in ``unobservable``.
    """
    a, b, c = coeffs
    cp, sp = math.cos(phi_hat), math.sin(phi_hat)
    ct, st = math.cos(theta_hat), math.sin(theta_hat)
    missing = []
    if abs(cp) > eps:
        w_phi = -2 * c / (d * cp)
    else:
        w_phi = math.nan
        missing.append("omega_phi")
    if abs(cp) > eps and abs(st) > eps:
        w_theta = (2 * b / d - sp * ct * w_phi) / (cp * st)
    else:
        w_theta = math.nan
        missing.append("omega_theta")
    pitch_term = d / 4 * ((tx_geom.nz - 1) * cp - (tx_geom.nx - 1) * sp * ct)
    horiz_term = d / 4 * (tx_geom.nx - 1) * cp * st
    if math.isnan(w_phi):
        v_r = math.nan
        missing.append("v_r")
    else:
        # an unobservable horizontal rate multiplies a vanishing sin(theta) here
        v_r = a + pitch_term * w_phi - (0.0 if math.isnan(w_theta) else horiz_term * w_theta)
    return VelocityEstimate(v_r, w_theta, w_phi, tuple(missing))


def _run(step: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except EstimationError as exc:
        if exc.step == step:
            raise
        # report the pipeline step; the inner step stays in the message
        raise type(exc)(str(exc), step=step) from exc
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise EstimationError(str(exc), step=step) from exc


def estimate_6d(t: EchoTensor, config, symbols: SymbolFrame | None = None) -> Estimate6D:
    """Run the full recovery on a raw, EEC or DT-EEC tensor.

    ``config`` needs ``hu_geom``, ``ru_geom``, ``grid``, ``suppression`` and
    ``epsilon``; :class:`PipelineConfig` and the harness ``SimConfig`` both fit.
    Raw tensors additionally need the transmitted ``symbols``.
    """
    rx, tx, grid = config.ru_geom, config.hu_geom, config.grid
    eps = getattr(config, "epsilon", TRIG_EPS)
    d, f0 = rx.spacing_d, grid.f0
    if t.shape != (rx.nx, rx.nz, grid.n_symbols, grid.m_subcarriers):
        raise EstimationError(f"tensor shape {t.shape} does not match the configuration", step="input")
    diag = Diagnostics()

    if t.stage == "raw":
        if symbols is None:
            raise EstimationError("raw tensor given without its symbol frame", step="erasure")
        t = _run("erasure", erase_symbols, t, symbols)
    if t.stage == "eec" and config.suppression:
        before = float(np.sum(np.abs(t.data) ** 2))
        t = _run("suppression", suppress_clutter, t)
        # what survives must beat the roundoff left by subtracting the mean
        if float(np.sum(np.abs(t.data) ** 2)) <= (1e3 * np.finfo(float).eps) ** 2 * before:
            raise NoTargetError("nothing but roundoff left after clutter suppression "
                                "(target has no virtual velocity)", step="suppression")

    pitch = _run("pitch", estimate_pitch, t, rx, f0, d)
    diag.kappa_omega, diag.mdl_orders["pitch"] = pitch.kappa, pitch.order
    if pitch.flagged:
        diag.flags.append("pitch SDD outside [-1, 1]")

    if rx.nx >= 2:
        horiz = _run("horizontal", estimate_horizontal, t, rx, f0, d, pitch.value, eps)
        diag.kappa_psi, diag.mdl_orders["horizontal"] = horiz.kappa, horiz.order
        theta_hat = horiz.value
        if horiz.flagged:
            diag.flags.append("horizontal SDD ratio outside [-1, 1]")
    else:
        aim = getattr(config, "aim_theta", None)
        if aim is None:
            raise EstimationError("single-column array and no beam aim to fall back on", step="horizontal")
        theta_hat = aim
        diag.flags.append("horizontal angle taken from beam aim (single RX column)")

    dist = _run("distance", estimate_distance, t, grid)
    diag.kappa_r, diag.mdl_orders["distance"] = dist.kappa, dist.order

    samples = _run("virtual_velocity", estimate_virtual_velocities, t, grid, f0)
    diag.failed_antennas = rx.size - len(samples)
    plane = _run("plane_fit", fit_plane, samples)
    diag.plane = plane
    diag.residual_rms = plane_residual_rms(samples, plane)

    vel = _run("velocity", recover_velocities, plane, theta_hat, pitch.value, tx, d, eps)
    diag.flags.extend(f"{name} unobservable" for name in vel.unobservable)
    return Estimate6D(dist.value, theta_hat, pitch.value, vel.v_r, vel.omega_theta, vel.omega_phi, diag)

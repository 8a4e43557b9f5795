"""Echo channel synthesis: exact delay model, factored 6D/4D model, static clutter."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .constants import SPEED_OF_LIGHT
from .geometry import ArrayGeometry, SphericalPoint, sdd_of, spherical_to_cartesian, upa_steering, SddPair
from .kinematics import OfdmGrid, TargetState, exact_sdd_at_symbol, state_at_symbol

ChannelMode = Literal["six_d", "four_d", "exact"]


class RangeAmbiguityWarning(UserWarning):
    """Target range lies beyond the unambiguous distance c / (2 delta_f)."""


@dataclass
class ChannelMatrix:
    """Echo channel on one (symbol, subcarrier); rows index RX antennas, columns TX antennas."""

    entries: np.ndarray
    n: int
    m: int

    def __add__(self, other: "ChannelMatrix") -> "ChannelMatrix":
        return ChannelMatrix(self.entries + other.entries, self.n, self.m)


@dataclass(frozen=True)
class Scatterer:
    position: SphericalPoint
    rcs: float = 1.0


@dataclass(frozen=True)
class ClutterModel:
    mode: Literal["none", "gaussian", "explicit"] = "none"
    scatterers: tuple[Scatterer, ...] = ()
    beta_c: float = 0.0

    def __post_init__(self):
        if self.mode == "explicit" and not self.scatterers:
            raise ValueError("explicit clutter needs at least one scatterer")
        if self.mode == "gaussian" and self.beta_c < 0:
            raise ValueError(f"beta_c must be >= 0, got {self.beta_c}")
        if self.mode not in ("none", "gaussian", "explicit"):
            raise ValueError(f"unknown clutter mode {self.mode!r}")


def unambiguous_range(grid: OfdmGrid) -> float:
    return SPEED_OF_LIGHT / (2.0 * grid.delta_f)


def fading_factor(r: float, rcs: float, f0: float) -> float:
    """Round-trip amplitude ``sqrt(lambda^2 / ((4 pi)^3 r^4)) * rcs``."""
    if not r > 0:
        raise ValueError(f"distance must be positive, got {r}")
    lam = SPEED_OF_LIGHT / f0
    return math.sqrt(lam ** 2 / ((4 * math.pi) ** 3 * r ** 4)) * rcs


def draw_swerling1(rcs: float, rng: np.random.Generator) -> float:
    """Rayleigh-distributed RCS amplitude with mean square ``rcs``; one draw per frame."""
    return float(rng.rayleigh(math.sqrt(rcs / 2.0)))


def _target_xyz(state: TargetState, n: int, t_s: float) -> np.ndarray:
    return spherical_to_cartesian(state_at_symbol(state, n, t_s)).as_array()


def _exact_distances(geom: ArrayGeometry, xyz: np.ndarray) -> np.ndarray:
    dist = np.linalg.norm(xyz[None, :] - geom.positions(), axis=1)
    if np.any(dist == 0):
        raise ValueError("target coincides with an antenna element")
    return dist


def exact_path_channel(tx_geom: ArrayGeometry, rx_geom: ArrayGeometry, state: TargetState,
                       n: int, m: int, grid: OfdmGrid, alpha: float | None = None) -> ChannelMatrix:
    """Per-path channel from true antenna-to-target distances at symbol ``n``.

    The amplitude uses the frame-start range, as the factored model does.
    """
    if alpha is None:
        alpha = fading_factor(state.position.r, state.rcs, grid.f0)
    xyz = _target_xyz(state, n, grid.t_s)
    d_tx = _exact_distances(tx_geom, xyz)
    d_rx = _exact_distances(rx_geom, xyz)
    f_m = grid.f0 + m * grid.delta_f
    h = alpha * np.exp(-2j * np.pi * f_m * (d_rx[:, None] + d_tx[None, :]) / SPEED_OF_LIGHT)
    return ChannelMatrix(h, n, m)


def _factored_sdd(state: TargetState, n: int, t_s: float, mode: str) -> SddPair:
    if mode == "six_d":
        return exact_sdd_at_symbol(state, n, t_s)
    if mode == "four_d":
        return state.sdd
    raise ValueError(f"unknown factored mode {mode!r}")


def _factored_coeff(state: TargetState, n: int, f_m, grid: OfdmGrid, alpha: float):
    c = SPEED_OF_LIGHT
    return (alpha * np.exp(-4j * np.pi * np.asarray(f_m) * state.position.r / c)
            * np.exp(4j * np.pi * grid.f0 * state.v_r * n * grid.t_s / c))


def factored_channel(tx_geom: ArrayGeometry, rx_geom: ArrayGeometry, state: TargetState,
                     n: int, m: int, grid: OfdmGrid, mode: str = "six_d",
                     alpha: float | None = None) -> ChannelMatrix:
    """Rank-one channel ``coeff * a_R(sdd_n) a_H(sdd_n)^T``.

    ``six_d`` moves the SDD with the angular velocities; ``four_d`` freezes it at
    symbol 0. Doppler and steering phases use ``f0``, the range phase uses ``f_m``.
    """
    if alpha is None:
        alpha = fading_factor(state.position.r, state.rcs, grid.f0)
    sdd = _factored_sdd(state, n, grid.t_s, mode)
    coeff = _factored_coeff(state, n, grid.f0 + m * grid.delta_f, grid, alpha)
    h = coeff * np.outer(upa_steering(rx_geom, sdd), upa_steering(tx_geom, sdd))
    return ChannelMatrix(h, n, m)


def draw_clutter_frame(model: ClutterModel, rx_geom: ArrayGeometry, tx_geom: ArrayGeometry,
                       grid: OfdmGrid, rng: np.random.Generator) -> np.ndarray | None:
    """Static clutter for every subcarrier, shape ``(M, N_R, N_H)``; reused for all symbols."""
    if model.mode == "none":
        return None
    shape = (grid.m_subcarriers, rx_geom.size, tx_geom.size)
    if model.mode == "gaussian":
        g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
        return model.beta_c * g
    frame = np.zeros(shape, dtype=complex)
    f_m = grid.subcarrier_freqs()
    for sc in model.scatterers:
        beta = fading_factor(sc.position.r, draw_swerling1(sc.rcs, rng), grid.f0)
        sdd = sdd_of(sc.position.theta, sc.position.phi)
        outer = np.outer(upa_steering(rx_geom, sdd), upa_steering(tx_geom, sdd))
        phase = np.exp(-4j * np.pi * f_m * sc.position.r / SPEED_OF_LIGHT)
        frame += beta * phase[:, None, None] * outer[None]
    return frame


def clutter_channel(model: ClutterModel, rx_geom: ArrayGeometry, tx_geom: ArrayGeometry,
                    m: int, grid: OfdmGrid, rng: np.random.Generator, n: int = 0) -> ChannelMatrix:
    """Clutter on subcarrier ``m``. The symbol index only labels the result: clutter is static."""
    frame = draw_clutter_frame(model, rx_geom, tx_geom, grid, rng)
    if frame is None:
        return ChannelMatrix(np.zeros((rx_geom.size, tx_geom.size), dtype=complex), n, m)
    return ChannelMatrix(frame[m], n, m)


@dataclass
class SensingScene:
    """One frame's worth of channel: targets with drawn amplitudes plus a clutter realization."""

    tx_geom: ArrayGeometry
    rx_geom: ArrayGeometry
    grid: OfdmGrid
    targets: Sequence[TargetState] = ()
    alphas: Sequence[float] | None = None
    clutter: np.ndarray | None = None
    mode: ChannelMode = "six_d"

    def __post_init__(self):
        if self.alphas is None:
            self.alphas = [fading_factor(t.position.r, t.rcs, self.grid.f0) for t in self.targets]
        if len(self.alphas) != len(self.targets):
            raise ValueError("one amplitude per target required")
        if self.mode not in ("six_d", "four_d", "exact"):
            raise ValueError(f"unknown channel mode {self.mode!r}")
        r_max = unambiguous_range(self.grid)
        for t in self.targets:
            if t.position.r >= r_max:
                warnings.warn(f"target range {t.position.r} m exceeds the unambiguous range "
                              f"{r_max:.1f} m and will alias", RangeAmbiguityWarning, stacklevel=2)

    @classmethod
    def draw(cls, tx_geom, rx_geom, grid, targets, clutter_model: ClutterModel | None,
             rng: np.random.Generator, mode: ChannelMode = "six_d", swerling: bool = True):
        """Draw per-frame Swerling-I amplitudes and the clutter realization from ``rng``."""
        rcs_rng, clutter_rng = rng.spawn(2)
        alphas = []
        for t in targets:
            sigma = draw_swerling1(t.rcs, rcs_rng) if swerling else t.rcs
            alphas.append(fading_factor(t.position.r, sigma, grid.f0))
        frame = None
        if clutter_model is not None:
            frame = draw_clutter_frame(clutter_model, rx_geom, tx_geom, grid, clutter_rng)
        return cls(tx_geom, rx_geom, grid, list(targets), alphas, frame, mode)

    def matrix(self, n: int, m: int) -> ChannelMatrix:
        """Total sensing channel: per-target channels plus clutter."""
        h = np.zeros((self.rx_geom.size, self.tx_geom.size), dtype=complex)
        for t, a in zip(self.targets, self.alphas):
            if self.mode == "exact":
                h += exact_path_channel(self.tx_geom, self.rx_geom, t, n, m, self.grid, a).entries
            else:
                h += factored_channel(self.tx_geom, self.rx_geom, t, n, m, self.grid, self.mode, a).entries
        if self.clutter is not None:
            h += self.clutter[m]
        return ChannelMatrix(h, n, m)

    def apply(self, n: int, weights: np.ndarray) -> np.ndarray:
        """``H_{n,m} @ weights`` for every subcarrier at once, shape ``(M, N_R)``."""
        f_m = self.grid.subcarrier_freqs()
        out = np.zeros((self.grid.m_subcarriers, self.rx_geom.size), dtype=complex)
        for t, a in zip(self.targets, self.alphas):
            if self.mode == "exact":
                xyz = _target_xyz(t, n, self.grid.t_s)
                d_tx = _exact_distances(self.tx_geom, xyz)
                d_rx = _exact_distances(self.rx_geom, xyz)
                k = -2j * np.pi * f_m[:, None] / SPEED_OF_LIGHT
                gain = np.exp(k * d_tx[None, :]) @ weights
                out += a * gain[:, None] * np.exp(k * d_rx[None, :])
            else:
                sdd = _factored_sdd(t, n, self.grid.t_s, self.mode)
                coeff = _factored_coeff(t, n, f_m, self.grid, a)
                gain = upa_steering(self.tx_geom, sdd) @ weights
                out += (coeff * gain)[:, None] * upa_steering(self.rx_geom, sdd)[None, :]
        if self.clutter is not None:
            out += self.clutter @ weights
        return out


def sensing_channel(targets: Sequence[TargetState], clutter: np.ndarray | None, n: int, m: int,
                    tx_geom: ArrayGeometry, rx_geom: ArrayGeometry, grid: OfdmGrid,
                    alphas: Sequence[float] | None = None, mode: ChannelMode = "six_d") -> ChannelMatrix:
    """Sum of per-target channels plus a clutter frame (``None`` for no clutter)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RangeAmbiguityWarning)
        scene = SensingScene(tx_geom, rx_geom, grid, list(targets), alphas, clutter, mode)
    return scene.matrix(n, m)

"""Target motion within one OFDM frame and the virtual-velocity plane.

Velocities follow the closing convention: positive ``v_r`` shrinks the range,
positive ``omega_theta``/``omega_phi`` shrink the respective angle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import ArrayGeometry, SddPair, SphericalPoint, sdd_of


@dataclass(frozen=True)
class TargetState:
    position: SphericalPoint
    v_r: float = 0.0
    omega_theta: float = 0.0
    omega_phi: float = 0.0
    rcs: float = 1.0

    def __post_init__(self):
        if not self.rcs > 0:
            raise ValueError(f"rcs must be positive, got {self.rcs}")

    @property
    def sdd(self) -> SddPair:
        return sdd_of(self.position.theta, self.position.phi)


@dataclass(frozen=True)
class OfdmGrid:
    m_subcarriers: int
    delta_f: float
    f0: float
    n_symbols: int
    t_guard: float | None = None

    def __post_init__(self):
        if self.m_subcarriers < 1 or self.n_symbols < 1:
            raise ValueError("grid needs at least one subcarrier and one symbol")
        if not self.delta_f > 0:
            raise ValueError(f"subcarrier spacing must be positive, got {self.delta_f}")
        if self.t_guard is None:
            object.__setattr__(self, "t_guard", 0.25 / self.delta_f)
        if self.t_guard < 0:
            raise ValueError("guard interval must be non-negative")

    @property
    def t_s(self) -> float:
        """Symbol interval including the guard."""
        return 1.0 / self.delta_f + self.t_guard

    def subcarrier_freqs(self) -> np.ndarray:
        return self.f0 + self.delta_f * np.arange(self.m_subcarriers)


class PlaneCoeffs(NamedTuple):
    a: float
    b: float
    c: float


def state_at_symbol(state: TargetState, n: int, t_s: float) -> SphericalPoint:
    t = n * t_s
    r = state.position.r - state.v_r * t
    if r <= 0:
        raise ValueError(f"target reaches the array (r={r:.3g} m) at symbol {n}")
    return SphericalPoint(r, state.position.theta - state.omega_theta * t,
                          state.position.phi - state.omega_phi * t)


def exact_sdd_at_symbol(state: TargetState, n, t_s: float):
    """SDD at symbol ``n``; ``n`` may be an integer or an array of indices."""
    t = np.asarray(n, dtype=float) * t_s
    phi = state.position.phi - state.omega_phi * t
    theta = state.position.theta - state.omega_theta * t
    psi, omega = np.cos(phi) * np.cos(theta), np.sin(phi)
    if np.ndim(n) == 0:
        return SddPair(float(psi), float(omega))
    return psi, omega


def first_order_sdd_at_symbol(state: TargetState, n, t_s: float):
    t = np.asarray(n, dtype=float) * t_s
    th, ph = state.position.theta, state.position.phi
    psi = (math.cos(ph) * math.cos(th)
           + math.sin(ph) * math.cos(th) * state.omega_phi * t
           + math.cos(ph) * math.sin(th) * state.omega_theta * t)
    omega = math.sin(ph) - math.cos(ph) * state.omega_phi * t
    if np.ndim(n) == 0:
        return SddPair(float(psi), float(omega))
    return psi, omega


def virtual_velocity(state: TargetState, tx_geom: ArrayGeometry, rx_index: tuple[int, int],
                     spacing_d: float) -> float:
    """Apparent Doppler velocity seen by receive antenna ``rx_index = (n_x, n_z)``."""
    n_x, n_z = rx_index
    d = spacing_d
    th, ph = state.position.theta, state.position.phi
    w_t, w_p = state.omega_theta, state.omega_phi
    return (state.v_r
            - d / 4 * ((tx_geom.nz - 1) * math.cos(ph) - (tx_geom.nx - 1) * math.sin(ph) * math.cos(th)) * w_p
            - d / 2 * (n_z * math.cos(ph) - n_x * math.sin(ph) * math.cos(th)) * w_p
            + d / 4 * (tx_geom.nx - 1) * math.cos(ph) * math.sin(th) * w_t
            + d / 2 * n_x * math.cos(ph) * math.sin(th) * w_t)


def plane_coeffs_forward(state: TargetState, tx_geom: ArrayGeometry, spacing_d: float) -> PlaneCoeffs:
    d = spacing_d
    th, ph = state.position.theta, state.position.phi
    w_t, w_p = state.omega_theta, state.omega_phi
    a = (state.v_r
         - d / 4 * ((tx_geom.nz - 1) * math.cos(ph) - (tx_geom.nx - 1) * math.sin(ph) * math.cos(th)) * w_p
         + d / 4 * (tx_geom.nx - 1) * math.cos(ph) * math.sin(th) * w_t)
    b = d / 2 * (math.sin(ph) * math.cos(th) * w_p + math.cos(ph) * math.sin(th) * w_t)
    c = -d / 2 * math.cos(ph) * w_p
    return PlaneCoeffs(a, b, c)

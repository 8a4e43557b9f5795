"""Coordinates, spatial-domain directions (SDD) and UPA steering vectors.

Angles are radians everywhere in the library. The horizontal angle ``theta`` is
measured in the x-y plane from the +x axis and the pitch angle ``phi`` from
that plane towards +z. Array elements sit in the x-z plane at ``(n_x d, 0, n_z d)``.

Flat antenna indices follow ``n = n_x * nz + n_z``; every module that flattens
or reshapes an array axis relies on this convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import SPEED_OF_LIGHT


@dataclass(frozen=True)
class SphericalPoint:
    r: float
    theta: float
    phi: float

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError(f"distance must be non-negative, got {self.r}")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"horizontal angle must lie in [0, pi], got {self.theta}")
        if not -math.pi / 2 <= self.phi <= math.pi / 2:
            raise ValueError(f"pitch angle must lie in [-pi/2, pi/2], got {self.phi}")


@dataclass(frozen=True)
class CartesianPoint:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class SddPair:
    """Horizontal (``psi``) and pitch (``omega``) spatial-domain directions."""

    psi: float
    omega: float


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array with ``nx`` columns along x and ``nz`` rows along z."""

    nx: int
    nz: int
    spacing_d: float
    f0: float

    def __post_init__(self):
        if self.nx < 1 or self.nz < 1:
            raise ValueError(f"array needs at least one element per axis, got {self.nx}x{self.nz}")
        if self.f0 <= 0:
            raise ValueError(f"carrier frequency must be positive, got {self.f0}")
        half_wave = SPEED_OF_LIGHT / (2.0 * self.f0)
        # tolerate roundoff from configs that spell out lambda/2 numerically
        if not 0 < self.spacing_d <= half_wave * (1 + 1e-12):
            raise ValueError(
                f"element spacing {self.spacing_d} m violates the half-wavelength bound "
                f"0 < d <= lambda/2 = {half_wave} m"
            )

    @property
    def size(self) -> int:
        return self.nx * self.nz

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f0

    def positions(self) -> np.ndarray:
        """Element coordinates, shape ``(size, 3)``, in flat-index order."""
        ix, iz = np.meshgrid(np.arange(self.nx), np.arange(self.nz), indexing="ij")
        pos = np.zeros((self.size, 3))
        pos[:, 0] = ix.ravel() * self.spacing_d
        pos[:, 2] = iz.ravel() * self.spacing_d
        return pos

    def flat_index(self, n_x: int, n_z: int) -> int:
        return n_x * self.nz + n_z


def spherical_to_cartesian(p: SphericalPoint) -> CartesianPoint:
    cp = math.cos(p.phi)
    return CartesianPoint(p.r * cp * math.cos(p.theta), p.r * cp * math.sin(p.theta), p.r * math.sin(p.phi))


def cartesian_to_spherical(q: CartesianPoint) -> SphericalPoint:
    """Inverse of :func:`spherical_to_cartesian` for points with ``y >= 0``."""
    r = math.sqrt(q.x * q.x + q.y * q.y + q.z * q.z)
    if r == 0.0:
        return SphericalPoint(0.0, 0.0, 0.0)
    rho = math.hypot(q.x, q.y)
    phi = math.atan2(q.z, rho)
    theta = math.atan2(q.y, q.x) if rho > 0 else 0.0
    if theta < 0:
        raise ValueError(f"point {q} lies behind the array plane (y < 0)")
    return SphericalPoint(r, theta, phi)


def sdd_of(theta: float, phi: float) -> SddPair:
    return SddPair(math.cos(phi) * math.cos(theta), math.sin(phi))


def theta_from_psi(psi: float, phi: float) -> float:
    """Horizontal angle from its SDD given the pitch angle; the ratio is clamped to [-1, 1]."""
    ratio = psi / math.cos(phi)
    return math.acos(min(1.0, max(-1.0, ratio)))


def axis_steering(count: int, f0: float, d: float, value: float) -> np.ndarray:
    """Single-axis steering vector ``exp(j 2 pi f0 d value i / c)``, i = 0..count-1."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return np.exp(1j * (2 * np.pi * f0 * d * value / SPEED_OF_LIGHT) * np.arange(count))


def upa_steering(geom: ArrayGeometry, sdd: SddPair) -> np.ndarray:
    ax = axis_steering(geom.nx, geom.f0, geom.spacing_d, sdd.psi)
    az = axis_steering(geom.nz, geom.f0, geom.spacing_d, sdd.omega)
    return np.kron(ax, az)

"""Beamformed sensing transmission and the echo tensor pipeline raw -> EEC -> DT-EEC.

Echo tensors are indexed ``[n_x, n_z, n, m]`` (RX column, RX row, symbol, subcarrier).
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .geometry import ArrayGeometry, sdd_of, upa_steering

Stage = Literal["raw", "eec", "dt_eec"]
_STAGES = ("raw", "eec", "dt_eec")


class StageError(ValueError):
    """An operation received a tensor at the wrong processing stage."""


@dataclass
class EchoTensor:
    data: np.ndarray
    stage: Stage = "raw"

    def __post_init__(self):
        if self.data.ndim != 4:
            raise ValueError(f"echo tensor must be 4-way, got shape {self.data.shape}")
        if self.stage not in _STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape

    def require(self, *stages: str) -> None:
        if self.stage not in stages:
            raise StageError(f"expected a tensor at stage {' or '.join(stages)}, got {self.stage}")


@dataclass
class SymbolFrame:
    """Sensing symbols ``s[n, m]``; unit modulus so erasure keeps noise white."""

    symbols: np.ndarray

    def __post_init__(self):
        if self.symbols.ndim != 2:
            raise ValueError("symbol frame must be an (N, M) matrix")
        if not np.allclose(np.abs(self.symbols), 1.0, atol=1e-12):
            raise ValueError("sensing symbols must be unit modulus")

    @classmethod
    def qpsk(cls, n_symbols: int, m_subcarriers: int, rng: np.random.Generator) -> "SymbolFrame":
        k = rng.integers(0, 4, size=(n_symbols, m_subcarriers))
        return cls(np.exp(1j * np.pi / 4 * (2 * k + 1)))

    @classmethod
    def ones(cls, n_symbols: int, m_subcarriers: int) -> "SymbolFrame":
        return cls(np.ones((n_symbols, m_subcarriers), dtype=complex))


def tx_beam(tx_geom: ArrayGeometry, aim_theta: float, aim_phi: float,
            power: float = 1.0, rho: float = 1.0) -> np.ndarray:
    """Sensing beamformer ``sqrt(rho P / N_H) a_H(aim)``."""
    if not 0 < rho <= 1:
        raise ValueError(f"power fraction rho must lie in (0, 1], got {rho}")
    return math.sqrt(rho * power / tx_geom.size) * upa_steering(tx_geom, sdd_of(aim_theta, aim_phi))


def synthesize_echoes(channel, beam: np.ndarray, symbols: SymbolFrame, noise_sigma: float,
                      rng: np.random.Generator | None = None) -> EchoTensor:
    """Received echoes ``H_{n,m} conj(w) s_{n,m} + noise`` stacked into a raw tensor.

    ``channel`` is anything exposing ``rx_geom``, ``grid`` and ``apply(n, weights)``
    returning ``H_{n,m} @ weights`` for all subcarriers (see ``SensingScene``). The
    conjugate sits on the beam weights only, which is what makes dividing by
    ``s_{n,m}`` an exact erasure.
    """
    rx, grid = channel.rx_geom, channel.grid
    n_sym, n_sc = grid.n_symbols, grid.m_subcarriers
    if symbols.symbols.shape != (n_sym, n_sc):
        raise ValueError(f"symbol frame shape {symbols.symbols.shape} does not match grid ({n_sym}, {n_sc})")
    if beam.shape != (channel.tx_geom.size,):
        raise ValueError(f"beam length {beam.shape} does not match {channel.tx_geom.size} TX antennas")
    weights = np.conj(beam)
    data = np.empty((rx.nx, rx.nz, n_sym, n_sc), dtype=complex)
    for n in range(n_sym):
        y = channel.apply(n, weights) * symbols.symbols[n][:, None]
        data[:, :, n, :] = y.T.reshape(rx.nx, rx.nz, n_sc)
    if noise_sigma > 0:
        if rng is None:
            raise ValueError("a random generator is required when noise_sigma > 0")
        noise = rng.standard_normal(data.shape + (2,)).view(complex)[..., 0]
        data += noise * (noise_sigma / math.sqrt(2.0))
    return EchoTensor(data, "raw")


def erase_symbols(t: EchoTensor, symbols: SymbolFrame) -> EchoTensor:
    t.require("raw")
    s = symbols.symbols
    if s.shape != t.shape[2:]:
        raise ValueError(f"symbol frame shape {s.shape} does not match tensor {t.shape[2:]}")
    if np.any(s == 0):
        raise ValueError("cannot erase a zero symbol")
    return EchoTensor(t.data / s[None, None, :, :], "eec")


def suppress_clutter(t: EchoTensor) -> EchoTensor:
    """Remove the per-(antenna, subcarrier) mean over symbols: static returns vanish.

    Targets whose virtual velocity is near zero are attenuated along with the clutter.
    """
    t.require("eec")
    if t.shape[2] < 2:
        raise ValueError("clutter suppression needs at least two symbols")
    return EchoTensor(t.data - t.data.mean(axis=2, keepdims=True), "dt_eec")


# Dump layout: magic, 4 x uint32 dims, uint8 stage, 3 pad bytes, uint64 seed, then <c8 data.
_MAGIC = b"ISAC6DT1"
_HEADER = struct.Struct("<8s4IB3xQ")


def save_tensor(path, t: EchoTensor, seed: int = 0) -> None:
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, *t.shape, _STAGES.index(t.stage), seed))
        fh.write(np.ascontiguousarray(t.data, dtype="<c8").tobytes())


def load_tensor(path) -> tuple[EchoTensor, int]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated tensor header")
    magic, d0, d1, d2, d3, stage, seed = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not an echo tensor dump")
    dims = (d0, d1, d2, d3)
    data = np.frombuffer(raw, dtype="<c8", offset=_HEADER.size)
    if data.size != math.prod(dims):
        raise ValueError(f"{path}: payload has {data.size} entries, header says {dims}")
    return EchoTensor(data.reshape(dims).astype(complex), _STAGES[stage]), seed

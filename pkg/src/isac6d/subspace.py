"""ESPRIT engine: sample covariance, MDL order selection, TLS rotational invariance.

All eigendecompositions are reported in descending eigenvalue order; "signal
subspace" always means the leading columns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoTargetError, SingularSubspaceError

_COND_LIMIT = 1e10


@dataclass
class SpaceValueSet:
    """Phase progressions ``kappa`` (rad, in (-pi, pi]) sorted by signal power, strongest first."""

    count: int
    values: np.ndarray
    dominance: np.ndarray
    mdl_order: int | None = None

    @property
    def dominant(self) -> float:
        return float(self.values[0])


def covariance(y: np.ndarray) -> np.ndarray:
    """Sample covariance ``Y Y^H / S`` of an ``(L, S)`` snapshot matrix."""
    y = np.asarray(y)
    if y.ndim != 2:
        raise ValueError("snapshot matrix must be 2-D (L x S)")
    return y @ y.conj().T / y.shape[1]


def eig_descending(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, u = np.linalg.eigh(r)
    return w[..., ::-1], u[..., ::-1]


def mdl_order(eigenvalues, snapshots: int, max_sources: int | None = None) -> int:
    """Wax-Kailath MDL estimate of the number of signal eigenvalues.

    ``MDL(k) = -S (L-k) log(GM_k / AM_k) + k (2L - k) log(S) / 2`` over the
    ``L - k`` smallest eigenvalues. Eigenvalues below the float resolution of the
    largest one are lifted to that floor so an exactly rank-deficient covariance
    still yields finite means.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size == 0:
        raise ValueError("no eigenvalues given")
    L = lam.size
    if max_sources is None:
        max_sources = L - 1
    max_sources = min(max_sources, L - 1)
    top = lam[0]
    if top <= 0:
        return 0
    lam = np.maximum(lam, top * L * np.finfo(float).eps)
    log_s = math.log(snapshots)
    best_k, best = 0, math.inf
    for k in range(max_sources + 1):
        tail = lam[k:]
        log_ratio = np.mean(np.log(tail)) - math.log(np.mean(tail))
        score = -snapshots * (L - k) * log_ratio + 0.5 * k * (2 * L - k) * log_s
        if score < best:
            best_k, best = k, score
    return best_k


def tls_rotation(basis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """TLS-ESPRIT on an orthonormal basis ``(..., L, K)`` of a shift-invariant subspace.

    Returns the rotation eigenvalues ``(..., K)`` and their eigenvectors
    ``(..., K, K)``. Raises :class:`SingularSubspaceError` for unstacked input
    when the TLS partition cannot be inverted; stacked input reports NaN instead.
    """
    k = basis.shape[-1]
    joint = np.concatenate([basis[..., :-1, :], basis[..., 1:, :]], axis=-1)
    gram = np.swapaxes(joint.conj(), -1, -2) @ joint
    _, v = eig_descending(gram)
    v_a = v[..., :k, k:]
    v_b = v[..., k:, k:]
    cond = np.linalg.cond(v_b)
    bad = ~np.isfinite(cond) | (cond > _COND_LIMIT)
    if basis.ndim == 2 and bad:
        raise SingularSubspaceError("TLS partition is singular", step="esprit")
    if np.any(bad):
        v_b = np.where(bad[..., None, None], np.eye(k), v_b)
    rot = -v_a @ np.linalg.inv(v_b)
    lam, vec = np.linalg.eig(rot)
    if basis.ndim > 2 and np.any(bad):
        lam = np.where(bad[..., None], np.nan, lam)
    return lam, vec


def _source_powers(vec: np.ndarray, signal_eigs: np.ndarray) -> np.ndarray:
    vec = vec / np.linalg.norm(vec, axis=0, keepdims=True)
    inv = np.linalg.inv(vec)
    return np.real(np.einsum("ij,j,ij->i", inv, signal_eigs, inv.conj()))


def esprit_space_values(y: np.ndarray, forced_order: int | None = None,
                        max_sources: int | None = None,
                        known_null: np.ndarray | None = None) -> SpaceValueSet:
    """Space values of the snapshot matrix ``y`` (L x S) along its first axis.

    ``known_null`` names a steering direction the caller projected out of the data
    (e.g. the all-ones vector after mean removal). It is appended to the estimated
    signal subspace so the remaining columns stay shift-invariant; its own root is
    dropped from the result.
    """
    y = np.asarray(y)
    L, S = y.shape
    if L < 2 or S < 1:
        raise ValueError(f"ESPRIT needs L >= 2 and S >= 1, got {y.shape}")
    lam, u = eig_descending(covariance(y))
    lam = np.clip(lam, 0.0, None)
    extra = 0 if known_null is None else 1
    order = mdl_order(lam, S, max_sources if max_sources is not None else L - 1 - extra)
    k = order if forced_order is None else forced_order
    if k == 0:
        raise NoTargetError("no signal eigenvalue above the noise floor", step="mdl")
    if L < k + 1 + extra:
        raise ValueError(f"order {k} needs at least {k + 1 + extra} array elements, got {L}")

    basis = u[:, :k]
    signal_eigs = lam[:k]
    if known_null is not None:
        null = np.asarray(known_null, dtype=complex)
        basis, _ = np.linalg.qr(np.column_stack([basis, null / np.linalg.norm(null)]))
        signal_eigs = np.append(signal_eigs, 0.0)
    roots, vec = tls_rotation(basis)
    power = _source_powers(vec, signal_eigs)
    if known_null is not None:
        steer = basis @ (vec / np.linalg.norm(vec, axis=0, keepdims=True))
        align = np.abs(null.conj() @ steer) / np.linalg.norm(null)
        keep = np.arange(roots.size) != int(np.argmax(align))
        roots, power = roots[keep], power[keep]
    idx = np.argsort(-power, kind="stable")
    return SpaceValueSet(k, np.angle(roots[idx]), power[idx], order)


def esprit_single_batch(slices: np.ndarray, known_null: np.ndarray | None = None) -> np.ndarray:
    """One space value per slice for a stack ``(B, L, S)``, order fixed to one source.

    Failed slices come back as NaN.
    """
    slices = np.asarray(slices)
    b, L, S = slices.shape
    cov = slices @ np.swapaxes(slices.conj(), -1, -2) / S
    _, u = eig_descending(cov)
    basis = u[..., :1]
    if known_null is None:
        roots, _ = tls_rotation(basis)
        return np.angle(roots[:, 0])
    null = np.asarray(known_null, dtype=complex)
    null = null / np.linalg.norm(null)
    aug = np.concatenate([basis, np.broadcast_to(null[:, None], (b, L, 1))], axis=-1)
    basis, _ = np.linalg.qr(aug)
    roots, vec = tls_rotation(basis)
    vec = vec / np.linalg.norm(vec, axis=-2, keepdims=True)
    steer = basis @ vec
    align = np.abs(np.einsum("l,blk->bk", null.conj(), steer))
    pick = np.argmin(align, axis=-1)
    return np.angle(np.take_along_axis(roots, pick[:, None], axis=-1)[:, 0])

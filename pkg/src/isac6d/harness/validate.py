"""Invariant checks run against the geometry and waveform of a configuration."""
from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from ..airlink import SymbolFrame, erase_symbols, suppress_clutter, synthesize_echoes, tx_beam
from ..channel import SensingScene, exact_path_channel, factored_channel
from ..geometry import (cartesian_to_spherical, sdd_of, spherical_to_cartesian, upa_steering)
from ..kinematics import TargetState, plane_coeffs_forward
from ..motion import recover_velocities
from .config import SimConfig
from .sweep import run_trial, truth_vector


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _steering(cfg: SimConfig):
    p = cfg.target.position
    a = upa_steering(cfg.ru_geom, sdd_of(p.theta, p.phi))
    err = float(np.max(np.abs(np.abs(a) - 1)))
    return err < 1e-12, f"max | |a| - 1 | = {err:.2e}"


def _coordinates(cfg: SimConfig):
    p = cfg.target.position
    back = cartesian_to_spherical(spherical_to_cartesian(p))
    err = max(abs(back.r - p.r) / p.r, abs(back.theta - p.theta), abs(back.phi - p.phi))
    return err < 1e-12, f"round-trip error {err:.2e}"


def _plane_identity(cfg: SimConfig):
    rng = np.random.default_rng(cfg.seed)
    d = cfg.ru_geom.spacing_d
    worst = 0.0
    for _ in range(200):
        t = cfg.target
        state = TargetState(t.position, *rng.uniform(-20, 20, 1), *np.radians(rng.uniform(-10, 10, 2)))
        coeffs = plane_coeffs_forward(state, cfg.hu_geom, d)
        est = recover_velocities(coeffs, t.position.theta, t.position.phi, cfg.hu_geom, d, cfg.epsilon)
        truth = np.array([state.v_r, state.omega_theta, state.omega_phi])
        worst = max(worst, float(np.max(np.abs(np.array(est[:3]) - truth) / np.maximum(np.abs(truth), 1e-9))))
    return worst < 1e-9, f"max relative error {worst:.2e}"


def _channel_rank(cfg: SimConfig):
    h = factored_channel(cfg.hu_geom, cfg.ru_geom, cfg.target, 0, 0, cfg.grid).entries
    s = np.linalg.svd(h, compute_uv=False)
    ratio = float(s[1] / s[0]) if s.size > 1 else 0.0
    return ratio < 1e-10, f"sigma_2 / sigma_1 = {ratio:.2e}"


def _channel_consistency(cfg: SimConfig):
    exact = exact_path_channel(cfg.hu_geom, cfg.ru_geom, cfg.target, 0, 0, cfg.grid).entries
    approx = factored_channel(cfg.hu_geom, cfg.ru_geom, cfg.target, 0, 0, cfg.grid).entries
    err = float(np.max(np.abs(np.angle(exact * np.conj(approx)))))
    # far-field phase error grows with aperture^2 / r; report it against a quarter-cycle
    return err < math.pi / 2, f"max exact-vs-factored phase gap {err:.3e} rad"


def _erasure_and_suppression(cfg: SimConfig):
    g = cfg.grid
    scene = SensingScene(cfg.hu_geom, cfg.ru_geom, g, [cfg.target], [1.0], None, cfg.channel_mode)
    beam = tx_beam(cfg.hu_geom, cfg.aim_theta, cfg.aim_phi, cfg.tx_power, cfg.tx_rho)
    ones = SymbolFrame.ones(g.n_symbols, g.m_subcarriers)
    qpsk = SymbolFrame.qpsk(g.n_symbols, g.m_subcarriers, np.random.default_rng(cfg.seed))
    ref = erase_symbols(synthesize_echoes(scene, beam, ones, 0.0), ones).data
    got = erase_symbols(synthesize_echoes(scene, beam, qpsk, 0.0), qpsk).data
    err = float(np.max(np.abs(got - ref)) / np.max(np.abs(ref)))
    dt = suppress_clutter(erase_symbols(synthesize_echoes(scene, beam, qpsk, 0.0), qpsk))
    residual = float(np.max(np.abs(dt.data.mean(axis=2))))
    ok = err < 1e-12 and residual < 1e-12 * np.max(np.abs(ref))
    return ok, f"erasure mismatch {err:.2e}, symbol-mean after suppression {residual:.2e}"


def _noiseless_recovery(cfg: SimConfig):
    est = run_trial(cfg.with_values(**{"target__swerling": False}), math.inf, cfg.seed)
    if not hasattr(est, "as_tuple"):
        return False, f"pipeline failed at {est.step}: {est.message}"
    err = np.abs(np.asarray(est.as_tuple()) - truth_vector(cfg))
    tol = np.array([0.1, math.radians(0.05), math.radians(0.05), 0.05,
                    math.radians(0.5), math.radians(0.5)])
    detail = ("errors r={:.2e} m theta={:.2e} deg phi={:.2e} deg v_r={:.2e} m/s "
              "w_theta={:.2e} deg/s w_phi={:.2e} deg/s").format(
        err[0], math.degrees(err[1]), math.degrees(err[2]), err[3],
        math.degrees(err[4]), math.degrees(err[5]))
    return bool(np.all(err <= tol)), detail


CHECKS: dict[str, Callable[[SimConfig], tuple[bool, str]]] = {
    "steering_unit_modulus": _steering,
    "coordinate_round_trip": _coordinates,
    "velocity_plane_identity": _plane_identity,
    "channel_rank_one": _channel_rank,
    "exact_vs_factored_channel": _channel_consistency,
    "erasure_and_suppression": _erasure_and_suppression,
    "noiseless_recovery": _noiseless_recovery,
}


def run_invariants(config: SimConfig) -> list[CheckResult]:
    out = []
    for name, check in CHECKS.items():
        try:
            ok, detail = check(config)
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out

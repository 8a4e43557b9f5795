"""Monte Carlo trials and RMSE sweeps.

Seed lineage: trial ``i`` at SNR index ``j`` runs on
``trial_seed(seed, j, i) = SeedSequence([seed, j, i]).generate_state(1, uint64)[0]``.
Each trial then splits its seed into four child streams (RCS, clutter, symbols,
noise), so the symbols of any trial can be regenerated from its seed alone.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from ..airlink import SymbolFrame, erase_symbols, suppress_clutter, synthesize_echoes, tx_beam
from ..channel import SensingScene, draw_clutter_frame, draw_swerling1, fading_factor
from ..errors import EstimationError
from ..motion import Estimate6D, estimate_6d
from .config import SimConfig

PARAMETERS = ("r", "theta", "phi", "v_r", "omega_theta", "omega_phi")


@dataclass(frozen=True)
class TrialFailure:
    step: str | None
    message: str


@dataclass
class RmseRow:
    snr_db: float
    trials: int
    rmse: tuple[float, ...] | None
    failures: int


@dataclass
class RmseReport:
    rows: list[RmseRow] = field(default_factory=list)
    seed: int | None = None
    header: list[str] = field(default_factory=list)


def trial_seed(seed: int, snr_index: int, trial_index: int) -> int:
    return int(np.random.SeedSequence([seed, snr_index, trial_index]).generate_state(1, np.uint64)[0])


def trial_streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(4)
    return {name: np.random.default_rng(ss)
            for name, ss in zip(("rcs", "clutter", "symbols", "noise"), children)}


def trial_symbols(config: SimConfig, seed: int) -> SymbolFrame:
    g = config.grid
    return SymbolFrame.qpsk(g.n_symbols, g.m_subcarriers, trial_streams(seed)["symbols"])


def simulate_trial(config: SimConfig, snr_db: float, seed: int):
    """Synthesize one raw echo tensor; returns ``(tensor, symbols, noise_sigma)``.

    ``snr_db`` is the ratio of the mean per-entry power of the noiseless
    single-target tensor, as the estimator sees it after erasure and (if enabled)
    suppression, to the noise variance. ``inf`` disables noise.
    """
    streams = trial_streams(seed)
    hu, ru, grid, target = config.hu_geom, config.ru_geom, config.grid, config.target
    sigma = draw_swerling1(target.rcs, streams["rcs"]) if config.swerling else target.rcs
    alpha = fading_factor(target.position.r, sigma, grid.f0)
    beam = tx_beam(hu, config.aim_theta, config.aim_phi, config.tx_power, config.tx_rho)

    target_only = SensingScene(hu, ru, grid, [target], [alpha], None, config.channel_mode)
    ones = SymbolFrame.ones(grid.n_symbols, grid.m_subcarriers)
    reference = erase_symbols(synthesize_echoes(target_only, beam, ones, 0.0), ones)
    target_power = float(np.mean(np.abs(reference.data) ** 2))
    if config.suppression:
        reference = suppress_clutter(reference)
    signal_power = float(np.mean(np.abs(reference.data) ** 2))

    clutter_model = config.clutter
    if clutter_model.mode == "gaussian" and config.clutter_ctr_db is not None:
        # gaussian clutter echo power per entry is beta^2 * |w|^2 = beta^2 * rho * P
        beta = math.sqrt(10 ** (config.clutter_ctr_db / 10) * target_power / (config.tx_rho * config.tx_power))
        clutter_model = replace(clutter_model, beta_c=beta)
    frame = draw_clutter_frame(clutter_model, ru, hu, grid, streams["clutter"])
    scene = SensingScene(hu, ru, grid, [target], [alpha], frame, config.channel_mode)

    symbols = SymbolFrame.qpsk(grid.n_symbols, grid.m_subcarriers, streams["symbols"])
    noise_sigma = 0.0 if math.isinf(snr_db) else math.sqrt(signal_power / 10 ** (snr_db / 10))
    tensor = synthesize_echoes(scene, beam, symbols, noise_sigma, streams["noise"])
    return tensor, symbols, noise_sigma


def run_trial(config: SimConfig, snr_db: float, seed: int) -> Estimate6D | TrialFailure:
    """Synthesize and estimate; estimation failures are returned, never raised."""
    tensor, symbols, _ = simulate_trial(config, snr_db, seed)
    try:
        est = estimate_6d(tensor, config, symbols)
    except EstimationError as exc:
        return TrialFailure(exc.step, str(exc))
    if not all(math.isfinite(x) for x in est.as_tuple()):
        return TrialFailure("velocity", "non-finite estimate: " + ", ".join(est.diagnostics.flags))
    return est


def truth_vector(config: SimConfig) -> np.ndarray:
    t = config.target
    return np.array([t.position.r, t.position.theta, t.position.phi, t.v_r, t.omega_theta, t.omega_phi])


def errors_in_report_units(est: Estimate6D, truth: np.ndarray) -> np.ndarray:
    """Signed errors in m, deg, deg, m/s, deg/s, deg/s."""
    err = np.asarray(est.as_tuple()) - truth
    err[[1, 2, 4, 5]] = np.degrees(err[[1, 2, 4, 5]])
    return err


def _cell(args):
    config, trial_fn, snr_db, seed = args
    return trial_fn(config, snr_db, seed)


def _workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("ISAC6D_WORKERS", "1"))
    return max(1, workers)


def run_sweep(config: SimConfig, trial_fn: Callable = run_trial, workers: int | None = None) -> RmseReport:
    """RMSE of each parameter per SNR; failed trials are counted, not averaged.

    Results are reduced in (SNR index, trial index) order whatever the worker count.
    """
    jobs = [(config, trial_fn, snr, trial_seed(config.seed, j, i))
            for j, snr in enumerate(config.snr_db_list) for i in range(config.trials)]
    n_workers = _workers(workers)
    if n_workers > 1:
        with ProcessPoolExecutor(n_workers) as pool:
            results = list(pool.map(_cell, jobs, chunksize=max(1, len(jobs) // (4 * n_workers))))
    else:
        results = [_cell(job) for job in jobs]

    truth = truth_vector(config)
    report = RmseReport(seed=config.seed, header=config.header_lines())
    for j, snr in enumerate(config.snr_db_list):
        cell = results[j * config.trials:(j + 1) * config.trials]
        errs = [errors_in_report_units(r, truth) for r in cell if isinstance(r, Estimate6D)]
        rmse = tuple(float(x) for x in np.sqrt(np.mean(np.square(errs), axis=0))) if errs else None
        report.rows.append(RmseRow(snr, config.trials, rmse, len(cell) - len(errs)))
    return report

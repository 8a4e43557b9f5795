"""Command-line entry point: ``isac6d {simulate,estimate,sweep,validate} CONFIG``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
Environment: ``ISAC6D_OUTPUT_DIR`` (default output directory) and
``ISAC6D_WORKERS`` (sweep worker processes).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

from .airlink import load_tensor, save_tensor
from .errors import EstimationError
from .harness.config import ConfigError, load_config
from .harness.report import write_report
from .harness.sweep import (errors_in_report_units, run_sweep, simulate_trial,
                            trial_symbols, truth_vector)
from .harness.validate import run_invariants
from .motion import estimate_6d

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _output_dir(arg: str | None) -> Path:
    out = Path(arg or os.environ.get("ISAC6D_OUTPUT_DIR", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _estimate_record(est, config) -> dict:
    rec = {
        "r_m": est.r_hat,
        "theta_deg": math.degrees(est.theta_hat),
        "phi_deg": math.degrees(est.phi_hat),
        "v_r_mps": est.v_r_hat,
        "omega_theta_degps": math.degrees(est.omega_theta_hat),
        "omega_phi_degps": math.degrees(est.omega_phi_hat),
    }
    err = errors_in_report_units(est, truth_vector(config))
    rec["error"] = dict(zip(list(rec), (float(x) for x in err)))
    dg = est.diagnostics
    rec["diagnostics"] = {
        "kappa_omega": dg.kappa_omega, "kappa_psi": dg.kappa_psi, "kappa_r": dg.kappa_r,
        "plane": None if dg.plane is None else list(dg.plane),
        "plane_residual_rms": dg.residual_rms, "mdl_orders": dg.mdl_orders,
        "failed_antennas": dg.failed_antennas, "flags": dg.flags,
    }
    return rec


def _simulate(args, config) -> int:
    snr = math.inf if args.snr_db is None else args.snr_db
    seed = config.seed if args.trial_seed is None else args.trial_seed
    tensor, symbols, sigma = simulate_trial(config, snr, seed)
    path = _output_dir(args.out) / args.tensor
    save_tensor(path, tensor, seed)
    out = {"tensor": str(path), "trial_seed": seed, "snr_db": snr, "noise_sigma": sigma}
    try:
        out["estimate"] = _estimate_record(estimate_6d(tensor, config, symbols), config)
    except EstimationError as exc:
        out["failure"] = {"step": exc.step, "message": str(exc)}
    print(json.dumps(out, indent=2, default=float))
    return EXIT_OK if "estimate" in out else EXIT_RUNTIME


def _estimate(args, config) -> int:
    tensor, seed = load_tensor(args.tensor)
    symbols = trial_symbols(config, seed) if tensor.stage == "raw" else None
    est = estimate_6d(tensor, config, symbols)
    print(json.dumps(_estimate_record(est, config), indent=2, default=float))
    return EXIT_OK


def _sweep(args, config) -> int:
    report = run_sweep(config, workers=args.workers)
    path = _output_dir(args.out) / args.report
    write_report(report, path)
    for row in report.rows:
        cells = "absent" if row.rmse is None else " ".join(f"{x:.4g}" for x in row.rmse)
        print(f"snr={row.snr_db:g} dB  rmse[r th ph vr wth wph]={cells}  failures={row.failures}/{row.trials}")
    print(f"report written to {path}")
    return EXIT_OK


def _validate(args, config) -> int:
    results = run_invariants(config)
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isac6d", description="Six-parameter ISAC sensing simulator.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("simulate", help="synthesize one trial, dump its tensor and print diagnostics")
    s.add_argument("config")
    s.add_argument("--snr-db", type=float, default=None, help="omit for a noiseless trial")
    s.add_argument("--trial-seed", type=int, default=None, help="defaults to the config seed")
    s.add_argument("--tensor", default="echo.isac6d", help="dump file name inside the output dir")
    s.add_argument("--out", default=None, help="output directory")
    s.set_defaults(run=_simulate)

    e = sub.add_parser("estimate", help="run the estimator on a dumped tensor")
    e.add_argument("config")
    e.add_argument("tensor")
    e.set_defaults(run=_estimate)

    w = sub.add_parser("sweep", help="RMSE-vs-SNR Monte Carlo study, written as CSV")
    w.add_argument("config")
    w.add_argument("--report", default="rmse.csv")
    w.add_argument("--out", default=None, help="output directory")
    w.add_argument("--workers", type=int, default=None)
    w.set_defaults(run=_sweep)

    v = sub.add_parser("validate", help="check invariants against the config")
    v.add_argument("config")
    v.set_defaults(run=_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.run(args, config)
    except (EstimationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

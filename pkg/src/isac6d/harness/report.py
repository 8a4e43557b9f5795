"""CSV output of RMSE sweeps. Lines starting with ``#`` echo the configuration."""
from __future__ import annotations

import csv
from pathlib import Path

from .sweep import RmseReport, RmseRow

COLUMNS = ("snr_db", "trials", "rmse_r_m", "rmse_theta_deg", "rmse_phi_deg", "rmse_v_r_mps",
           "rmse_omega_theta_degps", "rmse_omega_phi_degps", "failures", "seed")


def write_report(report: RmseReport, path, format: str = "csv") -> None:
    if format != "csv":
        raise ValueError(f"unsupported report format {format!r}")
    with Path(path).open("w", newline="") as fh:
        for line in report.header:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for row in report.rows:
            rmse = [repr(x) for x in row.rmse] if row.rmse is not None else [""] * 6
            writer.writerow([repr(float(row.snr_db)), row.trials, *rmse, row.failures,
                             "" if report.seed is None else report.seed])


def read_report(path) -> RmseReport:
    lines = Path(path).read_text().splitlines()
    header = [ln[2:] for ln in lines if ln.startswith("# ")]
    body = [ln for ln in lines if not ln.startswith("#")]
    reader = csv.DictReader(body)
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
    report = RmseReport(header=header)
    for rec in reader:
        values = [rec[c] for c in COLUMNS[2:8]]
        rmse = None if all(v == "" for v in values) else tuple(float(v) for v in values)
        report.rows.append(RmseRow(float(rec["snr_db"]), int(rec["trials"]), rmse, int(rec["failures"])))
        if rec["seed"]:
            report.seed = int(rec["seed"])
    return report

# isacgan/reports.py

"""
ISACGAN - CSV reports

NMSE and complexity tables are written with pandas, followed by `# key=value`
footer lines carrying provenance (seed, config hash, version) and the
per-method mean NMSE. Floats are written in their shortest round-trip form
and read back with round-trip parsing, so recomputing the aggregates from a
parsed file reproduces the footer exactly.
"""
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from isacgan.complexity import ComplexityReport
from isacgan.errors import InvalidArgumentError, MissingArtifactError
from isacgan.utils import format_float

logger = logging.getLogger(__name__)

NMSE_COLUMNS = ["sweep_value", "method", "nmse", "nmse_db"]
SWEEP_COLUMNS = ["sweep_value", "snr_db", "method", "nmse", "nmse_db"]
COMPLEXITY_COLUMNS = ["link", "M", "N", "part", "adds_closed_form", "mults_closed_form",
                      "adds_counted", "mults_counted", "reduction_adds", "reduction_mults"]


@dataclass
class NmseReport:
    """NMSE rows keyed by (sweep value[, snr], method)."""

    link: str
    variable: str
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, sweep_value: float, method: str, value: float, snr_db: float | None = None):
        if value < 0 or not np.isfinite(value):
            raise InvalidArgumentError(f"NMSE must be finite and >= 0, got {value} for {method}")
        row = {"sweep_value": float(sweep_value), "method": method, "nmse": float(value)}
        if snr_db is not None:
            row["snr_db"] = float(snr_db)
        self.rows.append(row)

    def frame(self) -> pd.DataFrame:
        columns = SWEEP_COLUMNS if any("snr_db" in row for row in self.rows) else NMSE_COLUMNS
        frame = pd.DataFrame(self.rows, columns=[c for c in columns if c != "nmse_db"])
        with np.errstate(divide="ignore"):
            frame["nmse_db"] = 10.0 * np.log10(frame["nmse"].to_numpy(dtype=np.float64))
        keys = [c for c in ("sweep_value", "snr_db", "method") if c in frame.columns]
        if frame.duplicated(subset=keys).any():
            raise InvalidArgumentError("report holds a duplicated (value, method) row")
        return frame[columns]


def method_means(frame: pd.DataFrame) -> dict[str, float]:
    """Mean NMSE per method, in sorted method order."""
    return {method: float(group["nmse"].mean())
            for method, group in frame.groupby("method", sort=True)}


def write_csv(frame: pd.DataFrame, path: str, footer: dict):
    """Writes the table and its `# key=value` footer; output is byte-stable."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    body = frame.to_csv(index=False, lineterminator="\n", float_format=None)
    lines = [f"# {key}={value}" for key, value in footer.items()]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(body)
        handle.write("\n".join(lines) + "\n")
    logger.info("wrote %d rows to %s", len(frame), path)


def read_csv(path: str) -> tuple[pd.DataFrame, dict[str, str]]:
    if not os.path.exists(path):
        raise MissingArtifactError(f"report {path} does not exist")
    frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    footer = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if line.startswith("# ") and "=" in line:
                key, value = line[2:].rstrip("\n").split("=", 1)
                footer[key] = value
    return frame, footer


def write_nmse_report(report: NmseReport, path: str, provenance: dict):
    frame = report.frame()
    footer = {**provenance, "link": report.link, "variable": report.variable}
    for method, mean in method_means(frame).items():
        footer[f"mean_nmse[{method}]"] = format_float(mean)
    write_csv(frame, path, footer)


def complexity_frame(report: ComplexityReport) -> pd.DataFrame:
    return pd.DataFrame([
        {
            "link": row.link, "M": row.M, "N": row.N, "part": row.part,
            "adds_closed_form": row.closed_form[0], "mults_closed_form": row.closed_form[1],
            "adds_counted": row.counted[0], "mults_counted": row.counted[1],
            "reduction_adds": row.reduction[0], "reduction_mults": row.reduction[1],
        }
        for row in report.rows
    ], columns=COMPLEXITY_COLUMNS)


def write_complexity_report(report: ComplexityReport, path: str, provenance: dict):
    write_csv(complexity_frame(report), path, {**provenance, "parity": str(report.parity()).lower()})

"""CSV emit/read helpers.

All numeric artifacts use decimal scientific notation with 9 significant
digits and a comma separator; byte-exact reproducibility is defined at this
formatted-text level.  Counts are written as plain integers.
"""

from __future__ import annotations

import numpy as np

SCI = "%.8e"  # 9 significant digits


def write_csv(path, names: list[str], columns: list[np.ndarray],
              formats: list[str] | None = None) -> None:
    cols = [np.asarray(c) for c in columns]
    if formats is None:
        formats = [SCI] * len(cols)
    data = np.column_stack([c.astype(float) for c in cols])
    with open(path, "w", newline="\n") as fh:
        np.savetxt(fh, data, fmt=formats, delimiter=",",
                   header=",".join(names), comments="")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Returns (column names, data array of shape (rows, cols))."""
    with open(path) as fh:
        header = fh.readline().strip()
    names = [h.strip() for h in header.split(",")]
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size and data.shape[1] != len(names):
        raise ValueError(f"{path}: {data.shape[1]} columns, {len(names)} names")
    return names, data


def write_phase_series_csv(path, series) -> None:
    """(t_s, phase_rad) export of a PhaseSeries."""
    write_csv(path, ["t_s", "phase_rad"], [series.times(), series.samples])


def write_psd_csv(path, psd) -> None:
    write_csv(path, ["freq_hz", "psd_rad2_per_hz"], [psd.freq_hz, psd.psd])


def write_adev_csv(path, adev) -> None:
    write_csv(path, ["tau_s", "adev", "count"],
              [adev.tau_s, adev.adev, adev.count],
              formats=[SCI, SCI, "%d"])


def write_freq_series_csv(path, t_s, y) -> None:
    write_csv(path, ["t_s", "y"], [t_s, y])


def write_budget_csv(path, report) -> None:
    """Budget ledger rows; first two columns are text, the rest numeric."""
    with open(path, "w", newline="\n") as fh:
        fh.write("element_id,kind,loss_db,gain_db,cumulative_db,power_w\n")
        for r in report.rows:
            fh.write("%s,%s,%s,%s,%s,%s\n" % (
                r.element_id, r.kind, SCI % r.loss_db, SCI % r.gain_db,
                SCI % r.cumulative_db, SCI % r.power_w))


def read_budget_csv(path) -> list[dict]:
    """Budget rows back as dicts with numeric fields converted."""
    import csv as _csv

    with open(path, newline="") as fh:
        rows = list(_csv.DictReader(fh))
    for row in rows:
        for key in ("loss_db", "gain_db", "cumulative_db", "power_w"):
            row[key] = float(row[key])
    return rows

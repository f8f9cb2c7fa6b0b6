"""CSV and JSON readers/writers for count, tomography, and series data.

Formats (all line-diffable, documented in the README):

* counts CSV: ``alpha_deg,beta_deg,n_uu,n_ud,n_du,n_dd,n_discarded``
* tomography CSV: the same columns prefixed by ``basis_a,basis_b``
* series CSV: ``dt_us,value,kind,sigma`` with kind in {N, EN} and sigma
  optionally empty
* density-matrix JSON: ``{"dim": d, "re": [...], "im": [...]}`` row-major
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .detection import CountRecord, MeasurementSetting, TomographyDataset
from .errors import DataError
from .qcore import DensityMatrix

COUNT_COLUMNS = ["alpha_deg", "beta_deg", "n_uu", "n_ud", "n_du", "n_dd", "n_discarded"]


def write_counts_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COUNT_COLUMNS)
        for rec in records:
            writer.writerow(
                [
                    f"{rec.setting.alpha_deg:.6f}",
                    f"{rec.setting.beta_deg:.6f}",
                    rec.n_uu,
                    rec.n_ud,
                    rec.n_du,
                    rec.n_dd,
                    rec.n_discarded,
                ]
            )


def _open_csv(path):
    try:
        return open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def read_counts_csv(path) -> list[CountRecord]:
    records = []
    with _open_csv(path) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c for c in COUNT_COLUMNS if c not in reader.fieldnames]:
            raise DataError(f"{path}: expected columns {COUNT_COLUMNS}")
        for row in reader:
            try:
                records.append(
                    CountRecord(
                        setting=MeasurementSetting(float(row["alpha_deg"]), float(row["beta_deg"])),
                        n_uu=int(row["n_uu"]),
                        n_ud=int(row["n_ud"]),
                        n_du=int(row["n_du"]),
                        n_dd=int(row["n_dd"]),
                        n_discarded=int(row["n_discarded"]),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path}: bad row {row!r}: {exc}") from exc
    if not records:
        raise DataError(f"{path}: no count rows")
    return records


def write_tomography_csv(path, dataset: TomographyDataset) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["basis_a", "basis_b"] + COUNT_COLUMNS)
        for basis_a, basis_b, rec in dataset.records:
            writer.writerow(
                [
                    basis_a,
                    basis_b,
                    f"{rec.setting.alpha_deg:.6f}",
                    f"{rec.setting.beta_deg:.6f}",
                    rec.n_uu,
                    rec.n_ud,
                    rec.n_du,
                    rec.n_dd,
                    rec.n_discarded,
                ]
            )


def read_tomography_csv(path) -> TomographyDataset:
    records = []
    with _open_csv(path) as fh:
        reader = csv.DictReader(fh)
        needed = ["basis_a", "basis_b"] + COUNT_COLUMNS
        if reader.fieldnames is None or [c for c in needed if c not in reader.fieldnames]:
            raise DataError(f"{path}: expected columns {needed}")
        for row in reader:
            try:
                rec = CountRecord(
                    setting=MeasurementSetting(float(row["alpha_deg"]), float(row["beta_deg"])),
                    n_uu=int(row["n_uu"]),
                    n_ud=int(row["n_ud"]),
                    n_du=int(row["n_du"]),
                    n_dd=int(row["n_dd"]),
                    n_discarded=int(row["n_discarded"]),
                )
                records.append((row["basis_a"], row["basis_b"], rec))
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path}: bad row {row!r}: {exc}") from exc
    if not records:
        raise DataError(f"{path}: no tomography rows")
    return TomographyDataset(records=tuple(records))


def write_series_csv(path, rows) -> None:
    """rows: iterable of (dt_us, value, kind, sigma-or-None)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dt_us", "value", "kind", "sigma"])
        for dt_us, value, kind, sigma in rows:
            writer.writerow(
                [f"{dt_us:.6f}", repr(float(value)), kind, "" if sigma is None else repr(float(sigma))]
            )


def read_series_csv(path):
    """Returns (dt_us, values, kinds, sigma-or-None) arrays."""
    dts, values, kinds, sigmas = [], [], [], []
    with _open_csv(path) as fh:
        reader = csv.DictReader(fh)
        needed = ["dt_us", "value", "kind"]
        if reader.fieldnames is None or [c for c in needed if c not in reader.fieldnames]:
            raise DataError(f"{path}: expected columns dt_us,value,kind[,sigma]")
        for row in reader:
            try:
                dts.append(float(row["dt_us"]))
                values.append(float(row["value"]))
                kinds.append(row["kind"].strip())
                raw_sigma = (row.get("sigma") or "").strip()
                sigmas.append(float(raw_sigma) if raw_sigma else None)
            except ValueError as exc:
                raise DataError(f"{path}: bad row {row!r}: {exc}") from exc
    if not dts:
        raise DataError(f"{path}: no series rows")
    sigma = None
    if all(s is not None for s in sigmas):
        sigma = np.array(sigmas, dtype=float)
    elif any(s is not None for s in sigmas):
        raise DataError(f"{path}: sigma must be given for all rows or none")
    return np.array(dts), np.array(values), np.array(kinds, dtype=object), sigma


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_density_matrix_json(path) -> DensityMatrix:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: cannot read density-matrix JSON: {exc}") from exc
    if isinstance(payload, dict) and "rho" in payload and isinstance(payload["rho"], dict):
        payload = payload["rho"]  # accept pipeline reconstruction files too
    return DensityMatrix.from_json_dict(payload)

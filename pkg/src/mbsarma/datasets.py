"""CSV ingestion, calendar covariates and the shipped synthetic weekly panel."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mcstudy import simulate_path
from .model import ModelSpec, ParamVector, SeriesPanel


class DataError(ValueError):
    """The input file or column selection cannot be used."""


class ConstantCovariateWarning(UserWarning):
    pass


HARMONIC_NAMES = ["trend", "sin_annual", "cos_annual", "sin_semiannual", "cos_semiannual"]


def harmonic_covariates(t, n_ref: int, period: float = 52.0) -> np.ndarray:
    """Trend t/n_ref plus annual and semi-annual sine/cosine pairs.

    ``t`` holds 1-based time indices; indices past ``n_ref`` extend the trend
    beyond 1, which is what out-of-sample forecasts need.
    """
    t = np.asarray(t, dtype=float)
    w = 2.0 * math.pi * t / period
    return np.column_stack([t / n_ref, np.sin(w), np.cos(w), np.sin(2 * w), np.cos(2 * w)])


@dataclass(eq=False)
class LoadedData:
    panel: SeriesPanel
    time: list[str]


def _split(cols) -> list[str]:
    if cols is None:
        return []
    if isinstance(cols, str):
        return [c.strip() for c in cols.split(",") if c.strip()]
    return list(cols)


def load_panel(path, responses=None, covariates=None, time_col=None,
               log_transform: bool = True, harmonics_period: float | None = None) -> LoadedData:
    """Read a comma-separated file with a header row into a panel.

    Responses default to every column that is neither the time column nor a
    covariate. Raw-scale responses are log-transformed unless
    ``log_transform`` is false.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            rows = [r for r in reader if any(c.strip() for c in r)]
    except (OSError, StopIteration) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    covs = _split(covariates)
    resp = _split(responses) or [h for h in header if h != time_col and h not in covs]
    missing = [c for c in resp + covs + ([time_col] if time_col else []) if c not in header]
    if missing:
        raise DataError(f"column(s) not found in {path.name}: {', '.join(missing)}")
    if not resp:
        raise DataError("no response columns selected")
    idx = {h: i for i, h in enumerate(header)}

    def column(name):
        try:
            return np.array([float(r[idx[name]]) for r in rows])
        except (ValueError, IndexError) as exc:
            raise DataError(f"column {name!r} has a non-numeric or missing entry") from exc

    y = np.column_stack([column(c) for c in resp])
    if log_transform:
        if np.any(~(y > 0)):
            raise DataError("log_transform requires strictly positive responses")
        y = np.log(y)
    x_parts, x_names = [], []
    if covs:
        x_parts.append(np.column_stack([column(c) for c in covs]))
        x_names += covs
    if harmonics_period:
        x_parts.append(harmonic_covariates(np.arange(1, y.shape[0] + 1), y.shape[0], harmonics_period))
        x_names += HARMONIC_NAMES
    x = np.hstack(x_parts) if x_parts else None
    if x is not None:
        const = [nm for nm, col in zip(x_names, x.T) if np.ptp(col) == 0]
        if const:
            warnings.warn(f"covariate(s) {', '.join(const)} are constant and duplicate the intercept",
                          ConstantCovariateWarning, stacklevel=2)
    times = [r[idx[time_col]] for r in rows] if time_col else [str(i) for i in range(1, len(rows) + 1)]
    return LoadedData(SeriesPanel(y, x, resp, x_names), times)


def write_panel(path, panel: SeriesPanel, raw_scale: bool = True, time=None) -> None:
    """Write ``panel`` as CSV; responses as exp(Y) when ``raw_scale``."""
    y = np.exp(panel.y) if raw_scale else panel.y
    time = time or list(range(1, panel.n + 1))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *panel.names, *panel.covariate_names])
        for t, yr, xr in zip(time, y, panel.x):
            w.writerow([t, *map(repr, yr.tolist()), *map(repr, xr.tolist())])


# -- synthetic weekly application panel --------------------------------------

STATIONS = ["east", "south", "north"]


def application_truth() -> tuple[ModelSpec, ParamVector]:
    """MA(1) per station with trend and two harmonic pairs; values shaped
    like a weekly three-station fine-particulate fit."""
    spec = ModelSpec.symmetric(3, 5, 0, 1)
    truth = ParamVector.from_dict(spec, {
        "alpha": 0.2986,
        "theta": [[0.2046], [0.2070], [0.1261]],
        "beta": [[-0.4079, 0.0105, -0.2050, 0.0937, 0.1705],
                 [-0.2012, 0.0730, -0.5101, 0.0754, 0.2869],
                 [-0.2168, 0.0928, -0.3682, 0.0731, 0.3458]],
        "eta": [3.2684, 3.4866, 3.3201],
        "rho": [0.8642, 0.9183, 0.9134],
    })
    return spec, truth


def synthetic_application_panel(n: int = 82, period: float = 52.0, seed: int = 2016) -> SeriesPanel:
    spec, truth = application_truth()
    x = harmonic_covariates(np.arange(1, n + 1), n, period)
    y, _ = simulate_path(spec, truth, x, np.random.default_rng(seed))
    return SeriesPanel(y, x, list(STATIONS), list(HARMONIC_NAMES))

"""Command-line front end.

Every option can also be given in a JSON file passed with ``--config``;
keys are the option names with dashes replaced by underscores, and explicit
command-line flags win over the file.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .diagnostics import acf, ks_test_chi2, ljung_box, pacf, qq_envelope, residuals
from .distributions import NotPositiveDefiniteError
from .estimation import DegenerateDataError, EmSettings, FitResult, em_fit, select_by_bic
from .forecasting import (
    forecast,
    gaussian_armax_benchmark,
    naive_eval,
    rolling_one_step_eval,
)
from .datasets import DataError, harmonic_covariates, load_panel, write_panel
from .mcstudy import McScenario, generate_panel, mse_trend_check, run_study
from .model import ModelSpec, ParamVector, SeriesPanel

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_DEGENERATE = 0, 2, 3, 4

log = logging.getLogger("mbsarma")


class ConfigError(ValueError):
    pass


# -- formatting ------------------------------------------------------------------

class Formatter:
    def __init__(self, full: bool):
        self.full = full

    def __call__(self, v) -> str:
        if isinstance(v, (bool, np.bool_)):
            return str(bool(v)).lower()
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            v = float(v)
            if not np.isfinite(v):
                return "nan" if np.isnan(v) else ("inf" if v > 0 else "-inf")
            return repr(v) if self.full else f"{v:.6g}"
        return str(v)


def write_csv(path: Path, header, rows, fmt: Formatter) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


# -- argument handling ------------------------------------------------------

def _orders(value, d: int, name: str) -> tuple[int, ...]:
    if isinstance(value, str):
        value = [int(v) for v in value.split(",") if v.strip()]
    vals = [int(value)] if np.isscalar(value) else [int(v) for v in value]
    if len(vals) == 1:
        vals = vals * d
    if len(vals) != d or min(vals) < 0:
        raise ConfigError(f"{name} needs one nonnegative order or {d} of them, got {value}")
    return tuple(vals)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--out", help="output directory (default: current directory)")
    p.add_argument("--full-precision", action="store_true", default=None,
                   help="print numbers at full precision instead of 6 significant digits")
    p.add_argument("--seed", type=int)


def _add_data(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="CSV file with a header row")
    p.add_argument("--responses", help="comma-separated response columns (default: all others)")
    p.add_argument("--covariates", help="comma-separated covariate columns")
    p.add_argument("--time-col", help="optional time/label column")
    p.add_argument("--log-transform", dest="log_transform", action="store_true", default=None,
                   help="responses are raw positive values; model their logs (default)")
    p.add_argument("--no-log-transform", dest="log_transform", action="store_false",
                   help="responses are already on the log scale")
    p.add_argument("--harmonics", type=float, metavar="PERIOD",
                   help="append trend t/n and annual/semi-annual sin/cos covariates for this period")
    p.add_argument("--test-len", type=int, help="hold out this many final rows")
    p.add_argument("--tol", type=float, help="EM log-likelihood tolerance")
    p.add_argument("--max-em-iters", type=int)
    p.add_argument("--shape-corr-update", choices=["exact", "closed_form"])


def _add_orders(p: argparse.ArgumentParser) -> None:
    p.add_argument("-p", "--ar", help="AR order, or comma list per component")
    p.add_argument("-q", "--ma", help="MA order, or comma list per component")


DEFAULTS = {
    "out": ".", "full_precision": False, "seed": 0, "log_transform": True, "test_len": 0,
    "tol": 1e-6, "max_em_iters": 500, "shape_corr_update": "exact", "ar": 0, "ma": 0,
    "orders": "0,1,2", "n_sim": 100, "level": 0.95, "max_lag": 12, "mode": "rolling",
    "horizon": 0, "benchmark_p": 0, "benchmark_q": 1, "n": 200, "raw_scale": True,
    "replicates": 200, "jobs": 1, "no_se": False,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mbsarma", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one model and report estimates")
    _add_common(p), _add_data(p), _add_orders(p)
    p.add_argument("--no-se", action="store_true", default=None, help="skip standard errors")

    p = sub.add_parser("select", help="rank symmetric orders by BIC")
    _add_common(p), _add_data(p)
    p.add_argument("--orders", help="candidate orders for both p and q (default 0,1,2)")

    p = sub.add_parser("diagnose", help="residual diagnostics for a fitted model")
    _add_common(p), _add_data(p), _add_orders(p)
    p.add_argument("--n-sim", type=int, help="envelope simulations (default 100)")
    p.add_argument("--level", type=float, help="envelope level (default 0.95)")
    p.add_argument("--max-lag", type=int, help="ACF/PACF/Ljung-Box lag (default 12)")

    p = sub.add_parser("forecast", help="hold-out evaluation and forecasts")
    _add_common(p), _add_data(p), _add_orders(p)
    p.add_argument("--mode", choices=["rolling", "fixed"])
    p.add_argument("--horizon", type=int, help="steps to forecast past the end of the data")
    p.add_argument("--future-data", help="CSV with covariate columns for the forecast horizon")
    p.add_argument("--benchmark-p", type=int)
    p.add_argument("--benchmark-q", type=int)

    p = sub.add_parser("simulate", help="simulate a panel from a truth file")
    _add_common(p)
    p.add_argument("--truth", help="JSON file with spec and parameter values")
    p.add_argument("--n", type=int)
    p.add_argument("--output", help="CSV file to write")
    p.add_argument("--log-scale", dest="raw_scale", action="store_false", default=None,
                   help="write log-scale responses instead of raw values")

    p = sub.add_parser("mc", help="Monte Carlo bias/MSE study")
    _add_common(p)
    p.add_argument("--truth", help="JSON file with spec and parameter values")
    p.add_argument("--n", help="comma-separated sample sizes")
    p.add_argument("--replicates", type=int)
    p.add_argument("--jobs", type=int)
    return parser


def _all_option_names(parser: argparse.ArgumentParser) -> set[str]:
    names = set()
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                names.update(a.dest for a in sub._actions)
    return names


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    # explicit flags > config file > defaults
    merged = {**dict.fromkeys(vars(args)), **DEFAULTS}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(cfg) - _all_option_names(parser))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        # one config file can serve every subcommand; keys for the others are skipped
        merged.update({k: v for k, v in cfg.items() if k in vars(args)})
    merged.update({k: v for k, v in vars(args).items() if v is not None})
    return argparse.Namespace(**merged)


def _settings(a, se: bool = True) -> EmSettings:
    try:
        return EmSettings(loglik_tol=float(a.tol), max_em_iters=int(a.max_em_iters),
                          shape_corr_update=a.shape_corr_update, compute_std_errors=se)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _load(a):
    if not getattr(a, "data", None):
        raise ConfigError("--data is required")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        data = load_panel(a.data, a.responses, a.covariates, a.time_col,
                          bool(a.log_transform), a.harmonics)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return data


def _spec(a, panel: SeriesPanel) -> ModelSpec:
    return ModelSpec(panel.d, panel.k, _orders(a.ar, panel.d, "--ar"), _orders(a.ma, panel.d, "--ma"))


def _outdir(a) -> Path:
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _train(a, panel: SeriesPanel) -> SeriesPanel:
    test_len = int(a.test_len)
    if not 0 <= test_len < panel.n:
        raise ConfigError(f"test_len must lie in [0, {panel.n})")
    return panel.head(panel.n - test_len)


def _report_fit(fit: FitResult, out: Path, fmt: Formatter, panel: SeriesPanel) -> None:
    rows = fit.summary_rows()
    write_csv(out / "estimates.csv", ["parameter", "estimate", "std_error"], rows, fmt)
    write_csv(out / "em_trace.csv", ["iteration", "loglik"], enumerate(fit.em_trace), fmt)
    write_csv(out / "roots.csv",
              ["component", "response", "ar_stationary", "ma_invertible", "min_root_modulus"],
              [(r.component, panel.names[r.component - 1], r.ar_stationary, r.ma_invertible,
                r.min_root_modulus) for r in fit.root_report], fmt)
    lines = [
        f"model: {fit.spec.label()}",
        f"responses: {', '.join(panel.names)}",
        f"covariates: {', '.join(panel.covariate_names) or 'none'}",
        f"observations: {panel.n} (conditioning on the first {fit.m}, effective {fit.n_eff})",
        f"free parameters: {fit.n_params}",
        f"loglik: {fmt(fit.loglik)}",
        f"bic: {fmt(fit.bic)}",
        f"em_iterations: {fit.em_iterations}",
        f"converged: {fmt(fit.converged)} ({fit.message})",
        *[f"note: {n}" for n in fit.notes],
        "",
        f"{'parameter':<14}{'estimate':>14}{'std_error':>14}",
        *[f"{n:<14}{fmt(e):>14}{fmt(s):>14}" for n, e, s in rows],
    ]
    text = "\n".join(lines) + "\n"
    (out / "fit_report.txt").write_text(text, encoding="utf-8")
    print(text, end="")


def _fit(a, panel, se=True) -> FitResult:
    return em_fit(_spec(a, panel), panel, _settings(a, se))


# -- commands -------------------------------------------------------------

def cmd_fit(a) -> int:
    fmt, out = Formatter(a.full_precision), _outdir(a)
    data = _load(a)
    train = _train(a, data.panel)
    fit = _fit(a, train, se=not a.no_se)
    _report_fit(fit, out, fmt, train)
    return EXIT_OK if fit.converged else EXIT_NOT_CONVERGED


def cmd_select(a) -> int:
    fmt, out = Formatter(a.full_precision), _outdir(a)
    data = _load(a)
    train = _train(a, data.panel)
    orders = [int(v) for v in str(a.orders).split(",") if v.strip()]
    cands = [ModelSpec.symmetric(train.d, train.k, p, q) for p in orders for q in orders]
    rows = select_by_bic(train, cands, _settings(a, se=False))
    table = [(i + 1, r.spec.label(), r.spec.n_params,
              r.fit.loglik if r.fit else np.nan, r.bic,
              r.fit.converged if r.fit else False, r.admissible, r.error) for i, r in enumerate(rows)]
    write_csv(out / "bic_table.csv",
              ["rank", "model", "n_params", "loglik", "bic", "converged", "admissible", "error"], table, fmt)
    for row in table:
        print("  ".join(fmt(v) for v in row[:7]) + (f"  {row[7]}" if row[7] else ""))
    best = rows[0]
    if best.fit is None:
        raise DegenerateDataError("no candidate model could be fitted")
    return EXIT_OK


def cmd_diagnose(a) -> int:
    fmt, out = Formatter(a.full_precision), _outdir(a)
    data = _load(a)
    train = _train(a, data.panel)
    fit = _fit(a, train, se=False)
    res = residuals(fit, train)
    times = data.time[res.valid_from:train.n]
    write_csv(out / "residuals.csv", ["t", "D2", *[f"a_{nm}" for nm in train.names]],
              [(t, d2, *a_row) for t, d2, a_row in zip(times, res.d2, res.a)], fmt)
    tab = qq_envelope(res.d2, train.d, int(a.n_sim), float(a.level), int(a.seed))
    write_csv(out / "qq_envelope.csv", ["theoretical_quantile", "observed", "lower", "upper"],
              tab.rows(), fmt)
    lag = min(int(a.max_lag), res.a.shape[0] - 1)
    corr_rows, lb_rows = [], []
    for j, nm in enumerate(train.names):
        r, pr = acf(res.a[:, j], lag), pacf(res.a[:, j], lag)
        corr_rows += [(nm, k, r[k], pr[k - 1]) for k in range(1, lag + 1)]
        lb = ljung_box(res.a[:, j], lag)
        lb_rows.append((nm, lag, lb.statistic, lb.p_value))
    write_csv(out / "acf_pacf.csv", ["component", "lag", "acf", "pacf"], corr_rows, fmt)
    write_csv(out / "ljung_box.csv", ["component", "lag", "statistic", "p_value"], lb_rows, fmt)
    ks = ks_test_chi2(res.d2, train.d)
    summary = [("ks_statistic", ks.statistic), ("ks_p_value", ks.p_value), ("mean_D2", float(np.mean(res.d2))),
               ("dof", train.d), ("envelope_coverage", tab.coverage()), ("loglik", fit.loglik)]
    write_csv(out / "diagnostics_summary.csv", ["quantity", "value"], summary, fmt)
    for k, v in summary:
        print(f"{k}: {fmt(v)}")
    return EXIT_OK if fit.converged else EXIT_NOT_CONVERGED


def _future_covariates(a, panel: SeriesPanel, h: int) -> np.ndarray | None:
    if panel.k == 0:
        return None
    if a.harmonics and not a.covariates:
        return harmonic_covariates(np.arange(panel.n + 1, panel.n + h + 1), panel.n, a.harmonics)
    if not getattr(a, "future_data", None):
        raise ConfigError("--horizon needs --future-data with the covariate columns")
    future = load_panel(a.future_data, responses=a.covariates, log_transform=False).panel.y
    if a.harmonics:
        harm = harmonic_covariates(np.arange(panel.n + 1, panel.n + future.shape[0] + 1), panel.n, a.harmonics)
        future = np.hstack([future, harm])
    if future.shape[0] < h:
        raise ConfigError(f"--future-data has {future.shape[0]} rows, {h} needed")
    return future[:h]


def cmd_forecast(a) -> int:
    fmt, out = Formatter(a.full_precision), _outdir(a)
    data = _load(a)
    full, test_len = data.panel, int(a.test_len)
    train = _train(a, full)
    fit = _fit(a, train, se=False)
    fc_rows, metric_rows = [], []
    if test_len:
        ev = rolling_one_step_eval(fit, full, test_len, a.mode)
        nv = naive_eval(full, test_len, a.mode)
        bm = gaussian_armax_benchmark(full, test_len, int(a.benchmark_p), int(a.benchmark_q), a.mode)
        label = f"gaussian_armax({int(a.benchmark_p)},{int(a.benchmark_q)})"
        for model, e in (("mbsarma", ev), ("naive", nv), (label, bm.evaluation)):
            metric_rows += [(model, nm, r, m) for nm, r, m in zip(full.names, e.rmse, e.mae)]
        times = data.time[train.n:]
        for i, t in enumerate(times):
            for j, nm in enumerate(full.names):
                y = ev.predictions[i, j]
                fc_rows.append((t, nm, full.y[i + train.n, j], y, float(np.exp(y))))
    h = int(a.horizon)
    if h > 0:
        res = forecast(fit, full, _future_covariates(a, full, h), h)
        for s in range(h):
            for j, nm in enumerate(full.names):
                fc_rows.append((f"+{s + 1}", nm, np.nan, res.y_hat[s, j], res.t_hat[s, j]))
    write_csv(out / "forecast.csv", ["t", "component", "y_obs", "y_hat", "t_hat"], fc_rows, fmt)
    write_csv(out / "metrics.csv", ["model", "component", "rmse", "mae"], metric_rows, fmt)
    for row in metric_rows:
        print("  ".join(fmt(v) for v in row))
    return EXIT_OK if fit.converged else EXIT_NOT_CONVERGED


def load_truth(path) -> tuple[ModelSpec, ParamVector, dict]:
    """Truth file: {"d", "k", "p", "q", "params": {alpha, phi, theta, beta, eta, rho}, ...}."""
    if not path:
        raise ConfigError("--truth is required")
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
        spec = ModelSpec(int(cfg["d"]), int(cfg.get("k", 0)),
                         _orders(cfg.get("p", 0), int(cfg["d"]), "p"),
                         _orders(cfg.get("q", 0), int(cfg["d"]), "q"))
        truth = ParamVector.from_dict(spec, cfg["params"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid truth file {path}: {exc}") from exc
    return spec, truth, cfg


def cmd_simulate(a) -> int:
    spec, truth, cfg = load_truth(a.truth)
    try:
        sc = McScenario(spec, truth, int(a.n), 1, int(a.seed))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    panel = generate_panel(sc, 0)
    panel = SeriesPanel(panel.y, panel.x, cfg.get("names") or panel.names,
                        cfg.get("covariate_names") or panel.covariate_names)
    target = Path(a.output) if getattr(a, "output", None) else _outdir(a) / "simulated.csv"
    target.parent.mkdir(parents=True, exist_ok=True)
    write_panel(target, panel, raw_scale=bool(a.raw_scale))
    print(f"wrote {panel.n} rows to {target}")
    return EXIT_OK


def cmd_mc(a) -> int:
    fmt, out = Formatter(a.full_precision), _outdir(a)
    spec, truth, _ = load_truth(a.truth)
    sizes = [int(v) for v in str(a.n).split(",") if v.strip()]
    settings = _settings(a, se=False)
    reports, rows = [], []
    for n in sizes:
        try:
            sc = McScenario(spec, truth, n, int(a.replicates), int(a.seed))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        rep = run_study(sc, settings, int(a.jobs))
        reports.append(rep)
        rows.append(("Bias", n, rep.n_converged, *rep.bias))
        rows.append(("MSE", n, rep.n_converged, *rep.mse))
    names = spec.param_names()
    write_csv(out / "mc_table.csv", ["statistic", "n", "n_converged", *names], rows, fmt)
    print("statistic  n  n_converged  " + "  ".join(names))
    for row in rows:
        print("  ".join(fmt(v) for v in row))
    if len(set(sizes)) >= 3:
        print(f"mse_nonincreasing: {fmt(mse_trend_check(reports))}")
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "select": cmd_select, "diagnose": cmd_diagnose,
            "forecast": cmd_forecast, "simulate": cmd_simulate, "mc": cmd_mc}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        a = parse_args(argv)
        return COMMANDS[a.command](a)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateDataError, NotPositiveDefiniteError) as exc:
        print(f"error: degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

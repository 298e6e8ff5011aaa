"""End-to-end workflow: diagnostics, econometric fits, ML stack, reports.

``run_pipeline`` executes the stages in a fixed order, records a status
line per stage, and always writes whatever artifacts exist, so a failed
run leaves partial output plus a manifest that says it is incomplete.
All numeric CSV cells use 17 significant digits, which makes re-runs with
the same data and seed byte-identical.
"""

from __future__ import annotations

import json
import math
import os
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .arima import ArimaSpec, fit_arima, forecast_arima, select_order
from .cointegration import engle_granger, fit_vecm, johansen_trace, stationary_combination
from .config import PipelineConfig
from .data import Dataset
from .diagnostics import TestReport, adf_test, ljung_box, select_differencing_order
from .ensemble import (
    arima_extender,
    evaluate,
    make_cv_slices,
    recursive_forecast,
    stack_fit,
)
from .errors import StageFailed
from .garch import diagnose_fit, fit_arma_garch, forecast_garch
from .mlmodels import fit_pca, grid_search, project
from .series import (
    CorrelogramResult,
    ForecastPath,
    TimeSeries,
    acf_pacf,
    chrono_split,
    format_month,
    month_add,
)
from .varx import fit_varx, forecast_varx, granger_causality, impulse_response


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_").lower()


@dataclass
class PipelineResult:
    """Everything a run produced, in memory, ready for emit_report."""

    config: PipelineConfig
    dataset: Dataset
    diff_orders: dict = field(default_factory=dict)
    diff_reports: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)  # (section, TestReport)
    notes: list = field(default_factory=list)  # (section, text line)
    correlograms: dict = field(default_factory=dict)
    evaluations: list = field(default_factory=list)
    predictions: dict = field(default_factory=dict)  # name -> (month0, actual, pred)
    residuals: dict = field(default_factory=dict)  # name -> (month0, values)
    forecasts: dict = field(default_factory=dict)  # name -> ForecastPath
    forecast_order: list = field(default_factory=list)
    irfs: list = field(default_factory=list)
    pca_model: object = None
    johansen: object = None
    vecm: object = None
    combo: TimeSeries | None = None
    stage_status: list = field(default_factory=list)

    @property
    def incomplete(self) -> bool:
        return any(s.startswith("failed") for _, s in self.stage_status)


def _train_len(config: PipelineConfig, n: int) -> int:
    return math.ceil(config.train_fraction * n)


def run_pipeline(config: PipelineConfig, data: Dataset) -> PipelineResult:
    """Run every enabled stage in order and write all report files.

    A stage failure writes the partial artifacts and manifest, then raises
    :class:`StageFailed` naming the stage.
    """
    config.validate()
    result = PipelineResult(config=config, dataset=data)
    state: dict = {}

    stages = [
        ("differencing", True, _stage_differencing),
        ("diagnostics", True, _stage_diagnostics),
        ("arima", config.run_arima, _stage_arima),
        ("arimax", config.run_arimax and bool(config.arimax_exog), _stage_arimax),
        ("garch", config.run_garch, _stage_garch),
        ("cointegration", config.run_cointegration, _stage_cointegration),
        ("vecm", config.run_vecm, _stage_vecm),
        ("varx", config.run_varx, _stage_varx),
        ("pca", config.run_ml, _stage_pca),
        ("ml", config.run_ml, _stage_ml),
        ("ensemble", config.run_ml and config.run_ensemble, _stage_ensemble),
        ("forecast", True, _stage_forecast),
    ]
    for name, enabled, fn in stages:
        if not enabled:
            result.stage_status.append((name, "skipped"))
            continue
        try:
            fn(config, data, result, state)
        except Exception as exc:
            result.stage_status.append((name, f"failed: {exc}"))
            emit_report(result, config.output_dir)
            raise StageFailed(name, exc) from exc
        result.stage_status.append((name, "ok"))
    emit_report(result, config.output_dir)
    return result


# ---------------------------------------------------------------------------
# Stages


def _stage_differencing(config, data, result, state):
    for name in data.names:
        if name in config.diff_overrides:
            d = int(config.diff_overrides[name])
            report = adf_test(data.series(name))
            reports = [report]
        elif config.diff_auto:
            d, reports = select_differencing_order(
                data.series(name), max_rounds=config.diff_max_rounds
            )
        else:
            d, reports = 0, [adf_test(data.series(name))]
        result.diff_orders[name] = d
        result.diff_reports[name] = reports[0]
        result.reports.append((f"differencing[{name}]", reports[0]))
        result.notes.append(
            ("differencing", f"{name}: order {d} (level ADF p={reports[0].p_value:.6g})")
        )


def _stage_diagnostics(config, data, result, state):
    target = data.series(config.target)
    max_lag = min(24, len(target) // 4)
    result.correlograms[f"acf_{config.target}"] = acf_pacf(target, max_lag, "acf")
    result.correlograms[f"pacf_{config.target}"] = acf_pacf(target, max_lag, "pacf")
    d = result.diff_orders.get(config.target, 1) or 1
    diff_vals = np.diff(target.values, n=d)
    diff_series = TimeSeries(
        f"{config.target}_diff", month_add(target.start, d), diff_vals
    )
    result.correlograms[f"acf_{config.target}_diff"] = acf_pacf(diff_series, max_lag, "acf")
    result.correlograms[f"pacf_{config.target}_diff"] = acf_pacf(diff_series, max_lag, "pacf")
    lb = ljung_box(diff_vals, lags=min(24, diff_vals.size // 5))
    result.reports.append((f"ljung-box[diff {config.target}]", lb))
    state["train_n"] = _train_len(config, len(data))


def _eval_and_store(result, name, months_start, actual, predicted):
    report = evaluate(actual, predicted, name)
    result.evaluations.append(report)
    result.predictions[name] = (months_start, np.asarray(actual), np.asarray(predicted))


def _stage_arima(config, data, result, state):
    target = data.series(config.target)
    n = len(target)
    train_n = state["train_n"]
    d = config.arima_d if config.arima_d is not None else result.diff_orders[config.target]
    train = TimeSeries(target.name, target.start, target.values[:train_n])
    spec, fit = select_order(
        train, d=d, p_max=config.arima_p_max, q_max=config.arima_q_max
    )
    name = f"ARIMA({spec.p},{spec.d},{spec.q})"
    lb = ljung_box(fit.residuals, lags=24, fitted_params=spec.p + spec.q)
    result.reports.append((f"ljung-box[{name} residuals]", lb))
    result.residuals[name] = (train_n - fit.residuals.size, fit.residuals)

    path = forecast_arima(fit, n - train_n)
    _eval_and_store(result, name, train_n, target.values[train_n:], path.values)

    full_fit = fit_arima(target, spec)
    result.forecasts[name] = forecast_arima(full_fit, config.horizon)
    result.forecast_order.append(name)
    state["arima_name"] = name


def _arimax_frames(config, data, result):
    """Aligned differenced target and regressor matrix over the calendar."""
    p, d_t, q = config.arimax_order
    exog_names = list(config.arimax_exog)
    d_map = {v: result.diff_orders.get(v, 1) for v in exog_names}
    offset = max([d_t] + [d_map[v] for v in exog_names])
    n = len(data)
    cols = []
    for v in exog_names:
        dv = d_map[v]
        diffed = np.diff(data.column(v), n=dv) if dv else data.column(v)
        cols.append(diffed[offset - dv :])
    exog_full = np.column_stack(cols)  # rows = calendar offset..n-1
    return offset, exog_full


def _stage_arimax(config, data, result, state):
    p, d_t, q = config.arimax_order
    target = data.series(config.target)
    n = len(target)
    train_n = state["train_n"]
    offset, exog_full = _arimax_frames(config, data, result)
    name = f"ARIMAX({p},{d_t},{q})"

    endog_train = TimeSeries(
        target.name,
        month_add(target.start, offset - d_t),
        target.values[offset - d_t : train_n],
    )
    exog_train = exog_full[: train_n - offset]
    spec = ArimaSpec(p, d_t, q)
    fit = fit_arima(endog_train, spec, exog=exog_train)
    lb = ljung_box(fit.residuals, lags=24, fitted_params=p + q)
    result.reports.append((f"ljung-box[{name} residuals]", lb))
    result.residuals[name] = (train_n - fit.residuals.size, fit.residuals)

    future_exog = exog_full[train_n - offset :]
    path = forecast_arima(fit, n - train_n, future_exog=future_exog)
    _eval_and_store(result, name, train_n, target.values[train_n:], path.values)

    endog_full = TimeSeries(
        target.name, month_add(target.start, offset - d_t), target.values[offset - d_t :]
    )
    full_fit = fit_arima(endog_full, spec, exog=exog_full)
    h = config.horizon
    ext_cols = []
    for j in range(exog_full.shape[1]):
        extend = arima_extender()
        history = exog_full[:, j].copy()
        steps = []
        for _ in range(h):
            nxt = extend(history)
            steps.append(nxt)
            history = np.append(history, nxt)
        ext_cols.append(steps)
    result.forecasts[name] = forecast_arima(
        full_fit, h, future_exog=np.column_stack(ext_cols)
    )
    result.forecast_order.append(name)


def _stage_garch(config, data, result, state):
    target = data.series(config.target)
    n = len(target)
    train_n = state["train_n"]
    m, n_ma = config.garch_mean_order
    name = f"ARMA({m},{n_ma})-GARCH(1,1)"
    train = TimeSeries(target.name, target.start, target.values[:train_n])
    fit = fit_arma_garch(train, (m, n_ma))
    for report in diagnose_fit(fit):
        result.reports.append((name, report))
    result.notes.append(
        (
            name,
            f"mu={fit.mu:.6g} ar={np.round(fit.arma_ar, 4).tolist()} "
            f"ma={np.round(fit.arma_ma, 4).tolist()} alpha0={fit.alpha0:.6g} "
            f"alpha1={fit.alpha1:.6g} beta1={fit.beta1:.6g} "
            f"persistence={fit.persistence:.6g}",
        )
    )
    result.residuals[name] = (train_n - fit.residuals.size, fit.residuals)

    path = forecast_garch(fit, n - train_n)
    _eval_and_store(result, name, train_n, target.values[train_n:], path.values)

    full_fit = fit_arma_garch(target, (m, n_ma))
    result.forecasts[name] = forecast_garch(full_fit, config.horizon)
    result.forecast_order.append(name)


def _stage_cointegration(config, data, result, state):
    x_name = config.eg_x or next(n for n in data.names if n != config.target)
    eg, ecm = engle_granger(data.series(config.target), data.series(x_name))
    result.reports.append((f"engle-granger[{config.target}~{x_name}]", eg.adf_on_residuals))
    result.notes.append(
        (
            "engle-granger",
            f"{config.target} = {eg.intercept:.6g} + {eg.slope:.6g}*{x_name}; "
            f"residual AR(1)={eg.residual_ar1:.6g}; cointegrated={eg.cointegrated}",
        )
    )
    result.notes.append(
        (
            "ecm",
            f"d({config.target}) = {ecm.alpha:.6g}*resid[t-1] "
            f"+ {ecm.gamma[0]:.6g}*d({x_name})",
        )
    )

    variables = config.johansen_variables or _default_system(config, data)
    table = data.subtable(variables)
    joh = johansen_trace(
        table, lags=config.johansen_lags, names=tuple(variables), start=data.start
    )
    result.johansen = joh
    result.notes.append(
        (
            "johansen",
            f"variables={variables} largest eigenvalue={joh.eigenvalues[0]:.6g} "
            f"selected rank={joh.selected_rank}",
        )
    )
    for r in range(len(variables)):
        result.notes.append(
            (
                "johansen",
                f"r<={r}: trace={joh.trace_stats[r]:.6g} "
                f"cv(10/5/1%)={tuple(round(c, 2) for c in joh.critical_values[r])}",
            )
        )
    if joh.selected_rank >= 1:
        combo = stationary_combination(joh, table)
        result.combo = combo
        report = adf_test(combo)
        result.reports.append(("stationary-combination-adf", report))
        weights = ", ".join(
            f"{w:+.6g}*{v}" for w, v in zip(joh.eigenvectors[:, 0], variables)
        )
        result.notes.append(("johansen", f"stationary combination: {weights}"))
    state["system_variables"] = variables


def _default_system(config, data):
    others = [n for n in data.names if n != config.target]
    return [config.target] + others[:3]


def _stage_vecm(config, data, result, state):
    variables = state.get("system_variables") or (
        config.johansen_variables or _default_system(config, data)
    )
    table = data.subtable(variables)
    rank = min(config.vecm_rank, len(variables) - 1)
    vecm = fit_vecm(table, rank=rank, lags=config.vecm_lags, names=tuple(variables))
    result.vecm = vecm
    for eq, name in enumerate(variables):
        cells = "; ".join(
            f"ECT{r + 1}={vecm.ect_coefficients[eq, r]:.6g} "
            f"(se={vecm.ect_stderr[eq, r]:.3g}, p={vecm.ect_pvalues[eq, r]:.3g})"
            for r in range(rank)
        )
        result.notes.append(("vecm", f"{name}: {cells}"))
    state["system_variables"] = variables


def _stage_varx(config, data, result, state):
    variables = config.varx_variables or state.get("system_variables") or _default_system(
        config, data
    )
    table = data.subtable(variables)
    n = len(data)
    train_n = state["train_n"]
    fit_train = fit_varx(
        table[:train_n],
        p=config.varx_p,
        deterministic=config.varx_deterministic,
        names=tuple(variables),
        start=data.start,
    )
    p = fit_train.lag_order
    name = f"VAR({p})"
    paths = forecast_varx(fit_train, n - train_n)
    _eval_and_store(
        result, name, train_n, data.column(config.target)[train_n:],
        paths[config.target].values,
    )

    full_fit = fit_varx(
        table,
        p=config.varx_p,
        deterministic=config.varx_deterministic,
        names=tuple(variables),
        start=data.start,
    )
    result.reports.append((f"portmanteau[{name} residuals]", full_fit.portmanteau))
    for eq, vname in enumerate(variables):
        result.notes.append(("varx", f"{vname}: R^2={full_fit.r_squared[eq]:.6g}"))
    tgt_eq = variables.index(config.target)
    result.residuals[name] = (
        n - full_fit.residuals.shape[0],
        full_fit.residuals[:, tgt_eq],
    )
    for impulse in variables:
        if impulse == config.target:
            continue
        irf = impulse_response(
            full_fit,
            impulse,
            config.target,
            horizon=config.irf_horizon,
            boot_reps=config.irf_bootstrap,
            seed=config.seed,
        )
        result.irfs.append(irf)
    for cause in variables:
        result.reports.append(("granger", granger_causality(full_fit, cause)))

    result.forecasts[name] = forecast_varx(full_fit, config.horizon)[config.target]
    result.forecast_order.append(name)


def _stage_pca(config, data, result, state):
    predictors = config.ml_predictors or [
        n for n in data.names if n != config.target
    ]
    table = data.subtable(predictors)
    train_n = state["train_n"]
    fit_rows = table if config.pca_fit_on == "full" else table[:train_n]
    pca = fit_pca(fit_rows)
    result.pca_model = pca
    m = min(config.pca_components, len(predictors))
    scores = project(pca, table, m)
    ref = scores if config.pca_fit_on == "full" else scores[:train_n]
    lo, hi = ref.min(axis=0), ref.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    state["scores"] = (scores - lo) / span
    state["predictors"] = predictors
    state["n_components"] = m
    for j in range(len(predictors)):
        result.notes.append(
            (
                "pca",
                f"PC{j + 1}: eigenvalue={pca.eigenvalues[j]:.6g} "
                f"pct={pca.explained_pct[j]:.6g} cum={pca.cumulative_pct[j]:.6g}",
            )
        )


def _stage_ml(config, data, result, state):
    scores = state["scores"]
    y = data.column(config.target)
    train_n = state["train_n"]
    slices = make_cv_slices(train_n, config.cv_folds)
    state["slices"] = slices
    grids = {
        "knn": config.grid_knn,
        "ridge": config.grid_ridge,
        "svr": config.grid_svr,
        "ann": {**config.grid_ann, "max_iter": [config.ann_max_iter]},
    }
    state["grids"] = grids
    labels = {"knn": "KNN", "ridge": "Ridge", "svr": "SVR", "ann": "ANN"}
    state["ml_fits"] = {}
    for kind in ("knn", "svr", "ridge", "ann"):
        hyper, fit = grid_search(
            kind, scores[:train_n], y[:train_n], grids[kind], slices, seed=config.seed
        )
        state["ml_fits"][labels[kind]] = fit
        result.notes.append((labels[kind], f"selected hyperparameters: {hyper}"))
        preds = fit.predict(scores[train_n:])
        _eval_and_store(result, labels[kind], train_n, y[train_n:], preds)


def _stage_ensemble(config, data, result, state):
    scores = state["scores"]
    y = data.column(config.target)
    train_n = state["train_n"]
    stacked = stack_fit(
        scores[:train_n], y[:train_n], state["slices"], state["grids"],
        seed=config.seed,
    )
    state["stacked"] = stacked
    result.notes.append(
        (
            "ensemble",
            f"meta lambda={stacked.meta_lambda:.6g} "
            f"weights={dict(zip(stacked.component_order, np.round(stacked.meta.coef, 4)))}",
        )
    )
    preds = stacked.predict(scores[train_n:])
    _eval_and_store(result, "Ensemble", train_n, y[train_n:], preds)


def _stage_forecast(config, data, result, state):
    if "scores" not in state:
        return
    scores = state["scores"]
    h = config.horizon
    first = month_add(data.start, len(data))

    # extend the shared feature history once, then replay it per model
    p = scores.shape[1]
    histories = [scores[:, j].copy() for j in range(p)]
    extended = np.empty((h, p))
    for j in range(p):
        extend = arima_extender()
        for step in range(h):
            nxt = extend(histories[j])
            extended[step, j] = nxt
            histories[j] = np.append(histories[j], nxt)

    def replay(col):
        queue = list(extended[:, col])

        def extender(values):
            return queue.pop(0)

        return extender

    labels = {"knn": "KNN", "ridge": "Ridge", "svr": "SVR", "ann": "ANN"}
    models = dict(state.get("ml_fits", {}))
    if "stacked" in state:
        models["Ensemble"] = state["stacked"]
    for label, model in models.items():
        path = recursive_forecast(
            model,
            scores,
            h,
            extenders=[replay(j) for j in range(p)],
            start=first,
            name=config.target,
        )
        result.forecasts[label] = path
        result.forecast_order.append(label)


# ---------------------------------------------------------------------------
# Report emission


def emit_report(result: PipelineResult, out_dir) -> list[str]:
    """Write evaluation/forecast CSVs, diagnostics, plot data, and manifest."""
    os.makedirs(out_dir, exist_ok=True)
    plots = os.path.join(out_dir, "plotdata")
    os.makedirs(plots, exist_ok=True)
    written = []

    path = os.path.join(out_dir, "evaluation.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("model,mape,percent_bias\n")
        for rep in result.evaluations:
            fh.write(f"{rep.model_name},{_fmt(rep.mape)},{_fmt(rep.percent_bias)}\n")
    written.append(path)

    path = os.path.join(out_dir, "forecasts.csv")
    order = [n for n in result.forecast_order if n in result.forecasts]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("month," + ",".join(order) + "\n")
        if order:
            months = result.forecasts[order[0]].months()
            for i, label in enumerate(months):
                cells = [_fmt(result.forecasts[name].values[i]) for name in order]
                fh.write(f"{label}," + ",".join(cells) + "\n")
    written.append(path)

    path = os.path.join(out_dir, "diagnostics.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# differencing orders\n")
        for name, d in result.diff_orders.items():
            fh.write(f"{name}: d={d}\n")
        fh.write("\n# hypothesis tests\n")
        for section, report in result.reports:
            fh.write(f"[{section}] {report}\n")
        fh.write("\n# model notes\n")
        for section, line in result.notes:
            fh.write(f"[{section}] {line}\n")
    written.append(path)

    for label, corr in result.correlograms.items():
        path = os.path.join(plots, f"{_slug(label)}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("lag,coefficient,confidence_bound\n")
            for lag, coef in zip(corr.lags, corr.coefficients):
                fh.write(f"{int(lag)},{_fmt(coef)},{_fmt(corr.confidence_bound)}\n")
        written.append(path)

    for irf in result.irfs:
        path = os.path.join(plots, f"irf_{_slug(irf.impulse)}_{_slug(irf.response)}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("horizon,response,lower,upper\n")
            for i in range(irf.horizons.size):
                fh.write(
                    f"{int(irf.horizons[i])},{_fmt(irf.responses[i])},"
                    f"{_fmt(irf.lower[i])},{_fmt(irf.upper[i])}\n"
                )
        written.append(path)

    start = result.dataset.start
    for name, (idx0, values) in result.residuals.items():
        path = os.path.join(plots, f"residuals_{_slug(name)}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("month,residual\n")
            for i, v in enumerate(values):
                fh.write(f"{format_month(month_add(start, idx0 + i))},{_fmt(v)}\n")
        written.append(path)

    for name, (idx0, actual, pred) in result.predictions.items():
        path = os.path.join(plots, f"predictions_{_slug(name)}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("month,actual,predicted\n")
            for i in range(len(actual)):
                fh.write(
                    f"{format_month(month_add(start, idx0 + i))},"
                    f"{_fmt(actual[i])},{_fmt(pred[i])}\n"
                )
        written.append(path)

    if result.combo is not None:
        path = os.path.join(plots, "stationary_combination.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("month,value\n")
            for i, v in enumerate(result.combo.values):
                fh.write(f"{format_month(month_add(result.combo.start, i))},{_fmt(v)}\n")
        written.append(path)

    if result.pca_model is not None:
        path = os.path.join(plots, "pca_variance.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("component,eigenvalue,percent_variance,cumulative_variance\n")
            pca = result.pca_model
            for j in range(pca.eigenvalues.size):
                fh.write(
                    f"{j + 1},{_fmt(pca.eigenvalues[j])},"
                    f"{_fmt(pca.explained_pct[j])},{_fmt(pca.cumulative_pct[j])}\n"
                )
        written.append(path)

    if result.diff_reports:
        path = os.path.join(plots, "differencing.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("variable,level_adf_stat,level_adf_pvalue,order\n")
            for name, report in result.diff_reports.items():
                fh.write(
                    f"{name},{_fmt(report.statistic)},{_fmt(report.p_value)},"
                    f"{result.diff_orders[name]}\n"
                )
        written.append(path)

    manifest = {
        "config_hash": result.config.hash(),
        "seed": result.config.seed,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "sources": list(result.dataset.sources),
        "stage_status": [{"stage": s, "status": st} for s, st in result.stage_status],
        "incomplete": result.incomplete,
    }
    path = os.path.join(out_dir, "MANIFEST.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    return written

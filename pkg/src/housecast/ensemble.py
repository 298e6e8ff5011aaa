"""Chronological cross-validation, ridge stacking, and recursive forecasting.

Folds grow forward in time: every validation window strictly follows the
data its models were trained on, and the out-of-fold prediction matrix
records which fold produced each row so the no-look-ahead property can be
audited after the fact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DivisionByZero,
    InsufficientData,
    OptimizerFailed,
    ShapeMismatch,
)
from .mlmodels import RegressorFit, fit_regressor, grid_search
from .series import ForecastPath, Month, TimeSeries


@dataclass(frozen=True)
class CvSlices:
    """Growing-window chronological folds over n observations."""

    n: int
    fold_bounds: tuple[tuple[int, int, int], ...]  # (train_end, val_start, val_end)

    def __iter__(self):
        for train_end, val_start, val_end in self.fold_bounds:
            yield np.arange(train_end), np.arange(val_start, val_end)

    def __len__(self) -> int:
        return len(self.fold_bounds)


def make_cv_slices(n: int, folds: int = 18) -> CvSlices:
    """Build growing-window folds whose validation windows tile the tail.

    The validation width is floor(n / (folds + 4)); the initial training
    window is whatever remains in front of the first validation window and
    must cover at least one window itself.
    """
    if folds < 1:
        raise ValueError("folds must be at least 1")
    width = n // (folds + 4)
    initial = n - folds * width
    if width < 1 or initial < width:
        raise InsufficientData(
            f"cannot carve {folds} folds out of {n} rows (width {width})"
        )
    bounds = []
    for f in range(folds):
        train_end = initial + f * width
        bounds.append((train_end, train_end, train_end + width))
    return CvSlices(n=n, fold_bounds=tuple(bounds))


@dataclass(frozen=True)
class EvalReport:
    """Percentage-error summary of one model on one evaluation window."""

    model_name: str
    mape: float
    percent_bias: float


def evaluate(actual, predicted, name: str = "model") -> EvalReport:
    """Mean absolute percentage error (fraction) and signed percent bias."""
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape:
        raise ShapeMismatch(f"lengths differ: {a.shape} vs {p.shape}")
    zero = np.nonzero(a == 0.0)[0]
    if zero.size:
        raise DivisionByZero(f"actual value is zero at index {int(zero[0])}")
    mape = float(np.mean(np.abs(a - p) / np.abs(a)))
    pbias = float(np.mean((a - p) / a) * 100.0)
    return EvalReport(name, mape, pbias)


@dataclass(frozen=True)
class StackedModel:
    """Component fits plus a ridge meta-learner over their predictions."""

    component_order: tuple[str, ...]
    components: dict[str, RegressorFit]
    component_hyper: dict[str, dict]
    meta: RegressorFit
    meta_lambda: float
    oof_predictions: np.ndarray = field(repr=False)
    oof_actual: np.ndarray = field(repr=False)
    oof_indices: np.ndarray = field(repr=False)
    oof_train_ends: np.ndarray = field(repr=False)  # rows trained on [0, end)

    def component_matrix(self, X: np.ndarray) -> np.ndarray:
        return np.column_stack(
            [self.components[k].predict(X) for k in self.component_order]
        )

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.meta.predict(self.component_matrix(X))


_DEFAULT_META_LAMBDAS = [float(2.0**e) for e in range(-4, 11)]


def _pick_meta_lambda(oof: np.ndarray, target: np.ndarray, lambdas) -> float:
    """Chronological holdout on the out-of-fold matrix."""
    n = oof.shape[0]
    if n < 10:
        return 1.0
    cut = int(np.ceil(0.75 * n))
    best_lam, best_err = None, np.inf
    for lam in lambdas:
        fit = fit_regressor("ridge", oof[:cut], target[:cut], {"lam": lam})
        pred = fit.predict(oof[cut:])
        err = float(np.mean(np.abs(target[cut:] - pred) / np.abs(target[cut:])))
        if err < best_err - 1e-12 or (
            abs(err - best_err) <= 1e-12 and best_lam is not None and lam > best_lam
        ):
            best_lam, best_err = lam, err
    return best_lam if best_lam is not None else 1.0


def stack_fit(
    train_X: np.ndarray,
    train_y: np.ndarray,
    slices: CvSlices,
    component_grids: dict[str, dict],
    seed: int = 0,
    meta_lambdas=None,
) -> StackedModel:
    """Tune components, collect out-of-fold predictions, fit the stacker.

    Each component's hyperparameters come from :func:`grid_search` over
    the same chronological slices.  For the meta-learner's design matrix
    the components are refit per fold on that fold's training window only,
    so no out-of-fold row is predicted by a model that saw it.  Components
    are finally refit on the full training set for test-time prediction.
    """
    X = np.asarray(train_X, dtype=float)
    y = np.asarray(train_y, dtype=float)
    if X.shape[0] != y.size:
        raise ShapeMismatch("train_X rows and train_y length differ")
    order = tuple(component_grids)
    hyper: dict[str, dict] = {}
    for kind, grid in component_grids.items():
        try:
            hyper[kind], _ = grid_search(kind, X, y, grid, slices, seed=seed)
        except OptimizerFailed as exc:
            raise OptimizerFailed(f"component {kind!r} failed: {exc}") from exc

    rows, actual, indices, train_ends = [], [], [], []
    for train_idx, val_idx in slices:
        preds = []
        for kind in order:
            try:
                fit = fit_regressor(kind, X[train_idx], y[train_idx], hyper[kind], seed)
            except OptimizerFailed as exc:
                raise OptimizerFailed(f"component {kind!r} failed: {exc}") from exc
            preds.append(fit.predict(X[val_idx]))
        rows.append(np.column_stack(preds))
        actual.append(y[val_idx])
        indices.append(val_idx)
        train_ends.append(np.full(val_idx.size, train_idx.size))
    oof = np.vstack(rows)
    oof_actual = np.concatenate(actual)
    oof_indices = np.concatenate(indices)
    oof_train_ends = np.concatenate(train_ends)

    lambdas = meta_lambdas if meta_lambdas is not None else _DEFAULT_META_LAMBDAS
    meta_lambda = _pick_meta_lambda(oof, oof_actual, lambdas)
    meta = fit_regressor("ridge", oof, oof_actual, {"lam": meta_lambda})

    components = {
        kind: fit_regressor(kind, X, y, hyper[kind], seed) for kind in order
    }
    return StackedModel(
        component_order=order,
        components=components,
        component_hyper=hyper,
        meta=meta,
        meta_lambda=meta_lambda,
        oof_predictions=oof,
        oof_actual=oof_actual,
        oof_indices=oof_indices,
        oof_train_ends=oof_train_ends,
    )


def persistence_extender(values: np.ndarray) -> float:
    """Carry the last observed value forward one step."""
    return float(values[-1])


def arima_extender(max_p: int = 3, max_q: int = 3, max_d: int = 2):
    """One-step univariate extender: order by AIC once, refit every call.

    The differencing order comes from repeated unit-root tests on the
    first history seen; (p, q) are then fixed and only the coefficients
    are re-estimated as the history grows.
    """
    from .arima import fit_arima, forecast_arima, select_order
    from .diagnostics import select_differencing_order

    state: dict = {}

    def extend(values: np.ndarray) -> float:
        series = TimeSeries("feature", (1900, 1), values)
        if "spec" not in state:
            d, _ = select_differencing_order(series, max_rounds=max_d)
            spec, _ = select_order(series, d=d, p_max=max_p, q_max=max_q)
            state["spec"] = spec
        fit = fit_arima(series, state["spec"])
        return float(forecast_arima(fit, 1).values[0])

    return extend


def recursive_forecast(
    model,
    features: np.ndarray,
    h: int,
    extenders=None,
    start: Month = (1900, 1),
    name: str = "target",
) -> ForecastPath:
    """Multi-step prediction by feeding one-step results back as inputs.

    Every step first extends each feature column one month via its
    extender (a callable mapping the column's history to its next value),
    then predicts the target from the new feature row; both are appended
    to the working history before the next step.  The loop is inherently
    sequential: later steps depend on earlier predictions.
    """
    if h < 1:
        raise ValueError("horizon must be at least 1")
    work = np.asarray(features, dtype=float).copy()
    if work.ndim != 2:
        raise ShapeMismatch("feature history must be two-dimensional")
    p = work.shape[1]
    if extenders is None:
        extenders = [arima_extender() for _ in range(p)]
    if callable(extenders):
        extenders = [extenders] * p
    if len(extenders) != p:
        raise ShapeMismatch(f"need one extender per feature column ({p})")

    target_path = np.empty(h)
    for step in range(1, h + 1):
        new_row = np.empty(p)
        for j, extend in enumerate(extenders):
            try:
                new_row[j] = extend(work[:, j])
            except Exception as exc:
                raise OptimizerFailed(
                    f"feature {j} extension failed at step {step}: {exc}"
                ) from exc
        pred = float(np.asarray(model.predict(new_row[None, :])).ravel()[0])
        target_path[step - 1] = pred
        work = np.vstack([work, new_row])
    return ForecastPath(name, start, target_path)

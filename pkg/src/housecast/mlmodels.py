"""Principal components plus four regressors behind one fit/predict surface.

The regressors are deliberately small and transparent: an averaging
nearest-neighbor predictor, closed-form ridge, a linear support vector
regressor solved by dual coordinate descent, and a one-hidden-layer
network trained by full-batch gradient descent with weight decay.
``grid_search`` tunes any of them by chronological cross-validation on
mean absolute percentage error.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import (
    DegenerateColumn,
    InsufficientData,
    InvalidParameter,
    OptimizerFailed,
    ShapeMismatch,
    SingularDesign,
)
from .series import ScaleParams


# ---------------------------------------------------------------------------
# Principal components


@dataclass(frozen=True)
class PcaModel:
    """Eigendecomposition of the correlation matrix of a predictor table."""

    means: np.ndarray
    stds: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # orthonormal columns, descending eigenvalue
    explained_pct: np.ndarray
    cumulative_pct: np.ndarray

    @property
    def n_features(self) -> int:
        return self.means.size


def fit_pca(table: np.ndarray) -> PcaModel:
    """Standardize columns and eigendecompose their correlation matrix.

    Eigenvalues are sorted descending; eigenvector signs are fixed by
    making each column's largest-magnitude entry positive.
    """
    X = np.asarray(table, dtype=float)
    if X.ndim != 2:
        raise ShapeMismatch("predictor table must be two-dimensional")
    n, p = X.shape
    if n <= p:
        raise InsufficientData(f"need more rows than columns, got {n}x{p}")
    means = X.mean(axis=0)
    stds = X.std(axis=0, ddof=1)
    if np.any(stds <= 0.0):
        bad = int(np.argmin(stds))
        raise DegenerateColumn(f"column {bad} is constant")
    Xs = (X - means) / stds
    corr = Xs.T @ Xs / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(corr)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.maximum(eigvals[order], 0.0)
    eigvecs = eigvecs[:, order]
    for j in range(p):
        lead = np.argmax(np.abs(eigvecs[:, j]))
        if eigvecs[lead, j] < 0:
            eigvecs[:, j] = -eigvecs[:, j]
    explained = eigvals / eigvals.sum() * 100.0
    return PcaModel(
        means=means,
        stds=stds,
        eigenvalues=eigvals,
        eigenvectors=eigvecs,
        explained_pct=explained,
        cumulative_pct=np.cumsum(explained),
    )


def project(model: PcaModel, table: np.ndarray, m: int) -> np.ndarray:
    """Scores of the first m components for each row of ``table``."""
    X = np.asarray(table, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise ShapeMismatch(
            f"table has {X.shape[1]} columns, model expects {model.n_features}"
        )
    if not 1 <= m <= model.n_features:
        raise InvalidParameter(f"m must lie in 1..{model.n_features}")
    Xs = (X - model.means) / model.stds
    return Xs @ model.eigenvectors[:, :m]


# ---------------------------------------------------------------------------
# Regressors


@dataclass(frozen=True)
class RegressorFit:
    """Fitted regressor with enough state to predict deterministically.

    ``coef``/``intercept`` serve the linear kinds; the neighbor predictor
    keeps its training set; the network keeps its packed weights.  When a
    target scale is present predictions are mapped back automatically.
    """

    kind: str
    hyperparams: dict
    coef: np.ndarray | None = None
    intercept: float = 0.0
    train_X: np.ndarray | None = field(default=None, repr=False)
    train_y: np.ndarray | None = field(default=None, repr=False)
    ann_weights: np.ndarray | None = field(default=None, repr=False)
    ann_shape: tuple[int, int] | None = None
    y_scale: ScaleParams | None = None

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if self.kind == "knn":
            raw = knn_predict(
                self.train_X, self.train_y, X, self.hyperparams["k"]
            )
        elif self.kind in ("ridge", "svr"):
            raw = X @ self.coef + self.intercept
        elif self.kind == "ann":
            d, h = self.ann_shape
            raw = _ann_forward(self.ann_weights, X, d, h)
        else:
            raise InvalidParameter(f"unknown regressor kind {self.kind!r}")
        if self.y_scale is not None:
            raw = self.y_scale.inverse(raw)
        return raw


def knn_predict(
    train_X: np.ndarray, train_y: np.ndarray, query_X: np.ndarray, k: int
) -> np.ndarray:
    """Average the targets of the k nearest training rows (Euclidean).

    Exact distance ties are broken toward the earlier training index.
    """
    train_X = np.asarray(train_X, dtype=float)
    train_y = np.asarray(train_y, dtype=float)
    query_X = np.asarray(query_X, dtype=float)
    if train_X.ndim == 1:
        train_X = train_X[:, None]
    if query_X.ndim == 1:
        query_X = query_X[:, None]
    n = train_X.shape[0]
    if not 1 <= k <= n:
        raise InvalidParameter(f"k must lie in 1..{n}, got {k}")
    d2 = ((query_X[:, None, :] - train_X[None, :, :]) ** 2).sum(axis=2)
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return train_y[nearest].mean(axis=1)


def fit_ridge(X: np.ndarray, y: np.ndarray, lam: float) -> RegressorFit:
    """Penalized least squares with an unpenalized intercept.

    Solves (Xc'Xc + lam I) b = Xc'y on centered data, so lam = 0 recovers
    plain least squares when the design has full rank.
    """
    if lam < 0:
        raise InvalidParameter("ridge penalty must be non-negative")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != y.size:
        raise ShapeMismatch("X rows and y length differ")
    if X.shape[0] < 2:
        raise InsufficientData("need at least two rows")
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    gram = Xc.T @ Xc + lam * np.eye(X.shape[1])
    try:
        chol = scipy.linalg.cho_factor(gram)
    except scipy.linalg.LinAlgError as exc:
        raise SingularDesign("X'X is singular and lam is too small") from exc
    beta = scipy.linalg.cho_solve(chol, Xc.T @ (y - y_mean))
    return RegressorFit(
        kind="ridge",
        hyperparams={"lam": float(lam)},
        coef=beta,
        intercept=y_mean - float(x_mean @ beta),
    )


def svr_objective(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, C: float, loss: str, epsilon: float
) -> float:
    """Primal objective at weights ``w`` (last entry is the bias weight)."""
    Xa = np.column_stack([X, np.ones(X.shape[0])])
    slack = np.maximum(np.abs(y - Xa @ w) - epsilon, 0.0)
    penalty = C * slack.sum() if loss == "L1" else 0.5 * C * (slack**2).sum()
    return 0.5 * float(w @ w) + float(penalty)


def fit_svr(
    X: np.ndarray,
    y: np.ndarray,
    C: float,
    loss: str = "L2",
    epsilon: float = 0.1,
    tol: float = 1e-10,
    max_iter: int = 20000,
) -> RegressorFit:
    """Linear support vector regression by dual coordinate descent.

    The tube loss is C * sum(max(|r| - eps, 0)) for L1 and
    (C/2) * sum(max(|r| - eps, 0)^2) for L2; the bias enters as an
    augmented always-one feature, penalized with the rest of the weight
    vector.  One dual variable per sample is swept in seeded random order
    until the largest coordinate move falls below ``tol``.
    """
    if C <= 0:
        raise InvalidParameter("C must be positive")
    if epsilon < 0:
        raise InvalidParameter("epsilon must be non-negative")
    if loss not in ("L1", "L2"):
        raise InvalidParameter(f"loss must be 'L1' or 'L2', got {loss!r}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    Xa = np.column_stack([X, np.ones(n)])
    q_diag = (Xa**2).sum(axis=1)
    inv_c = 1.0 / C if loss == "L2" else 0.0
    upper = C if loss == "L1" else np.inf

    beta = np.zeros(n)
    w = np.zeros(Xa.shape[1])
    rng = np.random.default_rng(0)  # fixed: fits must be reproducible
    scale = max(1.0, float(np.max(np.abs(y))))
    for _ in range(max_iter):
        max_move = 0.0
        for i in rng.permutation(n):
            h = q_diag[i] + inv_c
            if h <= 0.0:
                continue
            lin = float(w @ Xa[i]) - y[i] - q_diag[i] * beta[i]
            pos = -(lin + epsilon) / h
            neg = -(lin - epsilon) / h
            if pos > 0.0:
                new = min(pos, upper)
            elif neg < 0.0:
                new = max(neg, -upper)
            else:
                new = 0.0
            delta = new - beta[i]
            if delta != 0.0:
                w += delta * Xa[i]
                beta[i] = new
                max_move = max(max_move, abs(delta))
        if max_move < tol * scale:
            break
    else:
        raise OptimizerFailed("dual coordinate descent did not converge")
    return RegressorFit(
        kind="svr",
        hyperparams={"C": float(C), "loss": loss, "epsilon": float(epsilon)},
        coef=w[:-1].copy(),
        intercept=float(w[-1]),
    )


# ---------------------------------------------------------------------------
# One-hidden-layer network


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))


def ann_unpack(params: np.ndarray, d: int, h: int):
    w1 = params[: d * h].reshape(d, h)
    b1 = params[d * h : d * h + h]
    w2 = params[d * h + h : d * h + 2 * h]
    b2 = params[-1]
    return w1, b1, w2, b2


def _ann_forward(params: np.ndarray, X: np.ndarray, d: int, h: int) -> np.ndarray:
    w1, b1, w2, b2 = ann_unpack(params, d, h)
    hidden = _sigmoid(X @ w1 + b1)
    return hidden @ w2 + b2


def ann_loss_grad(
    params: np.ndarray, X: np.ndarray, y: np.ndarray, hidden_size: int, decay: float
) -> tuple[float, np.ndarray]:
    """Sum-of-squares loss with decay on every weight, and its gradient."""
    d = X.shape[1]
    h = hidden_size
    w1, b1, w2, b2 = ann_unpack(params, d, h)
    act = _sigmoid(X @ w1 + b1)
    pred = act @ w2 + b2
    err = pred - y
    loss = float(err @ err) + decay * float(params @ params)

    d_out = 2.0 * err
    g_w2 = act.T @ d_out
    g_b2 = float(d_out.sum())
    d_hidden = np.outer(d_out, w2) * act * (1.0 - act)
    g_w1 = X.T @ d_hidden
    g_b1 = d_hidden.sum(axis=0)
    grad = np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]])
    grad += 2.0 * decay * params
    return loss, grad


def fit_ann(
    X: np.ndarray,
    y: np.ndarray,
    hidden_size: int,
    decay: float,
    seed: int = 0,
    max_iter: int = 5000,
) -> RegressorFit:
    """Train the network by quasi-Newton descent on the backprop gradient.

    Inputs are expected on a (0, 1) scale.  Weights start uniform in
    (-0.5, 0.5) from the seed, so training is reproducible.  Plain
    fixed-step gradient descent stalls on the sigmoid plateaus well before
    the iteration cap, so the same loss and analytic gradient are driven
    by L-BFGS instead.
    """
    if not 1 <= hidden_size <= 10:
        raise InvalidParameter("hidden_size must lie in 1..10")
    if decay < 0:
        raise InvalidParameter("decay must be non-negative")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    d = X.shape[1]
    n_params = d * hidden_size + hidden_size + hidden_size + 1
    rng = np.random.default_rng(seed)
    params = rng.uniform(-0.5, 0.5, size=n_params)

    res = scipy.optimize.minimize(
        ann_loss_grad,
        params,
        args=(X, y, hidden_size, decay),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter},
    )
    if not math.isfinite(res.fun):
        raise OptimizerFailed("network training diverged")
    return RegressorFit(
        kind="ann",
        hyperparams={"hidden_size": hidden_size, "decay": float(decay), "seed": seed},
        ann_weights=res.x,
        ann_shape=(d, hidden_size),
    )


# ---------------------------------------------------------------------------
# Uniform fitting and tuning


def fit_regressor(
    kind: str,
    X: np.ndarray,
    y: np.ndarray,
    hyper: dict,
    seed: int = 0,
    scale_target: bool | None = None,
) -> RegressorFit:
    """Fit any of the four kinds from a hyperparameter dict.

    The tube and network regressors train on a (0, 1)-scaled copy of the
    target by default (their regularizers are scale sensitive); the fitted
    model maps predictions back to the original units.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if scale_target is None:
        scale_target = kind in ("svr", "ann")
    y_scale = None
    y_fit = y
    if scale_target:
        lo, hi = float(y.min()), float(y.max())
        if hi <= lo:
            raise DegenerateColumn("target is constant; cannot scale")
        y_scale = ScaleParams(lo, hi)
        y_fit = (y - lo) / (hi - lo)

    if kind == "knn":
        k = int(hyper["k"])
        if not 1 <= k <= X.shape[0]:
            raise InvalidParameter(f"k={k} out of range for {X.shape[0]} rows")
        fit = RegressorFit(
            kind="knn", hyperparams={"k": k}, train_X=X.copy(), train_y=y_fit.copy()
        )
    elif kind == "ridge":
        fit = fit_ridge(X, y_fit, hyper["lam"])
    elif kind == "svr":
        fit = fit_svr(
            X,
            y_fit,
            C=hyper["C"],
            loss=hyper.get("loss", "L2"),
            epsilon=hyper.get("epsilon", 0.1),
        )
    elif kind == "ann":
        fit = fit_ann(
            X,
            y_fit,
            hidden_size=int(hyper["hidden_size"]),
            decay=hyper["decay"],
            seed=int(hyper.get("seed", seed)),
            max_iter=int(hyper.get("max_iter", 5000)),
        )
    else:
        raise InvalidParameter(f"unknown regressor kind {kind!r}")
    if y_scale is not None:
        fit = replace(fit, y_scale=y_scale)
    return fit


def _mape(actual: np.ndarray, predicted: np.ndarray) -> float:
    return float(np.mean(np.abs(actual - predicted) / np.abs(actual)))


def _simplicity_key(kind: str, hyper: dict) -> tuple:
    """Tie-break ordering: prefer the more regularized / smaller model."""
    if kind == "knn":
        return (hyper["k"],)
    if kind == "ridge":
        return (-hyper["lam"],)
    if kind == "svr":
        return (hyper["C"], 0 if hyper.get("loss", "L2") == "L2" else 1)
    if kind == "ann":
        return (hyper["hidden_size"], -hyper["decay"])
    return ()


def grid_search(
    kind: str,
    X: np.ndarray,
    y: np.ndarray,
    grid: dict[str, list],
    cv,
    seed: int = 0,
) -> tuple[dict, RegressorFit]:
    """Tune one regressor by mean cross-validated percentage error.

    ``cv`` iterates (train_indices, validation_indices) pairs in
    chronological order.  Ties within 1e-12 go to the simpler model.  The
    winner is refit on the full data.
    """
    if not grid:
        raise InvalidParameter("hyperparameter grid is empty")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    names = sorted(grid)
    combos = [dict(zip(names, values)) for values in itertools.product(*(grid[n] for n in names))]

    folds = list(cv)
    best = None
    for combo in combos:
        scores = []
        try:
            for train_idx, val_idx in folds:
                fit = fit_regressor(kind, X[train_idx], y[train_idx], combo, seed)
                scores.append(_mape(y[val_idx], fit.predict(X[val_idx])))
        except (OptimizerFailed, InvalidParameter, DegenerateColumn):
            continue
        key = (float(np.mean(scores)), _simplicity_key(kind, combo))
        if best is None or _grid_better(key, best[0]):
            best = (key, combo)
    if best is None:
        raise OptimizerFailed(f"every {kind} grid candidate failed")
    combo = best[1]
    return combo, fit_regressor(kind, X, y, combo, seed)


def _grid_better(key, incumbent, tol: float = 1e-12) -> bool:
    if key[0] < incumbent[0] - tol:
        return True
    if key[0] > incumbent[0] + tol:
        return False
    return key[1] < incumbent[1]

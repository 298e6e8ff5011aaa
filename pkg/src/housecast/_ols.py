"""Minimal OLS helper shared by the regression-based tests and models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularDesign


@dataclass(frozen=True)
class OlsFit:
    beta: np.ndarray
    residuals: np.ndarray
    stderr: np.ndarray
    sigma2: float
    rss: float
    df_resid: int
    xtx_inv: np.ndarray

    @property
    def tvalues(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.beta / self.stderr


def ols_fit(y: np.ndarray, X: np.ndarray) -> OlsFit:
    """Least squares of y on X; raises SingularDesign on rank deficiency."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if n != y.shape[0]:
        raise ValueError("y and X row counts differ")
    gram = X.T @ X
    try:
        chol = scipy.linalg.cho_factor(gram)
    except scipy.linalg.LinAlgError as exc:
        raise SingularDesign(f"design matrix of shape {X.shape} is singular") from exc
    beta = scipy.linalg.cho_solve(chol, X.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    df = n - k
    sigma2 = rss / df if df > 0 else np.nan
    xtx_inv = scipy.linalg.cho_solve(chol, np.eye(k))
    stderr = np.sqrt(np.maximum(sigma2 * np.diag(xtx_inv), 0.0))
    return OlsFit(beta, resid, stderr, sigma2, rss, df, xtx_inv)

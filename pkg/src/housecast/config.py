"""Pipeline configuration: defaults, INI parsing, and a stable hash.

The file format is plain INI (section headers, ``key = value`` lines,
``#`` comments).  Lists are comma separated; grids live in ``[grid.*]``
sections.  Unset keys fall back to the defaults below, which reproduce
the full workflow on a housing-starts style dataset.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _strs(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _default_ridge_grid() -> list[float]:
    return [float(2.0**e) for e in range(-4, 11)]


@dataclass
class PipelineConfig:
    """Everything run_pipeline needs besides the dataset itself."""

    target: str = "hous_st"
    train_fraction: float = 0.8
    cv_folds: int = 18
    horizon: int = 12
    seed: int = 0
    output_dir: str = "out"

    # stage toggles
    run_arima: bool = True
    run_arimax: bool = True
    run_garch: bool = True
    run_cointegration: bool = True
    run_vecm: bool = True
    run_varx: bool = True
    run_ml: bool = True
    run_ensemble: bool = True

    # differencing
    diff_auto: bool = True
    diff_max_rounds: int = 3
    diff_overrides: dict = field(default_factory=dict)

    # univariate models
    arima_d: int | None = None  # None: use the differencing stage's order
    arima_p_max: int = 4
    arima_q_max: int = 4
    arimax_order: tuple[int, int, int] = (2, 1, 3)
    arimax_exog: list = field(default_factory=list)
    garch_mean_order: tuple[int, int] = (2, 2)

    # multivariate models
    eg_x: str = ""
    johansen_variables: list = field(default_factory=list)
    johansen_lags: int = 2
    vecm_rank: int = 2
    vecm_lags: int = 3
    varx_variables: list = field(default_factory=list)
    varx_p: int | str = 3
    varx_deterministic: str = "const+trend"
    irf_horizon: int = 6
    irf_bootstrap: int = 500

    # machine learning
    ml_predictors: list = field(default_factory=list)
    pca_components: int = 6
    pca_fit_on: str = "full"  # or "train"
    ann_max_iter: int = 5000
    grid_knn: dict = field(default_factory=lambda: {"k": list(range(1, 11))})
    grid_ridge: dict = field(default_factory=lambda: {"lam": _default_ridge_grid()})
    grid_svr: dict = field(
        default_factory=lambda: {"C": [4.0, 8.0, 16.0, 32.0], "loss": ["L1", "L2"]}
    )
    grid_ann: dict = field(
        default_factory=lambda: {
            "hidden_size": list(range(1, 11)),
            "decay": [0.1, 0.5, 1.0, 2.0, 4.0],
        }
    )

    def validate(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.cv_folds < 1:
            raise ValueError("cv_folds must be at least 1")
        if self.pca_fit_on not in ("full", "train"):
            raise ValueError("pca_fit_on must be 'full' or 'train'")

    def hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()


def load_config(path) -> PipelineConfig:
    """Parse an INI file into a PipelineConfig; missing keys keep defaults."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)
    cfg = PipelineConfig()

    if parser.has_section("pipeline"):
        sec = parser["pipeline"]
        cfg.target = sec.get("target", cfg.target)
        cfg.train_fraction = sec.getfloat("train_fraction", cfg.train_fraction)
        cfg.cv_folds = sec.getint("cv_folds", cfg.cv_folds)
        cfg.horizon = sec.getint("horizon", cfg.horizon)
        cfg.seed = sec.getint("seed", cfg.seed)
        cfg.output_dir = sec.get("output_dir", cfg.output_dir)

    if parser.has_section("models"):
        sec = parser["models"]
        cfg.run_arima = sec.getboolean("arima", cfg.run_arima)
        cfg.run_arimax = sec.getboolean("arimax", cfg.run_arimax)
        cfg.run_garch = sec.getboolean("garch", cfg.run_garch)
        cfg.run_cointegration = sec.getboolean("cointegration", cfg.run_cointegration)
        cfg.run_vecm = sec.getboolean("vecm", cfg.run_vecm)
        cfg.run_varx = sec.getboolean("varx", cfg.run_varx)
        cfg.run_ml = sec.getboolean("ml", cfg.run_ml)
        cfg.run_ensemble = sec.getboolean("ensemble", cfg.run_ensemble)

    if parser.has_section("differencing"):
        sec = parser["differencing"]
        cfg.diff_auto = sec.getboolean("auto", cfg.diff_auto)
        cfg.diff_max_rounds = sec.getint("max_rounds", cfg.diff_max_rounds)
        for key, value in sec.items():
            if key not in ("auto", "max_rounds"):
                cfg.diff_overrides[key] = int(value)

    if parser.has_section("arima"):
        sec = parser["arima"]
        if sec.get("d", "auto").strip() != "auto":
            cfg.arima_d = sec.getint("d")
        cfg.arima_p_max = sec.getint("p_max", cfg.arima_p_max)
        cfg.arima_q_max = sec.getint("q_max", cfg.arima_q_max)

    if parser.has_section("arimax"):
        sec = parser["arimax"]
        if "order" in sec:
            p, d, q = _ints(sec["order"])
            cfg.arimax_order = (p, d, q)
        if "exog" in sec:
            cfg.arimax_exog = _strs(sec["exog"])

    if parser.has_section("garch"):
        sec = parser["garch"]
        if "mean_order" in sec:
            m, n = _ints(sec["mean_order"])
            cfg.garch_mean_order = (m, n)

    if parser.has_section("engle_granger"):
        cfg.eg_x = parser["engle_granger"].get("x", cfg.eg_x)

    if parser.has_section("johansen"):
        sec = parser["johansen"]
        if "variables" in sec:
            cfg.johansen_variables = _strs(sec["variables"])
        cfg.johansen_lags = sec.getint("lags", cfg.johansen_lags)

    if parser.has_section("vecm"):
        sec = parser["vecm"]
        cfg.vecm_rank = sec.getint("rank", cfg.vecm_rank)
        cfg.vecm_lags = sec.getint("lags", cfg.vecm_lags)

    if parser.has_section("varx"):
        sec = parser["varx"]
        if "variables" in sec:
            cfg.varx_variables = _strs(sec["variables"])
        if sec.get("p", "").strip() == "auto":
            cfg.varx_p = "auto"
        elif "p" in sec:
            cfg.varx_p = sec.getint("p")
        cfg.varx_deterministic = sec.get("deterministic", cfg.varx_deterministic)
        cfg.irf_horizon = sec.getint("irf_horizon", cfg.irf_horizon)
        cfg.irf_bootstrap = sec.getint("irf_bootstrap", cfg.irf_bootstrap)

    if parser.has_section("ml"):
        sec = parser["ml"]
        if "predictors" in sec:
            cfg.ml_predictors = _strs(sec["predictors"])
        cfg.pca_components = sec.getint("components", cfg.pca_components)
        cfg.pca_fit_on = sec.get("pca_fit_on", cfg.pca_fit_on)
        cfg.ann_max_iter = sec.getint("ann_max_iter", cfg.ann_max_iter)

    if parser.has_section("grid.knn") and "k" in parser["grid.knn"]:
        cfg.grid_knn = {"k": _ints(parser["grid.knn"]["k"])}
    if parser.has_section("grid.ridge") and "lam" in parser["grid.ridge"]:
        cfg.grid_ridge = {"lam": _floats(parser["grid.ridge"]["lam"])}
    if parser.has_section("grid.svr"):
        sec = parser["grid.svr"]
        grid = dict(cfg.grid_svr)
        if "c" in sec:
            grid["C"] = _floats(sec["c"])
        if "loss" in sec:
            grid["loss"] = _strs(sec["loss"])
        if "epsilon" in sec:
            grid["epsilon"] = _floats(sec["epsilon"])
        cfg.grid_svr = grid
    if parser.has_section("grid.ann"):
        sec = parser["grid.ann"]
        grid = dict(cfg.grid_ann)
        if "hidden_size" in sec:
            grid["hidden_size"] = _ints(sec["hidden_size"])
        if "decay" in sec:
            grid["decay"] = _floats(sec["decay"])
        cfg.grid_ann = grid

    cfg.validate()
    return cfg

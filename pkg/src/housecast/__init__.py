"""housecast: econometric and ML toolkit for monthly macroeconomic forecasting."""

from .arima import ArimaFit, ArimaSpec, fit_arima, forecast_arima, select_order
from .cointegration import (
    EcmFit,
    EngleGrangerResult,
    JohansenResult,
    VecmFit,
    engle_granger,
    fit_vecm,
    johansen_trace,
    stationary_combination,
)
from .config import PipelineConfig, load_config
from .data import Dataset, fetch_fred, ingest_csv, load_dataset_csv
from .diagnostics import (
    TestReport,
    adf_test,
    arch_lm,
    jarque_bera,
    ljung_box,
    select_differencing_order,
)
from .ensemble import (
    CvSlices,
    EvalReport,
    StackedModel,
    arima_extender,
    evaluate,
    make_cv_slices,
    persistence_extender,
    recursive_forecast,
    stack_fit,
)
from .garch import (
    GarchFit,
    diagnose_fit,
    fit_arma_garch,
    forecast_garch,
    variance_step,
)
from .mlmodels import (
    PcaModel,
    RegressorFit,
    fit_ann,
    fit_pca,
    fit_regressor,
    fit_ridge,
    fit_svr,
    grid_search,
    knn_predict,
    project,
)
from .pipeline import PipelineResult, emit_report, run_pipeline
from .series import (
    CorrelogramResult,
    DiffSeries,
    ForecastPath,
    ScaleParams,
    TimeSeries,
    acf_pacf,
    chrono_split,
    difference,
    integrate,
    minmax_scale,
)
from .varx import (
    ImpulseResponse,
    VarxFit,
    fit_varx,
    forecast_varx,
    granger_causality,
    granger_causality_pairwise,
    impulse_response,
)

__version__ = "0.1.0"

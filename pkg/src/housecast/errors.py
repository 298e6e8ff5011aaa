"""Exception hierarchy shared by all housecast modules."""


class HousecastError(Exception):
    """Base class for all errors raised by this package."""


class InsufficientData(HousecastError):
    """Not enough observations to perform the requested operation."""


class MissingHead(HousecastError):
    """Differenced series lacks the leading values needed to integrate."""


class DegenerateSeries(HousecastError):
    """Series is constant or otherwise carries no usable variation."""


class DegenerateColumn(HousecastError):
    """A column of a predictor table is constant."""


class SingularDesign(HousecastError):
    """Regression design matrix is singular or numerically rank deficient."""


class InvalidDof(HousecastError):
    """Requested test has non-positive degrees of freedom."""


class InvalidParameter(HousecastError):
    """Parameter outside its admissible range."""


class InvalidRank(HousecastError):
    """Cointegration rank outside the admissible 1..k-1 range."""


class NoCointegration(HousecastError):
    """Operation requires at least one cointegrating relation."""


class OptimizerFailed(HousecastError):
    """Numerical optimization did not converge after all retries."""


class ShapeMismatch(HousecastError):
    """Array dimensions do not line up with the fitted model or contract."""


class DegenerateCovariance(HousecastError):
    """Covariance matrix is not positive definite."""


class DivisionByZero(HousecastError):
    """An actual value of zero makes a percentage metric undefined."""


class IngestError(HousecastError):
    """CSV input is malformed, has date gaps, or joins to too few rows."""


class UnknownSeries(HousecastError):
    """Remote data source does not recognise the requested series id."""


class NetworkDisabled(HousecastError):
    """Fetch was requested while running in offline mode."""


class StageFailed(HousecastError):
    """A pipeline stage aborted; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause

"""Exception hierarchy shared across the pipeline.

Everything raised on bad data or bad model state derives from
:class:`TradeForecastError`; the CLI maps these to exit code 1 and keeps
exit code 2 for usage errors.
"""


class TradeForecastError(Exception):
    """Base class for data and model errors."""


# --- ingest ---------------------------------------------------------------

class MissingHeader(TradeForecastError):
    """A required CSV column is absent from the header row."""


class TooManyMalformedRows(TradeForecastError):
    """More than half of the data rows were rejected; the parse is unusable."""


class MixedSlice(TradeForecastError):
    """Records disagree on direction or measure where one slice is required."""


class EmptyResult(TradeForecastError):
    """A filter matched no records (usually a misspelled slice name)."""


# --- preprocess -----------------------------------------------------------

class ConstantSeries(TradeForecastError):
    """All values equal: a min-max scaler cannot be fitted."""


class TooShort(TradeForecastError):
    """Series too short for the requested split or window size."""


# --- lstm_core ------------------------------------------------------------

class BadChain(TradeForecastError):
    """Layer specs do not chain (units of layer k must feed layer k+1)."""


class DimensionMismatch(TradeForecastError):
    """An input does not match the dimensions a layer expects."""


class StaleCache(TradeForecastError):
    """A forward cache does not belong to the model it was handed back to."""


# --- train ----------------------------------------------------------------

class LengthMismatch(TradeForecastError):
    """Predictions and targets have different lengths."""


class ShapeMismatch(TradeForecastError):
    """Parameter, gradient, and optimizer-state shapes disagree."""


class EmptyDataset(TradeForecastError):
    """Training or evaluation requested on a dataset with no samples."""


class NonFiniteLoss(TradeForecastError):
    """Loss became NaN or infinite during training."""


# --- forecast -------------------------------------------------------------

class BadHorizon(TradeForecastError):
    """Forecast horizon must be at least one step."""


class LookbackMismatch(TradeForecastError):
    """Dataset or seed window was built with a different lookback than the model."""


class NonFiniteForecast(TradeForecastError):
    """A forecast step produced a NaN or infinite value."""


# --- report ---------------------------------------------------------------

class EmptySpec(TradeForecastError):
    """A plot was requested with no series or an empty series."""

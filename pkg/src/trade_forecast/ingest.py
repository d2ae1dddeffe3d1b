"""Trade CSV ingestion: parse, filter, and build a gap-free daily series.

The input is a comma-separated export of daily trade records (RFC 4180
quoting, UTF-8). The header must name at least Direction, Year, Date,
Weekday, Country, Commodity, Transport_Mode, Measure, Value, Cumulative;
header matching is case-insensitive and order-independent, and extra
columns are ignored. Dates are accepted as ISO "YYYY-MM-DD" or day-first
"D/MM/YYYY"; ambiguous forms such as "03/04/2015" are read day-first.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import EmptyResult, MissingHeader, MixedSlice, TooManyMalformedRows

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = (
    "direction",
    "year",
    "date",
    "weekday",
    "country",
    "commodity",
    "transport_mode",
    "measure",
    "value",
    "cumulative",
)

CURRENCY_MEASURE = "$"


class Direction(str, enum.Enum):
    EXPORTS = "Exports"
    IMPORTS = "Imports"
    REIMPORTS = "Reimports"
    REEXPORTS = "Reexports"


class SeriesTarget(str, enum.Enum):
    DAILY_VALUE = "daily_value"
    CUMULATIVE = "cumulative"


@dataclass(frozen=True)
class TradeRecord:
    """One parsed data row."""

    direction: Direction
    year: int
    date: dt.date
    weekday: str
    country: str
    commodity: str
    transport_mode: str
    measure: str
    value: float
    cumulative: float


@dataclass(frozen=True)
class FilterCriteria:
    """Exact-match slice selection; text fields are compared after trimming."""

    direction: Direction
    country: str = "All"
    commodity: str = "All"
    transport_mode: str = "All"
    measure: str = CURRENCY_MEASURE

    def __post_init__(self):
        for name in ("country", "commodity", "transport_mode", "measure"):
            if not str(getattr(self, name)).strip():
                raise ValueError(f"criteria field {name!r} must be non-empty")


@dataclass(frozen=True)
class MalformedRow:
    """A rejected data row: 1-based line number plus the reason."""

    line: int
    reason: str


@dataclass
class ParseResult:
    records: list[TradeRecord]
    malformed: list[MalformedRow] = field(default_factory=list)

    @property
    def date_span(self) -> tuple[dt.date, dt.date] | None:
        """Observed (min, max) date over accepted records."""
        if not self.records:
            return None
        dates = [r.date for r in self.records]
        return min(dates), max(dates)


@dataclass(frozen=True)
class DailySeries:
    """Calendar-contiguous values: ``values[k]`` belongs to ``start_date + k``."""

    start_date: dt.date
    values: np.ndarray
    target: SeriesTarget

    def __len__(self) -> int:
        return len(self.values)

    def dates(self) -> list[dt.date]:
        one = dt.timedelta(days=1)
        return [self.start_date + k * one for k in range(len(self.values))]

    @property
    def end_date(self) -> dt.date:
        return self.start_date + dt.timedelta(days=len(self.values) - 1)


def _parse_date(text: str) -> dt.date:
    text = text.strip()
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        pass
    parts = text.split("/")
    if len(parts) == 3:
        day, month, year = (int(p) for p in parts)
        return dt.date(year, month, day)  # raises on impossible dates
    raise ValueError(f"unrecognized date {text!r}")


def _parse_number(text: str) -> float:
    cleaned = text.strip().replace(",", "")
    if not cleaned:
        raise ValueError("empty numeric field")
    value = float(cleaned)
    if not np.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


_DIRECTIONS = {d.value.lower(): d for d in Direction}


def parse_csv(stream: Iterable[str]) -> ParseResult:
    """Parse a trade CSV into records, collecting malformed rows as it goes.

    A row with an unparseable date, number, or direction is recorded in
    ``result.malformed`` with its line number and skipped. Raises
    MissingHeader when a required column is absent and
    TooManyMalformedRows when more than half of the data rows fail.
    """
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise MissingHeader("input is empty; expected a header row") from None

    positions: dict[str, int] = {}
    for idx, name in enumerate(header):
        positions.setdefault(name.strip().lower(), idx)
    missing = [c for c in REQUIRED_COLUMNS if c not in positions]
    if missing:
        raise MissingHeader(f"missing required column(s): {', '.join(missing)}")

    records: list[TradeRecord] = []
    malformed: list[MalformedRow] = []
    total = 0
    for row in reader:
        total += 1
        line = reader.line_num
        if not any(cell.strip() for cell in row):
            malformed.append(MalformedRow(line, "blank row"))
            continue
        try:
            records.append(_row_to_record(row, positions))
        except (ValueError, IndexError) as exc:
            malformed.append(MalformedRow(line, str(exc)))

    if total and len(malformed) * 2 > total:
        raise TooManyMalformedRows(
            f"{len(malformed)} of {total} rows rejected; first: "
            f"line {malformed[0].line}: {malformed[0].reason}"
        )
    return ParseResult(records, malformed)


def _row_to_record(row: list[str], positions: Mapping[str, int]) -> TradeRecord:
    def cell(name: str) -> str:
        idx = positions[name]
        if idx >= len(row):
            raise ValueError(f"row has no {name!r} field")
        return row[idx]

    raw_direction = cell("direction").strip()
    direction = _DIRECTIONS.get(raw_direction.lower())
    if direction is None:
        raise ValueError(f"unknown direction {raw_direction!r}")

    measure = cell("measure").strip()
    value = _parse_number(cell("value"))
    cumulative = _parse_number(cell("cumulative"))
    if measure == CURRENCY_MEASURE and (value < 0 or cumulative < 0):
        raise ValueError("negative currency value")

    return TradeRecord(
        direction=direction,
        year=int(cell("year").strip()),
        date=_parse_date(cell("date")),
        weekday=cell("weekday").strip(),
        country=cell("country").strip(),
        commodity=cell("commodity").strip(),
        transport_mode=cell("transport_mode").strip(),
        measure=measure,
        value=value,
        cumulative=cumulative,
    )


def filter_records(
    records: Iterable[TradeRecord], criteria: FilterCriteria
) -> list[TradeRecord]:
    """Keep records matching every criteria field, preserving order."""
    wanted = (
        criteria.country.strip(),
        criteria.commodity.strip(),
        criteria.transport_mode.strip(),
        criteria.measure.strip(),
    )
    matched = [
        r
        for r in records
        if r.direction == criteria.direction
        and (r.country, r.commodity, r.transport_mode, r.measure) == wanted
    ]
    if not matched:
        raise EmptyResult(
            f"no records match direction={criteria.direction.value} "
            f"country={criteria.country!r} commodity={criteria.commodity!r} "
            f"transport_mode={criteria.transport_mode!r} measure={criteria.measure!r}"
        )
    return matched


def build_daily_series(
    records: Iterable[TradeRecord], target: SeriesTarget
) -> dict[dt.date, float]:
    """Collapse records onto dates: sum daily values, last-wins cumulative."""
    records = list(records)
    if records:
        directions = {r.direction for r in records}
        measures = {r.measure for r in records}
        if len(directions) > 1 or len(measures) > 1:
            raise MixedSlice(
                f"records span directions {sorted(d.value for d in directions)} "
                f"and measures {sorted(measures)}; filter to one slice first"
            )
    points: dict[dt.date, float] = {}
    for r in records:
        if target is SeriesTarget.DAILY_VALUE:
            points[r.date] = points.get(r.date, 0.0) + r.value
        else:
            points[r.date] = r.cumulative
    return points


def calendarize(points: Mapping[dt.date, float], target: SeriesTarget) -> DailySeries:
    """Fill the date range min..max: zeros for daily values, forward fill for
    cumulative totals.
    """
    if not points:
        raise ValueError("cannot calendarize an empty mapping")
    start, end = min(points), max(points)
    one = dt.timedelta(days=1)
    values = []
    day = start
    while day <= end:
        if day in points:
            values.append(points[day])
        elif target is SeriesTarget.CUMULATIVE:
            values.append(values[-1])
        else:
            values.append(0.0)
        day += one
    series = DailySeries(start, np.asarray(values, dtype=np.float64), target)
    if target is SeriesTarget.CUMULATIVE:
        _warn_on_yearly_decrease(series)
    return series


def _warn_on_yearly_decrease(series: DailySeries) -> None:
    # Cumulative totals reset each January, so only intra-year decreases are
    # suspicious; they indicate revised or shuffled source rows.
    previous_date = series.start_date
    for k in range(1, len(series.values)):
        date = series.start_date + dt.timedelta(days=k)
        if date.year == previous_date.year and series.values[k] < series.values[k - 1]:
            log.warning(
                "cumulative series decreases within %d at %s (%g -> %g)",
                date.year,
                date,
                series.values[k - 1],
                series.values[k],
            )
            return
        previous_date = date


def read_series_csv(stream: Iterable[str]) -> tuple[dt.date, np.ndarray]:
    """Read a two-column "date,value" CSV back into (start_date, values).

    The dates must be ISO formatted, contiguous, and ascending, i.e. the
    format the ingest step writes.
    """
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("series CSV is empty") from None
    if [h.strip().lower() for h in header[:2]] != ["date", "value"]:
        raise ValueError(f"expected 'date,value' header, got {header!r}")

    dates: list[dt.date] = []
    values: list[float] = []
    for row in reader:
        if not row or not any(cell.strip() for cell in row):
            continue
        dates.append(dt.date.fromisoformat(row[0].strip()))
        values.append(float(row[1]))
    if not dates:
        raise ValueError("series CSV has no data rows")
    for k in range(1, len(dates)):
        if dates[k] - dates[k - 1] != dt.timedelta(days=1):
            raise ValueError(f"series dates are not contiguous at {dates[k]}")
    return dates[0], np.asarray(values, dtype=np.float64)

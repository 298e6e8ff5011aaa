"""Dataset container plus CSV ingestion and an HTTP fetch convenience.

Input files follow the per-series download format of the St. Louis Fed
data service: a ``DATE,<NAME>`` header and one ISO-dated observation per
month, with ``.`` marking a missing value.  Ingestion inner-joins series
on their dates and insists on a contiguous monthly calendar.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import IngestError, NetworkDisabled, ShapeMismatch, UnknownSeries
from .series import Month, TimeSeries, format_month, month_add, month_diff, parse_month

FRED_CSV_URL = "https://fred.stlouisfed.org/graph/fredgraph.csv"


@dataclass(frozen=True)
class Dataset:
    """Aligned monthly table of named variables over a common date span."""

    names: tuple[str, ...]
    start: Month
    table: np.ndarray
    sources: tuple[dict, ...] = ()

    def __post_init__(self):
        arr = np.array(self.table, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != len(self.names):
            raise ShapeMismatch("table shape does not match the variable names")
        if not np.all(np.isfinite(arr)):
            raise IngestError("dataset contains non-finite cells")
        arr.setflags(write=False)
        object.__setattr__(self, "table", arr)
        object.__setattr__(self, "names", tuple(self.names))

    def __len__(self) -> int:
        return self.table.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.names.index(name)
        except ValueError as exc:
            raise KeyError(f"no variable named {name!r}") from exc
        return self.table[:, j]

    def series(self, name: str) -> TimeSeries:
        return TimeSeries(name, self.start, self.column(name))

    def subtable(self, names) -> np.ndarray:
        return np.column_stack([self.column(n) for n in names])

    def months(self) -> list[str]:
        return [format_month(month_add(self.start, i)) for i in range(len(self))]


def _parse_series_csv(text: str, origin: str) -> tuple[str, list[Month], list[float]]:
    """Parse one DATE,VALUE file; missing-value rows are a hard error."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError(f"{origin}: empty file") from None
    if len(header) != 2 or header[0].strip().upper() not in ("DATE", "OBSERVATION_DATE"):
        raise IngestError(f"{origin}: expected a DATE,<NAME> header, got {header!r}")
    name = header[1].strip()
    months: list[Month] = []
    values: list[float] = []
    missing: list[str] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise IngestError(f"{origin}:{lineno}: expected two fields, got {len(row)}")
        try:
            month = parse_month(row[0])
        except ValueError as exc:
            raise IngestError(f"{origin}:{lineno}: bad date {row[0]!r}") from exc
        cell = row[1].strip()
        if cell == "." or cell == "":
            missing.append(format_month(month))
            continue
        try:
            values.append(float(cell))
        except ValueError as exc:
            raise IngestError(f"{origin}:{lineno}: bad value {cell!r}") from exc
        months.append(month)
    if missing:
        raise IngestError(f"{origin}: missing values at {', '.join(missing)}")
    if not months:
        raise IngestError(f"{origin}: no observations")
    for i in range(1, len(months)):
        gap = month_diff(months[i], months[i - 1])
        if gap != 1:
            raise IngestError(
                f"{origin}: dates not contiguous monthly near "
                f"{format_month(months[i - 1])} -> {format_month(months[i])}"
            )
    return name, months, values


def ingest_csv(paths, min_rows: int = 24) -> Dataset:
    """Read per-series CSV files and inner-join them on their months."""
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    if not paths:
        raise IngestError("no input files")
    parsed = []
    sources = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        name, months, values = _parse_series_csv(text, str(path))
        parsed.append((name, months, values))
        sources.append({"name": name, "path": str(path)})
    names = [p[0] for p in parsed]
    if len(set(names)) != len(names):
        raise IngestError(f"duplicate variable names across files: {names}")

    start = max(p[1][0] for p in parsed)
    end = min(p[1][-1] for p in parsed)
    n = month_diff(end, start) + 1
    if n < min_rows:
        raise IngestError(
            f"join covers only {max(n, 0)} months "
            f"({format_month(start)}..{format_month(end)}); need {min_rows}"
        )
    cols = []
    for name, months, values in parsed:
        lo = month_diff(start, months[0])
        cols.append(np.asarray(values[lo : lo + n]))
    return Dataset(
        names=tuple(names), start=start, table=np.column_stack(cols),
        sources=tuple(sources),
    )


def load_dataset_csv(path) -> Dataset:
    """Read a combined wide CSV: DATE column followed by one column per variable."""
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip().upper() != "DATE" or len(header) < 2:
            raise IngestError(f"{path}: expected DATE,<name>... header")
        names = [h.strip() for h in header[1:]]
        months: list[Month] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestError(f"{path}:{lineno}: ragged row")
            months.append(parse_month(row[0]))
            try:
                rows.append([float(c) for c in row[1:]])
            except ValueError as exc:
                raise IngestError(f"{path}:{lineno}: bad value") from exc
    if not rows:
        raise IngestError(f"{path}: no observations")
    for i in range(1, len(months)):
        if month_diff(months[i], months[i - 1]) != 1:
            raise IngestError(f"{path}: dates not contiguous monthly")
    return Dataset(
        names=tuple(names),
        start=months[0],
        table=np.array(rows),
        sources=({"path": str(path)},),
    )


def save_dataset_csv(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["DATE"] + list(dataset.names))
        for i, label in enumerate(dataset.months()):
            writer.writerow(
                [f"{label}-01"] + [format(v, ".17g") for v in dataset.table[i]]
            )


def fetch_fred(
    series_ids,
    start: str | None = None,
    end: str | None = None,
    out_dir=None,
    offline: bool = False,
    timeout: float = 30.0,
) -> Dataset:
    """Download per-series CSVs from the public endpoint and ingest them.

    Raw responses are written to ``out_dir`` (when given) so a run can be
    reproduced offline later.  With ``offline=True`` no request is made.
    """
    if offline:
        raise NetworkDisabled(
            "offline mode: supply downloaded CSV files to ingest_csv instead"
        )
    import requests

    texts = []
    sources = []
    for sid in series_ids:
        params = {"id": sid}
        if start:
            params["cosd"] = start
        if end:
            params["coed"] = end
        resp = requests.get(FRED_CSV_URL, params=params, timeout=timeout)
        if resp.status_code != 200 or not resp.text.lstrip().upper().startswith(
            ("DATE", "OBSERVATION_DATE")
        ):
            raise UnknownSeries(f"series {sid!r} not available (HTTP {resp.status_code})")
        texts.append((sid, resp.text))
        sources.append({"name": sid, "url": resp.url})
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, f"{sid}.csv"), "w", encoding="utf-8") as fh:
                fh.write(resp.text)

    parsed = [(_parse_series_csv(text, sid)) for sid, text in texts]
    names = [p[0] for p in parsed]
    start_m = max(p[1][0] for p in parsed)
    end_m = min(p[1][-1] for p in parsed)
    n = month_diff(end_m, start_m) + 1
    if n < 24:
        raise IngestError("joined span shorter than 24 months")
    cols = []
    for name, months, values in parsed:
        lo = month_diff(start_m, months[0])
        cols.append(np.asarray(values[lo : lo + n]))
    return Dataset(
        names=tuple(names), start=start_m, table=np.column_stack(cols),
        sources=tuple(sources),
    )

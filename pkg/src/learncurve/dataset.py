"""Learning rates collected from the literature, and box-plot statistics.

Rates are fractions in memory (0.18) and percent in the CSV files ("18").
The packaged tables live in ``learncurve/data``; set ``LEARNCURVE_DATA_DIR``
to read them from elsewhere.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Sequence

COLUMNS = (
    "source",
    "technology",
    "cost_metric",
    "experience_metric",
    "region",
    "end_year",
    "lbd_percent",
    "lbr_percent",
)
OPTIONAL_COLUMNS = ("note",)

APPENDIX_TABLES = ("c1", "c2", "c3", "c4", "c5", "c6")
# rates quoted in the body text rather than in a table
TEXT_TABLE = "text"
ALL_TABLES = APPENDIX_TABLES + (TEXT_TABLE,)

# technology tags are "<family>_<variant>"; multi-word families listed first
FAMILIES = ("fuel_cell", "pv", "wind", "biofuel", "electrolyser", "smr", "storage")

WHISKER = 1.5


class DatasetError(ValueError):
    pass


class ValidationError(DatasetError):
    pass


@dataclass(frozen=True)
class RateRecord:
    source: str
    technology: str
    cost_metric: str = ""
    experience_metric: str = ""
    region: str = ""
    end_year: int | None = None
    lbd: float = 0.0
    lbr: float | None = None
    note: str = ""
    table: str = ""

    @property
    def family(self) -> str:
        return technology_family(self.technology)


def technology_family(tag: str) -> str:
    for fam in FAMILIES:
        if tag == fam or tag.startswith(fam + "_"):
            return fam
    return tag


def _parse_rate(text: str, where: str, column: str) -> float | None:
    text = text.strip().rstrip("%").strip()
    if text in ("", "—", "-"):
        return None
    try:
        value = float(text.replace("−", "-")) / 100.0
    except ValueError:
        raise DatasetError(f"{where}: cannot parse {column} {text!r}") from None
    if not -1.0 < value < 1.0:
        raise ValidationError(f"{where}: {column} {text}% outside (-100%, 100%)")
    return value


def load_records(path, table: str = "") -> list[RateRecord]:
    """Parse one rate table.

    Raises :class:`DatasetError` naming the offending line on malformed input.
    """
    path = Path(path)
    records = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DatasetError(f"{path}: empty file, expected a header line")
        header = [h.strip() for h in header]
        if tuple(header) not in (COLUMNS, COLUMNS + OPTIONAL_COLUMNS):
            raise DatasetError(f"{path}:1: unexpected header {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            where = f"{path}:{lineno}"
            if len(row) != len(header):
                raise DatasetError(f"{where}: expected {len(header)} fields, got {len(row)}")
            rec = dict(zip(header, (c.strip() for c in row)))
            if not rec["source"] or not rec["technology"]:
                raise DatasetError(f"{where}: source and technology are required")
            year = rec["end_year"]
            if year in ("", "—"):
                end_year = None
            else:
                try:
                    end_year = int(year)
                except ValueError:
                    raise DatasetError(f"{where}: bad end_year {year!r}") from None
            lbd = _parse_rate(rec["lbd_percent"], where, "lbd_percent")
            if lbd is None:
                raise DatasetError(f"{where}: lbd_percent is required")
            records.append(
                RateRecord(
                    source=rec["source"],
                    technology=rec["technology"],
                    cost_metric=rec["cost_metric"],
                    experience_metric=rec["experience_metric"],
                    region="" if rec["region"] == "—" else rec["region"],
                    end_year=end_year,
                    lbd=lbd,
                    lbr=_parse_rate(rec["lbr_percent"], where, "lbr_percent"),
                    note=rec.get("note", ""),
                    table=table,
                )
            )
    return records


def data_dir() -> Path:
    env = os.environ.get("LEARNCURVE_DATA_DIR")
    if env:
        return Path(env)
    return Path(str(resources.files("learncurve") / "data"))


def table_path(table: str) -> Path:
    table = table.lower()
    if table not in ALL_TABLES:
        raise DatasetError(f"unknown table {table!r}; expected one of {', '.join(ALL_TABLES)}")
    name = "text_rates.csv" if table == TEXT_TABLE else f"table_{table}.csv"
    return data_dir() / name


def load_packaged(tables: Sequence[str] = ALL_TABLES) -> list[RateRecord]:
    records = []
    for t in tables:
        records.extend(load_records(table_path(t), table=t.lower()))
    return records


def query(
    records: Iterable[RateRecord],
    predicate: Callable[[RateRecord], bool] | None = None,
    *,
    technology: str | None = None,
    family: str | None = None,
    region: str | None = None,
    source: str | None = None,
    min_year: int | None = None,
    max_year: int | None = None,
) -> list[RateRecord]:
    """Order-preserving subset. Year bounds drop records without an end year."""
    out = []
    for r in records:
        if technology is not None and r.technology != technology:
            continue
        if family is not None and r.family != family:
            continue
        if region is not None and r.region.lower() != region.lower():
            continue
        if source is not None and source.lower() not in r.source.lower():
            continue
        if min_year is not None and (r.end_year is None or r.end_year < min_year):
            continue
        if max_year is not None and (r.end_year is None or r.end_year > max_year):
            continue
        if predicate is not None and not predicate(r):
            continue
        out.append(r)
    return out


@dataclass(frozen=True)
class BoxStats:
    n: int
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]


def _median(v: Sequence[float]) -> float:
    n = len(v)
    mid = n // 2
    if n % 2:
        return v[mid]
    return (v[mid - 1] + v[mid]) / 2.0


def box_stats(values: Iterable[float]) -> BoxStats:
    """Tukey-hinge box plot statistics with 1.5 IQR whiskers.

    For odd counts the median belongs to both halves.
    """
    v = sorted(float(x) for x in values)
    n = len(v)
    if n == 0:
        raise ValueError("box_stats needs at least one value")
    if any(math.isnan(x) for x in v):
        raise ValueError("box_stats got NaN")
    half = (n + 1) // 2
    q1 = _median(v[:half])
    q3 = _median(v[n - half:])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - WHISKER * iqr, q3 + WHISKER * iqr
    inside = [x for x in v if lo_fence <= x <= hi_fence]
    return BoxStats(
        n=n,
        median=_median(v),
        q1=q1,
        q3=q3,
        whisker_low=inside[0],
        whisker_high=inside[-1],
        outliers=tuple(x for x in v if x < lo_fence or x > hi_fence),
    )


def group_stats(records: Iterable[RateRecord], by: str = "technology") -> dict[str, BoxStats]:
    """Box statistics of learning-by-doing rates per group, groups sorted by key."""
    groups: dict[str, list[float]] = {}
    for r in records:
        key = r.family if by == "family" else getattr(r, by)
        groups.setdefault(str(key), []).append(r.lbd)
    return {k: box_stats(groups[k]) for k in sorted(groups)}

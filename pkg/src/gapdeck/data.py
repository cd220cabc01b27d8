"""Microdata model: seeker/posting records, validated ingestion, log-wage outcome.

Input files are UTF-8 comma-delimited with a header. Seekers carry
``id,gender,age,month,region,occupation,desired_wage`` (gender ``M``/``F`` or
``0``/``1``, empty occupation = none reported, desired_wage in units of 1,000
yen); postings carry ``id,region,occupation,wage_lower,wage_upper`` in yen.
Rows violating the record invariants are dropped and counted per column.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field


class DataError(Exception):
    """An input file cannot be ingested (unreadable, bad header, no valid rows)."""


SEEKER_COLUMNS = ("id", "gender", "age", "month", "region", "occupation", "desired_wage")
POSTING_COLUMNS = ("id", "region", "occupation", "wage_lower", "wage_upper")

_GENDER_CODES = {"F": 1, "f": 1, "1": 1, "M": 0, "m": 0, "0": 0}


@dataclass(frozen=True)
class SeekerRecord:
    """One registered job seeker."""

    id: str
    gender: int  # 1 = female, 0 = male
    age: int  # integer years, >= 15
    month: int  # registration month, 1..12
    region: int  # prefecture code, 1..47
    occupation: str | None  # None = no desired occupation reported
    desired_wage: float  # desired monthly amount, units of 1,000 yen (lower bound)


@dataclass(frozen=True)
class PostingRecord:
    """One vacancy posting."""

    id: str
    region: int
    occupation: str
    wage_lower: float  # monthly yen, 0 < lower <= upper
    wage_upper: float


@dataclass(frozen=True)
class Outcome:
    """Log desired monthly wage in yen."""

    y: float


@dataclass
class IngestReport:
    """Row accounting for one ingested file: valid + dropped = total."""

    n_rows: int = 0
    n_valid: int = 0
    drops: dict[str, int] = field(default_factory=dict)

    def record_drop(self, reason: str) -> None:
        self.drops[reason] = self.drops.get(reason, 0) + 1

    @property
    def n_dropped(self) -> int:
        return sum(self.drops.values())

    def to_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "n_valid": self.n_valid,
            "n_dropped": self.n_dropped,
            "drops": dict(sorted(self.drops.items())),
        }


def outcome(record: SeekerRecord) -> Outcome:
    """y = ln(1000 * desired_wage): log of the desired monthly wage in yen."""
    return Outcome(y=math.log(1000.0 * record.desired_wage))


def _open_rows(path: str, schema: dict[str, str] | None, required: tuple[str, ...]):
    """Yield per-row dicts keyed by canonical column name.

    ``schema`` remaps canonical names to actual file column names.
    """
    schema = schema or {}
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header required")
        index: dict[str, int] = {}
        missing = []
        for name in required:
            actual = schema.get(name, name)
            if actual not in header:
                missing.append(actual)
            else:
                index[name] = header.index(actual)
        if missing:
            raise DataError(
                f"{path}: missing mandatory column(s) {', '.join(repr(m) for m in missing)}"
            )
        width = max(index.values()) + 1
        rows = []
        for raw in reader:
            if len(raw) < width:
                rows.append(None)  # malformed, too few fields
            else:
                rows.append(tuple(raw[index[name]] for name in required))
    return rows


def _parse_int(text: str) -> int | None:
    try:
        return int(text.strip())
    except ValueError:
        return None


def _parse_float(text: str) -> float | None:
    try:
        value = float(text.strip())
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_seekers(
    path: str, schema: dict[str, str] | None = None
) -> tuple[list[SeekerRecord], IngestReport]:
    """Read and validate a seekers file.

    Returns the retained records in file order plus an IngestReport counting
    dropped rows by the first violated column. Rows with an empty occupation
    field are retained with occupation=None.
    """
    report = IngestReport()
    records: list[SeekerRecord] = []
    for row in _open_rows(path, schema, SEEKER_COLUMNS):
        report.n_rows += 1
        if row is None:
            report.record_drop("malformed")
            continue
        rid, gender_s, age_s, month_s, region_s, occ_s, wage_s = row
        gender = _GENDER_CODES.get(gender_s.strip())
        if gender is None:
            report.record_drop("gender")
            continue
        age = _parse_int(age_s)
        if age is None or age < 15:
            report.record_drop("age")
            continue
        month = _parse_int(month_s)
        if month is None or not 1 <= month <= 12:
            report.record_drop("month")
            continue
        region = _parse_int(region_s)
        if region is None or not 1 <= region <= 47:
            report.record_drop("region")
            continue
        wage = _parse_float(wage_s)
        if wage is None or wage <= 0:
            report.record_drop("desired_wage")
            continue
        occ = occ_s.strip()
        records.append(
            SeekerRecord(
                id=rid.strip(),
                gender=gender,
                age=age,
                month=month,
                region=region,
                occupation=occ if occ else None,
                desired_wage=wage,
            )
        )
        report.n_valid += 1
    if report.n_valid == 0:
        raise DataError(f"{path}: zero valid rows")
    return records, report


def load_postings(
    path: str, schema: dict[str, str] | None = None
) -> tuple[list[PostingRecord], IngestReport]:
    """Read and validate a postings file. Same accounting as load_seekers."""
    report = IngestReport()
    records: list[PostingRecord] = []
    for row in _open_rows(path, schema, POSTING_COLUMNS):
        report.n_rows += 1
        if row is None:
            report.record_drop("malformed")
            continue
        rid, region_s, occ_s, lower_s, upper_s = row
        region = _parse_int(region_s)
        if region is None:
            report.record_drop("region")
            continue
        occ = occ_s.strip()
        if not occ:
            report.record_drop("occupation")
            continue
        lower = _parse_float(lower_s)
        if lower is None or lower <= 0:
            report.record_drop("wage_lower")
            continue
        upper = _parse_float(upper_s)
        if upper is None:
            report.record_drop("wage_upper")
            continue
        if lower > upper:
            report.record_drop("wage_order")
            continue
        records.append(
            PostingRecord(
                id=rid.strip(), region=region, occupation=occ,
                wage_lower=lower, wage_upper=upper,
            )
        )
        report.n_valid += 1
    if report.n_valid == 0:
        raise DataError(f"{path}: zero valid rows")
    return records, report

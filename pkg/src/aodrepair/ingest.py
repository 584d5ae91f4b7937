"""CSV loading, value preprocessing and the Z-score outlier filter.

All arithmetic on raw cells is exact: numbers are parsed as ``Fraction`` so
that truncation, binning and scaling never suffer from float rounding.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InvalidParams, MissingColumn, NonIntegralValue, ParseError
from .relmodel import Relation, Row


@dataclass(frozen=True)
class ZScoreConfig:
    tau: float
    scope: str = "global"

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidParams("tau must be positive")
        if self.scope not in ("global", "per_group"):
            raise InvalidParams("scope must be 'global' or 'per_group'")


@dataclass(frozen=True)
class IngestConfig:
    group_column: str
    agg_column: str
    group_bin_width: object = None
    agg_bin_width: object = None
    agg_truncate_cap: object = None
    agg_scale_factor: int = 1
    zscore: ZScoreConfig | None = None
    strict: bool = True

    def __post_init__(self):
        if int(self.agg_scale_factor) != self.agg_scale_factor or self.agg_scale_factor < 1:
            raise InvalidParams("scale factor must be an integer >= 1")
        for w in (self.group_bin_width, self.agg_bin_width):
            if w is not None and not Fraction(str(w)) > 0:
                raise InvalidParams("bin widths must be positive")


@dataclass
class IngestReport:
    header: list
    raw_rows: dict  # tuple id -> original cells
    dropped: list = field(default_factory=list)  # (row number, column, raw text)
    zscore_removed: list = field(default_factory=list)

    @property
    def dropped_count(self) -> int:
        return len(self.dropped)


def _parse(raw: str, row: int, column: str) -> Fraction:
    text = raw.strip()
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ParseError(row, column, raw) from None
    return value


def _as_int(value: Fraction, row, column, raw) -> int:
    if value.denominator != 1:
        raise NonIntegralValue(row, column, raw)
    return value.numerator


def transform_group(value: Fraction, cfg: IngestConfig, row=0, raw="") -> int:
    if cfg.group_bin_width is not None:
        return math.floor(value / Fraction(str(cfg.group_bin_width)))
    return _as_int(value, row, cfg.group_column, raw)


def transform_agg(value: Fraction, cfg: IngestConfig, row=0, raw="") -> int:
    """Truncate, then bin, then scale; the result must be an integer."""
    if cfg.agg_truncate_cap is not None:
        value = min(value, Fraction(str(cfg.agg_truncate_cap)))
    if cfg.agg_bin_width is not None:
        value = Fraction(math.floor(value / Fraction(str(cfg.agg_bin_width))))
    scaled = value * cfg.agg_scale_factor
    if scaled.denominator != 1:
        if cfg.agg_scale_factor == 1:
            raise NonIntegralValue(row, cfg.agg_column, raw)
        return round(scaled)
    return scaled.numerator


def load_csv(path, config: IngestConfig):
    """Read ``path`` into a relation; a tuple's id is its 0-based data row index."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn(f"{path} has no header row") from None
        header = [h.strip() for h in header]
        for col in (config.group_column, config.agg_column):
            if col not in header:
                raise MissingColumn(f"column {col!r} not in header {header}")
        gi = header.index(config.group_column)
        ai = header.index(config.agg_column)
        rows = []
        report = IngestReport(header, {})
        for number, cells in enumerate(reader, start=1):
            if not cells or all(not c.strip() for c in cells):
                continue
            try:
                if max(gi, ai) >= len(cells):
                    col = config.group_column if gi >= len(cells) else config.agg_column
                    raise ParseError(number, col, "")
                graw, araw = cells[gi], cells[ai]
                g = transform_group(_parse(graw, number, config.group_column), config, number, graw)
                a = transform_agg(_parse(araw, number, config.agg_column), config, number, araw)
            except ParseError as err:
                if config.strict:
                    raise
                report.dropped.append((err.row, err.column, err.raw))
                continue
            rows.append(Row(number - 1, g, a))
            report.raw_rows[number - 1] = cells
    relation = Relation(rows)
    if config.zscore is not None:
        relation, removed = zscore_filter(relation, config.zscore.tau, config.zscore.scope)
        report.zscore_removed = removed
    return relation, report


def _outliers(rows, tau) -> list:
    n = len(rows)
    if not n:
        return []
    mean = Fraction(sum(r.a for r in rows), n)
    var = sum((r.a - mean) ** 2 for r in rows) / n
    if var == 0:
        return []
    tau2 = Fraction(str(tau)) ** 2
    return [r.id for r in rows if (r.a - mean) ** 2 > tau2 * var]


def zscore_filter(relation: Relation, tau, scope: str = "global"):
    """Remove tuples more than ``tau`` population standard deviations from the mean.

    Returns the filtered relation and the sorted removed ids. One pass only.
    """
    ZScoreConfig(tau, scope)
    if scope == "global":
        removed = _outliers(relation.rows, tau)
    else:
        removed = []
        for grp in relation.groups:
            removed.extend(_outliers(grp.rows, tau))
    removed = sorted(removed)
    return relation.without(removed), removed

"""Detect and repair aggregate order dependencies by deleting tuples."""

from .aggpack import PackTable, pack_table, wholepack_avg, wholepack_median, wholepack_naive, wholepack_sum
from .cardrepair import RepairOptions, card_repair
from .errors import AODError
from .estimators import AODRepair, ZScoreFilter
from .heurrepair import heur_repair
from .ingest import IngestConfig, load_csv, zscore_filter
from .relmodel import AggValue, Alpha, Aod, Direction, Relation, Row, check_aod, evaluate_aggregate, satisfies
from .result import RepairResult
from .testkit import GenParams, brute_force_repair, generate

__all__ = [
    "AODError",
    "AODRepair",
    "AggValue",
    "Alpha",
    "Aod",
    "Direction",
    "GenParams",
    "IngestConfig",
    "PackTable",
    "Relation",
    "RepairOptions",
    "RepairResult",
    "Row",
    "ZScoreFilter",
    "brute_force_repair",
    "card_repair",
    "check_aod",
    "evaluate_aggregate",
    "generate",
    "heur_repair",
    "load_csv",
    "pack_table",
    "satisfies",
    "wholepack_avg",
    "wholepack_median",
    "wholepack_naive",
    "wholepack_sum",
    "zscore_filter",
]

"""Scenario configuration, the 118-bus generator, run records, and the CLI."""

from .ieee118 import gen_ieee118
from .records import RunRecord, emit_csv, emit_svg, parse_csv
from .scenario import Scenario, load_scenario, save_scenario

__all__ = [
    "RunRecord",
    "Scenario",
    "emit_csv",
    "emit_svg",
    "gen_ieee118",
    "load_scenario",
    "parse_csv",
    "save_scenario",
]

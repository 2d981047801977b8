"""LDPC-coded MIMO iterative detection and decoding simulator."""

from .decoder import SCHEDULES, DecodeResult, decode, edge_update_cost
from .detector import detect_frame
from .harness import Scenario, SimRecord, StopRule, emit_csv, parse_csv, run_sweep, snr_at_ber
from .idd import IddConfig, run_idd
from .ldpc import CodeSpec, TannerGraph, build_code, encode
from .llrcomp import compensate, compensate_wcnc

__all__ = [
    "SCHEDULES", "CodeSpec", "DecodeResult", "IddConfig", "Scenario", "SimRecord", "StopRule",
    "TannerGraph", "build_code", "compensate", "compensate_wcnc", "decode", "detect_frame",
    "edge_update_cost", "emit_csv", "encode", "parse_csv", "run_idd", "run_sweep", "snr_at_ber",
]

"""Unit conversions used by configs and reports."""

from __future__ import annotations

import math


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        raise ValueError(f"Power must be positive to express in dBm: {watts}")
    return 10.0 * math.log10(watts) + 30.0

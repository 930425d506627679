"""JSON and CSV renderings of an SCA trace."""

from __future__ import annotations

import csv
import io
import json
from typing import Any, Dict

from .sca import Trace

TRACE_FORMAT = "wpfl-trace"
TRACE_VERSION = 1
CSV_COLUMNS = ("iteration", "objective", "eta", "tau_h", "tau_s", "tau_l", "tau_c", "accepted")


def trace_to_dict(trace: Trace) -> Dict[str, Any]:
    return {
        "format": TRACE_FORMAT,
        "version": TRACE_VERSION,
        "summary": trace.summary(),
        "initial_allocation": trace.initial_allocation.to_dict(),
        "iterations": [
            dict(record.summary(), allocation=record.allocation.to_dict()) for record in trace.records
        ],
    }


def trace_to_json(trace: Trace) -> str:
    return json.dumps(trace_to_dict(trace), indent=2, sort_keys=True, allow_nan=True) + "\n"


def trace_to_csv(trace: Trace) -> str:
    """One row per iterate, row 0 being the feasible start."""

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    rows = [(0, trace.initial_objective, trace.initial_allocation, True)]
    rows += [(r.iteration, r.objective, r.allocation, r.accepted) for r in trace.records]
    for iteration, objective, alloc, accepted in rows:
        writer.writerow(
            (
                iteration,
                repr(objective),
                repr(alloc.eta),
                repr(alloc.tau_h),
                repr(alloc.tau_s),
                repr(alloc.tau_l),
                repr(alloc.tau_c),
                int(accepted),
            )
        )
    return buffer.getvalue()

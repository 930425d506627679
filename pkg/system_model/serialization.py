"""Versioned JSON documents for problem instances."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict

from .errors import ModelError
from .models import DeviceParams, LearningParams, ProblemInstance, SystemParams

INSTANCE_FORMAT = "wpfl-instance"
INSTANCE_VERSION = 1


def instance_to_dict(instance: ProblemInstance) -> Dict[str, Any]:
    return {
        "format": INSTANCE_FORMAT,
        "version": INSTANCE_VERSION,
        "seed": instance.seed,
        "system": instance.system.to_dict(),
        "learning": instance.learning.to_dict(),
        "devices": [device.to_dict() for device in instance.devices],
    }


def instance_from_dict(data: Dict[str, Any]) -> ProblemInstance:
    if data.get("format") != INSTANCE_FORMAT:
        raise ModelError(f"Not an instance document: format={data.get('format')!r}")
    if data.get("version") != INSTANCE_VERSION:
        raise ModelError(f"Unsupported instance version {data.get('version')!r}")
    system_data = dict(data["system"])
    if system_data.get("energy_cap") is None:
        system_data["energy_cap"] = math.inf
    return ProblemInstance(
        system=SystemParams(**system_data),
        learning=LearningParams(**data["learning"]),
        devices=tuple(DeviceParams(**device) for device in data["devices"]),
        seed=data.get("seed"),
    )


def instance_to_json(instance: ProblemInstance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2, sort_keys=True) + "\n"


def instance_from_json(text: str) -> ProblemInstance:
    return instance_from_dict(json.loads(text))


def load_instance(path: Path) -> ProblemInstance:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelError(f"Unable to read instance file {path}: {exc}") from exc
    try:
        return instance_from_json(text)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ModelError(f"Malformed instance file {path}: {exc}") from exc

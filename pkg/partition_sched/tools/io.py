import json
from pathlib import Path

import yaml
from pydantic import BaseModel

from partition_sched.models import GadgetInstance, Instance, Schedule, SweepSpec
from partition_sched.tools.rational import format_rational


def to_json(model: BaseModel) -> str:
    """Deterministic JSON text: aliases, sorted keys, integral rationals as ints, others as ``[num, den]``."""
    data = model.model_dump(mode="json", by_alias=True, exclude_none=True)
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_instance(path, inst: Instance) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(inst))
    return path


def read_instance(path) -> Instance:
    return Instance.model_validate_json(Path(path).read_text())


def write_schedule(path, sched: Schedule) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(sched))
    return path


def read_schedule(path) -> Schedule:
    return Schedule.model_validate_json(Path(path).read_text())


def metadata(gadget: GadgetInstance) -> dict:
    """The sidecar block of a generated instance: kind, threshold, provenance."""
    return {
        "kind": gadget.kind.value,
        "threshold": None if gadget.threshold is None else format_rational(gadget.threshold),
        "provenance": gadget.provenance,
    }


def write_metadata(path, gadget: GadgetInstance) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(metadata(gadget), f, sort_keys=True)
    return path


def read_metadata(path) -> dict:
    with open(path) as f:
        return yaml.safe_load(f)


def read_sweep(path) -> SweepSpec:
    """Load a YAML benchmark sweep file."""
    with open(path) as f:
        return SweepSpec.model_validate(yaml.safe_load(f) or {})

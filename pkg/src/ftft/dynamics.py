"""Training-dynamics data model and the "ftft-dyn-1" wire format.

A dynamics file is line-delimited UTF-8 JSON: the first line is a header
object, every following line is one per-instance record carrying the
true-class probability at each checkpoint.  The format is the contract
between any trainer (the built-in toy trainer or an external exporter)
and the map-building code, so parsing is strict: a file that violates an
invariant is rejected with a diagnostic naming the offending line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Iterable

SCHEMA_VERSION = "ftft-dyn-1"


class DynamicsError(ValueError):
    """Raised for any malformed or invariant-violating dynamics input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class DynamicsRecord:
    """One training instance: id, gold class index, p_true per checkpoint."""

    id: int
    gold: int
    p_true: tuple[float, ...]


@dataclass(frozen=True)
class DynamicsHeader:
    """First line of a dynamics file."""

    schema_version: str
    run_id: str
    model_name: str
    num_params: int
    dataset_name: str
    num_instances: int
    num_checkpoints: int


@dataclass(frozen=True)
class TrainingDynamics:
    """Per-instance true-class probability series for one training run.

    Immutable once constructed; instances are safe to share between
    threads.  ``num_checkpoints`` must be at least 2 (a spread over a
    single observation is meaningless) and every probability must be a
    finite value in [0, 1].
    """

    run_id: str
    model_name: str
    num_params: int
    dataset_name: str
    num_checkpoints: int
    records: tuple[DynamicsRecord, ...]

    def __post_init__(self):
        if self.num_params < 1:
            raise DynamicsError(f"num_params must be positive, got {self.num_params}")
        if self.num_checkpoints < 2:
            raise DynamicsError(
                f"num_checkpoints must be >= 2, got {self.num_checkpoints}"
            )
        seen: set[int] = set()
        for rec in self.records:
            if rec.id < 0:
                raise DynamicsError(f"negative instance id {rec.id}")
            if rec.id in seen:
                raise DynamicsError(f"duplicate instance id {rec.id}")
            seen.add(rec.id)
            if len(rec.p_true) != self.num_checkpoints:
                raise DynamicsError(
                    f"instance {rec.id}: p_true length {len(rec.p_true)} "
                    f"!= num_checkpoints {self.num_checkpoints}"
                )
            for p in rec.p_true:
                if not math.isfinite(p) or p < 0.0 or p > 1.0:
                    raise DynamicsError(
                        f"instance {rec.id}: probability out of range: {p!r}"
                    )

    @property
    def num_instances(self) -> int:
        return len(self.records)

    def instance_ids(self) -> frozenset[int]:
        return frozenset(r.id for r in self.records)


def _require(obj: dict, key: str, kind: type, line: int):
    if key not in obj:
        raise DynamicsError(f"missing key {key!r}", line)
    value = obj[key]
    if kind is int:
        # bool is an int subclass; reject it explicitly
        if isinstance(value, bool) or not isinstance(value, int):
            raise DynamicsError(f"key {key!r} must be an integer, got {value!r}", line)
    elif kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DynamicsError(f"key {key!r} must be a number, got {value!r}", line)
        value = float(value)
    elif not isinstance(value, kind):
        raise DynamicsError(
            f"key {key!r} must be {kind.__name__}, got {value!r}", line
        )
    return value


def parse_dynamics(stream: IO[bytes]) -> TrainingDynamics:
    """Parse an "ftft-dyn-1" byte stream into a validated TrainingDynamics.

    Unknown extra keys are ignored.  Raises DynamicsError on the first
    malformed line, duplicate id, out-of-range probability, or any
    header/record mismatch.
    """
    lines = iter(enumerate(stream, start=1))
    try:
        lineno, raw = next(lines)
    except StopIteration:
        raise DynamicsError("empty stream, expected header line") from None
    header = _parse_header(raw, lineno)

    records: list[DynamicsRecord] = []
    seen: set[int] = set()
    for lineno, raw in lines:
        if not raw.strip():
            continue
        obj = _load_json_line(raw, lineno)
        inst_id = _require(obj, "id", int, lineno)
        gold = _require(obj, "gold", int, lineno)
        if inst_id < 0:
            raise DynamicsError(f"negative instance id {inst_id}", lineno)
        if inst_id in seen:
            raise DynamicsError(f"duplicate instance id {inst_id}", lineno)
        seen.add(inst_id)
        if "p_true" not in obj or not isinstance(obj["p_true"], list):
            raise DynamicsError("key 'p_true' must be an array", lineno)
        probs: list[float] = []
        for p in obj["p_true"]:
            if isinstance(p, bool) or not isinstance(p, (int, float)):
                raise DynamicsError(f"probability must be a number, got {p!r}", lineno)
            p = float(p)
            if not math.isfinite(p) or p < 0.0 or p > 1.0:
                raise DynamicsError(f"probability out of range: {p!r}", lineno)
            probs.append(p)
        if len(probs) != header.num_checkpoints:
            raise DynamicsError(
                f"p_true length {len(probs)} != header num_checkpoints "
                f"{header.num_checkpoints}",
                lineno,
            )
        records.append(DynamicsRecord(inst_id, gold, tuple(probs)))

    if len(records) != header.num_instances:
        raise DynamicsError(
            f"header declares {header.num_instances} instances, found {len(records)}"
        )
    return TrainingDynamics(
        run_id=header.run_id,
        model_name=header.model_name,
        num_params=header.num_params,
        dataset_name=header.dataset_name,
        num_checkpoints=header.num_checkpoints,
        records=tuple(records),
    )


def _load_json_line(raw: bytes, lineno: int) -> dict:
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DynamicsError(f"malformed line: {exc}", lineno) from None
    if not isinstance(obj, dict):
        raise DynamicsError("expected a JSON object", lineno)
    return obj


def _parse_header(raw: bytes, lineno: int) -> DynamicsHeader:
    obj = _load_json_line(raw, lineno)
    version = _require(obj, "schema_version", str, lineno)
    if version != SCHEMA_VERSION:
        raise DynamicsError(f"unknown schema_version {version!r}", lineno)
    header = DynamicsHeader(
        schema_version=version,
        run_id=_require(obj, "run_id", str, lineno),
        model_name=_require(obj, "model_name", str, lineno),
        num_params=_require(obj, "num_params", int, lineno),
        dataset_name=_require(obj, "dataset_name", str, lineno),
        num_instances=_require(obj, "num_instances", int, lineno),
        num_checkpoints=_require(obj, "num_checkpoints", int, lineno),
    )
    if header.num_params < 1:
        raise DynamicsError(f"num_params must be positive, got {header.num_params}", lineno)
    if header.num_checkpoints < 2:
        raise DynamicsError(
            f"num_checkpoints must be >= 2, got {header.num_checkpoints}", lineno
        )
    if header.num_instances < 0:
        raise DynamicsError(
            f"num_instances must be >= 0, got {header.num_instances}", lineno
        )
    return header


def write_dynamics(dynamics: TrainingDynamics, sink: IO[bytes]) -> None:
    """Emit ``dynamics`` in "ftft-dyn-1"; output re-parses to an equal value.

    Floats are serialized with Python's shortest round-tripping repr, so
    probabilities survive a write/parse cycle bit-exactly.
    """
    for chunk in iter_dynamics_lines(dynamics):
        sink.write(chunk)


def iter_dynamics_lines(dynamics: TrainingDynamics) -> Iterable[bytes]:
    header = {
        "schema_version": SCHEMA_VERSION,
        "run_id": dynamics.run_id,
        "model_name": dynamics.model_name,
        "num_params": dynamics.num_params,
        "dataset_name": dynamics.dataset_name,
        "num_instances": dynamics.num_instances,
        "num_checkpoints": dynamics.num_checkpoints,
    }
    yield _dump_line(header)
    for rec in dynamics.records:
        yield _dump_line({"id": rec.id, "gold": rec.gold, "p_true": list(rec.p_true)})


def _dump_line(obj: dict) -> bytes:
    return (json.dumps(obj, separators=(",", ":"), ensure_ascii=False) + "\n").encode(
        "utf-8"
    )


def load_dynamics(path) -> TrainingDynamics:
    with open(path, "rb") as fh:
        return parse_dynamics(fh)


def save_dynamics(dynamics: TrainingDynamics, path) -> None:
    with open(path, "wb") as fh:
        write_dynamics(dynamics, fh)

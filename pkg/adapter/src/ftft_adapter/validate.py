"""Standalone checker for ``ftft-dyn-1`` files.

Deliberately re-implements the format rules instead of importing any
consumer library: a recording host can verify its exports with nothing
but this package installed.  Exit 0 when the file is valid, 1 when it is
not (reason on stderr).
"""

import argparse
import json
import math
import sys

SCHEMA_VERSION = "ftft-dyn-1"

HEADER_KEYS = (
    ("schema_version", str),
    ("run_id", str),
    ("model_name", str),
    ("num_params", int),
    ("dataset_name", str),
    ("num_instances", int),
    ("num_checkpoints", int),
)


class ValidationError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _object(raw, lineno):
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"malformed line: {exc}", lineno) from None
    if not isinstance(obj, dict):
        raise ValidationError("expected a JSON object", lineno)
    return obj


def _typed(obj, key, kind, lineno):
    if key not in obj:
        raise ValidationError(f"missing key {key!r}", lineno)
    value = obj[key]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"key {key!r} must be an integer", lineno)
    elif not isinstance(value, kind):
        raise ValidationError(f"key {key!r} must be {kind.__name__}", lineno)
    return value


def validate_stream(stream):
    """Check one byte stream; returns (num_instances, num_checkpoints)."""
    lines = iter(enumerate(stream, start=1))
    try:
        lineno, raw = next(lines)
    except StopIteration:
        raise ValidationError("empty file, expected header line") from None
    header = _object(raw, lineno)
    fields = {key: _typed(header, key, kind, lineno) for key, kind in HEADER_KEYS}
    if fields["schema_version"] != SCHEMA_VERSION:
        raise ValidationError(
            f"unknown schema_version {fields['schema_version']!r}", lineno
        )
    if fields["num_params"] < 1:
        raise ValidationError("num_params must be positive", lineno)
    if fields["num_checkpoints"] < 2:
        raise ValidationError("num_checkpoints must be >= 2", lineno)
    if fields["num_instances"] < 0:
        raise ValidationError("num_instances must be >= 0", lineno)

    seen = set()
    count = 0
    for lineno, raw in lines:
        if not raw.strip():
            continue
        rec = _object(raw, lineno)
        inst_id = _typed(rec, "id", int, lineno)
        _typed(rec, "gold", int, lineno)
        if inst_id < 0:
            raise ValidationError(f"negative instance id {inst_id}", lineno)
        if inst_id in seen:
            raise ValidationError(f"duplicate instance id {inst_id}", lineno)
        seen.add(inst_id)
        probs = rec.get("p_true")
        if not isinstance(probs, list):
            raise ValidationError("key 'p_true' must be an array", lineno)
        if len(probs) != fields["num_checkpoints"]:
            raise ValidationError(
                f"p_true length {len(probs)} != num_checkpoints"
                f" {fields['num_checkpoints']}",
                lineno,
            )
        for p in probs:
            if isinstance(p, bool) or not isinstance(p, (int, float)):
                raise ValidationError(f"probability must be a number, got {p!r}", lineno)
            if not math.isfinite(float(p)) or not 0.0 <= float(p) <= 1.0:
                raise ValidationError(f"probability out of range: {p!r}", lineno)
        count += 1
    if count != fields["num_instances"]:
        raise ValidationError(
            f"header declares {fields['num_instances']} instances, found {count}"
        )
    return fields["num_instances"], fields["num_checkpoints"]


def main(argv=None):
    ap = argparse.ArgumentParser(
        description="validate a dynamics file against the ftft-dyn-1 format"
    )
    ap.add_argument("path")
    args = ap.parse_args(argv)
    try:
        with open(args.path, "rb") as fh:
            num_instances, num_checkpoints = validate_stream(fh)
    except (OSError, ValidationError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    print(f"ok: {num_instances} instances x {num_checkpoints} checkpoints")
    return 0


if __name__ == "__main__":
    sys.exit(main())

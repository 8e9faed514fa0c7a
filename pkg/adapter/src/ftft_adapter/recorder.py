"""Checkpoint-boundary recorder for per-instance true-class probabilities.

The host training loop owns everything model- and data-shaped: it decides
what a checkpoint is, computes p_true for every training instance, and
hands the full mapping to ``record_checkpoint``.  This module only
accumulates and, at the end, writes a valid ``ftft-dyn-1`` file.  Floats
go out through ``repr`` (the json default), so the consumer reads back
bit-exactly what the host computed.

Single-threaded by design; the host loop serializes calls.
"""

import json
import math

SCHEMA_VERSION = "ftft-dyn-1"


class RecorderError(ValueError):
    pass


def _check_probability(inst_id, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise RecorderError(
            f"instance {inst_id}: probability must be a number, got {value!r}"
        )
    p = float(value)
    if not math.isfinite(p) or p < 0.0 or p > 1.0:
        raise RecorderError(f"instance {inst_id}: probability out of range: {p!r}")
    return p


class DynamicsRecorder:
    """Accumulates one p_true per instance per checkpoint, then writes once.

    The first ``record_checkpoint`` call pins the instance id set; every
    later call must cover exactly the same ids.  ``finalize`` refuses to
    write until all declared checkpoints are in, and the recorder is
    dead afterwards.  ``gold`` optionally maps instance ids to their
    class index for the record's gold column; ids without an entry get
    0.  Map building never reads that column, so hosts that don't track
    labels can ignore it.
    """

    def __init__(
        self,
        run_id,
        model_name,
        num_params,
        dataset_name,
        num_checkpoints,
        gold=None,
    ):
        for label, value in (
            ("run_id", run_id),
            ("model_name", model_name),
            ("dataset_name", dataset_name),
        ):
            if not isinstance(value, str) or not value:
                raise RecorderError(f"{label} must be a nonempty string, got {value!r}")
        if isinstance(num_params, bool) or not isinstance(num_params, int) or num_params < 1:
            raise RecorderError(f"num_params must be a positive integer, got {num_params!r}")
        if (
            isinstance(num_checkpoints, bool)
            or not isinstance(num_checkpoints, int)
            or num_checkpoints < 2
        ):
            raise RecorderError(
                f"num_checkpoints must be an integer >= 2, got {num_checkpoints!r}"
            )
        self.run_id = run_id
        self.model_name = model_name
        self.num_params = num_params
        self.dataset_name = dataset_name
        self.num_checkpoints = num_checkpoints
        self._gold = {} if gold is None else dict(gold)
        for inst_id, cls in self._gold.items():
            if isinstance(cls, bool) or not isinstance(cls, int):
                raise RecorderError(
                    f"gold class for instance {inst_id} must be an integer, got {cls!r}"
                )
        self._ids = None  # pinned by the first checkpoint
        self._probs = {}  # id -> list of p_true, one per recorded checkpoint
        self._recorded = 0
        self._finalized = False

    @property
    def checkpoints_recorded(self):
        return self._recorded

    def record_checkpoint(self, probabilities):
        if self._finalized:
            raise RecorderError("already finalized")
        if self._recorded == self.num_checkpoints:
            raise RecorderError(
                f"all {self.num_checkpoints} declared checkpoints already recorded"
            )
        items = dict(probabilities)
        if not items:
            raise RecorderError("checkpoint carries no instances")
        for inst_id in items:
            if isinstance(inst_id, bool) or not isinstance(inst_id, int) or inst_id < 0:
                raise RecorderError(
                    f"instance ids must be nonnegative integers, got {inst_id!r}"
                )
        ids = frozenset(items)
        if self._ids is None:
            self._ids = ids
            self._probs = {i: [] for i in ids}
        else:
            missing = self._ids - ids
            if missing:
                raise RecorderError(f"instance {min(missing)} absent")
            extra = ids - self._ids
            if extra:
                raise RecorderError(
                    f"instance {min(extra)} not in the first checkpoint"
                )
        # validate the whole mapping before mutating anything
        checked = {i: _check_probability(i, items[i]) for i in items}
        for inst_id, p in checked.items():
            self._probs[inst_id].append(p)
        self._recorded += 1

    def finalize(self, path):
        if self._finalized:
            raise RecorderError("already finalized")
        if self._recorded != self.num_checkpoints:
            raise RecorderError(
                f"recorded {self._recorded} of {self.num_checkpoints} checkpoints"
            )
        header = {
            "schema_version": SCHEMA_VERSION,
            "run_id": self.run_id,
            "model_name": self.model_name,
            "num_params": self.num_params,
            "dataset_name": self.dataset_name,
            "num_instances": len(self._ids),
            "num_checkpoints": self.num_checkpoints,
        }
        with open(path, "wb") as fh:
            fh.write(_line(header))
            for inst_id in sorted(self._ids):
                fh.write(
                    _line(
                        {
                            "id": inst_id,
                            "gold": self._gold.get(inst_id, 0),
                            "p_true": self._probs[inst_id],
                        }
                    )
                )
        self._finalized = True


def _line(obj):
    return (json.dumps(obj, separators=(",", ":"), ensure_ascii=False) + "\n").encode(
        "utf-8"
    )

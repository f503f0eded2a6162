"""Sleep summary statistics derived from a hypnogram.

Sleep efficiency is time asleep over total recording time,
(N1+N2+N3+R) / (N1+N2+N3+R+W). The fragmentation index counts
transitions from any sleep stage into W or N1, per hour of sleep; this
definition is a documented stand-in (see the flag in the output) since
the index has no single standard formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .hypnogram import SLEEP_STAGES, STAGE_INDEX, STAGES, Hypnogram

FRAGMENTATION_DEFINITION = "sleep->(W|N1) transitions per hour of sleep"


@dataclass
class SleepReport:
    minutes_per_stage: dict
    sleep_efficiency: float
    fragmentation_index: float
    total_recording_min: float
    total_sleep_min: float
    no_sleep: bool = False  # fragmentation is 0 by convention when nothing was sleep
    fragmentation_definition: str = FRAGMENTATION_DEFINITION

    def as_dict(self) -> dict:
        return {
            "minutes_per_stage": dict(self.minutes_per_stage),
            "sleep_efficiency": self.sleep_efficiency,
            "fragmentation_index": self.fragmentation_index,
            "total_recording_min": self.total_recording_min,
            "total_sleep_min": self.total_sleep_min,
            "no_sleep": self.no_sleep,
            "fragmentation_definition": self.fragmentation_definition,
        }


def sleep_stats(h: Hypnogram) -> SleepReport:
    if len(h) == 0:
        raise DataError("cannot summarize an empty hypnogram")
    epoch_min = h.epoch_seconds / 60.0
    minutes = {}
    for s in STAGES:
        minutes[s] = float(np.count_nonzero(h.stages == STAGE_INDEX[s]) * epoch_min)
    total_min = len(h) * epoch_min
    sleep_min = sum(minutes[s] for s in SLEEP_STAGES)

    sleep_idx = np.array([STAGE_INDEX[s] for s in SLEEP_STAGES])
    is_sleep = np.isin(h.stages, sleep_idx)
    wake_or_n1 = (h.stages == STAGE_INDEX["W"]) | (h.stages == STAGE_INDEX["N1"])
    # A fragmentation event: epoch t is asleep, t+1 lands in W or N1 and
    # actually changes stage (N1 -> N1 is not a transition).
    changes = h.stages[1:] != h.stages[:-1]
    events = int(np.count_nonzero(is_sleep[:-1] & wake_or_n1[1:] & changes))

    sleep_hours = sleep_min / 60.0
    no_sleep = sleep_min == 0.0
    frag = 0.0 if no_sleep else events / sleep_hours

    return SleepReport(
        minutes_per_stage=minutes,
        sleep_efficiency=0.0 if total_min == 0 else sleep_min / total_min,
        fragmentation_index=frag,
        total_recording_min=total_min,
        total_sleep_min=sleep_min,
        no_sleep=no_sleep,
    )


def confidence_of(probs: np.ndarray) -> np.ndarray:
    """Per-epoch confidence = max class probability (in [0.2, 1] for 5 classes).

    Margin (top1 - top2) and normalized entropy are exposed as optional
    extras via confidence_extras.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[1] != len(STAGES):
        raise DataError(f"expected (n, 5) probability rows, got {probs.shape}")
    return probs.max(axis=1)


def confidence_extras(probs: np.ndarray) -> dict:
    probs = np.asarray(probs, dtype=np.float64)
    part = np.partition(probs, -2, axis=1)
    margin = part[:, -1] - part[:, -2]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(probs > 0, probs * np.log(probs), 0.0)
    entropy = -plogp.sum(axis=1) / np.log(probs.shape[1])
    return {"margin": margin, "normalized_entropy": entropy}

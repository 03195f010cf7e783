"""Ground-truth and detected-event record types shared by the generator,
the streaming classifier, and the evaluation harness."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class EventSpan:
    """A labelled time span in a recording. label is a gesture key such as
    '200to30' or an artifact tag such as 'chewing'."""

    onset_s: float
    offset_s: float
    label: str

    def __post_init__(self):
        if not self.offset_s > self.onset_s:
            raise ValueError(
                f"offset ({self.offset_s}) must exceed onset ({self.onset_s})"
            )

    @property
    def midpoint_s(self) -> float:
        return 0.5 * (self.onset_s + self.offset_s)


@dataclass(frozen=True)
class DetectedEvent:
    """One emitted detection: estimated gesture onset, label, majority-vote
    confidence, and the start time of the window that produced it."""

    timestamp_s: float
    label: str
    confidence: float
    window_start_s: float

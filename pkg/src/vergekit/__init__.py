"""vergekit: streaming two-channel EOG processing for depth-aware vergence
eye gestures, with a synthetic-signal oracle and an evaluation harness."""

__version__ = "0.1.0"

from .config import RunConfig, load_config
from .events import DetectedEvent, EventSpan
from .geometry import (
    EyeConfig,
    DepthLevel,
    GestureLabel,
    vergence_angle,
    angle_delta,
    stereo_disparity,
    effective_focal_length,
)
from .sigcond import Recording, FilterSpec, lowpass_zero_phase, notch, savgol, condition

__all__ = [
    "__version__",
    "EyeConfig",
    "DepthLevel",
    "GestureLabel",
    "vergence_angle",
    "angle_delta",
    "stereo_disparity",
    "effective_focal_length",
    "Recording",
    "FilterSpec",
    "lowpass_zero_phase",
    "notch",
    "savgol",
    "condition",
    "RunConfig",
    "load_config",
    "EventSpan",
    "DetectedEvent",
]
